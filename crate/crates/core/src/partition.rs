//! Equivalence partitions of a system's intervals.
//!
//! Two intervals are related when the closed bracket between their
//! midpoints passes a test: small residual set and finite scale mass (tight
//! and loose), or no mass of the trivial part of a generator scale (f-scale).
//! Intervals lying between related intervals are related to both, so every
//! class is a run of neighbours and only neighbours are compared.
//! Infinite generator families are first classified as one block or as a
//! family of singletons by rules on their generator.

use std::fmt;

use crate::error::{Error, Result};
use crate::family::{residual_set, FamilyKind, IntervalFamily, ResidualClass};
use crate::interval::{Interval, Window};
use crate::measure::{Density, Mask, MemberRule, Piece, ScaleMeasure};
use crate::real::ExtReal;

/// Which relation to partition by.
#[derive(Clone, Copy, Debug)]
pub enum RelationKind<'a> {
    Tight,
    Loose,
    /// Related when the bracket carries no mass of `trivial`.
    FScale { trivial: &'a ScaleMeasure },
}

impl RelationKind<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            RelationKind::Tight => "tight",
            RelationKind::Loose => "loose",
            RelationKind::FScale { .. } => "f-scale",
        }
    }
}

/// Part of a class: a single member or a whole family.
#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    Member { entry: usize, interval: Interval },
    Family { entry: usize, family: IntervalFamily },
}

impl Block {
    pub fn span(&self) -> Interval {
        match self {
            Block::Member { interval, .. } => interval.clone(),
            Block::Family { family, .. } => family.hull().expect("blocks hold nonempty families"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Class {
    /// One class made of the listed blocks.
    Joined(Vec<Block>),
    /// Every member of the family is a class of its own.
    EachMember { entry: usize, family: IntervalFamily },
}

impl Class {
    /// Smallest interval containing the class (the hull for `EachMember`).
    pub fn span(&self) -> Interval {
        match self {
            Class::Joined(blocks) => {
                let spans: Vec<Interval> = blocks.iter().map(|b| b.span()).collect();
                let first = spans.iter().min_by(|a, b| a.left.cmp(&b.left)).unwrap();
                let last = spans.iter().max_by(|a, b| a.right.cmp(&b.right)).unwrap();
                Interval { left: first.left.clone(), right: last.right.clone(), left_closed: first.left_closed, right_closed: last.right_closed }
            }
            Class::EachMember { family, .. } => family.hull().expect("blocks hold nonempty families"),
        }
    }

    pub fn is_singleton(&self) -> bool {
        match self {
            Class::Joined(b) => matches!(b.as_slice(), [Block::Member { .. }]),
            Class::EachMember { .. } => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub classes: Vec<Class>,
}

impl Partition {
    /// Whether every class has exactly one interval.
    pub fn all_singletons(&self) -> bool {
        self.classes.iter().all(Class::is_singleton)
    }

    /// Whether each class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.classes.iter().all(|c| {
            let s = c.span();
            coarser.classes.iter().any(|d| match (c, d) {
                (_, Class::Joined(_)) => s.is_subset_of(&d.span()),
                (Class::EachMember { family: f, .. }, Class::EachMember { family: g, .. }) => {
                    f.same_generator(g) && s.is_subset_of(&d.span())
                }
                (Class::Joined(blocks), Class::EachMember { family: g, .. }) => match blocks.as_slice() {
                    [Block::Member { interval, .. }] => g.member_at(&interval.midpoint()).map_or(false, |(_, m)| m == *interval),
                    _ => false,
                },
            })
        })
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Class::Joined(blocks) => {
                let parts: Vec<String> = blocks
                    .iter()
                    .map(|b| match b {
                        Block::Member { interval, .. } => interval.to_string(),
                        Block::Family { family, .. } => family.to_string(),
                    })
                    .collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
            Class::EachMember { family, .. } => write!(f, "each member of {family}"),
        }
    }
}

#[derive(Clone, Debug)]
enum Unit {
    Member { entry: usize, interval: Interval },
    Group { entry: usize, family: IntervalFamily },
    Singles { entry: usize, family: IntervalFamily },
}

impl Unit {
    fn span(&self) -> Interval {
        match self {
            Unit::Member { interval, .. } => interval.clone(),
            Unit::Group { family, .. } | Unit::Singles { family, .. } => family.hull().unwrap(),
        }
    }

    /// A member standing for this unit when compared with a neighbour on
    /// the given side; `None` when no member can be related across it.
    fn representative(&self, right: bool) -> Option<Interval> {
        match self {
            Unit::Member { interval, .. } => Some(interval.clone()),
            Unit::Group { family, .. } => family
                .edge_member(right)
                .map(|(_, m)| m)
                .or_else(|| family.members(1).into_iter().next().map(|(_, m)| m)),
            // Relating a neighbour to a non-extremal member would relate it to
            // every member in between, contradicting the singleton rule.
            Unit::Singles { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Group,
    Singles,
}

/// Partition of the system intervals under the given relation, with
/// `lambda` as the scale measure.
pub fn partition(entries: &[IntervalFamily], lambda: &ScaleMeasure, kind: RelationKind<'_>) -> Result<Partition> {
    let mut units: Vec<Unit> = Vec::new();
    for (e, f) in entries.iter().enumerate() {
        if f.is_finite() {
            units.extend(f.members(usize::MAX).into_iter().map(|(_, iv)| Unit::Member { entry: e, interval: iv }));
            continue;
        }
        match family_mode(f, lambda, kind)? {
            Mode::Group => units.push(Unit::Group { entry: e, family: f.clone() }),
            Mode::Singles => split_singles(e, f, &mut units),
        }
    }
    units.sort_by(|a, b| {
        let (x, y) = (a.span(), b.span());
        x.left.cmp(&y.left).then(x.right.cmp(&y.right))
    });

    let mut classes: Vec<Vec<Unit>> = Vec::new();
    for u in units {
        let joined = match classes.last().and_then(|c| c.last()) {
            Some(prev) => match (prev.representative(true), u.representative(false)) {
                (Some(a), Some(b)) => related(&a, &b, entries, lambda, kind)?,
                _ => false,
            },
            None => false,
        };
        if joined {
            classes.last_mut().unwrap().push(u);
        } else {
            classes.push(vec![u]);
        }
    }

    let classes = classes
        .into_iter()
        .map(|run| match run.as_slice() {
            [Unit::Singles { entry, family }] => Class::EachMember { entry: *entry, family: family.clone() },
            _ => Class::Joined(
                run.into_iter()
                    .map(|u| match u {
                        Unit::Member { entry, interval } => Block::Member { entry, interval },
                        Unit::Group { entry, family } | Unit::Singles { entry, family } => Block::Family { entry, family },
                    })
                    .collect(),
            ),
        })
        .collect();
    Ok(Partition { classes })
}

/// Peels attained extremal members off a singleton family, since those
/// can still be related to a neighbour.
fn split_singles(entry: usize, f: &IntervalFamily, units: &mut Vec<Unit>) {
    let mut rest = f.clone();
    if let Some((_, m)) = rest.edge_member(false) {
        units.push(Unit::Member { entry, interval: m.clone() });
        match rest.clipped(&m.right, &ExtReal::PosInf) {
            Some(r) => rest = r,
            None => return,
        }
    }
    if let Some((_, m)) = rest.edge_member(true) {
        units.push(Unit::Member { entry, interval: m.clone() });
        match rest.clipped(&ExtReal::NegInf, &m.left) {
            Some(r) => rest = r,
            None => return,
        }
    }
    if rest.is_finite() {
        units.extend(rest.members(usize::MAX).into_iter().map(|(_, iv)| Unit::Member { entry, interval: iv }));
    } else {
        units.push(Unit::Singles { entry, family: rest });
    }
}

/// The relation test on the bracket between two members' midpoints.
pub fn related(a: &Interval, b: &Interval, entries: &[IntervalFamily], lambda: &ScaleMeasure, kind: RelationKind<'_>) -> Result<bool> {
    let (ma, mb) = (a.midpoint(), b.midpoint());
    let (lo, hi) = if ma <= mb { (ma, mb) } else { (mb, ma) };
    let bracket = Interval::closed(lo, hi);
    let w = bracket.interior();
    if !lambda.finite_on(&w) {
        return Ok(false);
    }
    match kind {
        RelationKind::Tight => Ok(residual_set(&bracket, entries)?.class <= ResidualClass::Countable),
        RelationKind::Loose => Ok(residual_set(&bracket, entries)?.class <= ResidualClass::UncountableNowhereDense),
        RelationKind::FScale { trivial } => Ok(!trivial.positive_on(&w)),
    }
}

/// Decides whether the members of an infinite generator family are all
/// related to each other or pairwise unrelated.
fn family_mode(f: &IntervalFamily, lambda: &ScaleMeasure, kind: RelationKind<'_>) -> Result<Mode> {
    let hull = f.hull().unwrap();
    let open = hull.interior();
    let locally_finite = lambda.locally_finite_on(&open);
    let undecided = |why: &str| Err(Error::UndecidableAtDepth(format!("{} relation inside {f}: {why}", kind.name())));
    match &f.kind {
        FamilyKind::Explicit(_) => Ok(Mode::Group),
        // Brackets inside a chain miss only chain points, a countable set
        // that no atomless measure charges.
        FamilyKind::Chain(_) => {
            if locally_finite {
                Ok(Mode::Group)
            } else {
                undecided("scale mass not locally finite")
            }
        }
        FamilyKind::CantorGaps { spec, .. } => {
            // Every bracket between two gaps contains whole gaps of the set.
            if carries_unit_mass(lambda, f, &open) {
                return Ok(Mode::Singles);
            }
            match kind {
                RelationKind::Tight => Ok(Mode::Singles),
                RelationKind::Loose => {
                    if locally_finite {
                        Ok(Mode::Group)
                    } else {
                        undecided("scale mass not locally finite")
                    }
                }
                RelationKind::FScale { trivial } => {
                    if charges_every_portion(trivial, spec, &open) {
                        Ok(Mode::Singles)
                    } else if !trivial.positive_on(&open) && locally_finite {
                        Ok(Mode::Group)
                    } else {
                        undecided("trivial part neither vanishes nor charges every portion of the set")
                    }
                }
            }
        }
    }
}

/// A positive per-member inverse-length density over the whole hull: every
/// member carries the same positive mass.
fn carries_unit_mass(lambda: &ScaleMeasure, f: &IntervalFamily, hull: &Window) -> bool {
    lambda.pieces().iter().any(|p| match p {
        Piece::Ac(a) => match &a.density {
            Density::PerMember { family, rule: MemberRule::InverseLength { mass } } => {
                mass.is_positive() && family.same_generator(f) && a.window.contains_window(hull)
            }
            _ => false,
        },
        Piece::Cantor(_) => false,
    })
}

/// Whether the measure charges `K ∩ (u, v)` for every open `(u, v)` meeting
/// `K` inside the window.
fn charges_every_portion(m: &ScaleMeasure, spec: &crate::cantor::CantorSpec, w: &Window) -> bool {
    m.pieces().iter().any(|p| match p {
        Piece::Cantor(k) => k.spec == *spec && k.window.contains_window(w),
        Piece::Ac(a) => {
            let positive = match &a.density {
                Density::Constant(c) => c.is_positive(),
                Density::PowerLaw { coef, .. } | Density::Taper { coef, .. } => coef.is_positive(),
                Density::PerMember { .. } => false,
            };
            positive && !spec.is_null() && matches!(&a.mask, Mask::Full | Mask::OnCantor(_)) && mask_spec_ok(&a.mask, spec) && a.window.contains_window(w)
        }
    })
}

fn mask_spec_ok(mask: &Mask, spec: &crate::cantor::CantorSpec) -> bool {
    match mask {
        Mask::OnCantor(s) => s == spec,
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::CantorSpec;
    use crate::family::Chain;
    use crate::real::Real;
    use num_rational::BigRational;

    fn leb() -> ScaleMeasure {
        ScaleMeasure::lebesgue(Window::full())
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn trap() -> Vec<IntervalFamily> {
        vec![
            IntervalFamily::single(Interval::new(ExtReal::NegInf, ExtReal::int(0), false, true).unwrap()),
            IntervalFamily::cantor_gaps(CantorSpec::standard(), true),
            IntervalFamily::single(Interval::new(ExtReal::int(1), ExtReal::PosInf, true, false).unwrap()),
        ]
    }

    #[test]
    fn trap_tight_is_singletons_loose_is_one_class() {
        let t = partition(&trap(), &leb(), RelationKind::Tight).unwrap();
        assert!(t.all_singletons());
        assert_eq!(t.classes.len(), 3);
        let l = partition(&trap(), &leb(), RelationKind::Loose).unwrap();
        assert_eq!(l.classes.len(), 1);
        assert_eq!(l.classes[0].span().to_string(), "(-inf, +inf)");
        assert!(t.refines(&l));
        assert!(!l.refines(&t));
    }

    #[test]
    fn fscale_follows_trivial_part() {
        let none = ScaleMeasure::zero();
        let p = partition(&trap(), &leb(), RelationKind::FScale { trivial: &none }).unwrap();
        assert_eq!(p.classes.len(), 1);
        let stair = ScaleMeasure::cantor(CantorSpec::standard(), Real::one());
        let p = partition(&trap(), &leb(), RelationKind::FScale { trivial: &stair }).unwrap();
        assert!(p.all_singletons());
    }

    #[test]
    fn harmonic_chain_joins() {
        let entries = vec![
            IntervalFamily::chain(Chain::new(q(0, 1), q(-1, 1), q(1, 1), false, false).unwrap()),
            IntervalFamily::single(Interval::open(ExtReal::int(0), ExtReal::int(1))),
        ];
        let lam = ScaleMeasure::lebesgue(Window::new(ExtReal::int(-1), ExtReal::int(1)));
        let p = partition(&entries, &lam, RelationKind::Tight).unwrap();
        assert_eq!(p.classes.len(), 1);
        assert_eq!(p.classes[0].span().to_string(), "(-1, 1)");
    }

    #[test]
    fn attained_edges_still_join() {
        // Gaps inside [0, 2/3] end with the closed gap [1/3, 2/3], which
        // touches the next explicit interval through a finite bracket.
        let k = IntervalFamily::cantor_gaps(CantorSpec::standard(), true).clipped(&ExtReal::NegInf, &ExtReal::ratio(2, 3)).unwrap();
        let entries = vec![k, IntervalFamily::single(Interval::new(ExtReal::ratio(2, 3), ExtReal::int(2), false, true).unwrap())];
        let p = partition(&entries, &leb(), RelationKind::Tight).unwrap();
        assert_eq!(p.classes.len(), 2);
        let joined = p.classes.iter().find(|c| !c.is_singleton()).unwrap();
        assert_eq!(joined.span().to_string(), "[1/3, 2]");
    }
}
