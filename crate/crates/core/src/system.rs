//! Effective-interval systems: state space, speed measure, interval
//! families and one global scale measure carried by their union.

use std::fmt;

use crate::error::{Result, Verdict};
use crate::family::{families_disjoint, FamilyKind, IntervalFamily};
use crate::interval::{Interval, Window};
use crate::measure::{Density, Mask, Piece, Precision, ScaleMeasure};
use crate::real::ExtReal;
#[cfg(test)]
use crate::real::Real;
use crate::relation::rn_relation;

/// A system of disjoint intervals with scale functions, read as the
/// measure `scale` restricted to each member and anchored at its midpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveSystem {
    pub state: Interval,
    pub speed: ScaleMeasure,
    pub entries: Vec<IntervalFamily>,
    pub scale: ScaleMeasure,
    pub killing: Option<ScaleMeasure>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Reflecting,
    AbsorbingDirichlet,
    Unapproachable,
}

impl BoundaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryKind::Reflecting => "reflecting",
            BoundaryKind::AbsorbingDirichlet => "absorbing",
            BoundaryKind::Unapproachable => "unapproachable",
        }
    }
}

/// Boundary behaviour of one member (or of a generic member of a family).
#[derive(Clone, Debug, PartialEq)]
pub struct MemberBoundary {
    pub entry: usize,
    pub member: Interval,
    /// True when the member stands for every member of a generator family.
    pub generic: bool,
    pub left: BoundaryKind,
    pub right: BoundaryKind,
}

/// One named check with its verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl Condition {
    pub fn new(name: &str, verdict: Verdict, detail: impl Into<String>) -> Condition {
        Condition { name: name.to_string(), verdict, detail: detail.into() }
    }

    fn from_result(name: &str, r: Result<bool>, detail: impl Into<String>) -> Condition {
        match r {
            Ok(b) => Condition::new(name, Verdict::from_bool(b), detail),
            Err(e) => Condition::new(name, Verdict::Undecidable(e.to_string()), detail),
        }
    }
}

/// Conjunction of a list of conditions.
pub fn all_conditions(conds: &[Condition]) -> Verdict {
    conds.iter().fold(Verdict::True, |acc, c| acc.and(c.verdict.clone()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub conditions: Vec<Condition>,
}

impl EffectiveSystem {
    /// Builds a system with entries in canonical order (by hull); empty
    /// families are dropped.
    pub fn new(state: Interval, speed: ScaleMeasure, entries: Vec<IntervalFamily>, scale: ScaleMeasure, killing: Option<ScaleMeasure>) -> EffectiveSystem {
        EffectiveSystem { state, speed, entries: canonical_entries(entries), scale, killing }
    }

    /// Same state, speed and killing with new intervals and scale.
    pub fn with_parts(&self, entries: Vec<IntervalFamily>, scale: ScaleMeasure) -> EffectiveSystem {
        EffectiveSystem::new(self.state.clone(), self.speed.clone(), entries, scale, self.killing.clone())
    }

    /// The scale measure: sum over members of the member scale measures.
    pub fn scale_measure_of(&self) -> Result<ScaleMeasure> {
        self.scale.restrict_to_union(&self.entries)
    }

    /// The scale measure of one member.
    pub fn member_scale(&self, member: &Interval) -> ScaleMeasure {
        self.scale.restrict_to_window(&member.interior())
    }

    /// The scale function of a member, anchored at its midpoint.
    pub fn member_scale_at(&self, member: &Interval, x: &ExtReal, prec: &Precision) -> Result<ExtReal> {
        self.member_scale(member).evaluate(&member.midpoint(), x, prec)
    }

    /// All finite members of explicit entries and up to `prefix` members of
    /// each generator entry.
    pub fn prefix_members(&self, prefix: usize) -> Vec<(usize, u64, Interval)> {
        let mut out = Vec::new();
        for (e, f) in self.entries.iter().enumerate() {
            let limit = if f.is_explicit() { usize::MAX } else { prefix };
            out.extend(f.members(limit).into_iter().map(|(k, iv)| (e, k, iv)));
        }
        out
    }

    /// Whether an endpoint of `member` must be included, as dictated by the
    /// scale measure near it and by the state space.
    pub fn endpoint_included(&self, member: &Interval, right: bool) -> bool {
        endpoint_included(&self.state, &self.scale, member, right)
    }

    /// Boundary classes of each explicit member and of a generic member of
    /// each generator family.
    pub fn boundaries(&self) -> Vec<MemberBoundary> {
        let mut out = Vec::new();
        for (e, f) in self.entries.iter().enumerate() {
            let generic = !f.is_explicit();
            let members = if generic { f.members(1) } else { f.members(usize::MAX) };
            for (_, iv) in members {
                out.push(MemberBoundary {
                    entry: e,
                    left: self.classify(&iv, false),
                    right: self.classify(&iv, true),
                    member: iv,
                    generic,
                });
            }
        }
        out
    }

    fn classify(&self, member: &Interval, right: bool) -> BoundaryKind {
        let closed = if right { member.right_closed } else { member.left_closed };
        if closed {
            return BoundaryKind::Reflecting;
        }
        let (end, state_end, state_closed) = if right {
            (&member.right, &self.state.right, self.state.right_closed)
        } else {
            (&member.left, &self.state.left, self.state.left_closed)
        };
        if end != state_end || state_closed {
            return BoundaryKind::Unapproachable;
        }
        let w = near_window(member, right);
        let scale_finite = self.member_scale(member).finite_on(&w);
        let speed_finite = self.speed.finite_on(&w);
        if scale_finite && speed_finite {
            BoundaryKind::AbsorbingDirichlet
        } else {
            BoundaryKind::Unapproachable
        }
    }

    /// Checks disjointness, containment, support and adaptedness of the
    /// members (generator families on their first `prec.prefix` members).
    pub fn validate(&self, prec: &Precision) -> ValidationReport {
        let mut conds = Vec::new();

        let outside: Vec<String> = self
            .entries
            .iter()
            .filter_map(|f| f.hull())
            .filter(|h| !h.is_subset_of(&self.state))
            .map(|h| h.to_string())
            .collect();
        conds.push(Condition::new(
            "members_in_state",
            Verdict::from_bool(outside.is_empty()),
            if outside.is_empty() { "every member lies in the state space".to_string() } else { format!("outside the state space: {}", outside.join(", ")) },
        ));

        conds.push(Condition::from_result(
            "disjoint",
            families_disjoint(&self.entries, prec.prefix),
            format!("pairwise disjoint members (generators checked on {} members)", prec.prefix),
        ));

        conds.push(match self.scale.restrict_to_complement(&self.entries) {
            Ok(rest) => Condition::new(
                "scale_on_members",
                Verdict::from_bool(rest.is_zero()),
                if rest.is_zero() { "scale measure carried by the members".to_string() } else { format!("scale mass off the members: {rest}") },
            ),
            Err(e) => Condition::new("scale_on_members", Verdict::Undecidable(e.to_string()), ""),
        });

        let members = self.prefix_members(prec.prefix);
        let thin: Vec<String> = members
            .iter()
            .filter(|(_, _, iv)| !dense_cover(&self.scale, &iv.interior()))
            .map(|(_, _, iv)| iv.to_string())
            .collect();
        conds.push(Condition::new(
            "scale_full_support",
            Verdict::from_bool(thin.is_empty()),
            if thin.is_empty() { "each scale function strictly increasing".to_string() } else { format!("scale not fully supported on {}", thin.join(", ")) },
        ));

        let mut bad = Vec::new();
        for (_, _, iv) in &members {
            for right in [false, true] {
                let want = self.endpoint_included(iv, right);
                let has = if right { iv.right_closed } else { iv.left_closed };
                if want != has {
                    let side = if right { "right" } else { "left" };
                    bad.push(format!("{iv} {side} endpoint should be {}", if want { "closed" } else { "open" }));
                }
            }
        }
        conds.push(Condition::new(
            "adapted",
            Verdict::from_bool(bad.is_empty()),
            if bad.is_empty() { "endpoints match scale finiteness".to_string() } else { bad.join("; ") },
        ));

        let interior = self.state.interior();
        let speed_ok = self.speed.locally_finite_on(&interior) && dense_cover(&self.speed, &interior);
        conds.push(Condition::new("speed_radon", Verdict::from_bool(speed_ok), "speed measure Radon with full support"));

        if let Some(k) = &self.killing {
            conds.push(Condition::new(
                "killing_radon",
                Verdict::from_bool(k.locally_finite_on(&interior)),
                "killing measure Radon on the state space",
            ));
            conds.push(match k.restrict_to_complement(&self.entries) {
                Ok(off) => {
                    let rel = rn_relation(&off, &self.speed);
                    let v = match rel {
                        r if r.is_absolutely_continuous() => Verdict::True,
                        crate::relation::Relation::Unknown(s) => Verdict::Undecidable(s),
                        _ => Verdict::False,
                    };
                    Condition::new("killing_off_members", v, "killing measure off the members absolutely continuous to the speed measure")
                }
                Err(e) => Condition::new("killing_off_members", Verdict::Undecidable(e.to_string()), ""),
            });
        }

        ValidationReport { verdict: all_conditions(&conds), conditions: conds }
    }

    /// Short label for the scale of an entry: `natural` for Lebesgue.
    pub fn scale_label(&self, entry: usize) -> String {
        let f = &self.entries[entry];
        let own = self.scale.restrict_to_union(std::slice::from_ref(f));
        let leb = ScaleMeasure::lebesgue(Window::full()).restrict_to_union(std::slice::from_ref(f));
        match (own, leb) {
            (Ok(a), Ok(b)) if a == b => "natural".to_string(),
            (Ok(a), _) => a.to_string(),
            (Err(e), _) => format!("({e})"),
        }
    }
}

/// Sorts families by hull and drops empty ones.
pub fn canonical_entries(entries: Vec<IntervalFamily>) -> Vec<IntervalFamily> {
    let mut keyed: Vec<(Interval, IntervalFamily)> = entries
        .into_iter()
        .filter_map(|f| {
            let f = match &f.kind {
                FamilyKind::Explicit(m) => {
                    let mut m = m.clone();
                    m.sort_by(|a, b| a.left.cmp(&b.left).then(a.right.cmp(&b.right)));
                    IntervalFamily { kind: FamilyKind::Explicit(m), clip: None }
                }
                _ => f,
            };
            f.hull().map(|h| (h, f))
        })
        .collect();
    keyed.sort_by(|a, b| a.0.left.cmp(&b.0.left).then(a.0.right.cmp(&b.0.right)));
    keyed.into_iter().map(|(_, f)| f).collect()
}

/// The half of a member next to one endpoint, as an open window.
pub fn near_window(member: &Interval, right: bool) -> Window {
    let mid = ExtReal::Finite(member.midpoint());
    if right {
        Window::new(mid, member.right.clone())
    } else {
        Window::new(member.left.clone(), mid)
    }
}

/// Endpoint rule: an infinite endpoint, or a state endpoint outside the
/// state, is excluded; otherwise the endpoint is included exactly when the
/// scale measure is finite next to it.
pub fn endpoint_included(state: &Interval, scale: &ScaleMeasure, member: &Interval, right: bool) -> bool {
    let (end, state_end, state_closed) = if right {
        (&member.right, &state.right, state.right_closed)
    } else {
        (&member.left, &state.left, state.left_closed)
    };
    if !end.is_finite() || (end == state_end && !state_closed) {
        return false;
    }
    scale.restrict_to_window(&member.interior()).finite_on(&near_window(member, right))
}

/// Whether the closures of the measure's fully supported pieces cover `w`.
pub fn dense_cover(m: &ScaleMeasure, w: &Window) -> bool {
    if w.is_empty() {
        return true;
    }
    let mut spans: Vec<Window> = Vec::new();
    for p in m.pieces() {
        let Piece::Ac(a) = p else { continue };
        if matches!(a.mask, Mask::OnCantor(_)) {
            continue;
        }
        if let Density::Constant(c) = &a.density {
            if !c.is_positive() {
                continue;
            }
        }
        match &a.density {
            Density::PerMember { family, .. } => match &family.kind {
                FamilyKind::Explicit(ms) => {
                    spans.extend(ms.iter().map(|iv| iv.interior().intersect(&a.window)));
                }
                _ => spans.extend(family.hull().map(|h| h.interior().intersect(&a.window))),
            },
            _ => spans.push(a.window.clone()),
        }
    }
    spans.retain(|s| !s.is_empty());
    spans.sort();
    // Walk the closures from the left end of `w`.
    let mut reach = w.lo.clone();
    for s in &spans {
        if s.hi <= reach {
            continue;
        }
        if s.lo > reach {
            return false;
        }
        reach = s.hi.clone();
        if reach >= w.hi {
            return true;
        }
    }
    reach >= w.hi
}

impl fmt::Display for EffectiveSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "state {}:", self.state)?;
        for (e, fam) in self.entries.iter().enumerate() {
            write!(f, " {} [{}];", fam, self.scale_label(e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::CantorSpec;

    fn leb() -> ScaleMeasure {
        ScaleMeasure::lebesgue(Window::full())
    }

    fn trap() -> EffectiveSystem {
        EffectiveSystem::new(
            Interval::real_line(),
            leb(),
            vec![
                IntervalFamily::cantor_gaps(CantorSpec::standard(), true),
                IntervalFamily::single(Interval::new(ExtReal::NegInf, ExtReal::int(0), false, true).unwrap()),
                IntervalFamily::single(Interval::new(ExtReal::int(1), ExtReal::PosInf, true, false).unwrap()),
            ],
            leb(),
            None,
        )
    }

    #[test]
    fn canonical_order_and_labels() {
        let s = trap();
        assert_eq!(s.entries[0].hull().unwrap().to_string(), "(-inf, 0]");
        assert!(s.entries[1].cantor_spec().is_some());
        assert_eq!(s.scale_label(1), "natural");
    }

    #[test]
    fn trap_is_valid_and_reflecting() {
        let s = trap();
        let r = s.validate(&Precision::default());
        assert!(r.verdict.is_true(), "{:?}", r.conditions);
        let b = s.boundaries();
        assert_eq!(b[0].left, BoundaryKind::Unapproachable);
        assert_eq!(b[0].right, BoundaryKind::Reflecting);
        assert!(b[1].generic);
        assert_eq!(b[1].left, BoundaryKind::Reflecting);
    }

    #[test]
    fn open_gaps_are_not_adapted() {
        let mut s = trap();
        s.entries[1] = s.entries[1].with_flags(false, false).unwrap();
        let r = s.validate(&Precision::default());
        assert!(r.verdict.is_false());
        let adapted = r.conditions.iter().find(|c| c.name == "adapted").unwrap();
        assert!(adapted.verdict.is_false());
    }

    #[test]
    fn bessel_boundary() {
        let half = Window::new(ExtReal::zero(), ExtReal::PosInf);
        let speed = ScaleMeasure::density(half.clone(), Density::PowerLaw { coef: Real::one(), exponent: num_rational::BigRational::from_integer(1.into()) }).unwrap();
        let scale = ScaleMeasure::density(half.clone(), Density::reciprocal()).unwrap();
        let state = Interval::new(ExtReal::zero(), ExtReal::PosInf, true, false).unwrap();
        let s = EffectiveSystem::new(state, speed.clone(), vec![IntervalFamily::single(Interval::open(ExtReal::zero(), ExtReal::PosInf))], scale, None);
        assert!(s.validate(&Precision::default()).verdict.is_true());
        assert_eq!(s.boundaries()[0].left, BoundaryKind::Unapproachable);

        // A finite scale at 0 on the open half-line: absorbing.
        let lebhalf = ScaleMeasure::lebesgue(half.clone());
        let open = Interval::open(ExtReal::zero(), ExtReal::PosInf);
        let s = EffectiveSystem::new(open.clone(), speed, vec![IntervalFamily::single(open)], lebhalf, None);
        assert!(s.validate(&Precision::default()).verdict.is_true());
        assert_eq!(s.boundaries()[0].left, BoundaryKind::AbsorbingDirichlet);
    }

    #[test]
    fn dense_cover_detects_holes() {
        let w = Window::new(ExtReal::int(0), ExtReal::int(2));
        let a = ScaleMeasure::lebesgue(Window::new(ExtReal::int(0), ExtReal::int(1)));
        let b = ScaleMeasure::lebesgue(Window::new(ExtReal::int(1), ExtReal::int(2)));
        assert!(dense_cover(&a.add(&b).scaled(&Real::int(3)), &w));
        assert!(!dense_cover(&a, &w));
    }
}
