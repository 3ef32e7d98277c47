//! Radon-Nikodym relations between scale measures, decided by piece rules.
//!
//! Both measures are cut into cells at every window endpoint. Inside a cell
//! a fat Cantor-type set (if any mask mentions one) splits the line into two
//! atoms; densities are summed per atom and compared symbolically. Anything
//! the rules cannot settle is reported as `Unknown`, never guessed.

use std::fmt;

use num_rational::BigRational;

use crate::cantor::CantorSpec;
use crate::error::{Error, Result};
use crate::interval::{Interval, Window};
use crate::measure::{AcPiece, CantorPiece, Density, Mask, MemberRule, Piece, ScaleMeasure};
use crate::real::{ExtReal, Real};
use crate::thinned::ThinnedSet;

#[derive(Clone, Debug, PartialEq)]
pub enum Atom {
    All,
    Off(CantorSpec),
    On(CantorSpec),
}

/// The derivative on one cell and atom.
#[derive(Clone, Debug, PartialEq)]
pub enum RatioPart {
    /// `num / den` (Lebesgue densities), cut to `selection` when present.
    Ac { window: Window, atom: Atom, num: Vec<Density>, den: Vec<Density>, selection: Option<ThinnedSet> },
    /// Ratio of two staircase masses on the same set.
    Staircase { window: Window, spec: CantorSpec, num: Real, den: Real },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Relation {
    /// `nu << mu` with derivative in `{0, 1}`.
    ZeroOne,
    /// `nu << mu` with the given derivative.
    AcGeneral(Vec<RatioPart>),
    Singular,
    Mixed,
    Unknown(String),
}

impl Relation {
    pub fn is_absolutely_continuous(&self) -> bool {
        matches!(self, Relation::ZeroOne | Relation::AcGeneral(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Relation::ZeroOne => "zero-one",
            Relation::AcGeneral(_) => "absolutely-continuous",
            Relation::Singular => "singular",
            Relation::Mixed => "mixed",
            Relation::Unknown(_) => "unknown",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Output of the Lebesgue decomposition of `lam` against `reference`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    /// Derivative of the absolutely continuous part.
    pub ratio: Vec<RatioPart>,
    pub abs_part: ScaleMeasure,
    pub singular_part: ScaleMeasure,
}

#[derive(Default)]
struct CellTerms {
    ac: Vec<(Mask, Density)>,
    cantor: Vec<(CantorSpec, Real)>,
}

struct AtomTerms {
    full: Vec<Density>,
    balls: Vec<(ThinnedSet, Density)>,
}

impl AtomTerms {
    fn is_empty(&self) -> bool {
        self.full.is_empty() && self.balls.is_empty()
    }
}

fn cells(a: &ScaleMeasure, b: &ScaleMeasure) -> Vec<Window> {
    let mut cuts = vec![ExtReal::NegInf, ExtReal::PosInf];
    for m in [a, b] {
        for p in m.pieces() {
            cuts.push(p.window().lo.clone());
            cuts.push(p.window().hi.clone());
        }
    }
    cuts.sort();
    cuts.dedup();
    cuts.windows(2).map(|c| Window::new(c[0].clone(), c[1].clone())).filter(|c| !c.is_empty()).collect()
}

fn terms_in(m: &ScaleMeasure, cell: &Window) -> CellTerms {
    let mut t = CellTerms::default();
    for p in m.pieces() {
        if !p.window().contains_window(cell) {
            continue;
        }
        match p {
            Piece::Ac(a) => t.ac.push((a.mask.clone(), a.density.clone())),
            Piece::Cantor(k) => {
                if k.spec.meets_open(cell) {
                    t.cantor.push((k.spec.clone(), k.scale.clone()));
                }
            }
        }
    }
    t
}

fn fat_specs(terms: &[&CellTerms], cell: &Window) -> Vec<CantorSpec> {
    let mut out: Vec<CantorSpec> = Vec::new();
    for t in terms {
        for (mask, d) in &t.ac {
            let spec = match (mask, d) {
                (Mask::OffCantor(s) | Mask::OnCantor(s), _) => Some(s),
                (_, Density::PerMember { family, .. }) => family.cantor_spec(),
                _ => None,
            };
            if let Some(s) = spec {
                if !s.is_null() && s.meets_open(cell) && !out.contains(s) {
                    out.push(s.clone());
                }
            }
        }
    }
    out
}

fn on_atom(terms: &CellTerms, atom: &Atom) -> AtomTerms {
    let mut out = AtomTerms { full: vec![], balls: vec![] };
    for (mask, d) in &terms.ac {
        let included = match (mask, atom) {
            (Mask::Full, _) | (Mask::InBalls(_), _) => true,
            (Mask::OffCantor(s), Atom::Off(t)) => s == t,
            (Mask::OnCantor(s), Atom::On(t)) => s == t,
            (Mask::OffCantor(_), Atom::All) => true,
            _ => false,
        };
        let off_members_only = match (d, atom) {
            (Density::PerMember { family, .. }, Atom::On(t)) => family.cantor_spec() == Some(t),
            _ => false,
        };
        if !included || off_members_only {
            continue;
        }
        match mask {
            Mask::InBalls(set) => out.balls.push((set.clone(), d.clone())),
            _ => out.full.push(d.clone()),
        }
    }
    out
}

/// Canonical sum: constants and equal-exponent power laws combined, then sorted.
pub fn canonical_sum(terms: &[Density]) -> Vec<Density> {
    let mut constant: Option<Real> = None;
    let mut powers: Vec<(BigRational, Real)> = Vec::new();
    let mut rest: Vec<Density> = Vec::new();
    for d in terms {
        match d {
            Density::Constant(c) => constant = Some(constant.map_or(c.clone(), |a| &a + c)),
            Density::PowerLaw { coef, exponent } => match powers.iter_mut().find(|(e, _)| e == exponent) {
                Some((_, a)) => *a = &*a + coef,
                None => powers.push((exponent.clone(), coef.clone())),
            },
            other => rest.push(other.clone()),
        }
    }
    let mut out: Vec<Density> = Vec::new();
    if let Some(c) = constant {
        if !c.is_zero() {
            out.push(Density::Constant(c));
        }
    }
    powers.sort_by(|a, b| a.0.cmp(&b.0));
    out.extend(powers.into_iter().map(|(exponent, coef)| Density::PowerLaw { coef, exponent }));
    rest.sort_by_key(|d| format!("{d:?}"));
    out.extend(rest);
    out
}

#[derive(Default)]
struct Analysis {
    parts: Vec<RatioPart>,
    general: bool,
    singular: bool,
    absolute: bool,
    unknown: Option<String>,
}

fn analyze(nu: &ScaleMeasure, mu: &ScaleMeasure) -> Analysis {
    let mut out = Analysis::default();
    for cell in cells(nu, mu) {
        let tn = terms_in(nu, &cell);
        let tm = terms_in(mu, &cell);
        if tn.ac.is_empty() && tn.cantor.is_empty() {
            continue;
        }
        let specs = fat_specs(&[&tn, &tm], &cell);
        if specs.len() > 1 {
            out.unknown = Some(format!("two fat Cantor-type sets meet {cell}"));
            continue;
        }
        let atoms = match specs.first() {
            None => vec![Atom::All],
            Some(s) => vec![Atom::Off(s.clone()), Atom::On(s.clone())],
        };
        for atom in atoms {
            let n = on_atom(&tn, &atom);
            let m = on_atom(&tm, &atom);
            if n.is_empty() {
                continue;
            }
            if m.is_empty() {
                out.singular = true;
                continue;
            }
            let nf = canonical_sum(&n.full);
            let mf = canonical_sum(&m.full);
            if !m.balls.is_empty() {
                if nf == mf && n.balls == m.balls {
                    out.absolute = true;
                    out.parts.push(RatioPart::Ac { window: cell.clone(), atom, num: mf.clone(), den: mf, selection: None });
                } else {
                    out.unknown = Some(format!("selection sets on {cell} do not match"));
                }
                continue;
            }
            out.absolute = true;
            if n.balls.is_empty() {
                if nf != mf {
                    out.general = true;
                }
                out.parts.push(RatioPart::Ac { window: cell.clone(), atom, num: nf, den: mf, selection: None });
                continue;
            }
            let set = n.balls[0].0.clone();
            let same_set = n.balls.iter().all(|(s, _)| *s == set);
            let selected: Vec<Density> = n.balls.iter().map(|(_, d)| d.clone()).collect();
            if nf.is_empty() && same_set && canonical_sum(&selected) == mf {
                out.parts.push(RatioPart::Ac { window: cell.clone(), atom, num: mf.clone(), den: mf, selection: Some(set) });
            } else {
                out.unknown = Some(format!("partial selection on {cell} is not representable"));
            }
        }
        for (spec, a) in &tn.cantor {
            match tm.cantor.iter().find(|(s, _)| s == spec) {
                Some((_, b)) => {
                    out.absolute = true;
                    if a != b {
                        out.general = true;
                    }
                    out.parts.push(RatioPart::Staircase { window: cell.clone(), spec: spec.clone(), num: a.clone(), den: b.clone() });
                }
                None => {
                    let charged = !on_atom(&tm, &Atom::On(spec.clone())).is_empty();
                    if !spec.is_null() && charged {
                        out.unknown = Some(format!("staircase of the fat set {spec} against a density"));
                    } else {
                        out.singular = true;
                    }
                }
            }
        }
    }
    out
}

/// Relation of `nu` to `mu`.
pub fn rn_relation(nu: &ScaleMeasure, mu: &ScaleMeasure) -> Relation {
    let a = analyze(nu, mu);
    if let Some(reason) = a.unknown {
        return Relation::Unknown(reason);
    }
    if a.singular {
        return if a.absolute { Relation::Mixed } else { Relation::Singular };
    }
    if a.general {
        Relation::AcGeneral(a.parts)
    } else {
        Relation::ZeroOne
    }
}

/// The derivative parts of `nu` against `mu` (only for absolutely continuous pairs).
pub fn density_ratio(nu: &ScaleMeasure, mu: &ScaleMeasure) -> Result<Vec<RatioPart>> {
    let a = analyze(nu, mu);
    if let Some(reason) = a.unknown {
        return Err(Error::UndecidableDecomposition(reason));
    }
    if a.singular {
        return Err(Error::UndecidableDecomposition("measure has a singular part".into()));
    }
    Ok(a.parts)
}

/// Whether two measures are equal: each is zero-one relative to the other.
pub fn measures_equal(a: &ScaleMeasure, b: &ScaleMeasure) -> Option<bool> {
    if !selections_trivial(a, b) || !selections_trivial(b, a) {
        return Some(false);
    }
    match (rn_relation(a, b), rn_relation(b, a)) {
        (Relation::Unknown(_), _) | (_, Relation::Unknown(_)) => None,
        (Relation::ZeroOne, Relation::ZeroOne) => Some(true),
        _ => Some(false),
    }
}

fn selections_trivial(a: &ScaleMeasure, b: &ScaleMeasure) -> bool {
    let parts = analyze(a, b).parts;
    parts.iter().all(|p| !matches!(p, RatioPart::Ac { selection: Some(_), .. }))
}

fn mask_on_atom(mask: &Mask, atom: &Atom) -> Result<Mask> {
    Ok(match (atom, mask) {
        (Atom::All, m) => m.clone(),
        (Atom::Off(s), Mask::Full) => Mask::OffCantor(s.clone()),
        (Atom::On(s), Mask::Full) => Mask::OnCantor(s.clone()),
        (_, m @ (Mask::OffCantor(_) | Mask::OnCantor(_))) => m.clone(),
        (_, Mask::InBalls(_)) => return Err(Error::UndecidableDecomposition("selection set inside a fat Cantor cell".into())),
    })
}

/// Splits `lam = abs_part + singular_part` with `abs_part << reference` and
/// `singular_part` singular to it.
pub fn lebesgue_decompose(lam: &ScaleMeasure, reference: &ScaleMeasure) -> Result<Decomposition> {
    let mut abs: Vec<Piece> = Vec::new();
    let mut sing: Vec<Piece> = Vec::new();
    let mut ratio: Vec<RatioPart> = Vec::new();
    for cell in cells(lam, reference) {
        let tn = terms_in(lam, &cell);
        let tm = terms_in(reference, &cell);
        if tn.ac.is_empty() && tn.cantor.is_empty() {
            continue;
        }
        let specs = fat_specs(&[&tn, &tm], &cell);
        if specs.len() > 1 {
            return Err(Error::UndecidableDecomposition(format!("two fat Cantor-type sets meet {cell}")));
        }
        let atoms = match specs.first() {
            None => vec![Atom::All],
            Some(s) => vec![Atom::Off(s.clone()), Atom::On(s.clone())],
        };
        for atom in atoms {
            let m = on_atom(&tm, &atom);
            let target = if m.is_empty() { &mut sing } else { &mut abs };
            if !m.balls.is_empty() {
                let n = on_atom(&tn, &atom);
                if canonical_sum(&n.full) != canonical_sum(&m.full) || n.balls != m.balls {
                    return Err(Error::UndecidableDecomposition(format!("reference selection on {cell}")));
                }
            }
            for (mask, d) in &tn.ac {
                let probe = CellTerms { ac: vec![(mask.clone(), d.clone())], cantor: vec![] };
                if on_atom(&probe, &atom).is_empty() {
                    continue;
                }
                target.push(Piece::Ac(AcPiece { window: cell.clone(), mask: mask_on_atom(mask, &atom)?, density: d.clone() }));
            }
            let n = on_atom(&tn, &atom);
            if !n.is_empty() && !m.is_empty() {
                let sel = n.balls.first().map(|(s, _)| s.clone()).filter(|_| n.full.is_empty() && m.balls.is_empty());
                let mut num = n.full.clone();
                num.extend(n.balls.iter().map(|(_, d)| d.clone()));
                ratio.push(RatioPart::Ac { window: cell.clone(), atom, num: canonical_sum(&num), den: canonical_sum(&m.full), selection: sel });
            }
        }
        for (spec, a) in &tn.cantor {
            let piece = Piece::Cantor(CantorPiece { spec: spec.clone(), scale: a.clone(), window: cell.clone() });
            match tm.cantor.iter().find(|(s, _)| s == spec) {
                Some((_, b)) => {
                    abs.push(piece);
                    ratio.push(RatioPart::Staircase { window: cell.clone(), spec: spec.clone(), num: a.clone(), den: b.clone() });
                }
                None => {
                    if !spec.is_null() && !on_atom(&tm, &Atom::On(spec.clone())).is_empty() {
                        return Err(Error::UndecidableDecomposition(format!("staircase of the fat set {spec} against a density")));
                    }
                    sing.push(piece);
                }
            }
        }
    }
    Ok(Decomposition { ratio, abs_part: ScaleMeasure::from_pieces(abs), singular_part: ScaleMeasure::from_pieces(sing) })
}

fn exponent_of(d: &Density) -> Option<(Real, BigRational)> {
    match d {
        Density::Constant(c) => Some((c.clone(), BigRational::from_integer(0.into()))),
        Density::PowerLaw { coef, exponent } => Some((coef.clone(), exponent.clone())),
        _ => None,
    }
}

/// Whether `x^p` is integrable on the bounded window `w` (inside `[0, inf)` when `p` is not an integer >= 0).
fn power_integrable(p: &BigRational, w: &Window) -> bool {
    let minus_one = BigRational::from_integer((-1).into());
    !(w.lo == ExtReal::zero() && *p <= minus_one)
}

/// Whether `x^p` is bounded above on the bounded window `w`.
fn power_bounded(p: &BigRational, w: &Window) -> bool {
    *p >= BigRational::from_integer(0.into()) || w.lo > ExtReal::zero()
}

/// Whether `x^p` is bounded away from zero on the bounded window `w`.
fn power_bounded_below(p: &BigRational, w: &Window) -> bool {
    *p <= BigRational::from_integer(0.into()) || w.lo > ExtReal::zero()
}

fn density_integrable(d: &Density, w: &Window) -> bool {
    match d {
        Density::Constant(_) | Density::Taper { .. } => true,
        Density::PowerLaw { exponent, .. } => power_integrable(exponent, w),
        Density::PerMember { family, rule } => match rule {
            MemberRule::CoreWeights { .. } => true,
            MemberRule::InverseLength { .. } => !family.members_meeting(w, 0).1,
        },
    }
}

/// Finiteness of `int_w num^2 / den dx` for one numerator term.
fn square_ratio_finite(num: &Density, den: &[Density], w: &Window) -> Result<bool> {
    let single = if den.len() == 1 { Some(&den[0]) } else { None };
    if den.contains(num) || single.map_or(false, |d| canonical_sum(&[d.clone()]) == canonical_sum(&[num.clone()])) {
        return Ok(density_integrable(num, w));
    }
    // The weight constructions bound their own square integrals against the base.
    match num {
        Density::PerMember { rule: MemberRule::CoreWeights { base, .. }, .. } | Density::Taper { base, .. } => {
            if den.iter().any(|d| canonical_sum(&[d.clone()]) == canonical_sum(&[(**base).clone()])) {
                return Ok(true);
            }
        }
        _ => {}
    }
    let mut results = Vec::new();
    for d in den {
        let r = match (exponent_of(num), exponent_of(d)) {
            (Some((_, p)), Some((_, r))) => {
                let e = &p * BigRational::from_integer(2.into()) - &r;
                Some(e == BigRational::from_integer(0.into()) || power_integrable(&e, w))
            }
            (Some((_, p)), None) => match d {
                Density::PerMember { rule: MemberRule::InverseLength { .. }, .. } => {
                    // Sum over members of |J|^2 * sup(num)^2 is at most |hull| * |w| * sup^2.
                    if power_bounded(&p, w) {
                        Some(true)
                    } else {
                        None
                    }
                }
                _ => None,
            },
            (None, Some((_, r))) => match num {
                Density::PerMember { family, rule: MemberRule::InverseLength { .. } } if power_bounded_below(&r, w) => {
                    Some(!family.members_meeting(w, 0).1)
                }
                _ => None,
            },
            (None, None) => match (num, d) {
                (
                    Density::PerMember { family: fa, rule: MemberRule::InverseLength { .. } },
                    Density::PerMember { family: fb, rule: MemberRule::InverseLength { .. } },
                ) if fa == fb => Some(!fa.members_meeting(w, 0).1),
                _ => None,
            },
        };
        results.push(r);
    }
    // A larger denominator only helps: one finite bound suffices.
    if results.iter().any(|r| *r == Some(true)) {
        return Ok(true);
    }
    if den.len() == 1 && results[0] == Some(false) {
        return Ok(false);
    }
    Err(Error::Unsupported(format!("square integrability of {num} against {} terms", den.len())))
}

/// Whether the derivative is square integrable against the reference on
/// every bracket (finite brackets only).
pub fn l2loc_density_check(parts: &[RatioPart], brackets: &[Interval]) -> Result<bool> {
    for b in brackets {
        if !b.left.is_finite() || !b.right.is_finite() {
            return Err(Error::InvalidInput(format!("bracket {b} is not compact")));
        }
        for part in parts {
            let RatioPart::Ac { window, num, den, selection, .. } = part else { continue };
            let w = window.intersect(&b.interior());
            if w.is_empty() || num.is_empty() {
                continue;
            }
            if selection.is_some() || num == den {
                if !den.iter().all(|d| density_integrable(d, &w)) {
                    return Ok(false);
                }
                continue;
            }
            for n in num {
                if !square_ratio_finite(n, den, &w)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// A compact bracket containing every finite breakpoint with room to spare.
pub fn covering_bracket(measures: &[&ScaleMeasure]) -> Interval {
    let mut r = Real::one();
    for m in measures {
        for e in m.breakpoints() {
            if let Some(x) = e.finite() {
                let a = x.abs();
                if a > r {
                    r = a;
                }
            }
        }
    }
    let r = &r + &Real::one();
    Interval::closed(-r.clone(), r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::IntervalFamily;
    use crate::measure::Precision;
    use crate::thinned::ThinnedSet;

    fn leb() -> ScaleMeasure {
        ScaleMeasure::lebesgue(Window::full())
    }

    fn staircase() -> ScaleMeasure {
        ScaleMeasure::cantor(CantorSpec::standard(), Real::one())
    }

    fn unit_gaps_measure() -> ScaleMeasure {
        let fam = IntervalFamily::cantor_gaps(CantorSpec::standard(), true);
        let d = Density::PerMember { family: fam, rule: MemberRule::InverseLength { mass: Real::one() } };
        ScaleMeasure::density(Window::new(ExtReal::int(0), ExtReal::int(1)), d).unwrap()
    }

    #[test]
    fn basic_relations() {
        assert_eq!(rn_relation(&leb(), &leb()), Relation::ZeroOne);
        assert_eq!(rn_relation(&staircase(), &leb()), Relation::Singular);
        let half = ScaleMeasure::lebesgue(Window::new(ExtReal::zero(), ExtReal::PosInf));
        assert_eq!(rn_relation(&half, &leb()), Relation::ZeroOne);
        assert_eq!(rn_relation(&leb(), &half), Relation::Mixed);
        assert!(matches!(rn_relation(&leb().scaled(&Real::int(2)), &leb()), Relation::AcGeneral(_)));
        assert_eq!(rn_relation(&ScaleMeasure::zero(), &leb()), Relation::ZeroOne);
        assert_eq!(rn_relation(&leb().add(&staircase()), &leb()), Relation::Mixed);
    }

    #[test]
    fn thinned_scale_is_zero_one() {
        let p = Precision::default();
        let unit = Interval::closed(Real::zero(), Real::one());
        let t = ThinnedSet::build(&unit, &leb(), BigRational::new(1.into(), 10.into()), 20, &p).unwrap();
        let thin = t.measure().unwrap();
        assert_eq!(rn_relation(&thin, &leb()), Relation::ZeroOne);
        assert_eq!(measures_equal(&thin, &ScaleMeasure::lebesgue(unit.interior())), Some(false));
    }

    #[test]
    fn decomposition_splits_staircase() {
        let lam = leb().add(&staircase());
        let d = lebesgue_decompose(&lam, &leb()).unwrap();
        assert_eq!(d.abs_part, leb());
        assert_eq!(d.singular_part, staircase());
        let z = lebesgue_decompose(&ScaleMeasure::zero(), &leb()).unwrap();
        assert!(z.abs_part.is_zero() && z.singular_part.is_zero());
    }

    #[test]
    fn square_integrability() {
        let b = vec![Interval::closed(Real::int(0), Real::int(1))];
        // dx against unit-mass gaps: sum of squared gap lengths converges.
        let parts = density_ratio(&ScaleMeasure::lebesgue(Window::new(ExtReal::int(0), ExtReal::int(1))), &unit_gaps_measure());
        let parts = parts.unwrap();
        assert!(l2loc_density_check(&parts, &b).unwrap());
        // 1/x against dx near 0 diverges.
        let recip = ScaleMeasure::density(Window::new(ExtReal::zero(), ExtReal::PosInf), Density::reciprocal()).unwrap();
        let parts = density_ratio(&recip, &leb()).unwrap();
        assert!(!l2loc_density_check(&parts, &b).unwrap());
        let parts = density_ratio(&leb(), &leb()).unwrap();
        assert!(l2loc_density_check(&parts, &b).unwrap());
    }

    #[test]
    fn equality_is_mutual() {
        assert_eq!(measures_equal(&leb(), &leb()), Some(true));
        assert_eq!(measures_equal(&leb(), &leb().add(&staircase())), Some(false));
    }
}
