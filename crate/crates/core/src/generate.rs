//! Subspaces generated by a strictly increasing function `f` on the state
//! space, and special standard cores.
//!
//! `df` splits into the part on the intervals and the trivial part off
//! them. The generated subspace keeps the part of each scale measure that is
//! absolutely continuous to `df`, then merges intervals that the trivial
//! part of `df` does not separate.

use num_rational::BigRational;

use crate::cantor::CantorSpec;
use crate::error::{Error, Result, Verdict};
use crate::family::FamilyKind;
use crate::interval::{Interval, Window};
use crate::measure::{regions, AcPiece, CantorPiece, Density, Mask, Mass, MemberRule, Piece, Precision, Region, ScaleMeasure};
use crate::merge::merge_class;
use crate::partition::{partition, Partition, RelationKind};
use crate::real::{ExtReal, Real};
use crate::relation::{covering_bracket, density_ratio, l2loc_density_check, lebesgue_decompose, rn_relation, Relation};
use crate::subspace::check_equality;
use crate::system::{all_conditions, dense_cover, Condition, EffectiveSystem};

/// The measure `df` of a continuous strictly increasing function on the
/// state space.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorScale {
    measure: ScaleMeasure,
}

impl GeneratorScale {
    /// Accepts a measure that is Radon on the state space and whose fully
    /// supported pieces have closures covering it.
    pub fn new(measure: ScaleMeasure, state: &Interval) -> Result<GeneratorScale> {
        let inside = state.interior();
        if !measure.locally_finite_on(&inside) {
            return Err(Error::InvalidInput(format!("{measure} is not locally finite on {state}")));
        }
        if !dense_cover(&measure, &inside) {
            return Err(Error::InvalidInput(format!("{measure} does not give a strictly increasing function on {state}")));
        }
        Ok(GeneratorScale { measure: measure.restrict_to_window(&inside) })
    }

    /// `f(x) = x`.
    pub fn identity(state: &Interval) -> GeneratorScale {
        GeneratorScale { measure: ScaleMeasure::lebesgue(state.interior()) }
    }

    pub fn measure(&self) -> &ScaleMeasure {
        &self.measure
    }
}

/// `df` on the intervals and off them.
#[derive(Clone, Debug, PartialEq)]
pub struct FSplit {
    pub extended: ScaleMeasure,
    pub trivial: ScaleMeasure,
}

pub fn split(system: &EffectiveSystem, f: &GeneratorScale) -> Result<FSplit> {
    Ok(FSplit {
        extended: f.measure.restrict_to_union(&system.entries)?,
        trivial: f.measure.restrict_to_complement(&system.entries)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub verdict: Verdict,
    pub conditions: Vec<Condition>,
}

fn relation_verdict(rel: &Relation) -> Verdict {
    match rel {
        r if r.is_absolutely_continuous() => Verdict::True,
        Relation::Unknown(s) => Verdict::Undecidable(s.clone()),
        _ => Verdict::False,
    }
}

/// Compact brackets of the state space covering every breakpoint. An open
/// finite state endpoint is stepped over by a tiny margin.
fn state_brackets(state: &Interval, measures: &[&ScaleMeasure]) -> Vec<Interval> {
    let cover = covering_bracket(measures);
    let margin = Real::Exact(BigRational::new(1.into(), num_bigint::BigInt::from(1u64) << 40));
    let lo = match state.left.finite() {
        Some(l) if ExtReal::Finite(l.clone()) > cover.left => {
            if state.left_closed {
                l.clone()
            } else {
                l + &margin
            }
        }
        _ => cover.left.finite().unwrap().clone(),
    };
    let hi = match state.right.finite() {
        Some(r) if ExtReal::Finite(r.clone()) < cover.right => {
            if state.right_closed {
                r.clone()
            } else {
                r - &margin
            }
        }
        _ => cover.right.finite().unwrap().clone(),
    };
    if lo < hi {
        vec![Interval::closed(lo, hi)]
    } else {
        vec![]
    }
}

/// Whether `df` on the intervals is absolutely continuous to the scale
/// measure with a locally square integrable derivative.
pub fn cf_admissible(system: &EffectiveSystem, f: &GeneratorScale) -> Result<ConditionReport> {
    let sp = split(system, f)?;
    let lam = system.scale_measure_of()?;
    let rel = rn_relation(&sp.extended, &lam);
    let mut conds = vec![Condition::new("f_absolutely_continuous", relation_verdict(&rel), format!("df on the intervals relative to the scale measure: {}", rel.name()))];
    if rel.is_absolutely_continuous() {
        let parts = density_ratio(&sp.extended, &lam)?;
        let brackets = state_brackets(&system.state, &[&sp.extended, &lam]);
        let v = match l2loc_density_check(&parts, &brackets) {
            Ok(b) => Verdict::from_bool(b),
            Err(e) => Verdict::Undecidable(e.to_string()),
        };
        conds.push(Condition::new("f_square_integrable", v, "derivative locally square integrable against the scale measure"));
    }
    Ok(ConditionReport { verdict: all_conditions(&conds), conditions: conds })
}

/// The system generated by `f`, with the intermediate pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct FSubspace {
    /// The part of the scale measure absolutely continuous to `df`.
    pub abs_scale: ScaleMeasure,
    pub partition: Partition,
    pub system: EffectiveSystem,
}

pub fn f_subspace(system: &EffectiveSystem, f: &GeneratorScale, prec: &Precision) -> Result<FSubspace> {
    let adm = cf_admissible(system, f)?;
    match &adm.verdict {
        Verdict::True => {}
        Verdict::False => {
            let why: Vec<String> = adm.conditions.iter().filter(|c| c.verdict.is_false()).map(|c| c.detail.clone()).collect();
            return Err(Error::InvalidInput(format!("f is not admissible: {}", why.join("; "))));
        }
        Verdict::Undecidable(s) => return Err(Error::UndecidableDecomposition(s.clone())),
    }
    let sp = split(system, f)?;
    let lam = system.scale_measure_of()?;
    let abs_scale = lebesgue_decompose(&lam, &sp.extended)?.abs_part;
    let pre = system.with_parts(system.entries.clone(), abs_scale.clone());
    let part = partition(&pre.entries, &abs_scale, RelationKind::FScale { trivial: &sp.trivial })?;
    let entries = part.classes.iter().map(|c| merge_class(&pre, c, prec)).collect::<Result<Vec<_>>>()?;
    Ok(FSubspace { abs_scale: abs_scale.clone(), partition: part, system: pre.with_parts(entries, abs_scale) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoreReport {
    pub verdict: Verdict,
    pub conditions: Vec<Condition>,
    /// Whether the generated subspace equals the system; must agree with
    /// `verdict` when both are decided.
    pub generates_system: Verdict,
}

/// Whether functions `phi(f)` form a special standard core of the system.
pub fn core_check(system: &EffectiveSystem, f: &GeneratorScale, prec: &Precision) -> Result<CoreReport> {
    let adm = cf_admissible(system, f)?;
    let mut conds = adm.conditions.clone();
    let sp = split(system, f)?;
    let lam = system.scale_measure_of()?;
    let rel = rn_relation(&lam, &sp.extended);
    conds.push(Condition::new("scale_absolutely_continuous", relation_verdict(&rel), format!("scale measure relative to df on the intervals: {}", rel.name())));
    let isolated = match partition(&system.entries, &lam, RelationKind::FScale { trivial: &sp.trivial }) {
        Ok(p) => Verdict::from_bool(p.all_singletons()),
        Err(e) => Verdict::Undecidable(e.to_string()),
    };
    conds.push(Condition::new("f_scale_isolated", isolated, "no two intervals joined by the trivial part of df"));
    let verdict = all_conditions(&conds);
    let generates_system = match f_subspace(system, f, prec) {
        Ok(sub) => check_equality(&sub.system, system, prec).map(|r| r.verdict).unwrap_or_else(|e| Verdict::Undecidable(e.to_string())),
        Err(Error::InvalidInput(_)) => Verdict::False,
        Err(e) => Verdict::Undecidable(e.to_string()),
    };
    Ok(CoreReport { verdict, conditions: conds, generates_system })
}

/// A constructed core generator `df = lambda1 + lambda2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreConstruction {
    pub generator: GeneratorScale,
    /// Weighted scale measures on the intervals.
    pub lambda1: ScaleMeasure,
    /// Lebesgue measure off the intervals plus staircase measures on the
    /// Cantor-type parts of their boundary.
    pub lambda2: ScaleMeasure,
    pub lambda1_mass: Mass,
}

/// Builds `f` with `df = sum_n g_n ds_n + dx|_{open complement} + dc_K`,
/// where member `n` gets weight at most `1/n^2` in mass and in squared
/// density. The intervals are numbered entry by entry: member `k` of entry
/// `e` is `n = k * E + e + 1`.
pub fn construct_core_scale(system: &EffectiveSystem, prec: &Precision) -> Result<CoreConstruction> {
    let stride = system.entries.len() as u64;
    let mut l1 = Vec::new();
    for (e, fam) in system.entries.iter().enumerate() {
        let own = system.scale.restrict_to_union(std::slice::from_ref(fam))?;
        let hull = fam.hull().unwrap().interior();
        for p in own.pieces() {
            let Piece::Ac(a) = p else {
                return Err(Error::Unsupported(format!("core weights against the singular scale on {fam}")));
            };
            if fam.is_explicit() || fam.is_finite() {
                for (_, iv) in fam.members(usize::MAX) {
                    if iv.interior().overlaps(&a.window) && !a.window.contains_window(&iv.interior()) {
                        return Err(Error::Unsupported(format!("scale on {iv} is not a single density")));
                    }
                }
            } else if !a.window.contains_window(&hull) {
                return Err(Error::Unsupported(format!("scale on {fam} is not a single density")));
            }
            // Per-member weights vanish off the gaps already.
            let mask = match (&a.mask, &fam.kind) {
                (Mask::OffCantor(m), FamilyKind::CantorGaps { spec, .. }) if m == spec => Mask::Full,
                (m, _) => m.clone(),
            };
            let density = Density::PerMember {
                family: fam.clone(),
                rule: MemberRule::CoreWeights { stride, offset: e as u64, base: Box::new(a.density.clone()) },
            };
            l1.push(Piece::Ac(AcPiece { window: a.window.clone(), mask, density }));
        }
    }
    let lambda1 = ScaleMeasure::from_pieces(l1);

    let mut l2 = Vec::new();
    for (cell, region) in regions(&system.state.interior(), &system.entries) {
        if region == Region::Outside {
            l2.push(Piece::Ac(AcPiece::new(cell, Mask::Full, Density::lebesgue())?));
        }
    }
    let mut seen: Vec<(CantorSpec, Window)> = Vec::new();
    for fam in &system.entries {
        if let FamilyKind::CantorGaps { spec, .. } = &fam.kind {
            let w = fam.hull().unwrap().interior();
            if seen.iter().any(|(s, v)| s == spec && v.overlaps(&w)) {
                return Err(Error::UnrepresentableKernel(format!("two families share the boundary set of {spec}")));
            }
            seen.push((spec.clone(), w.clone()));
            l2.push(Piece::Cantor(CantorPiece { spec: spec.clone(), scale: Real::one(), window: w }));
        }
    }
    let lambda2 = ScaleMeasure::from_pieces(l2);
    let summary = Precision { max_members: prec.max_members.min(512), ..*prec };
    let lambda1_mass = lambda1.mass(&Window::full(), &summary)?;
    let generator = GeneratorScale::new(lambda1.add(&lambda2), &system.state)?;
    Ok(CoreConstruction { generator, lambda1, lambda2, lambda1_mass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SameSubspaceReport {
    /// Whether the two generated subspaces are equal.
    pub verdict: Verdict,
    /// `df1` and `df2` mutually absolutely continuous (sufficient).
    pub mutually_continuous: Verdict,
}

pub fn same_subspace_from(system: &EffectiveSystem, f1: &GeneratorScale, f2: &GeneratorScale, prec: &Precision) -> Result<SameSubspaceReport> {
    let a = relation_verdict(&rn_relation(f1.measure(), f2.measure()));
    let b = relation_verdict(&rn_relation(f2.measure(), f1.measure()));
    let mutually_continuous = a.and(b);
    let s1 = f_subspace(system, f1, prec)?;
    let s2 = f_subspace(system, f2, prec)?;
    let verdict = check_equality(&s1.system, &s2.system, prec)?.verdict;
    Ok(SameSubspaceReport { verdict, mutually_continuous })
}
