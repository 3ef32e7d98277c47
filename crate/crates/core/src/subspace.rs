//! Subspace and equality checks between two systems on the same state
//! space with the same speed measure.

use crate::error::{Error, Result, Verdict};
use crate::family::coarser_than;
use crate::measure::{Precision, ScaleMeasure};
use crate::relation::{measures_equal, rn_relation, Relation};
use crate::system::{all_conditions, Condition, EffectiveSystem, MemberBoundary};

#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceReport {
    pub verdict: Verdict,
    pub conditions: Vec<Condition>,
    /// Boundary classes of the candidate's members.
    pub boundaries: Vec<MemberBoundary>,
}

impl SubspaceReport {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn same_frame(a: &EffectiveSystem, b: &EffectiveSystem) -> Result<()> {
    if a.state != b.state {
        return Err(Error::StateSpaceMismatch(a.state.to_string(), b.state.to_string()));
    }
    if a.speed != b.speed && measures_equal(&a.speed, &b.speed) != Some(true) {
        return Err(Error::SpeedMismatch);
    }
    Ok(())
}

fn killing_condition(a: &EffectiveSystem, b: &EffectiveSystem) -> Condition {
    let zero = ScaleMeasure::zero();
    let ka = a.killing.as_ref().unwrap_or(&zero);
    let kb = b.killing.as_ref().unwrap_or(&zero);
    let v = if ka == kb {
        Verdict::True
    } else {
        match measures_equal(ka, kb) {
            Some(b) => Verdict::from_bool(b),
            None => Verdict::Undecidable("killing measures not comparable".into()),
        }
    };
    Condition::new("cond_killing", v, format!("killing {ka} versus {kb}"))
}

fn validity_condition(name: &str, s: &EffectiveSystem, prec: &Precision) -> Condition {
    let r = s.validate(prec);
    let failed: Vec<String> = r.conditions.iter().filter(|c| !c.verdict.is_true()).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    Condition::new(name, r.verdict, if failed.is_empty() { "effective".to_string() } else { failed.join("; ") })
}

/// Whether `cand` describes a regular Dirichlet subspace of `parent`:
/// every parent interval lies in a candidate interval, the candidate scale
/// measure is the parent one cut to a set, and the killing measures agree.
pub fn check_subspace(cand: &EffectiveSystem, parent: &EffectiveSystem, prec: &Precision) -> Result<SubspaceReport> {
    same_frame(cand, parent)?;
    let mut conds = vec![validity_condition("candidate_effective", cand, prec), validity_condition("parent_effective", parent, prec)];

    let coarse = match coarser_than(&cand.entries, &parent.entries) {
        Ok(b) => Verdict::from_bool(b),
        Err(e) => Verdict::Undecidable(e.to_string()),
    };
    conds.push(Condition::new("cond_coarser", coarse, "every parent interval inside a candidate interval"));

    let lc = cand.scale_measure_of()?;
    let lp = parent.scale_measure_of()?;
    let rel = rn_relation(&lc, &lp);
    let v = match &rel {
        Relation::ZeroOne => Verdict::True,
        Relation::Unknown(s) => Verdict::Undecidable(s.clone()),
        _ => Verdict::False,
    };
    conds.push(Condition::new("cond_scale", v, format!("candidate scale relative to parent: {}", rel.name())));

    conds.push(killing_condition(cand, parent));
    Ok(SubspaceReport { verdict: all_conditions(&conds), conditions: conds, boundaries: cand.boundaries() })
}

/// Whether two systems have the same intervals, scale measures and killing.
pub fn check_equality(a: &EffectiveSystem, b: &EffectiveSystem, _prec: &Precision) -> Result<SubspaceReport> {
    same_frame(a, b)?;
    let mut conds = Vec::new();
    let both = coarser_than(&a.entries, &b.entries).and_then(|x| Ok(x && coarser_than(&b.entries, &a.entries)?));
    let v = match both {
        Ok(x) => Verdict::from_bool(x),
        Err(e) => Verdict::Undecidable(e.to_string()),
    };
    conds.push(Condition::new("same_intervals", v, "each system coarser than the other"));

    let la = a.scale_measure_of()?;
    let lb = b.scale_measure_of()?;
    let v = if la == lb {
        Verdict::True
    } else {
        match measures_equal(&la, &lb) {
            Some(x) => Verdict::from_bool(x),
            None => Verdict::Undecidable("scale measures not comparable".into()),
        }
    };
    conds.push(Condition::new("same_scale", v, "equal scale measures"));
    conds.push(killing_condition(a, b));
    Ok(SubspaceReport { verdict: all_conditions(&conds), conditions: conds, boundaries: a.boundaries() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::CantorSpec;
    use crate::family::IntervalFamily;
    use crate::interval::{Interval, Window};
    use crate::real::{ExtReal, Real};

    fn leb() -> ScaleMeasure {
        ScaleMeasure::lebesgue(Window::full())
    }

    fn bm() -> EffectiveSystem {
        EffectiveSystem::new(Interval::real_line(), leb(), vec![IntervalFamily::single(Interval::real_line())], leb(), None)
    }

    fn trap() -> EffectiveSystem {
        EffectiveSystem::new(
            Interval::real_line(),
            leb(),
            vec![
                IntervalFamily::single(Interval::new(ExtReal::NegInf, ExtReal::int(0), false, true).unwrap()),
                IntervalFamily::cantor_gaps(CantorSpec::standard(), true),
                IntervalFamily::single(Interval::new(ExtReal::int(1), ExtReal::PosInf, true, false).unwrap()),
            ],
            leb(),
            None,
        )
    }

    #[test]
    fn trap_and_motion() {
        let p = Precision::default();
        assert!(check_subspace(&bm(), &trap(), &p).unwrap().verdict.is_true());
        let r = check_subspace(&trap(), &bm(), &p).unwrap();
        assert!(r.verdict.is_false());
        assert!(r.condition("cond_coarser").unwrap().verdict.is_false());
        assert!(check_subspace(&trap(), &trap(), &p).unwrap().verdict.is_true());
        assert!(check_equality(&trap(), &trap(), &p).unwrap().verdict.is_true());
        assert!(check_equality(&trap(), &bm(), &p).unwrap().verdict.is_false());
    }

    #[test]
    fn frame_mismatches() {
        let p = Precision::default();
        let mut other = bm();
        other.speed = leb().scaled(&Real::int(2));
        assert!(matches!(check_subspace(&other, &bm(), &p), Err(Error::SpeedMismatch)));
        other = bm();
        other.state = Interval::new(ExtReal::zero(), ExtReal::PosInf, true, false).unwrap();
        assert!(matches!(check_subspace(&other, &bm(), &p), Err(Error::StateSpaceMismatch(..))));
    }

    #[test]
    fn killing_must_agree() {
        let p = Precision::default();
        let k = ScaleMeasure::lebesgue(Window::new(ExtReal::int(0), ExtReal::int(1)));
        let mut a = bm();
        a.killing = Some(k.clone());
        let mut b = bm();
        b.killing = Some(k.scaled(&Real::int(2)));
        let r = check_subspace(&a, &b, &p).unwrap();
        assert!(r.verdict.is_false());
        assert!(r.condition("cond_killing").unwrap().verdict.is_false());
        b.killing = Some(k);
        assert!(check_subspace(&a, &b, &p).unwrap().verdict.is_true());
    }
}
