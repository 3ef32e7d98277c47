//! Scale shrinking and interval merging.
//!
//! Merging never changes the scale measure: a merged interval inherits the
//! measure already carried by its parts, and its endpoints are decided by
//! finiteness of that measure.

use num_rational::BigRational;

use crate::cantor::CantorSpec;
use crate::error::{Error, Result};
use crate::family::{FamilyKind, IntervalFamily};
use crate::interval::{Interval, Window};
use crate::measure::{Precision, ScaleMeasure};
use crate::partition::{partition, Block, Class, Partition, RelationKind};
use crate::real::ExtReal;
use crate::system::{endpoint_included, EffectiveSystem};
use crate::thinned::ThinnedSet;

/// How a pre-merging plan pairs points inside the loose classes.
#[derive(Clone, Debug, PartialEq)]
pub enum MergePlan {
    /// Pair every interval with itself: nothing changes.
    EachMember,
    /// Explicit `(left, right)` pre-merging point pairs.
    Pairs(Vec<(ExtReal, ExtReal)>),
}

/// Which part of an interval's scale measure to keep.
#[derive(Clone, Debug, PartialEq)]
pub enum Selection {
    Full,
    /// Union of open windows; must be dense up to finitely many points.
    Windows(Vec<Window>),
    /// Everything off a Cantor-type set.
    OffCantor(CantorSpec),
    /// A thinned open set of small measure, dense in the interval.
    Thinned { eps: BigRational, depth: usize },
}

/// Selections per entry; entries not listed use `default`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkSpec {
    pub default: Selection,
    pub per_entry: Vec<(usize, Selection)>,
}

impl ShrinkSpec {
    pub fn identity() -> ShrinkSpec {
        ShrinkSpec { default: Selection::Full, per_entry: vec![] }
    }

    fn selection(&self, entry: usize) -> &Selection {
        self.per_entry.iter().find(|(e, _)| *e == entry).map(|(_, s)| s).unwrap_or(&self.default)
    }
}

/// Stages of the full construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutput {
    pub shrunk: EffectiveSystem,
    pub minimal: EffectiveSystem,
    pub output: EffectiveSystem,
}

/// The smallest interval containing a class, with endpoints decided by the
/// scale measure; a family of singletons keeps its members and only gets
/// its endpoint flags recomputed.
pub fn merge_class(system: &EffectiveSystem, class: &Class, prec: &Precision) -> Result<IntervalFamily> {
    match class {
        Class::Joined(blocks) => {
            let span = class.span();
            let open = Interval::new(span.left.clone(), span.right.clone(), false, false)?;
            let l = endpoint_included(&system.state, &system.scale, &open, false);
            let r = endpoint_included(&system.state, &system.scale, &open, true);
            // A single explicit member keeps its identity when nothing changes.
            if let [Block::Member { interval, .. }] = blocks.as_slice() {
                return Ok(IntervalFamily::single(interval.with_flags(l, r)));
            }
            Ok(IntervalFamily::single(open.with_flags(l, r)))
        }
        Class::EachMember { family, .. } => {
            let mut flags: Option<(bool, bool)> = None;
            for (_, iv) in family.members(prec.prefix) {
                let f = (system.endpoint_included(&iv, false), system.endpoint_included(&iv, true));
                match flags {
                    None => flags = Some(f),
                    Some(g) if g != f => {
                        return Err(Error::Unsupported(format!("members of {family} need different endpoint flags")));
                    }
                    _ => {}
                }
            }
            let (l, r) = flags.unwrap_or((false, false));
            family.with_flags(l, r)
        }
    }
}

fn merge_partition(system: &EffectiveSystem, p: &Partition, prec: &Precision) -> Result<EffectiveSystem> {
    let entries = p.classes.iter().map(|c| merge_class(system, c, prec)).collect::<Result<Vec<_>>>()?;
    Ok(system.with_parts(entries, system.scale.clone()))
}

/// The tight partition of a (possibly pre-effective) system.
pub fn tight_partition(system: &EffectiveSystem) -> Result<Partition> {
    partition(&system.entries, &system.scale, RelationKind::Tight)
}

/// The loose partition of a (possibly pre-effective) system.
pub fn loose_partition(system: &EffectiveSystem) -> Result<Partition> {
    partition(&system.entries, &system.scale, RelationKind::Loose)
}

/// Merges tight classes: the least effective system at or above a
/// pre-effective one.
pub fn minimal_merge(system: &EffectiveSystem, prec: &Precision) -> Result<EffectiveSystem> {
    merge_partition(system, &tight_partition(system)?, prec)
}

/// Merges loose classes: the largest system with the same scale measure.
pub fn maximal_merge(system: &EffectiveSystem, prec: &Precision) -> Result<EffectiveSystem> {
    merge_partition(system, &loose_partition(system)?, prec)
}

/// Checks a plan against the loose classes of an effective system.
pub fn validate_plan(system: &EffectiveSystem, plan: &MergePlan) -> Result<()> {
    let MergePlan::Pairs(pairs) = plan else { return Ok(()) };
    let loose = loose_partition(system)?;
    for (x, y) in pairs {
        if x >= y {
            return Err(Error::InvalidPreMergingPoint { point: format!("{x}"), reason: format!("left point not below right point {y}") });
        }
        let inside = loose.classes.iter().any(|c| {
            let s = c.span();
            s.left <= *x && *y <= s.right && match c {
                Class::Joined(_) => true,
                // Inside a class of singletons only a member's own ends pair up.
                Class::EachMember { family, .. } => match x.finite() {
                    Some(a) => family.member_with_endpoint(a, false).map_or(false, |(_, m)| m.right == *y),
                    None => false,
                },
            }
        });
        if !inside {
            return Err(Error::InvalidPreMergingPoint {
                point: format!("{x}"),
                reason: format!("[{x}, {y}] does not lie in one loose class"),
            });
        }
        check_point(system, x, false)?;
        check_point(system, y, true)?;
    }
    let mut sorted: Vec<&(ExtReal, ExtReal)> = pairs.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for w in sorted.windows(2) {
        if w[0].1 >= w[1].0 {
            return Err(Error::OverlappingPairs(format!("[{}, {}] and [{}, {}]", w[0].0, w[0].1, w[1].0, w[1].1)));
        }
    }
    Ok(())
}

/// A left point must start some interval or lie outside all of them; a
/// right point must end some interval or lie outside all of them.
fn check_point(system: &EffectiveSystem, x: &ExtReal, right: bool) -> Result<()> {
    let Some(p) = x.finite() else { return Ok(()) };
    let on_end = system.entries.iter().any(|f| f.member_with_endpoint(p, right).is_some());
    let covered = system.entries.iter().any(|f| f.covers(p));
    if on_end || !covered {
        return Ok(());
    }
    let side = if right { "right" } else { "left" };
    Err(Error::InvalidPreMergingPoint {
        point: p.to_string(),
        reason: format!("lies in an interval but is not its {side} endpoint"),
    })
}

/// Merges each planned bracket into one interval.
pub fn optional_merge(system: &EffectiveSystem, plan: &MergePlan) -> Result<EffectiveSystem> {
    validate_plan(system, plan)?;
    let MergePlan::Pairs(pairs) = plan else { return Ok(system.clone()) };
    let mut entries = system.entries.clone();
    for (x, y) in pairs {
        // A pair spanning exactly one interval leaves it unchanged.
        let existing = x.finite().map_or(false, |a| {
            entries.iter().any(|f| f.member_with_endpoint(a, false).map_or(false, |(_, m)| m.right == *y))
        });
        if existing {
            continue;
        }
        let mut next = Vec::new();
        for f in entries {
            match &f.kind {
                FamilyKind::Explicit(m) => {
                    let kept: Vec<Interval> = m.iter().filter(|iv| !(iv.left >= *x && iv.right <= *y)).cloned().collect();
                    if !kept.is_empty() {
                        next.push(IntervalFamily::explicit(kept));
                    }
                }
                _ => {
                    let (lo, hi) = f.clip_range();
                    if let Some(a) = f.clipped(&lo, x) {
                        next.push(a);
                    }
                    if let Some(b) = f.clipped(y, &hi) {
                        next.push(b);
                    }
                }
            }
        }
        let open = Interval::new(x.clone(), y.clone(), false, false)?;
        let l = endpoint_included(&system.state, &system.scale, &open, false);
        let r = endpoint_included(&system.state, &system.scale, &open, true);
        next.push(IntervalFamily::single(open.with_flags(l, r)));
        entries = next;
    }
    Ok(system.with_parts(entries, system.scale.clone()))
}

/// The thinned scale on an interval: the base measure restricted to a
/// dense open set of measure below `eps`.
pub fn thinned_scale(interval: &Interval, base: &ScaleMeasure, eps: BigRational, depth: usize, prec: &Precision) -> Result<(ThinnedSet, ScaleMeasure)> {
    let t = ThinnedSet::build(interval, base, eps, depth, prec)?;
    let m = t.measure()?;
    Ok((t, m))
}

/// Restricts each entry's scale measure to its selection. Intervals are
/// kept as they are, so the result is in general only pre-effective.
pub fn shrink(system: &EffectiveSystem, spec: &ShrinkSpec, prec: &Precision) -> Result<EffectiveSystem> {
    let mut parts = Vec::new();
    for (e, f) in system.entries.iter().enumerate() {
        let own = system.scale.restrict_to_union(std::slice::from_ref(f))?;
        parts.push(select(&own, f, spec.selection(e), prec)?);
    }
    Ok(system.with_parts(system.entries.clone(), ScaleMeasure::sum(parts)))
}

fn select(own: &ScaleMeasure, f: &IntervalFamily, sel: &Selection, prec: &Precision) -> Result<ScaleMeasure> {
    match sel {
        Selection::Full => Ok(own.clone()),
        Selection::Windows(ws) => {
            let mut targets: Vec<Window> = f.members(prec.prefix).into_iter().map(|(_, iv)| iv.interior()).collect();
            if !f.is_explicit() {
                targets.extend(f.hull().map(|h| h.interior()));
            }
            for t in &targets {
                if !closures_cover(ws, t) {
                    return Err(Error::NotDense(format!("windows miss an open part of {t}")));
                }
            }
            Ok(ScaleMeasure::sum(ws.iter().map(|w| own.restrict_to_window(w))))
        }
        Selection::OffCantor(spec) => {
            let base = spec.base_window();
            let outside = base_complement(&base).into_iter().map(|w| own.restrict_to_window(&w));
            let gaps = IntervalFamily::cantor_gaps(spec.clone(), true);
            let inside = own.restrict_to_window(&base).restrict_to_union(&[gaps])?;
            Ok(ScaleMeasure::sum(outside.chain(std::iter::once(inside))))
        }
        Selection::Thinned { eps, depth } => {
            let FamilyKind::Explicit(members) = &f.kind else {
                return Err(Error::Unsupported(format!("thinned selection on the generator family {f}")));
            };
            let mut out = Vec::new();
            let mut share = eps.clone();
            let two = BigRational::from_integer(2.into());
            for (i, iv) in members.iter().enumerate() {
                // Split the budget so the total stays below `eps`.
                let e = if i + 1 == members.len() { share.clone() } else { &share / &two };
                share = &share - &e;
                let base = own.restrict_to_window(&iv.interior());
                out.push(thinned_scale(iv, &base, e, *depth, prec)?.1);
            }
            Ok(ScaleMeasure::sum(out))
        }
    }
}

fn base_complement(base: &Window) -> Vec<Window> {
    vec![Window::new(ExtReal::NegInf, base.lo.clone()), Window::new(base.hi.clone(), ExtReal::PosInf)]
}

/// Whether the closures of the windows cover `target`.
fn closures_cover(ws: &[Window], target: &Window) -> bool {
    let mut spans: Vec<&Window> = ws.iter().filter(|w| !w.is_empty()).collect();
    spans.sort();
    let mut reach = target.lo.clone();
    for s in spans {
        if s.hi <= reach {
            continue;
        }
        if s.lo > reach {
            return false;
        }
        reach = s.hi.clone();
    }
    reach >= target.hi
}

/// Shrink, then the minimal merge, then the optional merge.
pub fn pipeline(system: &EffectiveSystem, spec: &ShrinkSpec, plan: &MergePlan, prec: &Precision) -> Result<PipelineOutput> {
    let shrunk = shrink(system, spec, prec)?;
    let minimal = minimal_merge(&shrunk, prec)?;
    let output = optional_merge(&minimal, plan)?;
    Ok(PipelineOutput { shrunk, minimal, output })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Real;

    fn leb() -> ScaleMeasure {
        ScaleMeasure::lebesgue(Window::full())
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
    fn trap_merges() {
        let p = Precision::default();
        let s = trap();
        assert_eq!(minimal_merge(&s, &p).unwrap(), s);
        let max = maximal_merge(&s, &p).unwrap();
        assert_eq!(max.entries, vec![IntervalFamily::single(Interval::real_line())]);
    }

    #[test]
    fn plans_on_the_trap() {
        let s = trap();
        let plan = MergePlan::Pairs(vec![(ExtReal::NegInf, ExtReal::ratio(2, 3))]);
        let out = optional_merge(&s, &plan).unwrap();
        assert_eq!(out.entries[0].hull().unwrap().to_string(), "(-inf, 2/3]");
        assert_eq!(out.entries.len(), 3);
        let bad = MergePlan::Pairs(vec![(ExtReal::ratio(2, 3), ExtReal::int(1))]);
        assert!(matches!(optional_merge(&s, &bad), Err(Error::InvalidPreMergingPoint { .. })));
        let trivial = MergePlan::Pairs(vec![(ExtReal::ratio(1, 3), ExtReal::ratio(2, 3))]);
        assert_eq!(optional_merge(&s, &trivial).unwrap(), s);
        let overlap = MergePlan::Pairs(vec![(ExtReal::NegInf, ExtReal::ratio(2, 3)), (ExtReal::ratio(1, 3), ExtReal::ratio(8, 9))]);
        assert!(matches!(validate_plan(&s, &overlap), Err(Error::OverlappingPairs(_))));
    }

    #[test]
    fn split_at_zero_joins() {
        let unit = Window::new(ExtReal::int(-1), ExtReal::int(1));
        let s = EffectiveSystem::new(
            Interval::real_line(),
            leb(),
            vec![
                IntervalFamily::single(Interval::new(ExtReal::int(-1), ExtReal::int(0), true, false).unwrap()),
                IntervalFamily::single(Interval::new(ExtReal::int(0), ExtReal::int(1), false, true).unwrap()),
            ],
            ScaleMeasure::lebesgue(unit),
            None,
        );
        let out = pipeline(&s, &ShrinkSpec::identity(), &MergePlan::EachMember, &Precision::default()).unwrap();
        assert_eq!(out.output.entries, vec![IntervalFamily::single(Interval::closed(Real::int(-1), Real::int(1)))]);
    }

    #[test]
    fn selections() {
        let p = Precision::default();
        let unit = Interval::closed(Real::zero(), Real::one());
        let s = EffectiveSystem::new(Interval::real_line(), leb(), vec![IntervalFamily::single(unit.clone())], ScaleMeasure::lebesgue(unit.interior()), None);
        let half = Window::new(ExtReal::zero(), ExtReal::ratio(1, 2));
        let rest = Window::new(ExtReal::ratio(1, 2), ExtReal::int(1));
        let dense = ShrinkSpec { default: Selection::Windows(vec![half.clone(), rest]), per_entry: vec![] };
        assert_eq!(shrink(&s, &dense, &p).unwrap().scale, s.scale);
        let sparse = ShrinkSpec { default: Selection::Windows(vec![half]), per_entry: vec![] };
        assert!(matches!(shrink(&s, &sparse, &p), Err(Error::NotDense(_))));
        let off = ShrinkSpec { default: Selection::OffCantor(CantorSpec::standard()), per_entry: vec![] };
        assert_eq!(shrink(&s, &off, &p).unwrap().scale, s.scale);
        let thin = ShrinkSpec { default: Selection::Thinned { eps: BigRational::new(1.into(), 10.into()), depth: 8 }, per_entry: vec![] };
        let out = pipeline(&s, &thin, &MergePlan::EachMember, &p).unwrap();
        assert_eq!(out.output.entries, s.entries);
        assert_ne!(out.output.scale, s.scale);
    }
}
