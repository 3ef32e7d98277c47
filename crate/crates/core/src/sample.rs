//! Random valid systems and random subspace constructions, for property
//! checks and sampled witnesses.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::cantor::{CantorSpec, Fractions};
use crate::energy::TestFunction;
use crate::error::{Error, Result};
use crate::family::IntervalFamily;
use crate::interval::{Interval, Window};
use crate::measure::{Mask, Piece, Precision, ScaleMeasure};
use crate::merge::{maximal_merge, optional_merge, pipeline, MergePlan, Selection, ShrinkSpec};
use crate::real::{ExtReal, Real};
use crate::system::EffectiveSystem;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Empty,
    Closed,
    Gaps,
}

/// Disjoint closed intervals and Cantor gap families between random
/// breakpoints in `[-4, 4]`, optionally with rays, each carrying `1`, `2`
/// or `3` times Lebesgue measure as scale. State space and speed are the
/// line and Lebesgue measure.
pub fn random_system<R: Rng>(rng: &mut R) -> EffectiveSystem {
    let mut pts: Vec<i64> = (-16..=16).collect();
    pts.shuffle(rng);
    let mut pts: Vec<i64> = pts[..rng.gen_range(2..6)].to_vec();
    pts.sort();
    let r = |v: i64| Real::ratio(v, 4);
    let mut slots = Vec::new();
    for i in 0..pts.len() - 1 {
        let prev_closed = i > 0 && slots[i - 1] == Slot::Closed;
        let s = match rng.gen_range(0..3) {
            1 if !prev_closed => Slot::Closed,
            2 => Slot::Gaps,
            _ => Slot::Empty,
        };
        slots.push(s);
    }
    if slots.iter().all(|s| *s == Slot::Empty) {
        slots[0] = Slot::Closed;
    }
    let mut entries = Vec::new();
    let mut scale = ScaleMeasure::zero();
    let mut add = |fam: IntervalFamily, c: i64, scale: &mut ScaleMeasure| {
        let part = ScaleMeasure::lebesgue(Window::full()).restrict_to_union(std::slice::from_ref(&fam)).expect("explicit and gap families restrict");
        *scale = scale.add(&part.scaled(&Real::int(c)));
        entries.push(fam);
    };
    if slots[0] != Slot::Closed && rng.gen_bool(0.5) {
        let ray = Interval::new(ExtReal::NegInf, ExtReal::Finite(r(pts[0])), false, true).unwrap();
        add(IntervalFamily::single(ray), rng.gen_range(1..4), &mut scale);
    }
    for (i, s) in slots.iter().enumerate() {
        let (a, b) = (pts[i], pts[i + 1]);
        match s {
            Slot::Closed => add(IntervalFamily::single(Interval::closed(r(a), r(b))), rng.gen_range(1..4), &mut scale),
            Slot::Gaps => {
                let fractions = if rng.gen_bool(0.5) { Fractions::Constant(q(1, 3)) } else { Fractions::Geometric { first: q(1, 4), factor: q(1, 2) } };
                let spec = CantorSpec::new(q(a, 4), q(b, 4), fractions).unwrap();
                add(IntervalFamily::cantor_gaps(spec, true), rng.gen_range(1..4), &mut scale)
            }
            Slot::Empty => {}
        }
    }
    if *slots.last().unwrap() != Slot::Closed && rng.gen_bool(0.5) {
        let ray = Interval::new(ExtReal::Finite(r(*pts.last().unwrap())), ExtReal::PosInf, true, false).unwrap();
        add(IntervalFamily::single(ray), rng.gen_range(1..4), &mut scale);
    }
    EffectiveSystem::new(Interval::real_line(), ScaleMeasure::lebesgue(Window::full()), entries, scale, None)
}

/// A random subspace construction applied to `s`: a maximal merge, a
/// thinned or off-Cantor shrink followed by the pipeline, an optional
/// merge of one pair, or the identity pipeline.
pub fn random_step<R: Rng>(s: &EffectiveSystem, rng: &mut R, p: &Precision) -> Result<EffectiveSystem> {
    // Entries whose scale is an unmasked density on a bounded interval.
    let mut explicit = Vec::new();
    for (e, f) in s.entries.iter().enumerate() {
        let own = s.scale.restrict_to_union(std::slice::from_ref(f))?;
        let bounded = f.is_explicit() && f.hull().is_some_and(|h| h.length().is_finite());
        if bounded && own.pieces().iter().all(|p| matches!(p, Piece::Ac(a) if a.mask == Mask::Full)) {
            explicit.push(e);
        }
    }
    let one = |e: usize, sel: Selection| ShrinkSpec { default: Selection::Full, per_entry: vec![(e, sel)] };
    match rng.gen_range(0..5) {
        0 => maximal_merge(s, p),
        1 if !explicit.is_empty() => {
            let e = *explicit.choose(rng).unwrap();
            let sel = Selection::Thinned { eps: q(1, 10), depth: 6 };
            Ok(pipeline(s, &one(e, sel), &MergePlan::EachMember, p)?.output)
        }
        2 if !explicit.is_empty() => {
            let e = *explicit.choose(rng).unwrap();
            let h = s.entries[e].hull().unwrap();
            let (lo, hi) = (h.left.finite().unwrap().to_rational(), h.right.finite().unwrap().to_rational());
            let spec = CantorSpec::new(lo, hi, Fractions::Geometric { first: q(1, 4), factor: q(1, 2) })?;
            Ok(pipeline(s, &one(e, Selection::OffCantor(spec)), &MergePlan::EachMember, p)?.output)
        }
        3 => {
            let a = rng.gen_range(0..s.entries.len());
            let b = rng.gen_range(a..s.entries.len());
            let pair = (s.entries[a].hull().unwrap().left, s.entries[b].hull().unwrap().right);
            match optional_merge(s, &MergePlan::Pairs(vec![pair])) {
                Err(Error::InvalidPreMergingPoint { .. }) => Ok(s.clone()),
                other => other,
            }
        }
        _ => Ok(pipeline(s, &ShrinkSpec::identity(), &MergePlan::EachMember, p)?.output),
    }
}

/// A piecewise linear test function with two to five knots at quarter
/// integers in `[-6, 6]` and small integer values.
pub fn random_test_function<R: Rng>(rng: &mut R) -> TestFunction {
    let mut xs: Vec<i64> = (-24..=24).collect();
    xs.shuffle(rng);
    let mut xs = xs[..rng.gen_range(2..6)].to_vec();
    xs.sort();
    let knots = xs.iter().map(|&x| (Real::ratio(x, 4), Real::int(rng.gen_range(-3..4)))).collect();
    TestFunction::piecewise_linear(knots).expect("knots are strictly increasing")
}
