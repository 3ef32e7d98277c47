//! Ready-made systems and generators used by the gallery, the tests and the
//! command line tool.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::cantor::{CantorSpec, Fractions};
use crate::family::{Chain, IntervalFamily};
use crate::interval::{Interval, Window};
use crate::measure::{Density, MemberRule, Piece, AcPiece, Mask, ScaleMeasure};
use crate::real::{ExtReal, Real};
use crate::system::EffectiveSystem;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Lebesgue measure on the whole line.
pub fn lebesgue() -> ScaleMeasure {
    ScaleMeasure::lebesgue(Window::full())
}

/// The Cantor staircase measure of the middle-thirds set, total mass `c`.
pub fn staircase(c: i64) -> ScaleMeasure {
    ScaleMeasure::cantor(CantorSpec::standard(), Real::int(c))
}

/// Lebesgue plus `c` times the middle-thirds staircase.
pub fn shifted_identity(c: i64) -> ScaleMeasure {
    lebesgue().add(&staircase(c))
}

/// A fat Cantor set on `[0, 1]` removing fractions `1/4, 1/8, 1/16, ...`.
pub fn fat_cantor() -> CantorSpec {
    CantorSpec::new(q(0, 1), q(1, 1), Fractions::Geometric { first: q(1, 4), factor: q(1, 2) }).unwrap()
}

fn left_ray(b: i64) -> Interval {
    Interval::new(ExtReal::NegInf, ExtReal::int(b), false, true).unwrap()
}

fn right_ray(a: i64) -> Interval {
    Interval::new(ExtReal::int(a), ExtReal::PosInf, true, false).unwrap()
}

/// One-dimensional Brownian motion: the whole line with the natural scale.
pub fn brownian() -> EffectiveSystem {
    EffectiveSystem::new(Interval::real_line(), lebesgue(), vec![IntervalFamily::single(Interval::real_line())], lebesgue(), None)
}

/// The two rays `(-inf, 0]`, `[1, inf)` and the closed gaps of the
/// middle-thirds set, each with the natural scale.
pub fn cantor_trap() -> EffectiveSystem {
    gapped(CantorSpec::standard(), lebesgue())
}

fn gapped(spec: CantorSpec, scale: ScaleMeasure) -> EffectiveSystem {
    EffectiveSystem::new(
        Interval::real_line(),
        lebesgue(),
        vec![IntervalFamily::single(left_ray(0)), IntervalFamily::cantor_gaps(spec, true), IntervalFamily::single(right_ray(1))],
        scale,
        None,
    )
}

/// The trap intervals with each gap rescaled to unit scale mass.
pub fn unit_mass_gaps() -> EffectiveSystem {
    let gaps = IntervalFamily::cantor_gaps(CantorSpec::standard(), true);
    let per = Piece::Ac(
        AcPiece::new(
            Window::new(ExtReal::int(0), ExtReal::int(1)),
            Mask::Full,
            Density::PerMember { family: gaps, rule: MemberRule::InverseLength { mass: Real::one() } },
        )
        .unwrap(),
    );
    let rays = ScaleMeasure::lebesgue(Window::new(ExtReal::NegInf, ExtReal::int(0))).add(&ScaleMeasure::lebesgue(Window::new(ExtReal::int(1), ExtReal::PosInf)));
    gapped(CantorSpec::standard(), rays.add(&ScaleMeasure::from_pieces(vec![per])))
}

/// The trap intervals around the fat Cantor set, natural scales.
pub fn fat_cantor_gaps() -> EffectiveSystem {
    let scale = lebesgue().restrict_to_union(&[
        IntervalFamily::single(left_ray(0)),
        IntervalFamily::cantor_gaps(fat_cantor(), true),
        IntervalFamily::single(right_ray(1)),
    ]);
    gapped(fat_cantor(), scale.expect("explicit and gap families are supported"))
}

/// `[-1, 0)` and `(0, 1]` with natural scales: not adapted at `0`.
pub fn split_at_zero() -> EffectiveSystem {
    EffectiveSystem::new(
        Interval::real_line(),
        lebesgue(),
        vec![
            IntervalFamily::single(Interval::new(ExtReal::int(-1), ExtReal::int(0), true, false).unwrap()),
            IntervalFamily::single(Interval::new(ExtReal::int(0), ExtReal::int(1), false, true).unwrap()),
        ],
        ScaleMeasure::lebesgue(Window::new(ExtReal::int(-1), ExtReal::int(1))),
        None,
    )
}

/// `(0, 1)`, `(-1, -1/2)` and `(-1/(n-1), -1/n)` for `n >= 3`, open, with
/// natural scales.
pub fn harmonic_chain() -> EffectiveSystem {
    let chain = Chain::new(q(0, 1), q(-1, 1), q(1, 1), false, false).unwrap();
    EffectiveSystem::new(
        Interval::real_line(),
        lebesgue(),
        vec![
            IntervalFamily::chain(chain),
            IntervalFamily::single(Interval::new(ExtReal::int(0), ExtReal::int(1), false, false).unwrap()),
        ],
        ScaleMeasure::lebesgue(Window::new(ExtReal::int(-1), ExtReal::int(1))),
        None,
    )
}

/// Open chains accumulating at `-1` and `1` on both sides of
/// `(-1/2, 0)` and `(0, 1/2)`, natural scales.
pub fn double_chain() -> EffectiveSystem {
    let down = Chain::new(q(-1, 1), q(1, 1), q(2, 1), false, false).unwrap();
    let up = Chain::new(q(1, 1), q(-1, 1), q(2, 1), false, false).unwrap();
    EffectiveSystem::new(
        Interval::real_line(),
        lebesgue(),
        vec![
            IntervalFamily::chain(down),
            IntervalFamily::single(Interval::new(ExtReal::ratio(-1, 2), ExtReal::int(0), false, false).unwrap()),
            IntervalFamily::single(Interval::new(ExtReal::int(0), ExtReal::ratio(1, 2), false, false).unwrap()),
            IntervalFamily::chain(up),
        ],
        ScaleMeasure::lebesgue(Window::new(ExtReal::int(-1), ExtReal::int(1))),
        None,
    )
}

/// The `d`-dimensional Bessel process on `[0, inf)`: speed `x^(d-1) dx`,
/// scale `x^(1-d) dx` on `(0, inf)`. For `d >= 2` the origin is not reached.
pub fn bessel(d: i64) -> EffectiveSystem {
    let state = Interval::new(ExtReal::zero(), ExtReal::PosInf, true, false).unwrap();
    let half = Window::new(ExtReal::zero(), ExtReal::PosInf);
    let power = |e: i64| ScaleMeasure::density(half.clone(), Density::PowerLaw { coef: Real::one(), exponent: q(e, 1) }).unwrap();
    let scale = power(1 - d);
    let member = Interval::new(ExtReal::zero(), ExtReal::PosInf, false, false).unwrap();
    EffectiveSystem::new(state, power(d - 1), vec![IntervalFamily::single(member)], scale, None)
}

/// Brownian motion with killing `c * dx` on `[0, 1]`.
pub fn killed_brownian(c: i64) -> EffectiveSystem {
    let mut s = brownian();
    s.killing = Some(ScaleMeasure::lebesgue(Window::new(ExtReal::zero(), ExtReal::int(1))).scaled(&Real::int(c)));
    s
}

/// Identifiers of the gallery entries, in display order.
pub const GALLERY: &[&str] = &[
    "cantor-trap",
    "split-at-zero",
    "harmonic-chain",
    "double-chain",
    "thinned-unit",
    "cantor-merge-plans",
    "cantor-cores",
    "constructed-cores",
    "unit-mass-gaps",
    "fat-cantor",
    "bessel",
    "killing-mismatch",
];

/// Named systems accepted wherever a built-in system can be referenced.
pub fn named_system(name: &str) -> Option<EffectiveSystem> {
    Some(match name {
        "brownian" => brownian(),
        "cantor-trap" => cantor_trap(),
        "unit-mass-gaps" => unit_mass_gaps(),
        "fat-cantor" => fat_cantor_gaps(),
        "split-at-zero" => split_at_zero(),
        "harmonic-chain" => harmonic_chain(),
        "double-chain" => double_chain(),
        "bessel" => bessel(2),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Precision;

    #[test]
    fn effective_systems_validate() {
        let p = Precision::default();
        for s in [brownian(), cantor_trap(), unit_mass_gaps(), fat_cantor_gaps(), bessel(2), bessel(3), killed_brownian(1)] {
            let r = s.validate(&p);
            assert!(r.verdict.is_true(), "{s}: {:?}", r.conditions);
        }
    }

    #[test]
    fn pre_effective_systems_fail_adaptedness() {
        let p = Precision::default();
        for s in [split_at_zero(), harmonic_chain(), double_chain()] {
            let r = s.validate(&p);
            let failing: Vec<String> = r.conditions.iter().filter(|c| !c.verdict.is_true()).map(|c| c.name.clone()).collect();
            assert_eq!(failing, vec!["adapted".to_string()], "{s}");
        }
    }
}
