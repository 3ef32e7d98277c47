//! Energy of test functions `u = phi(F(x))` on a system.
//!
//! `F` is the primitive (from 0) of a measure `dF`, or the identity. On each
//! interval `du/ds = phi'(F) dF/ds`, so the energy is
//! `1/2 * integral of phi'(F)^2 (dF/ds)^2 ds` over the union of the
//! intervals. Where `dF/ds` is 1 and `F` carries no mass off the intervals,
//! the substitution `t = F(x)` turns this into `1/2 * integral of phi'(t)^2 dt`.

use crate::error::{Error, Result};
use crate::interval::Window;
use crate::measure::{AcPiece, CantorPiece, Density, Mask, Piece, Precision, ScaleMeasure};
use crate::thinned::ThinnedSet;
use crate::quad::simpson;
use crate::real::{ExtReal, Real};
use crate::relation::{density_ratio, Atom, RatioPart};
use crate::system::{BoundaryKind, EffectiveSystem};

/// The outer function of a test function.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// Linear interpolation of `(t, value)` knots, constant outside.
    PiecewiseLinear(Vec<(Real, Real)>),
    /// `exp(1 - 1/(1 - s^2))` with `s = (t - center)/radius`, zero for `|s| >= 1`.
    Bump { center: Real, radius: Real },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub profile: Profile,
    /// Measure whose primitive from 0 is the inner function; `None` for `x`.
    pub through: Option<ScaleMeasure>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub value: f64,
    /// The exact value when every step was exact.
    pub exact: Option<Real>,
    pub err: f64,
    pub method: &'static str,
    /// Absorbing endpoints where `u` does not vanish.
    pub boundary_flags: Vec<String>,
}

impl TestFunction {
    pub fn piecewise_linear(knots: Vec<(Real, Real)>) -> Result<TestFunction> {
        if knots.len() < 2 || knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput("knots need at least two strictly increasing abscissae".into()));
        }
        Ok(TestFunction { profile: Profile::PiecewiseLinear(knots), through: None })
    }

    pub fn bump(center: Real, radius: Real) -> Result<TestFunction> {
        if !radius.is_positive() {
            return Err(Error::InvalidInput("bump radius must be positive".into()));
        }
        Ok(TestFunction { profile: Profile::Bump { center, radius }, through: None })
    }

    /// The same profile composed with the primitive of `m`.
    pub fn through(self, m: ScaleMeasure) -> TestFunction {
        TestFunction { through: Some(m), ..self }
    }

    fn support(&self) -> (Real, Real) {
        match &self.profile {
            Profile::PiecewiseLinear(k) => (k[0].0.clone(), k[k.len() - 1].0.clone()),
            Profile::Bump { center, radius } => (center - radius, center + radius),
        }
    }

    /// `phi(t)`.
    pub fn profile_value(&self, t: f64) -> f64 {
        match &self.profile {
            Profile::PiecewiseLinear(k) => {
                let first = &k[0];
                let last = &k[k.len() - 1];
                if t <= first.0.to_f64() {
                    return first.1.to_f64();
                }
                if t >= last.0.to_f64() {
                    return last.1.to_f64();
                }
                for w in k.windows(2) {
                    let (t0, t1) = (w[0].0.to_f64(), w[1].0.to_f64());
                    if t <= t1 {
                        let (v0, v1) = (w[0].1.to_f64(), w[1].1.to_f64());
                        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                    }
                }
                last.1.to_f64()
            }
            Profile::Bump { center, radius } => {
                let s = (t - center.to_f64()) / radius.to_f64();
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
        }
    }

    /// `phi'(t)` (right derivative at knots).
    pub fn profile_slope(&self, t: f64) -> f64 {
        match &self.profile {
            Profile::PiecewiseLinear(k) => {
                for w in k.windows(2) {
                    let (t0, t1) = (w[0].0.to_f64(), w[1].0.to_f64());
                    if t >= t0 && t < t1 {
                        return (w[1].1.to_f64() - w[0].1.to_f64()) / (t1 - t0);
                    }
                }
                0.0
            }
            Profile::Bump { center, radius } => {
                let r = radius.to_f64();
                let s = (t - center.to_f64()) / r;
                if s.abs() >= 1.0 {
                    return 0.0;
                }
                let d = 1.0 - s * s;
                (1.0 - 1.0 / d).exp() * (-2.0 * s / (d * d)) / r
            }
        }
    }

    /// `F(x)` with its error bound.
    pub fn inner(&self, x: &Real, prec: &Precision) -> Result<(f64, f64)> {
        match &self.through {
            None => Ok((x.to_f64(), 0.0)),
            Some(m) => m.evaluate_approx(&Real::zero(), x, prec),
        }
    }

    fn inner_ext(&self, x: &ExtReal, prec: &Precision) -> Result<f64> {
        match x {
            ExtReal::Finite(r) => Ok(self.inner(r, prec)?.0),
            _ => match &self.through {
                None => Ok(x.to_f64()),
                Some(m) => Ok(m.evaluate(&Real::zero(), x, prec)?.to_f64()),
            },
        }
    }

    /// Value of `u` at a point of the extended line (as a limit at infinity).
    pub fn value(&self, x: &ExtReal, prec: &Precision) -> Result<f64> {
        Ok(self.profile_value(self.inner_ext(x, prec)?))
    }

    /// Smallest `x` with `F(x) >= t`, found by bisection; exact for `F = x`.
    fn inverse(&self, t: &Real, prec: &Precision) -> Result<ExtReal> {
        if self.through.is_none() {
            return Ok(ExtReal::Finite(t.clone()));
        }
        let tf = t.to_f64();
        let f = |x: f64| self.inner(&Real::float(x), prec).map(|v| v.0);
        let mut lo = -1.0f64;
        while f(lo)? >= tf {
            lo *= 2.0;
            if lo < -1e18 {
                return Ok(ExtReal::NegInf);
            }
        }
        let mut hi = 1.0f64;
        while f(hi)? < tf {
            hi *= 2.0;
            if hi > 1e18 {
                return Ok(ExtReal::PosInf);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid)? >= tf {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(ExtReal::Finite(Real::float(hi)))
    }
}

fn bounded(w: &Window) -> Result<(f64, f64)> {
    match (w.lo.finite(), w.hi.finite()) {
        (Some(a), Some(b)) => Ok((a.to_f64(), b.to_f64())),
        _ => Err(Error::TailBoundUnavailable(format!("integration over unbounded {w}"))),
    }
}

/// Simpson integral with errors raised inside the integrand carried out.
fn integrate<F: Fn(f64) -> Result<f64>>(f: F, w: &Window, tol: f64) -> Result<f64> {
    let (a, b) = bounded(w)?;
    let failure = std::cell::RefCell::new(None);
    let v = simpson(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        tol,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

fn sum_at(ds: &[Density], x: f64, prec: &Precision) -> Result<f64> {
    let mut s = 0.0;
    for d in ds {
        s += d.value_at(&Real::float(x), prec)?;
    }
    Ok(s)
}

/// `integral of phi'(F)^2 num^2/den` over a masked cell with constant
/// densities: the ratio times the masked Lebesgue mass of each knot cell.
fn masked_part(u: &TestFunction, w: &Window, atom: &Atom, num: &[Density], den: &[Density], selection: &Option<ThinnedSet>, prec: &Precision) -> Result<f64> {
    let constant = |ds: &[Density]| -> Option<f64> {
        ds.iter().map(|d| if let Density::Constant(c) = d { Some(c.to_f64()) } else { None }).sum()
    };
    let (Some(n), Some(d), Profile::PiecewiseLinear(k)) = (constant(num), constant(den), &u.profile) else {
        return Err(Error::Unsupported("quadrature on a masked derivative".into()));
    };
    let mask = match (atom, selection) {
        (Atom::All, Some(t)) => Mask::InBalls(t.clone()),
        (Atom::Off(spec), None) => Mask::OffCantor(spec.clone()),
        (Atom::On(spec), None) => Mask::OnCantor(spec.clone()),
        _ => return Err(Error::Unsupported("derivative cut by both a Cantor set and a selection".into())),
    };
    let piece = AcPiece::new(w.clone(), mask, Density::Constant(Real::float(n * n / d)))?;
    let mut total = 0.0;
    for kw in k.windows(2) {
        let slope = u.profile_slope(kw[0].0.to_f64());
        if slope == 0.0 {
            continue;
        }
        let cell = Window::new(u.inverse(&kw[0].0, prec)?, u.inverse(&kw[1].0, prec)?);
        total += slope * slope * piece.mass(&cell, prec)?.value.to_f64();
    }
    Ok(total)
}

/// Energy of `u` on the system.
pub fn energy(system: &EffectiveSystem, u: &TestFunction, prec: &Precision) -> Result<EnergyReport> {
    let df = match &u.through {
        None => ScaleMeasure::lebesgue(Window::full()),
        Some(m) => m.clone(),
    };
    let (t0, t1) = u.support();
    let window = Window::new(u.inverse(&t0, prec)?, u.inverse(&t1, prec)?);
    let on_members = df.restrict_to_union(&system.entries)?.restrict_to_window(&window);
    let lam = system.scale_measure_of()?;
    let parts = density_ratio(&on_members, &lam).map_err(|e| Error::NotAbsolutelyContinuous(format!("{e}")))?;
    let zero_one = parts.iter().all(|p| match p {
        RatioPart::Ac { num, den, selection, .. } => num.is_empty() || num == den || selection.is_some(),
        RatioPart::Staircase { num, den, .. } => num == den,
    });
    let off_members = df.restrict_to_complement(&system.entries)?.restrict_to_window(&window);
    let tol = prec.tol;

    let (value, exact, err, method) = if zero_one && off_members.is_zero() {
        // t = F(x): the energy only sees the profile.
        match &u.profile {
            Profile::PiecewiseLinear(k) => {
                let mut total = Real::zero();
                for w in k.windows(2) {
                    let dt = &w[1].0 - &w[0].0;
                    let dv = &w[1].1 - &w[0].1;
                    total = &total + &(&(&dv * &dv) / &dt);
                }
                let half = &total / &Real::int(2);
                (half.to_f64(), Some(half).filter(|h| h.is_exact()), 0.0, "substitution")
            }
            Profile::Bump { .. } => {
                let w = Window::new(ExtReal::Finite(t0.clone()), ExtReal::Finite(t1.clone()));
                let v = integrate(|t| Ok(u.profile_slope(t).powi(2)), &w, tol)?;
                (0.5 * v, None, tol, "substitution")
            }
        }
    } else if zero_one {
        // The energy measure is dF restricted to the members.
        match &u.profile {
            Profile::PiecewiseLinear(k) => {
                let mut total = 0.0;
                let mut err = 0.0;
                for w in k.windows(2) {
                    let slope = u.profile_slope(w[0].0.to_f64());
                    let cell = Window::new(u.inverse(&w[0].0, prec)?, u.inverse(&w[1].0, prec)?);
                    let m = on_members.mass(&cell, prec)?;
                    total += slope * slope * m.value.to_f64();
                    err += slope * slope * m.err;
                }
                (0.5 * total, None, 0.5 * err, "mass")
            }
            Profile::Bump { .. } => {
                let mut total = 0.0;
                for p in on_members.pieces() {
                    let Piece::Ac(a) = p else {
                        return Err(Error::Unsupported("quadrature against a singular energy measure".into()));
                    };
                    if a.mask != Mask::Full {
                        return Err(Error::Unsupported("quadrature against a masked energy measure".into()));
                    }
                    total += integrate(
                        |x| Ok(u.profile_slope(u.inner(&Real::float(x), prec)?.0).powi(2) * a.density.value_at(&Real::float(x), prec)?),
                        &a.window,
                        tol,
                    )?;
                }
                (0.5 * total, None, tol, "quadrature")
            }
        }
    } else {
        // General derivative: integrate phi'(F)^2 num^2/den cell by cell.
        let mut total = 0.0;
        for p in &parts {
            match p {
                RatioPart::Ac { window: w, atom, num, den, selection } => {
                    if num.is_empty() {
                        continue;
                    }
                    if *atom != Atom::All || selection.is_some() {
                        total += masked_part(u, w, atom, num, den, selection, prec)?;
                        continue;
                    }
                    let ratio = |x: f64| -> Result<f64> {
                        let n = sum_at(num, x, prec)?;
                        let d = sum_at(den, x, prec)?;
                        Ok(if d > 0.0 { n * n / d } else { 0.0 })
                    };
                    match &u.profile {
                        // The slope is constant between knots; integrate cell by cell.
                        Profile::PiecewiseLinear(k) => {
                            for kw in k.windows(2) {
                                let slope = u.profile_slope(kw[0].0.to_f64());
                                let cell = Window::new(u.inverse(&kw[0].0, prec)?, u.inverse(&kw[1].0, prec)?).intersect(w);
                                if slope != 0.0 && !cell.is_empty() {
                                    total += slope * slope * integrate(ratio, &cell, tol)?;
                                }
                            }
                        }
                        Profile::Bump { .. } => {
                            let g = |x: f64| -> Result<f64> {
                                let s = u.profile_slope(u.inner(&Real::float(x), prec)?.0);
                                Ok(s * s * ratio(x)?)
                            };
                            total += integrate(g, &w.intersect(&window), tol)?;
                        }
                    }
                }
                RatioPart::Staircase { window: w, spec, num, den } => {
                    let Profile::PiecewiseLinear(k) = &u.profile else {
                        return Err(Error::Unsupported("bump profile against a staircase derivative".into()));
                    };
                    let r = (num * num).to_f64() / den.to_f64();
                    let stair = CantorPiece { spec: spec.clone(), scale: Real::one(), window: w.clone() };
                    for kw in k.windows(2) {
                        let slope = u.profile_slope(kw[0].0.to_f64());
                        let cell = Window::new(u.inverse(&kw[0].0, prec)?, u.inverse(&kw[1].0, prec)?);
                        total += slope * slope * r * stair.mass(&cell, prec).value.to_f64();
                    }
                }
            }
        }
        (0.5 * total, None, tol, "quadrature")
    };

    let mut flags = Vec::new();
    for b in system.boundaries() {
        for (kind, end) in [(b.left, &b.member.left), (b.right, &b.member.right)] {
            if kind == BoundaryKind::AbsorbingDirichlet {
                let v = u.value(end, prec)?;
                if v.abs() > tol {
                    flags.push(format!("u = {v} at absorbing endpoint {end} of {}", b.member));
                }
            }
        }
    }
    Ok(EnergyReport { value, exact, err, method, boundary_flags: flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::CantorSpec;
    use crate::family::IntervalFamily;
    use crate::interval::Interval;

    fn leb() -> ScaleMeasure {
        ScaleMeasure::lebesgue(Window::full())
    }

    fn bm() -> EffectiveSystem {
        EffectiveSystem::new(Interval::real_line(), leb(), vec![IntervalFamily::single(Interval::real_line())], leb(), None)
    }

    fn tent() -> TestFunction {
        TestFunction::piecewise_linear(vec![(Real::int(-1), Real::zero()), (Real::zero(), Real::one()), (Real::one(), Real::zero())]).unwrap()
    }

    #[test]
    fn tent_on_the_line() {
        let r = energy(&bm(), &tent(), &Precision::default()).unwrap();
        assert_eq!(r.exact, Some(Real::one()));
        assert_eq!(r.method, "substitution");
    }

    #[test]
    fn doubled_scale_halves_energy() {
        let mut s = bm();
        s.scale = leb().scaled(&Real::int(2));
        let r = energy(&s, &tent(), &Precision::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn cantor_function_is_rejected() {
        let c = ScaleMeasure::cantor(CantorSpec::standard(), Real::one());
        let u = TestFunction::piecewise_linear(vec![(Real::zero(), Real::zero()), (Real::ratio(1, 2), Real::one()), (Real::one(), Real::zero())])
            .unwrap()
            .through(c);
        assert!(matches!(energy(&bm(), &u, &Precision::default()), Err(Error::NotAbsolutelyContinuous(_))));
    }

    #[test]
    fn bump_energy_matches_quadrature_through_identity() {
        let u = TestFunction::bump(Real::zero(), Real::one()).unwrap();
        let a = energy(&bm(), &u, &Precision::default()).unwrap();
        let direct = 0.5 * simpson(|t| u.profile_slope(t).powi(2), -1.0, 1.0, 1e-12).unwrap();
        assert!((a.value - direct).abs() < 1e-8);
        // Composing with x + c gives dF/ds = 1 on the line but F has a
        // staircase part, so the mass route is taken.
        let trap_f = leb().add(&ScaleMeasure::cantor(CantorSpec::standard(), Real::one()));
        let v = TestFunction::piecewise_linear(vec![(Real::int(-1), Real::zero()), (Real::int(3), Real::int(2))]).unwrap().through(trap_f);
        let trap = EffectiveSystem::new(
            Interval::real_line(),
            leb(),
            vec![
                IntervalFamily::single(Interval::new(ExtReal::NegInf, ExtReal::int(0), false, true).unwrap()),
                IntervalFamily::cantor_gaps(CantorSpec::standard(), true),
                IntervalFamily::single(Interval::new(ExtReal::int(1), ExtReal::PosInf, true, false).unwrap()),
            ],
            leb(),
            None,
        );
        let r = energy(&trap, &v, &Precision::default()).unwrap();
        // slope 1/2 over x in (-1, 2): 1/2 * 1/4 * 3.
        assert_eq!(r.method, "mass");
        assert!((r.value - 0.375).abs() < 1e-6, "{}", r.value);
    }
}
