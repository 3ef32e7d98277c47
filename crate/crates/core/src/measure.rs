//! Scale measures as finite sums of primitive pieces.
//!
//! An absolutely continuous piece is a density on an open window, optionally
//! masked to one side of a Cantor-type set or to a thinned open set. A
//! Cantor piece is a multiple of the equal-mass staircase measure of a
//! Cantor-type set, cut to a window. Masses are closed forms wherever
//! possible; divergence is decided by rules, never by sampling.

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::cantor::CantorSpec;
use crate::error::{Error, Result};
use crate::family::{FamilyKind, IntervalFamily};
use crate::interval::{Interval, Window};
use crate::real::{ExtReal, Real};
use crate::thinned::ThinnedSet;

/// Numerical settings shared by all approximate computations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Precision {
    /// Absolute tolerance for reported masses and energies.
    pub tol: f64,
    /// Staircase recursion depth for non-periodic descents.
    pub cantor_depth: u32,
    /// Members enumerated per family before a tail bound is used.
    pub prefix: usize,
    /// Upper limit on enumerated members when tightening tail bounds.
    pub max_members: usize,
}

impl Default for Precision {
    fn default() -> Self {
        Precision { tol: 1e-9, cantor_depth: 40, prefix: 32, max_members: 4096 }
    }
}

/// Per-member density rules for families.
#[derive(Clone, Debug, PartialEq)]
pub enum MemberRule {
    /// Density `mass / |J|` on each member `J`.
    InverseLength { mass: Real },
    /// Weight sequence bounding both the mass and the squared density of
    /// member `k` by `1/n^2`, `n = k * stride + offset + 1`.
    CoreWeights { stride: u64, offset: u64, base: Box<Density> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    Constant(Real),
    /// `coef * x^exponent` on a window inside `(0, inf)`.
    PowerLaw { coef: Real, exponent: BigRational },
    PerMember { family: IntervalFamily, rule: MemberRule },
    /// `coef * exp(-|S(x)|) * base(x)` with `S` the base primitive from `anchor`.
    Taper { coef: Real, anchor: Real, base: Box<Density> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mask {
    Full,
    OffCantor(CantorSpec),
    OnCantor(CantorSpec),
    InBalls(ThinnedSet),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcPiece {
    pub window: Window,
    pub mask: Mask,
    pub density: Density,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CantorPiece {
    pub spec: CantorSpec,
    /// Total staircase mass over the whole set.
    pub scale: Real,
    pub window: Window,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Piece {
    Ac(AcPiece),
    Cantor(CantorPiece),
}

/// A sigma-finite measure without atoms, kept in normalized form.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ScaleMeasure {
    pieces: Vec<Piece>,
}

/// A mass with an absolute error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Mass {
    pub value: ExtReal,
    pub err: f64,
}

impl Mass {
    fn zero() -> Mass {
        Mass { value: ExtReal::zero(), err: 0.0 }
    }

    fn exact(value: ExtReal) -> Mass {
        Mass { value, err: 0.0 }
    }

    fn add(self, other: Mass) -> Mass {
        Mass {
            value: self.value.checked_add(&other.value).unwrap_or(ExtReal::PosInf),
            err: self.err + other.err,
        }
    }
}

fn fin(x: Real) -> ExtReal {
    ExtReal::Finite(x)
}

fn rat(q: &BigRational) -> Real {
    Real::Exact(q.clone())
}

/// `x^k` for an integer `k`, exact for rationals.
fn pow_int(x: &Real, k: i64) -> Real {
    match x {
        Real::Exact(q) => {
            if k >= 0 {
                Real::Exact(num_traits::pow(q.clone(), k as usize))
            } else {
                Real::Exact(num_traits::pow(q.recip(), (-k) as usize))
            }
        }
        Real::Float(f) => Real::float(f.powi(k as i32)),
    }
}

fn pow_real(x: &Real, p: &BigRational) -> Real {
    if p.is_integer() {
        if let Some(k) = p.to_integer().to_i64() {
            return pow_int(x, k);
        }
    }
    Real::float(x.to_f64().powf(p.to_f64().unwrap()))
}

/// `sign(y) * (1 - exp(-|y|))`, with the infinite limits.
fn taper_primitive(y: &ExtReal) -> f64 {
    match y {
        ExtReal::NegInf => -1.0,
        ExtReal::PosInf => 1.0,
        ExtReal::Finite(v) => {
            let v = v.to_f64();
            v.signum() * (1.0 - (-v.abs()).exp())
        }
    }
}

impl Density {
    pub fn constant(c: Real) -> Density {
        Density::Constant(c)
    }

    pub fn lebesgue() -> Density {
        Density::Constant(Real::one())
    }

    pub fn reciprocal() -> Density {
        Density::PowerLaw { coef: Real::one(), exponent: BigRational::from_integer((-1).into()) }
    }

    /// Whether the density is one of the closed-form kinds usable as a base.
    pub fn is_elementary(&self) -> bool {
        matches!(self, Density::Constant(_) | Density::PowerLaw { .. })
    }

    /// Pointwise value (zero off family members for per-member rules).
    pub fn value_at(&self, x: &Real, prec: &Precision) -> Result<f64> {
        Ok(match self {
            Density::Constant(c) => c.to_f64(),
            Density::PowerLaw { coef, exponent } => coef.to_f64() * x.to_f64().powf(exponent.to_f64().unwrap()),
            Density::Taper { coef, anchor, base } => {
                let s = signed_primitive(base, anchor, x, prec)?;
                let s = match s {
                    ExtReal::Finite(v) => v.to_f64().abs(),
                    _ => f64::INFINITY,
                };
                coef.to_f64() * (-s).exp() * base.value_at(x, prec)?
            }
            Density::PerMember { family, rule } => match family.member_at(x) {
                None => 0.0,
                Some((k, iv)) => match rule {
                    MemberRule::InverseLength { mass } => mass.to_f64() / iv.length().to_f64(),
                    MemberRule::CoreWeights { stride, offset, base } => {
                        core_member_density(base, k, *stride, *offset, &iv, prec)?.value_at(x, prec)?
                    }
                },
            },
        })
    }

    /// Integral over an open window, ignoring masks.
    pub fn integral(&self, w: &Window, prec: &Precision) -> Result<Mass> {
        if w.is_empty() {
            return Ok(Mass::zero());
        }
        match self {
            Density::Constant(c) => Ok(Mass::exact(match w.length() {
                ExtReal::Finite(l) => fin(&l * c),
                other => other,
            })),
            Density::PowerLaw { coef, exponent } => {
                if w.lo < ExtReal::zero() {
                    return Err(Error::InvalidInput(format!("power-law density used on {w}, outside (0, inf)")));
                }
                Ok(Mass::exact(power_integral(coef, exponent, &w.lo, &w.hi)))
            }
            Density::Taper { coef, anchor, base } => {
                let su = primitive_at(base, anchor, &w.lo, prec)?;
                let sv = primitive_at(base, anchor, &w.hi, prec)?;
                Ok(Mass { value: fin(Real::float(coef.to_f64() * (taper_primitive(&sv) - taper_primitive(&su)))), err: 0.0 })
            }
            Density::PerMember { family, rule } => per_member_integral(family, rule, w, prec),
        }
    }
}

fn power_integral(coef: &Real, p: &BigRational, lo: &ExtReal, hi: &ExtReal) -> ExtReal {
    let q = p + BigRational::from_integer(1.into());
    if q.is_zero() {
        let (Some(u), Some(v)) = (lo.finite(), hi.finite()) else { return ExtReal::PosInf };
        if u.is_zero() {
            return ExtReal::PosInf;
        }
        return fin(Real::float(coef.to_f64() * (v.to_f64() / u.to_f64()).ln()));
    }
    let at = |x: &ExtReal| -> Option<Real> {
        match x {
            ExtReal::PosInf => {
                if q.is_negative() {
                    Some(Real::zero())
                } else {
                    None
                }
            }
            ExtReal::Finite(v) if v.is_zero() => {
                if q.is_positive() {
                    Some(Real::zero())
                } else {
                    None
                }
            }
            ExtReal::Finite(v) => Some(pow_real(v, &q)),
            ExtReal::NegInf => None,
        }
    };
    match (at(lo), at(hi)) {
        (Some(a), Some(b)) => fin(&(&(&b - &a) * coef) / &rat(&q)),
        _ => ExtReal::PosInf,
    }
}

/// Signed primitive of an elementary density from `anchor` to `x`.
fn primitive_at(base: &Density, anchor: &Real, x: &ExtReal, prec: &Precision) -> Result<ExtReal> {
    let a = fin(anchor.clone());
    if *x >= a {
        Ok(base.integral(&Window::new(a, x.clone()), prec)?.value)
    } else {
        Ok(base.integral(&Window::new(x.clone(), a), prec)?.value.neg())
    }
}

fn signed_primitive(base: &Density, anchor: &Real, x: &Real, prec: &Precision) -> Result<ExtReal> {
    primitive_at(base, anchor, &fin(x.clone()), prec)
}

/// The density used on member `k` of a core-weight rule.
pub fn core_member_density(base: &Density, k: u64, stride: u64, offset: u64, member: &Interval, prec: &Precision) -> Result<Density> {
    let n = (k as f64) * (stride as f64) + (offset as f64) + 1.0;
    let mass = base.integral(&member.interior(), prec)?.value;
    Ok(match mass {
        ExtReal::Finite(m) => {
            let m = m.to_f64();
            let c = (1.0 / (n * n * m)).min(1.0 / (n * m.sqrt()));
            scale_density(base, &Real::float(c))
        }
        _ => Density::Taper { coef: Real::float(1.0 / (2.0 * n * n)), anchor: member.midpoint(), base: Box::new(base.clone()) },
    })
}

fn scale_density(d: &Density, c: &Real) -> Density {
    match d {
        Density::Constant(a) => Density::Constant(a * c),
        Density::PowerLaw { coef, exponent } => Density::PowerLaw { coef: coef * c, exponent: exponent.clone() },
        Density::Taper { coef, anchor, base } => Density::Taper { coef: coef * c, anchor: anchor.clone(), base: base.clone() },
        Density::PerMember { family, rule } => Density::PerMember {
            family: family.clone(),
            rule: match rule {
                MemberRule::InverseLength { mass } => MemberRule::InverseLength { mass: mass * c },
                MemberRule::CoreWeights { stride, offset, base } => {
                    MemberRule::CoreWeights { stride: *stride, offset: *offset, base: Box::new(scale_density(base, c)) }
                }
            },
        },
    }
}

fn per_member_integral(family: &IntervalFamily, rule: &MemberRule, w: &Window, prec: &Precision) -> Result<Mass> {
    // A window inside one member needs no enumeration.
    if let (Some(lo), Some(hi)) = (w.lo.finite(), w.hi.finite()) {
        let mid = &(lo + hi) / &Real::int(2);
        if let Some((k, iv)) = family.member_at(&mid) {
            if iv.interior().contains_window(w) {
                return match rule {
                    MemberRule::InverseLength { mass } => {
                        let (ExtReal::Finite(pl), ExtReal::Finite(l)) = (w.length(), iv.length()) else { unreachable!() };
                        Ok(Mass::exact(fin(&(mass * &pl) / &l)))
                    }
                    MemberRule::CoreWeights { stride, offset, base } => {
                        core_member_density(base, k, *stride, *offset, &iv, prec)?.integral(w, prec)
                    }
                };
            }
        }
    }
    let (_, infinite) = family.members_meeting(w, 0);
    let limit = if infinite { prec.max_members } else { usize::MAX };
    match rule {
        MemberRule::InverseLength { mass } => {
            if infinite && mass.is_positive() {
                return Ok(Mass::exact(ExtReal::PosInf));
            }
            let (members, _) = family.members_meeting(w, limit);
            let mut total = Real::zero();
            for (_, iv) in &members {
                let part = iv.interior().intersect(w);
                let (ExtReal::Finite(pl), ExtReal::Finite(l)) = (part.length(), iv.length()) else {
                    return Err(Error::InvalidInput("inverse-length density needs bounded members".into()));
                };
                total = &total + &(&(mass * &pl) / &l);
            }
            Ok(Mass::exact(fin(total)))
        }
        MemberRule::CoreWeights { stride, offset, base } => {
            let (members, _) = family.members_meeting(w, limit);
            let mut total = Mass::zero();
            let mut max_k = 0u64;
            for (k, iv) in &members {
                let d = core_member_density(base, *k, *stride, *offset, iv, prec)?;
                total = total.add(d.integral(&iv.interior().intersect(w), prec)?);
                max_k = max_k.max(*k);
            }
            if infinite {
                // Every later member carries at most 1/n^2.
                let n = ((max_k + 1) as f64) * (*stride as f64) + (*offset as f64) + 1.0;
                total.err += 1.0 / (n - 1.0).max(1.0);
            }
            Ok(total)
        }
    }
}

impl Mask {
    fn spec(&self) -> Option<&CantorSpec> {
        match self {
            Mask::OffCantor(s) | Mask::OnCantor(s) => Some(s),
            _ => None,
        }
    }
}

/// Lebesgue measure of the Cantor set inside a window.
fn cantor_lebesgue(spec: &CantorSpec, w: &Window, prec: &Precision) -> Result<Mass> {
    let w = w.intersect(&spec.base_window());
    if w.is_empty() || spec.is_null() {
        return Ok(Mass::zero());
    }
    let k = spec.limit_measure().to_f64();
    let u = spec.staircase(w.lo.finite().unwrap(), prec.cantor_depth);
    let v = spec.staircase(w.hi.finite().unwrap(), prec.cantor_depth);
    Ok(Mass { value: fin(Real::float(k * (v.value.to_f64() - u.value.to_f64()))), err: k * (u.err + v.err) })
}

impl AcPiece {
    pub fn new(window: Window, mask: Mask, density: Density) -> Result<AcPiece> {
        if let Density::PowerLaw { .. } = density {
            if window.lo < ExtReal::zero() {
                return Err(Error::InvalidInput(format!("power-law density needs a window in (0, inf), got {window}")));
            }
        }
        Ok(AcPiece { window, mask, density })
    }

    pub fn mass(&self, w: &Window, prec: &Precision) -> Result<Mass> {
        let w = self.window.intersect(w);
        if w.is_empty() {
            return Ok(Mass::zero());
        }
        match &self.mask {
            Mask::Full => self.density.integral(&w, prec),
            Mask::OffCantor(spec) | Mask::OnCantor(spec) => {
                let Density::Constant(c) = &self.density else {
                    return Err(Error::Unsupported("only constant densities can be masked by a fat Cantor set".into()));
                };
                let on = cantor_lebesgue(spec, &w, prec)?;
                let on_value = on.value.finite().cloned().unwrap_or_else(Real::zero);
                let on_mass = Mass { value: fin(&on_value * c), err: on.err * c.to_f64() };
                if matches!(self.mask, Mask::OnCantor(_)) {
                    return Ok(on_mass);
                }
                let total = Density::Constant(c.clone()).integral(&w, prec)?;
                Ok(match total.value {
                    ExtReal::Finite(t) => Mass { value: fin(&t - &(&on_value * c)), err: on_mass.err },
                    other => Mass::exact(other),
                })
            }
            Mask::InBalls(set) => {
                let mut total = Mass::zero();
                for ball in set.union_windows() {
                    total = total.add(self.density.integral(&ball.intersect(&w), prec)?);
                }
                total.err += set.tail_bound().to_f64();
                Ok(total)
            }
        }
    }
}

impl CantorPiece {
    pub fn mass(&self, w: &Window, prec: &Precision) -> Mass {
        let w = self.window.intersect(w).intersect(&self.spec.base_window());
        if w.is_empty() {
            return Mass::zero();
        }
        let u = self.spec.staircase(w.lo.finite().unwrap(), prec.cantor_depth);
        let v = self.spec.staircase(w.hi.finite().unwrap(), prec.cantor_depth);
        let value = &self.scale * &(&v.value - &u.value);
        Mass { value: fin(value), err: self.scale.to_f64().abs() * (u.err + v.err) }
    }
}

impl Piece {
    pub fn window(&self) -> &Window {
        match self {
            Piece::Ac(p) => &p.window,
            Piece::Cantor(p) => &p.window,
        }
    }

    fn with_window(&self, window: Window) -> Piece {
        match self {
            Piece::Ac(p) => Piece::Ac(AcPiece { window, ..p.clone() }),
            Piece::Cantor(p) => Piece::Cantor(CantorPiece { window, ..p.clone() }),
        }
    }

    fn sort_key(&self) -> (Window, String) {
        (self.window().clone(), format!("{:?}", self))
    }
}

/// Where a point sits relative to a list of families.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Region {
    Outside,
    Member,
    CantorHull(CantorSpec),
}

/// Splits `w` at the family breakpoints and labels each cell.
pub(crate) fn regions(w: &Window, families: &[IntervalFamily]) -> Vec<(Window, Region)> {
    let mut cuts: Vec<ExtReal> = vec![w.lo.clone(), w.hi.clone()];
    let mut spans: Vec<(Window, Region)> = Vec::new();
    for f in families {
        match &f.kind {
            FamilyKind::Explicit(m) => {
                for iv in m {
                    spans.push((iv.interior(), Region::Member));
                }
            }
            FamilyKind::Chain(_) => {
                if let Some(h) = f.hull() {
                    spans.push((h.interior(), Region::Member));
                }
            }
            FamilyKind::CantorGaps { spec, .. } => {
                if let Some(h) = f.hull() {
                    spans.push((h.interior(), Region::CantorHull(spec.clone())));
                }
            }
        }
    }
    for (s, _) in &spans {
        for e in [&s.lo, &s.hi] {
            if w.contains(e) {
                cuts.push(e.clone());
            }
        }
    }
    cuts.sort();
    cuts.dedup();
    cuts.windows(2)
        .map(|c| Window::new(c[0].clone(), c[1].clone()))
        .filter(|c| !c.is_empty())
        .map(|c| {
            let p = fin(c.inner_point());
            let region = spans.iter().find(|(s, _)| s.contains(&p)).map(|(_, r)| r.clone()).unwrap_or(Region::Outside);
            (c, region)
        })
        .collect()
}

impl ScaleMeasure {
    pub fn zero() -> ScaleMeasure {
        ScaleMeasure { pieces: vec![] }
    }

    pub fn from_pieces(pieces: Vec<Piece>) -> ScaleMeasure {
        let mut m = ScaleMeasure { pieces };
        m.normalize();
        m
    }

    /// A density on a window with no mask.
    pub fn density(window: Window, density: Density) -> Result<ScaleMeasure> {
        Ok(ScaleMeasure::from_pieces(vec![Piece::Ac(AcPiece::new(window, Mask::Full, density)?)]))
    }

    pub fn lebesgue(window: Window) -> ScaleMeasure {
        ScaleMeasure::density(window, Density::lebesgue()).unwrap()
    }

    pub fn cantor(spec: CantorSpec, scale: Real) -> ScaleMeasure {
        let window = spec.base_window();
        ScaleMeasure::from_pieces(vec![Piece::Cantor(CantorPiece { spec, scale, window })])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn add(&self, other: &ScaleMeasure) -> ScaleMeasure {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        ScaleMeasure::from_pieces(pieces)
    }

    pub fn sum(parts: impl IntoIterator<Item = ScaleMeasure>) -> ScaleMeasure {
        ScaleMeasure::from_pieces(parts.into_iter().flat_map(|m| m.pieces).collect())
    }

    pub fn scaled(&self, c: &Real) -> ScaleMeasure {
        let pieces = self
            .pieces
            .iter()
            .map(|p| match p {
                Piece::Ac(a) => Piece::Ac(AcPiece { density: scale_density(&a.density, c), ..a.clone() }),
                Piece::Cantor(k) => Piece::Cantor(CantorPiece { scale: &k.scale * c, ..k.clone() }),
            })
            .collect();
        ScaleMeasure::from_pieces(pieces)
    }

    /// Canonical form: null Cantor masks resolved, empty pieces dropped,
    /// adjacent identical pieces joined, constants on equal cells summed.
    fn normalize(&mut self) {
        let mut out: Vec<Piece> = Vec::new();
        for p in self.pieces.drain(..) {
            if p.window().is_empty() {
                continue;
            }
            match p {
                Piece::Ac(mut a) => {
                    if let Density::Constant(c) = &a.density {
                        if c.is_zero() {
                            continue;
                        }
                    }
                    if let Some(spec) = a.mask.spec() {
                        let misses = !a.window.overlaps(&spec.base_window());
                        if spec.is_null() || misses {
                            if matches!(a.mask, Mask::OnCantor(_)) {
                                continue;
                            }
                            a.mask = Mask::Full;
                        }
                    }
                    out.push(Piece::Ac(a));
                }
                Piece::Cantor(k) => {
                    if k.scale.is_zero() || !k.window.overlaps(&k.spec.base_window()) {
                        continue;
                    }
                    // Clamp to the base so equal measures share one form.
                    let window = k.window.intersect(&k.spec.base_window());
                    out.push(Piece::Cantor(CantorPiece { window, ..k }));
                }
            }
        }
        out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

        // Sum constant densities sharing window and mask.
        let mut summed: Vec<Piece> = Vec::new();
        for p in out {
            if let (Some(Piece::Ac(last)), Piece::Ac(cur)) = (summed.last_mut(), &p) {
                if last.window == cur.window && last.mask == cur.mask {
                    if let (Density::Constant(a), Density::Constant(b)) = (&last.density, &cur.density) {
                        last.density = Density::Constant(a + b);
                        continue;
                    }
                }
            }
            summed.push(p);
        }

        // Join pieces with identical content on adjacent windows.
        let mut joined: Vec<Piece> = Vec::new();
        for p in summed {
            let mut merged = false;
            for q in joined.iter_mut() {
                if q.window().hi == p.window().lo && q.with_window(p.window().clone()) == p {
                    *q = q.with_window(Window::new(q.window().lo.clone(), p.window().hi.clone()));
                    merged = true;
                    break;
                }
            }
            if !merged {
                joined.push(p);
            }
        }
        joined.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        self.pieces = joined;
    }

    /// Mass of an open window with an error bound.
    pub fn mass(&self, w: &Window, prec: &Precision) -> Result<Mass> {
        let mut total = Mass::zero();
        for p in &self.pieces {
            let m = match p {
                Piece::Ac(a) => a.mass(w, prec)?,
                Piece::Cantor(k) => k.mass(w, prec),
            };
            total = total.add(m);
        }
        Ok(total)
    }

    /// Mass of an open window; fails if the error bound exceeds the tolerance.
    pub fn measure_of(&self, w: &Window, prec: &Precision) -> Result<ExtReal> {
        let m = self.mass(w, prec)?;
        if m.value.is_finite() && m.err > prec.tol {
            return Err(Error::ApproximationDepthExceeded(format!(
                "mass of {w} known only to within {:e}, tolerance {:e}",
                m.err, prec.tol
            )));
        }
        Ok(m.value)
    }

    /// Mass of an interval (endpoints carry no mass).
    pub fn measure_of_interval(&self, iv: &Interval, prec: &Precision) -> Result<ExtReal> {
        self.measure_of(&iv.interior(), prec)
    }

    /// Rule-based finiteness of the mass of `w`.
    pub fn finite_on(&self, w: &Window) -> bool {
        self.pieces.iter().all(|p| piece_finite_on(p, w))
    }

    /// Finite on every compact subset of the open window.
    pub fn locally_finite_on(&self, w: &Window) -> bool {
        self.pieces.iter().all(|p| {
            let cut = p.window().intersect(w);
            if cut.is_empty() {
                return true;
            }
            match p {
                Piece::Cantor(_) => true,
                Piece::Ac(a) => match &a.density {
                    Density::Constant(_) | Density::Taper { .. } => true,
                    // Singular only at 0, which lies outside any window in (0, inf).
                    Density::PowerLaw { .. } => true,
                    Density::PerMember { family, rule } => match rule {
                        MemberRule::CoreWeights { .. } => true,
                        MemberRule::InverseLength { .. } => !accumulates_inside(family, &cut),
                    },
                },
            }
        })
    }

    /// Whether the measure charges the open window (support-based).
    pub fn positive_on(&self, w: &Window) -> bool {
        self.pieces.iter().any(|p| {
            let cut = p.window().intersect(w);
            if cut.is_empty() {
                return false;
            }
            match p {
                Piece::Cantor(k) => k.spec.meets_open(&cut),
                Piece::Ac(a) => {
                    let density_positive = match &a.density {
                        Density::PerMember { family, .. } => !family.members_meeting(&cut, 1).0.is_empty(),
                        _ => true,
                    };
                    density_positive
                        && match &a.mask {
                            Mask::OnCantor(spec) => spec.meets_open(&cut),
                            _ => true,
                        }
                }
            }
        })
    }

    pub fn restrict_to_window(&self, w: &Window) -> ScaleMeasure {
        ScaleMeasure::from_pieces(self.pieces.iter().map(|p| p.with_window(p.window().intersect(w))).collect())
    }

    /// Restriction to the union of all family members.
    pub fn restrict_to_union(&self, families: &[IntervalFamily]) -> Result<ScaleMeasure> {
        self.restrict_by_region(families, true)
    }

    /// Restriction to the complement of the union of all family members.
    pub fn restrict_to_complement(&self, families: &[IntervalFamily]) -> Result<ScaleMeasure> {
        self.restrict_by_region(families, false)
    }

    fn restrict_by_region(&self, families: &[IntervalFamily], keep_union: bool) -> Result<ScaleMeasure> {
        let mut out = Vec::new();
        for p in &self.pieces {
            for (cell, region) in regions(p.window(), families) {
                let piece = p.with_window(cell);
                match region {
                    Region::Outside => {
                        if !keep_union {
                            out.push(piece);
                        }
                    }
                    Region::Member => {
                        if keep_union {
                            out.push(piece);
                        }
                    }
                    Region::CantorHull(spec) => {
                        if let Some(q) = restrict_in_cantor_hull(piece, &spec, keep_union)? {
                            out.push(q);
                        }
                    }
                }
            }
        }
        Ok(ScaleMeasure::from_pieces(out))
    }

    /// All finite window endpoints, sorted.
    pub fn breakpoints(&self) -> Vec<ExtReal> {
        let mut pts: Vec<ExtReal> = self
            .pieces
            .iter()
            .flat_map(|p| [p.window().lo.clone(), p.window().hi.clone()])
            .filter(|e| e.is_finite())
            .collect();
        pts.sort();
        pts.dedup();
        pts
    }

    /// Signed mass from `anchor` to `x`: the scale function value.
    pub fn evaluate(&self, anchor: &Real, x: &ExtReal, prec: &Precision) -> Result<ExtReal> {
        let a = fin(anchor.clone());
        if *x >= a {
            self.measure_of(&Window::new(a, x.clone()), prec)
        } else {
            Ok(self.measure_of(&Window::new(x.clone(), a), prec)?.neg())
        }
    }

    /// Scale-function value with its error bound, for float callers.
    pub fn evaluate_approx(&self, anchor: &Real, x: &Real, prec: &Precision) -> Result<(f64, f64)> {
        let a = fin(anchor.clone());
        let p = fin(x.clone());
        let (m, sign) = if p >= a { (self.mass(&Window::new(a, p), prec)?, 1.0) } else { (self.mass(&Window::new(p, a), prec)?, -1.0) };
        Ok((sign * m.value.to_f64(), m.err))
    }
}

fn accumulates_inside(family: &IntervalFamily, w: &Window) -> bool {
    match &family.kind {
        FamilyKind::Explicit(_) => false,
        FamilyKind::Chain(c) => {
            let l = fin(rat(&c.limit));
            !family.is_finite() && w.contains(&l)
        }
        FamilyKind::CantorGaps { spec, .. } => family.hull().map_or(false, |h| spec.meets_open(&h.interior().intersect(w))),
    }
}

fn piece_finite_on(p: &Piece, w: &Window) -> bool {
    let cut = p.window().intersect(w);
    if cut.is_empty() {
        return true;
    }
    match p {
        Piece::Cantor(_) => true,
        Piece::Ac(a) => {
            if let Mask::InBalls(_) = a.mask {
                return true;
            }
            match &a.density {
                Density::Constant(_) => cut.lo.is_finite() && cut.hi.is_finite(),
                Density::PowerLaw { exponent, .. } => {
                    let q = exponent + BigRational::from_integer(1.into());
                    let hits_zero = cut.lo == ExtReal::zero();
                    let unbounded = !cut.hi.is_finite();
                    !(hits_zero && !q.is_positive()) && !(unbounded && !q.is_negative())
                }
                Density::Taper { .. } => true,
                Density::PerMember { family, rule } => match rule {
                    MemberRule::CoreWeights { .. } => true,
                    MemberRule::InverseLength { .. } => !family.members_meeting(&cut, 1).1,
                },
            }
        }
    }
}

fn restrict_in_cantor_hull(piece: Piece, spec: &CantorSpec, keep_union: bool) -> Result<Option<Piece>> {
    match piece {
        Piece::Cantor(k) => {
            if k.spec == *spec {
                Ok((!keep_union).then_some(Piece::Cantor(k)))
            } else if !k.spec.meets_open(&k.window) {
                Ok(keep_union.then_some(Piece::Cantor(k)))
            } else {
                Err(Error::Unsupported(format!("{} inside the gaps of {}", k.spec, spec)))
            }
        }
        Piece::Ac(a) => {
            if spec.is_null() {
                return Ok(keep_union.then_some(Piece::Ac(a)));
            }
            if let Density::PerMember { family, .. } = &a.density {
                if family.cantor_spec() == Some(spec) {
                    return Ok(keep_union.then_some(Piece::Ac(a)));
                }
            }
            let mask = match (&a.mask, keep_union) {
                (Mask::Full, true) => Some(Mask::OffCantor(spec.clone())),
                (Mask::Full, false) => Some(Mask::OnCantor(spec.clone())),
                (Mask::OffCantor(s), true) if s == spec => Some(a.mask.clone()),
                (Mask::OffCantor(s), false) if s == spec => None,
                (Mask::OnCantor(s), true) if s == spec => None,
                (Mask::OnCantor(s), false) if s == spec => Some(a.mask.clone()),
                _ => return Err(Error::Unsupported(format!("mask combined with the fat set {spec}"))),
            };
            Ok(mask.map(|mask| Piece::Ac(AcPiece { mask, ..a })))
        }
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Constant(c) => write!(f, "{c}"),
            Density::PowerLaw { coef, exponent } => write!(f, "{coef}*x^({exponent})"),
            Density::PerMember { family, rule } => match rule {
                MemberRule::InverseLength { mass } => write!(f, "{mass}/|J| on {family}"),
                MemberRule::CoreWeights { stride, offset, base } => {
                    write!(f, "weights(n = {stride}k+{offset}+1) * {base} on {family}")
                }
            },
            Density::Taper { coef, anchor, base } => write!(f, "{coef}*exp(-|S|) * {base} from {anchor}"),
        }
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Ac(a) => {
                write!(f, "{} dx on {}", a.density, a.window)?;
                match &a.mask {
                    Mask::Full => Ok(()),
                    Mask::OffCantor(s) => write!(f, " off {s}"),
                    Mask::OnCantor(s) => write!(f, " on {s}"),
                    Mask::InBalls(t) => write!(f, " on {t}"),
                }
            }
            Piece::Cantor(k) => write!(f, "{} d{} on {}", k.scale, k.spec, k.window),
        }
    }
}

impl fmt::Display for ScaleMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.pieces.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::Fractions;

    fn w(a: i64, b: i64) -> Window {
        Window::new(ExtReal::int(a), ExtReal::int(b))
    }

    fn wr(a: Real, b: Real) -> Window {
        Window::new(a.into(), b.into())
    }

    fn trap_families() -> Vec<IntervalFamily> {
        vec![
            IntervalFamily::single(Interval::new(ExtReal::NegInf, ExtReal::int(0), false, true).unwrap()),
            IntervalFamily::single(Interval::new(ExtReal::int(1), ExtReal::PosInf, true, false).unwrap()),
            IntervalFamily::cantor_gaps(CantorSpec::standard(), true),
        ]
    }

    #[test]
    fn lebesgue_masses() {
        let p = Precision::default();
        let leb = ScaleMeasure::lebesgue(w(0, 1));
        assert_eq!(leb.measure_of(&wr(Real::zero(), Real::ratio(1, 2)), &p).unwrap(), ExtReal::ratio(1, 2));
        let line = ScaleMeasure::lebesgue(Window::full());
        assert_eq!(line.measure_of(&Window::new(ExtReal::zero(), ExtReal::PosInf), &p).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn staircase_mass_matches_recursive_oracle() {
        // Equal-mass splitting: the left third of the set carries half the mass.
        let p = Precision::default();
        let c = ScaleMeasure::cantor(CantorSpec::standard(), Real::one());
        assert_eq!(c.measure_of(&wr(Real::zero(), Real::ratio(1, 3)), &p).unwrap(), ExtReal::ratio(1, 2));
        assert_eq!(c.measure_of(&wr(Real::ratio(2, 9), Real::ratio(7, 9)), &p).unwrap(), ExtReal::ratio(1, 2));
    }

    #[test]
    fn reciprocal_divergence() {
        let p = Precision::default();
        let bessel = ScaleMeasure::density(Window::new(ExtReal::zero(), ExtReal::PosInf), Density::reciprocal()).unwrap();
        assert_eq!(bessel.measure_of(&w(0, 1), &p).unwrap(), ExtReal::PosInf);
        let m = bessel.measure_of(&w(1, 3), &p).unwrap().to_f64();
        assert!((m - 3f64.ln()).abs() < 1e-12);
        assert!(!bessel.finite_on(&w(0, 1)));
        assert!(bessel.finite_on(&w(1, 2)));
        assert!(bessel.locally_finite_on(&Window::new(ExtReal::zero(), ExtReal::PosInf)));
    }

    #[test]
    fn bessel_three_scale() {
        // Density x^-2 gives s(x) = (x^-1 - 1) / (-1) from anchor 1.
        let p = Precision::default();
        let d = Density::PowerLaw { coef: Real::one(), exponent: BigRational::from_integer((-2).into()) };
        let m = ScaleMeasure::density(Window::new(ExtReal::zero(), ExtReal::PosInf), d).unwrap();
        assert_eq!(m.evaluate(&Real::one(), &ExtReal::int(2), &p).unwrap(), ExtReal::ratio(1, 2));
        assert_eq!(m.evaluate(&Real::one(), &ExtReal::zero(), &p).unwrap(), ExtReal::NegInf);
    }

    #[test]
    fn union_restriction_of_lebesgue_is_lebesgue_for_null_sets() {
        let leb = ScaleMeasure::lebesgue(Window::full());
        let r = leb.restrict_to_union(&trap_families()).unwrap();
        assert_eq!(r, leb);
        let c = leb.restrict_to_complement(&trap_families()).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn staircase_goes_to_complement() {
        let f = ScaleMeasure::lebesgue(Window::full()).add(&ScaleMeasure::cantor(CantorSpec::standard(), Real::one()));
        let t = f.restrict_to_complement(&trap_families()).unwrap();
        assert_eq!(t, ScaleMeasure::cantor(CantorSpec::standard(), Real::one()));
        assert!(t.positive_on(&wr(Real::ratio(-1, 10), Real::ratio(1, 10))));
        assert!(!t.positive_on(&wr(Real::ratio(2, 5), Real::ratio(3, 5))));
    }

    #[test]
    fn inverse_length_family() {
        let p = Precision::default();
        let fam = IntervalFamily::cantor_gaps(CantorSpec::standard(), true);
        let d = Density::PerMember { family: fam, rule: MemberRule::InverseLength { mass: Real::one() } };
        let m = ScaleMeasure::density(w(0, 1), d).unwrap();
        assert_eq!(m.measure_of(&wr(Real::ratio(1, 3), Real::ratio(2, 3)), &p).unwrap(), ExtReal::int(1));
        assert_eq!(m.measure_of(&wr(Real::ratio(1, 2), Real::ratio(2, 3)), &p).unwrap(), ExtReal::ratio(1, 2));
        assert_eq!(m.measure_of(&wr(Real::ratio(1, 2), Real::ratio(17, 18)), &p).unwrap(), ExtReal::PosInf);
        assert!(!m.locally_finite_on(&w(0, 1)));
    }

    #[test]
    fn fat_cantor_masks() {
        let p = Precision::default();
        let fat = CantorSpec::new(
            BigRational::from_integer(0.into()),
            BigRational::from_integer(1.into()),
            Fractions::Geometric { first: BigRational::new(1.into(), 4.into()), factor: BigRational::new(1.into(), 2.into()) },
        )
        .unwrap();
        let fam = vec![IntervalFamily::cantor_gaps(fat.clone(), true)];
        let leb = ScaleMeasure::lebesgue(w(0, 1));
        let off = leb.restrict_to_union(&fam).unwrap();
        let on = leb.restrict_to_complement(&fam).unwrap();
        let a = off.measure_of(&w(0, 1), &p).unwrap().to_f64();
        let b = on.measure_of(&w(0, 1), &p).unwrap().to_f64();
        assert!((a + b - 1.0).abs() < 1e-9);
        assert!((b - fat.limit_measure().to_f64()).abs() < 1e-9);
        assert!(on.positive_on(&wr(Real::zero(), Real::ratio(1, 1000))));
    }

    #[test]
    fn adjacent_pieces_join() {
        let a = ScaleMeasure::lebesgue(Window::new(ExtReal::NegInf, ExtReal::zero()));
        let b = ScaleMeasure::lebesgue(Window::new(ExtReal::zero(), ExtReal::PosInf));
        assert_eq!(a.add(&b), ScaleMeasure::lebesgue(Window::full()));
    }
}
