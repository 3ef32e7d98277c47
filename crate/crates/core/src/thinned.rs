//! Thinned scales: a scale measure cut down to a dense open set of small mass.
//!
//! The rationals of an interval `J` are enumerated by height `|p| + q`, then
//! by ascending numerator. Around the `k`-th rational we place the largest
//! ball of radius `2^-j` whose base mass inside `J` is below `eps * 2^-(k+1)`.
//! The union `G` of all balls is open and dense in `J`, so the thinned scale
//! `1_G ds` is still strictly increasing, while its total mass stays below
//! `eps`. Only the first `depth` balls are stored; the rest are bounded by
//! `eps * 2^-depth`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::interval::{Interval, Window};
use crate::measure::{AcPiece, Mask, Piece, Precision, ScaleMeasure};
use crate::real::{ExtReal, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub index: usize,
    pub center: BigRational,
    pub radius: BigRational,
}

impl Ball {
    pub fn window(&self) -> Window {
        Window::new(
            ExtReal::Finite(Real::Exact(&self.center - &self.radius)),
            ExtReal::Finite(Real::Exact(&self.center + &self.radius)),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThinnedSet {
    pub interval: Interval,
    pub eps: BigRational,
    pub balls: Vec<Ball>,
    pub base: Box<ScaleMeasure>,
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn pow2_inv(k: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

/// Rationals of an interval in height order.
pub struct RationalEnumerator {
    interval: Interval,
    height: i64,
    pending: std::vec::IntoIter<BigRational>,
}

impl RationalEnumerator {
    pub fn new(interval: &Interval) -> RationalEnumerator {
        RationalEnumerator { interval: interval.clone(), height: 0, pending: Vec::new().into_iter() }
    }
}

/// The rationals of height `h` in `iv`, by ascending numerator.
fn rationals_of_height(iv: &Interval, h: i64) -> Vec<BigRational> {
    let mut out = Vec::new();
    for p in -(h - 1)..=(h - 1) {
        let qd = h - p.abs();
        if qd < 1 || p.abs().gcd(&qd) != 1 {
            continue;
        }
        let r = q(p, qd);
        if iv.contains_real(&Real::Exact(r.clone())) {
            out.push(r);
        }
    }
    out
}

fn height_of(r: &BigRational) -> i64 {
    let n: i64 = r.numer().abs().try_into().unwrap_or(i64::MAX / 2);
    let d: i64 = r.denom().try_into().unwrap_or(i64::MAX / 2);
    n + d
}

impl Iterator for RationalEnumerator {
    type Item = BigRational;

    fn next(&mut self) -> Option<BigRational> {
        loop {
            if let Some(r) = self.pending.next() {
                return Some(r);
            }
            self.height += 1;
            if self.height > 1 << 20 {
                return None;
            }
            self.pending = rationals_of_height(&self.interval, self.height).into_iter();
        }
    }
}

/// Enumeration index of rationals, via cumulative counts per height.
pub struct RationalIndex {
    interval: Interval,
    cumulative: Vec<u64>,
}

impl RationalIndex {
    pub fn new(interval: &Interval) -> RationalIndex {
        RationalIndex { interval: interval.clone(), cumulative: vec![0] }
    }

    /// Position of `r` in the enumeration of the interval's rationals.
    pub fn index_of(&mut self, r: &BigRational) -> Option<u64> {
        if !self.interval.contains_real(&Real::Exact(r.clone())) {
            return None;
        }
        let h = height_of(r);
        while (self.cumulative.len() as i64) < h {
            let next = self.cumulative.len() as i64;
            let count = rationals_of_height(&self.interval, next).len() as u64;
            let last = *self.cumulative.last().unwrap();
            self.cumulative.push(last + count);
        }
        let before = self.cumulative[(h - 1) as usize];
        let pos = rationals_of_height(&self.interval, h).iter().position(|x| x == r)? as u64;
        Some(before + pos)
    }
}

/// The rational of least height strictly between `x < y`.
pub fn simplest_between(x: &BigRational, y: &BigRational) -> BigRational {
    if x.is_negative() && y.is_positive() {
        return BigRational::zero();
    }
    if !y.is_positive() {
        return -simplest_between(&-y, &-x);
    }
    simplest_nonneg(x, Some(y))
}

/// Least-height rational in `(x, y)` for `0 <= x`, `y = None` meaning infinity.
fn simplest_nonneg(x: &BigRational, y: Option<&BigRational>) -> BigRational {
    let n = x.floor() + BigRational::one();
    match y {
        None => n,
        Some(y) if n < *y => n,
        Some(y) => {
            let a = x.floor();
            let lo = y - &a;
            let hi = x - &a;
            // Reciprocals swap order: (1/lo, 1/hi), unbounded when x is an integer.
            let inner = if hi.is_zero() { simplest_nonneg(&lo.recip(), None) } else { simplest_nonneg(&lo.recip(), Some(&hi.recip())) };
            a + inner.recip()
        }
    }
}

impl ThinnedSet {
    /// Builds the set for `base` on `interval`, materializing `depth` balls.
    pub fn build(interval: &Interval, base: &ScaleMeasure, eps: BigRational, depth: usize, prec: &Precision) -> Result<ThinnedSet> {
        if !eps.is_positive() {
            return Err(Error::InvalidInput("thinning needs eps > 0".into()));
        }
        if depth == 0 {
            return Err(Error::InvalidInput("thinning needs depth >= 1".into()));
        }
        let base = base.restrict_to_window(&interval.interior());
        if base.pieces().iter().any(|p| !matches!(p, Piece::Ac(a) if a.mask == Mask::Full)) {
            return Err(Error::Unsupported("thinning applies to unmasked densities only".into()));
        }
        let mut set = ThinnedSet { interval: interval.clone(), eps, balls: Vec::new(), base: Box::new(base) };
        for (k, center) in RationalEnumerator::new(interval).take(depth).enumerate() {
            let ball = set.ball_at(k, center, prec)?;
            set.balls.push(ball);
        }
        Ok(set)
    }

    /// Mass budget of ball `k`.
    pub fn budget(&self, k: usize) -> BigRational {
        &self.eps * pow2_inv(k + 1)
    }

    fn ball_at(&self, k: usize, center: BigRational, prec: &Precision) -> Result<Ball> {
        let budget = self.budget(k);
        let budget_f = Real::Exact(budget.clone());
        let mut radius = BigRational::one();
        for _ in 0..2048 {
            let ball = Ball { index: k, center: center.clone(), radius: radius.clone() };
            let cut = ball.window().intersect(&self.interval.interior());
            let m = self.base.mass(&cut, prec)?;
            if let ExtReal::Finite(v) = &m.value {
                let upper = v + &Real::float(m.err);
                if upper < budget_f || (m.err == 0.0 && *v < budget_f) {
                    return Ok(ball);
                }
            }
            radius /= BigRational::from_integer(2.into());
        }
        Err(Error::ApproximationDepthExceeded(format!("no ball radius found around {center}")))
    }

    /// Ball number `k`, computed on demand.
    pub fn ball(&self, k: usize, prec: &Precision) -> Result<Ball> {
        if let Some(b) = self.balls.get(k) {
            return Ok(b.clone());
        }
        let center = RationalEnumerator::new(&self.interval)
            .nth(k)
            .ok_or_else(|| Error::ApproximationDepthExceeded(format!("rational number {k} out of range")))?;
        self.ball_at(k, center, prec)
    }

    pub fn depth(&self) -> usize {
        self.balls.len()
    }

    /// Disjoint open windows covering the stored balls inside the interval.
    pub fn union_windows(&self) -> Vec<Window> {
        let inner = self.interval.interior();
        let mut ws: Vec<Window> = self.balls.iter().map(|b| b.window().intersect(&inner)).filter(|w| !w.is_empty()).collect();
        ws.sort();
        let mut out: Vec<Window> = Vec::new();
        for w in ws {
            match out.last_mut() {
                Some(last) if w.lo <= last.hi => {
                    if w.hi > last.hi {
                        last.hi = w.hi;
                    }
                }
                _ => out.push(w),
            }
        }
        out
    }

    /// Upper bound on the base mass of all unstored balls.
    pub fn tail_bound(&self) -> Real {
        Real::Exact(&self.eps * pow2_inv(self.balls.len()))
    }

    /// Base mass of the stored balls plus the tail bound; always `< eps`.
    pub fn mass_bound(&self, prec: &Precision) -> Result<Real> {
        let mut total = self.tail_bound();
        for w in self.union_windows() {
            let m = self.base.mass(&w, prec)?;
            match m.value {
                ExtReal::Finite(v) if m.err == 0.0 => total = &total + &v,
                ExtReal::Finite(v) => total = &(&total + &v) + &Real::float(m.err),
                _ => return Err(Error::InvalidInput("thinned ball with infinite base mass".into())),
            }
        }
        Ok(total)
    }

    /// The thinned scale measure `1_G * base`.
    pub fn measure(&self) -> Result<ScaleMeasure> {
        let mut pieces = Vec::new();
        for p in self.base.pieces() {
            match p {
                Piece::Ac(a) if a.mask == Mask::Full => pieces.push(Piece::Ac(AcPiece {
                    window: a.window.clone(),
                    mask: Mask::InBalls(self.clone()),
                    density: a.density.clone(),
                })),
                _ => return Err(Error::Unsupported("thinning applies to unmasked densities only".into())),
            }
        }
        Ok(ScaleMeasure::from_pieces(pieces))
    }

    /// A ball strictly inside `(x, y)` certifying that the thinned scale
    /// increases between them: `(ball index, positive base mass)`.
    pub fn increase_witness(&self, x: &BigRational, y: &BigRational, index: &mut RationalIndex, prec: &Precision) -> Result<(u64, Real)> {
        if x >= y {
            return Err(Error::InvalidInput("witness needs x < y".into()));
        }
        let r = simplest_between(x, y);
        let k = index
            .index_of(&r)
            .ok_or_else(|| Error::InvalidInput(format!("{r} is not in {}", self.interval)))?;
        let ball = self.ball(k as usize, prec)?;
        let cut = ball.window().intersect(&Window::new(Real::Exact(x.clone()).into(), Real::Exact(y.clone()).into()));
        let m = self.base.mass(&cut, prec)?;
        match m.value {
            ExtReal::Finite(v) if v.is_positive() => Ok((k, v)),
            _ => Err(Error::NotDense(format!("ball {k} carries no mass in ({x}, {y})"))),
        }
    }
}

impl fmt::Display for ThinnedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "thinned({}, eps {}, {} balls)", self.interval, self.eps, self.balls.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::closed(Real::zero(), Real::one())
    }

    #[test]
    fn enumeration_order() {
        let first: Vec<String> = RationalEnumerator::new(&unit()).take(6).map(|r| r.to_string()).collect();
        assert_eq!(first, vec!["0", "1", "1/2", "1/3", "1/4", "2/3"]);
        let mut idx = RationalIndex::new(&unit());
        assert_eq!(idx.index_of(&q(1, 4)), Some(4));
        assert_eq!(idx.index_of(&q(2, 3)), Some(5));
        let line: Vec<String> = RationalEnumerator::new(&Interval::real_line()).take(5).map(|r| r.to_string()).collect();
        assert_eq!(line, vec!["0", "-1", "1", "-2", "-1/2"]);
    }

    #[test]
    fn simplest_rationals() {
        assert_eq!(simplest_between(&q(1, 3), &q(1, 2)), q(2, 5));
        assert_eq!(simplest_between(&q(-1, 2), &q(1, 2)), q(0, 1));
        assert_eq!(simplest_between(&q(3, 2), &q(7, 2)), q(2, 1));
        assert_eq!(simplest_between(&q(-7, 10), &q(-3, 5)), q(-2, 3));
        assert_eq!(simplest_between(&q(0, 1), &q(1, 100)), q(1, 101));
    }

    #[test]
    fn mass_stays_below_eps() {
        let p = Precision::default();
        let leb = ScaleMeasure::lebesgue(Window::full());
        for eps in [q(1, 10), q(1, 100)] {
            let t = ThinnedSet::build(&unit(), &leb, eps.clone(), 20, &p).unwrap();
            let bound = t.mass_bound(&p).unwrap();
            assert!(bound < Real::Exact(eps));
        }
    }

    #[test]
    fn witness_exists() {
        let p = Precision::default();
        let leb = ScaleMeasure::lebesgue(Window::full());
        let t = ThinnedSet::build(&unit(), &leb, q(1, 10), 20, &p).unwrap();
        let mut idx = RationalIndex::new(&unit());
        let (k, m) = t.increase_witness(&q(1, 3), &q(1, 2), &mut idx, &p).unwrap();
        assert!(k > 0);
        assert!(m.is_positive());
    }
}
