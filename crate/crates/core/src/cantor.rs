//! Symmetric Cantor-type sets built by removing a middle fraction from
//! every cell, and the equal-mass staircase they carry.
//!
//! Level `d` has `2^d` cells; from each the open middle fraction `rho_d`
//! is removed. Gaps are indexed by `(level, pos)` and canonically by
//! `2^level - 1 + pos` (breadth-first, left to right).

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::interval::Window;
use crate::real::{ExtReal, Real};

/// Removal fractions per level.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Fractions {
    /// The same middle fraction at every level (`1/3` gives the standard set).
    Constant(BigRational),
    /// `rho_d = first * factor^d`; with `factor < 1` the limit set is fat.
    Geometric { first: BigRational, factor: BigRational },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CantorSpec {
    pub lo: BigRational,
    pub hi: BigRational,
    pub fractions: Fractions,
}

/// Where a point sits relative to the set and its gaps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CantorLocation {
    Below,
    Above,
    InGap { level: u32, pos: u64 },
    GapLeftEnd { level: u32, pos: u64 },
    GapRightEnd { level: u32, pos: u64 },
    InK,
    Undecided,
}

/// A value with an absolute error bound (`err == 0` means exact).
#[derive(Clone, Debug, PartialEq)]
pub struct Approx {
    pub value: Real,
    pub err: f64,
}

const LOCATE_BUDGET: u32 = 4096;
const MAX_INDEXED_LEVEL: u32 = 62;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn pow2_inv(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k as usize)
}

impl CantorSpec {
    pub fn new(lo: BigRational, hi: BigRational, fractions: Fractions) -> Result<CantorSpec> {
        if lo >= hi {
            return Err(Error::InvalidInput("Cantor base needs lo < hi".into()));
        }
        let unit = |r: &BigRational| r.is_positive() && *r < BigRational::one();
        match &fractions {
            Fractions::Constant(r) if !unit(r) => {
                return Err(Error::InvalidInput("removal fraction must lie in (0, 1)".into()))
            }
            Fractions::Geometric { first, factor }
                if !unit(first) || !factor.is_positive() || *factor > BigRational::one() =>
            {
                return Err(Error::InvalidInput("geometric fractions need first in (0,1), factor in (0,1]".into()))
            }
            _ => {}
        }
        Ok(CantorSpec { lo, hi, fractions })
    }

    /// The middle-thirds set on `[0, 1]`.
    pub fn standard() -> CantorSpec {
        CantorSpec::new(q(0, 1), q(1, 1), Fractions::Constant(q(1, 3))).unwrap()
    }

    pub fn base_window(&self) -> Window {
        Window::new(ExtReal::Finite(Real::Exact(self.lo.clone())), ExtReal::Finite(Real::Exact(self.hi.clone())))
    }

    pub fn base_length(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn rho(&self, d: u32) -> BigRational {
        match &self.fractions {
            Fractions::Constant(r) => r.clone(),
            Fractions::Geometric { first, factor } => first * num_traits::pow(factor.clone(), d as usize),
        }
    }

    /// Cell lengths `l_0 .. l_depth`.
    pub fn cell_lengths(&self, depth: u32) -> Vec<BigRational> {
        let mut out = Vec::with_capacity(depth as usize + 1);
        let mut len = self.base_length();
        out.push(len.clone());
        for d in 0..depth {
            len = &len * (BigRational::one() - self.rho(d)) / q(2, 1);
            out.push(len.clone());
        }
        out
    }

    /// Length of each gap removed at level `d`.
    pub fn gap_length(&self, d: u32) -> BigRational {
        let lens = self.cell_lengths(d);
        &lens[d as usize] * self.rho(d)
    }

    /// Left end of cell `pos` at level `d`.
    fn cell_start(&self, d: u32, pos: u64, lens: &[BigRational]) -> BigRational {
        let mut c = self.lo.clone();
        for i in 0..d {
            let bit = (pos >> (d - 1 - i)) & 1;
            if bit == 1 {
                c += &lens[i as usize] - &lens[i as usize + 1];
            }
        }
        c
    }

    /// Endpoints of the gap removed at `(level, pos)`.
    pub fn gap(&self, level: u32, pos: u64) -> (BigRational, BigRational) {
        let lens = self.cell_lengths(level + 1);
        let c = self.cell_start(level, pos, &lens);
        let l = &lens[level as usize];
        let side = &lens[level as usize + 1];
        (&c + side, &c + l - side)
    }

    pub fn member_index(level: u32, pos: u64) -> u64 {
        (1u64 << level) - 1 + pos
    }

    pub fn level_pos(index: u64) -> (u32, u64) {
        let level = 63 - (index + 1).leading_zeros();
        (level, index + 1 - (1u64 << level))
    }

    pub fn is_null(&self) -> bool {
        match &self.fractions {
            Fractions::Constant(_) => true,
            Fractions::Geometric { factor, .. } => factor.is_one(),
        }
    }

    /// Lebesgue measure of the limit set (float for fat sets).
    pub fn limit_measure(&self) -> Real {
        if self.is_null() {
            return Real::zero();
        }
        let (first, factor) = match &self.fractions {
            Fractions::Geometric { first, factor } => (first.to_f64().unwrap(), factor.to_f64().unwrap()),
            Fractions::Constant(_) => unreachable!(),
        };
        let mut prod = 1.0f64;
        let mut rho = first;
        while rho > 1e-18 {
            prod *= 1.0 - rho;
            rho *= factor;
        }
        Real::float(self.base_length().to_f64().unwrap() * prod)
    }

    /// Exact descent. Constant specs detect cycles of the normalized
    /// position, so rational inputs in the set resolve to `InK`.
    pub fn locate(&self, x: &Real) -> CantorLocation {
        let x = x.to_rational();
        if x < self.lo {
            return CantorLocation::Below;
        }
        if x > self.hi {
            return CantorLocation::Above;
        }
        let constant = matches!(self.fractions, Fractions::Constant(_));
        let mut seen: HashMap<BigRational, u32> = HashMap::new();
        let mut c = self.lo.clone();
        let mut len = self.base_length();
        let mut pos: u64 = 0;
        for d in 0..LOCATE_BUDGET {
            if x == c || x == &c + &len {
                return CantorLocation::InK;
            }
            let t = (&x - &c) / &len;
            if constant {
                if seen.contains_key(&t) {
                    return CantorLocation::InK;
                }
                seen.insert(t.clone(), d);
            }
            let rho = self.rho(d);
            let side = (BigRational::one() - &rho) / q(2, 1);
            let gap_hi = BigRational::one() - &side;
            let indexed = d <= MAX_INDEXED_LEVEL;
            if t == side {
                return if indexed { CantorLocation::GapLeftEnd { level: d, pos } } else { CantorLocation::Undecided };
            }
            if t == gap_hi {
                return if indexed { CantorLocation::GapRightEnd { level: d, pos } } else { CantorLocation::Undecided };
            }
            if t > side && t < gap_hi {
                return if indexed { CantorLocation::InGap { level: d, pos } } else { CantorLocation::Undecided };
            }
            let child = &len * &side;
            if t < side {
                pos = pos.wrapping_mul(2);
            } else {
                c = &c + &len - &child;
                pos = pos.wrapping_mul(2) + 1;
            }
            len = child;
            if !constant && d >= 200 {
                break;
            }
        }
        CantorLocation::Undecided
    }

    /// Whether the open window meets the limit set. Exact and terminating
    /// for nonempty windows.
    pub fn meets_open(&self, w: &Window) -> bool {
        let w = w.intersect(&self.base_window());
        if w.is_empty() {
            return false;
        }
        let x = w.lo.finite().unwrap().to_rational();
        let y = w.hi.finite().unwrap().to_rational();
        self.meets_rec(&x, &y, self.lo.clone(), self.base_length(), 0)
    }

    fn meets_rec(&self, x: &BigRational, y: &BigRational, c: BigRational, len: BigRational, d: u32) -> bool {
        let end = &c + &len;
        if *y <= c || *x >= end {
            return false;
        }
        if (*x < c && c < *y) || (*x < end && end < *y) {
            return true;
        }
        if *x == c && *y == end {
            return true;
        }
        let side = &len * (BigRational::one() - self.rho(d)) / q(2, 1);
        let right_start = &end - &side;
        self.meets_rec(x, y, c, side.clone(), d + 1) || self.meets_rec(x, y, right_start, side, d + 1)
    }

    /// Staircase value in `[0, 1]`, equal-mass splitting. Exact for
    /// constant specs at rational points; otherwise within `2^-depth`.
    pub fn staircase(&self, x: &Real, depth: u32) -> Approx {
        let xr = x.to_rational();
        if xr <= self.lo {
            return Approx { value: Real::zero(), err: 0.0 };
        }
        if xr >= self.hi {
            return Approx { value: Real::one(), err: 0.0 };
        }
        let constant = matches!(self.fractions, Fractions::Constant(_));
        let mut seen: HashMap<BigRational, (u32, BigRational)> = HashMap::new();
        let mut c = self.lo.clone();
        let mut len = self.base_length();
        let mut v = BigRational::zero();
        let limit = if constant { LOCATE_BUDGET } else { depth };
        for d in 0..limit {
            let t = (&xr - &c) / &len;
            if t.is_zero() {
                return Approx { value: Real::Exact(v), err: 0.0 };
            }
            if t.is_one() {
                return Approx { value: Real::Exact(v + pow2_inv(d)), err: 0.0 };
            }
            if constant {
                if let Some((d0, v0)) = seen.get(&t) {
                    // Bits d0..d repeat forever: v = v0 + (v - v0) / (1 - 2^-(d - d0)).
                    let p = d - d0;
                    let ratio = BigRational::one() - pow2_inv(p);
                    let value = v0 + (&v - v0) / ratio;
                    return Approx { value: Real::Exact(value), err: 0.0 };
                }
                seen.insert(t.clone(), (d, v.clone()));
            }
            let rho = self.rho(d);
            let side = (BigRational::one() - &rho) / q(2, 1);
            let half = pow2_inv(d + 1);
            if t >= side && t <= BigRational::one() - &side {
                return Approx { value: Real::Exact(v + half), err: 0.0 };
            }
            let child = &len * &side;
            if t > side {
                c = &c + &len - &child;
                v += half;
            }
            len = child;
        }
        let err = 0.5f64.powi(limit as i32);
        Approx { value: Real::Exact(v), err }
    }

    /// Gaps (with canonical index) whose closure lies inside the closed
    /// range `[lo, hi]`, breadth-first, up to `limit` gaps.
    pub fn gaps_within(&self, lo: &ExtReal, hi: &ExtReal, limit: usize) -> Vec<(u64, BigRational, BigRational)> {
        let mut out = Vec::new();
        let mut frontier: Vec<(u64, BigRational)> = vec![(0, self.lo.clone())];
        let mut len = self.base_length();
        let mut level = 0u32;
        while !frontier.is_empty() && out.len() < limit && level <= MAX_INDEXED_LEVEL {
            let side = &len * (BigRational::one() - self.rho(level)) / q(2, 1);
            let mut next = Vec::new();
            for (pos, c) in frontier {
                let end = &c + &len;
                let ce = ExtReal::Finite(Real::Exact(c.clone()));
                let ee = ExtReal::Finite(Real::Exact(end.clone()));
                if ee <= *lo || ce >= *hi {
                    continue;
                }
                let a = &c + &side;
                let b = &end - &side;
                let ae = ExtReal::Finite(Real::Exact(a.clone()));
                let be = ExtReal::Finite(Real::Exact(b.clone()));
                if ae >= *lo && be <= *hi && out.len() < limit {
                    out.push((CantorSpec::member_index(level, pos), a, b.clone()));
                }
                next.push((pos * 2, c));
                next.push((pos * 2 + 1, b));
            }
            frontier = next;
            len = side;
            level += 1;
        }
        out
    }
}

impl fmt::Display for CantorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.fractions {
            Fractions::Constant(r) => write!(f, "cantor[{}, {}; remove {}]", self.lo, self.hi, r),
            Fractions::Geometric { first, factor } => {
                write!(f, "cantor[{}, {}; remove {}*{}^d]", self.lo, self.hi, first, factor)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Real {
        Real::ratio(n, d)
    }

    #[test]
    fn standard_gaps() {
        let k = CantorSpec::standard();
        assert_eq!(k.gap(0, 0), (q(1, 3), q(2, 3)));
        assert_eq!(k.gap(1, 0), (q(1, 9), q(2, 9)));
        assert_eq!(k.gap(1, 1), (q(7, 9), q(8, 9)));
        assert_eq!(CantorSpec::level_pos(0), (0, 0));
        assert_eq!(CantorSpec::level_pos(2), (1, 1));
        assert_eq!(CantorSpec::level_pos(3), (2, 0));
        assert_eq!(CantorSpec::member_index(2, 3), 6);
    }

    #[test]
    fn locate_points() {
        let k = CantorSpec::standard();
        assert_eq!(k.locate(&r(1, 2)), CantorLocation::InGap { level: 0, pos: 0 });
        assert_eq!(k.locate(&r(2, 3)), CantorLocation::GapRightEnd { level: 0, pos: 0 });
        assert_eq!(k.locate(&r(7, 9)), CantorLocation::GapLeftEnd { level: 1, pos: 1 });
        // 1/4 = 0.0202..._3 lies in K without being an endpoint.
        assert_eq!(k.locate(&r(1, 4)), CantorLocation::InK);
        assert_eq!(k.locate(&r(0, 1)), CantorLocation::InK);
        assert_eq!(k.locate(&r(-1, 2)), CantorLocation::Below);
    }

    #[test]
    fn staircase_exact_values() {
        let k = CantorSpec::standard();
        assert_eq!(k.staircase(&r(1, 3), 40).value, r(1, 2));
        assert_eq!(k.staircase(&r(1, 2), 40).value, r(1, 2));
        assert_eq!(k.staircase(&r(1, 9), 40).value, r(1, 4));
        // c(1/4) = 1/3: ternary 0.0202... maps to binary 0.0101...
        let v = k.staircase(&r(1, 4), 40);
        assert_eq!(v.value, r(1, 3));
        assert_eq!(v.err, 0.0);
        assert_eq!(k.staircase(&r(3, 4), 40).value, r(2, 3));
    }

    #[test]
    fn meets_open_windows() {
        let k = CantorSpec::standard();
        let w = |a: Real, b: Real| Window::new(a.into(), b.into());
        assert!(!k.meets_open(&w(r(1, 3), r(2, 3))));
        assert!(k.meets_open(&w(r(1, 3), r(7, 10))));
        assert!(!k.meets_open(&w(r(4, 10), r(5, 10))));
        assert!(k.meets_open(&w(r(-1, 1), r(1, 100))));
        assert!(!k.meets_open(&w(r(2, 1), r(3, 1))));
    }

    #[test]
    fn fat_set_has_positive_measure() {
        let fat = CantorSpec::new(q(0, 1), q(1, 1), Fractions::Geometric { first: q(1, 4), factor: q(1, 2) }).unwrap();
        assert!(!fat.is_null());
        let m = fat.limit_measure().to_f64();
        assert!(m > 0.5 && m < 0.75, "{m}");
        assert_eq!(fat.locate(&r(1, 2)), CantorLocation::InGap { level: 0, pos: 0 });
        assert_eq!(fat.gap(0, 0), (q(3, 8), q(5, 8)));
    }

    #[test]
    fn gaps_within_respects_range() {
        let k = CantorSpec::standard();
        let all = k.gaps_within(&ExtReal::NegInf, &ExtReal::PosInf, 7);
        assert_eq!(all.len(), 7);
        assert_eq!(all[0].0, 0);
        let right = k.gaps_within(&ExtReal::ratio(2, 3), &ExtReal::PosInf, 3);
        assert!(right.iter().all(|(_, a, _)| *a > q(2, 3)));
    }
}
