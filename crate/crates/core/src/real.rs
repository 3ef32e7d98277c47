//! Exact-or-float reals and the extended real line.
//!
//! Endpoints entered as rationals stay exact through every comparison and
//! arithmetic step; as soon as a float takes part the result is a float.
//! Comparisons between the two kinds are exact (the float is lifted to the
//! rational it denotes), so endpoint membership never depends on an epsilon.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// A finite real number, either an exact rational or an IEEE double.
#[derive(Clone, Debug)]
pub enum Real {
    Exact(BigRational),
    Float(f64),
}

impl Real {
    pub fn int(n: i64) -> Real {
        Real::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Real {
        assert!(den != 0, "zero denominator");
        Real::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Wraps a finite float. Panics on NaN or infinity; those belong in
    /// [`ExtReal`] or are bugs.
    pub fn float(x: f64) -> Real {
        assert!(x.is_finite(), "Real::float requires a finite value, got {x}");
        Real::Float(x)
    }

    pub fn zero() -> Real {
        Real::int(0)
    }

    pub fn one() -> Real {
        Real::int(1)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(q) => q.to_f64().unwrap_or_else(|| {
                if q.is_negative() {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            }),
            Real::Float(x) => *x,
        }
    }

    /// The rational denoted by this value (exact for floats too).
    pub fn to_rational(&self) -> BigRational {
        match self {
            Real::Exact(q) => q.clone(),
            Real::Float(x) => BigRational::from_f64(*x).expect("finite float"),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Real::Exact(q) => q.is_zero(),
            Real::Float(x) => *x == 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Real::Exact(q) => q.is_positive(),
            Real::Float(x) => *x > 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Real::Exact(q) => q.is_negative(),
            Real::Float(x) => *x < 0.0,
        }
    }

    pub fn abs(&self) -> Real {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn floor(&self) -> Real {
        match self {
            Real::Exact(q) => Real::Exact(q.floor()),
            Real::Float(x) => Real::Float(x.floor()),
        }
    }

    pub fn min(self, other: Real) -> Real {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Real) -> Real {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Midpoint `(a + b) / 2`, exact when both inputs are.
    pub fn mid(a: &Real, b: &Real) -> Real {
        (a + b) / &Real::int(2)
    }

    fn combine(
        &self,
        rhs: &Real,
        exact: impl Fn(&BigRational, &BigRational) -> BigRational,
        float: impl Fn(f64, f64) -> f64,
    ) -> Real {
        match (self, rhs) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(exact(a, b)),
            _ => Real::float(float(self.to_f64(), rhs.to_f64())),
        }
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => a.cmp(b),
            (Real::Float(a), Real::Float(b)) => a.total_cmp(b),
            _ => self.to_rational().cmp(&other.to_rational()),
        }
    }
}

impl<'a> Add<&'a Real> for &'a Real {
    type Output = Real;
    fn add(self, rhs: &Real) -> Real {
        self.combine(rhs, |a, b| a + b, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Real> for &'a Real {
    type Output = Real;
    fn sub(self, rhs: &Real) -> Real {
        self.combine(rhs, |a, b| a - b, |a, b| a - b)
    }
}

impl<'a> Mul<&'a Real> for &'a Real {
    type Output = Real;
    fn mul(self, rhs: &Real) -> Real {
        self.combine(rhs, |a, b| a * b, |a, b| a * b)
    }
}

impl<'a> Div<&'a Real> for &'a Real {
    type Output = Real;
    fn div(self, rhs: &Real) -> Real {
        assert!(!rhs.is_zero(), "division by zero");
        self.combine(rhs, |a, b| a / b, |a, b| a / b)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a Real> for Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real { (&self).$m(rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        match self {
            Real::Exact(q) => Real::Exact(-q),
            Real::Float(x) => Real::Float(-x),
        }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        -&self
    }
}

impl From<i64> for Real {
    fn from(n: i64) -> Real {
        Real::int(n)
    }
}

impl From<BigRational> for Real {
    fn from(q: BigRational) -> Real {
        Real::Exact(q)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(q) => {
                if q.denom().is_one() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            Real::Float(x) => {
                // `{:?}` keeps a trailing `.0` so floats never read back as exact.
                write!(f, "{x:?}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse real number from {0:?}")]
pub struct ParseRealError(pub String);

impl FromStr for Real {
    type Err = ParseRealError;

    /// Accepts `p`, `p/q` (exact) and decimal or scientific notation
    /// containing `.`/`e` (float).
    fn from_str(s: &str) -> Result<Real, ParseRealError> {
        let t = s.trim();
        let err = || ParseRealError(s.to_string());
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            return Ok(Real::Exact(BigRational::new(n, d)));
        }
        if t.contains(['.', 'e', 'E']) {
            let x: f64 = t.parse().map_err(|_| err())?;
            if !x.is_finite() {
                return Err(err());
            }
            return Ok(Real::Float(x));
        }
        let n: BigInt = t.parse().map_err(|_| err())?;
        Ok(Real::Exact(BigRational::from_integer(n)))
    }
}

/// A point of the extended real line `[-inf, +inf]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtReal {
    NegInf,
    Finite(Real),
    PosInf,
}

impl ExtReal {
    pub fn int(n: i64) -> ExtReal {
        ExtReal::Finite(Real::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> ExtReal {
        ExtReal::Finite(Real::ratio(n, d))
    }

    pub fn float(x: f64) -> ExtReal {
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(Real::float(x))
        }
    }

    pub fn zero() -> ExtReal {
        ExtReal::int(0)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<&Real> {
        match self {
            ExtReal::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(r) => r.to_f64(),
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Sum, `None` for the undefined `+inf + -inf`.
    pub fn checked_add(&self, other: &ExtReal) -> Option<ExtReal> {
        use ExtReal::*;
        match (self, other) {
            (PosInf, NegInf) | (NegInf, PosInf) => None,
            (PosInf, _) | (_, PosInf) => Some(PosInf),
            (NegInf, _) | (_, NegInf) => Some(NegInf),
            (Finite(a), Finite(b)) => Some(Finite(a + b)),
        }
    }

    /// Adds a finite number; infinite tags are preserved.
    pub fn add_real(&self, r: &Real) -> ExtReal {
        match self {
            ExtReal::Finite(a) => ExtReal::Finite(a + r),
            other => other.clone(),
        }
    }

    pub fn neg(&self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::Finite(r) => ExtReal::Finite(-r),
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl From<Real> for ExtReal {
    fn from(r: Real) -> ExtReal {
        ExtReal::Finite(r)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::PosInf => write!(f, "+inf"),
            ExtReal::Finite(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = ParseRealError;

    fn from_str(s: &str) -> Result<ExtReal, ParseRealError> {
        match s.trim() {
            "-inf" | "-infinity" => Ok(ExtReal::NegInf),
            "+inf" | "inf" | "infinity" | "+infinity" => Ok(ExtReal::PosInf),
            t => Ok(ExtReal::Finite(t.parse()?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_float_compare_exactly() {
        assert_eq!(Real::ratio(1, 2), Real::float(0.5));
        // 0.1 is not 1/10 in binary.
        assert_ne!(Real::ratio(1, 10), Real::float(0.1));
        assert!(Real::ratio(1, 3) < Real::float(0.3333333333333334));
    }

    #[test]
    fn exactness_is_contagious_only_for_floats() {
        let a = Real::ratio(1, 3) + Real::ratio(2, 3);
        assert!(a.is_exact());
        assert_eq!(a, Real::one());
        let b = Real::ratio(1, 3) + Real::float(1.0);
        assert!(!b.is_exact());
    }

    #[test]
    fn total_order_on_extended_line() {
        let xs = [ExtReal::NegInf, ExtReal::int(-5), ExtReal::float(0.25), ExtReal::PosInf];
        for w in xs.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert_eq!(ExtReal::PosInf.add_real(&Real::int(3)), ExtReal::PosInf);
        assert_eq!(ExtReal::NegInf.checked_add(&ExtReal::PosInf), None);
    }

    #[test]
    fn parse_and_display() {
        let r: Real = "3/6".parse().unwrap();
        assert_eq!(r.to_string(), "1/2");
        let f: Real = "0.5".parse().unwrap();
        assert!(!f.is_exact());
        assert_eq!(f.to_string(), "0.5");
        assert_eq!("-inf".parse::<ExtReal>().unwrap(), ExtReal::NegInf);
        assert!("1/0".parse::<Real>().is_err());
    }
}
