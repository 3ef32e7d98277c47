//! Intervals with endpoint-membership flags, and open windows.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::real::{ExtReal, Real};

/// A nonempty, nondegenerate interval `<a, b>` on the extended line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub left: ExtReal,
    pub right: ExtReal,
    pub left_closed: bool,
    pub right_closed: bool,
}

impl Interval {
    pub fn new(left: ExtReal, right: ExtReal, left_closed: bool, right_closed: bool) -> Result<Interval> {
        if left >= right {
            return Err(Error::InvalidInput(format!("interval needs left < right, got {left} and {right}")));
        }
        if (left_closed && !left.is_finite()) || (right_closed && !right.is_finite()) {
            return Err(Error::InvalidInput("an infinite endpoint cannot be closed".into()));
        }
        Ok(Interval { left, right, left_closed, right_closed })
    }

    pub fn closed(a: Real, b: Real) -> Interval {
        Interval::new(a.into(), b.into(), true, true).expect("valid closed interval")
    }

    pub fn open(a: ExtReal, b: ExtReal) -> Interval {
        Interval::new(a, b, false, false).expect("valid open interval")
    }

    pub fn real_line() -> Interval {
        Interval::open(ExtReal::NegInf, ExtReal::PosInf)
    }

    /// Same endpoints, flags replaced; infinite ends stay open.
    pub fn with_flags(&self, left_closed: bool, right_closed: bool) -> Interval {
        Interval {
            left: self.left.clone(),
            right: self.right.clone(),
            left_closed: left_closed && self.left.is_finite(),
            right_closed: right_closed && self.right.is_finite(),
        }
    }

    pub fn contains(&self, x: &ExtReal) -> bool {
        let above = if self.left_closed { *x >= self.left } else { *x > self.left };
        let below = if self.right_closed { *x <= self.right } else { *x < self.right };
        above && below && x.is_finite()
    }

    pub fn contains_real(&self, x: &Real) -> bool {
        self.contains(&ExtReal::Finite(x.clone()))
    }

    /// The anchor point: `(a+b)/2`, `a+1`, `b-1` or `0`.
    pub fn midpoint(&self) -> Real {
        match (&self.left, &self.right) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => Real::mid(a, b),
            (ExtReal::Finite(a), _) => a + &Real::one(),
            (_, ExtReal::Finite(b)) => b - &Real::one(),
            _ => Real::zero(),
        }
    }

    pub fn interior(&self) -> Window {
        Window::new(self.left.clone(), self.right.clone())
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        let left_ok = match self.left.cmp(&other.left) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => other.left_closed || !self.left_closed,
            std::cmp::Ordering::Less => false,
        };
        let right_ok = match self.right.cmp(&other.right) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Equal => other.right_closed || !self.right_closed,
            std::cmp::Ordering::Greater => false,
        };
        left_ok && right_ok
    }

    pub fn is_closed(&self) -> bool {
        self.left_closed && self.right_closed
    }

    /// Length as an extended real (`+inf` for rays).
    pub fn length(&self) -> ExtReal {
        self.interior().length()
    }
}

/// True iff no point lies in both intervals.
pub fn intervals_disjoint(a: &Interval, b: &Interval) -> bool {
    let (first, second) = if a.left <= b.left { (a, b) } else { (b, a) };
    if first.left == second.left {
        return false;
    }
    match first.right.cmp(&second.left) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Equal => !(first.right_closed && second.left_closed),
        std::cmp::Ordering::Greater => false,
    }
}

/// Free-function form of [`Interval::midpoint`].
pub fn midpoint(iv: &Interval) -> ExtReal {
    ExtReal::Finite(iv.midpoint())
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.left_closed { '[' } else { '(' },
            self.left,
            self.right,
            if self.right_closed { ']' } else { ')' }
        )
    }
}

impl FromStr for Interval {
    type Err = Error;

    /// Parses the display form, e.g. `[-1, 0)` or `(-inf, 1/3]`.
    fn from_str(s: &str) -> Result<Interval> {
        let t = s.trim();
        let bad = || Error::InvalidInput(format!("cannot parse interval from {s:?}"));
        let left_closed = match t.chars().next() {
            Some('[') => true,
            Some('(') => false,
            _ => return Err(bad()),
        };
        let right_closed = match t.chars().last() {
            Some(']') => true,
            Some(')') => false,
            _ => return Err(bad()),
        };
        let (a, b) = t[1..t.len() - 1].split_once(',').ok_or_else(bad)?;
        let a: ExtReal = a.parse().map_err(|_| bad())?;
        let b: ExtReal = b.parse().map_err(|_| bad())?;
        Interval::new(a, b, left_closed, right_closed)
    }
}

/// An open interval `(lo, hi)`; empty when `lo >= hi`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Window {
    pub lo: ExtReal,
    pub hi: ExtReal,
}

impl Window {
    pub fn new(lo: ExtReal, hi: ExtReal) -> Window {
        Window { lo, hi }
    }

    pub fn full() -> Window {
        Window::new(ExtReal::NegInf, ExtReal::PosInf)
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn intersect(&self, other: &Window) -> Window {
        Window::new(self.lo.clone().max(other.lo.clone()), self.hi.clone().min(other.hi.clone()))
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        !self.intersect(other).is_empty()
    }

    pub fn contains(&self, x: &ExtReal) -> bool {
        *x > self.lo && *x < self.hi
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        other.is_empty() || (self.lo <= other.lo && other.hi <= self.hi)
    }

    pub fn length(&self) -> ExtReal {
        if self.is_empty() {
            return ExtReal::zero();
        }
        match (&self.lo, &self.hi) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(b - a),
            _ => ExtReal::PosInf,
        }
    }

    /// `self` minus the closed set `[other.lo, other.hi]`, as up to two windows.
    pub fn subtract(&self, other: &Window) -> Vec<Window> {
        if !self.overlaps(other) {
            return if self.is_empty() { vec![] } else { vec![self.clone()] };
        }
        let mut out = Vec::new();
        let left = Window::new(self.lo.clone(), other.lo.clone().min(self.hi.clone()));
        if !left.is_empty() {
            out.push(left);
        }
        let right = Window::new(other.hi.clone().max(self.lo.clone()), self.hi.clone());
        if !right.is_empty() {
            out.push(right);
        }
        out
    }

    /// A finite point strictly inside, preferring the interval anchor rule.
    pub fn inner_point(&self) -> Real {
        Interval::open(self.lo.clone(), self.hi.clone()).midpoint()
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

impl FromStr for Window {
    type Err = Error;

    /// Parses `(lo, hi)`.
    fn from_str(s: &str) -> Result<Window> {
        let iv: Interval = s.parse()?;
        if iv.left_closed || iv.right_closed {
            return Err(Error::InvalidInput(format!("a window is open on both sides, got {s:?}")));
        }
        Ok(Window::new(iv.left, iv.right))
    }
}
