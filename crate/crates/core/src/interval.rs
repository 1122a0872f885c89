//! Outward-rounded interval arithmetic on `f64`.
//!
//! Every operation rounds to nearest and then widens by one ulp on each
//! side, which encloses the exact result. Library `ln` is widened by two
//! ulps to cover its (sub-ulp, not correctly rounded) error.

use std::ops::{Add, Div, Mul, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    /// Encloses an integer; exact when it is representable.
    pub fn from_u64(n: u64) -> Self {
        let f = n as f64;
        if f as u64 == n && n < (1 << 53) {
            Interval::point(f)
        } else {
            Interval::new(f.next_down(), f.next_up())
        }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn widen(x: f64) -> Self {
        Interval::new(x.next_down(), x.next_up())
    }

    pub fn ln_u64(n: u64) -> Self {
        assert!(n >= 1);
        if n == 1 {
            return Interval::ZERO;
        }
        let x = Interval::from_u64(n);
        Interval::new(
            x.lo.ln().next_down().next_down(),
            x.hi.ln().next_up().next_up(),
        )
    }

    /// Encloses π²/6.
    pub fn zeta2() -> Self {
        // the f64 constant PI is within half an ulp of π
        let pi = Interval::widen(std::f64::consts::PI);
        pi * pi / Interval::point(6.0)
    }

    pub fn powi(self, k: u32) -> Self {
        assert!(self.lo >= 0.0);
        let mut acc = Interval::point(1.0);
        for _ in 0..k {
            acc = acc * self;
        }
        acc
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::new((self.lo + rhs.lo).next_down(), (self.hi + rhs.hi).next_up())
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::new((self.lo - rhs.hi).next_down(), (self.hi - rhs.lo).next_up())
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let c = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo.next_down(), hi.next_up())
    }
}

impl Div for Interval {
    type Output = Interval;
    /// Division by an interval of strictly positive numbers.
    fn div(self, rhs: Interval) -> Interval {
        assert!(rhs.lo > 0.0, "division by interval containing zero");
        let c = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo.next_down(), hi.next_up())
    }
}
