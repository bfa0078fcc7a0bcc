//! Error-free transformations, a double-double type for rotation angles, and
//! compensated summation.
//!
//! Orbit points `x + n·α mod 1` are formed from a double-double `α` so that the
//! circle position stays accurate to ~1e-30 per step even after 10⁸ steps.

use std::ops::{Add, Neg, Sub};

/// `a + b = s + e` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// `a * b = p + e` exactly (needs a hardware or correctly emulated FMA).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// `self * n` for an integer multiplier with |n| < 2⁵³.
    pub fn mul_int(self, n: i64) -> Dd {
        let nf = n as f64;
        let (p, e) = two_prod(self.hi, nf);
        let (s, t) = two_sum(p, self.lo.mul_add(nf, e));
        let (hi, lo) = quick_two_sum(s, t);
        Dd { hi, lo }
    }

    /// Representative in `[0, 1)`.
    pub fn frac(self) -> Dd {
        let fl = self.hi.floor();
        let one = Dd::from_f64(1.0);
        // hi - floor(hi) is exact
        let mut r = Dd::new(self.hi - fl, self.lo);
        if r.hi < 0.0 {
            r = r + one;
        } else if r.hi >= 1.0 && r.lo >= 0.0 {
            r = r - one;
        }
        r
    }

    /// Rounds a `[0,1)` representative to an `f64` that is also in `[0,1)`.
    pub fn to_unit_f64(self) -> f64 {
        let v = self.to_f64();
        if v >= 1.0 {
            ONE_MINUS_ULP
        } else if v < 0.0 {
            0.0
        } else {
            v
        }
    }
}

/// Largest double strictly below one.
pub const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

/// Kahan–Babuška–Neumaier running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_value(v: f64) -> Self {
        NeumaierSum { sum: v, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        s.extend(iter);
        s
    }
}
