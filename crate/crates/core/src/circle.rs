//! Points and short arcs on the circle 𝕋 = ℝ/ℤ.

use crate::numeric::{Dd, ONE_MINUS_ULP};

/// Fractional part `{x}` in `[0, 1)`; `{0} = 0`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        ONE_MINUS_ULP
    } else {
        r
    }
}

/// Signed representative of `a - b` in `[-1/2, 1/2)`.
#[inline]
pub fn signed_diff(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Circle distance `‖a − b‖`.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    signed_diff(a, b).abs()
}

/// `‖x‖`, the distance to the nearest integer.
#[inline]
pub fn norm(x: f64) -> f64 {
    let f = frac(x);
    f.min(1.0 - f)
}

/// Grazing hits closer than this to an arc endpoint are reported as ambiguous.
pub const GUARD_BAND: f64 = 1e-25;

/// Outcome of an exact-as-possible "does this arc contain 0" test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HitTest {
    Miss,
    Hit,
    /// 0 lies within [`GUARD_BAND`] of an endpoint.
    Ambiguous,
}

impl HitTest {
    /// Ambiguous hits are counted as hits: the arc is closed.
    pub fn is_hit(self) -> bool {
        !matches!(self, HitTest::Miss)
    }
}

/// The shorter closed arc between two circle points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcInterval {
    start: f64,
    /// Signed displacement from `start` to the other endpoint, `|delta| < 1/2`.
    delta: Dd,
}

impl ArcInterval {
    /// Returns `None` for arcs of length `>= 1/2` (no unique shorter arc).
    pub fn new(y: f64, y_prime: f64) -> Option<Self> {
        let y = frac(y);
        let yp = frac(y_prime);
        let raw = Dd::new(yp, -y);
        let delta = if raw.hi >= 0.5 {
            raw - Dd::from_f64(1.0)
        } else if raw.hi < -0.5 {
            raw + Dd::from_f64(1.0)
        } else {
            raw
        };
        if delta.to_f64().abs() >= 0.5 {
            return None;
        }
        Some(ArcInterval { start: y, delta })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        frac(self.start + self.delta.to_f64())
    }

    pub fn length(&self) -> f64 {
        self.delta.to_f64().abs()
    }

    /// Signed displacement start → end.
    pub fn signed_length(&self) -> f64 {
        self.delta.to_f64()
    }

    /// Does `R^{shift}` of the arc, i.e. `[y + shift, y' + shift]`, contain 0?
    /// `shift` is a double-double angle (typically `k·α`).
    pub fn rotated_contains_zero(&self, shift: Dd) -> HitTest {
        let a = (Dd::from_f64(self.start) + shift).frac();
        Self::classify(a, self.delta)
    }

    /// Does the arc contain the point `p`?
    pub fn contains(&self, p: f64) -> bool {
        self.rotated_contains_zero(Dd::from_f64(-frac(p))).is_hit()
    }

    fn classify(a: Dd, delta: Dd) -> HitTest {
        // a in [0,1); the arc runs from a to a + delta.
        if a.hi == 0.0 && a.lo == 0.0 {
            return HitTest::Hit;
        }
        let one = Dd::from_f64(1.0);
        let (hit, margin) = if delta.hi >= 0.0 {
            // contains 0 iff a + delta >= 1
            let m = a + delta - one;
            (m.hi >= 0.0, m.to_f64().abs().min(a.to_f64()))
        } else {
            // contains 0 iff a <= -delta
            let m = -delta - a;
            (m.hi >= 0.0, m.to_f64().abs().min(a.to_f64()))
        };
        if margin < GUARD_BAND {
            HitTest::Ambiguous
        } else if hit {
            HitTest::Hit
        } else {
            HitTest::Miss
        }
    }
}
