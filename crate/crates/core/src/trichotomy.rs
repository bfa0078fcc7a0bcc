//! Which rotated copies of a short arc contain a given point.

use crate::circle::{frac, ArcInterval, HitTest};
use crate::diophantine::Frequency;
use crate::error::{Error, Result};
use crate::numeric::Dd;

/// Outcome of scanning `R^{±k}[y, y′]` for `k` in a range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanHit {
    pub k: u64,
    pub ambiguous: bool,
}

/// First `k ∈ [from, to]` with `target ∈ [y + kσβ, y′ + kσβ]`, `σ = ±1`.
pub fn scan_first_hit(arc: &ArcInterval, step: Dd, target: f64, from: u64, to: u64) -> Option<ScanHit> {
    if from > to {
        return None;
    }
    let mut shift = (step.mul_int(from as i64) - Dd::from_f64(frac(target))).frac();
    for k in from..=to {
        match arc.rotated_contains_zero(shift) {
            HitTest::Miss => {}
            HitTest::Hit => return Some(ScanHit { k, ambiguous: false }),
            HitTest::Ambiguous => return Some(ScanHit { k, ambiguous: true }),
        }
        shift = (shift + step).frac();
    }
    None
}

fn arc_or_err(y: f64, y_prime: f64) -> Result<ArcInterval> {
    ArcInterval::new(y, y_prime).ok_or(Error::ArcTooWide { length: 0.5, limit: 0.5 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrichotomyVerdict {
    pub n: usize,
    pub q_n: u64,
    pub q_next: u64,
    /// `0 ∉ ⋃_{k=0}^{[q_{n+1}/6]} R^k[y, y′]`.
    pub holds_i: bool,
    /// Same with `R^{−k}`.
    pub holds_ii: bool,
    /// `0 ∈ ⋃_{k=0}^{q_n − 1} R^k[y, y′]`.
    pub holds_iii: bool,
    /// First forward hit up to `[q_{n+1}/6]` (refutes (i)).
    pub witness_i: Option<u64>,
    /// First backward hit up to `[q_{n+1}/6]` (refutes (ii)).
    pub witness_ii: Option<u64>,
    /// First forward hit below `q_n` (proves (iii)).
    pub witness_iii: Option<u64>,
    pub ambiguous: bool,
}

impl TrichotomyVerdict {
    pub fn any(&self) -> bool {
        self.holds_i || self.holds_ii || self.holds_iii
    }
}

/// Evaluates the three clauses for `‖y − y′‖ < 1/(6 q_n)` by direct scan,
/// with `q_n` the convergent denominators of `beta`.
pub fn classify(y: f64, y_prime: f64, beta: &Frequency, n: usize) -> Result<TrichotomyVerdict> {
    classify_with_target(y, y_prime, 0.0, beta, n)
}

/// [`classify`] with the point `0` replaced by `target`.
pub fn classify_with_target(y: f64, y_prime: f64, target: f64, beta: &Frequency, n: usize) -> Result<TrichotomyVerdict> {
    let depth_err = || Error::InsufficientDepth { needed: format!("q_{}", n + 1), depth: beta.cf().depth() };
    let q_n = beta.q(n).ok_or_else(depth_err)?;
    let q_next = beta.q(n + 1).ok_or_else(depth_err)?;
    let limit = 1.0 / (6.0 * q_n as f64);
    let arc = ArcInterval::new(y, y_prime).ok_or(Error::ArcTooWide { length: 0.5, limit })?;
    if arc.length() >= limit {
        return Err(Error::ArcTooWide { length: arc.length(), limit });
    }
    let long = q_next / 6;
    let fwd = scan_first_hit(&arc, beta.alpha(), target, 0, long);
    let bwd = scan_first_hit(&arc, -beta.alpha(), target, 0, long);
    let short = scan_first_hit(&arc, beta.alpha(), target, 0, q_n - 1);
    let ambiguous = [fwd, bwd, short].iter().flatten().any(|h| h.ambiguous);
    Ok(TrichotomyVerdict {
        n,
        q_n,
        q_next,
        holds_i: fwd.is_none(),
        holds_ii: bwd.is_none(),
        holds_iii: short.is_some(),
        witness_i: fwd.map(|h| h.k),
        witness_ii: bwd.map(|h| h.k),
        witness_iii: short.map(|h| h.k),
        ambiguous,
    })
}

/// Smallest `ℓ ∈ [0, bound]` with `0 ∈ [x + ℓα, x′ + ℓα]`.
pub fn first_hit_index(x: f64, x_prime: f64, alpha: &Frequency, bound: u64) -> Result<Option<u64>> {
    let arc = arc_or_err(x, x_prime)?;
    Ok(scan_first_hit(&arc, alpha.alpha(), 0.0, 0, bound).map(|h| h.k))
}

/// Smallest `ℓ ∈ [0, bound]` with `0 ∈ [x − ℓα, x′ − ℓα]`.
pub fn first_hit_index_backward(x: f64, x_prime: f64, alpha: &Frequency, bound: u64) -> Result<Option<u64>> {
    let arc = arc_or_err(x, x_prime)?;
    Ok(scan_first_hit(&arc, -alpha.alpha(), 0.0, 0, bound).map(|h| h.k))
}

/// Least real `k₀ ≥ 0` with `[k₀/ξ]` the first integer hit `j ≤ bound`;
/// the bracket preimage of `j` is `[ξj, ξ(j + 1))`, so `k₀ = ξj`.
pub fn first_hit_real(y: f64, y_prime: f64, beta: &Frequency, xi: f64, bound: u64) -> Result<Option<f64>> {
    if !(xi > 0.0) {
        return Err(Error::InvalidArgument(format!("xi must be positive, got {xi}")));
    }
    Ok(first_hit_index(y, y_prime, beta, bound)?.map(|j| xi * j as f64))
}
