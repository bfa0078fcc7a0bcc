//! Cohomological equation `φ = ξ − ξ∘R_α` for trigonometric polynomials,
//! and the equal-jump / unequal-jump dichotomy for roofs.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::Rng;

use crate::diophantine::{dc_check, Frequency};
use crate::error::{Error, Result};
use crate::numeric::{Dd, NeumaierSum};
use crate::roof::{derived_rng, RoofFunction, TrigPoly};

/// Divisors at or below this are not certified.
pub const DIVISOR_FLOOR: f64 = 1e-12;
/// Points of the residual grid.
pub const RESIDUAL_GRID: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivisorEntry {
    pub k: u32,
    /// `|1 − e^{2πikα}| = 2|sin πkα|`.
    pub divisor: f64,
    /// `k` is a convergent denominator of `α`.
    pub at_denominator: bool,
}

pub fn small_divisor_profile(alpha: &Frequency, max_harmonic: u32) -> Vec<DivisorEntry> {
    let qs = alpha.denominators_u64();
    (1..=max_harmonic)
        .map(|k| DivisorEntry {
            k,
            divisor: divisor(alpha, k),
            at_denominator: qs.contains(&(k as u64)),
        })
        .collect()
}

fn divisor(alpha: &Frequency, k: u32) -> f64 {
    let t = alpha.multiple(k as i64).frac().to_f64();
    2.0 * (PI * t).sin().abs()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    pub xi: TrigPoly,
    /// Sup over the grid of `|ξ(x) − ξ(x + α) − φ(x)|`.
    pub residual: f64,
    /// Sup norm bound of the harmonics above the truncation.
    pub tail: f64,
    pub divisors: Vec<DivisorEntry>,
}

impl TransferFunction {
    pub fn eval(&self, x: f64) -> f64 {
        self.xi.eval(x)
    }

    pub fn min_divisor(&self) -> Option<f64> {
        self.divisors.iter().map(|d| d.divisor).reduce(f64::min)
    }
}

/// `sup_x |ξ(x) − ξ(x+α) − φ(x)|` on an even grid.
pub fn coboundary_residual(xi: &TrigPoly, phi: &RoofFunction, alpha: &Frequency, grid: usize) -> f64 {
    let a = alpha.alpha();
    (0..grid)
        .map(|i| {
            let x = i as f64 / grid as f64;
            let shifted = (Dd::from_f64(x) + a).frac().to_unit_f64();
            (xi.eval(x) - xi.eval(shifted) - phi.eval(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// Unique mean-zero `ξ` with `ξ − ξ∘R_α = φ` on the harmonics `1..=max_harmonic`.
pub fn fourier_coboundary_solve(phi: &RoofFunction, alpha: &Frequency, max_harmonic: u32) -> Result<TransferFunction> {
    if phi.jump() != 0.0 {
        return Err(Error::NonzeroJump(phi.jump()));
    }
    let smooth = phi.smooth();
    if smooth.c0 != 0.0 {
        return Err(Error::NonzeroMean(smooth.c0));
    }
    let mut xi = TrigPoly::constant(0.0);
    let mut tail = 0.0;
    let mut divisors = Vec::new();
    for h in &smooth.harmonics {
        if h.k > max_harmonic {
            tail += h.amplitude();
            continue;
        }
        let d = divisor(alpha, h.k);
        divisors.push(DivisorEntry { k: h.k, divisor: d, at_denominator: false });
        if d <= DIVISOR_FLOOR {
            return Err(Error::SmallDivisorUnderflow { k: h.k, divisor: d });
        }
        // φ̂(k) = (a − ib)/2, ξ̂(k) = φ̂(k)/(1 − e^{2πikα})
        let theta = TAU * alpha.multiple(h.k as i64).frac().to_f64();
        let (den_re, den_im) = (1.0 - theta.cos(), -theta.sin());
        let norm = den_re * den_re + den_im * den_im;
        let (p_re, p_im) = (h.cos / 2.0, -h.sin / 2.0);
        let re = (p_re * den_re + p_im * den_im) / norm;
        let im = (p_im * den_re - p_re * den_im) / norm;
        xi = xi.with(h.k, 2.0 * re, -2.0 * im);
    }
    let qs = alpha.denominators_u64();
    for d in &mut divisors {
        d.at_denominator = qs.contains(&(d.k as u64));
    }
    let truncated = RoofFunction::new(0.0, smooth.clone())?;
    let residual = coboundary_residual(&xi, &truncated, alpha, RESIDUAL_GRID);
    Ok(TransferFunction { xi, residual, tail, divisors })
}

/// `max |Σ_{i<n} φ(x+iα) − (ξ(x) − ξ(x+nα))|` over sampled `x` and `n ≤ n_max`.
pub fn cocycle_defect(
    phi: &RoofFunction,
    transfer: &TransferFunction,
    alpha: &Frequency,
    n_max: u64,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..samples {
        let x: f64 = derived_rng(seed, i as u64).gen();
        let xi0 = transfer.eval(x);
        let mut pos = Dd::from_f64(x);
        let mut sum = NeumaierSum::new();
        for _ in 0..n_max {
            sum.add(phi.eval(pos.to_unit_f64()));
            pos = (pos + alpha.alpha()).frac();
            worst = worst.max((sum.value() - (xi0 - transfer.eval(pos.to_unit_f64()))).abs());
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub enum VerdictKind {
    Cohomologous(TransferFunction),
    Disjoint,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyVerdict {
    pub kind: VerdictKind,
    pub reason: String,
    /// Convergents checked for the Diophantine condition, and the outcome.
    pub dc_horizon: usize,
    pub dc_holds: Option<bool>,
}

impl DichotomyVerdict {
    pub fn is_cohomologous(&self) -> bool {
        matches!(self.kind, VerdictKind::Cohomologous(_))
    }

    pub fn is_disjoint(&self) -> bool {
        self.kind == VerdictKind::Disjoint
    }
}

impl fmt::Display for DichotomyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dc = match self.dc_holds {
            Some(h) => format!("dc_horizon={} dc_holds={h}", self.dc_horizon),
            None => "dc_horizon=0 dc_holds=na".into(),
        };
        match &self.kind {
            VerdictKind::Cohomologous(t) => write!(
                f,
                "verdict=cohomologous residual={:e} tail={:e} min_divisor={:e} {dc} reason={}",
                t.residual,
                t.tail,
                t.min_divisor().unwrap_or(f64::NAN),
                self.reason
            ),
            VerdictKind::Disjoint => write!(f, "verdict=disjoint {dc} reason={}", self.reason),
            VerdictKind::Inconclusive => write!(f, "verdict=inconclusive {dc} reason={}", self.reason),
        }
    }
}

/// Exponent and constant of the Diophantine check recorded with each verdict.
pub const DC_TAU: f64 = 3.0;
pub const DC_CONSTANT: f64 = 0.1;
const DC_MAX_HORIZON: usize = 40;

/// Relative tolerance for calling two jumps or means equal.
const EQUAL_TOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQUAL_TOL * a.abs().max(b.abs()).max(1.0)
}

pub fn dichotomy(f_psi: &RoofFunction, f_phi: &RoofFunction, alpha: &Frequency, max_harmonic: u32) -> DichotomyVerdict {
    let (a, b) = (f_psi.jump(), f_phi.jump());
    let dc_horizon = alpha.cf().depth().saturating_sub(2).min(DC_MAX_HORIZON);
    let dc_holds = if alpha.is_rational() || dc_horizon == 0 {
        None
    } else {
        dc_check(alpha.cf(), DC_TAU, DC_CONSTANT, dc_horizon).ok().map(|r| r.first_violation.is_none())
    };
    let verdict = |kind, reason: String| DichotomyVerdict { kind, reason, dc_horizon, dc_holds };
    if !f_psi.is_positive() || !f_phi.is_positive() {
        return verdict(VerdictKind::Inconclusive, "roofs must be positive".into());
    }
    if !close(a.abs(), b.abs()) {
        return verdict(VerdictKind::Disjoint, format!("|A| differ: {} vs {}", a.abs(), b.abs()));
    }
    if !close(a, b) {
        return verdict(VerdictKind::Inconclusive, format!("opposite jumps {a} and {b}"));
    }
    if !close(f_psi.mean(), f_phi.mean()) {
        return verdict(VerdictKind::Inconclusive, format!("means differ: {} vs {}", f_psi.mean(), f_phi.mean()));
    }
    let mut diff = f_psi.smooth().sub(f_phi.smooth());
    diff.c0 = 0.0;
    let solved = RoofFunction::new(0.0, diff).and_then(|d| fourier_coboundary_solve(&d, alpha, max_harmonic));
    match solved {
        Ok(t) => verdict(VerdictKind::Cohomologous(t), "equal jumps, equal means".into()),
        Err(e) => verdict(VerdictKind::Inconclusive, format!("solve failed: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_solves_to_zero() {
        let t = fourier_coboundary_solve(&RoofFunction::constant(0.0).unwrap(), &Frequency::golden(), 8).unwrap();
        assert!(t.xi.harmonics.is_empty());
        assert_eq!(t.residual, 0.0);
    }

    #[test]
    fn single_harmonic_closed_form() {
        let g = Frequency::golden();
        let phi = RoofFunction::new(0.0, TrigPoly::cos(1, 1.0)).unwrap();
        let t = fourier_coboundary_solve(&phi, &g, 4).unwrap();
        assert_eq!(t.xi.harmonics.len(), 1);
        assert!(t.residual <= 1e-10, "{}", t.residual);
        // |ξ̂(1)| = |φ̂(1)|/|1 − e^{2πiα}|
        let amp = t.xi.harmonics[0].amplitude();
        assert!((amp - 1.0 / divisor(&g, 1)).abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        let g = Frequency::golden();
        let mean = RoofFunction::new(0.0, TrigPoly::cos(1, 1.0).plus_constant(0.2)).unwrap();
        assert!(matches!(fourier_coboundary_solve(&mean, &g, 4), Err(Error::NonzeroMean(_))));
        let jump = RoofFunction::linear(1.0, -0.5).unwrap();
        assert!(matches!(fourier_coboundary_solve(&jump, &g, 4), Err(Error::NonzeroJump(_))));
        let half = Frequency::rational(1, 2).unwrap();
        let phi = RoofFunction::new(0.0, TrigPoly::cos(2, 1.0)).unwrap();
        assert!(matches!(fourier_coboundary_solve(&phi, &half, 4), Err(Error::SmallDivisorUnderflow { .. })));
    }

    #[test]
    fn profile_examples() {
        assert!(small_divisor_profile(&Frequency::golden(), 0).is_empty());
        let half = Frequency::rational(1, 2).unwrap();
        for e in small_divisor_profile(&half, 6) {
            if e.k % 2 == 0 {
                assert!(e.divisor < 1e-15);
            }
        }
        let g = Frequency::golden();
        let prof = small_divisor_profile(&g, 400);
        for n in 3..12 {
            let (q, next) = (g.q(n).unwrap(), g.q(n + 1).unwrap());
            let d = prof[q as usize - 1].divisor;
            assert!(prof[q as usize - 1].at_denominator);
            let r = d * next as f64 / TAU;
            assert!((0.3..=1.2).contains(&r), "q = {q}: ratio {r}");
        }
        // strict local minima sit at denominators
        for w in prof.windows(3) {
            if w[1].divisor < w[0].divisor && w[1].divisor < w[2].divisor && w[1].k > 2 {
                let running_min = prof[..w[1].k as usize - 1].iter().all(|e| e.divisor >= w[1].divisor);
                if running_min {
                    assert!(w[1].at_denominator, "record minimum at k = {}", w[1].k);
                }
            }
        }
    }

    #[test]
    fn dichotomy_examples() {
        let g = Frequency::golden();
        let f = RoofFunction::new(1.0, TrigPoly::sin(1, 0.1).plus_constant(1.0)).unwrap();
        assert!(dichotomy(&f, &f, &g, 8).is_cohomologous());
        let h = RoofFunction::new(2.0, TrigPoly::sin(1, 0.1).plus_constant(1.0)).unwrap();
        assert!(dichotomy(&f, &h, &g, 8).is_disjoint());
        let other = RoofFunction::new(1.0, TrigPoly::sin(1, 0.1).with(1, 0.1, 0.0).plus_constant(1.0)).unwrap();
        let v = dichotomy(&other, &f, &g, 8);
        let VerdictKind::Cohomologous(t) = &v.kind else { panic!("{v}") };
        assert!(t.residual <= 1e-8);
        let phi = RoofFunction::new(0.0, TrigPoly::cos(1, 0.1)).unwrap();
        assert!(cocycle_defect(&phi, t, &g, 1000, 20, 3) <= 1e-6);
        let shifted = RoofFunction::new(1.0, TrigPoly::sin(1, 0.1).plus_constant(1.5)).unwrap();
        assert_eq!(dichotomy(&shifted, &f, &g, 8).kind, VerdictKind::Inconclusive);
        assert!(v.to_string().starts_with("verdict=cohomologous"));
        assert_eq!(v.dc_holds, Some(true));
        assert!(v.dc_horizon > 10);
    }
}
