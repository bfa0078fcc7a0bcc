//! Joint Birkhoff averages of two special flows started independently, and
//! the diagonal self-joining as a positive control.
//!
//! The statistics are numerical evidence only: a small product gap is
//! consistent with disjointness, it does not prove it.

use std::f64::consts::TAU;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::roof::derived_rng;
use crate::special_flow::{FlowParams, FlowPoint};

pub const EVIDENCE_BANNER: &str = "evidence, not proof: a vanishing gap is consistent with disjointness but does not certify it";

/// Time-grid steps per minimal roof height.
pub const STEPS_PER_MIN_ROOF: f64 = 20.0;
/// Midpoint nodes for the base integrals.
pub const QUADRATURE_POINTS: usize = 1 << 16;
/// Confidence level of the reported Monte-Carlo half-width.
pub const MC_CONFIDENCE: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wave {
    One,
    Cos(u32),
    Sin(u32),
}

impl Wave {
    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            Wave::One => 1.0,
            Wave::Cos(k) => (TAU * k as f64 * x).cos(),
            Wave::Sin(k) => (TAU * k as f64 * x).sin(),
        }
    }
}

/// `coef · wave(x) · s^power`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub wave: Wave,
    pub power: u32,
}

/// Finite sum of [`Term`]s, a function of the base point and the height.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observable {
    pub terms: Vec<Term>,
}

impl Observable {
    pub fn zero() -> Self {
        Observable::default()
    }

    pub fn constant(c: f64) -> Self {
        Observable { terms: vec![Term { coef: c, wave: Wave::One, power: 0 }] }
    }

    pub fn cos(k: u32) -> Self {
        Observable { terms: vec![Term { coef: 1.0, wave: Wave::Cos(k), power: 0 }] }
    }

    pub fn sin(k: u32) -> Self {
        Observable { terms: vec![Term { coef: 1.0, wave: Wave::Sin(k), power: 0 }] }
    }

    /// The height coordinate `s`.
    pub fn height() -> Self {
        Observable { terms: vec![Term { coef: 1.0, wave: Wave::One, power: 1 }] }
    }

    pub fn plus(mut self, other: &Observable) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self
    }

    pub fn scaled(mut self, a: f64) -> Self {
        for t in &mut self.terms {
            t.coef *= a;
        }
        self
    }

    /// Subtracts the mean under the flow's invariant probability.
    pub fn centered(self, flow: &FlowParams) -> Self {
        let m = mean(&self, flow);
        self.plus(&Observable::constant(-m))
    }

    #[inline]
    pub fn eval(&self, p: FlowPoint) -> f64 {
        self.terms.iter().map(|t| t.coef * t.wave.eval(p.x) * p.s.powi(t.power as i32)).sum()
    }

    /// Upper bound for `sup |obs|` under the roof of `flow`.
    pub fn sup_bound(&self, flow: &FlowParams) -> f64 {
        let top = flow.roof().sup();
        self.terms.iter().map(|t| t.coef.abs() * top.powi(t.power as i32)).sum()
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coef)?;
            match t.wave {
                Wave::One => {}
                Wave::Cos(k) => write!(f, "*cos({k}x)")?,
                Wave::Sin(k) => write!(f, "*sin({k}x)")?,
            }
            if t.power > 0 {
                write!(f, "*s^{}", t.power)?;
            }
        }
        Ok(())
    }
}

/// `∫∫ a·b dλ^f`, normalized; the height integral is exact and the base
/// integral uses the midpoint rule.
pub fn moment(a: &Observable, b: &Observable, flow: &FlowParams) -> f64 {
    let roof = flow.roof();
    let n = QUADRATURE_POINTS;
    let mut total = NeumaierSum::new();
    for i in 0..n {
        let x = (i as f64 + 0.5) / n as f64;
        let h = roof.eval(x);
        for ta in &a.terms {
            let wa = ta.coef * ta.wave.eval(x);
            for tb in &b.terms {
                let p = ta.power + tb.power + 1;
                total.add(wa * tb.coef * tb.wave.eval(x) * h.powi(p as i32) / p as f64);
            }
        }
    }
    total.value() / n as f64 / roof.mean()
}

pub fn mean(obs: &Observable, flow: &FlowParams) -> f64 {
    moment(obs, &Observable::constant(1.0), flow)
}

/// `∫obs² − (∫obs)²` under the flow's invariant probability.
pub fn variance(obs: &Observable, flow: &FlowParams) -> f64 {
    let m = mean(obs, flow);
    moment(obs, obs, flow) - m * m
}

/// One start of a correlation experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StartRow {
    pub seed: u64,
    pub joint: f64,
    pub marginal_a: f64,
    pub marginal_b: f64,
    /// `joint − marginal_a·marginal_b`.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationReport {
    pub horizon: f64,
    pub samples: usize,
    pub step: f64,
    pub obs_a: String,
    pub obs_b: String,
    /// Quadrature means of the observables.
    pub mean_a: f64,
    pub mean_b: f64,
    pub joint: f64,
    pub marginal_a: f64,
    pub marginal_b: f64,
    pub gap: f64,
    pub max_abs_gap: f64,
    /// Hoeffding half-width at [`MC_CONFIDENCE`] for the averaged joint statistic.
    pub mc_error: f64,
    pub sup_bound: f64,
    /// Diagonal statistic, set by [`self_joining_control`].
    pub control: Option<f64>,
    pub rows: Vec<StartRow>,
}

impl CorrelationReport {
    pub fn banner(&self) -> &'static str {
        EVIDENCE_BANNER
    }
}

fn grid(horizon: f64, min_roof: f64) -> Result<(usize, f64)> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let count = (horizon * STEPS_PER_MIN_ROOF / min_roof).ceil().max(1.0) as usize;
    Ok((count, horizon / count as f64))
}

fn hoeffding(range: f64, samples: usize) -> f64 {
    range * ((2.0 / (1.0 - MC_CONFIDENCE)).ln() / (2.0 * samples as f64)).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    horizon: f64,
    step: f64,
    rows: Vec<StartRow>,
    obs_a: &Observable,
    obs_b: &Observable,
    mean_a: f64,
    mean_b: f64,
    sup_bound: f64,
) -> CorrelationReport {
    let n = rows.len().max(1) as f64;
    let avg = |f: fn(&StartRow) -> f64| rows.iter().map(f).collect::<NeumaierSum>().value() / n;
    CorrelationReport {
        horizon,
        samples: rows.len(),
        step,
        obs_a: obs_a.to_string(),
        obs_b: obs_b.to_string(),
        mean_a,
        mean_b,
        joint: avg(|r| r.joint),
        marginal_a: avg(|r| r.marginal_a),
        marginal_b: avg(|r| r.marginal_b),
        gap: avg(|r| r.gap),
        max_abs_gap: rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max),
        mc_error: if rows.is_empty() { f64::INFINITY } else { hoeffding(2.0 * sup_bound, rows.len()) },
        sup_bound,
        control: None,
        rows,
    }
}

/// Time averages of `a(T_t z)`, `b(S_t w)` and their product on a uniform grid.
#[allow(clippy::too_many_arguments)]
fn orbit_averages(
    flow_a: &FlowParams,
    flow_b: &FlowParams,
    obs_a: &Observable,
    obs_b: &Observable,
    z: FlowPoint,
    w: FlowPoint,
    count: usize,
    step: f64,
) -> Result<(f64, f64, f64)> {
    let mut ca = flow_a.cursor(z)?;
    let mut cb = flow_b.cursor(w)?;
    let (mut joint, mut sa, mut sb) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
    for j in 0..count {
        let t = j as f64 * step;
        ca.seek(t)?;
        cb.seek(t)?;
        let (a, b) = (obs_a.eval(ca.point()), obs_b.eval(cb.point()));
        joint.add(a * b);
        sa.add(a);
        sb.add(b);
    }
    let n = count as f64;
    Ok((joint.value() / n, sa.value() / n, sb.value() / n))
}

/// Averages `(1/T)∫₀ᵀ a(T_t z)·b(S_t w) dt` over independent seeded starts.
pub fn product_birkhoff_correlation(
    flow_a: &FlowParams,
    flow_b: &FlowParams,
    obs_a: &Observable,
    obs_b: &Observable,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<CorrelationReport> {
    let (count, step) = grid(horizon, flow_a.roof().inf().min(flow_b.roof().inf()))?;
    let rows = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let start_seed = seed.wrapping_add(i);
            let mut rng = derived_rng(start_seed, 0);
            let z = flow_a.sample_point(&mut rng);
            let w = flow_b.sample_point(&mut rng);
            let (joint, ma, mb) = orbit_averages(flow_a, flow_b, obs_a, obs_b, z, w, count, step)?;
            Ok(StartRow { seed: start_seed, joint, marginal_a: ma, marginal_b: mb, gap: joint - ma * mb })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup = obs_a.sup_bound(flow_a) * obs_b.sup_bound(flow_b);
    Ok(summarize(horizon, step, rows, obs_a, obs_b, mean(obs_a, flow_a), mean(obs_b, flow_b), sup))
}

/// Diagonal joining: both coordinates follow the same orbit. The per-start
/// gap is the orbit variance of `obs`, and `control` is its average.
pub fn self_joining_control(flow: &FlowParams, obs: &Observable, horizon: f64, samples: usize, seed: u64) -> Result<CorrelationReport> {
    let (count, step) = grid(horizon, flow.roof().inf())?;
    let rows = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let start_seed = seed.wrapping_add(i);
            let z = flow.sample_point(&mut derived_rng(start_seed, 0));
            let (joint, ma, mb) = orbit_averages(flow, flow, obs, obs, z, z, count, step)?;
            Ok(StartRow { seed: start_seed, joint, marginal_a: ma, marginal_b: mb, gap: (joint - ma * mb).max(0.0) })
        })
        .collect::<Result<Vec<_>>>()?;
    let m = mean(obs, flow);
    let sup = obs.sup_bound(flow).powi(2);
    let mut report = summarize(horizon, step, rows, obs, obs, m, m, sup);
    report.control = Some(report.gap);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::Frequency;
    use crate::roof::{RoofFunction, TrigPoly};

    fn flow(jump: f64) -> FlowParams {
        FlowParams::new(Frequency::golden(), RoofFunction::new(jump, TrigPoly::sin(1, 0.1).plus_constant(1.0)).unwrap()).unwrap()
    }

    #[test]
    fn quadrature_examples() {
        let f = FlowParams::new(Frequency::golden(), RoofFunction::linear(1.0, 1.0).unwrap()).unwrap();
        assert!((mean(&Observable::constant(3.0), &f) - 3.0).abs() < 1e-12);
        // ∫ cos(2πx)(x + 1) dx = 0
        assert!(mean(&Observable::cos(1), &f).abs() < 1e-9);
        // ∫∫ s ds dx = ∫ (x+1)²/2 = 7/6, over mean 3/2
        assert!((mean(&Observable::height(), &f) - 7.0 / 9.0).abs() < 1e-9);
        let v = variance(&Observable::cos(1), &f);
        // ∫ cos²(2πx)(x+1) dx / (3/2) = (3/4)/(3/2)
        assert!((v - 0.5).abs() < 1e-9, "{v}");
        let c = Observable::cos(1).centered(&flow(1.0));
        assert!(mean(&c, &flow(1.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_observable_gives_zero_gap() {
        let (a, b) = (flow(1.0), flow(2.0));
        let r = product_birkhoff_correlation(&a, &b, &Observable::constant(1.0), &Observable::cos(1), 200.0, 3, 7).unwrap();
        for row in &r.rows {
            assert!((row.joint - row.marginal_b).abs() < 1e-12);
            assert!(row.gap.abs() < 1e-12);
        }
        assert!(r.step <= a.roof().inf().min(b.roof().inf()) / STEPS_PER_MIN_ROOF + 1e-15);
    }

    #[test]
    fn diagonal_matches_square_average() {
        let a = flow(1.0);
        let obs = Observable::cos(1).centered(&a);
        let r = self_joining_control(&a, &obs, 300.0, 2, 3).unwrap();
        for row in &r.rows {
            assert!(row.gap >= 0.0);
            assert!(row.joint > 0.0);
        }
        assert_eq!(self_joining_control(&a, &Observable::zero(), 50.0, 2, 3).unwrap().control, Some(0.0));
    }

    #[test]
    fn joint_bounded_by_sup_norms() {
        let (a, b) = (flow(1.0), flow(2.0));
        let oa = Observable::cos(1).plus(&Observable::height());
        let ob = Observable::sin(2).scaled(3.0);
        let r = product_birkhoff_correlation(&a, &b, &oa, &ob, 100.0, 4, 1).unwrap();
        assert!(r.joint.abs() <= r.sup_bound);
        assert!(r.rows.iter().all(|row| row.joint.abs() <= r.sup_bound));
    }

    #[test]
    fn mc_error_shrinks_with_samples() {
        let (a, b) = (flow(1.0), flow(2.0));
        let (oa, ob) = (Observable::cos(1), Observable::cos(1));
        let mut last = f64::INFINITY;
        for n in [1, 2, 4, 8] {
            let r = product_birkhoff_correlation(&a, &b, &oa, &ob, 20.0, n, 5).unwrap();
            assert!(r.mc_error <= last);
            last = r.mc_error;
        }
    }

    #[test]
    fn rejects_bad_horizon() {
        let a = flow(1.0);
        assert!(product_birkhoff_correlation(&a, &a, &Observable::zero(), &Observable::zero(), 0.0, 1, 0).is_err());
    }
}
