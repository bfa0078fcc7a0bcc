//! The suspension flow over a rotation under a positive roof.

use std::sync::atomic::{AtomicU64, Ordering};

use log::warn;
use rand::Rng;
use rayon::prelude::*;

use crate::circle::{circle_dist, norm};
use crate::diophantine::Frequency;
use crate::error::{Error, Result};
use crate::numeric::{Dd, NeumaierSum};
use crate::roof::{derived_rng, RoofFunction};

pub const DEFAULT_HORIZON_CAP: u64 = 100_000_000;
/// Height violations up to this size are clamped, larger ones are errors.
pub const CLAMP_SLACK: f64 = 1e-12;

static CLAMPED: AtomicU64 = AtomicU64::new(0);

/// Number of flow outputs clamped back into their fiber so far.
pub fn clamp_count() -> u64 {
    CLAMPED.load(Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowPoint {
    pub x: f64,
    pub s: f64,
}

impl FlowPoint {
    pub fn new(x: f64, s: f64) -> Self {
        FlowPoint { x, s }
    }
}

/// `‖x − y‖ + |s − r|`.
pub fn flow_metric(a: FlowPoint, b: FlowPoint) -> f64 {
    circle_dist(a.x, b.x) + (a.s - b.s).abs()
}

#[derive(Clone, Debug)]
pub struct FlowParams {
    alpha: Frequency,
    roof: RoofFunction,
    horizon_cap: u64,
}

impl FlowParams {
    pub fn new(alpha: Frequency, roof: RoofFunction) -> Result<Self> {
        if !roof.is_positive() {
            return Err(Error::NonPositiveRoof(roof.inf()));
        }
        if alpha.is_rational() {
            return Err(Error::RationalFrequency);
        }
        Ok(FlowParams { alpha, roof, horizon_cap: DEFAULT_HORIZON_CAP })
    }

    pub fn with_horizon_cap(mut self, cap: u64) -> Self {
        self.horizon_cap = cap;
        self
    }

    pub fn alpha(&self) -> &Frequency {
        &self.alpha
    }

    pub fn roof(&self) -> &RoofFunction {
        &self.roof
    }

    pub fn mean(&self) -> f64 {
        self.roof.mean()
    }

    pub fn contains(&self, p: FlowPoint) -> bool {
        (0.0..1.0).contains(&p.x) && p.s >= 0.0 && p.s < self.roof.eval(p.x)
    }

    fn check(&self, p: FlowPoint) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideFiber { height: p.s, roof: self.roof.eval(p.x) })
        }
    }

    pub fn cursor(&self, start: FlowPoint) -> Result<FlowCursor<'_>> {
        self.check(start)?;
        Ok(FlowCursor::new(self, start))
    }

    /// `N(x, s, t)`.
    pub fn hitting_count(&self, p: FlowPoint, t: f64) -> Result<i64> {
        let mut c = self.cursor(p)?;
        c.seek(t)?;
        Ok(c.crossings())
    }

    /// `T_t(x, s) = (x + Nα, s + t − f^{(N)}(x))`.
    pub fn flow_map(&self, p: FlowPoint, t: f64) -> Result<FlowPoint> {
        let mut c = self.cursor(p)?;
        c.seek(t)?;
        Ok(c.point())
    }

    /// Uniform sample of the normalized measure on the region under the roof.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> FlowPoint {
        let top = self.roof.sup();
        loop {
            let x: f64 = rng.gen();
            let s = rng.gen::<f64>() * top;
            if s < self.roof.eval(x) {
                return FlowPoint { x, s };
            }
        }
    }

    /// `(t, point, N)` at `t = 0, step, 2·step, ... ≤ horizon`.
    pub fn orbit_samples(&self, start: FlowPoint, horizon: f64, step: f64) -> Result<Vec<(f64, FlowPoint, i64)>> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument("step must be positive".into()));
        }
        let mut c = self.cursor(start)?;
        let count = (horizon / step).floor() as usize;
        (0..=count)
            .map(|i| {
                let t = i as f64 * step;
                c.seek(t)?;
                Ok((t, c.point(), c.crossings()))
            })
            .collect()
    }
}

/// Incremental flow evaluation from a fixed start, movable in either time
/// direction. Keeps `x + Nα` in double-double and `f^{(N)}(x)` compensated.
#[derive(Clone, Debug)]
pub struct FlowCursor<'a> {
    params: &'a FlowParams,
    start: FlowPoint,
    n: i64,
    pos: Dd,
    sum: NeumaierSum,
    level: f64,
}

impl<'a> FlowCursor<'a> {
    fn new(params: &'a FlowParams, start: FlowPoint) -> Self {
        FlowCursor {
            params,
            start,
            n: 0,
            pos: Dd::from_f64(start.x),
            sum: NeumaierSum::new(),
            level: start.s,
        }
    }

    fn step_forward(&mut self) {
        let h = self.params.roof.eval(self.pos.to_unit_f64());
        self.sum.add(h);
        self.pos = (self.pos + self.params.alpha.alpha()).frac();
        self.n += 1;
    }

    fn step_backward(&mut self) {
        self.pos = (self.pos - self.params.alpha.alpha()).frac();
        let h = self.params.roof.eval(self.pos.to_unit_f64());
        self.sum.add(-h);
        self.n -= 1;
    }

    /// Moves to absolute time `t` from the start.
    pub fn seek(&mut self, t: f64) -> Result<()> {
        let target = self.start.s + t;
        let cap = self.params.horizon_cap as i64;
        loop {
            let level = target - self.sum.value();
            let x = self.pos.to_unit_f64();
            if level < 0.0 {
                self.step_backward();
            } else if level >= self.params.roof.eval(x) {
                self.step_forward();
            } else {
                self.level = level;
                return Ok(());
            }
            if self.n.abs() > cap {
                return Err(Error::HorizonOverflow(self.params.horizon_cap));
            }
        }
    }

    /// Current `N`.
    pub fn crossings(&self) -> i64 {
        self.n
    }

    /// Current `f^{(N)}(x)`.
    pub fn roof_sum(&self) -> f64 {
        self.sum.value()
    }

    pub fn base(&self) -> f64 {
        self.pos.to_unit_f64()
    }

    pub fn point(&self) -> FlowPoint {
        let x = self.base();
        let top = self.params.roof.eval(x);
        let mut s = self.level;
        if s < 0.0 || s >= top {
            let excess = if s < 0.0 { -s } else { s - top };
            if excess > CLAMP_SLACK {
                warn!("flow height {s} outside [0, {top}) by {excess}");
            }
            CLAMPED.fetch_add(1, Ordering::Relaxed);
            s = s.clamp(0.0, top - top * f64::EPSILON);
        }
        FlowPoint { x, s }
    }
}

/// Height band of the jump strip that counts as bad.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Band {
    /// `w < r` or `w > f(x) − r`: the roof crossings over the jump.
    Collar,
    /// `r < w < f(x) − r`, the literal reading of the displayed set.
    Mid,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BadSetSpec {
    /// Base points with `‖x‖ < jump_radius` form the jump strip.
    pub jump_radius: f64,
    pub height_collar: f64,
    pub band: Band,
    /// Heights within this distance of `0` or of the roof are bad in every
    /// fiber (`0` disables).
    pub reset_collar: f64,
}

impl BadSetSpec {
    /// `{‖x‖ < ε², w < ε² or w > f(x) − ε²}`.
    pub fn jump_collar(eps: f64) -> Self {
        let r = eps * eps;
        BadSetSpec { jump_radius: r, height_collar: r, band: Band::Collar, reset_collar: 0.0 }
    }

    /// `{‖x‖ < ε², ε² < w < f(x) − ε²}`.
    pub fn mid_strip(eps: f64) -> Self {
        BadSetSpec { band: Band::Mid, ..BadSetSpec::jump_collar(eps) }
    }

    pub fn with_reset_collar(mut self, width: f64) -> Self {
        self.reset_collar = width;
        self
    }

    /// Bad height intervals within a fiber over `x` of height `top`.
    fn bad_heights(&self, x: f64, top: f64, has_jump: bool, out: &mut Vec<(f64, f64)>) {
        if self.reset_collar > 0.0 {
            out.push((0.0, self.reset_collar.min(top)));
            out.push(((top - self.reset_collar).max(0.0), top));
        }
        if has_jump && norm(x) < self.jump_radius {
            let r = self.height_collar;
            match self.band {
                Band::Collar => {
                    out.push((0.0, r.min(top)));
                    out.push(((top - r).max(0.0), top));
                }
                Band::Mid => {
                    if top - r > r {
                        out.push((r, top - r));
                    }
                }
                Band::Full => out.push((0.0, top)),
            }
        }
    }
}

/// Complement of the bad-time set inside a horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct GoodTimeSet {
    pub start: f64,
    pub end: f64,
    pub intervals: Vec<(f64, f64)>,
    pub epsilon: f64,
    pub spec: BadSetSpec,
    pub roof_inf: f64,
    pub t_eps: Option<f64>,
}

impl GoodTimeSet {
    pub fn horizon(&self) -> f64 {
        self.end - self.start
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn interval_count(&self) -> usize {
        self.intervals.len()
    }

    /// `(inf f)⁻¹·T + 1`.
    pub fn count_bound(&self) -> f64 {
        self.horizon() / self.roof_inf + 1.0
    }

    /// `|U| ≥ (1 − ε²)·T`.
    pub fn density_holds(&self) -> bool {
        self.measure() >= (1.0 - self.epsilon * self.epsilon) * self.horizon()
    }

    pub fn contains(&self, t: f64) -> bool {
        let i = self.intervals.partition_point(|&(_, b)| b < t);
        self.intervals.get(i).is_some_and(|&(a, b)| a <= t && t <= b)
    }

    /// Invariants that must hold once the horizon passes `t_ε`.
    pub fn invariants_hold(&self) -> bool {
        let density = match self.t_eps {
            Some(t) if self.horizon() >= t => self.density_holds(),
            _ => true,
        };
        density && self.interval_count() as f64 <= self.count_bound()
    }
}

/// Intersection of two sorted disjoint interval lists.
pub fn intersect_intervals(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Good times in `[t0, t1]`, computed fiber by fiber along the orbit.
pub fn good_times_window(
    params: &FlowParams,
    z: FlowPoint,
    t0: f64,
    t1: f64,
    eps: f64,
    spec: &BadSetSpec,
) -> Result<GoodTimeSet> {
    let mut cursor = params.cursor(z)?;
    cursor.seek(t0)?;
    let mut bad: Vec<(f64, f64)> = Vec::new();
    let mut heights = Vec::new();
    loop {
        // fiber N starts at time f^{(N)}(x) − s
        let fiber_start = cursor.roof_sum() - z.s;
        if fiber_start > t1 {
            break;
        }
        let x = cursor.base();
        cursor.step_forward();
        if cursor.n.unsigned_abs() > params.horizon_cap {
            return Err(Error::HorizonOverflow(params.horizon_cap));
        }
        // the fiber ends where the next one starts, to the last bit
        let top = cursor.roof_sum() - z.s - fiber_start;
        heights.clear();
        spec.bad_heights(x, top, params.roof.jump() != 0.0, &mut heights);
        for &(a, b) in &heights {
            let (a, b) = ((fiber_start + a).max(t0), (fiber_start + b).min(t1));
            if a < b {
                bad.push((a, b));
            }
        }
    }
    bad.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut intervals = Vec::new();
    let mut cur = t0;
    let sliver = 1e-9 * (1.0 + t1.abs());
    for (a, b) in bad {
        if a > cur + sliver {
            intervals.push((cur, a));
        }
        cur = cur.max(b);
    }
    if cur + sliver < t1 {
        intervals.push((cur, t1));
    }
    Ok(GoodTimeSet {
        start: t0,
        end: t1,
        intervals,
        epsilon: eps,
        spec: *spec,
        roof_inf: params.roof.inf(),
        t_eps: None,
    })
}

pub fn good_times(params: &FlowParams, z: FlowPoint, horizon: f64, eps: f64, spec: &BadSetSpec) -> Result<GoodTimeSet> {
    good_times_window(params, z, 0.0, horizon, eps, spec)
}

/// Smallest horizon on the doubling grid `inf f·2^k ≤ t_max` from which the
/// `(1 − ε²)` density holds for every seeded start.
pub fn calibrate_t_eps(
    params: &FlowParams,
    eps: f64,
    spec: &BadSetSpec,
    samples: usize,
    seed: u64,
    t_max: f64,
) -> Result<Option<f64>> {
    let mut grid = Vec::new();
    let mut t = params.roof.inf();
    while t <= t_max {
        grid.push(t);
        t *= 2.0;
    }
    let per_start: Vec<Vec<bool>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let z = params.sample_point(&mut derived_rng(seed, i as u64));
            grid.iter()
                .map(|&h| good_times(params, z, h, eps, spec).map(|g| g.density_holds()))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;
    let ok_at = |k: usize| per_start.iter().all(|v| v[k]);
    let mut first = None;
    for k in (0..grid.len()).rev() {
        if ok_at(k) {
            first = Some(grid[k]);
        } else {
            break;
        }
    }
    Ok(first)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowReport {
    pub initial_distance: f64,
    pub delta_bound: f64,
    pub delta_ok: bool,
    pub grid_points: usize,
    pub checked_points: usize,
    pub max_deviation: f64,
    pub violations: Vec<f64>,
}

/// Evaluates `d(T_t z, T_{t + f^{(N)}(x′) − f^{(N)}(x)} z′) < ε²` on the good
/// times of `z`, `N = N(z, t)`.
pub fn shadowing_check(
    params: &FlowParams,
    z: FlowPoint,
    z_prime: FlowPoint,
    horizon: f64,
    eps: f64,
    spec: &BadSetSpec,
    delta_bound: f64,
) -> Result<ShadowReport> {
    let good = good_times(params, z, horizon, eps, spec)?;
    let step = params.roof.inf() / 20.0;
    let count = (horizon / step).floor() as usize;
    let mut cz = params.cursor(z)?;
    let mut cw = params.cursor(z_prime)?;
    let alpha = params.alpha();
    let mut partner_sum = NeumaierSum::new();
    let mut partner_n = 0i64;
    let mut partner_pos = alpha.orbit(z_prime.x);
    let mut max_dev: f64 = 0.0;
    let mut violations = Vec::new();
    let mut checked = 0;
    for i in 0..=count {
        let t = i as f64 * step;
        if !good.contains(t) {
            continue;
        }
        cz.seek(t)?;
        let n = cz.crossings();
        while partner_n < n {
            partner_sum.add(params.roof.eval(partner_pos.next().unwrap()));
            partner_n += 1;
        }
        let shift = partner_sum.value() - cz.roof_sum();
        cw.seek(t + shift)?;
        let d = flow_metric(cz.point(), cw.point());
        checked += 1;
        max_dev = max_dev.max(d);
        if d >= eps * eps {
            violations.push(t);
        }
    }
    let initial_distance = flow_metric(z, z_prime);
    Ok(ShadowReport {
        initial_distance,
        delta_bound,
        delta_ok: initial_distance < delta_bound,
        grid_points: count + 1,
        checked_points: checked,
        max_deviation: max_dev,
        violations,
    })
}
