//! From a discrete window to a set of times on which both orbit pairs stay
//! `ε`-close after the shifts.

use crate::error::Result;
use crate::special_flow::{flow_metric, good_times_window, intersect_intervals, BadSetSpec, FlowParams, FlowPoint};

use super::constants::ProofConstants;
use super::window::{MatchSample, MatchingWindow};

#[derive(Clone, Debug, PartialEq)]
pub struct LiftReport {
    /// Start of the common time window.
    pub m_time: f64,
    /// Its length.
    pub l_time: f64,
    pub intervals: Vec<(f64, f64)>,
    pub u_measure: f64,
    pub count_bound: f64,
    pub kappa_ok: bool,
    pub measure_ok: bool,
    pub count_ok: bool,
    pub max_distance_f: f64,
    pub max_distance_g: f64,
    pub distance_ok: bool,
    /// Informational: `M ≥ N`.
    pub m_at_least_n: bool,
    pub pass: bool,
}

impl LiftReport {
    fn failed(m_time: f64, l_time: f64, constants: &ProofConstants) -> Self {
        LiftReport {
            m_time,
            l_time,
            intervals: Vec::new(),
            u_measure: 0.0,
            count_bound: 1.0,
            kappa_ok: false,
            measure_ok: false,
            count_ok: true,
            max_distance_f: f64::NAN,
            max_distance_g: f64::NAN,
            distance_ok: false,
            m_at_least_n: m_time >= constants.horizon_n as f64,
            pass: false,
        }
    }
}

/// Time interval during which the crossing count of `(x, s)` lies in `[a, b]`.
fn crossing_window(flow: &FlowParams, x: f64, s: f64, a: u64, b: u64) -> (f64, f64) {
    let roof = flow.roof();
    let alpha = flow.alpha();
    (roof.birkhoff_sum(alpha, x, a as i64) - s, roof.birkhoff_sum(alpha, x, b as i64 + 1) - s)
}

/// `max` of the two flows' distances to their shifted partners at time `t`.
struct Tracker<'a> {
    f: crate::special_flow::FlowCursor<'a>,
    fp: crate::special_flow::FlowCursor<'a>,
    g: crate::special_flow::FlowCursor<'a>,
    gp: crate::special_flow::FlowCursor<'a>,
    p: f64,
    q: f64,
}

impl Tracker<'_> {
    fn distances(&mut self, t: f64) -> Result<(f64, f64)> {
        self.f.seek(t)?;
        self.fp.seek(t - self.p)?;
        self.g.seek(t)?;
        self.gp.seek(t - self.q)?;
        Ok((flow_metric(self.f.point(), self.fp.point()), flow_metric(self.g.point(), self.gp.point())))
    }
}

/// The partner of `T_t z` is `T_{t − p} z′`: with `p ≈ f^{(n)}(x) − f^{(n)}(x′)`
/// both points then sit at the same height of neighbouring fibers.
pub fn lift_to_continuous(
    sample: &MatchSample,
    window: &MatchingWindow,
    f: &FlowParams,
    g: &FlowParams,
    constants: &ProofConstants,
) -> Result<LiftReport> {
    let eps = constants.epsilon;
    let gi = |n: u64| (n as f64 / constants.xi).floor() as u64;
    let (f0, f1) = crossing_window(f, sample.x, sample.s, window.start, window.end());
    let (g0, g1) = crossing_window(g, sample.y, sample.r, gi(window.start), gi(window.end()));
    let m_time = f0.max(g0);
    let l_time = f1.min(g1) - m_time;
    if !(l_time > 0.0) {
        return Ok(LiftReport::failed(m_time, l_time, constants));
    }
    let end = m_time + l_time;
    let spec_f = BadSetSpec::jump_collar(eps).with_reset_collar(eps * eps);
    let spec_g = BadSetSpec::jump_collar(eps).with_reset_collar(eps * eps + constants.delta);
    let z = FlowPoint::new(sample.x, sample.s);
    let w = FlowPoint::new(sample.y, sample.r);
    let uf = good_times_window(f, z, m_time, end, eps, &spec_f)?;
    let ug = good_times_window(g, w, m_time, end, eps, &spec_g)?;
    let intervals = intersect_intervals(&uf.intervals, &ug.intervals);
    let u_measure: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    let count_bound = (l_time / constants.c).floor() + 1.0;

    let mut tracker = Tracker {
        f: f.cursor(z)?,
        fp: f.cursor(FlowPoint::new(sample.x_prime, sample.s_prime))?,
        g: g.cursor(w)?,
        gp: g.cursor(FlowPoint::new(sample.y_prime, sample.r_prime))?,
        p: window.p,
        q: window.q,
    };
    let step = f.roof().inf().min(g.roof().inf()) / 20.0;
    let (mut df, mut dg) = (0.0f64, 0.0f64);
    for &(a, b) in &intervals {
        let pieces = ((b - a) / step).ceil().max(1.0) as usize;
        for i in 0..=pieces {
            let t = a + (b - a) * i as f64 / pieces as f64;
            let (u, v) = tracker.distances(t)?;
            df = df.max(u);
            dg = dg.max(v);
        }
    }
    let kappa_ok = l_time / m_time >= constants.kappa;
    let measure_ok = u_measure >= (1.0 - eps) * l_time;
    let count_ok = intervals.len() as f64 <= count_bound;
    let distance_ok = !intervals.is_empty() && df < eps && dg < eps;
    Ok(LiftReport {
        m_time,
        l_time,
        intervals,
        u_measure,
        count_bound,
        kappa_ok,
        measure_ok,
        count_ok,
        max_distance_f: df,
        max_distance_g: dg,
        distance_ok,
        m_at_least_n: m_time >= constants.horizon_n as f64,
        pass: kappa_ok && measure_ok && count_ok && distance_ok,
    })
}
