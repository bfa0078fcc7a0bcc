//! Seeded trials of the full pipeline: sample, window search, residual
//! check, continuous lift; aggregated into success rates and a failure
//! taxonomy.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::circle::circle_dist;
use crate::error::{Error, Result};
use crate::roof::derived_rng;
use crate::special_flow::FlowParams;

use super::constants::ProofConstants;
use super::lift::{lift_to_continuous, LiftReport};
use super::sets::{EkSet, ZSet};
use super::window::{find_window, verify_window, Direction, FlowPair, MatchSample, WindowCheck, WindowPlan};

/// Everything a trial needs, built once.
#[derive(Clone, Debug)]
pub struct MatchingSetup {
    pub pair: FlowPair,
    pub constants: ProofConstants,
    pub ek: EkSet,
    pub z: ZSet,
}

impl MatchingSetup {
    /// Picks the smallest admissible scale with `q ≥ min_q`.
    pub fn new(f: FlowParams, g: FlowParams, constants: ProofConstants, min_q: u64) -> Result<Self> {
        let scale = EkSet::select_scale(f.alpha(), &constants, min_q)?;
        let ek = EkSet::new(f.alpha(), f.roof(), scale, &constants)?;
        let z = ZSet::new(g.alpha(), g.roof(), &constants)?;
        Ok(MatchingSetup { pair: FlowPair::new(f, g)?, constants, ek, z })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// `(x, s) ∈ E_k`, `(y, r), (y′, r′) ∈ Z` at distance `≤ δ`.
    Proof,
    /// `(y, r) = (x, s)`, `(y′, r′) = (x′, s)`: the off-diagonal self-joining.
    Diagonal,
}

#[derive(Clone, Debug)]
pub struct AuditConfig {
    pub trials: usize,
    pub seed: u64,
    pub sample_mode: SampleMode,
    /// Try the reversed flows when the forward attempt fails.
    pub try_backward: bool,
}

impl AuditConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        AuditConfig { trials, seed, sample_mode: SampleMode::Proof, try_backward: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FailureKind {
    NoCandidateInP,
    ResidualTooLarge,
    NoOverlap,
    LiftKappa,
    LiftMeasure,
    LiftCount,
    LiftDistance,
    Error(String),
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureKind::NoCandidateInP => f.write_str("no-candidate-in-P"),
            FailureKind::ResidualTooLarge => f.write_str("residual"),
            FailureKind::NoOverlap => f.write_str("no-overlap"),
            FailureKind::LiftKappa => f.write_str("lift-kappa"),
            FailureKind::LiftMeasure => f.write_str("lift-measure"),
            FailureKind::LiftCount => f.write_str("lift-count"),
            FailureKind::LiftDistance => f.write_str("lift-distance"),
            FailureKind::Error(e) => write!(f, "error: {e}"),
        }
    }
}

fn lift_failure(l: &LiftReport) -> Option<FailureKind> {
    if l.pass {
        None
    } else if !(l.l_time > 0.0) {
        Some(FailureKind::NoOverlap)
    } else if !l.kappa_ok {
        Some(FailureKind::LiftKappa)
    } else if !l.measure_ok {
        Some(FailureKind::LiftMeasure)
    } else if !l.count_ok {
        Some(FailureKind::LiftCount)
    } else {
        Some(FailureKind::LiftDistance)
    }
}

/// One pass of the pipeline in one direction.
#[derive(Clone, Debug)]
pub struct Attempt {
    pub requested: Direction,
    pub plan: Option<WindowPlan>,
    pub checks: Vec<WindowCheck>,
    /// Index of the candidate carried to the lift.
    pub chosen: Option<usize>,
    pub lift: Option<LiftReport>,
    pub failure: Option<FailureKind>,
}

impl Attempt {
    pub fn window_ok(&self) -> bool {
        self.chosen.is_some_and(|i| self.checks[i].pass)
    }

    pub fn lift_ok(&self) -> bool {
        self.lift.as_ref().is_some_and(|l| l.pass)
    }
}

/// Window search, verification and lift for one sample in one direction.
pub fn run_attempt(setup: &MatchingSetup, sample: &MatchSample, requested: Direction) -> Attempt {
    let mut out = Attempt { requested, plan: None, checks: Vec::new(), chosen: None, lift: None, failure: None };
    let plan = match find_window(sample, &setup.constants, &setup.pair, requested) {
        Ok(p) => p,
        Err(e) => {
            out.failure = Some(FailureKind::Error(e.to_string()));
            return out;
        }
    };
    let (f, g) = setup.pair.oriented(plan.direction);
    let oriented = sample.oriented(&setup.pair, plan.direction);
    out.checks = plan.candidates.iter().map(|w| verify_window(&oriented, w, f, g, &setup.constants)).collect();
    let mut passing: Vec<usize> = (0..out.checks.len()).filter(|&i| out.checks[i].pass).collect();
    passing.sort_by(|&a, &b| {
        let r = |i: usize| out.checks[i].f_residual + out.checks[i].g_residual;
        r(a).total_cmp(&r(b))
    });
    if passing.is_empty() {
        out.failure = Some(if plan.any_in_p() { FailureKind::ResidualTooLarge } else { FailureKind::NoCandidateInP });
        out.chosen = (!plan.candidates.is_empty()).then_some(0);
        out.plan = Some(plan);
        return out;
    }
    for &i in &passing {
        match lift_to_continuous(&oriented, &plan.candidates[i], f, g, &setup.constants) {
            Ok(l) => {
                let done = l.pass;
                if out.lift.is_none() || done {
                    out.failure = lift_failure(&l);
                    out.lift = Some(l);
                    out.chosen = Some(i);
                }
                if done {
                    break;
                }
            }
            Err(e) => {
                if out.lift.is_none() {
                    out.failure = Some(FailureKind::Error(e.to_string()));
                    out.chosen = Some(i);
                }
            }
        }
    }
    out.plan = Some(plan);
    out
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub trial: usize,
    pub sample: MatchSample,
    pub in_ek: bool,
    pub in_z: bool,
    pub within_delta: bool,
    pub attempts: Vec<Attempt>,
}

impl TrialRecord {
    /// The attempt whose outcome the record reports: the first fully
    /// successful one, else the first with a verified window, else the first.
    pub fn decisive(&self) -> &Attempt {
        self.attempts
            .iter()
            .find(|a| a.lift_ok())
            .or_else(|| self.attempts.iter().find(|a| a.window_ok()))
            .unwrap_or(&self.attempts[0])
    }

    pub fn window_ok(&self) -> bool {
        self.attempts.iter().any(Attempt::window_ok)
    }

    pub fn lift_ok(&self) -> bool {
        self.attempts.iter().any(Attempt::lift_ok)
    }
}

/// Draws the sample of trial `index`.
pub fn draw_sample(setup: &MatchingSetup, mode: SampleMode, seed: u64, index: u64) -> MatchSample {
    let mut rng = derived_rng(seed, index);
    let (x, s) = setup.ek.sample(&mut rng);
    let x_prime = setup.ek.partner(x);
    let ((y, r), (y_prime, r_prime)) = match mode {
        SampleMode::Proof => setup.z.sample_pair(&mut rng),
        SampleMode::Diagonal => ((x, s), (x_prime, s)),
    };
    MatchSample { x, x_prime, s, s_prime: s, y, y_prime, r, r_prime, k: setup.ek.scale_index, q_k: setup.ek.q }
}

pub fn run_trial(setup: &MatchingSetup, cfg: &AuditConfig, trial: usize) -> TrialRecord {
    let sample = draw_sample(setup, cfg.sample_mode, cfg.seed, trial as u64);
    let mut attempts = vec![run_attempt(setup, &sample, Direction::Forward)];
    if cfg.try_backward && !attempts[0].lift_ok() {
        attempts.push(run_attempt(setup, &sample, Direction::Backward));
    }
    let d = circle_dist(sample.y, sample.y_prime) + (sample.r - sample.r_prime).abs();
    TrialRecord {
        trial,
        in_ek: setup.ek.contains(sample.x, sample.s),
        in_z: setup.z.contains(sample.y, sample.r) && setup.z.contains(sample.y_prime, sample.r_prime),
        within_delta: d <= setup.constants.delta * (1.0 + 1e-12),
        sample,
        attempts,
    }
}

#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub constants: ProofConstants,
    pub scale_index: usize,
    pub q_k: u64,
    pub records: Vec<TrialRecord>,
}

impl CriterionReport {
    pub fn trials(&self) -> usize {
        self.records.len()
    }

    pub fn window_successes(&self) -> usize {
        self.records.iter().filter(|r| r.window_ok()).count()
    }

    pub fn lift_successes(&self) -> usize {
        self.records.iter().filter(|r| r.lift_ok()).count()
    }

    fn rate(&self, k: usize) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            k as f64 / self.records.len() as f64
        }
    }

    pub fn window_rate(&self) -> f64 {
        self.rate(self.window_successes())
    }

    pub fn lift_rate(&self) -> f64 {
        self.rate(self.lift_successes())
    }

    /// Failure kinds of the decisive attempts of unsuccessful trials.
    pub fn failure_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for r in self.records.iter().filter(|r| !r.lift_ok()) {
            let key = r.decisive().failure.as_ref().map_or("unknown".to_string(), |f| match f {
                FailureKind::Error(_) => "error".to_string(),
                other => other.to_string(),
            });
            *m.entry(key).or_insert(0) += 1;
        }
        m
    }

    /// Plans counted per case label (all attempts).
    pub fn case_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for a in self.records.iter().flat_map(|r| &r.attempts) {
            if let Some(p) = &a.plan {
                *m.entry(format!("{}:{}", p.direction, p.label)).or_insert(0) += 1;
            }
        }
        m
    }

    /// `(two-window plans, of which some candidate lies in P)`.
    pub fn two_window_guarantee(&self) -> (usize, usize) {
        let plans = self.records.iter().flat_map(|r| &r.attempts).filter_map(|a| a.plan.as_ref());
        plans.filter(|p| p.label.is_two_window()).fold((0, 0), |(n, ok), p| (n + 1, ok + p.any_in_p() as usize))
    }
}

pub fn criterion_audit(setup: &MatchingSetup, cfg: &AuditConfig) -> Result<CriterionReport> {
    if cfg.sample_mode == SampleMode::Diagonal && setup.pair.f.roof() != setup.pair.g.roof() {
        return Err(Error::InvalidArgument("diagonal sampling needs identical roofs".into()));
    }
    let records = (0..cfg.trials).into_par_iter().map(|i| run_trial(setup, cfg, i)).collect();
    Ok(CriterionReport {
        constants: setup.constants.clone(),
        scale_index: setup.ek.scale_index,
        q_k: setup.ek.q,
        records,
    })
}
