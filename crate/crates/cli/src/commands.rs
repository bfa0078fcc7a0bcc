//! One function per subcommand, each producing a table and a summary.

use std::fmt;

use rigidity_core::coboundary::{dichotomy, small_divisor_profile, VerdictKind};
use rigidity_core::diophantine::{cf_from_real, default_precision_bits, ostrowski_decompose, parse_decimal, ContinuedFraction};
use rigidity_core::joining::{product_birkhoff_correlation, self_joining_control, Observable};
use rigidity_core::matching::audit::run_trial;
use rigidity_core::matching::presets::{PRESET_HORIZON_N, PRESET_MIN_Q};
use rigidity_core::matching::{criterion_audit, derive_constants, Branch, MatchingSetup, Mode, Preset};
use rigidity_core::roof::dk_audit;
use rigidity_core::trichotomy::classify;
use rigidity_core::{FlowParams, FlowPoint, Frequency, RoofFunction};

use crate::config::{ConfigError, ExperimentConfig};

/// Window and lift success rates the acceptance presets must reach.
pub const WINDOW_RATE: f64 = 0.95;
pub const LIFT_RATE: f64 = 0.90;
/// Largest accepted residual of a Fourier solve.
pub const SOLVE_RESIDUAL: f64 = 1e-8;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Module(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Module(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<rigidity_core::Error> for RunError {
    fn from(e: rigidity_core::Error) -> Self {
        RunError::Module(e.to_string())
    }
}

type Run = Result<Artifacts, RunError>;

/// Output of one command: a CSV table, summary lines, and the first
/// violated invariant if any.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts {
    pub summary: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub violation: Option<String>,
}

impl Artifacts {
    fn new(header: &[&str]) -> Self {
        Artifacts { header: header.iter().map(|h| h.to_string()).collect(), ..Default::default() }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    fn violate(&mut self, what: impl Into<String>) {
        self.violation.get_or_insert_with(|| what.into());
    }
}

macro_rules! cells {
    ($($v:expr),* $(,)?) => { vec![$($v.to_string()),*] };
}

pub fn run(cfg: &ExperimentConfig) -> Run {
    match cfg.command.as_str() {
        "cf" => cf(cfg),
        "ostrowski" => ostrowski(cfg),
        "dk-audit" => dk(cfg),
        "flow-orbit" => flow_orbit(cfg),
        "trichotomy" => trichotomy(cfg),
        "match" => matching(cfg),
        "lift" => lift(cfg),
        "coboundary" => coboundary(cfg),
        "joining" => joining(cfg),
        other => Err(ConfigError(format!("unknown command {other:?}")).into()),
    }
}

fn parse_mode(cfg: &ExperimentConfig) -> Result<Mode, ConfigError> {
    match cfg.require::<String>("mode")?.as_str() {
        "desk" => Ok(Mode::DeskScale),
        "paper" => Ok(Mode::PaperFaithful),
        m => Err(ConfigError(format!("mode must be desk or paper, got {m:?}"))),
    }
}

fn parse_digits(s: &str) -> Result<Vec<u64>, ConfigError> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| ConfigError(format!("digit {t:?}: {e}"))))
        .collect()
}

fn cf(cfg: &ExperimentConfig) -> Run {
    let depth: usize = cfg.require("depth")?;
    let cf = match (cfg.get::<String>("real")?, cfg.get::<String>("digits")?) {
        (Some(real), None) => {
            let value = parse_decimal(&real).map_err(|e| ConfigError(e.to_string()))?;
            let bits = cfg.get::<u32>("precision")?.unwrap_or_else(|| default_precision_bits(&real));
            cf_from_real(&value, bits, depth)?
        }
        (None, Some(d)) => {
            let digits = parse_digits(&d)?;
            ContinuedFraction::from_digits(&digits[..depth.min(digits.len())])?
        }
        _ => return Err(ConfigError("give exactly one of real, digits".into()).into()),
    };
    let mut a = Artifacts::new(&["n", "a_n", "q_n", "Q_n", "P_n"]);
    let (q, qc, pc) = (cf.denominators(), cf.convergent_denominators(), cf.convergent_numerators());
    for n in 0..=cf.depth() {
        let digit = cf.digit(n).map_or(String::new(), |d| d.to_string());
        a.row(cells![n, digit, q[n], qc[n], pc[n]]);
    }
    let digits: Vec<String> = cf.digits().iter().map(u64::to_string).collect();
    a.note(format!("digits: [0; {}]", digits.join(", ")));
    if cf.last_digit_unreliable() {
        a.note("last digit not certified by the given precision");
    }
    Ok(a)
}

fn ostrowski(cfg: &ExperimentConfig) -> Run {
    let n: u64 = cfg.require("n")?;
    let alpha: Frequency = cfg.require("alpha")?;
    let o = ostrowski_decompose(n, alpha.cf())?;
    let mut a = Artifacts::new(&["i", "q_i", "b_i"]);
    for (i, (b, q)) in o.coefficients.iter().zip(&o.denominators).enumerate() {
        a.row(cells![i, q, b]);
    }
    let back = o.reconstruct();
    a.note(format!("n = {n} reconstructs to {back}"));
    if back != n as u128 {
        a.violate(format!("reconstruction {back} differs from {n}"));
    }
    if !o.digit_bounds_hold() {
        a.violate("digit bound b_i q_i <= q_(i+1) fails");
    }
    Ok(a)
}

fn dk(cfg: &ExperimentConfig) -> Run {
    let alpha: Frequency = cfg.require("alpha")?;
    let roof: RoofFunction = cfg.require("roof")?;
    let max_index: usize = cfg.require("max-index")?;
    let samples: usize = cfg.require("samples")?;
    let r = dk_audit(&roof, &alpha, 0..=max_index, samples, cfg.require("seed")?, &[])?;
    let mut a = Artifacts::new(&["index", "q", "sup_deviation", "variation_bound", "within"]);
    for rec in &r.records {
        a.row(cells![rec.index, rec.q, rec.sup_deviation, r.variation_bound, rec.sup_deviation <= r.variation_bound]);
    }
    a.note(format!("{} samples, variation bound {}, {} violations", samples, r.variation_bound, r.violations()));
    if r.violations() > 0 {
        a.violate(format!("{} denominator times exceed the variation", r.violations()));
    }
    Ok(a)
}

fn flow_orbit(cfg: &ExperimentConfig) -> Run {
    let params = FlowParams::new(cfg.require("alpha")?, cfg.require("roof")?)?;
    let start = FlowPoint::new(cfg.require("x")?, cfg.require("s")?);
    if !params.contains(start) {
        return Err(ConfigError(format!("start ({}, {}) is not under the roof", start.x, start.s)).into());
    }
    let samples = params.orbit_samples(start, cfg.require("horizon")?, cfg.require("step")?)?;
    let mut a = Artifacts::new(&["t", "x", "s", "n"]);
    for (t, p, n) in samples {
        a.row(cells![t, p.x, p.s, n]);
    }
    a.note(format!("roof {}, mean {}", params.roof(), params.mean()));
    Ok(a)
}

fn trichotomy(cfg: &ExperimentConfig) -> Run {
    let beta: Frequency = cfg.require("beta")?;
    let v = classify(cfg.require("y")?, cfg.require("y-prime")?, &beta, cfg.require("n")?)?;
    let opt = |w: Option<u64>| w.map_or(String::new(), |k| k.to_string());
    let mut a = Artifacts::new(&[
        "n", "q_n", "q_next", "holds_i", "holds_ii", "holds_iii", "witness_i", "witness_ii", "witness_iii", "ambiguous",
    ]);
    a.row(cells![
        v.n,
        v.q_n,
        v.q_next,
        v.holds_i,
        v.holds_ii,
        v.holds_iii,
        opt(v.witness_i),
        opt(v.witness_ii),
        opt(v.witness_iii),
        v.ambiguous
    ]);
    a.note(format!("clauses (i) {} (ii) {} (iii) {}", v.holds_i, v.holds_ii, v.holds_iii));
    if !v.any() {
        a.violate("no clause holds");
    }
    Ok(a)
}

fn setup(cfg: &ExperimentConfig, preset: Preset) -> Result<MatchingSetup, RunError> {
    let (eps, c, mode): (f64, f64, Mode) = (cfg.require("epsilon")?, cfg.require("c")?, parse_mode(cfg)?);
    let overrides = ["alpha", "beta", "f", "g"];
    let custom = cfg.spec().keys.iter().any(|k| overrides.contains(&k.name)) && overrides.iter().any(|k| cfg.values.contains_key(*k));
    if !custom {
        return Ok(preset.setup_with(eps, c, mode)?);
    }
    let (f, g) = preset.flows()?;
    let alpha = cfg.get::<Frequency>("alpha")?.unwrap_or_else(|| f.alpha().clone());
    let beta = cfg.get::<Frequency>("beta")?.unwrap_or_else(|| g.alpha().clone());
    let fr = cfg.get::<RoofFunction>("f")?.unwrap_or_else(|| f.roof().clone());
    let gr = cfg.get::<RoofFunction>("g")?.unwrap_or_else(|| g.roof().clone());
    let k = derive_constants(&fr, &gr, &alpha, &beta, eps, PRESET_HORIZON_N, mode, preset.branch(), Some(c))?;
    let min_q = if preset.branch() == Branch::Bounded { 1 } else { PRESET_MIN_Q };
    Ok(MatchingSetup::new(FlowParams::new(alpha, fr)?, FlowParams::new(beta, gr)?, k, min_q)?)
}

fn matching(cfg: &ExperimentConfig) -> Run {
    let preset: Preset = cfg.require("preset")?;
    let setup = setup(cfg, preset)?;
    let mut audit = preset.audit_config(cfg.require("seed")?);
    audit.trials = cfg.require("trials")?;
    log::info!("{preset}: {} trials at q = {}", audit.trials, setup.ek.q);
    let r = criterion_audit(&setup, &audit)?;
    let mut a = Artifacts::new(&[
        "trial", "direction", "label", "candidates", "start", "len", "p", "q", "f_residual", "g_residual", "window_ok",
        "lift_ok", "failure",
    ]);
    for rec in &r.records {
        let at = rec.decisive();
        let plan = at.plan.as_ref();
        let chosen = at.chosen.and_then(|i| Some((plan?.candidates.get(i)?, at.checks.get(i)?)));
        let window = match chosen {
            Some((w, c)) => cells![w.start, w.len, w.p, w.q, c.f_residual, c.g_residual],
            None => vec![String::new(); 6],
        };
        let mut row = cells![
            rec.trial,
            plan.map_or(String::new(), |p| p.direction.to_string()),
            plan.map_or(String::new(), |p| p.label.to_string()),
            plan.map_or(0, |p| p.candidates.len())
        ];
        row.extend(window);
        row.extend(cells![rec.window_ok(), rec.lift_ok(), at.failure.as_ref().map_or(String::new(), |f| f.to_string())]);
        a.row(row);
    }
    let (two, two_in_p) = r.two_window_guarantee();
    a.note(format!("preset {preset}, branch {}, scale index {}, q = {}", setup.constants.branch, r.scale_index, r.q_k));
    a.note(format!("epsilon {}, c {}, delta {:e}, kappa {:e}", setup.constants.epsilon, setup.constants.c, setup.constants.delta, setup.constants.kappa));
    a.note(format!("window success {}/{} = {:.3}", r.window_successes(), r.trials(), r.window_rate()));
    a.note(format!("lift success {}/{} = {:.3}", r.lift_successes(), r.trials(), r.lift_rate()));
    a.note(format!("two-window plans with a candidate in P: {two_in_p}/{two}"));
    for (label, n) in r.case_counts() {
        a.note(format!("case {label}: {n}"));
    }
    for (kind, n) in r.failure_counts() {
        a.note(format!("failure {kind}: {n}"));
    }
    for w in &setup.constants.warnings {
        a.note(format!("warning: {w}"));
    }
    if two_in_p < two {
        a.violate(format!("{} two-window plans without a candidate in P", two - two_in_p));
    }
    if preset != Preset::ContrastEqualJumps && r.trials() > 0 {
        if r.window_rate() < WINDOW_RATE {
            a.violate(format!("window rate {:.3} below {WINDOW_RATE}", r.window_rate()));
        }
        if r.lift_rate() < LIFT_RATE {
            a.violate(format!("lift rate {:.3} below {LIFT_RATE}", r.lift_rate()));
        }
    }
    Ok(a)
}

fn lift(cfg: &ExperimentConfig) -> Run {
    let preset: Preset = cfg.require("preset")?;
    let setup = setup(cfg, preset)?;
    let trial: usize = cfg.require("trial")?;
    let rec = run_trial(&setup, &preset.audit_config(cfg.require("seed")?), trial);
    let at = rec.decisive();
    let mut a = Artifacts::new(&["start", "end", "length"]);
    let s = &rec.sample;
    a.note(format!("sample x {} x' {} s {} y {} y' {} r {} r' {}", s.x, s.x_prime, s.s, s.y, s.y_prime, s.r, s.r_prime));
    if let (Some(plan), Some(i)) = (&at.plan, at.chosen) {
        let w = &plan.candidates[i];
        a.note(format!("{} {}: window [{}, {}] p {} q {}", plan.direction, plan.label, w.start, w.end(), w.p, w.q));
    }
    match &at.lift {
        Some(l) => {
            for &(s, e) in &l.intervals {
                a.row(cells![s, e, e - s]);
            }
            a.note(format!("M {} L {} L/M {:e} (kappa ok {})", l.m_time, l.l_time, l.l_time / l.m_time, l.kappa_ok));
            a.note(format!("|U| {} of L, measure ok {}, {} intervals (bound {})", l.u_measure, l.measure_ok, l.intervals.len(), l.count_bound));
            a.note(format!("max distances {} and {}, below epsilon {}", l.max_distance_f, l.max_distance_g, l.distance_ok));
            if !l.pass {
                a.violate("lift fails");
            }
        }
        None => a.violate(format!(
            "no lift: {}",
            at.failure.as_ref().map_or("no window".to_string(), |f| f.to_string())
        )),
    }
    Ok(a)
}

fn coboundary(cfg: &ExperimentConfig) -> Run {
    let alpha: Frequency = cfg.require("alpha")?;
    let (psi, phi): (RoofFunction, RoofFunction) = (cfg.require("psi")?, cfg.require("phi")?);
    let max_h: u32 = cfg.require("max-harmonic")?;
    let v = dichotomy(&psi, &phi, &alpha, max_h);
    let mut a = Artifacts::new(&["k", "divisor", "at_denominator", "xi_cos", "xi_sin"]);
    let xi = match &v.kind {
        VerdictKind::Cohomologous(t) => Some(&t.xi),
        _ => None,
    };
    for e in small_divisor_profile(&alpha, max_h) {
        let h = xi.and_then(|x| x.harmonics.iter().find(|h| h.k == e.k));
        let (c, s) = h.map_or((0.0, 0.0), |h| (h.cos, h.sin));
        a.row(cells![e.k, e.divisor, e.at_denominator, c, s]);
    }
    a.note(v.to_string());
    if let VerdictKind::Cohomologous(t) = &v.kind {
        if t.residual > SOLVE_RESIDUAL {
            a.violate(format!("solve residual {:e} above {SOLVE_RESIDUAL:e}", t.residual));
        }
    }
    Ok(a)
}

fn joining(cfg: &ExperimentConfig) -> Run {
    let fa = FlowParams::new(cfg.require("alpha")?, cfg.require("roof-a")?)?;
    let fb = FlowParams::new(cfg.require("beta")?, cfg.require("roof-b")?)?;
    let k: u32 = cfg.require("harmonic")?;
    let (horizon, samples, seed): (f64, usize, u64) = (cfg.require("horizon")?, cfg.require("samples")?, cfg.require("seed")?);
    let (oa, ob) = (Observable::cos(k).centered(&fa), Observable::cos(k).centered(&fb));
    let r = product_birkhoff_correlation(&fa, &fb, &oa, &ob, horizon, samples, seed)?;
    let mut a = Artifacts::new(&["seed", "joint", "marginalA", "marginalB", "gap"]);
    for row in &r.rows {
        a.row(cells![row.seed, row.joint, row.marginal_a, row.marginal_b, row.gap]);
    }
    a.note(r.banner());
    a.note(format!("T {horizon}, {} starts, step {}", r.samples, r.step));
    a.note(format!("mean gap {:e}, max |gap| {:e}, Monte-Carlo half-width {:e}", r.gap, r.max_abs_gap, r.mc_error));
    if cfg.require::<bool>("control")? {
        let c = self_joining_control(&fa, &oa, horizon, samples.clamp(1, 4), seed)?;
        let d = c.control.unwrap_or(0.0);
        a.note(format!("diagonal control {d}, ratio to max |gap| {:.1}", d / r.max_abs_gap));
    }
    Ok(a)
}
