//! Constants of the matching argument and the shift set `P`.

use std::f64::consts::{PI, TAU};

use log::warn;

use crate::diophantine::{classify_type, Frequency, TypeKind};
use crate::error::{Error, Result};
use crate::roof::RoofFunction;

/// Default desk-scale `c`.
pub const DESK_C: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    PaperFaithful,
    DeskScale,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// At least one frequency of unbounded type.
    Unbounded,
    /// Both frequencies of bounded type.
    Bounded,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::PaperFaithful => "paper-faithful",
            Mode::DeskScale => "desk-scale",
        })
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Unbounded => "unbounded",
            Branch::Bounded => "bounded",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProofConstants {
    pub epsilon: f64,
    /// `∫g / ∫f`.
    pub xi: f64,
    /// `1000·max(ξ, A_f/A_g, A_g/A_f, 1/A_f, 1/A_g)`.
    pub big_delta: f64,
    /// `c` in use (the override in desk-scale mode).
    pub c: f64,
    /// `c` from the closed formula, kept for reference in every mode.
    pub c_paper: f64,
    pub kappa: f64,
    pub delta: f64,
    pub delta_eps: f64,
    /// Uniform bound on `|φ^{(n)}|` for `φ ∈ {f_ac', g_ac'}`.
    pub smooth_sum_bound: f64,
    pub n0: Option<usize>,
    pub q_n0: Option<u64>,
    /// `10·max(A_f, A_g)`.
    pub shift_cap: f64,
    /// `c²`.
    pub separation: f64,
    pub eps_cap: f64,
    pub mode: Mode,
    pub branch: Branch,
    pub a0: Option<f64>,
    pub horizon_n: u64,
    pub jumps: (f64, f64),
    pub warnings: Vec<String>,
}

impl ProofConstants {
    /// `(p, q) ∈ P`.
    pub fn in_p(&self, p: f64, q: f64) -> bool {
        p.abs().max(q.abs()) <= self.shift_cap && (p - q).abs() >= self.separation
    }

    /// Overrides the `|p − q|` separation (for sensitivity runs).
    pub fn with_separation(mut self, separation: f64) -> Self {
        self.separation = separation;
        self
    }
}

/// `Σ_h 2πh·amp_h / |sin(πhα)|`: the Birkhoff sums of the derivative of the
/// smooth part are bounded by this for every `n` and `x`.
pub fn smooth_derivative_sum_bound(roof: &RoofFunction, alpha: &Frequency) -> f64 {
    roof.smooth()
        .harmonics
        .iter()
        .map(|h| {
            let s = (PI * alpha.multiple(h.k as i64).frac().to_f64()).sin().abs();
            TAU * h.k as f64 * h.amplitude() / s
        })
        .sum()
}

/// `10·max(sup q_{n+1}/q_n)` over both expansions (examined depth).
fn a0(alpha: &Frequency, beta: &Frequency) -> f64 {
    let ratio = |f: &Frequency| {
        let q = f.denominators_u64();
        q.windows(2).map(|w| w[1] as f64 / w[0] as f64).fold(1.0, f64::max)
    };
    10.0 * ratio(alpha).max(ratio(beta))
}

#[allow(clippy::too_many_arguments)]
pub fn derive_constants(
    f: &RoofFunction,
    g: &RoofFunction,
    alpha: &Frequency,
    beta: &Frequency,
    eps: f64,
    horizon_n: u64,
    mode: Mode,
    branch: Branch,
    c_override: Option<f64>,
) -> Result<ProofConstants> {
    let (af, ag) = (f.jump(), g.jump());
    if !(af > 0.0 && ag > 0.0) {
        return Err(Error::InvalidArgument(format!("jumps must be positive after normalization, got {af}, {ag}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0,1), got {eps}")));
    }
    let mut warnings = Vec::new();
    let xi = g.mean() / f.mean();
    let big_delta = 1000.0 * [xi, af / ag, ag / af, 1.0 / af, 1.0 / ag].into_iter().fold(f64::MIN, f64::max);
    let mut numer = [af, ag, (af - ag).abs(), xi, 1.0 / xi].into_iter().fold(f64::MAX, f64::min);
    let a0 = (branch == Branch::Bounded).then(|| a0(alpha, beta));
    if let Some(a0) = a0 {
        numer = numer.min(1.0 / a0);
    }
    let c_paper = numer / (100.0 * big_delta * big_delta);
    let c = match mode {
        Mode::PaperFaithful => c_paper,
        Mode::DeskScale => {
            let c = c_override.unwrap_or(DESK_C);
            warnings.push(format!("desk-scale c = {c} (closed formula gives {c_paper:e})"));
            c
        }
    };

    let horizon = alpha.cf().depth().min(beta.cf().depth()).min(60);
    let kinds = [alpha, beta].map(|fr| classify_type(fr.cf(), horizon, 10).map(|v| v.kind));
    let any_unbounded = kinds.iter().any(|k| matches!(k, Ok(TypeKind::UnboundedEvidence(_))));
    match (branch, any_unbounded) {
        (Branch::Bounded, true) => warnings.push("bounded branch requested but a digit exceeds 10".into()),
        (Branch::Unbounded, false) => warnings.push("unbounded branch requested but no digit exceeds 10".into()),
        _ => {}
    }

    let (g_min, g_max) = (g.inf(), g.sup());
    let eps_cap = [g_min / 4.0, ag / 72.0, g_max * ag / 72.0, c].into_iter().fold(f64::MAX, f64::min);
    if eps >= eps_cap {
        match mode {
            Mode::PaperFaithful => return Err(Error::EpsilonTooLarge { eps, cap: eps_cap }),
            Mode::DeskScale => {
                warn!("epsilon {eps} above the cap {eps_cap}");
                warnings.push(format!("epsilon {eps} above the cap {eps_cap:e}"));
            }
        }
    }

    let smooth_sum_bound = smooth_derivative_sum_bound(f, alpha).max(smooth_derivative_sum_bound(g, beta));
    let eps3 = eps.powi(3);
    let delta_eps = if smooth_sum_bound > 0.0 { eps3 / (20.0 * smooth_sum_bound) } else { f64::INFINITY };

    let (n0, q_n0) = if g_min > 0.0 {
        let n = horizon_n as f64;
        let need = (12.0 * n / g_min).max(n * n / (g_min * g_min));
        let q = beta.denominators_u64();
        match q.iter().position(|&v| v as f64 > need) {
            Some(i) => (Some(i), Some(q[i])),
            None => {
                warnings.push(format!("no denominator of beta exceeds {need}"));
                (None, None)
            }
        }
    } else {
        warnings.push("g has non-positive infimum; n0 undefined".into());
        (None, None)
    };
    let mut delta = delta_eps.min(eps / 10.0).min(eps / (20.0 * ag));
    if let Some(q) = q_n0 {
        delta = delta.min(12.0 * eps / (ag * q as f64));
    }

    Ok(ProofConstants {
        epsilon: eps,
        xi,
        big_delta,
        c,
        c_paper,
        kappa: c * eps3,
        delta,
        delta_eps,
        smooth_sum_bound,
        n0,
        q_n0,
        shift_cap: 10.0 * af.max(ag),
        separation: c * c,
        eps_cap,
        mode,
        branch,
        a0,
        horizon_n,
        jumps: (af, ag),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roof::TrigPoly;
    use crate::special_flow::FlowParams;
    use rand::Rng;

    fn unit_jumps() -> (RoofFunction, RoofFunction) {
        (RoofFunction::linear(1.0, 0.0).unwrap(), RoofFunction::linear(2.0, 0.0).unwrap())
    }

    #[test]
    fn closed_formula_example() {
        let (f, g) = unit_jumps();
        let a = Frequency::from_digits(&[1, 2, 1, 4, 1, 8, 1, 16]).unwrap();
        let b = Frequency::golden();
        // inf g = 0 leaves no admissible ε in paper mode, so read the formula off desk mode
        let strict = derive_constants(&f, &g, &a, &b, 1e-12, 10, Mode::PaperFaithful, Branch::Unbounded, None);
        assert!(matches!(strict, Err(Error::EpsilonTooLarge { .. })));
        let k = derive_constants(&f, &g, &a, &b, 1e-3, 10, Mode::DeskScale, Branch::Unbounded, None).unwrap();
        assert_eq!(k.xi, 2.0);
        assert_eq!(k.big_delta, 2000.0);
        assert!((k.c_paper - 1.25e-9).abs() < 1e-24);
        assert!(k.n0.is_none());
    }

    #[test]
    fn desk_scale_example() {
        let (f, g) = unit_jumps();
        let a = Frequency::from_digits(&[1, 2, 1, 4, 1, 8, 1, 16]).unwrap();
        let k = derive_constants(&f, &g, &a, &Frequency::golden(), 0.1, 10, Mode::DeskScale, Branch::Unbounded, Some(0.05))
            .unwrap();
        assert!((k.kappa - 5e-5).abs() < 1e-18);
        assert!(k.c_paper < k.c);
        assert!(k.in_p(1.0, 2.0));
        assert!(!k.in_p(1.0, 1.0 + 1e-4));
        assert!(!k.in_p(0.0, 25.0));
    }

    #[test]
    fn epsilon_cap_enforced_in_paper_mode() {
        let f = RoofFunction::linear(1.0, 1.0).unwrap();
        let g = RoofFunction::linear(2.0, 1.0).unwrap();
        let a = Frequency::golden();
        let r = derive_constants(&f, &g, &a, &a, 0.05, 10, Mode::PaperFaithful, Branch::Bounded, None);
        assert!(matches!(r, Err(Error::EpsilonTooLarge { .. })));
        let k = derive_constants(&f, &g, &a, &a, 0.05, 10, Mode::DeskScale, Branch::Bounded, None).unwrap();
        assert!(k.a0.unwrap() >= 20.0);
        assert!(k.warnings.iter().any(|w| w.contains("cap")));
    }

    #[test]
    fn smooth_bound_dominates_sampled_sums() {
        let g = RoofFunction::new(2.0, TrigPoly::cos(1, 0.1).with(2, 0.05, 0.02).plus_constant(1.0)).unwrap();
        let beta = Frequency::golden();
        let bound = smooth_derivative_sum_bound(&g, &beta);
        let d = RoofFunction::new(0.0, g.smooth().derivative()).unwrap();
        let mut rng = crate::roof::derived_rng(3, 0);
        for _ in 0..200 {
            let x: f64 = rng.gen();
            let n = rng.gen_range(1..5000);
            assert!(d.birkhoff_sum(&beta, x, n).abs() <= bound + 1e-9);
        }
        let _ = FlowParams::new(beta, g).unwrap();
    }

    #[test]
    fn p_is_swap_symmetric() {
        let (f, g) = unit_jumps();
        let a = Frequency::golden();
        let k = derive_constants(&f, &g, &a, &a, 0.05, 10, Mode::DeskScale, Branch::Bounded, None).unwrap();
        for (p, q) in [(0.3, -1.2), (1.0, 1.001), (19.9, 0.0), (0.0, 20.5)] {
            assert_eq!(k.in_p(p, q), k.in_p(q, p));
        }
    }
}
