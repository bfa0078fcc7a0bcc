//! Case analysis producing candidate windows `[M′, M′ + L′]` with shifts
//! `(p, q)`, and brute-force verification of the two residual estimates.

use std::fmt;

use crate::circle::{circle_dist, signed_diff};
use crate::error::{Error, Result};
use crate::numeric::{Dd, NeumaierSum};
use crate::roof::RoofFunction;
use crate::special_flow::FlowParams;
use crate::trichotomy::{classify, first_hit_index, TrichotomyVerdict};

use super::constants::{Branch, ProofConstants};
use super::sets::bracket_index;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// Both flows together with their time reversals.
#[derive(Clone, Debug)]
pub struct FlowPair {
    pub f: FlowParams,
    pub g: FlowParams,
    rev_f: FlowParams,
    rev_g: FlowParams,
}

impl FlowPair {
    pub fn new(f: FlowParams, g: FlowParams) -> Result<Self> {
        // T_{−t} is the special flow over R_{−α} under the same roof, read
        // through (x, s) ↦ (x, f(x) − s)
        let rev_f = FlowParams::new(f.alpha().reflect()?, f.roof().clone())?;
        let rev_g = FlowParams::new(g.alpha().reflect()?, g.roof().clone())?;
        Ok(FlowPair { f, g, rev_f, rev_g })
    }

    pub fn oriented(&self, dir: Direction) -> (&FlowParams, &FlowParams) {
        match dir {
            Direction::Forward => (&self.f, &self.g),
            Direction::Backward => (&self.rev_f, &self.rev_g),
        }
    }
}

/// `(x, s), (x′, s′)` in the first flow and `(y, r), (y′, r′)` in the second.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchSample {
    pub x: f64,
    pub x_prime: f64,
    pub s: f64,
    pub s_prime: f64,
    pub y: f64,
    pub y_prime: f64,
    pub r: f64,
    pub r_prime: f64,
    /// Scale index `n_k` (or `k`).
    pub k: usize,
    pub q_k: u64,
}

fn reflect_height(roof: &RoofFunction, x: f64, s: f64) -> f64 {
    let top = roof.eval(x);
    (top - s).clamp(0.0, top * (1.0 - f64::EPSILON))
}

impl MatchSample {
    /// The same sample in the coordinates of the reversed flows.
    pub fn reversed(&self, pair: &FlowPair) -> MatchSample {
        let (f, g) = (pair.f.roof(), pair.g.roof());
        MatchSample {
            s: reflect_height(f, self.x, self.s),
            s_prime: reflect_height(f, self.x_prime, self.s_prime),
            r: reflect_height(g, self.y, self.r),
            r_prime: reflect_height(g, self.y_prime, self.r_prime),
            ..*self
        }
    }

    pub fn oriented(&self, pair: &FlowPair, dir: Direction) -> MatchSample {
        match dir {
            Direction::Forward => *self,
            Direction::Backward => self.reversed(pair),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    EqualBases,
    Case1Sub1,
    Case1Sub2,
    /// Case 1 run on the reversed flows.
    Case2Sub1,
    Case2Sub2,
    Case3Sub1,
    Case3Sub2,
    Case3Sub3,
    BoundedA,
    BoundedB,
    BoundedC,
}

impl CaseLabel {
    /// Labels whose guarantee is that one of two candidates lies in `P`.
    pub fn is_two_window(self) -> bool {
        matches!(
            self,
            CaseLabel::Case3Sub1
                | CaseLabel::Case3Sub2
                | CaseLabel::Case3Sub3
                | CaseLabel::BoundedA
                | CaseLabel::BoundedB
                | CaseLabel::BoundedC
        )
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseLabel::EqualBases => "y=y'",
            CaseLabel::Case1Sub1 => "case1/sub1",
            CaseLabel::Case1Sub2 => "case1/sub2",
            CaseLabel::Case2Sub1 => "case2/sub1",
            CaseLabel::Case2Sub2 => "case2/sub2",
            CaseLabel::Case3Sub1 => "case3/sub1",
            CaseLabel::Case3Sub2 => "case3/sub2",
            CaseLabel::Case3Sub3 => "case3/sub3",
            CaseLabel::BoundedA => "bounded/A",
            CaseLabel::BoundedB => "bounded/B",
            CaseLabel::BoundedC => "bounded/C",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchingWindow {
    pub start: u64,
    pub len: u64,
    pub p: f64,
    pub q: f64,
    pub label: CaseLabel,
    /// Position among the candidates of its subcase (1 or 2).
    pub slot: u8,
    pub in_p: bool,
}

impl MatchingWindow {
    pub fn end(&self) -> u64 {
        self.start + self.len
    }

    pub fn ratio(&self) -> f64 {
        self.len as f64 / self.start as f64
    }
}

/// Output of the decision tree for one sample and direction.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowPlan {
    pub label: CaseLabel,
    pub direction: Direction,
    /// Bracket index of `‖y − y′‖`.
    pub n: Option<usize>,
    /// First crossing index `ℓ` (or `m`) for `x, x′`.
    pub ell: u64,
    /// First crossing index for `y, y′` when one was needed.
    pub g_hit: Option<u64>,
    pub verdict: Option<TrichotomyVerdict>,
    pub candidates: Vec<MatchingWindow>,
}

impl WindowPlan {
    pub fn any_in_p(&self) -> bool {
        self.candidates.iter().any(|w| w.in_p)
    }
}

/// Signed data the formulas are written in.
struct Geometry<'a> {
    k: &'a ProofConstants,
    af: f64,
    ag: f64,
    dx: f64,
    dy: f64,
    ell: u64,
}

impl Geometry<'_> {
    fn gidx(&self, n: f64) -> f64 {
        (n / self.k.xi).floor()
    }

    fn window(&self, start: f64, p: f64, q: f64, label: CaseLabel, slot: u8) -> Option<MatchingWindow> {
        if !(start >= 1.0) || !start.is_finite() {
            return None;
        }
        let start = start as u64;
        let len = ((self.k.epsilon.powi(3) * start as f64).ceil() as u64).max(1);
        Some(MatchingWindow { start, len, p, q, label, slot, in_p: self.k.in_p(p, q) })
    }

    /// `p` after the crossing of `x, x′` at index `ℓ`.
    fn p_after(&self, at: f64) -> f64 {
        at * self.af * self.dx - self.af * self.dx.signum()
    }

    fn q_before(&self, g_index: f64) -> f64 {
        g_index * self.ag * self.dy
    }

    fn q_after(&self, g_index: f64) -> f64 {
        self.ag * (g_index * self.dy - self.dy.signum())
    }

    fn case1(&self, reversed: bool) -> Vec<MatchingWindow> {
        let (c, ell) = (self.k.c, self.ell as f64);
        let (l1, l2) = if reversed {
            (CaseLabel::Case2Sub1, CaseLabel::Case2Sub2)
        } else {
            (CaseLabel::Case1Sub1, CaseLabel::Case1Sub2)
        };
        if ell * self.ag * self.dy.abs() > 4.0 * c {
            let lp = (2.0 * c / (self.ag * self.dy.abs())).floor();
            self.window(lp, lp * self.af * self.dx, self.q_before(self.gidx(lp)), l1, 1).into_iter().collect()
        } else {
            self.window(ell + 1.0, self.p_after(ell), self.q_before(self.gidx(ell)), l2, 1).into_iter().collect()
        }
    }

    /// The three-way split on `k₀ = ξ·j₀` against `ℓ` shared by Case 3 and
    /// the bounded branch.
    fn split(&self, k0: f64, labels: [CaseLabel; 3]) -> Vec<MatchingWindow> {
        let (eps, xi, ell) = (self.k.epsilon, self.k.xi, self.ell as f64);
        let eps3 = eps.powi(3);
        let j0 = (k0 / xi).round();
        let mut out = Vec::new();
        if k0 <= (1.0 - eps) * ell {
            let t = (1.0 - eps3) * k0;
            out.extend(self.window(t.floor(), t * self.af * self.dx, self.q_before(j0), labels[0], 1));
            // first index whose bracketed g-index is past the hit
            let t = k0 + xi;
            out.extend(self.window(t.ceil(), t * self.af * self.dx, self.q_after(j0), labels[0], 2));
        } else if k0 >= (1.0 + eps) * ell {
            let m1 = ell + 1.0;
            out.extend(self.window(m1, self.p_after(m1), self.q_before(self.gidx(m1)), labels[1], 1));
            let m2 = (ell / 2.0).floor();
            out.extend(self.window(m2, m2 * self.af * self.dx, self.q_before(self.gidx(m2)), labels[1], 2));
        } else {
            let m1 = (1.0 - eps) * k0.min(ell);
            out.extend(self.window(m1.floor(), m1 * self.af * self.dx, self.q_before(self.gidx(m1)), labels[2], 1));
            let m2 = (1.0 + eps) * k0.max(ell);
            out.extend(self.window(m2.ceil(), self.p_after(m2), self.q_after(self.gidx(m2)), labels[2], 2));
        }
        out
    }
}

/// Scan bound for the first crossing of `x, x′`.
fn f_scan_bound(q_k: u64) -> u64 {
    2 * q_k + 2
}

enum Decision {
    Plan(WindowPlan),
    /// Only clause (ii) holds: continue on the reversed flows.
    Reverse,
}

/// Runs the decision tree of the branch on an already oriented sample.
fn decide(
    sample: &MatchSample,
    constants: &ProofConstants,
    f: &FlowParams,
    g: &FlowParams,
    direction: Direction,
) -> Result<Decision> {
    let (alpha, beta) = (f.alpha(), g.alpha());
    let ell = first_hit_index(sample.x, sample.x_prime, alpha, f_scan_bound(sample.q_k))?
        .ok_or_else(|| Error::CaseFallthrough(format!("x, x' never separated by 0 within {}", f_scan_bound(sample.q_k))))?;
    let geo = Geometry {
        k: constants,
        af: f.roof().jump(),
        ag: g.roof().jump(),
        dx: signed_diff(sample.x, sample.x_prime),
        dy: signed_diff(sample.y, sample.y_prime),
        ell,
    };
    let mut plan = WindowPlan {
        label: CaseLabel::EqualBases,
        direction,
        n: None,
        ell,
        g_hit: None,
        verdict: None,
        candidates: Vec::new(),
    };

    if geo.dy == 0.0 {
        let qk = sample.q_k as f64;
        plan.candidates.extend(geo.window(qk, geo.p_after(qk), 0.0, CaseLabel::EqualBases, 1));
        return Ok(Decision::Plan(plan));
    }
    let d = geo.dy.abs();

    match constants.branch {
        Branch::Unbounded => {
            let n = bracket_index(d, beta, 6.0)
                .ok_or_else(|| Error::CaseFallthrough(format!("‖y − y'‖ = {d:e} outside every bracket")))?;
            let v = classify(sample.y, sample.y_prime, beta, n)?;
            plan.n = Some(n);
            if v.holds_i {
                plan.candidates = geo.case1(false);
                plan.label = plan.candidates.first().map_or(CaseLabel::Case1Sub2, |w| w.label);
            } else if v.holds_iii {
                let j0 = v.witness_iii.expect("clause (iii) carries its witness");
                plan.g_hit = Some(j0);
                plan.candidates =
                    geo.split(constants.xi * j0 as f64, [CaseLabel::Case3Sub1, CaseLabel::Case3Sub2, CaseLabel::Case3Sub3]);
                plan.label = plan.candidates.first().map_or(CaseLabel::Case3Sub2, |w| w.label);
            } else if v.holds_ii {
                return Ok(Decision::Reverse);
            } else {
                return Err(Error::CaseFallthrough(format!("no clause of the trichotomy at n = {n}")));
            }
            plan.verdict = Some(v);
        }
        Branch::Bounded => {
            let n = bracket_index(d, beta, 2.0);
            plan.n = n;
            let bound = match n.and_then(|n| Some((beta.q(n)?, beta.q(n + 1)?))) {
                Some((a, b)) => a + b,
                None => (4.0 / d).min(1e8) as u64,
            };
            let l0 = first_hit_index(sample.y, sample.y_prime, beta, bound)?;
            plan.g_hit = l0;
            let k0 = l0.map_or(f64::INFINITY, |l| constants.xi * l as f64);
            plan.candidates = geo.split(k0, [CaseLabel::BoundedA, CaseLabel::BoundedB, CaseLabel::BoundedC]);
            plan.label = plan.candidates.first().map_or(CaseLabel::BoundedB, |w| w.label);
        }
    }
    Ok(Decision::Plan(plan))
}

/// Decision tree in the given direction. In the unbounded branch, when only
/// clause (ii) holds the tree continues with Case 1 on the reversed flows.
pub fn find_window(
    sample: &MatchSample,
    constants: &ProofConstants,
    pair: &FlowPair,
    direction: Direction,
) -> Result<WindowPlan> {
    let (f, g) = pair.oriented(direction);
    let oriented = sample.oriented(pair, direction);
    match decide(&oriented, constants, f, g, direction)? {
        Decision::Plan(plan) => Ok(plan),
        Decision::Reverse => {
            let back = match direction {
                Direction::Forward => Direction::Backward,
                Direction::Backward => Direction::Forward,
            };
            let (f, g) = pair.oriented(back);
            let s = sample.oriented(pair, back);
            let ell = first_hit_index(s.x, s.x_prime, f.alpha(), f_scan_bound(s.q_k))?
                .ok_or_else(|| Error::CaseFallthrough("x, x' never separated on the reversed flow".into()))?;
            let dy = signed_diff(s.y, s.y_prime);
            let geo = Geometry {
                k: constants,
                af: f.roof().jump(),
                ag: g.roof().jump(),
                dx: signed_diff(s.x, s.x_prime),
                dy,
                ell,
            };
            let candidates = geo.case1(true);
            Ok(WindowPlan {
                label: candidates.first().map_or(CaseLabel::Case2Sub2, |w| w.label),
                direction: back,
                n: bracket_index(dy.abs(), g.alpha(), 6.0),
                ell,
                g_hit: None,
                verdict: None,
                candidates,
            })
        }
    }
}

/// Residual maxima of one window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowCheck {
    pub f_residual: f64,
    pub g_residual: f64,
    pub ratio_ok: bool,
    pub in_p: bool,
    pub pass: bool,
}

/// `D(n) = φ^{(n)}(a) − φ^{(n)}(b)` for `n` in `[lo, hi]`, summing termwise.
pub fn sum_differences(roof: &RoofFunction, alpha: Dd, a: f64, b: f64, lo: u64, hi: u64) -> Vec<f64> {
    let (mut pa, mut pb) = (Dd::from_f64(a), Dd::from_f64(b));
    let mut acc = NeumaierSum::new();
    let mut out = Vec::with_capacity((hi - lo + 1) as usize);
    for n in 0..=hi {
        if n >= lo {
            out.push(acc.value());
        }
        if n == hi {
            break;
        }
        acc.add(roof.eval(pa.to_unit_f64()) - roof.eval(pb.to_unit_f64()));
        pa = (pa + alpha).frac();
        pb = (pb + alpha).frac();
    }
    out
}

/// Brute-force residuals of (shf) and (shg) over `n ∈ [M′, M′ + L′]`.
pub fn verify_window(
    sample: &MatchSample,
    window: &MatchingWindow,
    f: &FlowParams,
    g: &FlowParams,
    constants: &ProofConstants,
) -> WindowCheck {
    let tol = constants.epsilon * constants.epsilon;
    let (lo, hi) = (window.start, window.end());
    let fd = sum_differences(f.roof(), f.alpha().alpha(), sample.x, sample.x_prime, lo, hi);
    let f_residual = fd.iter().map(|d| (d - window.p).abs()).fold(0.0, f64::max);
    let gi = |n: u64| (n as f64 / constants.xi).floor() as u64;
    let (glo, ghi) = (gi(lo), gi(hi));
    let g_residual = if sample.y == sample.y_prime {
        window.q.abs()
    } else {
        let gd = sum_differences(g.roof(), g.alpha().alpha(), sample.y, sample.y_prime, glo, ghi);
        (lo..=hi).map(|n| (gd[(gi(n) - glo) as usize] - window.q).abs()).fold(0.0, f64::max)
    };
    let ratio_ok = window.ratio() >= constants.epsilon.powi(3);
    let in_p = constants.in_p(window.p, window.q);
    WindowCheck { f_residual, g_residual, ratio_ok, in_p, pass: f_residual < tol && g_residual < tol && ratio_ok && in_p }
}

/// `‖x − x′‖`, for reports.
pub fn base_gap(sample: &MatchSample) -> (f64, f64) {
    (circle_dist(sample.x, sample.x_prime), circle_dist(sample.y, sample.y_prime))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::audit::{draw_sample, SampleMode};
    use crate::matching::lift::lift_to_continuous;
    use crate::matching::presets::Preset;

    fn plans(preset: Preset, trials: u64) -> Vec<(MatchSample, WindowPlan)> {
        let setup = preset.setup().unwrap();
        (0..trials)
            .map(|i| {
                let s = draw_sample(&setup, SampleMode::Proof, 17, i);
                let p = find_window(&s, &setup.constants, &setup.pair, Direction::Forward).unwrap();
                (s, p)
            })
            .collect()
    }

    #[test]
    fn equal_bases_window() {
        let setup = Preset::AcceptanceUnbounded.setup().unwrap();
        let mut s = draw_sample(&setup, SampleMode::Proof, 3, 0);
        s.y_prime = s.y;
        let plan = find_window(&s, &setup.constants, &setup.pair, Direction::Forward).unwrap();
        assert_eq!(plan.label, CaseLabel::EqualBases);
        let w = &plan.candidates[0];
        let af = setup.pair.f.roof().jump();
        assert_eq!(w.start, s.q_k);
        assert_eq!(w.q, 0.0);
        assert!((w.p.abs() - af).abs() <= setup.constants.c * af + 1e-12, "p = {}", w.p);
        let check = verify_window(&s, w, &setup.pair.f, &setup.pair.g, &setup.constants);
        assert_eq!(check.g_residual, 0.0);
        assert!(check.f_residual < setup.constants.epsilon.powi(2));
    }

    #[test]
    fn window_geometry_invariants() {
        for preset in [Preset::AcceptanceUnbounded, Preset::AcceptanceBounded] {
            let setup = preset.setup().unwrap();
            let eps3 = setup.constants.epsilon.powi(3);
            for (s, plan) in plans(preset, 49) {
                assert!(!plan.candidates.is_empty());
                assert_eq!(plan.candidates.len() == 2, plan.label.is_two_window());
                let dx = signed_diff(s.x, s.x_prime);
                for w in &plan.candidates {
                    assert_eq!(w.len, ((eps3 * w.start as f64).ceil() as u64).max(1));
                    assert!(w.ratio() >= eps3);
                    if w.end() < plan.ell {
                        // no crossing yet: the f-shift is linear in the index
                        let af = setup.pair.f.roof().jump();
                        assert!((w.p - w.start as f64 * af * dx).abs() <= af * dx.abs() * (1.0 + w.start as f64 * eps3) + 1e-12);
                    }
                    if w.label == CaseLabel::Case1Sub2 {
                        assert_eq!(w.start, plan.ell + 1);
                    }
                    if w.label == CaseLabel::Case1Sub1 {
                        assert!(w.start <= plan.ell);
                    }
                }
            }
        }
    }

    #[test]
    fn case3_second_window_is_past_the_hit() {
        let xi = Preset::AcceptanceUnbounded.setup().unwrap().constants.xi;
        let mut seen = 0;
        for (_, plan) in plans(Preset::AcceptanceUnbounded, 49) {
            if plan.label == CaseLabel::Case3Sub1 {
                let k0 = plan.g_hit.unwrap() as f64 * xi;
                assert!(plan.candidates[1].start as f64 >= k0);
                assert!((plan.candidates[0].start as f64) < k0);
                seen += 1;
            }
            if plan.label == CaseLabel::Case3Sub2 {
                // one window straddles ℓ, the other sits well before it
                assert!(plan.candidates.iter().any(|w| w.start > plan.ell));
                assert!(plan.candidates.iter().any(|w| w.end() < plan.ell));
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn perturbed_shift_fails() {
        let setup = Preset::AcceptanceUnbounded.setup().unwrap();
        let eps2 = setup.constants.epsilon.powi(2);
        let mut checked = 0;
        for (s, plan) in plans(Preset::AcceptanceUnbounded, 40) {
            for w in &plan.candidates {
                let ok = verify_window(&s, w, &setup.pair.f, &setup.pair.g, &setup.constants);
                if ok.pass {
                    let bad = MatchingWindow { p: w.p + 2.0 * eps2, ..w.clone() };
                    let check = verify_window(&s, &bad, &setup.pair.f, &setup.pair.g, &setup.constants);
                    assert!(!check.pass);
                    assert!(check.f_residual >= eps2);
                    checked += 1;
                }
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn degenerate_lift_passes() {
        let setup = Preset::AcceptanceUnbounded.setup().unwrap();
        let s = MatchSample { x: 0.3, x_prime: 0.3, s: 0.2, s_prime: 0.2, y: 0.6, y_prime: 0.6, r: 0.4, r_prime: 0.4, k: 0, q_k: 1 };
        let w = MatchingWindow { start: 2000, len: 1, p: 0.0, q: 0.0, label: CaseLabel::EqualBases, slot: 1, in_p: false };
        let l = lift_to_continuous(&s, &w, &setup.pair.f, &setup.pair.g, &setup.constants).unwrap();
        assert_eq!(l.max_distance_f, 0.0);
        assert_eq!(l.max_distance_g, 0.0);
        assert!(l.distance_ok && l.measure_ok, "{l:?}");
    }

    #[test]
    fn sum_differences_matches_birkhoff_sums() {
        let setup = Preset::AcceptanceBounded.setup().unwrap();
        let (f, a) = (setup.pair.f.roof(), setup.pair.f.alpha());
        let d = sum_differences(f, a.alpha(), 0.1, 0.35, 5, 40);
        for (i, v) in d.iter().enumerate() {
            let n = 5 + i as i64;
            assert!((v - (f.birkhoff_sum(a, 0.1, n) - f.birkhoff_sum(a, 0.35, n))).abs() < 1e-10);
        }
    }
}
