//! The sets `Ẽ_k ⊂ 𝕋` (lifted to `E_k`) and `Z = Z₁ ∩ Z₂` of the argument.

use rand::Rng;

use crate::circle::{circle_dist, frac};
use crate::diophantine::Frequency;
use crate::error::{Error, Result};
use crate::numeric::Dd;
use crate::roof::RoofFunction;

use super::constants::{Branch, Mode, ProofConstants};

/// Longest admissible range of rotation indices for a membership scan.
const MAX_INDEX_RANGE: u64 = 10_000_000;

/// Base arc and index range defining `Ẽ_k = ⋃_i R^{−i}(lo, hi]`.
#[derive(Clone, Debug)]
pub struct EkSet {
    alpha: Frequency,
    roof: RoofFunction,
    pub branch: Branch,
    pub mode: Mode,
    pub scale_index: usize,
    pub q: u64,
    pub c: f64,
    pub lo: f64,
    pub hi: f64,
    pub i_min: u64,
    pub i_max: u64,
}

/// Arc and index range at scale `n`, or the reason it is unavailable.
fn geometry(alpha: &Frequency, c: f64, n: usize, branch: Branch, mode: Mode) -> Result<(f64, f64, u64, u64)> {
    let depth_err = || Error::InsufficientDepth { needed: format!("q_{}", n + 1), depth: alpha.cf().depth() };
    let q = alpha.q(n).ok_or_else(depth_err)? as f64;
    let top = (c * c * q).floor();
    let unavailable = |why: String| Error::ScaleUnavailable(n, why);
    let (lo, hi) = match (branch, mode) {
        (Branch::Bounded, _) => (c * c / q, 2.0 * c * c / q),
        (Branch::Unbounded, Mode::PaperFaithful) => {
            let next = alpha.q(n + 1).ok_or_else(depth_err)? as f64;
            if c / q <= 2.0 / next {
                return Err(unavailable(format!("c/q = {:e} not above 2/q_next = {:e}", c / q, 2.0 / next)));
            }
            (2.0 / next, c * c / q)
        }
        (Branch::Unbounded, Mode::DeskScale) => {
            // both the forward hit at i and the backward hit at q − i
            let err = alpha.convergent_error(n).ok_or_else(depth_err)?;
            (err.max(0.0), (c / q).min(c / q + err))
        }
    };
    if hi <= lo {
        return Err(unavailable(format!("empty base arc ({lo:e}, {hi:e}]")));
    }
    if top < n as f64 {
        return Err(unavailable(format!("index range [{n}, {top}] is empty")));
    }
    if top - n as f64 > MAX_INDEX_RANGE as f64 {
        return Err(unavailable(format!("index range up to {top} too long to scan")));
    }
    Ok((lo, hi, n as u64, top as u64))
}

impl EkSet {
    pub fn new(alpha: &Frequency, f: &RoofFunction, scale_index: usize, constants: &ProofConstants) -> Result<Self> {
        let (lo, hi, i_min, i_max) = geometry(alpha, constants.c, scale_index, constants.branch, constants.mode)?;
        Ok(EkSet {
            alpha: alpha.clone(),
            roof: f.clone(),
            branch: constants.branch,
            mode: constants.mode,
            scale_index,
            q: alpha.q(scale_index).unwrap_or(0),
            c: constants.c,
            lo,
            hi,
            i_min,
            i_max,
        })
    }

    /// Smallest admissible scale whose denominator is at least `min_q`.
    /// Unbounded branch: the index must also satisfy the arc precondition;
    /// bounded branch: `c²q_k ≥ 2k`, so the index range covers half of `c²q_k`.
    pub fn select_scale(alpha: &Frequency, constants: &ProofConstants, min_q: u64) -> Result<usize> {
        let qs = alpha.denominators_u64();
        let c = constants.c;
        for (n, &q) in qs.iter().enumerate().skip(1) {
            if q < min_q {
                continue;
            }
            let ok = match constants.branch {
                Branch::Bounded => c * c * q as f64 >= 2.0 * n as f64,
                Branch::Unbounded => geometry(alpha, c, n, constants.branch, constants.mode).is_ok(),
            };
            if ok && geometry(alpha, c, n, constants.branch, constants.mode).is_ok() {
                return Ok(n);
            }
        }
        Err(Error::ScaleUnavailable(qs.len(), format!("no admissible scale with q ≥ {min_q} within the expansion")))
    }

    pub fn alpha(&self) -> &Frequency {
        &self.alpha
    }

    /// `x′ = x − c/q_k`.
    pub fn partner(&self, x: f64) -> f64 {
        frac(x - self.c / self.q as f64)
    }

    pub fn arc_length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn index_count(&self) -> u64 {
        self.i_max - self.i_min + 1
    }

    /// Witness `i` with `{x + iα} ∈ (lo, hi]`.
    pub fn witness(&self, x: f64) -> Option<u64> {
        let step = self.alpha.alpha();
        let mut pos = (Dd::from_f64(x) + self.alpha.multiple(self.i_min as i64).frac()).frac();
        for i in self.i_min..=self.i_max {
            let u = pos.to_f64();
            if u > self.lo && u <= self.hi {
                return Some(i);
            }
            pos = (pos + step).frac();
        }
        None
    }

    pub fn contains_base(&self, x: f64) -> bool {
        self.witness(x).is_some()
    }

    /// Membership in `E_k`: base in `Ẽ_k` and the height fits both fibers.
    pub fn contains(&self, x: f64, s: f64) -> bool {
        self.contains_base(x) && s >= 0.0 && s < self.roof.eval(x).min(self.roof.eval(self.partner(x)))
    }

    /// Uniform draw from `E_k` (the arcs `R^{−i}(lo, hi]` are disjoint).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let top = self.roof.sup();
        loop {
            let i = rng.gen_range(self.i_min..=self.i_max);
            let u = self.hi - rng.gen::<f64>() * self.arc_length();
            let x = (Dd::from_f64(u) - self.alpha.multiple(i as i64).frac()).frac().to_unit_f64();
            let s = rng.gen::<f64>() * top;
            if self.contains(x, s) {
                return (x, s);
            }
        }
    }

    /// Length of `Ẽ_k` from the merged arcs.
    pub fn exact_measure(&self) -> f64 {
        let len = self.arc_length();
        let mut arcs: Vec<f64> = (self.i_min..=self.i_max)
            .map(|i| (Dd::from_f64(self.lo) - self.alpha.multiple(i as i64).frac()).frac().to_f64())
            .collect();
        arcs.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let mut reach = f64::NEG_INFINITY;
        for &a in &arcs {
            let start = a.max(reach);
            if a + len > start {
                total += a + len - start;
            }
            reach = reach.max(a + len);
        }
        // wrap overlap between the last and the first arc
        if let (Some(&first), true) = (arcs.first(), reach > 1.0) {
            total -= (reach - 1.0 - first).clamp(0.0, len);
        }
        total
    }

    /// Monte-Carlo estimate of `λ(Ẽ_k)` with its standard error, drawing
    /// from arcs three times as wide and weighting by cover multiplicity.
    pub fn empirical_measure<R: Rng>(&self, samples: usize, rng: &mut R) -> (f64, f64) {
        let len = self.arc_length();
        let cover = 3.0 * len;
        let starts: Vec<f64> = (self.i_min..=self.i_max)
            .map(|i| (Dd::from_f64(self.lo - len) - self.alpha.multiple(i as i64).frac()).frac().to_f64())
            .collect();
        let mut values = Vec::with_capacity(samples);
        for _ in 0..samples {
            let j = rng.gen_range(0..starts.len());
            let x = frac(starts[j] + rng.gen::<f64>() * cover);
            let hit = self.contains_base(x);
            let mult = starts.iter().filter(|&&a| frac(x - a) < cover).count().max(1);
            values.push(if hit { 1.0 / mult as f64 } else { 0.0 });
        }
        let total = cover * starts.len() as f64;
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (total * mean, total * (var / n).sqrt())
    }
}

/// One level `B_n = ⋃_{|i| ≤ K} R^i[−ρ, ρ]`, `ρ = 1/(6q_n)`, `K = [√q_n]`.
#[derive(Clone, Debug)]
struct Level {
    radius: f64,
    /// Sorted `{iβ}` for `|i| ≤ K`.
    centers: Vec<f64>,
}

impl Level {
    fn contains(&self, y: f64) -> bool {
        let c = &self.centers;
        let i = c.partition_point(|&v| v < y);
        let near = [i.checked_sub(1).map(|j| c[j]).unwrap_or(c[c.len() - 1]), c[i % c.len()]];
        near.iter().any(|&v| circle_dist(v, y) <= self.radius)
    }
}

/// `Z₁ ∩ Z₂` with `Z₂` truncated at `n_max`.
#[derive(Clone, Debug)]
pub struct ZSet {
    beta: Frequency,
    roof: RoofFunction,
    pub delta: f64,
    pub m: usize,
    pub n_max: usize,
    /// Analytic bound on `Σ_{n > n_max} λ(B_n)`.
    pub tail_bound: f64,
    /// Bound on `Σ_{m ≤ n ≤ n_max} λ(B_n)`.
    pub union_bound: f64,
    levels: Vec<Level>,
}

/// `Σ_{n > N} 1/√q_n ≤ (1/√q_{N+1} + 1/√q_{N+2})/(1 − 2^{−1/2})`, from `q_{n+2} ≥ 2q_n`.
fn tail_bound(qs: &[u64], n: usize) -> Option<f64> {
    let (a, b) = (*qs.get(n + 1)? as f64, *qs.get(n + 2)? as f64);
    Some((a.sqrt().recip() + b.sqrt().recip()) / (1.0 - std::f64::consts::FRAC_1_SQRT_2))
}

fn level_bound(q: u64) -> f64 {
    let k = (q as f64).sqrt().floor();
    ((2.0 * k + 1.0) / (3.0 * q as f64)).min(1.0)
}

impl ZSet {
    pub fn new(beta: &Frequency, g: &RoofFunction, constants: &ProofConstants) -> Result<Self> {
        let qs = beta.denominators_u64();
        let budget = constants.epsilon / (4.0 * g.sup());
        let n_max = (1..qs.len())
            .find(|&n| tail_bound(&qs, n).is_some_and(|t| t <= budget / 10.0))
            .ok_or_else(|| Error::InsufficientDepth { needed: "Z tail below budget".into(), depth: qs.len() })?;
        let tail = tail_bound(&qs, n_max).unwrap_or(0.0);
        let mut m = n_max + 1;
        let mut acc = tail;
        while m > 1 && acc + level_bound(qs[m - 1]) < budget {
            m -= 1;
            acc += level_bound(qs[m]);
        }
        let levels = (m..=n_max)
            .map(|n| {
                let q = qs[n];
                let k = (q as f64).sqrt().floor() as i64;
                let mut centers: Vec<f64> = (-k..=k).map(|i| beta.multiple(i).frac().to_unit_f64()).collect();
                centers.sort_by(f64::total_cmp);
                Level { radius: 1.0 / (6.0 * q as f64), centers }
            })
            .collect();
        Ok(ZSet {
            beta: beta.clone(),
            roof: g.clone(),
            delta: constants.delta,
            m,
            n_max,
            tail_bound: tail,
            union_bound: acc - tail,
            levels,
        })
    }

    pub fn in_z1(&self, y: f64, r: f64) -> bool {
        self.delta < r && r < self.roof.eval(y) - self.delta
    }

    pub fn in_z2(&self, y: f64) -> bool {
        !self.levels.iter().any(|l| l.contains(y))
    }

    pub fn contains(&self, y: f64, r: f64) -> bool {
        self.in_z1(y, r) && self.in_z2(y)
    }

    /// Uniform draw from `𝕋^g ∩ Z`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let top = self.roof.sup();
        loop {
            let y: f64 = rng.gen();
            let r = rng.gen::<f64>() * top;
            if r < self.roof.eval(y) && self.contains(y, r) {
                return (y, r);
            }
        }
    }

    /// `(y, r), (y′, r′) ∈ Z` with `‖y − y′‖ + |r − r′| ≤ δ`.
    pub fn sample_pair<R: Rng>(&self, rng: &mut R) -> ((f64, f64), (f64, f64)) {
        loop {
            let (y, r) = self.sample(rng);
            let share: f64 = rng.gen();
            let dy = share * self.delta * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let dr = (1.0 - share) * self.delta * rng.gen_range(-1.0..1.0);
            let (yp, rp) = (frac(y + dy), r + dr);
            if dy != 0.0 && self.contains(yp, rp) {
                return ((y, r), (yp, rp));
            }
        }
    }

    pub fn beta(&self) -> &Frequency {
        &self.beta
    }

    /// Monte-Carlo `λ^g(Z)/λ^g(𝕋^g)` with its standard error.
    pub fn empirical_fraction<R: Rng>(&self, samples: usize, rng: &mut R) -> (f64, f64) {
        let top = self.roof.sup();
        let (mut inside, mut total) = (0usize, 0usize);
        while total < samples {
            let y: f64 = rng.gen();
            let r = rng.gen::<f64>() * top;
            if r >= self.roof.eval(y) {
                continue;
            }
            total += 1;
            inside += self.contains(y, r) as usize;
        }
        let p = inside as f64 / total.max(1) as f64;
        (p, (p * (1.0 - p) / total.max(1) as f64).sqrt())
    }
}

/// Unique `n` with `1/(D q_{n+1}) ≤ d < 1/(D q_n)`.
pub fn bracket_index(distance: f64, beta: &Frequency, divisor: f64) -> Option<usize> {
    if !(distance > 0.0) {
        return None;
    }
    let qs = beta.denominators_u64();
    (0..qs.len().saturating_sub(1)).find(|&n| {
        let (a, b) = (1.0 / (divisor * qs[n + 1] as f64), 1.0 / (divisor * qs[n] as f64));
        a <= distance && distance < b
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::constants::derive_constants;
    use crate::roof::{derived_rng, TrigPoly};

    fn unbounded_alpha() -> Frequency {
        Frequency::from_digits(&[1, 2, 1, 4, 1, 8, 1, 16, 1, 32, 1, 64, 1, 128]).unwrap()
    }

    fn roofs() -> (RoofFunction, RoofFunction) {
        (
            RoofFunction::new(1.0, TrigPoly::sin(1, 0.1).plus_constant(1.0)).unwrap(),
            RoofFunction::new(2.0, TrigPoly::cos(1, 0.1).plus_constant(1.0)).unwrap(),
        )
    }

    fn constants(branch: Branch) -> (Frequency, Frequency, ProofConstants) {
        let (f, g) = roofs();
        let alpha = if branch == Branch::Unbounded { unbounded_alpha() } else { Frequency::golden() };
        let beta = Frequency::golden();
        let k = derive_constants(&f, &g, &alpha, &beta, 0.05, 50, Mode::DeskScale, branch, Some(0.05)).unwrap();
        (alpha, beta, k)
    }

    #[test]
    fn unbounded_scale_and_hits() {
        let (alpha, _, k) = constants(Branch::Unbounded);
        let (f, _) = roofs();
        let n = EkSet::select_scale(&alpha, &k, 1000).unwrap();
        let e = EkSet::new(&alpha, &f, n, &k).unwrap();
        assert!((1000..=10_000).contains(&e.q), "{}", e.q);
        let mid = 0.5 * (e.lo + e.hi);
        let x = (Dd::from_f64(mid) - alpha.multiple(e.i_min as i64).frac()).frac().to_unit_f64();
        assert_eq!(e.witness(x), Some(e.i_min));
        let mut rng = derived_rng(1, 0);
        for _ in 0..300 {
            let (x, s) = e.sample(&mut rng);
            assert!(e.contains(x, s));
            let xp = e.partner(x);
            let i = crate::trichotomy::first_hit_index(x, xp, &alpha, e.i_max).unwrap().unwrap();
            assert!((e.i_min..=e.i_max).contains(&i));
            let back = crate::trichotomy::first_hit_index_backward(x, xp, &alpha, e.q).unwrap();
            assert_eq!(back, Some(e.q - i));
        }
    }

    #[test]
    fn measure_meets_lower_bound() {
        for branch in [Branch::Unbounded, Branch::Bounded] {
            let (alpha, _, k) = constants(branch);
            let (f, _) = roofs();
            let n = EkSet::select_scale(&alpha, &k, 1000).unwrap();
            let e = EkSet::new(&alpha, &f, n, &k).unwrap();
            let exact = e.exact_measure();
            let expect = e.arc_length() * e.index_count() as f64;
            assert!((exact - expect).abs() < 1e-12 * expect.max(1.0), "{exact} {expect}");
            let (est, se) = e.empirical_measure(20_000, &mut derived_rng(2, 0));
            assert!((est - exact).abs() <= 4.0 * se + 1e-15, "{est} ± {se} vs {exact}");
            assert!(est + 3.0 * se >= k.c.powi(4) / 2.0, "{branch}: {est} < c⁴/2");
        }
    }

    #[test]
    fn paper_arc_unavailable_at_desk_scale() {
        let (alpha, _, mut k) = constants(Branch::Unbounded);
        let (f, _) = roofs();
        k.mode = Mode::PaperFaithful;
        assert!(matches!(EkSet::new(&alpha, &f, 9, &k), Err(Error::ScaleUnavailable(..))));
    }

    #[test]
    fn z_membership_examples() {
        let (_, beta, k) = constants(Branch::Unbounded);
        let (_, g) = roofs();
        let z = ZSet::new(&beta, &g, &k).unwrap();
        assert!(!z.in_z1(0.4, k.delta / 2.0));
        assert!(!z.in_z2(1e-9));
        assert!(z.union_bound + z.tail_bound < k.epsilon / (4.0 * g.sup()));
        let (frac_in, se) = z.empirical_fraction(100_000, &mut derived_rng(5, 0));
        assert!(frac_in + 3.0 * se >= 1.0 - k.epsilon, "{frac_in}");
        let mut rng = derived_rng(6, 0);
        for _ in 0..200 {
            let ((y, r), (yp, rp)) = z.sample_pair(&mut rng);
            assert!(z.contains(y, r) && z.contains(yp, rp));
            assert!(circle_dist(y, yp) + (r - rp).abs() <= k.delta * (1.0 + 1e-12));
            assert!(bracket_index(circle_dist(y, yp), &beta, 6.0).is_some());
        }
    }

    #[test]
    fn bracket_examples() {
        let g = Frequency::golden();
        // q = 1,1,2,3,5,8: 1/48 ≤ 0.03 < 1/30 picks n = 4 (q_4 = 5, q_5 = 8)
        assert_eq!(bracket_index(0.03, &g, 6.0), Some(4));
        assert_eq!(bracket_index(0.0, &g, 6.0), None);
        assert_eq!(bracket_index(0.4, &g, 6.0), None);
    }
}
