//! Roof functions `f(x) = A·{x} + f_ac(x)` with a trigonometric-polynomial
//! smooth part, their Birkhoff cocycles and the Denjoy–Koksma audit.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circle::frac;
use crate::diophantine::Frequency;
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Grid used for the certified infimum and supremum.
const CERT_GRID: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Harmonic {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

impl Harmonic {
    pub fn amplitude(&self) -> f64 {
        self.cos.hypot(self.sin)
    }
}

/// `c0 + Σ (a_k cos 2πkx + b_k sin 2πkx)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigPoly {
    pub c0: f64,
    pub harmonics: Vec<Harmonic>,
}

impl TrigPoly {
    pub fn constant(c0: f64) -> Self {
        TrigPoly { c0, harmonics: Vec::new() }
    }

    pub fn cos(k: u32, amp: f64) -> Self {
        TrigPoly::constant(0.0).with(k, amp, 0.0)
    }

    pub fn sin(k: u32, amp: f64) -> Self {
        TrigPoly::constant(0.0).with(k, 0.0, amp)
    }

    /// Adds `a cos 2πkx + b sin 2πkx` (merging with an existing harmonic).
    pub fn with(mut self, k: u32, cos: f64, sin: f64) -> Self {
        if k == 0 {
            self.c0 += cos;
            return self;
        }
        match self.harmonics.iter_mut().find(|h| h.k == k) {
            Some(h) => {
                h.cos += cos;
                h.sin += sin;
            }
            None => {
                self.harmonics.push(Harmonic { k, cos, sin });
                self.harmonics.sort_by_key(|h| h.k);
            }
        }
        self
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.c0 += c;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.c0;
        for h in &self.harmonics {
            let (s, c) = (TAU * h.k as f64 * x).sin_cos();
            acc += h.cos * c + h.sin * s;
        }
        acc
    }

    pub fn derivative(&self) -> TrigPoly {
        TrigPoly {
            c0: 0.0,
            harmonics: self
                .harmonics
                .iter()
                .map(|h| {
                    let w = TAU * h.k as f64;
                    Harmonic { k: h.k, cos: w * h.sin, sin: -w * h.cos }
                })
                .collect(),
        }
    }

    /// `Σ 2πk·amp_k`, bounding both the total variation and `sup |f'|`.
    pub fn variation_bound(&self) -> f64 {
        self.harmonics.iter().map(|h| TAU * h.k as f64 * h.amplitude()).sum()
    }

    /// `Σ amp_k`, bounding `sup |f − c0|`.
    pub fn oscillation_bound(&self) -> f64 {
        self.harmonics.iter().map(Harmonic::amplitude).sum()
    }

    /// `x ↦ p(1 − x)`.
    pub fn reflect(&self) -> TrigPoly {
        TrigPoly {
            c0: self.c0,
            harmonics: self.harmonics.iter().map(|h| Harmonic { sin: -h.sin, ..*h }).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> TrigPoly {
        TrigPoly {
            c0: a * self.c0,
            harmonics: self.harmonics.iter().map(|h| Harmonic { k: h.k, cos: a * h.cos, sin: a * h.sin }).collect(),
        }
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        out.c0 -= other.c0;
        for h in &other.harmonics {
            out = out.with(h.k, -h.cos, -h.sin);
        }
        out.harmonics.retain(|h| h.cos != 0.0 || h.sin != 0.0);
        out
    }

    pub fn max_harmonic(&self) -> u32 {
        self.harmonics.iter().map(|h| h.k).max().unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.c0.is_finite() && self.harmonics.iter().all(|h| h.cos.is_finite() && h.sin.is_finite())
    }
}

/// `f(x) = A·{x} + f_ac(x)` with cached integral, variation and certified bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct RoofFunction {
    jump: f64,
    smooth: TrigPoly,
    mean: f64,
    variation: f64,
    derivative_sup: f64,
    inf: f64,
    sup: f64,
}

impl RoofFunction {
    pub fn new(jump: f64, smooth: TrigPoly) -> Result<Self> {
        if !jump.is_finite() || !smooth.is_finite() {
            return Err(Error::NonfiniteVariation);
        }
        let derivative_sup = smooth.variation_bound();
        let variation = jump.abs() + derivative_sup;
        let mut roof = RoofFunction {
            jump,
            mean: jump / 2.0 + smooth.c0,
            smooth,
            variation,
            derivative_sup,
            inf: f64::NAN,
            sup: f64::NAN,
        };
        let (inf, sup) = roof.certify_bounds(CERT_GRID);
        roof.inf = inf;
        roof.sup = sup;
        Ok(roof)
    }

    /// Roof `A·{x} + c`.
    pub fn linear(jump: f64, c0: f64) -> Result<Self> {
        RoofFunction::new(jump, TrigPoly::constant(c0))
    }

    pub fn constant(c: f64) -> Result<Self> {
        RoofFunction::linear(0.0, c)
    }

    pub fn jump(&self) -> f64 {
        self.jump
    }

    pub fn smooth(&self) -> &TrigPoly {
        &self.smooth
    }

    /// `∫ f = A/2 + c0`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `|A| + Σ 2πk·amp_k`.
    pub fn variation_bound(&self) -> f64 {
        self.variation
    }

    pub fn derivative_sup(&self) -> f64 {
        self.derivative_sup
    }

    /// Certified lower bound for `f`.
    pub fn inf(&self) -> f64 {
        self.inf
    }

    /// Certified upper bound for `f`.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn is_positive(&self) -> bool {
        self.inf > 0.0
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.jump * frac(x) + self.smooth.eval(x)
    }

    #[inline]
    pub fn eval_smooth(&self, x: f64) -> f64 {
        self.smooth.eval(x)
    }

    fn certify_bounds(&self, grid: usize) -> (f64, f64) {
        let w = 1.0 / grid as f64;
        let lip = self.jump.abs() + self.derivative_sup;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..=grid {
            let x = j as f64 * w;
            // left limit at 1 instead of the value at 0
            let v = if j == grid { self.jump + self.smooth.eval(1.0) } else { self.eval(x) };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo - lip * w / 2.0, hi + lip * w / 2.0)
    }

    /// `f^{(n)}(x)` with `f^{(0)} = 0` and `f^{(−n)}(x) = −f^{(n)}(x − nα)`.
    pub fn birkhoff_sum(&self, alpha: &Frequency, x: f64, n: i64) -> f64 {
        match n {
            0 => 0.0,
            n if n > 0 => alpha.orbit(x).take(n as usize).map(|p| self.eval(p)).collect::<NeumaierSum>().value(),
            n => -self.birkhoff_sum(alpha, alpha.rotate(x, n), -n),
        }
    }

    /// Birkhoff sum in exact rational arithmetic for a rational rotation `p/q`.
    ///
    /// Only roofs whose smooth part is a constant are representable.
    pub fn birkhoff_sum_exact(&self, p: u64, q: u64, x: &BigRational, n: i64) -> Result<BigRational> {
        if !self.smooth.harmonics.is_empty() {
            return Err(Error::NotExactlyRepresentable);
        }
        let a = BigRational::from_float(self.jump).ok_or(Error::NotExactlyRepresentable)?;
        let c = BigRational::from_float(self.smooth.c0).ok_or(Error::NotExactlyRepresentable)?;
        let step = BigRational::new(BigInt::from(p), BigInt::from(q));
        let fr = |v: &BigRational| v - v.floor();
        let count = n.unsigned_abs();
        let mut start = fr(x);
        if n < 0 {
            start = fr(&(start - &step * BigInt::from(count)));
        }
        let mut acc = BigRational::zero();
        let mut pos = start;
        for _ in 0..count {
            acc += &a * &pos + &c;
            pos += &step;
            if pos >= BigRational::one() {
                pos -= BigRational::one();
            }
        }
        Ok(if n < 0 { -acc } else { acc })
    }
}

impl fmt::Display for RoofFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "jump={}; c0={}", self.jump, self.smooth.c0)?;
        for h in &self.smooth.harmonics {
            write!(f, "; k:{}={},{}", h.k, h.cos, h.sin)?;
        }
        Ok(())
    }
}

impl FromStr for RoofFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("roof {s:?}: {m}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| bad(&e.to_string()));
        let mut jump = None;
        let mut smooth = TrigPoly::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let key = key.trim();
            if key == "jump" {
                jump = Some(num(val)?);
            } else if key == "c0" {
                smooth.c0 += num(val)?;
            } else if let Some(k) = key.strip_prefix("k:") {
                let k: u32 = k.trim().parse().map_err(|_| bad("harmonic index"))?;
                let (c, sn) = val.split_once(',').ok_or_else(|| bad("expected cos,sin"))?;
                smooth = smooth.with(k, num(c)?, num(sn)?);
            } else {
                return Err(bad(&format!("unknown key {key:?}")));
            }
        }
        RoofFunction::new(jump.ok_or_else(|| bad("missing jump"))?, smooth)
    }
}

/// Per-index Denjoy–Koksma record.
#[derive(Clone, Debug, PartialEq)]
pub struct DkRecord {
    pub index: usize,
    pub q: u64,
    pub sup_deviation: f64,
}

/// Lemma-style linear bound check `|f^{(n)} − n·mean| ≤ ε|n|` for `n ≥ n_ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearBoundCheck {
    pub eps: f64,
    pub n_eps: u64,
    pub tested: usize,
    pub violations: Vec<(f64, i64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DkReport {
    pub records: Vec<DkRecord>,
    pub variation_bound: f64,
    pub samples: usize,
    pub linear_checks: Vec<LinearBoundCheck>,
}

impl DkReport {
    pub fn violations(&self) -> usize {
        self.records.iter().filter(|r| r.sup_deviation > self.variation_bound).count()
    }
}

fn sample_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 step so neighbouring indices give unrelated streams
    let mut z = seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derived per-item RNG, stable under parallel scheduling.
pub fn derived_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sample_seed(seed, index))
}

/// Sup over sampled `x` of `|f^{(Q_n)}(x) − Q_n·mean|` for classical
/// denominators `Q_n`, `n` in `indices`.
pub fn dk_audit(
    f: &RoofFunction,
    alpha: &Frequency,
    indices: std::ops::RangeInclusive<usize>,
    samples: usize,
    seed: u64,
    linear: &[(f64, u64)],
) -> Result<DkReport> {
    if !f.variation_bound().is_finite() {
        return Err(Error::NonfiniteVariation);
    }
    let qs: Vec<(usize, u64)> = indices
        .map(|n| {
            alpha.q(n).map(|q| (n, q)).ok_or_else(|| Error::InsufficientDepth {
                needed: format!("Q_{n}"),
                depth: alpha.cf().depth(),
            })
        })
        .collect::<Result<_>>()?;
    let q_max = qs.iter().map(|&(_, q)| q).max().unwrap_or(0) as usize;
    let mean = f.mean();
    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x: f64 = derived_rng(seed, i as u64).gen();
            let mut out = vec![0.0; qs.len()];
            let mut sum = NeumaierSum::new();
            let mut next = 0;
            let mut order: Vec<usize> = (0..qs.len()).collect();
            order.sort_by_key(|&j| qs[j].1);
            for (m, p) in alpha.orbit(x).take(q_max).enumerate() {
                sum.add(f.eval(p));
                while next < order.len() && qs[order[next]].1 as usize == m + 1 {
                    let q = qs[order[next]].1;
                    out[order[next]] = (sum.value() - q as f64 * mean).abs();
                    next += 1;
                }
            }
            out
        })
        .collect();
    let records = qs
        .iter()
        .enumerate()
        .map(|(j, &(index, q))| DkRecord {
            index,
            q,
            sup_deviation: per_sample.iter().map(|v| v[j]).fold(0.0, f64::max),
        })
        .collect();
    let linear_checks = linear
        .iter()
        .enumerate()
        .map(|(ci, &(eps, n_eps))| {
            let tested = samples.min(256);
            let violations: Vec<(f64, i64, f64)> = (0..tested)
                .into_par_iter()
                .filter_map(|i| {
                    let mut rng = derived_rng(seed ^ 0x5EED_0000 ^ ci as u64, i as u64);
                    let x: f64 = rng.gen();
                    let n = rng.gen_range(n_eps.max(1)..=4 * n_eps.max(1)) as i64;
                    let n = if rng.gen_bool(0.5) { n } else { -n };
                    let dev = (f.birkhoff_sum(alpha, x, n) - n as f64 * mean).abs();
                    (dev > eps * n.unsigned_abs() as f64).then_some((x, n, dev))
                })
                .collect();
            LinearBoundCheck { eps, n_eps, tested, violations }
        })
        .collect();
    Ok(DkReport { records, variation_bound: f.variation_bound(), samples, linear_checks })
}

/// Smallest `n_ε` such that no sampled start violates `|f^{(n)} − n·mean| ≤ εn`
/// for `n_ε ≤ n ≤ max_n`. Empirical, not minimal over all starts.
pub fn calibrate_n_eps(f: &RoofFunction, alpha: &Frequency, eps: f64, max_n: u64, samples: usize, seed: u64) -> u64 {
    let mean = f.mean();
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let x: f64 = derived_rng(seed, i as u64).gen();
            let mut sum = NeumaierSum::new();
            let mut last_bad = 0u64;
            for (m, p) in alpha.orbit(x).take(max_n as usize).enumerate() {
                sum.add(f.eval(p));
                let n = m as u64 + 1;
                if (sum.value() - n as f64 * mean).abs() > eps * n as f64 {
                    last_bad = n;
                }
            }
            last_bad + 1
        })
        .max()
        .unwrap_or(1)
}

/// Records the `x ↦ 1 − x` conjugation applied by [`normalize_positive_jump`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conjugation {
    Identity,
    Reflection,
}

impl Conjugation {
    /// Maps a base point of the original system to the normalized one (and back).
    pub fn map_point(self, x: f64) -> f64 {
        match self {
            Conjugation::Identity => x,
            Conjugation::Reflection => frac(1.0 - x),
        }
    }
}

/// Conjugates by `x ↦ 1 − x` when the jump is negative so that the returned
/// roof has a positive jump over the rotation by `1 − α`.
pub fn normalize_positive_jump(alpha: &Frequency, f: &RoofFunction) -> Result<(Frequency, RoofFunction, Conjugation)> {
    if f.jump() == 0.0 {
        return Err(Error::ZeroJump);
    }
    if f.jump() > 0.0 {
        return Ok((alpha.clone(), f.clone(), Conjugation::Identity));
    }
    let smooth = f.smooth().reflect().plus_constant(f.jump());
    let roof = RoofFunction::new(-f.jump(), smooth)?;
    Ok((alpha.reflect()?, roof, Conjugation::Reflection))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        assert_eq!(RoofFunction::linear(1.0, 0.0).unwrap().eval(0.25), 0.25);
        let f = RoofFunction::new(0.0, TrigPoly::cos(1, 0.1).plus_constant(1.0)).unwrap();
        assert!((f.eval(0.5) - 0.9).abs() < 1e-15);
        let f = RoofFunction::new(2.0, TrigPoly::sin(1, 0.3)).unwrap();
        assert!((f.eval(0.75) - 1.2).abs() < 1e-15);
        // {0} = 0
        let f = RoofFunction::new(5.0, TrigPoly::cos(1, 0.5)).unwrap();
        assert_eq!(f.eval(0.0), 0.5);
    }

    #[test]
    fn mean_and_bounds() {
        let f = RoofFunction::new(1.0, TrigPoly::sin(1, 0.1).plus_constant(1.0)).unwrap();
        assert_eq!(f.mean(), 1.5);
        assert!((f.variation_bound() - (1.0 + TAU * 0.1)).abs() < 1e-15);
        // minimum 1 at x = 0
        assert!(f.inf() <= 1.0 && f.inf() > 0.99);
        assert!(f.sup() >= 2.0);
        let g = RoofFunction::linear(1.0, 0.0).unwrap();
        assert!(!g.is_positive());
    }

    #[test]
    fn birkhoff_examples() {
        let g = Frequency::golden();
        let f = RoofFunction::linear(1.0, 0.0).unwrap();
        assert_eq!(f.birkhoff_sum(&g, 0.4, 0), 0.0);
        assert_eq!(f.birkhoff_sum(&g, 0.3, 1), 0.3);
        assert!((f.birkhoff_sum(&g, 0.0, 2) - 0.618_033_988_749_894_8).abs() < 1e-15);
    }

    #[test]
    fn exact_mode_matches_float() {
        let f = RoofFunction::linear(1.5, 0.25).unwrap();
        let rat = Frequency::rational(377, 610).unwrap();
        let x = BigRational::new(BigInt::from(1), BigInt::from(8));
        for n in [1i64, 17, 1000, -250] {
            let exact = f.birkhoff_sum_exact(377, 610, &x, n).unwrap();
            let float = f.birkhoff_sum(&rat, 0.125, n);
            assert!((num_traits::ToPrimitive::to_f64(&exact).unwrap() - float).abs() < 1e-9, "n={n}");
        }
        let g = RoofFunction::new(1.0, TrigPoly::cos(1, 0.1)).unwrap();
        assert_eq!(g.birkhoff_sum_exact(1, 2, &x, 3), Err(Error::NotExactlyRepresentable));
    }

    #[test]
    fn dk_examples() {
        let g = Frequency::golden();
        let c = RoofFunction::constant(0.7).unwrap();
        let r = dk_audit(&c, &g, 2..=12, 200, 1, &[]).unwrap();
        assert!(r.records.iter().all(|rec| rec.sup_deviation < 1e-12));
        let f = RoofFunction::linear(1.0, 0.0).unwrap();
        let r = dk_audit(&f, &g, 2..=12, 2000, 7, &[(0.05, 200)]).unwrap();
        assert_eq!(r.violations(), 0);
        assert!(r.linear_checks[0].violations.is_empty());
        let f = RoofFunction::new(0.0, TrigPoly::cos(1, 1.0)).unwrap();
        let r = dk_audit(&f, &g, 2..=12, 2000, 7, &[]).unwrap();
        assert_eq!(r.variation_bound, TAU);
        assert_eq!(r.violations(), 0);
    }

    #[test]
    fn n_eps_shrinks_with_eps() {
        let g = Frequency::golden();
        let f = RoofFunction::new(1.0, TrigPoly::cos(2, 0.3)).unwrap();
        let coarse = calibrate_n_eps(&f, &g, 0.1, 5000, 50, 3);
        let fine = calibrate_n_eps(&f, &g, 0.01, 5000, 50, 3);
        assert!(coarse <= fine);
    }

    #[test]
    fn normalize_examples() {
        let g = Frequency::golden();
        let f = RoofFunction::linear(1.0, 0.0).unwrap();
        let (_, same, tag) = normalize_positive_jump(&g, &f).unwrap();
        assert_eq!((same, tag), (f, Conjugation::Identity));
        let f = RoofFunction::linear(-1.0, 0.0).unwrap();
        let (beta, h, tag) = normalize_positive_jump(&g, &f).unwrap();
        assert_eq!(tag, Conjugation::Reflection);
        assert_eq!(h.jump(), 1.0);
        // f(1 − x) = −{1 − x} = {x} − 1
        assert_eq!(h.smooth(), &TrigPoly::constant(-1.0));
        assert!((beta.value() - (1.0 - g.value())).abs() < 1e-15);
        let f = RoofFunction::new(-2.0, TrigPoly::sin(1, 0.1)).unwrap();
        let (_, h, _) = normalize_positive_jump(&g, &f).unwrap();
        assert_eq!(h.jump(), 2.0);
        assert_eq!(h.smooth(), &TrigPoly::sin(1, -0.1).plus_constant(-2.0));
        assert_eq!(normalize_positive_jump(&g, &RoofFunction::constant(1.0).unwrap()), Err(Error::ZeroJump));
    }

    #[test]
    fn text_round_trip() {
        let f = RoofFunction::new(2.0, TrigPoly::cos(1, 0.1).with(3, 0.25, -0.5).plus_constant(1.0)).unwrap();
        let back: RoofFunction = f.to_string().parse().unwrap();
        assert_eq!(back, f);
        assert!("jump=1; k:1=0.1".parse::<RoofFunction>().is_err());
        assert!("c0=1".parse::<RoofFunction>().is_err());
        assert!("jump=1; nope=2".parse::<RoofFunction>().is_err());
    }

    proptest! {
        #[test]
        fn cocycle_identity(m in -3000i64..3000, n in -3000i64..3000, x in 0.0f64..1.0) {
            let g = Frequency::golden();
            let f = RoofFunction::new(1.0, TrigPoly::sin(1, 0.1).plus_constant(1.0)).unwrap();
            let lhs = f.birkhoff_sum(&g, x, m + n);
            let rhs = f.birkhoff_sum(&g, x, m) + f.birkhoff_sum(&g, g.rotate(x, m), n);
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn reflection_conjugacy(n in 1i64..1000, x in 0.001f64..0.999, a in 0.5f64..3.0) {
            let g = Frequency::golden();
            let f = RoofFunction::new(-a, TrigPoly::sin(1, 0.1).with(2, 0.05, 0.02).plus_constant(2.0 * a)).unwrap();
            let (beta, h, tag) = normalize_positive_jump(&g, &f).unwrap();
            let orig = f.birkhoff_sum(&g, x, n);
            let refl = h.birkhoff_sum(&beta, tag.map_point(x), n);
            prop_assert!((orig - refl).abs() < 1e-12 * n as f64 * 10.0 + 1e-12);
        }

        #[test]
        fn certified_bounds_enclose(x in 0.0f64..1.0, a in -2.0f64..2.0, c in -1.0f64..1.0, s in -1.0f64..1.0) {
            let f = RoofFunction::new(a, TrigPoly::cos(1, c).with(3, 0.0, s)).unwrap();
            let v = f.eval(x);
            prop_assert!(f.inf() <= v && v <= f.sup());
        }
    }
}
