//! Continued fractions, convergents, Ostrowski numeration and Diophantine
//! classification of rotation frequencies.
//!
//! Two denominator sequences are carried side by side:
//!
//! * [`ContinuedFraction::denominators`] follows the recurrence
//!   `q_{n+1} = a_n q_n + q_{n-1}` with `q_0 = q_1 = 1` literally.
//! * [`ContinuedFraction::convergent_denominators`] are the classical `Q_n`
//!   (`Q_{-1} = 0`, `Q_0 = 1`, `Q_n = a_n Q_{n-1} + Q_{n-2}`), the best
//!   approximation denominators with `‖Q_n α‖ < 1/Q_{n+1}`.
//!
//! The two agree whenever `a_1 = 1` (for instance for the golden mean). All
//! approximation estimates in this crate use the classical sequence.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numeric::Dd;

/// Digits materialised behind an explicit digit list (all-ones tail).
const MIN_TAIL_DEPTH: usize = 48;
/// Convergent denominators are expanded until they exceed `2^ALPHA_BITS`.
const ALPHA_BITS: u64 = 120;

/// Where a continued fraction came from.
#[derive(Clone, Debug, PartialEq)]
pub enum CfSource {
    Digits,
    Real { value: BigRational, precision_bits: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedFraction {
    digits: Vec<u64>,
    denominators: Vec<BigUint>,
    conv_num: Vec<BigUint>,
    conv_den: Vec<BigUint>,
    last_digit_unreliable: bool,
    source: CfSource,
}

impl ContinuedFraction {
    /// Builds the expansion of `[0; a_1, a_2, ...]` for the given digits.
    pub fn from_digits(digits: &[u64]) -> Result<Self> {
        Self::build(digits.to_vec(), CfSource::Digits, false)
    }

    fn build(digits: Vec<u64>, source: CfSource, unreliable: bool) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::InvalidArgument("empty digit list".into()));
        }
        if digits.contains(&0) {
            return Err(Error::InvalidArgument("partial quotients must be positive".into()));
        }
        let mut denominators = vec![BigUint::one(), BigUint::one()];
        for (n, &a) in digits.iter().enumerate() {
            // q_{n+2} = a_{n+1} q_{n+1} + q_n  (1-based digits)
            let next = &denominators[n + 1] * a + &denominators[n];
            denominators.push(next);
        }
        let mut conv_num = Vec::with_capacity(digits.len() + 1);
        let mut conv_den = Vec::with_capacity(digits.len() + 1);
        let (mut p_prev, mut p) = (BigUint::one(), BigUint::zero());
        let (mut q_prev, mut q) = (BigUint::zero(), BigUint::one());
        conv_num.push(p.clone());
        conv_den.push(q.clone());
        for &a in &digits {
            let p_next = &p * a + &p_prev;
            let q_next = &q * a + &q_prev;
            p_prev = std::mem::replace(&mut p, p_next);
            q_prev = std::mem::replace(&mut q, q_next);
            conv_num.push(p.clone());
            conv_den.push(q.clone());
        }
        Ok(ContinuedFraction {
            digits,
            denominators,
            conv_num,
            conv_den,
            last_digit_unreliable: unreliable,
            source,
        })
    }

    /// Partial quotients `a_1, a_2, ...` (`digits()[0]` is `a_1`).
    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// `a_n`, 1-based.
    pub fn digit(&self, n: usize) -> Option<u64> {
        n.checked_sub(1).and_then(|i| self.digits.get(i).copied())
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    /// Literal-recurrence denominators `q_0, ..., q_{depth+1}`.
    pub fn denominators(&self) -> &[BigUint] {
        &self.denominators
    }

    /// Classical convergent denominators `Q_0, ..., Q_depth`.
    pub fn convergent_denominators(&self) -> &[BigUint] {
        &self.conv_den
    }

    /// Classical convergent numerators `P_0, ..., P_depth`.
    pub fn convergent_numerators(&self) -> &[BigUint] {
        &self.conv_num
    }

    /// `Q_n` as a machine integer when it fits.
    pub fn q(&self, n: usize) -> Option<u64> {
        self.conv_den.get(n).and_then(|q| q.to_u64())
    }

    pub fn last_digit_unreliable(&self) -> bool {
        self.last_digit_unreliable
    }

    pub fn source(&self) -> &CfSource {
        &self.source
    }

    /// The deepest convergent, the best rational surrogate this expansion holds.
    pub fn deepest_convergent(&self) -> BigRational {
        let n = self.conv_den.len() - 1;
        BigRational::new(
            BigInt::from(self.conv_num[n].clone()),
            BigInt::from(self.conv_den[n].clone()),
        )
    }
}

/// Natural log of a big integer (works past the `f64` exponent range).
pub(crate) fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 64;
        let top: BigUint = x >> shift;
        top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Rounds an exact rational to a double-double.
pub fn dd_from_rational(r: &BigRational) -> Dd {
    let hi = r.to_f64().unwrap_or(f64::NAN);
    let rem = r - BigRational::from_float(hi).unwrap_or_else(BigRational::zero);
    let lo = rem.to_f64().unwrap_or(0.0);
    Dd::new(hi, lo)
}

/// Parses `[-]digits[.digits][e[-]digits]` exactly.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (
            &s[..i],
            s[i + 1..]
                .parse::<i32>()
                .map_err(|e| Error::Parse(format!("exponent in {s:?}: {e}")))?,
        ),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(Error::Parse(format!("not a decimal number: {s:?}")));
    }
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
        .map_err(|e| Error::Parse(e.to_string()))?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10u32);
    let mut r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Number of fractional decimal digits, used for the default precision.
fn decimal_fraction_digits(s: &str) -> usize {
    s.split_once('.').map(|(_, f)| f.len()).unwrap_or(0)
}

/// One step of the Gauss map on an exact rational in `(0,1)`.
fn gauss_step(r: &BigRational) -> (u64, Option<BigRational>) {
    let inv = r.recip();
    let a = inv.floor();
    let rest = &inv - &a;
    let a = a.to_integer().to_u64().unwrap_or(u64::MAX);
    (a, if rest.is_zero() { None } else { Some(rest) })
}

/// Continued-fraction expansion of a real given to `precision_bits`.
///
/// The input is the interval `[x − 2^-bits, x + 2^-bits]`; a digit is
/// certified when both endpoints produce it. If only the final requested digit
/// is uncertain it is returned flagged unreliable (taken from the midpoint).
pub fn cf_from_real(x: &BigRational, precision_bits: u32, depth: usize) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    if !(x.is_positive() && x < &BigRational::one()) {
        return Err(Error::NotInUnitInterval(format!("{x}")));
    }
    let err = BigRational::new(BigInt::one(), BigInt::one() << precision_bits as usize);
    let mut lo = Some(x - &err);
    let mut hi = Some(x + &err);
    let mut mid = Some(x.clone());
    let exhausted = |certified| Error::PrecisionExhausted { certified, requested: depth };
    if !(lo.as_ref().unwrap().is_positive() && hi.as_ref().unwrap() < &BigRational::one()) {
        return Err(exhausted(0));
    }
    let mut digits = Vec::with_capacity(depth);
    let mut unreliable = false;
    for i in 0..depth {
        let (Some(l), Some(h), Some(m)) = (lo.as_ref(), hi.as_ref(), mid.as_ref()) else {
            return Err(exhausted(i));
        };
        let (dl, rl) = gauss_step(l);
        let (dh, rh) = gauss_step(h);
        let (dm, rm) = gauss_step(m);
        if dl != dh {
            if i + 1 == depth {
                digits.push(dm);
                unreliable = true;
                break;
            }
            return Err(exhausted(i));
        }
        digits.push(dl);
        lo = rl;
        hi = rh;
        mid = rm;
        if i + 1 < depth && (lo.is_none() || hi.is_none()) {
            return Err(exhausted(i + 1));
        }
    }
    ContinuedFraction::build(
        digits,
        CfSource::Real { value: x.clone(), precision_bits },
        unreliable,
    )
}

/// `n = Σ b_i q_i` over the literal-recurrence denominators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OstrowskiDigits {
    pub coefficients: Vec<u64>,
    pub denominators: Vec<u64>,
}

impl OstrowskiDigits {
    pub fn reconstruct(&self) -> u128 {
        self.coefficients
            .iter()
            .zip(&self.denominators)
            .map(|(&b, &q)| b as u128 * q as u128)
            .sum()
    }

    /// `b_i q_i <= q_{i+1}` for every index with a successor denominator.
    pub fn digit_bounds_hold(&self) -> bool {
        self.coefficients
            .iter()
            .zip(self.denominators.windows(2))
            .all(|(&b, w)| b as u128 * w[0] as u128 <= w[1] as u128)
    }
}

/// Greedy Ostrowski decomposition against [`ContinuedFraction::denominators`].
pub fn ostrowski_decompose(n: u64, cf: &ContinuedFraction) -> Result<OstrowskiDigits> {
    let denoms: Vec<u64> = cf
        .denominators()
        .iter()
        .map_while(|q| q.to_u64())
        .collect();
    ostrowski_with(n, &denoms)
}

/// Greedy decomposition over any non-decreasing sequence starting at 1.
///
/// The top denominator must exceed `n`. When two consecutive denominators are
/// equal (the `q_0 = q_1 = 1` case) a unit remainder of 1 is placed on the
/// lower index and anything larger on the upper one.
pub fn ostrowski_with(n: u64, denoms: &[u64]) -> Result<OstrowskiDigits> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if denoms.first() != Some(&1) {
        return Err(Error::InvalidArgument("denominators must start at 1".into()));
    }
    let Some(top) = denoms.iter().rposition(|&q| q <= n) else {
        unreachable!("q_0 = 1 <= n");
    };
    if top + 1 >= denoms.len() {
        return Err(Error::InsufficientDepth {
            needed: n.to_string(),
            depth: denoms.len(),
        });
    }
    let mut coefficients = vec![0u64; top + 2];
    let mut rest = n;
    for i in (0..=top).rev() {
        coefficients[i] = rest / denoms[i];
        rest %= denoms[i];
    }
    for i in 1..=top {
        if denoms[i] == denoms[i - 1] && coefficients[i] == 1 && coefficients[i - 1] == 0 {
            coefficients[i] = 0;
            coefficients[i - 1] = 1;
        }
    }
    coefficients.truncate(top + 1);
    while coefficients.len() > 1 && coefficients.last() == Some(&0) {
        coefficients.pop();
    }
    Ok(OstrowskiDigits {
        coefficients,
        denominators: denoms[..=top + 1].to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeKind {
    /// Every examined digit is `< m`.
    Bounded(u64),
    /// 1-based digit indices exceeding the bound, increasing.
    UnboundedEvidence(Vec<usize>),
}

/// Horizon-relative verdict; never a proof of unboundedness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeVerdict {
    pub kind: TypeKind,
    pub horizon: usize,
}

pub fn classify_type(cf: &ContinuedFraction, horizon: usize, bound: u64) -> Result<TypeVerdict> {
    if horizon > cf.depth() {
        return Err(Error::InsufficientDepth {
            needed: format!("horizon {horizon}"),
            depth: cf.depth(),
        });
    }
    let examined = &cf.digits()[..horizon];
    let big: Vec<usize> = examined
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > bound)
        .map(|(i, _)| i + 1)
        .collect();
    let kind = if big.is_empty() {
        TypeKind::Bounded(1 + examined.iter().copied().max().unwrap_or(0))
    } else {
        TypeKind::UnboundedEvidence(big)
    };
    Ok(TypeVerdict { kind, horizon })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DcReport {
    pub tau: f64,
    pub constant: f64,
    pub horizon: usize,
    /// First convergent index `n >= 1` with `|α − P_n/Q_n| <= C/Q_n^τ`.
    pub first_violation: Option<usize>,
    pub violations: Vec<usize>,
    /// `ln|α − P_n/Q_n|` per checked index.
    pub log_errors: Vec<f64>,
}

/// Checks `|α − P_n/Q_n| > C / Q_n^τ` over the convergents `1..=horizon`.
///
/// `α` is represented by the deepest convergent, so the horizon must stay two
/// digits short of the expansion depth.
pub fn dc_check(cf: &ContinuedFraction, tau: f64, constant: f64, horizon: usize) -> Result<DcReport> {
    if horizon + 2 > cf.depth() {
        return Err(Error::InsufficientDepth {
            needed: format!("horizon {horizon} + 2"),
            depth: cf.depth(),
        });
    }
    if !(tau > 0.0 && constant > 0.0) {
        return Err(Error::InvalidArgument("tau and C must be positive".into()));
    }
    let d = cf.depth();
    let (pd, qd) = (BigInt::from(cf.conv_num[d].clone()), BigInt::from(cf.conv_den[d].clone()));
    let mut violations = Vec::new();
    let mut log_errors = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let pn = BigInt::from(cf.conv_num[n].clone());
        let qn = BigInt::from(cf.conv_den[n].clone());
        let num = (&pd * &qn - &pn * &qd).abs();
        let num = num.to_biguint().unwrap();
        let ln_err = big_ln(&num) - big_ln(&cf.conv_den[d]) - big_ln(&cf.conv_den[n]);
        let ln_bound = constant.ln() - tau * big_ln(&cf.conv_den[n]);
        log_errors.push(ln_err);
        if ln_err <= ln_bound {
            violations.push(n);
        }
    }
    let first_violation = violations.first().copied();
    Ok(DcReport { tau, constant, horizon, first_violation, violations, log_errors })
}

/// Indices `n` with `Q_{n+1}/Q_n >= threshold`, increasing.
pub fn unbounded_sequence(cf: &ContinuedFraction, threshold: f64) -> Result<Vec<usize>> {
    let q = cf.convergent_denominators();
    let out: Vec<usize> = (0..q.len() - 1)
        .filter(|&n| (big_ln(&q[n + 1]) - big_ln(&q[n])) >= threshold.ln() - 1e-15)
        .collect();
    if out.is_empty() {
        Err(Error::EmptyResult(threshold))
    } else {
        Ok(out)
    }
}

/// How a frequency was specified.
#[derive(Clone, Debug, PartialEq)]
pub enum FrequencySpec {
    /// Explicit digits followed by an all-ones tail.
    Digits(Vec<u64>),
    Real { decimal: String, precision_bits: u32 },
    /// Diagnostic-only rational `p/q`.
    Rational { p: u64, q: u64 },
}

impl fmt::Display for FrequencySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrequencySpec::Digits(d) => {
                let body: Vec<String> = d.iter().map(u64::to_string).collect();
                write!(f, "cf:[{}]", body.join(","))
            }
            FrequencySpec::Real { decimal, precision_bits } => write!(f, "real:{decimal}@{precision_bits}"),
            FrequencySpec::Rational { p, q } => write!(f, "rat:{p}/{q}"),
        }
    }
}

impl FromStr for FrequencySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_prefix("cf:") {
            let inner = body
                .trim()
                .strip_prefix('[')
                .and_then(|b| b.strip_suffix(']'))
                .ok_or_else(|| Error::Parse(format!("expected cf:[a1,a2,...], got {s:?}")))?;
            let digits = inner
                .split(',')
                .map(|t| t.trim().parse::<u64>().map_err(|e| Error::Parse(format!("digit {t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(FrequencySpec::Digits(digits))
        } else if let Some(body) = s.strip_prefix("real:") {
            let (dec, bits) = match body.split_once('@') {
                Some((d, b)) => (
                    d.trim(),
                    b.trim().parse::<u32>().map_err(|e| Error::Parse(format!("precision {b:?}: {e}")))?,
                ),
                None => (body.trim(), default_precision_bits(body.trim())),
            };
            parse_decimal(dec)?;
            Ok(FrequencySpec::Real { decimal: dec.to_string(), precision_bits: bits })
        } else if let Some(body) = s.strip_prefix("rat:") {
            let (p, q) = body
                .split_once('/')
                .ok_or_else(|| Error::Parse(format!("expected rat:p/q, got {s:?}")))?;
            let p = p.trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
            let q = q.trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
            Ok(FrequencySpec::Rational { p, q })
        } else {
            Err(Error::Parse(format!("unknown frequency form {s:?}")))
        }
    }
}

/// Bits implied by the number of fractional decimal digits written.
pub fn default_precision_bits(decimal: &str) -> u32 {
    (decimal_fraction_digits(decimal) as f64 * std::f64::consts::LOG2_10).floor() as u32
}

/// A rotation number `α ∈ (0,1)` with its continued fraction and a
/// double-double value for orbit arithmetic.
#[derive(Clone, Debug)]
pub struct Frequency {
    spec: FrequencySpec,
    cf: ContinuedFraction,
    alpha: Dd,
    rational: bool,
}

impl PartialEq for Frequency {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Frequency {
    pub fn from_spec(spec: FrequencySpec) -> Result<Self> {
        match &spec {
            FrequencySpec::Digits(explicit) => {
                if explicit.is_empty() || explicit.contains(&0) {
                    return Err(Error::InvalidArgument("digits must be a non-empty list of positive integers".into()));
                }
                let mut digits = explicit.clone();
                let mut cf = ContinuedFraction::from_digits(&digits)?;
                while digits.len() < explicit.len() + MIN_TAIL_DEPTH
                    || cf.conv_den.last().unwrap().bits() < ALPHA_BITS
                {
                    digits.extend(std::iter::repeat_n(1, 16));
                    cf = ContinuedFraction::from_digits(&digits)?;
                }
                let alpha = dd_from_rational(&cf.deepest_convergent());
                Ok(Frequency { spec, cf, alpha, rational: false })
            }
            FrequencySpec::Real { decimal, precision_bits } => {
                let value = parse_decimal(decimal)?;
                // certify as many digits as the precision allows
                let mut depth = 1;
                let mut best = cf_from_real(&value, *precision_bits, 1)?;
                loop {
                    match cf_from_real(&value, *precision_bits, depth + 1) {
                        Ok(cf) if !cf.last_digit_unreliable() => {
                            best = cf;
                            depth += 1;
                        }
                        _ => break,
                    }
                    if depth >= 512 {
                        break;
                    }
                }
                let alpha = dd_from_rational(&value);
                Ok(Frequency { spec, cf: best, alpha, rational: false })
            }
            FrequencySpec::Rational { p, q } => {
                if *q == 0 || p >= q || *p == 0 {
                    return Err(Error::NotInUnitInterval(format!("{p}/{q}")));
                }
                let r = BigRational::new(BigInt::from(*p), BigInt::from(*q));
                let mut digits = Vec::new();
                let mut cur = Some(r.clone());
                while let Some(v) = cur {
                    let (a, rest) = gauss_step(&v);
                    digits.push(a);
                    cur = rest;
                }
                let cf = ContinuedFraction::from_digits(&digits)?;
                Ok(Frequency { spec, cf, alpha: dd_from_rational(&r), rational: true })
            }
        }
    }

    pub fn from_digits(digits: &[u64]) -> Result<Self> {
        Self::from_spec(FrequencySpec::Digits(digits.to_vec()))
    }

    /// `(√5 − 1)/2 = [0; 1, 1, 1, ...]`.
    pub fn golden() -> Self {
        Self::from_digits(&[1]).expect("valid digits")
    }

    /// `√2 − 1 = [0; 2, 2, 2, ...]`.
    pub fn silver() -> Self {
        Self::from_digits(&[2; 200]).expect("valid digits")
    }

    pub fn rational(p: u64, q: u64) -> Result<Self> {
        Self::from_spec(FrequencySpec::Rational { p, q })
    }

    pub fn spec(&self) -> &FrequencySpec {
        &self.spec
    }

    pub fn cf(&self) -> &ContinuedFraction {
        &self.cf
    }

    pub fn alpha(&self) -> Dd {
        self.alpha
    }

    pub fn value(&self) -> f64 {
        self.alpha.to_f64()
    }

    pub fn is_rational(&self) -> bool {
        self.rational
    }

    /// Classical convergent denominator `Q_n`.
    pub fn q(&self, n: usize) -> Option<u64> {
        self.cf.q(n)
    }

    /// `Q_0, Q_1, ...` that fit in a `u64`.
    pub fn denominators_u64(&self) -> Vec<u64> {
        self.cf.convergent_denominators().iter().map_while(|q| q.to_u64()).collect()
    }

    /// `n·α` as a double-double (not reduced).
    pub fn multiple(&self, n: i64) -> Dd {
        self.alpha.mul_int(n)
    }

    /// `R_α^n x = x + nα mod 1`.
    pub fn rotate(&self, x: f64, n: i64) -> f64 {
        (Dd::from_f64(x) + self.alpha.mul_int(n).frac()).frac().to_unit_f64()
    }

    /// Signed `Q_n α − P_n`.
    pub fn convergent_error(&self, n: usize) -> Option<f64> {
        let q = self.q(n)? as i64;
        let m = self.multiple(q).frac().to_f64();
        Some(if m > 0.5 { m - 1.0 } else { m })
    }

    /// Forward orbit iterator `x, x+α, x+2α, ...` with double-double state.
    pub fn orbit(&self, x: f64) -> Orbit {
        Orbit { pos: Dd::from_f64(x).frac(), step: self.alpha }
    }

    /// Backward orbit iterator `x, x−α, x−2α, ...`.
    pub fn orbit_backward(&self, x: f64) -> Orbit {
        Orbit { pos: Dd::from_f64(x).frac(), step: Dd::from_f64(1.0) - self.alpha }
    }

    /// The frequency `1 − α`.
    pub fn reflect(&self) -> Result<Frequency> {
        match &self.spec {
            FrequencySpec::Digits(explicit) => {
                let mut d = explicit.clone();
                d.extend([1, 1]);
                let out = if d[0] > 1 {
                    let mut v = vec![1, d[0] - 1];
                    v.extend_from_slice(&d[1..]);
                    v
                } else {
                    let mut v = vec![d[1] + 1];
                    v.extend_from_slice(&d[2..]);
                    v
                };
                Frequency::from_digits(&out)
            }
            FrequencySpec::Real { decimal, precision_bits } => {
                let v = BigRational::one() - parse_decimal(decimal)?;
                let (n, d) = (v.numer().clone(), v.denom().clone());
                // exact decimal: denominators are powers of ten
                let digits = decimal_fraction_digits(decimal);
                let scaled = n * num_traits::pow(BigInt::from(10u32), digits) / d;
                let mut s = scaled.to_str_radix(10);
                while s.len() < digits {
                    s.insert(0, '0');
                }
                let dec = format!("0.{s}");
                Frequency::from_spec(FrequencySpec::Real { decimal: dec, precision_bits: *precision_bits })
            }
            FrequencySpec::Rational { p, q } => Frequency::rational(q - p, *q),
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.spec.fmt(f)
    }
}

impl FromStr for Frequency {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Frequency::from_spec(s.parse()?)
    }
}

/// Orbit of a circle rotation with double-double position.
#[derive(Clone, Debug)]
pub struct Orbit {
    pos: Dd,
    step: Dd,
}

impl Orbit {
    pub fn position(&self) -> f64 {
        self.pos.to_unit_f64()
    }
}

impl Iterator for Orbit {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let cur = self.pos.to_unit_f64();
        let mut nxt = self.pos + self.step;
        if nxt.hi >= 1.0 {
            nxt = nxt - Dd::from_f64(1.0);
        }
        if nxt.hi < 0.0 {
            nxt = nxt + Dd::from_f64(1.0);
        }
        self.pos = nxt;
        Some(cur)
    }
}

/// Exact big-integer helper used by oracles: gcd-reduced `p/q` of a convergent.
pub fn convergent_rational(cf: &ContinuedFraction, n: usize) -> Option<BigRational> {
    let p = cf.convergent_numerators().get(n)?;
    let q = cf.convergent_denominators().get(n)?;
    let g = p.gcd(q);
    Some(BigRational::new(
        BigInt::from_biguint(Sign::Plus, p / &g),
        BigInt::from_biguint(Sign::Plus, q / &g),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u64s(v: &[BigUint]) -> Vec<u64> {
        v.iter().map(|x| x.to_u64().unwrap()).collect()
    }

    #[test]
    fn golden_real_depth_six() {
        let x = parse_decimal("0.6180339887498948482045868343656").unwrap();
        let cf = cf_from_real(&x, 100, 6).unwrap();
        assert_eq!(cf.digits(), &[1, 1, 1, 1, 1, 1]);
        assert_eq!(&u64s(cf.denominators())[..7], &[1, 1, 2, 3, 5, 8, 13]);
        assert!(!cf.last_digit_unreliable());
    }

    #[test]
    fn silver_real_depth_five() {
        let x = parse_decimal("0.41421356237309504880168872420969807").unwrap();
        let cf = cf_from_real(&x, 110, 5).unwrap();
        assert_eq!(cf.digits(), &[2, 2, 2, 2, 2]);
        let q = u64s(cf.denominators());
        assert_eq!(&q[..6], &[1, 1, 3, 7, 17, 41]);
        // independent recurrence oracle q_{n+1} = 2 q_n + q_{n-1}
        let mut oracle = vec![1u64, 1];
        while oracle.len() < q.len() {
            let k = oracle.len();
            oracle.push(2 * oracle[k - 1] + oracle[k - 2]);
        }
        assert_eq!(q, oracle);
    }

    #[test]
    fn half_plus_tiny_is_exhausted() {
        let x = parse_decimal("0.5000000000000000000000000000001").unwrap();
        let err = cf_from_real(&x, 64, 3).unwrap_err();
        assert!(matches!(err, Error::PrecisionExhausted { certified: 0, .. }));
        // a single requested digit comes back flagged instead
        let cf = cf_from_real(&x, 64, 1).unwrap();
        assert!(cf.last_digit_unreliable());
    }

    #[test]
    fn out_of_interval_rejected() {
        let x = parse_decimal("1.25").unwrap();
        assert!(matches!(cf_from_real(&x, 30, 2), Err(Error::NotInUnitInterval(_))));
        let x = parse_decimal("-0.25").unwrap();
        assert!(matches!(cf_from_real(&x, 30, 2), Err(Error::NotInUnitInterval(_))));
    }

    #[test]
    fn short_decimal_certifies_expected_depth() {
        let spec: FrequencySpec = "real:0.6180339887".parse().unwrap();
        let FrequencySpec::Real { precision_bits, .. } = &spec else { panic!() };
        assert_eq!(*precision_bits, 33);
        let x = parse_decimal("0.6180339887").unwrap();
        let cf = cf_from_real(&x, 33, 8).unwrap();
        assert_eq!(cf.digits(), &[1; 8]);
    }

    #[test]
    fn ostrowski_examples() {
        let golden = Frequency::golden();
        let d = ostrowski_decompose(1, golden.cf()).unwrap();
        assert_eq!(d.coefficients, vec![1]);
        let d = ostrowski_decompose(10, golden.cf()).unwrap();
        // q = 1,1,2,3,5,8,13: one 8 and one 2
        assert_eq!(d.coefficients, vec![0, 0, 1, 0, 0, 1]);
        assert_eq!(d.reconstruct(), 10);
        let silver = Frequency::silver();
        let d = ostrowski_decompose(41, silver.cf()).unwrap();
        assert_eq!(d.coefficients, vec![0, 0, 0, 0, 0, 1]);
        assert_eq!(d.denominators[5], 41);
        let d = ostrowski_decompose(2, silver.cf()).unwrap();
        assert_eq!(d.coefficients, vec![0, 2]);
        assert!(d.digit_bounds_hold());
    }

    #[test]
    fn ostrowski_needs_depth() {
        let cf = ContinuedFraction::from_digits(&[1, 1, 1]).unwrap();
        // denominators 1,1,2,3,5: nothing above 5
        assert!(ostrowski_decompose(4, &cf).is_ok());
        assert!(matches!(ostrowski_decompose(5, &cf), Err(Error::InsufficientDepth { .. })));
    }

    #[test]
    fn classify_examples() {
        let golden = Frequency::golden();
        let v = classify_type(golden.cf(), 50, 10).unwrap();
        assert_eq!(v.kind, TypeKind::Bounded(2));
        let digits: Vec<u64> = (0..12).map(|k| 1u64 << k).collect();
        let cf = ContinuedFraction::from_digits(&digits).unwrap();
        let v = classify_type(&cf, 12, 10).unwrap();
        // 2^k > 10 from k = 4, digit index k + 1
        assert_eq!(v.kind, TypeKind::UnboundedEvidence((5..=12).collect()));
        let v = classify_type(Frequency::silver().cf(), 50, 1).unwrap();
        assert_eq!(v.kind, TypeKind::UnboundedEvidence((1..=50).collect()));
    }

    #[test]
    fn classify_monotone_in_horizon() {
        let digits = [1, 1, 1, 30, 1, 1, 2, 50, 1];
        let cf = ContinuedFraction::from_digits(&digits).unwrap();
        let mut seen_unbounded = false;
        for h in 1..=digits.len() {
            let v = classify_type(&cf, h, 10).unwrap();
            let unb = matches!(v.kind, TypeKind::UnboundedEvidence(_));
            assert!(!(seen_unbounded && !unb));
            seen_unbounded |= unb;
        }
    }

    #[test]
    fn dc_examples() {
        let golden = Frequency::golden();
        let r = dc_check(golden.cf(), 2.5, 0.1, 30).unwrap();
        assert_eq!(r.first_violation, None);
        let r = dc_check(golden.cf(), 1.0, 1e6, 30).unwrap();
        assert_eq!(r.first_violation, Some(1));
        let f = Frequency::from_digits(&[1, 1, 100, 1]).unwrap();
        let r = dc_check(f.cf(), 2.0, 0.5, 10).unwrap();
        // |α − P_2/Q_2| ≈ 1/(a_3 Q_2²); 1/1 also sits just inside C = 0.5
        assert!(r.violations.contains(&2));
        let r = dc_check(f.cf(), 2.0, 0.3, 10).unwrap();
        assert_eq!(r.first_violation, Some(2));
    }

    #[test]
    fn unbounded_sequence_examples() {
        assert_eq!(
            unbounded_sequence(Frequency::golden().cf(), 3.0),
            Err(Error::EmptyResult(3.0))
        );
        let digits = [1, 2, 1, 4, 1, 8, 1, 16, 1, 32];
        let f = Frequency::from_digits(&digits).unwrap();
        let idx = unbounded_sequence(f.cf(), 4.0).unwrap();
        let big: Vec<u64> = idx.iter().map(|&n| f.cf().digit(n + 1).unwrap()).collect();
        assert_eq!(big, vec![4, 8, 16, 32]);
        let all = unbounded_sequence(f.cf(), 1.0).unwrap();
        assert_eq!(all.len(), f.cf().depth());
    }

    #[test]
    fn reflection_digits() {
        let g = Frequency::golden();
        let r = g.reflect().unwrap();
        assert!((r.value() - (1.0 - g.value())).abs() < 1e-15);
        let s = Frequency::silver().reflect().unwrap();
        assert!((s.value() - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        let rr = s.reflect().unwrap();
        assert!((rr.value() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn spec_text_round_trip() {
        for s in ["cf:[1,2,1,4]", "real:0.6180339887@30", "rat:1/2"] {
            let spec: FrequencySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("cf:1,2".parse::<FrequencySpec>().is_err());
        assert!("golden".parse::<FrequencySpec>().is_err());
    }

    #[test]
    fn rotation_is_accurate_far_out() {
        let g = Frequency::golden();
        let n = 10_000_000i64;
        let direct = g.rotate(0.1, n);
        let mut orbit = g.orbit(0.1);
        let stepped = orbit.nth(n as usize).unwrap();
        assert!(crate::circle::circle_dist(direct, stepped) < 1e-14);
    }
}
