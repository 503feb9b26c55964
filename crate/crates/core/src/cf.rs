//! Continued fractions of frequencies in (0, 1).
//!
//! A [`Frequency`] is defined by its partial quotients `a_1, a_2, ...`, held
//! as a finite prefix optionally followed by a periodic tail. Convergents are
//! exact big integers, extended lazily.

use std::fmt;
use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::LogScalar;
use crate::phase::Phase;

/// Tolerance promised by [`frequency_with_beta`].
pub const BETA_TOLERANCE: f64 = 0.05;

/// Largest denominator used for the exact `i128` phase reductions.
const REDUCER_Q_MAX: u64 = 1 << 62;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    FromQuotients,
    /// Expanded from a real ball whose radius is about `2^-bits`.
    FromReal { bits: u64 },
    FromBeta { target: f64, depth: usize },
}

pub struct Frequency {
    prefix: Vec<BigUint>,
    period: Vec<BigUint>,
    origin: Origin,
    note: String,
    conv: RwLock<Vec<(BigUint, BigUint)>>,
    reducer: OnceLock<std::result::Result<Reducer, Error>>,
}

impl Clone for Frequency {
    fn clone(&self) -> Self {
        let conv = self.conv.read().expect("convergent cache poisoned").clone();
        Frequency {
            prefix: self.prefix.clone(),
            period: self.period.clone(),
            origin: self.origin.clone(),
            note: self.note.clone(),
            conv: RwLock::new(conv),
            reducer: self.reducer.clone(),
        }
    }
}

impl fmt::Debug for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show: Vec<String> = self.prefix.iter().take(12).map(|a| a.to_string()).collect();
        write!(f, "Frequency[{}", show.join(","))?;
        if self.prefix.len() > 12 {
            write!(f, ",..")?;
        }
        if !self.period.is_empty() {
            let p: Vec<String> = self.period.iter().map(|a| a.to_string()).collect();
            write!(f, "; ({})*", p.join(","))?;
        }
        write!(f, "]")
    }
}

impl PartialEq for Frequency {
    fn eq(&self, other: &Self) -> bool {
        self.prefix == other.prefix && self.period == other.period
    }
}

impl Frequency {
    pub fn new(prefix: Vec<BigUint>, period: Vec<BigUint>, origin: Origin, note: impl Into<String>) -> Result<Self> {
        if prefix.is_empty() && period.is_empty() {
            return Err(Error::InvalidArgument("empty quotient sequence".into()));
        }
        if prefix.iter().chain(period.iter()).any(|a| a.is_zero()) {
            return Err(Error::InvalidArgument("partial quotients must be positive".into()));
        }
        Ok(Frequency {
            prefix,
            period,
            origin,
            note: note.into(),
            conv: RwLock::new(vec![(BigUint::zero(), BigUint::one())]),
            reducer: OnceLock::new(),
        })
    }

    /// Finite list of quotients `a_1, ..., a_n`.
    pub fn from_quotients(q: &[u64]) -> Result<Self> {
        Self::new(q.iter().map(|&a| BigUint::from(a)).collect(), vec![], Origin::FromQuotients, "")
    }

    /// `prefix` followed by `period` repeated forever.
    pub fn periodic(prefix: &[u64], period: &[u64]) -> Result<Self> {
        Self::new(
            prefix.iter().map(|&a| BigUint::from(a)).collect(),
            period.iter().map(|&a| BigUint::from(a)).collect(),
            Origin::FromQuotients,
            "",
        )
    }

    /// `(sqrt 5 - 1) / 2`.
    pub fn golden() -> Self {
        Self::periodic(&[], &[1]).expect("valid").with_note("golden mean (sqrt5-1)/2")
    }

    /// `sqrt 2 - 1`.
    pub fn silver() -> Self {
        Self::periodic(&[], &[2]).expect("valid").with_note("sqrt2-1")
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn note(&self) -> &str {
        &self.note
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn prefix(&self) -> &[BigUint] {
        &self.prefix
    }

    pub fn period(&self) -> &[BigUint] {
        &self.period
    }

    /// Number of known quotients, `None` when a periodic tail makes it infinite.
    pub fn len(&self) -> Option<usize> {
        if self.period.is_empty() {
            Some(self.prefix.len())
        } else {
            None
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Partial quotient `a_n`, `n >= 1`.
    pub fn quotient(&self, n: usize) -> Result<BigUint> {
        if n == 0 {
            return Ok(BigUint::zero());
        }
        let i = n - 1;
        if i < self.prefix.len() {
            return Ok(self.prefix[i].clone());
        }
        if self.period.is_empty() {
            return Err(Error::QuotientsExhausted(n));
        }
        Ok(self.period[(i - self.prefix.len()) % self.period.len()].clone())
    }

    fn extend_to(&self, n: usize) -> Result<()> {
        if self.conv.read().expect("convergent cache poisoned").len() > n {
            return Ok(());
        }
        let mut c = self.conv.write().expect("convergent cache poisoned");
        while c.len() <= n {
            let k = c.len();
            let a = self.quotient(k)?;
            let (p1, q1) = c[k - 1].clone();
            let (p2, q2) = if k >= 2 { c[k - 2].clone() } else { (BigUint::one(), BigUint::zero()) };
            c.push((&a * &p1 + p2, &a * &q1 + q2));
        }
        Ok(())
    }

    /// `(p_n, q_n)` with `p_0 = 0`, `q_0 = 1`.
    pub fn convergent(&self, n: usize) -> Result<(BigUint, BigUint)> {
        self.extend_to(n)?;
        Ok(self.conv.read().expect("convergent cache poisoned")[n].clone())
    }

    pub fn q(&self, n: usize) -> Result<BigUint> {
        Ok(self.convergent(n)?.1)
    }

    pub fn p(&self, n: usize) -> Result<BigUint> {
        Ok(self.convergent(n)?.0)
    }

    /// `q_n` as a machine integer.
    pub fn q_u64(&self, n: usize) -> Result<u64> {
        self.q(n)?.to_u64().ok_or(Error::DepthOverflow { index: n, budget_bits: 64 })
    }

    /// `ln q_n`, valid for arbitrarily large `q_n`.
    pub fn ln_q(&self, n: usize) -> Result<f64> {
        Ok(ln_big(&self.q(n)?))
    }

    /// Largest `n` with `q_n <= bound`.
    pub fn index_below(&self, bound: u64) -> Result<usize> {
        let mut n = 0;
        loop {
            match self.q(n + 1) {
                Ok(q) if q <= BigUint::from(bound) => n += 1,
                Ok(_) => return Ok(n),
                Err(Error::QuotientsExhausted(_)) => return Ok(n),
                Err(e) => return Err(e),
            }
        }
    }

    /// `alpha` to binary64 precision.
    pub fn alpha_f64(&self) -> Result<f64> {
        let r = self.reducer()?;
        Ok((r.p as f64 + r.delta) / r.q as f64)
    }

    /// Exact-integer reducer built on the largest convergent below `2^62`.
    pub fn reducer(&self) -> Result<&Reducer> {
        self.reducer.get_or_init(|| Reducer::build(self)).as_ref().map_err(|e| e.clone())
    }

    /// Bracket `[lo, hi]` of the complete quotient `x_n = [a_n; a_{n+1}, ...]`
    /// using `depth` further quotients. `hi` is `None` when unbounded.
    pub fn complete_quotient_bracket(&self, n: usize, depth: usize) -> (BigRational, Option<BigRational>) {
        let mut tail = Vec::new();
        for i in n..n + depth {
            match self.quotient(i) {
                Ok(a) => tail.push(BigInt::from(a)),
                Err(_) => break,
            }
        }
        if tail.is_empty() {
            return (BigRational::one(), None);
        }
        // x = [b_0; ..., b_{d-1}, y] with y in [1, inf]
        let at = |y: Option<BigRational>| -> BigRational {
            let mut acc = y;
            for b in tail.iter().rev() {
                let b = BigRational::from_integer(b.clone());
                acc = Some(match acc {
                    None => b,
                    Some(v) => b + v.recip(),
                });
            }
            acc.expect("nonempty tail")
        };
        let v1 = at(Some(BigRational::one()));
        let vinf = at(None);
        if v1 < vinf {
            (v1, Some(vinf))
        } else {
            (vinf, Some(v1))
        }
    }

    /// Enclosure of `|q_n alpha - p_n| = 1 / (q_{n+1} + q_n / x_{n+2})`.
    pub fn delta_bracket(&self, n: usize) -> Result<(BigRational, BigRational)> {
        let q0 = BigRational::from_integer(BigInt::from(self.q(n)?));
        let q1 = BigRational::from_integer(BigInt::from(self.q(n + 1)?));
        let (xlo, xhi) = self.complete_quotient_bracket(n + 2, 48);
        let lo = (&q1 + &q0 / &xlo).recip();
        let hi = match xhi {
            Some(x) => (&q1 + &q0 / x).recip(),
            None => q1.recip(),
        };
        Ok((lo, hi))
    }

    /// `q_n alpha - p_n` with sign `(-1)^n`, to binary64 relative precision.
    pub fn signed_delta(&self, n: usize) -> Result<LogScalar> {
        let (lo, hi) = self.delta_bracket(n)?;
        let mid = rational_to_log_scalar(&((lo + hi) / BigRational::from_integer(BigInt::from(2))));
        Ok(if n % 2 == 0 { mid } else { -mid })
    }
}

/// Reduces `k alpha` modulo one with exact integer arithmetic plus a tiny
/// binary64 correction: `alpha = (p + delta) / q` where `delta = q alpha - p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reducer {
    pub index: usize,
    pub p: i128,
    pub q: i128,
    /// `q_M alpha - p_M`, signed.
    pub delta: f64,
    /// `q_{M+1}` as a float; multipliers must stay below a quarter of it.
    pub q_next: f64,
}

impl Reducer {
    fn build(freq: &Frequency) -> Result<Reducer> {
        let mut m = 0;
        while let Ok(q) = freq.q(m + 1) {
            if q > BigUint::from(REDUCER_Q_MAX) {
                break;
            }
            m += 1;
        }
        let (p, q) = freq.convergent(m)?;
        let q_next = freq.q(m + 1)?;
        let delta = freq.signed_delta(m)?.to_f64();
        Ok(Reducer {
            index: m,
            p: p.to_i128().expect("below 2^62"),
            q: q.to_i128().expect("below 2^62"),
            delta,
            q_next: ln_big(&q_next).exp(),
        })
    }

    pub fn check(&self, k: i128) -> Result<()> {
        if (k.unsigned_abs() as f64) * 4.0 > self.q_next {
            return Err(Error::PrecisionExhausted(format!(
                "multiplier {k} too large for the reduction convergent q = {}",
                self.q
            )));
        }
        Ok(())
    }

    /// `(floor(k alpha), frac(k alpha))`.
    pub fn split(&self, k: i128) -> Result<(i128, f64)> {
        self.check(k)?;
        let kp = k * self.p;
        let mut fl = kp.div_euclid(self.q);
        let r = kp.rem_euclid(self.q);
        let corr = k as f64 * self.delta;
        let mut t = r as f64 + corr;
        let qf = self.q as f64;
        if t >= qf {
            t -= qf;
            fl += 1;
        } else if t < 0.0 {
            t += qf;
            fl -= 1;
        }
        Ok((fl, (t / qf).clamp(0.0, 1.0 - f64::EPSILON / 2.0)))
    }

    /// `||k alpha||`, distance to the nearest integer, with full relative
    /// accuracy even when tiny.
    pub fn dist(&self, k: i128) -> Result<f64> {
        self.check(k)?;
        if k == 0 {
            return Ok(0.0);
        }
        let r = (k * self.p).rem_euclid(self.q);
        let corr = k as f64 * self.delta;
        let qf = self.q as f64;
        let d = if 2 * r < self.q { (r as f64 + corr).abs() } else { ((self.q - r) as f64 - corr).abs() };
        Ok((d / qf).min(0.5))
    }
}

/// `ln x` for a big unsigned integer.
pub fn ln_big(x: &BigUint) -> f64 {
    big_to_log_scalar(x).logmag()
}

pub fn big_to_log_scalar(x: &BigUint) -> LogScalar {
    if x.is_zero() {
        return LogScalar::ZERO;
    }
    let bits = x.bits();
    if bits <= 64 {
        return LogScalar::from_f64(x.to_u64().expect("fits") as f64);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("64 bits");
    LogScalar::from_f64(top as f64).scale_pow2(shift as i64)
}

pub fn rational_to_log_scalar(x: &BigRational) -> LogScalar {
    if x.is_zero() {
        return LogScalar::ZERO;
    }
    let n = big_to_log_scalar(x.numer().magnitude());
    let d = big_to_log_scalar(x.denom().magnitude());
    let v = n / d;
    if x.is_negative() {
        -v
    } else {
        v
    }
}

/// A closed rational interval `[center - radius, center + radius]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealBall {
    pub center: BigRational,
    pub radius: BigRational,
}

impl RealBall {
    pub fn exact(x: BigRational) -> Self {
        RealBall { center: x, radius: BigRational::zero() }
    }

    /// Decimal string such as `0.6180339887`; the radius is half a unit in the
    /// last digit.
    pub fn from_decimal(s: &str) -> Result<Self> {
        let s = s.trim();
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let digits = format!("{int}{frac}");
        let num: BigInt = digits.parse().map_err(|_| Error::InvalidArgument(format!("bad decimal `{s}`")))?;
        let den = BigInt::from(10).pow(frac.len() as u32);
        let center = BigRational::new(num, den.clone());
        let radius = BigRational::new(BigInt::one(), den * 2);
        Ok(RealBall { center, radius })
    }

    /// `(a + b sqrt(d)) / c` to within `2^-bits`.
    pub fn surd(a: i64, b: i64, d: u64, c: i64, bits: u32) -> Self {
        let scale = BigUint::one() << (2 * bits as usize);
        let s = (BigUint::from(d) * scale).sqrt();
        let one = BigInt::one() << bits as usize;
        let sq = BigRational::new(BigInt::from(s), one.clone());
        let center = (BigRational::from_integer(BigInt::from(a))
            + BigRational::from_integer(BigInt::from(b)) * (sq + BigRational::new(BigInt::one(), one.clone() * 2)))
            / BigRational::from_integer(BigInt::from(c));
        let radius = BigRational::new(BigInt::from(b.unsigned_abs()) + 1, one * BigInt::from(c.unsigned_abs()));
        RealBall { center, radius }
    }

    fn precision_bits(&self) -> u64 {
        if self.radius.is_zero() {
            return u64::MAX;
        }
        let r = rational_to_log_scalar(&self.radius);
        (-r.logmag() / std::f64::consts::LN_2).max(0.0) as u64
    }
}

/// First `n_max` quotients of the number in `ball`, certified for every
/// point of the ball.
pub fn cf_expand(ball: &RealBall, n_max: usize) -> Result<Frequency> {
    let mut lo = &ball.center - &ball.radius;
    let mut hi = &ball.center + &ball.radius;
    let zero = BigRational::zero();
    let one = BigRational::one();
    if lo <= zero || hi >= one {
        return Err(Error::InvalidArgument("x must lie strictly inside (0, 1)".into()));
    }
    let exact = ball.radius.is_zero();
    let mut out = Vec::with_capacity(n_max);
    for i in 1..=n_max {
        if lo.is_zero() || hi.is_zero() {
            if exact {
                return Err(Error::NonGeneric(i - 1));
            }
            return Err(Error::PrecisionExhausted(format!("quotient {i} not certified")));
        }
        let (a, b) = (hi.recip(), lo.recip());
        let fa = a.floor();
        let fb = b.floor();
        if fa != fb || (!exact && (fa == a || fb == b)) {
            return Err(Error::PrecisionExhausted(format!("quotient {i} not certified")));
        }
        out.push(fa.to_integer().to_biguint().expect("positive"));
        lo = &a - &fa;
        hi = &b - &fb;
        if exact && lo.is_zero() && i < n_max {
            return Err(Error::NonGeneric(i));
        }
    }
    Frequency::new(out, vec![], Origin::FromReal { bits: ball.precision_bits() }, "")
}

/// `max_{lo <= n <= hi} ln q_{n+1} / q_n`.
fn beta_window(freq: &Frequency, lo: usize, hi: usize) -> Result<f64> {
    let mut best = 0.0f64;
    for n in lo..=hi {
        let v = beta_j(freq, n, 0)?;
        best = best.max(v);
    }
    Ok(best)
}

/// Finite-scale proxy for the limsup `beta(alpha)`: the maximum of
/// `ln q_{n+1} / q_n` over the tail window `ceil(N/2) <= n <= N`. The tail
/// window keeps the first few convergents (where `ln 2 / 1` dominates for the
/// golden mean) from masking the asymptotic value.
pub fn beta_estimate(freq: &Frequency, n_max: usize) -> Result<f64> {
    let n_max = n_max.max(1);
    beta_window(freq, n_max.div_ceil(2).max(1), n_max)
}

/// Running maximum of `ln q_{n+1} / q_n` over `1 <= n <= N`.
pub fn beta_upto(freq: &Frequency, n_max: usize) -> Result<f64> {
    beta_window(freq, 1, n_max.max(1))
}

/// `(ln q_{n+1} - ln(|j| + 1)) / q_n`.
pub fn beta_j(freq: &Frequency, n: usize, j: i64) -> Result<f64> {
    let qn = freq.q(n)?;
    let ln_next = freq.ln_q(n + 1)?;
    let qf = big_to_log_scalar(&qn).to_f64();
    Ok((ln_next - ((j.unsigned_abs() + 1) as f64).ln()) / qf)
}

/// Quotients with `ln q_{n+1} / q_n` near `target` for `1 <= n <= depth`,
/// followed by a tail of ones so that the frequency is irrational.
///
/// Rule: with `a* = (e^(target q_n) - q_{n-1}) / q_n`, `a_{n+1}` is whichever
/// of `floor(a*)`, `ceil(a*)` (clamped to at least 1) puts `ln q_{n+1} / q_n`
/// closer to `target`; ties go to the floor. While `q_n <= 64` the
/// denominators are too coarse for that to stay within 0.05 at the next
/// scale: if the plain choice leaves the next step (or this one, for
/// `n >= 2`) outside the tolerance, the nearest quotient within distance 4
/// that keeps both inside is taken instead.
pub fn frequency_with_beta(target: f64, depth: usize, budget_bits: u64) -> Result<Frequency> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidArgument(format!("target beta must be positive, got {target}")));
    }
    if depth < 2 {
        return Err(Error::InvalidArgument("depth must be at least 2".into()));
    }
    let mut quotients: Vec<BigUint> = Vec::with_capacity(depth + 1);
    let (mut q_prev, mut q) = (BigUint::zero(), BigUint::one());
    for n in 0..=depth {
        let qf = big_to_log_scalar(&q).to_f64();
        let log_target = target * qf;
        let bits = (log_target / std::f64::consts::LN_2).ceil() + 2.0;
        if !(bits <= budget_bits as f64) {
            return Err(Error::DepthOverflow { index: n + 1, budget_bits });
        }
        let (plain, _) = best_step(target, &q, &q_prev);
        let a = match plain.to_u64() {
            Some(a0) if n >= 1 && q <= BigUint::from(64u32) => {
                let score = |a: u64| {
                    let next = BigUint::from(a) * &q + &q_prev;
                    let now = (ln_big(&next) / qf - target).abs();
                    let later = best_step_err(target, &next, &q);
                    if n >= 2 {
                        now.max(later)
                    } else {
                        later
                    }
                };
                // nearest candidates first; keep the plain choice when it already works
                let mut cands = vec![a0];
                for d in 1..=4u64 {
                    cands.push(a0 + d);
                    if a0 > d {
                        cands.push(a0 - d);
                    }
                }
                let scored: Vec<(u64, f64)> = cands.into_iter().map(|a| (a, score(a))).collect();
                let pick = scored
                    .iter()
                    .find(|(_, sc)| *sc <= BETA_TOLERANCE)
                    .unwrap_or(&scored[0]);
                BigUint::from(pick.0)
            }
            _ => plain,
        };
        let next = &a * &q + &q_prev;
        if next.bits() > budget_bits {
            return Err(Error::DepthOverflow { index: n + 1, budget_bits });
        }
        quotients.push(a);
        q_prev = std::mem::replace(&mut q, next);
    }
    let note = format!("ln q_(n+1)/q_n ~ {target} for n <= {depth}, then all ones");
    Frequency::new(quotients, vec![BigUint::one()], Origin::FromBeta { target, depth }, note)
}

/// Floor/ceil rule for one step: the quotient and its error.
fn best_step(target: f64, q: &BigUint, q_prev: &BigUint) -> (BigUint, f64) {
    let qf = big_to_log_scalar(q).to_f64();
    let astar = approx_quotient(target * qf, q, q_prev);
    let lo = if astar.is_zero() { BigUint::one() } else { astar };
    let hi = &lo + 1u32;
    let score = |a: &BigUint| {
        let next = a * q + q_prev;
        (ln_big(&next) / qf - target).abs()
    };
    let (sl, sh) = (score(&lo), score(&hi));
    if sh < sl {
        (hi, sh)
    } else {
        (lo, sl)
    }
}

/// Error of [`best_step`] in binary64, without forming the big quotient.
fn best_step_err(target: f64, q: &BigUint, q_prev: &BigUint) -> f64 {
    let qf = big_to_log_scalar(q).to_f64();
    let qp = big_to_log_scalar(q_prev).to_f64();
    let l = target * qf;
    if l > 700.0 {
        return 0.0;
    }
    let astar = ((l.exp() - qp) / qf).floor().max(1.0);
    [astar, astar + 1.0]
        .iter()
        .map(|a| ((a * qf + qp).ln() / qf - target).abs())
        .fold(f64::INFINITY, f64::min)
}

/// `floor((e^x - q_prev) / q)` for possibly huge `e^x`, accurate to within one.
fn approx_quotient(x: f64, q: &BigUint, q_prev: &BigUint) -> BigUint {
    let t = exp_to_big(x);
    if t <= *q_prev {
        return BigUint::zero();
    }
    (t - q_prev) / q
}

/// `floor(e^x)` as a big integer (leading 52 bits exact, the rest zero).
fn exp_to_big(x: f64) -> BigUint {
    if x < 80.0 {
        return BigUint::from(x.exp().floor() as u128);
    }
    let l = LogScalar::from_log(1, x);
    let m = (l.mantissa() * (1u64 << 52) as f64) as u64;
    BigUint::from(m) << (l.exponent() - 52) as usize
}

/// Result of [`diophantine_audit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineAudit {
    pub n: usize,
    /// `1 / (2 q_{n+1})`.
    pub lower: LogScalar,
    /// `|q_n alpha - p_n|`.
    pub actual: LogScalar,
    /// `1 / q_{n+1}`.
    pub upper: LogScalar,
    pub pass: bool,
    /// Exhaustive check that `||k alpha|| >= |q_n alpha - p_n|` for
    /// `1 <= k < q_{n+1}`; `None` when above the enumeration cap.
    pub gdc1: Option<bool>,
}

/// Sandwich `1/(2q_{n+1}) <= |q_n alpha - p_n| <= 1/q_{n+1}` in exact
/// arithmetic, plus the exhaustive best-approximation check when
/// `q_{n+1} <= cap`.
pub fn diophantine_audit(freq: &Frequency, n: usize, cap: u64) -> Result<DiophantineAudit> {
    let q1 = BigRational::from_integer(BigInt::from(freq.q(n + 1)?));
    let upper = q1.recip();
    let lower = (q1 * BigInt::from(2)).recip();
    let (lo, hi) = freq.delta_bracket(n)?;
    let pass = lower <= lo && hi <= upper;
    let actual = rational_to_log_scalar(&((&lo + &hi) / BigRational::from_integer(BigInt::from(2))));
    let gdc1 = match gdc1_check(freq, n, cap) {
        Ok(b) => Some(b),
        // finite quotient lists leave alpha undetermined beyond the list
        Err(Error::EnumerationCapExceeded { .. } | Error::QuotientsExhausted(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(DiophantineAudit {
        n,
        lower: rational_to_log_scalar(&lower),
        actual,
        upper: rational_to_log_scalar(&upper),
        pass,
        gdc1,
    })
}

/// Exhaustive check of `min_{1 <= k < q_{n+1}} ||k alpha|| = ||q_n alpha||`.
pub fn gdc1_check(freq: &Frequency, n: usize, cap: u64) -> Result<bool> {
    let q1 = freq.q(n + 1)?;
    let q1 = match q1.to_u64() {
        Some(v) if v <= cap => v,
        _ => return Err(Error::EnumerationCapExceeded { q: q1.to_u64().unwrap_or(u64::MAX), cap }),
    };
    Gdc1Scan::new(freq, q1)?.check(freq, n)
}

/// Prefix minima of `||k alpha||` over `1 <= k < K`, shared by all scales
/// `n` with `q_{n+1} <= K`.
pub struct Gdc1Scan {
    /// `best[k]` = (argmin, min, second min) over `1 <= k' <= k`.
    best: Vec<(u64, f64, f64)>,
}

impl Gdc1Scan {
    pub fn new(freq: &Frequency, limit: u64) -> Result<Self> {
        let r = freq.reducer()?;
        let mut best = Vec::with_capacity(limit as usize + 1);
        best.push((0, f64::INFINITY, f64::INFINITY));
        let (mut arg, mut m1, mut m2) = (0u64, f64::INFINITY, f64::INFINITY);
        for k in 1..=limit {
            let d = r.dist(k as i128)?;
            if d < m1 {
                m2 = m1;
                m1 = d;
                arg = k;
            } else if d < m2 {
                m2 = d;
            }
            best.push((arg, m1, m2));
        }
        Ok(Gdc1Scan { best })
    }

    pub fn limit(&self) -> u64 {
        self.best.len() as u64 - 1
    }

    /// The minimum over `1 <= k < q_{n+1}` is attained at `k = q_n` only.
    pub fn check(&self, freq: &Frequency, n: usize) -> Result<bool> {
        let q1 = freq.q_u64(n + 1)?;
        let qn = freq.q_u64(n)?;
        if q1 - 1 > self.limit() {
            return Err(Error::EnumerationCapExceeded { q: q1, cap: self.limit() });
        }
        if q1 <= 1 {
            return Ok(true);
        }
        let (arg, m1, m2) = self.best[(q1 - 1) as usize];
        Ok(arg == qn && m1 < m2)
    }
}

/// Result of [`delta_estimate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub value: f64,
    pub argmax: i64,
    /// Indices `k` with `2 theta + k alpha` an integer; they are skipped.
    pub skipped: Vec<i64>,
    pub complete_resonance: bool,
}

/// `max_{1 <= |k| <= K} -ln||2 theta + k alpha|| / |k|`, skipping exact zeros.
pub fn delta_estimate(freq: &Frequency, theta: &Phase, cap: u64) -> Result<DeltaEstimate> {
    let mut best = f64::NEG_INFINITY;
    let mut argmax = 0;
    let mut skipped = Vec::new();
    for k in 1..=cap as i64 {
        for kk in [k, -k] {
            match theta.dist_twice_plus(freq, kk)? {
                None => skipped.push(kk),
                Some(d) => {
                    let v = -d.ln() / k as f64;
                    if v > best {
                        best = v;
                        argmax = kk;
                    }
                }
            }
        }
    }
    skipped.sort_unstable();
    let complete_resonance = !skipped.is_empty();
    Ok(DeltaEstimate { value: best, argmax, skipped, complete_resonance })
}

#[derive(Serialize, Deserialize)]
struct FrequencyJson {
    quotients: Vec<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    period: Vec<serde_json::Value>,
    #[serde(default)]
    note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<Origin>,
}

fn quotient_json(a: &BigUint) -> serde_json::Value {
    match a.to_u64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::from(a.to_string()),
    }
}

fn quotient_from_json(v: &serde_json::Value) -> std::result::Result<BigUint, String> {
    match v {
        serde_json::Value::Number(n) => n.as_u64().map(BigUint::from).ok_or_else(|| format!("bad quotient {n}")),
        serde_json::Value::String(s) => s.parse().map_err(|_| format!("bad quotient `{s}`")),
        other => Err(format!("bad quotient {other}")),
    }
}

impl Serialize for Frequency {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrequencyJson {
            quotients: self.prefix.iter().map(quotient_json).collect(),
            period: self.period.iter().map(quotient_json).collect(),
            note: self.note.clone(),
            origin: Some(self.origin.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = FrequencyJson::deserialize(d)?;
        let prefix = j.quotients.iter().map(quotient_from_json).collect::<std::result::Result<Vec<_>, _>>();
        let period = j.period.iter().map(quotient_from_json).collect::<std::result::Result<Vec<_>, _>>();
        let f = Frequency::new(
            prefix.map_err(D::Error::custom)?,
            period.map_err(D::Error::custom)?,
            j.origin.unwrap_or(Origin::FromQuotients),
            j.note,
        );
        f.map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Table row used by reports: `n, a_n, p_n, q_n` with big values as strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergentRow {
    pub n: usize,
    pub a: String,
    pub p: String,
    pub q: String,
}

pub fn convergent_table(freq: &Frequency, n_max: usize) -> Result<Vec<ConvergentRow>> {
    (0..=n_max)
        .map(|n| {
            let (p, q) = freq.convergent(n)?;
            Ok(ConvergentRow { n, a: freq.quotient(n)?.to_string(), p: p.to_string(), q: q.to_string() })
        })
        .collect()
}

/// `q_n p_{n-1} - p_n q_{n-1}` as a signed integer.
pub fn determinant_identity(freq: &Frequency, n: usize) -> Result<BigInt> {
    let (p, q) = freq.convergent(n)?;
    let (pp, qp) = if n == 0 { (BigUint::one(), BigUint::zero()) } else { freq.convergent(n - 1)? };
    Ok(BigInt::from(q * pp) - BigInt::from(p * qp))
}

/// Euclid on a rational: its finite continued fraction.
pub fn rational_quotients(x: &BigRational) -> Vec<BigInt> {
    let mut out = Vec::new();
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    while !d.is_zero() {
        let (a, r) = n.div_mod_floor(&d);
        out.push(a);
        n = d;
        d = r;
    }
    out
}
