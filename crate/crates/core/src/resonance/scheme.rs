//! Interval schemes `I1`, `I2` around half-integer and integer resonant
//! sites, and the sine-minima claims behind their Lagrange bounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{beta_j, Frequency};
use crate::error::{Error, Result};
use crate::phase::Phase;
use crate::resonance::lagrange::lagrange_terms;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Around `j q_n + floor(q_n / 2)`, with `c = 1/8`.
    HalfSite,
    /// Around `j q_n`, with `c = 1/4`.
    FullSite,
}

impl SchemeKind {
    fn c(self) -> BigRational {
        match self {
            SchemeKind::HalfSite => BigRational::new(1.into(), 8.into()),
            SchemeKind::FullSite => BigRational::new(1.into(), 4.into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangeScheme {
    pub n: usize,
    pub kind: SchemeKind,
    pub j: i64,
    pub q_n: i64,
    pub n0: usize,
    /// `q_{n - n0}`.
    pub q_prime: i64,
    pub s: i64,
    pub i1: (i64, i64),
    pub i2: (i64, i64),
    /// `6 s q_{n - n0} - 1`.
    pub k: i64,
    pub epsilon: f64,
}

impl LagrangeScheme {
    /// Sites of `I1` followed by those of `I2`.
    pub fn sites(&self) -> Vec<i64> {
        (self.i1.0..=self.i1.1).chain(self.i2.0..=self.i2.1).collect()
    }

    pub fn size(&self) -> i64 {
        (self.i1.1 - self.i1.0 + 1) + (self.i2.1 - self.i2.0 + 1)
    }

    /// `(c - 3 eps) q_n <= s q' <= (c - 2 eps) q_n` and `s eps >= 1`, in
    /// exact arithmetic with `eps` taken as the binary64 value.
    pub fn sandwich_holds(&self) -> bool {
        let eps = BigRational::from_float(self.epsilon).expect("finite epsilon");
        let c = self.kind.c();
        let q = BigRational::from_integer(BigInt::from(self.q_n));
        let sq = BigRational::from_integer(BigInt::from(self.s) * BigInt::from(self.q_prime));
        let three = BigRational::from_integer(3.into());
        let two = BigRational::from_integer(2.into());
        let lo = (&c - &three * &eps) * &q;
        let hi = (&c - &two * &eps) * &q;
        lo <= sq && sq <= hi && BigRational::from_integer(self.s.into()) * &eps >= BigRational::one()
    }
}

/// `b_n = floor(1e-5 q_n)`.
pub fn b_n(freq: &Frequency, n: usize) -> Result<i64> {
    Ok((freq.q_u64(n)? / 100_000) as i64)
}

/// Checks `|j| <= 2 b_{n+1} / q_n + 10`.
pub fn check_j_range(freq: &Frequency, n: usize, j: i64) -> Result<()> {
    let q = freq.q_u64(n)? as i128;
    let b = b_n(freq, n + 1)? as i128;
    if (j.unsigned_abs() as i128) * q > 2 * b + 10 * q {
        return Err(Error::HypothesisViolated(format!("|j| = {} exceeds 2 b_(n+1) / q_n + 10 at n = {n}", j.abs())));
    }
    Ok(())
}

pub fn build_scheme(freq: &Frequency, n: usize, j: i64, kind: SchemeKind, epsilon: f64) -> Result<LagrangeScheme> {
    let c = kind.c();
    let eps = BigRational::from_float(epsilon)
        .filter(|e| *e > BigRational::from_integer(0.into()))
        .ok_or_else(|| Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")))?;
    let two = BigRational::from_integer(2.into());
    let width = &c - &two * &eps;
    if width <= BigRational::from_integer(0.into()) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} leaves no room: need eps < c / 2")));
    }
    check_j_range(freq, n, j)?;
    let q = freq.q_u64(n)? as i64;
    let qr = BigRational::from_integer(q.into());
    let threshold = &eps / &two * &width * &qr;
    let mut n0 = None;
    for d in 1..=n {
        let qp = BigRational::from_integer(BigInt::from(freq.q(n - d)?));
        if qp <= threshold {
            n0 = Some(d);
            break;
        }
    }
    let n0 = n0.ok_or_else(|| Error::ScaleTooSmall {
        n,
        reason: format!("no n0 with q_(n - n0) <= (eps/2)(c - 2 eps) q_n = {:.4}", threshold.to_f64().unwrap_or(f64::NAN)),
    })?;
    let qp = freq.q_u64(n - n0)? as i64;
    let s = (&width * &qr / BigRational::from_integer(qp.into())).floor().to_integer().to_i64().unwrap_or(0);
    if s < 1 {
        return Err(Error::ScaleTooSmall { n, reason: "s = 0".into() });
    }
    let w = 2 * s * qp;
    let centre = match kind {
        SchemeKind::HalfSite => j * q + q / 2,
        SchemeKind::FullSite => j * q,
    };
    Ok(LagrangeScheme {
        n,
        kind,
        j,
        q_n: q,
        n0,
        q_prime: qp,
        s,
        i1: (-w, -1),
        i2: (centre - w, centre + w - 1),
        k: 6 * s * qp - 1,
        epsilon,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineRecord {
    pub m: i64,
    /// `min_l ln |sin pi (2 theta + (l + m) alpha)|`.
    pub sum_min: f64,
    /// `min_{l != m} ln |sin pi (l - m) alpha|`.
    pub diff_min: f64,
    pub sum_bound: f64,
    pub diff_bound: f64,
    /// Number of `l` with `|sin pi (2 theta + (l + m) alpha)| < 1 / q_n`.
    pub sum_achievers: usize,
    /// Number of `l != m` with `|sin pi (l - m) alpha| < 1 / q_n`.
    pub diff_achievers: usize,
    /// Achievers counted against the limit: `sum_achievers`, or the `l`
    /// hitting either threshold in the lower half of a full-site `I2`.
    pub achievers: usize,
    pub achiever_limit: usize,
    pub lag: Option<f64>,
    pub lag_bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineMinimaAudit {
    pub scheme: LagrangeScheme,
    pub big_c: f64,
    pub beta_j: f64,
    pub records: Vec<SineRecord>,
    pub minima_pass: bool,
    pub achiever_pass: bool,
    /// `None` when the nodes coincide and the Lagrange terms are undefined.
    pub lag_pass: Option<bool>,
    pub claim_pass: bool,
}

fn ln_sin_pi(d: f64) -> f64 {
    if d == 0.0 {
        f64::NEG_INFINITY
    } else {
        (std::f64::consts::PI * d).sin().ln()
    }
}

/// Minima of `ln |sin|` over the scheme, achiever counts and the claimed
/// Lagrange bounds (`q_n eps` on `I1`, `q_n (beta_j + eps)` on `I2` for
/// half sites; `2 q_n (beta_j + eps)` everywhere for full sites).
pub fn sine_minima_audit(scheme: &LagrangeScheme, freq: &Frequency, theta: &Phase, big_c: f64) -> Result<SineMinimaAudit> {
    let Phase::Resonant { m: mt, .. } = *theta else {
        return Err(Error::HypothesisViolated("the sine-minima claims need 2 theta in alpha Z + Z".into()));
    };
    let red = freq.reducer()?;
    let sites = scheme.sites();
    let q = scheme.q_n as f64;
    let lnq = q.ln();
    let bj = beta_j(freq, scheme.n, scheme.j)?;
    let eps = scheme.epsilon;
    let thr = -lnq;
    let thetas: Vec<f64> = sites.iter().map(|&m| theta.site(freq, m)).collect::<Result<_>>()?;
    let lag = lagrange_terms(&thetas).ok().map(|l| l.values);
    let n1 = (scheme.i1.1 - scheme.i1.0 + 1) as usize;
    let records: Vec<SineRecord> = sites
        .par_iter()
        .enumerate()
        .map(|(idx, &m)| {
            let mut sum_min = f64::INFINITY;
            let mut diff_min = f64::INFINITY;
            let mut sum_ach = 0;
            let mut diff_ach = 0;
            let mut either_ach = 0;
            for &l in &sites {
                let s = ln_sin_pi(red.dist((mt + l + m) as i128)?);
                sum_min = sum_min.min(s);
                let mut hit = s < thr;
                if hit {
                    sum_ach += 1;
                }
                if l != m {
                    let d = ln_sin_pi(red.dist((l - m) as i128)?);
                    diff_min = diff_min.min(d);
                    if d < thr {
                        diff_ach += 1;
                        hit = true;
                    }
                }
                if hit {
                    either_ach += 1;
                }
            }
            let in_i1 = idx < n1;
            let (sum_bound, diff_bound, limit, lag_bound, achievers) = match scheme.kind {
                SchemeKind::HalfSite => {
                    let sb = if in_i1 { -big_c * lnq } else { -bj * q - big_c * lnq };
                    let lb = if in_i1 { q * eps } else { q * (bj + eps) };
                    (sb, -big_c * lnq, 1, lb, sum_ach)
                }
                SchemeKind::FullSite => {
                    let lb = 2.0 * q * (bj + eps);
                    if in_i1 || m < scheme.j * scheme.q_n {
                        (-bj * q - big_c * lnq, -bj * q - big_c * lnq, 1, lb, either_ach)
                    } else {
                        (-bj * q - big_c * lnq, -big_c * lnq, 2, lb, sum_ach)
                    }
                }
            };
            let lag_m = lag.as_ref().map(|v| v[idx]);
            let pass = sum_min >= sum_bound && diff_min >= diff_bound && achievers <= limit && lag_m.is_none_or(|v| v <= lag_bound);
            Ok(SineRecord {
                m,
                sum_min,
                diff_min,
                sum_bound,
                diff_bound,
                sum_achievers: sum_ach,
                diff_achievers: diff_ach,
                achievers,
                achiever_limit: limit,
                lag: lag_m,
                lag_bound,
                pass,
            })
        })
        .collect::<Result<_>>()?;
    let minima_pass = records.iter().all(|r| r.sum_min >= r.sum_bound && r.diff_min >= r.diff_bound);
    let achiever_pass = records.iter().all(|r| r.achievers <= r.achiever_limit);
    let lag_pass = lag.as_ref().map(|_| records.iter().all(|r| r.lag.is_some_and(|v| v <= r.lag_bound)));
    let claim_pass = minima_pass && achiever_pass && lag_pass == Some(true);
    Ok(SineMinimaAudit { scheme: scheme.clone(), big_c, beta_j: bj, records, minima_pass, achiever_pass, lag_pass, claim_pass })
}
