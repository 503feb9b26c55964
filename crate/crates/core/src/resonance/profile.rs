//! Resonant amplitudes `r_j` of an eigenfunction and the inequalities
//! relating them.

use serde::{Deserialize, Serialize};

use crate::cf::{beta_j, Frequency};
use crate::cocycle::OperatorParams;
use crate::error::{Error, Result};
use crate::numerics::LogScalar;
use crate::resonance::scheme::{b_n, check_j_range};
use crate::sites::SiteValues;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplitude {
    /// `2 j`; odd values are the half-integer sites.
    pub twice: i64,
    /// Window `[centre - rho, centre + rho]` with `rho = floor(10 eps q_n)`.
    pub window: (i64, i64),
    pub r: LogScalar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceProfile {
    pub n: usize,
    pub q_n: i64,
    pub epsilon: f64,
    /// `floor(1e-5 q_n)`.
    pub b_n: i64,
    /// `floor(1e-5 q_{n+1})`.
    pub b_next: i64,
    /// Sorted by `twice`.
    pub amplitudes: Vec<Amplitude>,
}

impl ResonanceProfile {
    /// `r_{twice / 2}` if it was computed.
    pub fn r(&self, twice: i64) -> Option<LogScalar> {
        self.amplitudes.binary_search_by_key(&twice, |a| a.twice).ok().map(|i| self.amplitudes[i].r)
    }

    fn need(&self, twice: i64) -> Result<LogScalar> {
        self.r(twice)
            .ok_or_else(|| Error::InvalidArgument(format!("amplitude r_{} not in the profile", twice as f64 / 2.0)))
    }

    /// A profile with given amplitudes and no windows, for synthetic audits.
    pub fn synthetic(n: usize, q_n: i64, epsilon: f64, values: &[(i64, f64)]) -> Self {
        let mut amplitudes: Vec<Amplitude> =
            values.iter().map(|&(t, r)| Amplitude { twice: t, window: (0, -1), r: LogScalar::from_f64(r) }).collect();
        amplitudes.sort_by_key(|a| a.twice);
        ResonanceProfile { n, q_n, epsilon, b_n: q_n / 100_000, b_next: 0, amplitudes }
    }
}

/// Centre of the window for `j = twice / 2`: `j q_n`, or `l q_n + floor(q_n / 2)`
/// for `j = l + 1/2`.
pub fn window_centre(q: i64, twice: i64) -> i64 {
    let l = twice.div_euclid(2);
    if twice.rem_euclid(2) == 0 {
        l * q
    } else {
        l * q + q / 2
    }
}

/// `floor(10 eps q_n)`, with a guard so that an exact product is not lost
/// to rounding.
pub fn window_radius(q: i64, epsilon: f64) -> i64 {
    (10.0 * epsilon * q as f64 + 1e-9).floor() as i64
}

/// `r_j = sup |phi|` over the closed window around each `j` in
/// `j_lo..=j_hi` (integers and half-integers).
pub fn resonance_amplitudes(phi: &SiteValues, freq: &Frequency, n: usize, epsilon: f64, j_lo: i64, j_hi: i64) -> Result<ResonanceProfile> {
    let q = freq.q_u64(n)? as i64;
    let rho = window_radius(q, epsilon);
    let mut amplitudes = Vec::new();
    for twice in 2 * j_lo..=2 * j_hi {
        let c = window_centre(q, twice);
        let (a, b) = (c - rho, c + rho);
        let mut r = LogScalar::ZERO;
        for x in a..=b {
            r = r.max_abs(phi.get(x)?.abs());
        }
        amplitudes.push(Amplitude { twice, window: (a, b), r });
    }
    Ok(ResonanceProfile { n, q_n: q, epsilon, b_n: b_n(freq, n)?, b_next: b_n(freq, n + 1)?, amplitudes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalCheck {
    pub k: i64,
    /// The two neighbouring resonant indices, doubled.
    pub neighbours: (i64, i64),
    pub bound: LogScalar,
    pub actual: LogScalar,
    pub pass: bool,
}

/// `|phi(k)| <= r_a e^{-(L - eps)(d_a - 3 eps q_n)} + r_b e^{-(L - eps)(d_b - 3 eps q_n)}`
/// for the resonant points `a < b` (half a period apart) around `k`, with
/// `d_t = |k - t q_n|`.
pub fn offdiag_decay_check(phi: &SiteValues, profile: &ResonanceProfile, k: i64, big_l: f64) -> Result<OffDiagonalCheck> {
    let q = profile.q_n;
    let eps = profile.epsilon;
    let qf = q as f64;
    let r2 = (2 * k).rem_euclid(q);
    let distance = r2.min(q - r2) as f64 / 2.0;
    let required = 10.0 * eps * qf;
    if distance < required {
        return Err(Error::SiteTooResonant { k, distance, required });
    }
    let l = k.div_euclid(q);
    if (l.unsigned_abs() as f64) > 100.0 * profile.b_next as f64 / qf + 100.0 {
        return Err(Error::HypothesisViolated(format!("|l| = {} beyond the admissible range", l.abs())));
    }
    let (a, b) = if 2 * (k - l * q) <= q { (2 * l, 2 * l + 1) } else { (2 * l + 1, 2 * l + 2) };
    let term = |t: i64| -> Result<LogScalar> {
        let d = (k as f64 - t as f64 / 2.0 * qf).abs();
        Ok(profile.need(t)? * LogScalar::from_log(1, -(big_l - eps) * (d - 3.0 * eps * qf)))
    };
    let bound = term(a)?.add(term(b)?);
    let actual = phi.get(k)?.abs();
    Ok(OffDiagonalCheck { k, neighbours: (a, b), bound, actual, pass: actual.cmp_abs(&bound) != std::cmp::Ordering::Greater })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSiteContraction {
    pub j: i64,
    pub n: usize,
    pub beta_j: f64,
    /// `ln (r_{j+1/2} / (r_j + r_{j+1}))`.
    pub log_ratio: f64,
    /// `-(1/2)(L - 2 beta_j - C eps) q_n`.
    pub log_claimed: f64,
    pub pass: bool,
}

/// `r_{j+1/2} <= e^{-(1/2)(L - 2 beta_j - C eps) q_n} (r_j + r_{j+1})`.
pub fn half_site_contraction(profile: &ResonanceProfile, params: &OperatorParams, j: i64, big_c: f64) -> Result<HalfSiteContraction> {
    let freq = &params.freq;
    let n = profile.n;
    check_j_range(freq, n, j)?;
    let den = profile.need(2 * j)?.add(profile.need(2 * j + 2)?);
    if den.is_zero() {
        return Err(Error::DegenerateDenominator(format!("r_{j} + r_{} = 0", j + 1)));
    }
    let num = profile.need(2 * j + 1)?;
    let bj = beta_j(freq, n, j)?;
    let log_claimed = -0.5 * (params.big_l() - 2.0 * bj - big_c * profile.epsilon) * profile.q_n as f64;
    let log_ratio = if num.is_zero() { f64::NEG_INFINITY } else { (num / den).logmag() };
    Ok(HalfSiteContraction { j, n, beta_j: bj, log_ratio, log_claimed, pass: log_ratio <= log_claimed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullSiteContraction {
    pub j: i64,
    pub n: usize,
    pub beta_j: f64,
    pub r_j: LogScalar,
    /// `e^{-(1/2)(L - 2 beta_j - C eps) q_n} (r_{j+1/2} + r_{j-1/2})`.
    pub half_term: LogScalar,
    /// `e^{-(L - 2 beta_j - C eps) q_n} (r_{j+1} + r_{j-1})`.
    pub full_term: LogScalar,
    pub pass: bool,
}

/// `r_j <= e^{-(1/2) D q_n} (r_{j+1/2} + r_{j-1/2}) + e^{-D q_n} (r_{j+1} + r_{j-1})`
/// with `D = L - 2 beta_j - C eps`, for `j != 0`.
pub fn full_site_contraction(profile: &ResonanceProfile, params: &OperatorParams, j: i64, big_c: f64) -> Result<FullSiteContraction> {
    if j == 0 {
        return Err(Error::HypothesisViolated("the full-site contraction needs j != 0".into()));
    }
    let freq = &params.freq;
    let n = profile.n;
    check_j_range(freq, n, j)?;
    let bj = beta_j(freq, n, j)?;
    let d = (params.big_l() - 2.0 * bj - big_c * profile.epsilon) * profile.q_n as f64;
    let half_term = profile.need(2 * j + 1)?.add(profile.need(2 * j - 1)?) * LogScalar::from_log(1, -0.5 * d);
    let full_term = profile.need(2 * j + 2)?.add(profile.need(2 * j - 2)?) * LogScalar::from_log(1, -d);
    let r_j = profile.need(2 * j)?;
    let pass = r_j.cmp_abs(&half_term.add(full_term)) != std::cmp::Ordering::Greater;
    Ok(FullSiteContraction { j, n, beta_j: bj, r_j, half_term, full_term, pass })
}
