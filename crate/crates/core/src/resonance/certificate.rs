//! Iteration of the contraction inequalities into amplitude bounds and a
//! decay rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resonance::profile::ResonanceProfile;
use crate::sites::SiteValues;

/// Ceiling on reported rates (used when the audited amplitudes vanish).
pub const RATE_CAP: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub twice: i64,
    /// `ln` of `(2l+2) q_n e^{-D l q_n}` for `j = l`, or
    /// `(2l+2) q_n e^{-D (l - 1/2) q_n}` for `j = l - 1/2`.
    pub closed_form_log: f64,
    /// `ln` of the bound after iterating the two contraction inequalities.
    pub iterated_log: f64,
    pub measured_log: Option<f64>,
    /// Measured amplitude below the closed-form bound.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCertificate {
    pub n: usize,
    pub q_n: i64,
    /// `L - 2 beta - C eps`.
    pub exponent: f64,
    pub rows: Vec<CertificateRow>,
    /// Closed-form bounds decrease with `|j|`.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub scales: Vec<ScaleCertificate>,
    /// `min -ln(phi(k)^2 + phi(k-1)^2) / (2|k|)` over the audited sites.
    pub final_rate: f64,
    /// `ln|lambda| - 2 beta`.
    pub theorem_rate: f64,
    pub audited: (i64, i64),
    /// Set when the rate was clamped to [`RATE_CAP`].
    pub clamped: bool,
}

fn scale_certificate(p: &ResonanceProfile, big_l: f64, beta: f64, big_c: f64) -> ScaleCertificate {
    let q = p.q_n as f64;
    let d = big_l - 2.0 * beta - big_c * p.epsilon;
    let top = p.amplitudes.iter().map(|a| a.twice.abs()).max().unwrap_or(0);
    // seeds: measured amplitudes, else |r_j| <= (|j| + 1) q_n
    let seed = |t: i64| -> f64 {
        match p.r(t) {
            Some(r) if r.is_zero() => f64::NEG_INFINITY,
            Some(r) => r.logmag(),
            None => ((t.abs() / 2 + 1) as f64 * q).ln(),
        }
    };
    let span = top + 2;
    let idx = |t: i64| (t + span) as usize;
    let mut b: Vec<f64> = (-span..=span).map(seed).collect();
    let get = |b: &Vec<f64>, t: i64| if t.abs() > span { seed(t) } else { b[idx(t)] };
    let sweeps = (top + 1).max(2);
    for _ in 0..sweeps {
        for t in 1..=top {
            for sgn in [1i64, -1] {
                let tt = sgn * t;
                let cur = get(&b, tt);
                let new = if t % 2 == 1 {
                    // r_{j - 1/2} <= e^{-D q/2} max(r_{j-1}, r_j)
                    -0.5 * d * q + get(&b, tt - sgn).max(get(&b, tt + sgn))
                } else {
                    // r_j <= max_t e^{-|t| D q} r_{j+t}, t in {+-1, +-1/2}
                    [(-2, 1.0), (-1, 0.5), (1, 0.5), (2, 1.0)]
                        .iter()
                        .map(|&(o, w)| -w * d * q + get(&b, tt + o))
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                b[idx(tt)] = cur.min(new);
            }
        }
    }
    let mut rows = Vec::new();
    for t in (1..=top).flat_map(|t| [-t, t]) {
        let a = t.abs();
        let l = (a + 1) / 2;
        let closed = ((2 * l + 2) as f64 * q).ln() - d * (a as f64 / 2.0) * q;
        let measured_log = p.r(t).map(|r| if r.is_zero() { f64::NEG_INFINITY } else { r.logmag() });
        rows.push(CertificateRow {
            twice: t,
            closed_form_log: closed,
            iterated_log: b[idx(t)],
            measured_log,
            pass: measured_log.map(|m| m <= closed),
        });
    }
    rows.sort_by_key(|r| r.twice);
    let pos: Vec<f64> = rows.iter().filter(|r| r.twice > 0).map(|r| r.closed_form_log).collect();
    let monotone = pos.windows(2).all(|w| w[1] <= w[0]);
    ScaleCertificate { n: p.n, q_n: p.q_n, exponent: d, rows, monotone }
}

/// Per-scale amplitude bounds plus the observed decay rate of `phi` on
/// `audited.0 <= |k| <= audited.1`.
pub fn decay_certificate(
    profiles: &[ResonanceProfile],
    phi: &SiteValues,
    big_l: f64,
    beta: f64,
    big_c: f64,
    audited: (i64, i64),
) -> Result<DecayCertificate> {
    if profiles.is_empty() {
        return Err(Error::InsufficientProfiles("no resonance profiles supplied".into()));
    }
    let scales = profiles.iter().map(|p| scale_certificate(p, big_l, beta, big_c)).collect();
    let mut rate = f64::INFINITY;
    for k in audited.0.max(1)..=audited.1 {
        for kk in [k, -k] {
            let inner = if kk > 0 { kk - 1 } else { kk + 1 };
            let (Ok(a), Ok(b)) = (phi.get(kk), phi.get(inner)) else { continue };
            let s = (a * a).add(b * b);
            let r = if s.is_zero() { f64::INFINITY } else { -s.logmag() / (2 * k) as f64 };
            rate = rate.min(r);
        }
    }
    let clamped = rate > RATE_CAP;
    Ok(DecayCertificate {
        scales,
        final_rate: rate.min(RATE_CAP),
        theorem_rate: big_l - 2.0 * beta,
        audited,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::LogScalar;

    #[test]
    fn iteration_at_one_from_seeds() {
        let q = 34;
        let phi = SiteValues::from_fn(-5, 5, |_| LogScalar::ONE);
        let prof = ResonanceProfile::synthetic(8, q, 0.01, &[(2, 1.0)]);
        let c = decay_certificate(&[prof], &phi, 4f64.ln(), 0.0, 10.0, (1, 3)).unwrap();
        let s = &c.scales[0];
        let row = s.rows.iter().find(|r| r.twice == 2).unwrap();
        let d = 4f64.ln() - 0.1;
        let want = (4.0 * q as f64).ln() - d * q as f64;
        assert!((row.closed_form_log - want).abs() < 1e-12);
        assert!(s.monotone);
    }

    #[test]
    fn iteration_never_exceeds_closed_form() {
        let q = 89;
        let vals: Vec<(i64, f64)> = (-8..=8).map(|t| (t, 1.0)).collect();
        let prof = ResonanceProfile::synthetic(10, q, 0.01, &vals);
        let phi = SiteValues::from_fn(-5, 5, |_| LogScalar::ONE);
        let c = decay_certificate(&[prof], &phi, 3f64.ln(), 0.0, 10.0, (1, 3)).unwrap();
        assert!(c.scales[0].rows.iter().all(|r| r.iterated_log <= 1e-12 || r.iterated_log <= r.closed_form_log));
    }

    #[test]
    fn vanishing_tail_is_clamped() {
        let prof = ResonanceProfile::synthetic(8, 34, 0.01, &[(0, 1.0)]);
        let phi = SiteValues::from_fn(-50, 50, |x| if x == 0 { LogScalar::ONE } else { LogScalar::ZERO });
        let c = decay_certificate(&[prof], &phi, 4f64.ln(), 0.0, 10.0, (5, 40)).unwrap();
        assert!(c.clamped && c.final_rate == RATE_CAP);
    }

    #[test]
    fn needs_profiles() {
        let phi = SiteValues::from_fn(-5, 5, |_| LogScalar::ONE);
        assert!(matches!(decay_certificate(&[], &phi, 1.0, 0.0, 10.0, (1, 2)), Err(Error::InsufficientProfiles(_))));
    }
}
