//! Sampled audits of the finite-scale inequalities, emitted as flat records.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cf::Frequency;
use crate::cocycle::{shift_difference, OperatorParams};
use crate::error::{Error, Result};
use crate::greens::{green_bound_audit, numerator_bound_audit, pk_shift_difference};
use crate::numerics::LogScalar;
use crate::phase::Phase;
use crate::resonance::profile::{full_site_contraction, half_site_contraction, offdiag_decay_check, window_radius};
use crate::resonance::{build_scheme, resonance_amplitudes, sine_minima_audit, uniform_witness, SchemeKind};
use crate::sites::SiteValues;
use crate::spectral::{mid_spectrum_pairs, TridiagonalOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AuditKind {
    #[serde(rename = "klem1")]
    ShiftBound,
    #[serde(rename = "klem2")]
    GreenBound,
    #[serde(rename = "numerator")]
    Numerator,
    #[serde(rename = "le_resonant")]
    ResonantDecay,
    #[serde(rename = "claims")]
    SineClaims,
    #[serde(rename = "thm1")]
    HalfSite,
    #[serde(rename = "thm2")]
    FullSite,
    #[serde(rename = "le_uniform")]
    UniformLower,
}

impl AuditKind {
    pub const ALL: [AuditKind; 8] = [
        AuditKind::ShiftBound,
        AuditKind::GreenBound,
        AuditKind::Numerator,
        AuditKind::ResonantDecay,
        AuditKind::SineClaims,
        AuditKind::HalfSite,
        AuditKind::FullSite,
        AuditKind::UniformLower,
    ];

    /// Token used on the command line and in audit records.
    pub fn name(self) -> &'static str {
        match self {
            AuditKind::ShiftBound => "klem1",
            AuditKind::GreenBound => "klem2",
            AuditKind::Numerator => "numerator",
            AuditKind::ResonantDecay => "le_resonant",
            AuditKind::SineClaims => "claims",
            AuditKind::HalfSite => "thm1",
            AuditKind::FullSite => "thm2",
            AuditKind::UniformLower => "le_uniform",
        }
    }
}

impl std::str::FromStr for AuditKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AuditKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = AuditKind::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown audit '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// One audited inequality. `pass` is `None` when the case was not evaluated
/// (hypothesis outside its range, or an error that is reported in `flags`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub lemma: String,
    pub params: serde_json::Value,
    pub measured_log: f64,
    pub bound_log: f64,
    pub pass: Option<bool>,
    pub flags: Vec<String>,
}

impl AuditRecord {
    fn new(kind: AuditKind, params: serde_json::Value, measured: f64, bound: f64, pass: bool) -> Self {
        AuditRecord { lemma: kind.name().into(), params, measured_log: measured, bound_log: bound, pass: Some(pass), flags: Vec::new() }
    }

    fn skipped(kind: AuditKind, params: serde_json::Value, err: &Error) -> Self {
        AuditRecord {
            lemma: kind.name().into(),
            params,
            measured_log: f64::NAN,
            bound_log: f64::NAN,
            pass: None,
            flags: vec![err.to_string()],
        }
    }
}

fn ln(x: LogScalar) -> f64 {
    if x.is_zero() {
        f64::NEG_INFINITY
    } else {
        x.logmag()
    }
}

#[derive(Clone, Debug)]
pub struct AuditSetup {
    pub lambda: f64,
    pub freq: Arc<Frequency>,
    /// Phase for the audits that need a completely resonant one.
    pub theta: Phase,
    pub scales: Vec<usize>,
    pub epsilon: f64,
    pub big_c: f64,
    /// Cases per scale for the randomly sampled audits.
    pub samples: usize,
    pub seed: u64,
    /// Half-width of the truncation used for eigenfunction-based audits.
    pub truncation: i64,
    /// Eigenpairs used by the eigenfunction-based audits.
    pub eigenpairs: usize,
    /// `epsilon` for the resonance windows (must be below 1/40).
    pub window_epsilon: f64,
}

impl AuditSetup {
    fn params(&self, theta: Phase, energy: f64) -> Result<OperatorParams> {
        OperatorParams::new(self.lambda, self.freq.clone(), theta, energy)
    }

    fn rng(&self, kind: AuditKind, n: usize) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(((kind as u64) << 32) | n as u64);
        r
    }

    /// Eigenvalues of a small truncation at a random real phase, used as
    /// energies in the spectrum.
    fn energies(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let theta = Phase::Real { value: rng.gen::<f64>() };
        let op = TridiagonalOperator::new(&self.params(theta, 0.0)?, 100)?;
        Ok(op.eigenvalues())
    }
}

/// Runs one audit over all configured scales. Records come out in a fixed
/// order regardless of thread count.
pub fn run_audit(setup: &AuditSetup, kind: AuditKind) -> Result<Vec<AuditRecord>> {
    let mut out = Vec::new();
    match kind {
        AuditKind::ResonantDecay | AuditKind::HalfSite | AuditKind::FullSite => {
            out.extend(eigen_audits(setup, kind)?);
        }
        _ => {
            for &n in &setup.scales {
                out.extend(match kind {
                    AuditKind::ShiftBound => shift_bound(setup, n)?,
                    AuditKind::GreenBound => green_bound(setup, n)?,
                    AuditKind::Numerator => numerator(setup, n)?,
                    AuditKind::SineClaims => sine_claims(setup, n)?,
                    AuditKind::UniformLower => uniform_lower(setup, n)?,
                    _ => unreachable!(),
                });
            }
        }
    }
    Ok(out)
}

/// Matrix and determinant shift differences at `0 < k <= 10 q_n`,
/// `0 < j <= C q_{n+1}/q_n + C`, random energies in the spectrum and random
/// real phases.
pub fn shift_bound(setup: &AuditSetup, n: usize) -> Result<Vec<AuditRecord>> {
    let mut rng = setup.rng(AuditKind::ShiftBound, n);
    let q = setup.freq.q_u64(n)? as i64;
    let q1 = setup.freq.q_u64(n + 1)? as f64;
    let cap = ((setup.big_c * q1 / q as f64 + setup.big_c).floor() as i64).max(1);
    let energies = setup.energies(&mut rng)?;
    let cases: Vec<(f64, f64, i64, i64)> = (0..setup.samples)
        .map(|_| (energies[rng.gen_range(0..energies.len())], rng.gen::<f64>(), rng.gen_range(1..=10 * q), rng.gen_range(1..=cap)))
        .collect();
    let rows: Vec<Vec<AuditRecord>> = cases
        .par_iter()
        .map(|&(e, th, k, j)| {
            let p = setup.params(Phase::Real { value: th }, e)?;
            let mut v = Vec::new();
            for (form, r) in [
                ("matrix", shift_difference(&p, k, j, n, setup.epsilon)?),
                ("determinant", pk_shift_difference(&p, k, j, n, setup.epsilon)?),
            ] {
                let params = json!({
                    "form": form, "lambda": setup.lambda, "energy": e, "theta": th,
                    "n": n, "q_n": q, "k": k, "j": j, "epsilon": setup.epsilon,
                });
                let mut rec = AuditRecord::new(AuditKind::ShiftBound, params, ln(r.measured), ln(r.bound), r.pass);
                if r.high_precision {
                    rec.flags.push("high_precision".into());
                }
                v.push(rec);
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Witness search over `q_n` consecutive phases `theta + x alpha`,
/// `x0 <= x < x0 + q_n`, so `k = q_n - 1`.
pub fn uniform_lower(setup: &AuditSetup, n: usize) -> Result<Vec<AuditRecord>> {
    let mut rng = setup.rng(AuditKind::UniformLower, n);
    let q = setup.freq.q_u64(n)? as i64;
    let energies = setup.energies(&mut rng)?;
    let cases: Vec<(f64, f64, i64)> = (0..setup.samples)
        .map(|_| (energies[rng.gen_range(0..energies.len())], rng.gen::<f64>(), rng.gen_range(1..=q)))
        .collect();
    cases
        .iter()
        .map(|&(e, th, x0)| {
            let base = Phase::Real { value: th };
            let p = setup.params(base, e)?;
            let phases: Vec<Phase> = (x0..x0 + q).map(|x| base.shifted(&setup.freq, x)).collect::<Result<_>>()?;
            let w = uniform_witness(&p, &phases)?;
            let params = json!({
                "lambda": setup.lambda, "energy": e, "theta": th, "n": n, "k": q - 1,
                "x0": x0, "m": w.m, "lag": w.lag,
            });
            Ok(AuditRecord::new(AuditKind::UniformLower, params, ln(w.lhs), ln(w.rhs), w.pass))
        })
        .collect()
}

/// Determinant upper bounds at the configured resonant phase with random
/// `x in [0, q_n/4]`, `p1` near `q_n/2` and `p2` near `q_n`.
pub fn green_bound(setup: &AuditSetup, n: usize) -> Result<Vec<AuditRecord>> {
    let mut rng = setup.rng(AuditKind::GreenBound, n);
    let q = setup.freq.q_u64(n)? as i64;
    let spread = ((20.0 * setup.epsilon * q as f64).floor() as i64).min(q / 4);
    let op = TridiagonalOperator::new(&setup.params(setup.theta, 0.0)?, 100)?;
    let energies = op.eigenvalues();
    let mut out = Vec::new();
    for _ in 0..setup.samples {
        let e = energies[rng.gen_range(0..energies.len())];
        let x = rng.gen_range(0..=q / 4);
        let p1 = q / 2 + rng.gen_range(-spread..=spread);
        let p2 = q + rng.gen_range(-spread..=spread);
        let base = json!({"lambda": setup.lambda, "energy": e, "n": n, "x": x, "p1": p1, "p2": p2, "epsilon": setup.epsilon, "C": setup.big_c});
        match green_bound_audit(&setup.params(setup.theta, e)?, n, x, p1, p2, setup.epsilon, setup.big_c) {
            Ok(a) => {
                for b in &a.bounds {
                    let mut params = base.clone();
                    params["box"] = json!([b.x1, b.x2]);
                    let mut rec = AuditRecord::new(AuditKind::GreenBound, params, b.measured_log, b.bound_log, b.pass);
                    if b.cancellation {
                        rec.flags.push("cancellation".into());
                    }
                    out.push(rec);
                }
            }
            Err(err @ Error::HypothesisViolated(_)) => out.push(AuditRecord::skipped(AuditKind::GreenBound, base, &err)),
            Err(err) => return Err(err),
        }
    }
    Ok(out)
}

/// `|P_[x1,x2]| <= e^{(L+eps)|x2-x1|}` on random boxes of length between
/// `q_n` and `10 q_n`.
pub fn numerator(setup: &AuditSetup, n: usize) -> Result<Vec<AuditRecord>> {
    let mut rng = setup.rng(AuditKind::Numerator, n);
    let q = setup.freq.q_u64(n)? as i64;
    let energies = setup.energies(&mut rng)?;
    let mut out = Vec::new();
    for _ in 0..setup.samples {
        let e = energies[rng.gen_range(0..energies.len())];
        let th = rng.gen::<f64>();
        let x1 = rng.gen_range(-10 * q..=10 * q);
        let x2 = x1 + rng.gen_range(q..=10 * q) - 1;
        let a = numerator_bound_audit(&setup.params(Phase::Real { value: th }, e)?, x1, x2, setup.epsilon, q)?;
        let params = json!({"lambda": setup.lambda, "energy": e, "theta": th, "n": n, "x1": x1, "x2": x2, "epsilon": setup.epsilon});
        out.push(AuditRecord {
            lemma: AuditKind::Numerator.name().into(),
            params,
            measured_log: ln(a.measured),
            bound_log: ln(a.bound),
            pass: a.pass,
            flags: Vec::new(),
        });
    }
    Ok(out)
}

/// Sine minima and Lagrange bounds for the half-site scheme at `j = 0` and
/// the full-site scheme at `j = 1`.
pub fn sine_claims(setup: &AuditSetup, n: usize) -> Result<Vec<AuditRecord>> {
    let mut out = Vec::new();
    for (kind, j) in [(SchemeKind::HalfSite, 0), (SchemeKind::FullSite, 1)] {
        let base = json!({"n": n, "scheme": kind, "j": j, "epsilon": setup.window_epsilon, "C": setup.big_c});
        let scheme = match build_scheme(&setup.freq, n, j, kind, setup.window_epsilon) {
            Ok(s) => s,
            Err(err @ (Error::ScaleTooSmall { .. } | Error::HypothesisViolated(_))) => {
                out.push(AuditRecord::skipped(AuditKind::SineClaims, base, &err));
                continue;
            }
            Err(e) => return Err(e),
        };
        let a = match sine_minima_audit(&scheme, &setup.freq, &setup.theta, setup.big_c) {
            Ok(a) => a,
            Err(err @ Error::HypothesisViolated(_)) => {
                out.push(AuditRecord::skipped(AuditKind::SineClaims, base, &err));
                continue;
            }
            Err(e) => return Err(e),
        };
        let worst = a.records.iter().filter_map(|r| r.lag.map(|l| l - r.lag_bound)).fold(f64::NEG_INFINITY, f64::max);
        let max_achievers = a.records.iter().map(|r| r.achievers).max().unwrap_or(0);
        let mut params = base;
        params["sites"] = json!(scheme.size());
        params["s"] = json!(scheme.s);
        params["n0"] = json!(scheme.n0);
        params["beta_j"] = json!(a.beta_j);
        params["max_achievers"] = json!(max_achievers);
        let mut rec = AuditRecord::new(AuditKind::SineClaims, params, worst, 0.0, a.claim_pass);
        for (flag, ok) in [("minima", a.minima_pass), ("achievers", a.achiever_pass), ("lagrange", a.lag_pass.unwrap_or(false))] {
            if !ok {
                rec.flags.push(format!("{flag}_failed"));
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// Eigenfunctions of the truncation at the configured phase, recentred at
/// their maxima.
pub fn centred_eigenfunctions(setup: &AuditSetup) -> Result<Vec<(OperatorParams, SiteValues)>> {
    let p = setup.params(setup.theta, 0.0)?;
    let op = TridiagonalOperator::new(&p, setup.truncation)?;
    mid_spectrum_pairs(&op, setup.eigenpairs, 1e-8)
        .iter()
        .map(|pair| {
            let (phase, phi) = pair.centered(&p)?;
            Ok((p.with_theta(phase).with_energy(pair.energy), phi))
        })
        .collect()
}

fn eigen_audits(setup: &AuditSetup, kind: AuditKind) -> Result<Vec<AuditRecord>> {
    let eps = setup.window_epsilon;
    let funcs = centred_eigenfunctions(setup)?;
    let mut out = Vec::new();
    for (idx, (p, phi)) in funcs.iter().enumerate() {
        let side = (-phi.lo).min(phi.hi());
        for &n in &setup.scales {
            let q = setup.freq.q_u64(n)? as i64;
            let reach = (side - window_radius(q, eps) - q / 2) / q;
            if reach < 1 {
                continue;
            }
            let prof = resonance_amplitudes(phi, &setup.freq, n, eps, -reach, reach)?;
            let base = json!({"pair": idx, "energy": p.energy, "lambda": setup.lambda, "n": n, "q_n": q, "epsilon": eps, "C": setup.big_c});
            let with_j = |j: i64| {
                let mut b = base.clone();
                b["j"] = json!(j);
                b
            };
            match kind {
                AuditKind::HalfSite => {
                    for j in -reach..reach {
                        let params = with_j(j);
                        match half_site_contraction(&prof, p, j, setup.big_c) {
                            Ok(h) => out.push(AuditRecord::new(kind, params, h.log_ratio, h.log_claimed, h.pass)),
                            Err(err @ (Error::DegenerateDenominator(_) | Error::HypothesisViolated(_))) => {
                                out.push(AuditRecord::skipped(kind, params, &err))
                            }
                            Err(e) => return Err(e),
                        }
                    }
                }
                AuditKind::FullSite => {
                    for j in (-reach + 1..reach).filter(|&j| j != 0) {
                        let params = with_j(j);
                        match full_site_contraction(&prof, p, j, setup.big_c) {
                            Ok(f) => {
                                let rhs = f.half_term.add(f.full_term);
                                out.push(AuditRecord::new(kind, params, ln(f.r_j), ln(rhs), f.pass));
                            }
                            Err(err @ Error::HypothesisViolated(_)) => out.push(AuditRecord::skipped(kind, params, &err)),
                            Err(e) => return Err(e),
                        }
                    }
                }
                AuditKind::ResonantDecay => {
                    // midpoints between consecutive resonant sites
                    for t in -2 * reach + 1..2 * reach - 1 {
                        let k = (t as f64 * q as f64 / 2.0 + q as f64 / 4.0).round() as i64;
                        let mut params = base.clone();
                        params["k"] = json!(k);
                        match offdiag_decay_check(phi, &prof, k, p.big_l()) {
                            Ok(c) => out.push(AuditRecord::new(kind, params, ln(c.actual), ln(c.bound), c.pass)),
                            Err(err @ (Error::SiteTooResonant { .. } | Error::HypothesisViolated(_) | Error::InvalidArgument(_))) => {
                                out.push(AuditRecord::skipped(kind, params, &err))
                            }
                            Err(e) => return Err(e),
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    Ok(out)
}

/// Fraction of evaluated records that pass; `None` when nothing was evaluated.
pub fn pass_fraction(records: &[AuditRecord]) -> Option<f64> {
    let done: Vec<bool> = records.iter().filter_map(|r| r.pass).collect();
    if done.is_empty() {
        None
    } else {
        Some(done.iter().filter(|&&b| b).count() as f64 / done.len() as f64)
    }
}
