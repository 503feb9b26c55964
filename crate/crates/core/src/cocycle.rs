//! Schrodinger cocycle of the almost Mathieu operator.
//!
//! One step is `A(t) = [[E - 2 lambda cos 2 pi t, -1], [1, 0]]` and
//! `A_k(theta) = A(theta + (k-1) alpha) ... A(theta)`, with `A_0 = I` and
//! `A_{-k}(theta) = A_k(theta - k alpha)^{-1}`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::Frequency;
use crate::error::{Error, Result};
use crate::numerics::{
    mat_add, mat_mul, spectral_norm, ExtReal, HpFloat, LogScalar, Mat2, PrecisionMode, ScaledMatrix2,
    ScaledVec2, IDENTITY,
};
use crate::phase::{HpPhases, Phase};

/// Default limit on `|k|` for transfer products.
pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;

/// Above this value of `k ln|lambda|` the automatic precision mode switches
/// to software floats for shift differences.
pub const HP_SWITCH: f64 = 600.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub lambda: f64,
    pub freq: Arc<Frequency>,
    pub theta: Phase,
    pub energy: f64,
    #[serde(default)]
    pub precision: PrecisionMode,
    #[serde(default = "default_budget")]
    pub step_budget: u64,
}

fn default_budget() -> u64 {
    DEFAULT_STEP_BUDGET
}

impl OperatorParams {
    pub fn new(lambda: f64, freq: Arc<Frequency>, theta: Phase, energy: f64) -> Result<Self> {
        // lambda = 0 (the free operator) is accepted for comparisons
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be finite, got {lambda}")));
        }
        if !energy.is_finite() {
            return Err(Error::InvalidArgument(format!("energy must be finite, got {energy}")));
        }
        Ok(OperatorParams { lambda, freq, theta, energy, precision: PrecisionMode::Auto, step_budget: DEFAULT_STEP_BUDGET })
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        OperatorParams { energy, ..self.clone() }
    }

    pub fn with_theta(&self, theta: Phase) -> Self {
        OperatorParams { theta, ..self.clone() }
    }

    /// `L = ln|lambda|`, the Lyapunov exponent on the spectrum for `|lambda| > 1`.
    pub fn big_l(&self) -> f64 {
        self.lambda.abs().ln()
    }

    /// `2 lambda cos 2 pi (theta + x alpha)`.
    pub fn potential(&self, x: i64) -> Result<f64> {
        Ok(2.0 * self.lambda * (2.0 * std::f64::consts::PI * self.theta.site(&self.freq, x)?).cos())
    }

    /// Potential on `lo..=hi`.
    pub fn potentials(&self, lo: i64, hi: i64) -> Result<Vec<f64>> {
        Ok(self.theta.cos_sites(&self.freq, lo, hi)?.into_iter().map(|c| 2.0 * self.lambda * c).collect())
    }

    /// Warns when `ln|lambda| <= 2 beta` at the working depth.
    pub fn regime_warning(&self, beta: f64) -> Option<String> {
        if self.big_l() <= 2.0 * beta {
            Some(format!("ln|lambda| = {:.4} <= 2 beta_est = {:.4}: outside the localization regime", self.big_l(), 2.0 * beta))
        } else {
            None
        }
    }

    pub(crate) fn check_budget(&self, k: i64) -> Result<()> {
        if k.unsigned_abs() > self.step_budget {
            return Err(Error::BudgetExceeded { requested: k.unsigned_abs(), budget: self.step_budget });
        }
        Ok(())
    }
}

/// `[[E - 2 lambda cos 2 pi t, -1], [1, 0]]`.
pub fn step_matrix(params: &OperatorParams, phase: f64) -> Mat2 {
    let v = 2.0 * params.lambda * (2.0 * std::f64::consts::PI * phase).cos();
    [[params.energy - v, -1.0], [1.0, 0.0]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferProduct {
    pub k: i64,
    pub base_phase: Phase,
    pub matrix: ScaledMatrix2,
}

impl TransferProduct {
    pub fn log_norm(&self) -> f64 {
        self.matrix.log_norm()
    }
}

/// `A_k(base)`, for any sign of `k`, in binary64 with exponent tracking.
pub fn transfer(params: &OperatorParams, k: i64, base: &Phase) -> Result<TransferProduct> {
    params.check_budget(k)?;
    let freq = &params.freq;
    let mut m = ScaledMatrix2::identity();
    if k > 0 {
        for j in 0..k {
            m = m.premul(&step_matrix(params, base.site(freq, j)?));
        }
    } else {
        for j in 1..=(-k) {
            let a = step_matrix(params, base.site(freq, -j)?);
            let inv = [[0.0, 1.0], [-1.0, a[0][0]]];
            m = m.premul(&inv);
        }
    }
    Ok(TransferProduct { k, base_phase: *base, matrix: m })
}

/// `A_k(theta + offset alpha)` with `theta = params.theta`.
pub fn transfer_at(params: &OperatorParams, k: i64, offset: i64) -> Result<TransferProduct> {
    transfer(params, k, &params.theta.shifted(&params.freq, offset)?)
}

/// 2x2 matrix in software floats.
pub type HpMat = [[HpFloat; 2]; 2];

fn hp_mul(a: &HpMat, b: &HpMat) -> HpMat {
    let e = |i: usize, j: usize| a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// `A_k(base)` for `k >= 0` in software floats of `bits` bits.
pub fn transfer_hp(params: &OperatorParams, k: i64, base: &Phase, bits: usize) -> Result<HpMat> {
    params.check_budget(k)?;
    if k < 0 {
        return Err(Error::InvalidArgument("software-float transfer supports k >= 0".into()));
    }
    let mut ph = HpPhases::new(&params.freq, base, bits, k.unsigned_abs() + 1)?;
    let p = ph.bits();
    let z = HpFloat::zero(p);
    let one = HpFloat::from_f64(1.0, p);
    let e = HpFloat::from_f64(params.energy, p);
    let lam = HpFloat::from_f64(params.lambda, p);
    let mut m: HpMat = [[one.clone(), z.clone()], [z.clone(), one.clone()]];
    for j in 0..k {
        let c = e.sub(&lam.mul(&ph.potential(j)));
        let a: HpMat = [[c, one.neg()], [one.clone(), z.clone()]];
        m = hp_mul(&a, &m);
    }
    Ok(m)
}

pub fn hp_to_scaled(m: &HpMat) -> ScaledMatrix2 {
    let e = |i: usize, j: usize| m[i][j].to_log_scalar();
    let d = m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])).to_log_scalar();
    ScaledMatrix2::from_entries(&[[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]], d)
}

/// `(phi(m + k), phi(m + k - 1)) = A_k(theta + m alpha) (phi(m), phi(m - 1))`,
/// propagated one step at a time.
pub fn propagate(params: &OperatorParams, pair: [LogScalar; 2], m: i64, k: i64) -> Result<[LogScalar; 2]> {
    params.check_budget(k)?;
    let mut v = ScaledVec2::new(pair);
    if k >= 0 {
        for x in m..m + k {
            v = v.step(params.energy - params.potential(x)?);
        }
    } else {
        for x in (m + k..m).rev() {
            // recovers phi(x - 1) from (phi(x + 1), phi(x))
            v = v.step_back(params.energy - params.potential(x)?);
        }
    }
    Ok(v.to_log())
}

/// Solution of `u(n+1) + u(n-1) + v(n) u(n) = E u(n)` on `lo..=hi` from the
/// pair `(u(m), u(m-1))`, `lo < m <= hi`.
pub fn solution(params: &OperatorParams, pair: [LogScalar; 2], m: i64, lo: i64, hi: i64) -> Result<Vec<LogScalar>> {
    if !(lo < m && m <= hi) {
        return Err(Error::InvalidArgument(format!("need lo < m <= hi, got {lo} {m} {hi}")));
    }
    params.check_budget(hi - lo)?;
    let n = (hi - lo + 1) as usize;
    let mut out = vec![LogScalar::ZERO; n];
    out[(m - lo) as usize] = pair[0];
    out[(m - 1 - lo) as usize] = pair[1];
    let mut v = ScaledVec2::new(pair);
    for x in m..hi {
        v = v.step(params.energy - params.potential(x)?);
        out[(x + 1 - lo) as usize] = v.get(0);
    }
    let mut v = ScaledVec2::new(pair);
    for x in (lo + 1..m).rev() {
        v = v.step_back(params.energy - params.potential(x)?);
        out[(x - 1 - lo) as usize] = v.get(1);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub theta: f64,
    pub k: i64,
    pub log_norm: f64,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub energy: f64,
    pub mean: f64,
    pub per_theta: Vec<LyapunovSample>,
}

/// Sum by fixed-order pairwise reduction.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        n => pairwise_sum(&x[..n / 2]) + pairwise_sum(&x[n / 2..]),
    }
}

/// Mean of `(1/k) ln ||A_k(theta_i)||` over `theta_i = (i + 1/2) / samples`.
pub fn lyapunov(params: &OperatorParams, k: i64, samples: usize) -> Result<LyapunovEstimate> {
    if k < 1 || samples < 1 {
        return Err(Error::InvalidArgument("lyapunov needs k >= 1 and samples >= 1".into()));
    }
    let per: Result<Vec<LyapunovSample>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let theta = (i as f64 + 0.5) / samples as f64;
            let t = transfer(params, k, &Phase::Real { value: theta })?;
            let log_norm = t.log_norm();
            Ok(LyapunovSample { theta, k, log_norm, estimate: log_norm / k as f64 })
        })
        .collect();
    let per = per?;
    let est: Vec<f64> = per.iter().map(|s| s.estimate).collect();
    Ok(LyapunovEstimate { energy: params.energy, mean: pairwise_sum(&est) / samples as f64, per_theta: per })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperAudit {
    pub k: i64,
    pub max_estimate: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Finite-`k` audit of `max_theta (1/k) ln ||A_k(theta)|| <= L + eps` over
/// the given `ks`; also returns the empirical threshold: the smallest listed
/// `k` from which every larger listed `k` passes.
pub fn lyapunov_upper_audit(params: &OperatorParams, ks: &[i64], samples: usize, eps: f64) -> Result<(Vec<UpperAudit>, Option<i64>)> {
    let bound = params.big_l() + eps;
    let mut out = Vec::new();
    for &k in ks {
        let e = lyapunov(params, k, samples)?;
        let mx = e.per_theta.iter().map(|s| s.estimate).fold(f64::NEG_INFINITY, f64::max);
        out.push(UpperAudit { k, max_estimate: mx, bound, pass: mx <= bound });
    }
    let mut k0 = None;
    for a in out.iter().rev() {
        if a.pass {
            k0 = Some(a.k);
        } else {
            break;
        }
    }
    Ok((out, k0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftDifference {
    pub k: i64,
    pub j: i64,
    pub n: usize,
    pub measured: LogScalar,
    pub bound: LogScalar,
    pub pass: bool,
    pub high_precision: bool,
}

/// Mantissa bits for a `k`-step difference in software floats: enough to
/// absorb the gap between the naive growth of the factors and `e^(Lk)`.
pub fn hp_bits_for(params: &OperatorParams, k: i64) -> usize {
    let naive = (2.0 * params.lambda.abs() + params.energy.abs() + 2.0).ln();
    let gap = (naive - params.big_l()).max(0.5) * k as f64 / std::f64::consts::LN_2;
    (192 + gap.ceil() as usize).div_ceil(64) * 64
}

/// `||A_k(theta) - A_k(theta + j q_n alpha)||` against `e^{(L+eps)k} j / q_{n+1}`.
pub fn shift_difference(params: &OperatorParams, k: i64, j: i64, n: usize, eps: f64) -> Result<ShiftDifference> {
    if k <= 0 || j < 0 {
        return Err(Error::InvalidArgument("shift difference needs k > 0 and j >= 0".into()));
    }
    let freq = &params.freq;
    let qn = freq.q_u64(n)? as i64;
    let ln_q1 = freq.ln_q(n + 1)?;
    let big_l = params.big_l();
    let bound = if j == 0 {
        LogScalar::ZERO
    } else {
        LogScalar::from_log(1, (big_l + eps) * k as f64 + (j as f64).ln() - ln_q1)
    };
    if j == 0 {
        return Ok(ShiftDifference { k, j, n, measured: LogScalar::ZERO, bound, pass: true, high_precision: false });
    }
    let shifted = params.theta.shifted(freq, j * qn)?;
    let use_hp = match params.precision {
        PrecisionMode::Binary64 => false,
        PrecisionMode::High { .. } => true,
        PrecisionMode::Auto => k as f64 * big_l > HP_SWITCH,
    };
    let measured = if use_hp {
        let bits = match params.precision {
            PrecisionMode::High { bits } => bits.max(hp_bits_for(params, k)),
            _ => hp_bits_for(params, k),
        };
        let a = transfer_hp(params, k, &params.theta, bits)?;
        let b = transfer_hp(params, k, &shifted, bits)?;
        let d: HpMat = [[a[0][0].sub(&b[0][0]), a[0][1].sub(&b[0][1])], [a[1][0].sub(&b[1][0]), a[1][1].sub(&b[1][1])]];
        hp_to_scaled(&d).norm()
    } else {
        let a = transfer(params, k, &params.theta)?;
        let b = transfer(params, k, &shifted)?;
        a.matrix.sub(&b.matrix).norm()
    };
    let pass = measured.cmp_abs(&bound) != std::cmp::Ordering::Greater;
    Ok(ShiftDifference { k, j, n, measured, bound, pass, high_precision: use_hp })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Telescoping {
    pub lhs: LogScalar,
    pub rhs: LogScalar,
    pub pass: bool,
}

/// Largest window ratio `||A^{k+j-1} ... A^k|| / (D e^{dj})`.
pub fn window_ratio(a: &[Mat2], big_d: f64, d: f64) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..a.len() {
        let mut p = ScaledMatrix2::identity();
        for (j, m) in a[k..].iter().enumerate() {
            p = p.premul(m);
            let r = p.log_norm() - big_d.ln() - d * (j + 1) as f64;
            worst = worst.max(r.exp());
        }
    }
    worst
}

/// Perturbed product bound for `(A^n + B^n) ... (A^1 + B^1) - A^n ... A^1`.
pub fn telescoping_bound(a: &[Mat2], b: &[Mat2], big_d: f64, d: f64) -> Result<Telescoping> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("A and B sequences differ in length".into()));
    }
    let w = window_ratio(a, big_d, d);
    if w > 1.0 + 1e-12 {
        return Err(Error::HypothesisViolated(format!(
            "window products exceed D e^(dj) by a factor {w:.6} for D = {big_d}, d = {d}"
        )));
    }
    let mut pa = ScaledMatrix2::identity();
    let mut pab = ScaledMatrix2::identity();
    let mut s = 0.0;
    for (ai, bi) in a.iter().zip(b) {
        pa = pa.premul(ai);
        pab = pab.premul(&mat_add(ai, bi));
        s += (big_d * (-d).exp() * spectral_norm(bi)).ln_1p();
    }
    let lhs = pab.sub(&pa).norm();
    let rhs = if s == 0.0 {
        LogScalar::ZERO
    } else {
        LogScalar::from_f64(big_d) * LogScalar::from_log(1, d * a.len() as f64) * LogScalar::from_f64(s.exp_m1())
    };
    let pass = lhs.cmp_abs(&rhs) != std::cmp::Ordering::Greater;
    Ok(Telescoping { lhs, rhs, pass })
}

/// Plain binary64 product `A_k ... A_1` of a short sequence.
pub fn plain_product(seq: &[Mat2]) -> Mat2 {
    seq.iter().fold(IDENTITY, |acc, m| mat_mul(m, &acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{det, inverse};

    fn params(lambda: f64, e: f64) -> OperatorParams {
        OperatorParams::new(lambda, Arc::new(Frequency::golden()), Phase::Real { value: 0.3 }, e).unwrap()
    }

    #[test]
    fn step_matrix_cases() {
        let p = params(1.0, 0.7);
        assert_eq!(step_matrix(&p, 0.25)[0][0], 0.7 - 2.0 * (std::f64::consts::PI / 2.0).cos());
        assert!((step_matrix(&p, 0.25)[0][0] - 0.7).abs() < 1e-15);
        let p0 = params(1.0, 0.0);
        assert_eq!(step_matrix(&p0, 0.0), [[-2.0, -1.0], [1.0, 0.0]]);
        for i in 0..100 {
            assert_eq!(det(&step_matrix(&p, i as f64 * 0.0137)), 1.0);
        }
    }

    #[test]
    fn transfer_small_k() {
        let p = params(2.0, 0.4);
        let th = p.theta;
        let a0 = step_matrix(&p, th.site(&p.freq, 0).unwrap());
        let a1 = step_matrix(&p, th.site(&p.freq, 1).unwrap());
        assert_eq!(transfer(&p, 0, &th).unwrap().matrix, ScaledMatrix2::identity());
        let t1 = transfer(&p, 1, &th).unwrap().matrix.to_mat();
        assert_eq!(t1, a0);
        let t2 = transfer(&p, 2, &th).unwrap().matrix.to_mat();
        let want = mat_mul(&a1, &a0);
        for i in 0..2 {
            for j in 0..2 {
                assert!((t2[i][j] - want[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn negative_k_inverts() {
        let p = params(3.0, 1.1);
        let th = p.theta;
        let fwd = transfer(&p, 3, &th.shifted(&p.freq, -3).unwrap()).unwrap().matrix;
        let back = transfer(&p, -3, &th).unwrap().matrix;
        let prod = back.mul(&fwd).to_mat();
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - e).abs() < 1e-10);
            }
        }
        let _ = inverse(&prod);
    }

    #[test]
    fn propagate_round_trip_and_columns() {
        // the round trip loses about ||A_k||^2 ulps, so keep k L small
        let p = params(1.5, -0.3);
        let start = [LogScalar::from_f64(0.7), LogScalar::from_f64(-1.2)];
        let fwd = propagate(&p, start, 5, 10).unwrap();
        let back = propagate(&p, fwd, 15, -10).unwrap();
        assert!(back[0].rel_diff(&start[0]) < 1e-9 && back[1].rel_diff(&start[1]) < 1e-9);
        let col = propagate(&p, [LogScalar::ONE, LogScalar::ZERO], 0, 12).unwrap();
        let a = transfer(&p, 12, &p.theta).unwrap().matrix;
        assert!(col[0].rel_diff(&a.entry(0, 0)) < 1e-10);
        assert!(col[1].rel_diff(&a.entry(1, 0)) < 1e-10);
    }

    #[test]
    fn propagate_matches_scalar_recursion() {
        let p = params(1.7, 0.2);
        let (mut u0, mut u1) = (0.3f64, 1.0f64);
        let sol = solution(&p, [LogScalar::from_f64(u1), LogScalar::from_f64(u0)], 1, 0, 50).unwrap();
        for n in 1..50i64 {
            let u2 = (p.energy - p.potential(n).unwrap()) * u1 - u0;
            assert!((sol[(n + 1) as usize].to_f64() - u2).abs() <= 1e-10 * u2.abs().max(1.0));
            u0 = u1;
            u1 = u2;
        }
    }

    #[test]
    fn lyapunov_free_and_outside() {
        let p = params(0.0, 0.0);
        let e = lyapunov(&p, 1000, 8).unwrap();
        assert!(e.mean.abs() < 10.0 / 1000.0);
        let p = params(1.0, 5.0);
        let e = lyapunov(&p, 500, 16).unwrap();
        assert!(e.mean > 0.0);
        let spread = e.per_theta.iter().map(|s| (s.estimate - e.mean).abs()).fold(0.0, f64::max);
        assert!(e.per_theta.iter().all(|s| s.estimate <= e.mean + spread));
    }

    #[test]
    fn unimodular_products() {
        let p = params(3.0, 0.5);
        for k in [1i64, 10, 100, 1000, 5000] {
            let t = transfer(&p, k, &p.theta).unwrap();
            assert!(t.matrix.det().logmag().abs() <= 1e-8 * k as f64);
        }
    }

    #[test]
    fn hp_transfer_agrees() {
        let p = params(3.0, 0.5).with_theta(Phase::Resonant { m: 0, l: 0 });
        let a = transfer(&p, 60, &p.theta).unwrap().matrix;
        let b = hp_to_scaled(&transfer_hp(&p, 60, &p.theta, 256).unwrap());
        assert!(a.sub(&b).norm().to_f64() / a.norm().to_f64() < 1e-10);
    }

    #[test]
    fn shift_difference_golden() {
        let p = params(4.0, 0.5).with_theta(Phase::Resonant { m: 0, l: 0 });
        let r = shift_difference(&p, 34, 1, 8, 0.1).unwrap();
        let want = (4f64.ln() + 0.1) * 34.0 - 55f64.ln();
        assert!((r.bound.logmag() - want).abs() < 1e-12);
        assert!(r.measured.logmag().is_finite() && !r.high_precision);
        let z = shift_difference(&p, 34, 0, 8, 0.1).unwrap();
        assert!(z.measured.is_zero());
    }

    #[test]
    fn telescoping_trivial_cases() {
        let a = vec![[[2.0, 0.0], [0.0, 0.5]]; 3];
        let zero = vec![[[0.0; 2]; 2]; 3];
        let t = telescoping_bound(&a, &zero, 1.0, 2f64.ln()).unwrap();
        assert!(t.lhs.is_zero() && t.rhs.is_zero());
        let b = vec![[[0.01, 0.0], [0.0, 0.0]]];
        let t = telescoping_bound(&a[..1], &b, 1.5, 2f64.ln()).unwrap();
        assert!((t.rhs.to_f64() - 1.5 * 1.5 * 0.01).abs() < 1e-12);
        assert!(t.pass);
        assert!(matches!(telescoping_bound(&a, &zero, 1.0, 0.1), Err(Error::HypothesisViolated(_))));
    }
}
