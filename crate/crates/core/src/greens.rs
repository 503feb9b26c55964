//! Restriction determinants `P_[x1,x2] = det(E - H)` on a box, Green's
//! function edge entries by Cramer's rule, and determinant bound audits.
//!
//! Conventions: the empty box has determinant 1 and the box of length -1
//! has determinant 0, so `P_k` satisfies the three-term recursion from
//! `P_0 = 1`, `P_{-1} = 0`.

use serde::{Deserialize, Serialize};

use crate::cocycle::{hp_bits_for, transfer, OperatorParams, ShiftDifference, HP_SWITCH};
use crate::error::{Error, Result};
use crate::numerics::{ExtReal, HpFloat, LogScalar, PrecisionMode, ScaledVec2, CANCELLATION_THRESHOLD};
use crate::phase::{HpPhases, Phase};
use crate::sites::SiteValues;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDeterminant {
    pub x1: i64,
    pub x2: i64,
    pub value: LogScalar,
    pub theta_base: Phase,
    /// The last recursion step lost more than twelve digits.
    pub cancellation: bool,
}

impl BoxDeterminant {
    pub fn len(&self) -> i64 {
        self.x2 - self.x1 + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0
    }
}

/// Last step `c u - w` with a relative-loss flag.
fn final_step(c: f64, u: LogScalar, w: LogScalar) -> (LogScalar, bool) {
    let a = u.mul_f64(c);
    let r = a.sub(w);
    let scale = a.abs().max_abs(w.abs());
    let flag = !scale.is_zero() && r.cmp_abs(&scale.mul_f64(CANCELLATION_THRESHOLD)) != std::cmp::Ordering::Greater;
    (r, flag)
}

/// Runs the recursion over the diagonal `c[i] = E - v(x1 + i)`.
fn det_of_diagonal(c: &[f64]) -> (LogScalar, bool) {
    match c.len() {
        0 => (LogScalar::ONE, false),
        n => {
            let mut v = ScaledVec2::new([LogScalar::ONE, LogScalar::ZERO]);
            for &ci in &c[..n - 1] {
                v = v.step(ci);
            }
            final_step(c[n - 1], v.get(0), v.get(1))
        }
    }
}

fn diagonal(params: &OperatorParams, x1: i64, x2: i64) -> Result<Vec<f64>> {
    if x2 < x1 {
        return Ok(Vec::new());
    }
    Ok(params.potentials(x1, x2)?.into_iter().map(|v| params.energy - v).collect())
}

/// `P_[x1,x2]`, with `x2 = x1 - 1` giving 1 and `x2 = x1 - 2` giving 0.
pub fn box_det(params: &OperatorParams, x1: i64, x2: i64, phase_override: Option<Phase>) -> Result<BoxDeterminant> {
    if x2 < x1 - 2 {
        return Err(Error::InvalidArgument(format!("box [{x1}, {x2}] has negative length")));
    }
    params.check_budget(x2 - x1 + 1)?;
    let p = match phase_override {
        Some(th) => params.with_theta(th),
        None => params.clone(),
    };
    let (value, cancellation) = if x2 == x1 - 2 {
        (LogScalar::ZERO, false)
    } else {
        det_of_diagonal(&diagonal(&p, x1, x2)?)
    };
    Ok(BoxDeterminant { x1, x2, value, theta_base: p.theta, cancellation })
}

/// `P_k(theta) = P_[0, k-1](theta)`.
pub fn pk(params: &OperatorParams, k: i64, theta: &Phase) -> Result<LogScalar> {
    Ok(box_det(params, 0, k - 1, Some(*theta))?.value)
}

/// `P_[x1,x2]` in software floats with at least `bits` mantissa bits.
pub fn box_det_hp(params: &OperatorParams, x1: i64, x2: i64, bits: usize) -> Result<HpFloat> {
    if x2 < x1 - 2 {
        return Err(Error::InvalidArgument(format!("box [{x1}, {x2}] has negative length")));
    }
    params.check_budget(x2 - x1 + 1)?;
    let m = match params.theta {
        Phase::Resonant { m, .. } => m.unsigned_abs(),
        Phase::Real { .. } => 0,
    };
    let kmax = 2 * x1.unsigned_abs().max(x2.unsigned_abs()) + m + 2;
    let mut ph = HpPhases::new(&params.freq, &params.theta, bits, kmax)?;
    let p = ph.bits();
    let e = HpFloat::from_f64(params.energy, p);
    let lam = HpFloat::from_f64(params.lambda, p);
    let mut u = HpFloat::from_f64(1.0, p);
    let mut w = HpFloat::zero(p);
    if x2 == x1 - 2 {
        return Ok(w);
    }
    for x in x1..=x2 {
        let c = e.sub(&lam.mul(&ph.potential(x)));
        let next = c.mul(&u).sub(&w);
        w = u;
        u = next;
    }
    Ok(u)
}

/// Entries of `A_k(theta)` rebuilt from box determinants, compared with the
/// transfer product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferIdentity {
    pub k: i64,
    pub from_dets: [[LogScalar; 2]; 2],
    pub from_product: [[LogScalar; 2]; 2],
    /// Largest entrywise relative difference.
    pub entrywise: f64,
    /// Largest absolute entry difference over the norm of the product.
    pub normwise: f64,
}

pub fn transfer_identity(params: &OperatorParams, k: i64) -> Result<TransferIdentity> {
    if k < 1 {
        return Err(Error::InvalidArgument("transfer identity needs k >= 1".into()));
    }
    let d = |a: i64, b: i64| box_det(params, a, b, None).map(|b| b.value);
    // (P_k(theta), -P_{k-1}(theta + alpha); P_{k-1}(theta), -P_{k-2}(theta + alpha))
    let from_dets = [[d(0, k - 1)?, -d(1, k - 1)?], [d(0, k - 2)?, -d(1, k - 2)?]];
    let prod = transfer(params, k, &params.theta)?;
    let from_product = [[prod.matrix.entry(0, 0), prod.matrix.entry(0, 1)], [prod.matrix.entry(1, 0), prod.matrix.entry(1, 1)]];
    let norm = prod.matrix.norm();
    let mut entrywise = 0.0f64;
    let mut normwise = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            entrywise = entrywise.max(from_dets[i][j].rel_diff(&from_product[i][j]));
            normwise = normwise.max((from_dets[i][j].sub(from_product[i][j]) / norm).abs().to_f64());
        }
    }
    Ok(TransferIdentity { k, from_dets, from_product, entrywise, normwise })
}

/// Edge row and column of the restricted resolvent `(R(H - E)R)^{-1}`.
///
/// Holds the prefix determinants `P_[x1, x1+i-1]` and suffix determinants
/// `P_[x2-i+1, x2]` for `i = 0..=len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenBlock {
    pub x1: i64,
    pub x2: i64,
    left: Vec<LogScalar>,
    right: Vec<LogScalar>,
    left_flags: Vec<bool>,
    right_flags: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenEdges {
    /// `G(x1, y)`.
    pub g_left: LogScalar,
    /// `G(y, x2)`.
    pub g_right: LogScalar,
    pub cancellation: bool,
}

fn prefix_dets(c: impl Iterator<Item = f64>, n: usize) -> (Vec<LogScalar>, Vec<bool>) {
    let mut vals = Vec::with_capacity(n + 1);
    let mut flags = Vec::with_capacity(n + 1);
    vals.push(LogScalar::ONE);
    flags.push(false);
    let mut u = LogScalar::ONE;
    let mut w = LogScalar::ZERO;
    for ci in c {
        let (next, flag) = final_step(ci, u, w);
        w = u;
        u = next;
        vals.push(u);
        flags.push(flag);
    }
    (vals, flags)
}

impl GreenBlock {
    pub fn new(params: &OperatorParams, x1: i64, x2: i64) -> Result<Self> {
        if x2 < x1 {
            return Err(Error::InvalidArgument(format!("empty box [{x1}, {x2}]")));
        }
        params.check_budget(x2 - x1 + 1)?;
        let c = diagonal(params, x1, x2)?;
        let n = c.len();
        let (left, left_flags) = prefix_dets(c.iter().copied(), n);
        let (right, right_flags) = prefix_dets(c.iter().rev().copied(), n);
        if left[n].is_zero() {
            return Err(Error::Singular { x1, x2 });
        }
        Ok(GreenBlock { x1, x2, left, right, left_flags, right_flags })
    }

    pub fn len(&self) -> usize {
        (self.x2 - self.x1 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn det(&self) -> LogScalar {
        self.left[self.len()]
    }

    /// `P_[x1, y]` for `x1 - 1 <= y <= x2`.
    pub fn left_det(&self, y: i64) -> LogScalar {
        self.left[(y - self.x1 + 1) as usize]
    }

    /// `P_[y, x2]` for `x1 <= y <= x2 + 1`.
    pub fn right_det(&self, y: i64) -> LogScalar {
        self.right[(self.x2 - y + 1) as usize]
    }

    pub fn denominator_flagged(&self) -> bool {
        self.left_flags[self.len()]
    }

    pub fn edges(&self, y: i64) -> Result<GreenEdges> {
        if y < self.x1 || y > self.x2 {
            return Err(Error::RangeExceeded { site: y, lo: self.x1, hi: self.x2 });
        }
        let p = self.det();
        let g_left = -(self.right_det(y + 1) / p);
        let g_right = -(self.left_det(y - 1) / p);
        let cancellation = self.denominator_flagged()
            || self.right_flags[(self.x2 - y) as usize]
            || self.left_flags[(y - self.x1) as usize];
        Ok(GreenEdges { g_left, g_right, cancellation })
    }
}

/// `G(x1, y)` and `G(y, x2)` of `(R(H - E)R)^{-1}` on `[x1, x2]`.
pub fn green_edge_entries(params: &OperatorParams, x1: i64, x2: i64, y: i64) -> Result<GreenEdges> {
    GreenBlock::new(params, x1, x2)?.edges(y)
}

/// Tolerance for the pointwise eigen-equation check.
pub const EIGEN_CHECK_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockResidual {
    pub residual: LogScalar,
    /// Largest of `|phi|` on `[x1 - 1, x2 + 1]`.
    pub scale: LogScalar,
    pub relative: f64,
    pub cancellation: bool,
}

/// Checks `phi(x+1) + phi(x-1) + v(x) phi(x) = E phi(x)` on `[x1, x2]`.
pub fn check_eigen_equation(params: &OperatorParams, phi: &SiteValues, x1: i64, x2: i64) -> Result<()> {
    let v = params.potentials(x1, x2)?;
    for (i, x) in (x1..=x2).enumerate() {
        let a = phi.get(x - 1)?;
        let b = phi.get(x + 1)?;
        let c = phi.get(x)?.mul_f64(v[i] - params.energy);
        let r = a.add(b).add(c);
        let scale = a.abs().max_abs(b.abs()).max_abs(c.abs()).max_abs(phi.get(x)?.mul_f64(params.energy).abs());
        if scale.is_zero() {
            continue;
        }
        let rel = (r / scale).abs().to_f64();
        if rel > EIGEN_CHECK_TOL {
            return Err(Error::NotAnEigenfunctionLocally { site: x, residual: rel });
        }
    }
    Ok(())
}

/// `|phi(y) + G(x1,y) phi(x1-1) + G(y,x2) phi(x2+1)|`.
pub fn block_identity_residual(params: &OperatorParams, phi: &SiteValues, x1: i64, x2: i64, y: i64) -> Result<BlockResidual> {
    check_eigen_equation(params, phi, x1, x2)?;
    let g = green_edge_entries(params, x1, x2, y)?;
    let a = phi.get(x1 - 1)?;
    let b = phi.get(x2 + 1)?;
    let residual = phi.get(y)?.add(g.g_left * a).add(g.g_right * b).abs();
    let mut scale = LogScalar::ZERO;
    for x in x1 - 1..=x2 + 1 {
        scale = scale.max_abs(phi.get(x)?.abs());
    }
    let relative = if scale.is_zero() { 0.0 } else { (residual / scale).to_f64() };
    Ok(BlockResidual { residual, scale, relative, cancellation: g.cancellation })
}

/// Default `C` in `C eps q_n` bounds.
pub const DEFAULT_BIG_C: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub x1: i64,
    pub x2: i64,
    pub measured_log: f64,
    pub bound_log: f64,
    pub pass: bool,
    pub cancellation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenBoundAudit {
    pub n: usize,
    pub q_n: i64,
    pub x: i64,
    pub p1: i64,
    pub p2: i64,
    pub eps: f64,
    pub big_c: f64,
    /// Boxes `[-x, p1]`, `[-p1, x]`, `[-x, p2]`.
    pub bounds: [BoundCheck; 3],
}

impl GreenBoundAudit {
    pub fn pass(&self) -> bool {
        self.bounds.iter().all(|b| b.pass)
    }

    pub fn flagged(&self) -> bool {
        self.bounds.iter().any(|b| b.cancellation)
    }
}

fn bound_check(params: &OperatorParams, x1: i64, x2: i64, bound_log: f64) -> Result<BoundCheck> {
    let d = box_det(params, x1, x2, None)?;
    let measured_log = d.value.logmag();
    Ok(BoundCheck { x1, x2, measured_log, bound_log, pass: measured_log <= bound_log, cancellation: d.cancellation })
}

/// Upper bounds on `|P_[-x,p1]|`, `|P_[-p1,x]|` (by `L(q_n/2 - x) + C eps q_n`)
/// and `|P_[-x,p2]|` (by `L(q_n - x) + C eps q_n`) at a completely resonant phase.
pub fn green_bound_audit(params: &OperatorParams, n: usize, x: i64, p1: i64, p2: i64, eps: f64, big_c: f64) -> Result<GreenBoundAudit> {
    if !params.theta.is_resonant() {
        return Err(Error::HypothesisViolated("the determinant bounds need 2 theta in alpha Z + Z".into()));
    }
    let q = params.freq.q_u64(n)? as i64;
    let qf = q as f64;
    if x < 0 || 4 * x > q {
        return Err(Error::HypothesisViolated(format!("x = {x} outside [0, q_n/4] with q_n = {q}")));
    }
    if (p1 as f64 - qf / 2.0).abs() > 20.0 * eps * qf {
        return Err(Error::HypothesisViolated(format!("|p1 - q_n/2| > 20 eps q_n for p1 = {p1}")));
    }
    if (p2 as f64 - qf).abs() > 20.0 * eps * qf {
        return Err(Error::HypothesisViolated(format!("|p2 - q_n| > 20 eps q_n for p2 = {p2}")));
    }
    let l = params.big_l();
    let slack = big_c * eps * qf;
    let half = l * (qf / 2.0 - x as f64) + slack;
    let full = l * (qf - x as f64) + slack;
    let bounds = [
        bound_check(params, -x, p1, half)?,
        bound_check(params, -p1, x, half)?,
        bound_check(params, -x, p2, full)?,
    ];
    Ok(GreenBoundAudit { n, q_n: q, x, p1, p2, eps, big_c, bounds })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumeratorAudit {
    pub x1: i64,
    pub x2: i64,
    pub measured: LogScalar,
    pub bound: LogScalar,
    /// `None` for boxes below the minimum length.
    pub pass: Option<bool>,
}

/// `|P_[x1,x2]| <= e^{(L+eps)|x2 - x1|}`, applied only when the box has at
/// least `min_len` sites.
pub fn numerator_bound_audit(params: &OperatorParams, x1: i64, x2: i64, eps: f64, min_len: i64) -> Result<NumeratorAudit> {
    let d = box_det(params, x1, x2, None)?;
    let bound = LogScalar::from_log(1, (params.big_l() + eps) * (x2 - x1).abs() as f64);
    let pass = if x2 - x1 + 1 < min_len {
        None
    } else {
        Some(d.value.cmp_abs(&bound) != std::cmp::Ordering::Greater)
    };
    Ok(NumeratorAudit { x1, x2, measured: d.value.abs(), bound, pass })
}

/// `|P_k(theta) - P_k(theta + j q_n alpha)|` against `e^{(L+eps)k} j / q_{n+1}`.
pub fn pk_shift_difference(params: &OperatorParams, k: i64, j: i64, n: usize, eps: f64) -> Result<ShiftDifference> {
    if k <= 0 || j < 0 {
        return Err(Error::InvalidArgument("shift difference needs k > 0 and j >= 0".into()));
    }
    let freq = &params.freq;
    let qn = freq.q_u64(n)? as i64;
    let big_l = params.big_l();
    if j == 0 {
        return Ok(ShiftDifference { k, j, n, measured: LogScalar::ZERO, bound: LogScalar::ZERO, pass: true, high_precision: false });
    }
    let bound = LogScalar::from_log(1, (big_l + eps) * k as f64 + (j as f64).ln() - freq.ln_q(n + 1)?);
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
        let a = box_det_hp(params, 0, k - 1, bits)?;
        let b = box_det_hp(&params.with_theta(shifted), 0, k - 1, bits)?;
        a.sub(&b).to_log_scalar().abs()
    } else {
        let a = pk(params, k, &params.theta)?;
        let b = pk(params, k, &shifted)?;
        a.sub(b).abs()
    };
    let pass = measured.cmp_abs(&bound) != std::cmp::Ordering::Greater;
    Ok(ShiftDifference { k, j, n, measured, bound, pass, high_precision: use_hp })
}
