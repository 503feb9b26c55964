//! Finite truncations of the operator, their eigenpairs, generalized
//! eigenfunctions by transfer propagation, and decay-rate fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{solution, OperatorParams};
use crate::error::{Error, Result};
use crate::numerics::LogScalar;
use crate::phase::Phase;
use crate::sites::SiteValues;

/// `H` restricted to `[-N, N]` with Dirichlet boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalOperator {
    pub params: OperatorParams,
    pub n: i64,
    /// `v(x)` for `x = -N..=N`.
    pub diag: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(params: &OperatorParams, n: i64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument(format!("truncation N must be >= 1, got {n}")));
        }
        Ok(TridiagonalOperator { params: params.clone(), n, diag: params.potentials(-n, n)? })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `e` (Sturm count from the
    /// `LDL^T` pivots).
    pub fn count_below(&self, e: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut d = 1.0;
        let mut count = 0;
        for (i, &a) in self.diag.iter().enumerate() {
            d = if i == 0 { a - e } else { a - e - 1.0 / d };
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let lo = self.diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0;
        let hi = self.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0;
        (lo, hi)
    }

    /// The `i`-th eigenvalue in ascending order, by bisection.
    pub fn eigenvalue(&self, i: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                return mid;
            }
            if self.count_below(mid) > i {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.eigenvalue(i)).collect()
    }

    /// Eigenvector for the eigenvalue `e` by a twisted factorization: forward
    /// and backward pivots meet at the index where the twist element is
    /// smallest. Entries are kept in extended range.
    pub fn eigenvector(&self, e: f64) -> (SiteValues, f64) {
        let n = self.dim();
        let scale = self.diag.iter().fold(2.0f64, |m, a| m.max(a.abs())) + e.abs();
        let guard = f64::EPSILON * scale;
        let fix = |d: f64| if d.abs() < f64::MIN_POSITIVE { guard } else { d };
        let mut fwd = vec![0.0; n];
        let mut bwd = vec![0.0; n];
        for i in 0..n {
            let a = self.diag[i] - e;
            fwd[i] = fix(if i == 0 { a } else { a - 1.0 / fwd[i - 1] });
        }
        for i in (0..n).rev() {
            let a = self.diag[i] - e;
            bwd[i] = fix(if i == n - 1 { a } else { a - 1.0 / bwd[i + 1] });
        }
        let mut best = 0;
        let mut best_g = f64::INFINITY;
        for i in 0..n {
            let g = (fwd[i] + bwd[i] - (self.diag[i] - e)).abs();
            if g < best_g {
                best_g = g;
                best = i;
            }
        }
        let mut z = vec![LogScalar::ZERO; n];
        z[best] = LogScalar::ONE;
        for i in (0..best).rev() {
            z[i] = z[i + 1] / LogScalar::from_f64(-fwd[i]);
        }
        for i in best + 1..n {
            z[i] = z[i - 1] / LogScalar::from_f64(-bwd[i]);
        }
        let norm = l2_norm(&z);
        let v = SiteValues::new(-self.n, z.into_iter().map(|x| x / norm).collect());
        (v, best_g)
    }

    /// `||H phi - E phi|| / ||phi||`.
    pub fn residual(&self, phi: &SiteValues, e: f64) -> f64 {
        let top = phi.values.iter().fold(LogScalar::ZERO, |m, x| m.max_abs(x.abs()));
        if top.is_zero() {
            return 0.0;
        }
        let x: Vec<f64> = phi.values.iter().map(|v| (*v / top).to_f64()).collect();
        let n = x.len();
        let mut r2 = 0.0;
        let mut x2 = 0.0;
        for i in 0..n {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] } else { 0.0 };
            let res = l + r + (self.diag[i] - e) * x[i];
            r2 += res * res;
            x2 += x[i] * x[i];
        }
        (r2 / x2).sqrt()
    }
}

fn l2_norm(z: &[LogScalar]) -> LogScalar {
    let top = z.iter().fold(LogScalar::ZERO, |m, x| m.max_abs(x.abs()));
    if top.is_zero() {
        return LogScalar::ONE;
    }
    let s: f64 = z.iter().map(|x| (*x / top).to_f64().powi(2)).sum();
    top.mul_f64(s.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub energy: f64,
    /// Unit `l2` norm on `[-N, N]`.
    pub vector: SiteValues,
    pub residual: f64,
}

impl EigenPair {
    /// Site of largest amplitude.
    pub fn center(&self) -> i64 {
        let mut best = (self.vector.lo, LogScalar::ZERO);
        for (x, v) in self.vector.sites() {
            if v.cmp_abs(&best.1) == std::cmp::Ordering::Greater {
                best = (x, v);
            }
        }
        best.0
    }

    /// `l2` mass squared within `width` sites of either end.
    pub fn boundary_mass(&self, width: usize) -> f64 {
        let n = self.vector.values.len();
        let w = width.min(n);
        let edge = self.vector.values[..w].iter().chain(self.vector.values[n - w..].iter());
        edge.map(|v| v.to_f64().powi(2)).sum()
    }

    /// The eigenvector re-indexed around its peak `c` and scaled to
    /// `phi(0) = 1`, together with the phase `theta + c alpha` at which it is
    /// an eigenfunction centered at 0.
    pub fn centered(&self, params: &OperatorParams) -> Result<(Phase, SiteValues)> {
        let c = self.center();
        let phase = params.theta.shifted(&params.freq, c)?;
        Ok((phase, self.vector.normalized_at(c)?.recentered(c)))
    }
}

/// Eigenpairs with eigenvalues in `window` (all when `None`), ascending.
pub fn eigenpairs(op: &TridiagonalOperator, window: Option<(f64, f64)>) -> Vec<EigenPair> {
    let (a, b) = match window {
        Some((lo, hi)) => (op.count_below(lo), op.count_below(hi)),
        None => (0, op.dim()),
    };
    eigenpairs_by_index(op, a..b)
}

pub fn eigenpairs_by_index(op: &TridiagonalOperator, idx: std::ops::Range<usize>) -> Vec<EigenPair> {
    idx.map(|i| {
        let energy = op.eigenvalue(i);
        let (vector, _) = op.eigenvector(energy);
        let residual = op.residual(&vector, energy);
        EigenPair { energy, vector, residual }
    })
    .collect()
}

/// Default width of the boundary band for the mass filter.
pub fn boundary_band(n: i64) -> usize {
    ((2 * n + 1) as usize / 20).max(10)
}

/// Up to `count` eigenpairs nearest the middle of the spectrum whose
/// boundary mass is below `max_mass`; energies closer than `1e-10` count once.
pub fn mid_spectrum_pairs(op: &TridiagonalOperator, count: usize, max_mass: f64) -> Vec<EigenPair> {
    let dim = op.dim();
    let band = boundary_band(op.n);
    let mid = dim / 2;
    let mut out: Vec<EigenPair> = Vec::new();
    for off in 0..dim {
        if out.len() >= count {
            break;
        }
        let cands: &[isize] = if off == 0 { &[0] } else { &[-1, 1] };
        for s in cands {
            let i = mid as isize + s * off as isize;
            if i < 0 || i as usize >= dim || out.len() >= count {
                continue;
            }
            let p = eigenpairs_by_index(op, i as usize..i as usize + 1).remove(0);
            if p.boundary_mass(band) >= max_mass || out.iter().any(|q| (q.energy - p.energy).abs() < 1e-10) {
                continue;
            }
            out.push(p);
        }
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    out
}

/// Default ceiling on the minimized `sup |phi(k)| / (1 + |k|)`.
pub const DEFAULT_TEMPERANCE_CAP: f64 = 1e6;

const SCAN_POINTS: usize = 720;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedEigenfunction {
    pub energy: f64,
    pub phi: SiteValues,
    /// Selected `phi(-1)`.
    pub phi_minus_one: f64,
    /// Minimized `sup |phi(k)| / (1 + |k|)`.
    pub sup: f64,
    /// `|phi(k)| <= 1 + |k|` on the whole range.
    pub temperate: bool,
    pub method: String,
}

/// Solution of `H phi = E phi` on `[-m, m]` with `phi(0) = 1`, choosing
/// `phi(-1)` to minimize `sup |phi(k)| / (1 + |k|)`.
///
/// The initial direction `(cos a, sin a)` is scanned on a uniform grid of
/// angles in `(-pi/2, pi/2)` and refined by golden-section search between
/// the neighbours of the best grid point. The objective is convex in
/// `tan a`, so the bracket always contains the minimizer.
pub fn generalized_eigenfunction(params: &OperatorParams, m: i64, cap: f64) -> Result<GeneralizedEigenfunction> {
    if m < 1 {
        return Err(Error::InvalidArgument(format!("range M must be >= 1, got {m}")));
    }
    let u = solution(params, [LogScalar::ONE, LogScalar::ZERO], 0, -m, m)?;
    let w = solution(params, [LogScalar::ZERO, LogScalar::ONE], 0, -m, m)?;
    let weights: Vec<LogScalar> = (-m..=m).map(|k| LogScalar::from_f64(1.0 + k.abs() as f64).recip()).collect();
    // log of sup |u + t w| / (1 + |k|) with t = tan a
    let objective = |a: f64| -> f64 {
        let t = LogScalar::from_f64(a.tan());
        let mut best = LogScalar::ZERO;
        for i in 0..u.len() {
            let v = (u[i].add(w[i] * t)) * weights[i];
            best = best.max_abs(v.abs());
        }
        if best.is_zero() {
            f64::NEG_INFINITY
        } else {
            best.logmag()
        }
    };
    let h = std::f64::consts::PI / SCAN_POINTS as f64;
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| -std::f64::consts::FRAC_PI_2 + h * (i as f64 + 0.5)).collect();
    let vals: Vec<f64> = grid.iter().map(|&a| objective(a)).collect();
    let ib = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let mut lo = if ib == 0 { -std::f64::consts::FRAC_PI_2 * (1.0 - 1e-12) } else { grid[ib - 1] };
    let mut hi = if ib + 1 == grid.len() { std::f64::consts::FRAC_PI_2 * (1.0 - 1e-12) } else { grid[ib + 1] };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let mut fc = objective(c);
    let mut fd = objective(d);
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1e-300) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = objective(d);
        }
    }
    let (a, fa) = if fc <= fd { (c, fc) } else { (d, fd) };
    let (a, fa) = if vals[ib] < fa { (grid[ib], vals[ib]) } else { (a, fa) };
    let sup = fa.exp();
    if !(sup <= cap) {
        return Err(Error::NoTemperateDirection { sup, cap });
    }
    let t = a.tan();
    let tl = LogScalar::from_f64(t);
    let phi = SiteValues::new(-m, (0..u.len()).map(|i| u[i].add(w[i] * tl)).collect());
    Ok(GeneralizedEigenfunction {
        energy: params.energy,
        phi,
        phi_minus_one: t,
        sup,
        temperate: sup <= 1.0,
        method: format!("angle scan ({SCAN_POINTS} points) + golden-section on phi(-1) = tan(a)"),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    /// Fraction of each side skipped near the center.
    pub fit_lo: f64,
    /// Fraction of each side used up to.
    pub fit_hi: f64,
    pub slack: f64,
    /// Margin in `ln|lambda| > 2 beta + margin` for the regime gate.
    pub regime_margin: f64,
    /// Sides with fewer points in the window are skipped.
    pub min_points: usize,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { fit_lo: 0.1, fit_hi: 0.9, slack: 0.1, regime_margin: 0.1, min_points: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub left_rate: Option<f64>,
    pub right_rate: Option<f64>,
    pub theorem_bound: f64,
    pub satisfied: bool,
    pub in_regime: bool,
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `(1/2) ln(phi(k)^2 + phi(k -+ 1)^2)`, the neighbour taken toward 0.
fn pair_log(phi: &SiteValues, k: i64) -> Option<f64> {
    let inner = if k > 0 { k - 1 } else { k + 1 };
    let a = phi.get(k).ok()?;
    let b = phi.get(inner).ok()?;
    let s = (a * a).add(b * b);
    if s.is_zero() {
        None
    } else {
        Some(0.5 * s.logmag())
    }
}

/// Least-squares slope of `(1/2) ln(phi(k)^2 + phi(k-1)^2)` against `|k|` on
/// each side of 0 over the fractional window; the smaller slope is reported.
pub fn decay_rate(phi: &SiteValues, big_l: f64, beta: f64, opts: &DecayOptions) -> Result<DecayFit> {
    let side = |len: i64, dir: i64| -> Option<f64> {
        let a = ((opts.fit_lo * len as f64).ceil() as i64).max(1);
        let b = (opts.fit_hi * len as f64).floor() as i64;
        let pts: Vec<(f64, f64)> = (a..=b).filter_map(|k| pair_log(phi, dir * k).map(|y| (k as f64, y))).collect();
        if pts.len() < opts.min_points.max(2) {
            None
        } else {
            Some(slope(&pts))
        }
    };
    let right_rate = side(phi.hi(), 1);
    let left_rate = side(-phi.lo, -1);
    let rate = match (left_rate, right_rate) {
        (Some(l), Some(r)) => l.min(r),
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => {
            let n = (phi.hi().max(-phi.lo) as f64 * (opts.fit_hi - opts.fit_lo)).max(0.0) as usize;
            return Err(Error::WindowTooSmall(n));
        }
    };
    let theorem_bound = -(big_l - 2.0 * beta);
    Ok(DecayFit {
        rate,
        left_rate,
        right_rate,
        theorem_bound,
        satisfied: rate <= theorem_bound + opts.slack,
        in_regime: big_l > 2.0 * beta + opts.regime_margin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub energies: Vec<f64>,
    /// Hausdorff distance between the spectra over the even- and odd-indexed
    /// halves of the phase grid.
    pub hausdorff: Option<f64>,
}

/// Sorted values merged at resolution `tol`.
pub fn dedup_sorted(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        if out.last().is_none_or(|&l| x - l > tol) {
            out.push(x);
        }
    }
    out
}

fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let one_way = |a: &[f64], b: &[f64]| {
        a.iter()
            .map(|x| {
                let i = b.partition_point(|y| y < x);
                let mut d = f64::INFINITY;
                if i < b.len() {
                    d = d.min((b[i] - x).abs());
                }
                if i > 0 {
                    d = d.min((x - b[i - 1]).abs());
                }
                d
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Union of truncation eigenvalues over a phase grid, merged at `1e-6`.
pub fn spectrum_sample(params: &OperatorParams, theta_grid: &[Phase], n: i64) -> Result<SpectrumSample> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidArgument("empty phase grid".into()));
    }
    let per: Vec<Vec<f64>> = theta_grid
        .par_iter()
        .map(|th| Ok(TridiagonalOperator::new(&params.with_theta(*th), n)?.eigenvalues()))
        .collect::<Result<_>>()?;
    let all = dedup_sorted(per.iter().flatten().copied().collect(), 1e-6);
    let hausdorff = if per.len() >= 2 {
        let even = dedup_sorted(per.iter().step_by(2).flatten().copied().collect(), 1e-6);
        let odd = dedup_sorted(per.iter().skip(1).step_by(2).flatten().copied().collect(), 1e-6);
        Some(hausdorff(&even, &odd))
    } else {
        None
    };
    Ok(SpectrumSample { energies: all, hausdorff })
}

/// `count` phases `theta = (i + 1/2) / count`.
pub fn uniform_phases(count: usize) -> Vec<Phase> {
    (0..count).map(|i| Phase::Real { value: (i as f64 + 0.5) / count as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DMatrix;

    use super::*;
    use crate::cf::Frequency;

    fn params(lambda: f64, theta: Phase) -> OperatorParams {
        OperatorParams::new(lambda, Arc::new(Frequency::golden()), theta, 0.0).unwrap()
    }

    #[test]
    fn free_dirichlet_spectrum() {
        let n = 7;
        let op = TridiagonalOperator::new(&params(0.0, Phase::default()), n).unwrap();
        let ev = op.eigenvalues();
        let d = (2 * n + 1) as usize;
        assert_eq!(ev.len(), d);
        let mut want: Vec<f64> =
            (1..=d).map(|m| 2.0 * (std::f64::consts::PI * m as f64 / (d as f64 + 1.0)).cos()).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn three_by_three_vs_dense() {
        let p = params(1.0, Phase::Resonant { m: 0, l: 0 });
        let op = TridiagonalOperator::new(&p, 1).unwrap();
        let m = DMatrix::from_fn(3, 3, |i, j| if i == j { op.diag[i] } else if i.abs_diff(j) == 1 { 1.0 } else { 0.0 });
        let mut want: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in op.eigenvalues().iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn residuals_small() {
        let p = params(3.0, Phase::Real { value: 0.21 });
        let op = TridiagonalOperator::new(&p, 60).unwrap();
        for pair in eigenpairs(&op, None) {
            assert!(pair.residual <= 1e-10 * 8.0, "E={} res={}", pair.energy, pair.residual);
        }
    }

    #[test]
    fn interlacing() {
        let p = params(2.0, Phase::Real { value: 0.3 });
        let small = TridiagonalOperator::new(&p, 20).unwrap().eigenvalues();
        let big = TridiagonalOperator::new(&p, 21).unwrap().eigenvalues();
        for i in 0..small.len() {
            assert!(big[i] <= small[i] + 1e-12 && small[i] <= big[i + 2] + 1e-12);
        }
    }

    #[test]
    fn generalized_matches_truncation() {
        let p = params(2.0, Phase::Resonant { m: 0, l: 0 });
        let n = 12;
        let op = TridiagonalOperator::new(&p, n).unwrap();
        let pair = eigenpairs_by_index(&op, 12..13).remove(0);
        let ge = generalized_eigenfunction(&p.with_energy(pair.energy), n, DEFAULT_TEMPERANCE_CAP).unwrap();
        let want = pair.vector.normalized_at(0).unwrap();
        for x in -n / 2..=n / 2 {
            let d = (ge.phi.get(x).unwrap().to_f64() - want.get(x).unwrap().to_f64()).abs();
            assert!(d < 1e-6, "x={x}: {d}");
        }
    }

    #[test]
    fn free_solutions_are_temperate() {
        let p = params(0.0, Phase::default()).with_energy(2.0 * 0.7f64.cos());
        let ge = generalized_eigenfunction(&p, 200, DEFAULT_TEMPERANCE_CAP).unwrap();
        assert!(ge.temperate);
    }

    #[test]
    fn outside_spectrum_has_no_temperate_direction() {
        let p = params(3.0, Phase::default()).with_energy(9.0);
        assert!(matches!(generalized_eigenfunction(&p, 100, DEFAULT_TEMPERANCE_CAP), Err(Error::NoTemperateDirection { .. })));
    }

    #[test]
    fn synthetic_exponential_rate() {
        let c = 0.37;
        let phi = SiteValues::from_fn(-300, 300, |k| LogScalar::from_log(1, -c * k.abs() as f64));
        let fit = decay_rate(&phi, 1.0, 0.0, &DecayOptions::default()).unwrap();
        assert!((fit.rate + c).abs() < 1e-6);
        let short = SiteValues::from_fn(-3, 3, |_| LogScalar::ONE);
        assert!(matches!(decay_rate(&short, 1.0, 0.0, &DecayOptions::default()), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn free_spectrum_fills_band() {
        let s = spectrum_sample(&params(0.0, Phase::default()), &uniform_phases(2), 50).unwrap();
        assert!(s.energies.iter().all(|e| e.abs() <= 2.0));
        assert!(s.energies.len() > 90);
    }
}
