//! Lagrange interpolation terms for nodes `cos 2 pi theta_j` and the
//! uniform lower bound on `P_k` they control.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::OperatorParams;
use crate::error::{Error, Result};
use crate::greens::box_det;
use crate::numerics::LogScalar;
use crate::phase::Phase;

/// Node separation (in `theta`, modulo one and reflection) below which two
/// nodes are treated as coinciding.
pub const NODE_SEPARATION: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangeTerms {
    /// `Lag_m` for each node, in input order.
    pub values: Vec<f64>,
    pub method: String,
}

fn frac_dist(x: f64) -> f64 {
    let f = x.rem_euclid(1.0);
    f.min(1.0 - f)
}

/// `ln |cos 2 pi a - cos 2 pi b| = ln 2 |sin pi (a + b)| |sin pi (a - b)|`.
fn ln_cos_gap(a: f64, b: f64) -> f64 {
    let s = (std::f64::consts::PI * frac_dist(a + b)).sin();
    let d = (std::f64::consts::PI * frac_dist(a - b)).sin();
    std::f64::consts::LN_2 + s.ln() + d.ln()
}

/// Root of `sum_j 1 / (x - c_j)` (skipping `skip`) in the open gap `(a, b)`
/// between consecutive roots; the sum decreases from `+inf` to `-inf` there.
fn critical_point(c: &[f64], skip: Option<usize>, a: f64, b: f64) -> f64 {
    let eval = |x: f64| {
        let mut h = 0.0;
        let mut dh = 0.0;
        for (j, &cj) in c.iter().enumerate() {
            if Some(j) == skip {
                continue;
            }
            let r = 1.0 / (x - cj);
            h += r;
            dh -= r * r;
        }
        (h, dh)
    };
    let (mut lo, mut hi) = (a, b);
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (h, dh) = eval(x);
        if h == 0.0 {
            return x;
        }
        if h > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - h / dh;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * (b - a).max(f64::MIN_POSITIVE) || next <= lo || next >= hi {
            return next.clamp(lo, hi);
        }
        x = next;
    }
    x
}

fn ln_abs_prod(c: &[f64], skip: Option<usize>, x: f64) -> f64 {
    c.iter().enumerate().filter(|(j, _)| Some(*j) != skip).map(|(_, &cj)| (x - cj).abs().ln()).sum()
}

/// `Lag_m = ln max_{x in [-1,1]} prod_{j != m} |x - c_j| / |c_m - c_j|` with
/// `c_j = cos 2 pi theta_j`.
///
/// The maximum of the polynomial modulus is taken over `x = +-1` and its
/// critical points, one in each gap between consecutive roots. Gap maxima of
/// the full node product give an upper bound for each gap not adjacent to
/// `c_m`, so only gaps whose bound beats the running best are solved.
pub fn lagrange_terms(thetas: &[f64]) -> Result<LagrangeTerms> {
    let n = thetas.len();
    let method = "critical points per gap, bounded by full-product gap maxima".to_string();
    if n <= 1 {
        return Ok(LagrangeTerms { values: vec![0.0; n], method });
    }
    for i in 0..n {
        for j in i + 1..n {
            let s = frac_dist(thetas[i] + thetas[j]).min(frac_dist(thetas[i] - thetas[j]));
            if s < NODE_SEPARATION {
                return Err(Error::DegenerateNodes(i, j));
            }
        }
    }
    let c: Vec<f64> = thetas.iter().map(|t| (2.0 * std::f64::consts::PI * t).cos()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| c[a].total_cmp(&c[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| c[i]).collect();
    let mut rank = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    // max of ln |prod_j (x - c_j)| over each gap (sorted[i], sorted[i+1])
    let gap_max: Vec<f64> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let x = critical_point(&sorted, None, sorted[i], sorted[i + 1]);
            ln_abs_prod(&sorted, None, x)
        })
        .collect();
    let values = (0..n)
        .into_par_iter()
        .map(|m| {
            let r = rank[m];
            let denom: f64 = (0..n).filter(|&j| j != m).map(|j| ln_cos_gap(thetas[m], thetas[j])).sum();
            let skip = Some(r);
            let mut best = ln_abs_prod(&sorted, skip, -1.0).max(ln_abs_prod(&sorted, skip, 1.0));
            if r > 0 && r + 1 < n {
                let x = critical_point(&sorted, skip, sorted[r - 1], sorted[r + 1]);
                best = best.max(ln_abs_prod(&sorted, skip, x));
            }
            let mut cands: Vec<(f64, usize)> = (0..n - 1)
                .filter(|&i| i + 1 != r && i != r)
                .map(|i| {
                    let d = (sorted[r] - sorted[i]).abs().min((sorted[r] - sorted[i + 1]).abs());
                    (gap_max[i] - d.ln(), i)
                })
                .collect();
            cands.sort_by(|a, b| b.0.total_cmp(&a.0));
            for (bound, i) in cands {
                if bound <= best {
                    break;
                }
                let x = critical_point(&sorted, skip, sorted[i], sorted[i + 1]);
                best = best.max(ln_abs_prod(&sorted, skip, x));
            }
            best - denom
        })
        .collect();
    Ok(LagrangeTerms { values, method })
}

/// `ln prod_{j != m} |x - c_j| / |c_m - c_j|` at a single point.
pub fn lagrange_log_at(thetas: &[f64], m: usize, x: f64) -> f64 {
    let c: Vec<f64> = thetas.iter().map(|t| (2.0 * std::f64::consts::PI * t).cos()).collect();
    let num = ln_abs_prod(&c, Some(m), x);
    let den: f64 = (0..thetas.len()).filter(|&j| j != m).map(|j| ln_cos_gap(thetas[m], thetas[j])).sum();
    num - den
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformWitness {
    /// Index into the phase list of the best node.
    pub m: usize,
    /// `|P_k(theta_m - (k-1) alpha / 2)|`.
    pub lhs: LogScalar,
    /// `e^{kL - Lag_m} / (k + 1)`.
    pub rhs: LogScalar,
    pub lag: f64,
    pub pass: bool,
}

/// Searches the `k + 1` phases for one with
/// `|P_k(theta_m - (k-1) alpha / 2)| >= e^{kL - Lag_m} / (k + 1)`; returns
/// the node with the largest margin.
pub fn uniform_witness(params: &OperatorParams, phases: &[Phase]) -> Result<UniformWitness> {
    if phases.is_empty() {
        return Err(Error::InvalidArgument("empty phase list".into()));
    }
    let freq = &params.freq;
    let k = phases.len() as i64 - 1;
    let thetas: Vec<f64> = phases.iter().map(|p| p.value(freq)).collect::<Result<_>>()?;
    let lag = match lagrange_terms(&thetas) {
        Ok(l) => l,
        // coinciding nodes: Lag_i is infinite and the bound holds trivially
        Err(Error::DegenerateNodes(i, _)) => {
            let base = phases[i].shifted_half(freq, -(k - 1))?;
            let lhs = box_det(params, 0, k - 1, Some(base))?.value.abs();
            return Ok(UniformWitness { m: i, lhs, rhs: LogScalar::ZERO, lag: f64::INFINITY, pass: true });
        }
        Err(e) => return Err(e),
    };
    let big_l = params.big_l();
    let rows: Vec<(LogScalar, LogScalar)> = phases
        .par_iter()
        .zip(lag.values.par_iter())
        .map(|(ph, &lg)| {
            let base = ph.shifted_half(freq, -(k - 1))?;
            let lhs = box_det(params, 0, k - 1, Some(base))?.value.abs();
            let rhs = LogScalar::from_log(1, k as f64 * big_l - lg - ((k + 1) as f64).ln());
            Ok((lhs, rhs))
        })
        .collect::<Result<_>>()?;
    let margin = |i: usize| rows[i].0.logmag() - rows[i].1.logmag();
    let m = (0..rows.len()).max_by(|&a, &b| margin(a).total_cmp(&margin(b))).unwrap();
    let (lhs, rhs) = rows[m];
    Ok(UniformWitness { m, lhs, rhs, lag: lag.values[m], pass: lhs.cmp_abs(&rhs) != std::cmp::Ordering::Less })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::cf::Frequency;

    fn grid_lag(thetas: &[f64], m: usize) -> f64 {
        let g = 200_000;
        (0..=g).map(|i| lagrange_log_at(thetas, m, -1.0 + 2.0 * i as f64 / g as f64)).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn two_nodes_closed_form() {
        let th = [0.1, 0.37];
        let lag = lagrange_terms(&th).unwrap().values;
        let c: Vec<f64> = th.iter().map(|t| (2.0 * std::f64::consts::PI * t).cos()).collect();
        let want = ((1.0 + c[1].abs()) / (c[0] - c[1]).abs()).ln();
        assert!((lag[0] - want).abs() < 1e-12);
    }

    #[test]
    fn single_node() {
        assert_eq!(lagrange_terms(&[0.3]).unwrap().values, vec![0.0]);
    }

    #[test]
    fn matches_grid_search() {
        let a = Frequency::golden().alpha_f64().unwrap();
        let th: Vec<f64> = (3..20).map(|m| (0.13 + m as f64 * a).rem_euclid(1.0)).collect();
        let lag = lagrange_terms(&th).unwrap().values;
        for m in 0..th.len() {
            let g = grid_lag(&th, m);
            assert!(lag[m] >= g - 1e-9 && lag[m] - g < 1e-3, "m={m}: {} vs {g}", lag[m]);
        }
    }

    #[test]
    fn chebyshev_nodes_are_tame() {
        let k = 16;
        // cos 2 pi theta_j = cos((2j - 1) pi / (2k))
        let th: Vec<f64> = (1..=k).map(|j| (2 * j - 1) as f64 / (4 * k) as f64).collect();
        for v in lagrange_terms(&th).unwrap().values {
            assert!(v <= (2.0 * k as f64).ln());
        }
    }

    #[test]
    fn own_node_is_one() {
        let th = [0.05, 0.21, 0.33, 0.4];
        let c = (2.0 * std::f64::consts::PI * th[2]).cos();
        assert!(lagrange_log_at(&th, 2, c).abs() < 1e-10);
    }

    #[test]
    fn degenerate_nodes() {
        assert!(matches!(lagrange_terms(&[0.1, 0.9]), Err(Error::DegenerateNodes(0, 1))));
        let p = OperatorParams::new(3.0, Arc::new(Frequency::golden()), Phase::default(), 0.4).unwrap();
        let w = uniform_witness(&p, &[Phase::Real { value: 0.1 }, Phase::Real { value: 0.9 }, Phase::Real { value: 0.3 }]).unwrap();
        assert!(w.pass && w.rhs.is_zero());
    }

    #[test]
    fn witness_k1_by_hand() {
        let p = OperatorParams::new(3.0, Arc::new(Frequency::golden()), Phase::default(), 0.4).unwrap();
        let ph = [Phase::Real { value: 0.11 }, Phase::Real { value: 0.29 }];
        let w = uniform_witness(&p, &ph).unwrap();
        let lag = lagrange_terms(&[0.11, 0.29]).unwrap().values;
        let best = (0..2)
            .map(|m| {
                let t = [0.11, 0.29][m];
                let lhs = (0.4 - 6.0 * (2.0 * std::f64::consts::PI * t).cos()).abs().ln();
                let rhs = 3f64.ln() - lag[m] - 2f64.ln();
                (lhs - rhs, lhs >= rhs)
            })
            .fold((f64::NEG_INFINITY, false), |a, b| if b.0 > a.0 { b } else { a });
        assert_eq!(w.pass, best.1);
        assert!((w.lhs.logmag() - w.rhs.logmag() - best.0).abs() < 1e-10);
    }
}
