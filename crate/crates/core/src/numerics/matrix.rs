//! 2x2 matrices: plain binary64 and power-of-two rescaled.

use super::{ldexp, split_f64, LogScalar, LN2_HI, LN2_LO};

pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn mat_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Largest singular value, via the cancellation-free half-sum formula.
pub fn spectral_norm(a: &Mat2) -> f64 {
    let (p, q, r, s) = (a[0][0], a[0][1], a[1][0], a[1][1]);
    0.5 * ((p + s).hypot(q - r) + (p - s).hypot(q + r))
}

/// Exact inverse for unimodular matrices, adjugate divided by det otherwise.
pub fn inverse(a: &Mat2) -> Mat2 {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

fn max_abs(a: &Mat2) -> f64 {
    a[0][0].abs().max(a[0][1].abs()).max(a[1][0].abs()).max(a[1][1].abs())
}

/// `2^exp * entries`, with `max|entries|` kept in `[1/2, 1)` by exact
/// power-of-two rescaling after every operation.
///
/// The determinant is carried multiplicatively alongside the entries: for a
/// long hyperbolic product the normalized entries are numerically rank one
/// and `det(entries)` is pure rounding noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledMatrix2 {
    entries: Mat2,
    exp: i64,
    det: LogScalar,
}

impl ScaledMatrix2 {
    pub fn identity() -> Self {
        Self::from_mat(&IDENTITY)
    }

    pub fn from_mat(m: &Mat2) -> Self {
        Self::normalized(*m, 0, LogScalar::from_f64(det(m)))
    }

    /// `scale * m` for an extended-range `scale`.
    pub fn from_scaled(m: &Mat2, scale: LogScalar) -> Self {
        let mut out = Self::from_mat(m);
        if scale.is_zero() {
            return Self::normalized([[0.0; 2]; 2], 0, LogScalar::ZERO);
        }
        let s = scale.mantissa() * scale.sign() as f64;
        for row in out.entries.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        let d = out.det * scale * scale;
        Self::normalized(out.entries, out.exp + scale.exponent(), d)
    }

    /// From extended-range entries and a known determinant.
    pub fn from_entries(e: &[[LogScalar; 2]; 2], det: LogScalar) -> Self {
        let top = e.iter().flatten().filter(|v| !v.is_zero()).map(|v| v.exponent()).max();
        let Some(top) = top else {
            return Self::normalized([[0.0; 2]; 2], 0, LogScalar::ZERO);
        };
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = e[i][j].scale_pow2(-top).to_f64();
            }
        }
        Self::normalized(m, top, det)
    }

    fn normalized(mut m: Mat2, exp: i64, det: LogScalar) -> Self {
        let mx = max_abs(&m);
        if mx == 0.0 || !mx.is_finite() {
            assert!(mx.is_finite(), "non-finite entries in ScaledMatrix2");
            return ScaledMatrix2 { entries: m, exp: 0, det: LogScalar::ZERO };
        }
        let (_, e) = split_f64(mx);
        // max in [2^e, 2^(e+1)); shift so it lands in [1/2, 1)
        let shift = -(e + 1);
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v = ldexp(*v, shift);
            }
        }
        ScaledMatrix2 { entries: m, exp: exp - shift, det }
    }

    pub fn entries(&self) -> &Mat2 {
        &self.entries
    }

    /// Binary exponent of the scale factor.
    pub fn exponent(&self) -> i64 {
        self.exp
    }

    /// Natural-log scale: the true matrix is `e^logscale * entries`.
    pub fn logscale(&self) -> f64 {
        self.exp as f64 * LN2_HI + self.exp as f64 * LN2_LO
    }

    pub fn is_zero(&self) -> bool {
        max_abs(&self.entries) == 0.0
    }

    pub fn mul(&self, rhs: &ScaledMatrix2) -> ScaledMatrix2 {
        Self::normalized(mat_mul(&self.entries, &rhs.entries), self.exp + rhs.exp, self.det * rhs.det)
    }

    /// Left-multiplies by an unscaled matrix: `m * self`.
    pub fn premul(&self, m: &Mat2) -> ScaledMatrix2 {
        Self::normalized(mat_mul(m, &self.entries), self.exp, self.det.mul_f64(det(m)))
    }

    pub fn entry(&self, i: usize, j: usize) -> LogScalar {
        LogScalar::from_f64(self.entries[i][j]).scale_pow2(self.exp)
    }

    /// Determinant carried through the products.
    pub fn det(&self) -> LogScalar {
        self.det
    }

    /// Determinant recomputed from the normalized entries, `det(entries) * 2^(2 exp)`.
    pub fn det_from_entries(&self) -> LogScalar {
        LogScalar::from_f64(det(&self.entries)).scale_pow2(2 * self.exp)
    }

    /// `ln` of the spectral norm.
    pub fn log_norm(&self) -> f64 {
        self.norm().logmag()
    }

    pub fn norm(&self) -> LogScalar {
        LogScalar::from_f64(spectral_norm(&self.entries)).scale_pow2(self.exp)
    }

    /// `self - other`, aligned on the larger exponent.
    pub fn sub(&self, other: &ScaledMatrix2) -> ScaledMatrix2 {
        if other.is_zero() {
            return *self;
        }
        if self.is_zero() {
            return other.neg();
        }
        let e = self.exp.max(other.exp);
        let a = self.shifted(self.exp - e);
        let b = other.shifted(other.exp - e);
        let m = mat_sub(&a, &b);
        Self::normalized(m, e, LogScalar::from_f64(det(&m)).scale_pow2(2 * e))
    }

    pub fn add(&self, other: &ScaledMatrix2) -> ScaledMatrix2 {
        self.sub(&other.neg())
    }

    pub fn neg(&self) -> ScaledMatrix2 {
        let m = &self.entries;
        ScaledMatrix2 { entries: [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]], exp: self.exp, det: self.det }
    }

    fn shifted(&self, k: i64) -> Mat2 {
        let mut m = self.entries;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v = if k < -1100 { 0.0 } else { ldexp(*v, k) };
            }
        }
        m
    }

    /// Inverse via the adjugate and the carried determinant:
    /// `(2^e M)^-1 = 2^e adj(M) / det`.
    pub fn inverse(&self) -> ScaledMatrix2 {
        let m = &self.entries;
        let adj = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]];
        let inv_det = self.det.recip();
        let mut out = ScaledMatrix2::from_scaled(&adj, inv_det.scale_pow2(self.exp));
        out.det = inv_det;
        out
    }

    /// Applies the matrix to an extended-range column vector.
    pub fn apply(&self, v: [LogScalar; 2]) -> [LogScalar; 2] {
        let m = &self.entries;
        let row = |i: usize| {
            (LogScalar::from_f64(m[i][0]) * v[0] + LogScalar::from_f64(m[i][1]) * v[1]).scale_pow2(self.exp)
        };
        [row(0), row(1)]
    }

    /// Conversion to plain binary64 (saturating).
    pub fn to_mat(&self) -> Mat2 {
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.entry(i, j).to_f64();
            }
        }
        out
    }
}

/// `2^exp * (x0, x1)` with `max|x|` in `[1/2, 1)`; used for step-by-step
/// propagation so a decaying solution keeps full relative precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledVec2 {
    x: [f64; 2],
    exp: i64,
}

impl ScaledVec2 {
    pub fn new(v: [LogScalar; 2]) -> Self {
        let top = v.iter().filter(|a| !a.is_zero()).map(|a| a.exponent()).max().unwrap_or(0);
        let x = [v[0].scale_pow2(-top).to_f64(), v[1].scale_pow2(-top).to_f64()];
        ScaledVec2 { x, exp: top }.normalized()
    }

    fn normalized(mut self) -> Self {
        let mx = self.x[0].abs().max(self.x[1].abs());
        if mx == 0.0 {
            self.exp = 0;
            return self;
        }
        let (_, e) = split_f64(mx);
        let shift = -(e + 1);
        self.x = [ldexp(self.x[0], shift), ldexp(self.x[1], shift)];
        self.exp -= shift;
        self
    }

    /// `m * self`.
    pub fn premul(&self, m: &Mat2) -> Self {
        let x = [m[0][0] * self.x[0] + m[0][1] * self.x[1], m[1][0] * self.x[0] + m[1][1] * self.x[1]];
        ScaledVec2 { x, exp: self.exp }.normalized()
    }

    /// Schrodinger step `(u, w) -> (c u - w, u)`; exact in the second slot.
    pub fn step(&self, c: f64) -> Self {
        ScaledVec2 { x: [c * self.x[0] - self.x[1], self.x[0]], exp: self.exp }.normalized()
    }

    /// Inverse step `(u, w) -> (w, c w - u)`.
    pub fn step_back(&self, c: f64) -> Self {
        ScaledVec2 { x: [self.x[1], c * self.x[1] - self.x[0]], exp: self.exp }.normalized()
    }

    pub fn get(&self, i: usize) -> LogScalar {
        LogScalar::from_f64(self.x[i]).scale_pow2(self.exp)
    }

    pub fn to_log(&self) -> [LogScalar; 2] {
        [self.get(0), self.get(1)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_neutral() {
        let m = ScaledMatrix2::from_mat(&[[3.0, -1.0], [1.0, 0.0]]);
        let p = ScaledMatrix2::identity().mul(&m);
        assert_eq!(p, m);
        assert_eq!(p.to_mat(), [[3.0, -1.0], [1.0, 0.0]]);
    }

    #[test]
    fn inverse_product_is_identity() {
        let a = [[2.5, -1.0], [1.0, 0.0]];
        let m = ScaledMatrix2::from_mat(&a);
        let p = m.mul(&m.inverse()).to_mat();
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_powers() {
        let d = ScaledMatrix2::from_mat(&[[2.0, 0.0], [0.0, 0.5]]);
        let mut p = ScaledMatrix2::identity();
        for _ in 0..10_000 {
            p = p.mul(&d);
        }
        assert!((p.log_norm() - 10_000.0 * 2f64.ln()).abs() < 1e-9);
        assert!(p.entries()[1][1] == 0.0 || p.entry(1, 1).logmag() < -6000.0);
        assert!((p.det().logmag()).abs() < 1e-9);
        assert!(p.det_from_entries().is_zero());
        let top = p.entries()[0][0];
        assert!((0.5..1.0).contains(&top));
    }

    #[test]
    fn spectral_norm_matches_eigen() {
        let a = [[1.0, 2.0], [3.0, 4.0]];
        // sigma_max^2 = largest eigenvalue of A^T A = [[10,14],[14,20]]
        let tr: f64 = 30.0;
        let d = 200.0 - 196.0;
        let lam = 0.5 * (tr + (tr * tr - 4.0 * d).sqrt());
        assert!((spectral_norm(&a) - lam.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn normalization_bounds() {
        let m = ScaledMatrix2::from_mat(&[[1e300, 3.0], [-7e299, 0.0]]);
        let mx = m.entries().iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!((0.5..1.0).contains(&mx));
        assert!((m.entry(0, 0).to_f64() - 1e300).abs() < 1e285);
    }
}
