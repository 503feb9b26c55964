//! Extended-range arithmetic: scalars, 2x2 matrices and a software float
//! backend for the high-precision mode.

pub mod hp;
pub mod log_scalar;
pub mod matrix;

pub use hp::{ExtReal, HpFloat, PrecisionMode};
pub use log_scalar::{LogScalar, Sum, CANCELLATION_THRESHOLD};
pub use matrix::{det, inverse, mat_add, mat_mul, mat_sub, spectral_norm, Mat2, ScaledMatrix2, ScaledVec2, IDENTITY};

/// High word of `ln 2`; its trailing bits are zero so `k * LN2_HI` is exact
/// for `|k| < 2^20`.
pub const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
pub const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

/// `x * 2^k` without intermediate overflow or underflow for `|k|` up to a
/// few thousand.
pub fn ldexp(x: f64, k: i64) -> f64 {
    let mut x = x;
    let mut k = k.clamp(-2200, 2200);
    while k > 1000 {
        x *= f64::from_bits(((1000 + 1023) as u64) << 52);
        k -= 1000;
    }
    while k < -1000 {
        x *= f64::from_bits(((-1000i64 + 1023) as u64) << 52);
        k += 1000;
    }
    x * f64::from_bits(((k + 1023) as u64) << 52)
}

/// Splits a finite nonzero `x` into `(m, e)` with `|x| = m 2^e`, `m` in `[1, 2)`.
pub fn split_f64(x: f64) -> (f64, i64) {
    let a = x.abs();
    debug_assert!(a > 0.0 && a.is_finite());
    let bits = a.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal: renormalize through an exact 2^64 scaling
        let (m, e) = split_f64(a * f64::from_bits(((64 + 1023) as u64) << 52));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & ((1u64 << 52) - 1)) | (1023u64 << 52));
    (m, raw - 1023)
}
