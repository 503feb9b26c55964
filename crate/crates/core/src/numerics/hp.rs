//! Software floating point backend (astro-float) for the high-precision mode.

use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as BigSign};
use serde::{Deserialize, Serialize};

use super::{split_f64, LogScalar};

const RM: RoundingMode = RoundingMode::ToEven;

/// Arithmetic selection for determinant recursions and transfer products.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionMode {
    /// Binary64 mantissas with an unbounded exponent.
    Binary64,
    /// Software floats with at least `bits` mantissa bits.
    High { bits: usize },
    /// Binary64 unless the expected cancellation exceeds its reach.
    #[default]
    Auto,
}

impl PrecisionMode {
    pub fn parse(s: &str) -> Option<PrecisionMode> {
        match s {
            "binary64" => Some(PrecisionMode::Binary64),
            "auto" => Some(PrecisionMode::Auto),
            "high" => Some(PrecisionMode::High { bits: 256 }),
            _ => s
                .strip_prefix("high:")
                .and_then(|b| b.parse().ok())
                .filter(|&b: &usize| b >= 64)
                .map(|bits| PrecisionMode::High { bits }),
        }
    }
}

/// Common surface of the two extended-range scalar types, enough for the
/// three-term determinant recursion and 2x2 products.
pub trait ExtReal: Clone + Send + Sync {
    /// `x` at the precision of `self`.
    fn lift(&self, x: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn to_log_scalar(&self) -> LogScalar;
}

impl ExtReal for LogScalar {
    fn lift(&self, x: f64) -> Self {
        LogScalar::from_f64(x)
    }
    fn add(&self, o: &Self) -> Self {
        LogScalar::add(*self, *o)
    }
    fn sub(&self, o: &Self) -> Self {
        LogScalar::sub(*self, *o)
    }
    fn mul(&self, o: &Self) -> Self {
        *self * *o
    }
    fn to_log_scalar(&self) -> LogScalar {
        *self
    }
}

/// Thin wrapper over `BigFloat` that carries its working precision.
#[derive(Clone)]
pub struct HpFloat {
    v: BigFloat,
    bits: usize,
}

impl HpFloat {
    pub fn zero(bits: usize) -> Self {
        HpFloat { v: BigFloat::from_word(0, bits), bits }
    }

    pub fn from_f64(x: f64, bits: usize) -> Self {
        HpFloat { v: BigFloat::from_f64(x, bits), bits }
    }

    pub fn from_i128(x: i128, bits: usize) -> Self {
        HpFloat { v: BigFloat::from_i128(x, bits), bits }
    }

    pub fn from_bigint(x: &BigInt, bits: usize) -> Self {
        let (sign, digits) = x.to_u64_digits();
        let p = bits.max(64 * digits.len() + 64);
        let mut acc = BigFloat::from_word(0, p);
        for d in digits.iter().rev() {
            let mut shifted = acc.clone();
            if !shifted.is_zero() {
                let e = shifted.exponent().expect("finite");
                shifted.set_exponent(e + 64);
            }
            acc = shifted.add(&BigFloat::from_u64(*d, p), p, RM);
        }
        if sign == BigSign::Minus {
            acc = acc.neg();
        }
        let mut v = acc;
        v.set_precision(bits, RM).expect("precision");
        HpFloat { v, bits }
    }

    /// `num / den` rounded to `bits`.
    pub fn ratio(num: &BigInt, den: &BigInt, bits: usize) -> Self {
        let a = HpFloat::from_bigint(num, bits + 64);
        let b = HpFloat::from_bigint(den, bits + 64);
        HpFloat { v: a.v.div(&b.v, bits, RM), bits }
    }

    /// Exact conversion of an extended-range scalar.
    pub fn from_log_scalar(x: &LogScalar, bits: usize) -> Self {
        if x.is_zero() {
            return Self::zero(bits);
        }
        let mut v = BigFloat::from_f64(x.mantissa() * x.sign() as f64, bits);
        let e = v.exponent().expect("finite") as i64 + x.exponent();
        v.set_exponent(i32::try_from(e).expect("exponent within the software float range"));
        HpFloat { v, bits }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn inner(&self) -> &BigFloat {
        &self.v
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn neg(&self) -> Self {
        HpFloat { v: self.v.neg(), bits: self.bits }
    }

    pub fn abs(&self) -> Self {
        HpFloat { v: self.v.abs(), bits: self.bits }
    }

    pub fn div(&self, o: &Self) -> Self {
        HpFloat { v: self.v.div(&o.v, self.bits, RM), bits: self.bits }
    }

    /// `x - floor(x)`.
    pub fn frac(&self) -> Self {
        let f = self.v.floor();
        HpFloat { v: self.v.sub(&f, self.bits, RM), bits: self.bits }
    }

    /// `cos(2 pi x)`, reducing `x` modulo 1 first.
    pub fn cos_2pi(&self, cc: &mut Consts) -> Self {
        let p = self.bits + 32;
        let t = self.frac();
        let pi = cc.pi(p, RM);
        let arg = t.v.mul(&pi, p, RM);
        let mut arg2 = arg.clone();
        if !arg2.is_zero() {
            let e = arg2.exponent().expect("finite");
            arg2.set_exponent(e + 1);
        }
        let c = arg2.cos(p, RM, cc);
        let mut c = c;
        c.set_precision(self.bits, RM).expect("precision");
        HpFloat { v: c, bits: self.bits }
    }

    pub fn cmp_abs(&self, o: &Self) -> Ordering {
        match self.v.abs_cmp(&o.v) {
            Some(x) if x < 0 => Ordering::Less,
            Some(0) => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }

    /// Nearest extended-range scalar (the top 64 mantissa bits, rounded once).
    pub fn to_log_scalar(&self) -> LogScalar {
        if self.v.is_zero() {
            return LogScalar::ZERO;
        }
        let (words, _, sign, e, _) = self.v.as_raw_parts().expect("finite value");
        let top = *words.last().expect("nonempty mantissa");
        // value = 0.top... * 2^e with the top bit of `top` set
        let m = top as f64 / 2f64.powi(64);
        let (mm, me) = split_f64(m);
        let s = if sign == Sign::Neg { -1 } else { 1 };
        LogScalar::from_parts(s, mm, me + e as i64)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_log_scalar().to_f64()
    }
}

impl ExtReal for HpFloat {
    fn lift(&self, x: f64) -> Self {
        HpFloat::from_f64(x, self.bits)
    }
    fn add(&self, o: &Self) -> Self {
        HpFloat { v: self.v.add(&o.v, self.bits, RM), bits: self.bits }
    }
    fn sub(&self, o: &Self) -> Self {
        HpFloat { v: self.v.sub(&o.v, self.bits, RM), bits: self.bits }
    }
    fn mul(&self, o: &Self) -> Self {
        HpFloat { v: self.v.mul(&o.v, self.bits, RM), bits: self.bits }
    }
    fn to_log_scalar(&self) -> LogScalar {
        HpFloat::to_log_scalar(self)
    }
}

impl fmt::Debug for HpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HpFloat({:?} @ {} bits)", self.to_log_scalar(), self.bits)
    }
}

/// Fresh constant cache; `Consts::new` only fails on allocation failure.
pub fn consts() -> Consts {
    Consts::new().expect("constant cache")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_scalar_round_trip() {
        for &(s, m, e) in &[(1i8, 1.25, 0i64), (-1, 1.999, 140_000), (1, 1.0, -90_000), (1, 1.1, 3)] {
            let x = LogScalar::from_parts(s, m, e);
            let h = HpFloat::from_log_scalar(&x, 256);
            assert_eq!(h.to_log_scalar(), x);
        }
    }

    #[test]
    fn bigint_and_ratio() {
        let n: BigInt = "123456789012345678901234567890123".parse().unwrap();
        let h = HpFloat::from_bigint(&n, 256);
        assert!((h.to_f64() - 1.2345678901234568e32).abs() < 1e17);
        let r = HpFloat::ratio(&BigInt::from(1), &BigInt::from(3), 200);
        assert!((r.to_f64() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn cos_two_pi() {
        let mut cc = consts();
        for &t in &[0.0, 0.25, 0.125, 1.75, -0.3] {
            let c = HpFloat::from_f64(t, 256).cos_2pi(&mut cc).to_f64();
            assert!((c - (2.0 * std::f64::consts::PI * t).cos()).abs() < 1e-15, "t={t}");
        }
    }

    #[test]
    fn precision_mode_parse() {
        assert_eq!(PrecisionMode::parse("high:512"), Some(PrecisionMode::High { bits: 512 }));
        assert_eq!(PrecisionMode::parse("auto"), Some(PrecisionMode::Auto));
        assert_eq!(PrecisionMode::parse("high:8"), None);
    }
}
