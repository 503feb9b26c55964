//! Sign and magnitude scalar with an unbounded binary exponent.
//!
//! A `LogScalar` stores `sign * mantissa * 2^exponent` with the mantissa in
//! `[1, 2)` and a 64-bit exponent, so it covers magnitudes such as `e^(10^5)`
//! (and far beyond) at full binary64 relative precision. The log-magnitude
//! view `ln|x|` is available through [`LogScalar::logmag`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul, Neg};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ldexp, split_f64, LN2_HI, LN2_LO};

/// Relative magnitude gap below which an opposite-sign addition is reported
/// as a catastrophic cancellation.
pub const CANCELLATION_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq)]
pub struct LogScalar {
    sign: i8,
    mant: f64,
    exp: i64,
}

/// Result of [`LogScalar::log_add`]: the sum plus the cancellation flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sum {
    pub value: LogScalar,
    pub cancellation: bool,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar { sign: 0, mant: 0.0, exp: 0 };
    pub const ONE: LogScalar = LogScalar { sign: 1, mant: 1.0, exp: 0 };

    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "LogScalar::from_f64 on non-finite value {x}");
        if x == 0.0 {
            return Self::ZERO;
        }
        let (mant, exp) = split_f64(x.abs());
        LogScalar { sign: if x > 0.0 { 1 } else { -1 }, mant, exp }
    }

    /// Builds `sign * e^logmag`. A zero sign gives zero regardless of `logmag`.
    pub fn from_log(sign: i8, logmag: f64) -> Self {
        if sign == 0 || logmag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        assert!(logmag.is_finite(), "LogScalar::from_log on non-finite log {logmag}");
        let e = (logmag / std::f64::consts::LN_2).floor();
        let r = (logmag - e * LN2_HI) - e * LN2_LO;
        let (mant, exp) = split_f64(r.exp());
        LogScalar { sign: sign.signum(), mant, exp: exp + e as i64 }
    }

    /// Raw constructor from mantissa and binary exponent; the mantissa is
    /// renormalized.
    pub fn from_parts(sign: i8, mantissa: f64, exponent: i64) -> Self {
        if sign == 0 || mantissa == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = split_f64(mantissa.abs());
        let s = sign.signum() * if mantissa < 0.0 { -1 } else { 1 };
        LogScalar { sign: s, mant: m, exp: e + exponent }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Mantissa in `[1, 2)` (zero for zero).
    pub fn mantissa(&self) -> f64 {
        self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    /// `ln|x|`; `-inf` for zero.
    pub fn logmag(&self) -> f64 {
        if self.sign == 0 {
            return f64::NEG_INFINITY;
        }
        self.mant.ln() + (self.exp as f64) * LN2_HI + (self.exp as f64) * LN2_LO
    }

    /// `log10|x|`; `-inf` for zero.
    pub fn log10mag(&self) -> f64 {
        self.logmag() / std::f64::consts::LN_10
    }

    /// Conversion to binary64; saturates to `±inf` or `±0` out of range.
    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let v = if self.exp > 2000 {
            f64::INFINITY
        } else if self.exp < -2200 {
            0.0
        } else {
            ldexp(self.mant, self.exp)
        };
        if self.sign < 0 {
            -v
        } else {
            v
        }
    }

    pub fn abs(&self) -> Self {
        LogScalar { sign: self.sign.abs(), ..*self }
    }

    pub fn recip(&self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero LogScalar");
        LogScalar::from_parts(self.sign, 1.0 / self.mant, -self.exp)
    }

    pub fn mul_f64(&self, x: f64) -> Self {
        *self * LogScalar::from_f64(x)
    }

    /// Multiplication by `2^k`, exact.
    pub fn scale_pow2(&self, k: i64) -> Self {
        if self.sign == 0 {
            return *self;
        }
        LogScalar { exp: self.exp + k, ..*self }
    }

    /// Sum with explicit cancellation reporting. The larger magnitude is used
    /// as pivot; the smaller term is aligned by an exact power-of-two shift so
    /// the only rounding is the final addition.
    pub fn log_add(a: LogScalar, b: LogScalar) -> Sum {
        if a.sign == 0 {
            return Sum { value: b, cancellation: false };
        }
        if b.sign == 0 {
            return Sum { value: a, cancellation: false };
        }
        let (big, small) = if a.cmp_abs(&b) == Ordering::Less { (b, a) } else { (a, b) };
        let shift = small.exp - big.exp;
        if shift < -1100 {
            return Sum { value: big, cancellation: false };
        }
        let aligned = ldexp(small.mant, shift);
        let opposite = big.sign != small.sign;
        let cancellation = opposite && (big.mant - aligned) <= CANCELLATION_THRESHOLD * big.mant;
        let s = if opposite { big.mant - aligned } else { big.mant + aligned };
        if s == 0.0 {
            return Sum { value: LogScalar::ZERO, cancellation };
        }
        Sum { value: LogScalar::from_parts(big.sign, s, big.exp), cancellation }
    }

    pub fn add(self, other: LogScalar) -> LogScalar {
        Self::log_add(self, other).value
    }

    pub fn sub(self, other: LogScalar) -> LogScalar {
        Self::log_add(self, -other).value
    }

    /// Compares magnitudes.
    pub fn cmp_abs(&self, other: &LogScalar) -> Ordering {
        match (self.sign == 0, other.sign == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self
                .exp
                .cmp(&other.exp)
                .then(self.mant.partial_cmp(&other.mant).unwrap_or(Ordering::Equal)),
        }
    }

    /// Signed total order.
    pub fn cmp_value(&self, other: &LogScalar) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.cmp_abs(other),
                _ => other.cmp_abs(self),
            },
            o => o,
        }
    }

    pub fn max_abs(self, other: LogScalar) -> LogScalar {
        if self.cmp_abs(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    /// Relative difference `|a - b| / max(|a|, |b|)` as binary64.
    pub fn rel_diff(&self, other: &LogScalar) -> f64 {
        let d = self.sub(*other);
        let scale = self.abs().max_abs(other.abs());
        if scale.is_zero() {
            return 0.0;
        }
        (d / scale).abs().to_f64()
    }
}

impl Default for LogScalar {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            1 => "+",
            -1 => "-",
            _ => return write!(f, "LogScalar(0)"),
        };
        write!(f, "LogScalar({s}e^{:.15})", self.logmag())
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => {
                let l10 = self.log10mag();
                let e = l10.floor();
                let m = 10f64.powf(l10 - e) * s as f64;
                write!(f, "{m:.12}e{e}")
            }
        }
    }
}

impl Neg for LogScalar {
    type Output = LogScalar;
    fn neg(self) -> LogScalar {
        LogScalar { sign: -self.sign, ..self }
    }
}

impl Mul for LogScalar {
    type Output = LogScalar;
    fn mul(self, rhs: LogScalar) -> LogScalar {
        if self.sign == 0 || rhs.sign == 0 {
            return LogScalar::ZERO;
        }
        LogScalar::from_parts(self.sign * rhs.sign, self.mant * rhs.mant, self.exp + rhs.exp)
    }
}

impl Div for LogScalar {
    type Output = LogScalar;
    fn div(self, rhs: LogScalar) -> LogScalar {
        assert!(rhs.sign != 0, "division of LogScalar by zero");
        if self.sign == 0 {
            return LogScalar::ZERO;
        }
        LogScalar::from_parts(self.sign * rhs.sign, self.mant / rhs.mant, self.exp - rhs.exp)
    }
}

impl std::ops::Add for LogScalar {
    type Output = LogScalar;
    fn add(self, rhs: LogScalar) -> LogScalar {
        LogScalar::log_add(self, rhs).value
    }
}

impl std::ops::Sub for LogScalar {
    type Output = LogScalar;
    fn sub(self, rhs: LogScalar) -> LogScalar {
        LogScalar::log_add(self, -rhs).value
    }
}

impl From<f64> for LogScalar {
    fn from(x: f64) -> Self {
        LogScalar::from_f64(x)
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    sign: i8,
    log: Option<f64>,
}

impl Serialize for LogScalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let log = if self.sign == 0 { None } else { Some(self.logmag()) };
        Wire { sign: self.sign, log }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        match (w.sign, w.log) {
            (0, _) => Ok(LogScalar::ZERO),
            (s, Some(l)) if s == 1 || s == -1 => Ok(LogScalar::from_log(s, l)),
            (s, l) => Err(serde::de::Error::custom(format!("invalid LogScalar sign={s} log={l:?}"))),
        }
    }
}
