//! Functions on an integer window `[lo, lo + len)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::LogScalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteValues {
    pub lo: i64,
    pub values: Vec<LogScalar>,
}

impl SiteValues {
    pub fn new(lo: i64, values: Vec<LogScalar>) -> Self {
        SiteValues { lo, values }
    }

    pub fn from_f64(lo: i64, values: &[f64]) -> Self {
        SiteValues { lo, values: values.iter().map(|&v| LogScalar::from_f64(v)).collect() }
    }

    /// Builds `f(x)` for `x` in `lo..=hi`.
    pub fn from_fn(lo: i64, hi: i64, f: impl Fn(i64) -> LogScalar) -> Self {
        SiteValues { lo, values: (lo..=hi).map(f).collect() }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.lo && x <= self.hi()
    }

    pub fn get(&self, x: i64) -> Result<LogScalar> {
        if !self.contains(x) {
            return Err(Error::RangeExceeded { site: x, lo: self.lo, hi: self.hi() });
        }
        Ok(self.values[(x - self.lo) as usize])
    }

    pub fn sites(&self) -> impl Iterator<Item = (i64, LogScalar)> + '_ {
        self.values.iter().enumerate().map(move |(i, v)| (self.lo + i as i64, *v))
    }

    /// Rescales so that the value at `x` is one.
    pub fn normalized_at(&self, x: i64) -> Result<SiteValues> {
        let v = self.get(x)?;
        if v.is_zero() {
            return Err(Error::InvalidArgument(format!("cannot normalize: value at {x} is zero")));
        }
        Ok(SiteValues { lo: self.lo, values: self.values.iter().map(|a| *a / v).collect() })
    }

    /// Sites shifted by `-c`, so that the old site `c` becomes 0.
    pub fn recentered(&self, c: i64) -> SiteValues {
        SiteValues { lo: self.lo - c, values: self.values.clone() }
    }
}
