//! Phase descriptors and exact reduction of `theta + x alpha` modulo one.

use astro_float::Consts;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::cf::Frequency;
use crate::error::{Error, Result};
use crate::numerics::{hp, ExtReal, HpFloat};

/// `theta = (m alpha + l) / 2` (completely resonant, `2 theta` in `alpha Z + Z`)
/// or a plain real.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phase {
    Resonant { m: i64, l: i64 },
    Real { value: f64 },
}

impl Default for Phase {
    fn default() -> Self {
        Phase::Resonant { m: 0, l: 0 }
    }
}

/// `((K alpha + l) / 2) mod 1`.
fn half_frac(freq: &Frequency, k: i64, l: i64) -> Result<f64> {
    let (fl, fr) = freq.reducer()?.split(k as i128)?;
    let parity = (fl + l as i128).rem_euclid(2) as f64;
    Ok(((parity + fr) / 2.0).rem_euclid(1.0))
}

impl Phase {
    pub fn is_resonant(&self) -> bool {
        matches!(self, Phase::Resonant { .. })
    }

    /// `theta` reduced to `[0, 1)`.
    pub fn value(&self, freq: &Frequency) -> Result<f64> {
        self.site(freq, 0)
    }

    /// `theta + x alpha` reduced to `[0, 1)`.
    pub fn site(&self, freq: &Frequency, x: i64) -> Result<f64> {
        self.site_half(freq, 2 * x)
    }

    /// `theta + (t / 2) alpha` reduced to `[0, 1)`.
    pub fn site_half(&self, freq: &Frequency, t: i64) -> Result<f64> {
        match *self {
            Phase::Resonant { m, l } => half_frac(freq, m + t, l),
            Phase::Real { value } => {
                let h = half_frac(freq, t, 0)?;
                Ok((value + h).rem_euclid(1.0))
            }
        }
    }

    /// The phase `theta + x alpha`.
    pub fn shifted(&self, freq: &Frequency, x: i64) -> Result<Phase> {
        Ok(match *self {
            Phase::Resonant { m, l } => Phase::Resonant { m: m + 2 * x, l },
            Phase::Real { .. } => Phase::Real { value: self.site(freq, x)? },
        })
    }

    /// The phase `theta + (t / 2) alpha`.
    pub fn shifted_half(&self, freq: &Frequency, t: i64) -> Result<Phase> {
        Ok(match *self {
            Phase::Resonant { m, l } => Phase::Resonant { m: m + t, l },
            Phase::Real { .. } => Phase::Real { value: self.site_half(freq, t)? },
        })
    }

    /// `||2 theta + k alpha||`; `None` when it vanishes exactly.
    ///
    /// Real phases are only trusted down to a few ulps; closer approaches
    /// report `PrecisionExhausted`.
    pub fn dist_twice_plus(&self, freq: &Frequency, k: i64) -> Result<Option<f64>> {
        match *self {
            Phase::Resonant { m, .. } => {
                let kk = m + k;
                if kk == 0 {
                    return Ok(None);
                }
                Ok(Some(freq.reducer()?.dist(kk as i128)?))
            }
            Phase::Real { value } => {
                let (_, f) = freq.reducer()?.split(k as i128)?;
                let x = (2.0 * value + f).rem_euclid(1.0);
                let d = x.min(1.0 - x);
                let err = 8.0 * f64::EPSILON * (1.0 + (k as f64).abs() * 1e-16 + 2.0 * value.abs());
                if d <= err {
                    return Err(Error::PrecisionExhausted(format!(
                        "||2 theta + {k} alpha|| = {d:e} is below the binary64 error bound"
                    )));
                }
                Ok(Some(d))
            }
        }
    }

    /// Potential values `2 cos 2 pi (theta + x alpha)` for `x` in `lo..=hi`.
    pub fn cos_sites(&self, freq: &Frequency, lo: i64, hi: i64) -> Result<Vec<f64>> {
        (lo..=hi).map(|x| Ok((2.0 * std::f64::consts::PI * self.site(freq, x)?).cos())).collect()
    }
}

/// Phases in software floating point: `alpha` comes from a convergent deep
/// enough that `K alpha` is correct to `bits` bits for `|K| <= kmax`.
pub struct HpPhases {
    alpha: HpFloat,
    two_theta: HpFloat,
    bits: usize,
    cc: Consts,
}

impl HpPhases {
    pub fn new(freq: &Frequency, theta: &Phase, bits: usize, kmax: u64) -> Result<Self> {
        let need = bits as f64 * std::f64::consts::LN_2 + ((kmax.max(1) as f64) * 4.0).ln() + 8.0;
        let mut n = 1;
        loop {
            let s = freq.ln_q(n)? + freq.ln_q(n + 1)?;
            if s >= need {
                break;
            }
            n += 1;
        }
        let (p, q) = freq.convergent(n)?;
        let wide = bits + 64;
        let alpha = HpFloat::ratio(&BigInt::from(p), &BigInt::from(q), wide);
        let two_theta = match *theta {
            Phase::Resonant { m, l } => {
                let ma = alpha.mul(&HpFloat::from_i128(m as i128, wide));
                ma.add(&HpFloat::from_i128(l as i128, wide))
            }
            Phase::Real { value } => HpFloat::from_f64(2.0 * value, wide),
        };
        Ok(HpPhases { alpha, two_theta, bits: wide, cc: hp::consts() })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// `theta + (t / 2) alpha` as a software float, not reduced.
    pub fn site_half(&self, t: i64) -> HpFloat {
        let ta = self.alpha.mul(&HpFloat::from_i128(t as i128, self.bits));
        let s = self.two_theta.add(&ta);
        s.mul(&HpFloat::from_f64(0.5, self.bits))
    }

    /// `2 cos 2 pi (theta + x alpha)`.
    pub fn potential(&mut self, x: i64) -> HpFloat {
        let s = self.site_half(2 * x);
        let c = s.cos_2pi(&mut self.cc);
        c.add(&c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonant_sites_match_float() {
        let g = Frequency::golden();
        let a = g.alpha_f64().unwrap();
        let th = Phase::Resonant { m: 3, l: 1 };
        for x in [-50i64, -1, 0, 7, 123] {
            let want = ((3.0 * a + 1.0) / 2.0 + x as f64 * a).rem_euclid(1.0);
            let got = th.site(&g, x).unwrap();
            let d = (got - want).abs();
            assert!(d.min(1.0 - d) < 1e-13, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn half_steps() {
        let g = Frequency::golden();
        let a = g.alpha_f64().unwrap();
        let th = Phase::Real { value: 0.1 };
        let got = th.site_half(&g, 5).unwrap();
        assert!((got - (0.1 + 2.5 * a).rem_euclid(1.0)).abs() < 1e-13);
    }

    #[test]
    fn shifted_stays_resonant() {
        let g = Frequency::golden();
        let th = Phase::Resonant { m: 0, l: 0 };
        let s = th.shifted(&g, 4).unwrap();
        assert_eq!(s, Phase::Resonant { m: 8, l: 0 });
        assert!((s.value(&g).unwrap() - th.site(&g, 4).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn hp_potential_agrees() {
        let g = Frequency::golden();
        let th = Phase::Resonant { m: 1, l: 0 };
        let mut hp = HpPhases::new(&g, &th, 256, 1000).unwrap();
        for x in [0i64, 5, -17, 999] {
            let f = 2.0 * (2.0 * std::f64::consts::PI * th.site(&g, x).unwrap()).cos();
            assert!((hp.potential(x).to_f64() - f).abs() < 1e-13);
        }
    }
}
