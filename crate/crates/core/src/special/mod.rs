//! Faddeeva and Moshinsky functions.

mod faddeeva;
mod moshinsky;

pub use faddeeva::{faddeeva, faddeeva_scaled};
pub use moshinsky::{
    asymptotic_coefficient, moshinsky_argument_lifetime_units, moshinsky_asymptotic,
    moshinsky_asymptotic_with, moshinsky_m, moshinsky_m_scaled, moshinsky_reflect,
    ArgumentKind, AsymptoticValue, MoshinskyArgument, ASYMPTOTIC_MIN_MODULUS,
};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex number stored as `mantissa * exp(log_scale)`, so that values far
/// outside the double range can still be carried around and combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn unscaled(value: Complex64) -> Self {
        Self {
            mantissa: value,
            log_scale: 0.0,
        }
    }

    /// `exp(z)` without overflow.
    pub fn exp(z: Complex64) -> Self {
        Self {
            mantissa: Complex64::from_polar(1.0, z.im),
            log_scale: z.re,
        }
    }

    /// Natural log of the modulus.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// Re-expresses the value with the given exponent.
    pub fn mantissa_at(&self, log_scale: f64) -> Complex64 {
        let shift = self.log_scale - log_scale;
        if self.mantissa == Complex64::new(0.0, 0.0) {
            return self.mantissa;
        }
        self.mantissa * shift.exp()
    }

    pub fn scale(self, factor: Complex64) -> Self {
        Self {
            mantissa: self.mantissa * factor,
            log_scale: self.log_scale,
        }
    }

    /// `self - other`, computed at the larger of the two exponents.
    pub fn sub(self, other: Scaled) -> Self {
        let s = self.log_scale.max(other.log_scale);
        Self {
            mantissa: self.mantissa_at(s) - other.mantissa_at(s),
            log_scale: s,
        }
    }

    pub fn add(self, other: Scaled) -> Self {
        let s = self.log_scale.max(other.log_scale);
        Self {
            mantissa: self.mantissa_at(s) + other.mantissa_at(s),
            log_scale: s,
        }
    }

    /// Plain complex value, or an overflow error if it is not representable.
    pub fn to_complex(&self, what: &'static str) -> Result<Complex64> {
        let m = self.mantissa;
        if m.re.is_nan() || m.im.is_nan() || m == Complex64::new(0.0, 0.0) {
            return Ok(m);
        }
        let v = if self.log_scale.abs() < 700.0 {
            m * self.log_scale.exp()
        } else {
            Complex64::from_polar(self.ln_abs().exp(), m.arg())
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow(what))
        }
    }
}
