//! Scaled-exponent arithmetic.
//!
//! Capacities and exit times carry factors like `exp(0.25/0.01) = e^25`
//! which overflow long before the interesting mantissas do.  A
//! [`ScaledValue`] stores `mantissa * exp(shift/eps)` with the shift kept in
//! energy units, so products and ratios of exponentially disparate
//! quantities stay in floating range and shifts cancel exactly when the two
//! sides of a comparison use the same convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MANTISSA_LO: f64 = 1e-3;
const MANTISSA_HI: f64 = 1e3;

/// A positive number represented as `mantissa * exp(shift / eps)`.
///
/// The shift is in energy units and is only divided by `eps` when the value
/// is realized at a concrete noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledValue {
    pub mantissa: f64,
    pub shift: f64,
}

impl ScaledValue {
    pub fn new(mantissa: f64, shift: f64) -> Self {
        ScaledValue { mantissa, shift }
    }

    /// A plain number with no exponential factor.
    pub fn from_plain(value: f64) -> Self {
        ScaledValue { mantissa: value, shift: 0.0 }
    }

    /// Realize the value at noise level `eps`.  May overflow to `inf` for
    /// large positive shifts; use [`ScaledValue::ln_at`] for comparisons.
    pub fn value_at(&self, eps: f64) -> f64 {
        self.mantissa * (self.shift / eps).exp()
    }

    /// Natural log of the value at noise level `eps`.
    pub fn ln_at(&self, eps: f64) -> f64 {
        self.mantissa.ln() + self.shift / eps
    }

    /// Renormalize the mantissa into `[1e-3, 1e3]` by moving log-mass into
    /// the exponent shift.
    pub fn normalized(&self, eps: f64) -> Self {
        let m = self.mantissa;
        if !(MANTISSA_LO..=MANTISSA_HI).contains(&m) && m > 0.0 && m.is_finite() {
            ScaledValue { mantissa: 1.0, shift: self.shift + eps * m.ln() }
        } else {
            *self
        }
    }

    /// Exact sum with exponent alignment.  The larger shift dominates; the
    /// smaller term is folded in through `exp((s_b - s_a)/eps)` and dropped
    /// when it underflows.
    pub fn add(&self, other: &ScaledValue, eps: f64) -> ScaledValue {
        let (hi, lo) = if self.shift >= other.shift { (self, other) } else { (other, self) };
        let rel = ((lo.shift - hi.shift) / eps).exp() * lo.mantissa / hi.mantissa;
        ScaledValue { mantissa: hi.mantissa * (1.0 + rel), shift: hi.shift }.normalized(eps)
    }

    pub fn mul(&self, other: &ScaledValue) -> ScaledValue {
        ScaledValue { mantissa: self.mantissa * other.mantissa, shift: self.shift + other.shift }
    }

    pub fn div(&self, other: &ScaledValue) -> ScaledValue {
        ScaledValue { mantissa: self.mantissa / other.mantissa, shift: self.shift - other.shift }
    }

    pub fn recip(&self) -> Result<ScaledValue> {
        if self.mantissa == 0.0 {
            return Err(Error::ZeroCapacity);
        }
        Ok(ScaledValue { mantissa: 1.0 / self.mantissa, shift: -self.shift })
    }

    pub fn scale(&self, factor: f64) -> ScaledValue {
        ScaledValue { mantissa: self.mantissa * factor, shift: self.shift }
    }

    /// Ratio of two scaled values realized at `eps`, computed in log space.
    pub fn ratio_at(&self, other: &ScaledValue, eps: f64) -> f64 {
        (self.ln_at(eps) - other.ln_at(eps)).exp()
    }
}
