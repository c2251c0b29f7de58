//! Scalar and elementwise arithmetic of the Logarithmic Image Processing model.
//!
//! Grey levels live in `(-inf, M)` with an inverted scale: `0` is white and `M`
//! is black. The isomorphism [`xi`] maps LIP addition onto ordinary addition,
//! which is how every morphological operator in this crate is evaluated.

use crate::error::{Error, Result};

/// Dynamic-range ceiling of 8-bit images.
pub const DEFAULT_CEILING: f64 = 256.0;

/// `a (+) b = a + b - a b / M`.
#[inline]
pub fn lip_add(a: f64, b: f64, m: f64) -> f64 {
    a + b - a * b / m
}

/// `lambda (x) a = M - M (1 - a/M)^lambda`.
#[inline]
pub fn lip_scalar_mul(lambda: f64, a: f64, m: f64) -> f64 {
    m - m * (1.0 - a / m).powf(lambda)
}

/// `(-)a = -a / (1 - a/M)`.
#[inline]
pub fn lip_negate(a: f64, m: f64) -> f64 {
    -a / (1.0 - a / m)
}

/// `a (-) b = (a - b) / (1 - b/M)`.
#[inline]
pub fn lip_sub(a: f64, b: f64, m: f64) -> f64 {
    (a - b) / (1.0 - b / m)
}

/// `xi(a) = -M ln(1 - a/M)`.
///
/// `xi(-inf) = -inf`. Any value at or above the ceiling maps to `+inf`.
#[inline]
pub fn xi(a: f64, m: f64) -> f64 {
    if a >= m {
        f64::INFINITY
    } else {
        -m * (-a / m).ln_1p()
    }
}

/// `xi^-1(u) = M (1 - exp(-u/M))`; `+inf` maps to `M` and `-inf` to `-inf`.
#[inline]
pub fn xi_inv(u: f64, m: f64) -> f64 {
    -m * (-u / m).exp_m1()
}

/// Derivative of [`xi`]: `1 / (1 - a/M)`.
#[inline]
pub fn xi_derivative(a: f64, m: f64) -> f64 {
    1.0 / (1.0 - a / m)
}

/// Derivative of [`xi_inv`]: `exp(-u/M)`.
#[inline]
pub fn xi_inv_derivative(u: f64, m: f64) -> f64 {
    (-u / m).exp()
}

pub(crate) fn check_ceiling(m: f64) -> Result<()> {
    if m.is_finite() && m > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidCeiling(m))
    }
}

pub(crate) fn same_ceiling(left: f64, right: f64) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::CeilingMismatch { left, right })
    }
}

/// A grey level tagged with the ceiling it belongs to.
///
/// Binary operations refuse to mix ceilings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreyLevel {
    value: f64,
    ceiling: f64,
}

impl GreyLevel {
    pub fn new(value: f64, ceiling: f64) -> Result<Self> {
        check_ceiling(ceiling)?;
        if value.is_nan() || value > ceiling {
            return Err(Error::InvalidValue(format!(
                "grey level {value} outside (-inf, {ceiling}]"
            )));
        }
        Ok(GreyLevel { value, ceiling })
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn ceiling(self) -> f64 {
        self.ceiling
    }

    fn with(self, value: f64) -> Self {
        GreyLevel {
            value,
            ceiling: self.ceiling,
        }
    }

    pub fn plus(self, other: GreyLevel) -> Result<Self> {
        same_ceiling(self.ceiling, other.ceiling)?;
        Ok(self.with(lip_add(self.value, other.value, self.ceiling)))
    }

    pub fn minus(self, other: GreyLevel) -> Result<Self> {
        same_ceiling(self.ceiling, other.ceiling)?;
        Ok(self.with(lip_sub(self.value, other.value, self.ceiling)))
    }

    pub fn negate(self) -> Self {
        self.with(lip_negate(self.value, self.ceiling))
    }

    pub fn scale(self, lambda: f64) -> Self {
        self.with(lip_scalar_mul(lambda, self.value, self.ceiling))
    }

    pub fn xi(self) -> f64 {
        xi(self.value, self.ceiling)
    }

    pub fn from_xi(u: f64, ceiling: f64) -> Result<Self> {
        check_ceiling(ceiling)?;
        Ok(GreyLevel {
            value: xi_inv(u, ceiling),
            ceiling,
        })
    }
}
