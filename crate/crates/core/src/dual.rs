//! Forward-mode dual numbers carrying a single first derivative.
//!
//! Every quantity in the Gaussian engine is a [`DualScalar`]: its `value`
//! and its derivative with respect to exactly one active parameter. Which
//! parameter is active is decided by the caller when seeding (see
//! [`DualScalar::variable`]).

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A value paired with its derivative with respect to the active parameter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DualScalar {
    pub value: f64,
    pub deriv: f64,
}

impl DualScalar {
    pub const ZERO: Self = Self::constant(0.0);
    pub const ONE: Self = Self::constant(1.0);

    pub const fn new(value: f64, deriv: f64) -> Self {
        Self { value, deriv }
    }

    /// A quantity that does not depend on the active parameter.
    pub const fn constant(value: f64) -> Self {
        Self { value, deriv: 0.0 }
    }

    /// The active parameter itself (derivative seed 1).
    pub const fn variable(value: f64) -> Self {
        Self { value, deriv: 1.0 }
    }

    /// Drops the derivative, keeping the value as a constant.
    pub const fn detached(self) -> Self {
        Self::constant(self.value)
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        if rhs.value == 0.0 || !rhs.value.is_finite() {
            return Err(Error::Domain {
                op: "div",
                value: rhs.value,
            });
        }
        let inv = 1.0 / rhs.value;
        Ok(Self {
            value: self.value * inv,
            deriv: (self.deriv * rhs.value - self.value * rhs.deriv) * inv * inv,
        })
    }

    pub fn checked_sqrt(self) -> Result<Self> {
        if !(self.value > 0.0) || !self.value.is_finite() {
            return Err(Error::Domain {
                op: "sqrt",
                value: self.value,
            });
        }
        let root = self.value.sqrt();
        Ok(Self {
            value: root,
            deriv: self.deriv / (2.0 * root),
        })
    }

    pub fn checked_ln(self) -> Result<Self> {
        if !(self.value > 0.0) || !self.value.is_finite() {
            return Err(Error::Domain {
                op: "ln",
                value: self.value,
            });
        }
        Ok(Self {
            value: self.value.ln(),
            deriv: self.deriv / self.value,
        })
    }

    pub fn scale(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            deriv: self.deriv * factor,
        }
    }
}

/// Sum of two dual numbers.
pub fn dual_add(a: DualScalar, b: DualScalar) -> DualScalar {
    a + b
}

/// Product rule.
pub fn dual_mul(a: DualScalar, b: DualScalar) -> DualScalar {
    a * b
}

/// Quotient rule; fails on a zero divisor.
pub fn dual_div(a: DualScalar, b: DualScalar) -> Result<DualScalar> {
    a.checked_div(b)
}

/// Square root; fails unless `a.value > 0`.
pub fn dual_sqrt(a: DualScalar) -> Result<DualScalar> {
    a.checked_sqrt()
}

/// Natural logarithm; fails unless `a.value > 0`.
pub fn dual_ln(a: DualScalar) -> Result<DualScalar> {
    a.checked_ln()
}

impl From<f64> for DualScalar {
    fn from(value: f64) -> Self {
        Self::constant(value)
    }
}

impl fmt::Display for DualScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.value, self.deriv)
    }
}

impl Add for DualScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for DualScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for DualScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.value * rhs.deriv + self.deriv * rhs.value,
        )
    }
}

impl Neg for DualScalar {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.deriv)
    }
}

impl AddAssign for DualScalar {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for DualScalar {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Sum for DualScalar {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_with_constant_factor() {
        let p = dual_mul(DualScalar::new(2.0, 1.0), DualScalar::new(3.0, 0.0));
        assert_eq!(p, DualScalar::new(6.0, 3.0));
    }

    #[test]
    fn sqrt_at_four() {
        let r = dual_sqrt(DualScalar::new(4.0, 1.0)).unwrap();
        assert_eq!(r, DualScalar::new(2.0, 0.25));
    }

    #[test]
    fn ln_at_one() {
        let r = dual_ln(DualScalar::new(1.0, 1.0)).unwrap();
        assert_eq!(r, DualScalar::new(0.0, 1.0));
    }

    #[test]
    fn quotient_rule() {
        // d/dg (g / (g^2 + 1)) at g = 2 is (1 - g^2) / (g^2 + 1)^2 = -3/25
        let g = DualScalar::variable(2.0);
        let q = dual_div(g, g * g + DualScalar::ONE).unwrap();
        assert!((q.value - 0.4).abs() < 1e-15);
        assert!((q.deriv + 3.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn domain_violations_are_errors() {
        assert!(matches!(
            dual_sqrt(DualScalar::constant(-1.0)),
            Err(Error::Domain { op: "sqrt", .. })
        ));
        assert!(matches!(
            dual_sqrt(DualScalar::constant(0.0)),
            Err(Error::Domain { op: "sqrt", .. })
        ));
        assert!(matches!(
            dual_ln(DualScalar::constant(0.0)),
            Err(Error::Domain { op: "ln", .. })
        ));
        assert!(matches!(
            dual_div(DualScalar::ONE, DualScalar::ZERO),
            Err(Error::Domain { op: "div", .. })
        ));
    }

    #[test]
    fn constants_and_seed() {
        assert_eq!(DualScalar::constant(3.0).deriv, 0.0);
        assert_eq!(DualScalar::variable(3.0).deriv, 1.0);
        assert_eq!(DualScalar::variable(3.0).detached().deriv, 0.0);
    }
}
