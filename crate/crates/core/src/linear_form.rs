//! Jointly Gaussian signals as linear combinations of independent
//! unit-variance Gaussian primitives.
//!
//! A [`LinearForm`] stores one [`DualScalar`] coefficient per basis element.
//! Because the basis elements are independent with unit variance, second
//! moments reduce to dot products of coefficient vectors and are exact.

use std::ops::{Add, Neg, Sub};

use crate::dual::DualScalar;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm {
    coeffs: Vec<DualScalar>,
}

/// Output of [`lmmse_estimate`]: `x = coefficient * y + residual`, with the
/// residual uncorrelated with `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lmmse {
    pub coefficient: DualScalar,
    pub residual: LinearForm,
}

impl LinearForm {
    pub fn zeros(len: usize) -> Self {
        Self {
            coeffs: vec![DualScalar::ZERO; len],
        }
    }

    /// The single basis element `index` with coefficient one.
    pub fn unit(len: usize, index: usize) -> Self {
        Self::unit_scaled(len, index, DualScalar::ONE)
    }

    pub fn unit_scaled(len: usize, index: usize, coefficient: DualScalar) -> Self {
        assert!(
            index < len,
            "basis index {index} out of range for length {len}"
        );
        let mut form = Self::zeros(len);
        form.coeffs[index] = coefficient;
        form
    }

    pub fn from_coeffs(coeffs: Vec<DualScalar>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[DualScalar] {
        &self.coeffs
    }

    pub fn scale(&self, factor: DualScalar) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }

    /// The form whose coefficients are the derivative slots of `self`, i.e.
    /// the signal `dX/dθ` expressed in the same basis. The result is treated
    /// as a constant.
    pub fn derivative(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| DualScalar::constant(c.deriv))
                .collect(),
        }
    }

    /// Same coefficients with the derivative slots dropped.
    pub fn detached(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.detached()).collect(),
        }
    }

    /// Evaluates the form on a realization of the basis (values only).
    pub fn evaluate(&self, basis: &[f64]) -> f64 {
        debug_assert_eq!(basis.len(), self.coeffs.len());
        self.coeffs
            .iter()
            .zip(basis)
            .map(|(c, w)| c.value * w)
            .sum()
    }

    /// `a * self + b * other`, elementwise on coefficients.
    pub fn combine(&self, a: DualScalar, other: &Self, b: DualScalar) -> Result<Self> {
        check_len(self, other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }
}

fn check_len(x: &LinearForm, y: &LinearForm) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::BasisMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

/// `Var(x) = sum of squared coefficients`.
pub fn variance(x: &LinearForm) -> DualScalar {
    x.coeffs.iter().map(|&c| c * c).sum()
}

/// `Cov(x, y) = sum of coefficient products`.
pub fn covariance(x: &LinearForm, y: &LinearForm) -> Result<DualScalar> {
    check_len(x, y)?;
    Ok(x.coeffs.iter().zip(&y.coeffs).map(|(&a, &b)| a * b).sum())
}

/// Linear MMSE estimate of `x` from the scalar observation `y`.
///
/// For jointly Gaussian zero-mean signals this is `E{x | y}`.
pub fn lmmse_estimate(x: &LinearForm, y: &LinearForm) -> Result<Lmmse> {
    let var_y = variance(y);
    if !(var_y.value > 0.0) {
        return Err(Error::DegenerateObservation(var_y.value));
    }
    let coefficient = covariance(x, y)?.checked_div(var_y)?;
    let residual = x.combine(DualScalar::ONE, y, -coefficient)?;
    Ok(Lmmse {
        coefficient,
        residual,
    })
}

impl Add for &LinearForm {
    type Output = LinearForm;
    fn add(self, rhs: Self) -> LinearForm {
        assert_eq!(self.len(), rhs.len(), "basis length mismatch");
        LinearForm {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &LinearForm {
    type Output = LinearForm;
    fn sub(self, rhs: Self) -> LinearForm {
        assert_eq!(self.len(), rhs.len(), "basis length mismatch");
        LinearForm {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &LinearForm {
    type Output = LinearForm;
    fn neg(self) -> LinearForm {
        LinearForm {
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }
}
