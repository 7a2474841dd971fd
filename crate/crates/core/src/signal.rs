//! Sampled 1D signals and the difference stencils shared by every scheme.
//!
//! Boundaries are reflecting: the ghost samples are `u_0 := u_1` and
//! `u_{N+1} := u_N`, so any difference taken across a boundary is exactly
//! zero.

use crate::error::{Error, Result};

/// A finite, uniformly sampled 1D signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    values: Vec<f64>,
    h: f64,
}

impl Signal1D {
    pub fn new(values: Vec<f64>, h: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySignal);
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGridSize(h));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index, value });
        }
        Ok(Self { values, h })
    }

    /// Signal on the unit grid (`h = 1`).
    pub fn unit(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 1.0)
    }

    /// Builds a signal with the same grid size as `self`.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.h)
    }

    // Callers must guarantee the invariants; used for scheme outputs whose
    // finiteness is checked at the end of the public operation.
    pub(crate) fn from_parts_unchecked(values: Vec<f64>, h: f64) -> Self {
        debug_assert!(!values.is_empty() && h > 0.0);
        Self { values, h }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; signals hold at least one sample.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    /// Maximum absolute sample-wise difference. Panics on length mismatch.
    pub fn max_abs_diff(&self, other: &Signal1D) -> f64 {
        assert_eq!(self.len(), other.len(), "signal lengths differ");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn ensure_same_shape(&self, other: &Signal1D) -> Result<()> {
        if self.len() != other.len() || self.h != other.h {
            return Err(Error::ShapeMismatch {
                left_len: self.len(),
                left_h: self.h,
                right_len: other.len(),
                right_h: other.h,
            });
        }
        Ok(())
    }

    pub(crate) fn ensure_finite(self) -> Result<Self> {
        if let Some((index, &value)) = self.values.iter().enumerate().find(|(_, v)| !v.is_finite())
        {
            return Err(Error::NonFiniteSample { index, value });
        }
        Ok(self)
    }
}

/// `(u_{i+1} - u_i) / h`, with the last entry zero.
pub fn forward_diff(u: &Signal1D) -> Signal1D {
    Signal1D::from_parts_unchecked(forward_differences(u.values(), u.h()), u.h())
}

/// `(u_i - u_{i-1}) / h`, with the first entry zero.
pub fn backward_diff(u: &Signal1D) -> Signal1D {
    let v = u.values();
    let h = u.h();
    let out = (0..v.len())
        .map(|i| if i == 0 { 0.0 } else { (v[i] - v[i - 1]) / h })
        .collect();
    Signal1D::from_parts_unchecked(out, h)
}

pub(crate) fn forward_differences(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i + 1 < n {
                (v[i + 1] - v[i]) / h
            } else {
                0.0
            }
        })
        .collect()
}

/// Divergence of a flux sequence living between samples.
///
/// `flux[i]` is the flux between samples `i` and `i + 1`; the flux entering
/// sample 0 across the reflecting boundary is `boundary_flux`, which a scheme
/// sets to the flux of a zero difference. Entry `i` is
/// `(flux[i] - flux[i-1]) / h`.
pub(crate) fn flux_divergence(flux: &[f64], boundary_flux: f64, h: f64) -> Vec<f64> {
    (0..flux.len())
        .map(|i| {
            let left = if i == 0 { boundary_flux } else { flux[i - 1] };
            (flux[i] - left) / h
        })
        .collect()
}
