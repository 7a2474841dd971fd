//! Shift-invariant Haar wavelet shrinkage on the finest scale.
//!
//! A step transforms every adjacent pair of samples, shrinks the wavelet
//! coefficient, transforms back, and averages the two reconstructions each
//! sample receives (one per shift). At the ends the reflected phantom pairs
//! `(u_1, u_1)` and `(u_N, u_N)` supply the second reconstruction.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::dictionary::{Role, RoleFunction};
use crate::error::{Error, Result};
use crate::signal::Signal1D;

/// Scaling and wavelet coefficient of a sample pair `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaarPair {
    pub scaling: f64,
    pub wavelet: f64,
}

impl HaarPair {
    pub fn analyse(a: f64, b: f64) -> Self {
        Self {
            scaling: (a + b) * FRAC_1_SQRT_2,
            wavelet: (b - a) * FRAC_1_SQRT_2,
        }
    }

    pub fn synthesise(self) -> (f64, f64) {
        (
            (self.scaling - self.wavelet) * FRAC_1_SQRT_2,
            (self.scaling + self.wavelet) * FRAC_1_SQRT_2,
        )
    }
}

/// Analysis, shrinkage of the wavelet coefficient, synthesis.
pub fn shrink_pair(a: f64, b: f64, shrink: &RoleFunction) -> (f64, f64) {
    let mut pair = HaarPair::analyse(a, b);
    pair.wavelet = shrink.eval(pair.wavelet);
    pair.synthesise()
}

fn check(u: &Signal1D, shrink: &RoleFunction) -> Result<()> {
    shrink.expect_role(Role::Shrinkage)?;
    if u.h() != 1.0 {
        return Err(Error::GridSizeNotUnit(u.h()));
    }
    Ok(())
}

/// One shift-invariant shrinkage step (closed form).
///
/// `u_i + (u_{i+1} - 2u_i + u_{i-1})/4
///      + (S((u_i - u_{i-1})/sqrt2) - S((u_{i+1} - u_i)/sqrt2)) / (2 sqrt2)`
pub fn shift_invariant_step(u: &Signal1D, shrink: &RoleFunction) -> Result<Signal1D> {
    check(u, shrink)?;
    Signal1D::from_parts_unchecked(closed_form_values(u.values(), shrink), 1.0).ensure_finite()
}

fn closed_form_values(v: &[f64], shrink: &RoleFunction) -> Vec<f64> {
    let n = v.len();
    // shrunk[i]: shrinkage of the coefficient between samples i and i+1,
    // with the phantom pairs at either end.
    let boundary = shrink.eval(0.0);
    let coeff = |i: usize| shrink.eval((v[i + 1] - v[i]) * FRAC_1_SQRT_2);
    let shrunk: Vec<f64> = (0..n.saturating_sub(1)).map(coeff).collect();
    (0..n)
        .map(|i| {
            let left = if i == 0 { v[0] } else { v[i - 1] };
            let right = if i + 1 == n { v[n - 1] } else { v[i + 1] };
            let s_left = if i == 0 { boundary } else { shrunk[i - 1] };
            let s_right = if i + 1 == n { boundary } else { shrunk[i] };
            v[i] + (right - 2.0 * v[i] + left) / 4.0 + (s_left - s_right) / (2.0 * SQRT_2)
        })
        .collect()
}

/// The same step computed literally: shrink every pair for both shifts and
/// average the two reconstructions of each sample.
pub fn shift_invariant_step_by_pairs(u: &Signal1D, shrink: &RoleFunction) -> Result<Signal1D> {
    check(u, shrink)?;
    let v = u.values();
    let n = v.len();
    // from_left[i]: sample i reconstructed as the right member of pair (i-1, i)
    // from_right[i]: sample i reconstructed as the left member of pair (i, i+1)
    let mut from_left = vec![0.0; n];
    let mut from_right = vec![0.0; n];
    from_left[0] = shrink_pair(v[0], v[0], shrink).1;
    from_right[n - 1] = shrink_pair(v[n - 1], v[n - 1], shrink).0;
    for i in 0..n - 1 {
        let (a, b) = shrink_pair(v[i], v[i + 1], shrink);
        from_right[i] = a;
        from_left[i + 1] = b;
    }
    let out = from_left
        .iter()
        .zip(&from_right)
        .map(|(l, r)| 0.5 * (l + r))
        .collect();
    Signal1D::from_parts_unchecked(out, 1.0).ensure_finite()
}

/// `m` shift-invariant shrinkage steps.
pub fn iterate_shrinkage(f: &Signal1D, shrink: &RoleFunction, m: usize) -> Result<Signal1D> {
    check(f, shrink)?;
    let mut v = f.values().to_vec();
    for _ in 0..m {
        v = closed_form_values(&v, shrink);
    }
    Signal1D::from_parts_unchecked(v, 1.0).ensure_finite()
}
