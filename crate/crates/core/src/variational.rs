//! First-order variational regularisation with a quadratic data term.
//!
//! The discrete energy is
//! `E(u) = h sum (u_i - f_i)^2 + alpha h sum Psi((u_{i+1} - u_i)/h)`,
//! where the difference past the last sample is zero. Its minimiser is
//! approximated by explicit diffusion steps with flux `Psi'/2` up to time
//! `alpha`.

use crate::dictionary::{derivative, CouplingParams, Role, RoleFunction};
use crate::diffusion::{local_lipschitz, max_stable_tau, run_steps, StabilityMode};
use crate::error::{Error, Result};
use crate::signal::{flux_divergence, forward_differences, Signal1D};

#[derive(Debug, Clone)]
pub struct EnergySpec {
    psi: RoleFunction,
    alpha: f64,
}

impl EnergySpec {
    pub fn new(psi: RoleFunction, alpha: f64) -> Result<Self> {
        psi.expect_role(Role::Regulariser)?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
            });
        }
        let at_zero = psi.eval(0.0);
        if at_zero.abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "psi(0)",
                value: at_zero,
            });
        }
        Ok(Self { psi, alpha })
    }

    pub fn psi(&self) -> &RoleFunction {
        &self.psi
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn half_slope(&self, r: f64) -> f64 {
        derivative(|x| self.psi.eval(x), r, self.psi.breakpoints()) / 2.0
    }

    /// `div(Psi'(D+ u) / 2)` with zero flux across the boundaries.
    fn divergence_term(&self, u: &Signal1D) -> Vec<f64> {
        let h = u.h();
        let flux: Vec<f64> = forward_differences(u.values(), h)
            .into_iter()
            .map(|d| self.half_slope(d))
            .collect();
        flux_divergence(&flux, self.half_slope(0.0), h)
    }
}

pub fn discrete_energy(u: &Signal1D, f: &Signal1D, spec: &EnergySpec) -> Result<f64> {
    u.ensure_same_shape(f)?;
    let h = u.h();
    let data: f64 = u
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let reg: f64 = forward_differences(u.values(), h)
        .into_iter()
        .map(|d| spec.psi.eval(d))
        .sum();
    Ok(h * data + spec.alpha * h * reg)
}

/// Regulariser part `alpha h sum Psi(D+ u)` alone.
pub fn regulariser_energy(u: &Signal1D, spec: &EnergySpec) -> f64 {
    let reg: f64 = forward_differences(u.values(), u.h())
        .into_iter()
        .map(|d| spec.psi.eval(d))
        .sum();
    spec.alpha * u.h() * reg
}

/// Gradient of [`discrete_energy`] with respect to `u`:
/// `2h [(u - f) - alpha div(Psi'(D+ u) / 2)]`.
pub fn energy_gradient(u: &Signal1D, f: &Signal1D, spec: &EnergySpec) -> Result<Vec<f64>> {
    u.ensure_same_shape(f)?;
    let h = u.h();
    let div = spec.divergence_term(u);
    Ok(u.values()
        .iter()
        .zip(f.values())
        .zip(div)
        .map(|((a, b), d)| 2.0 * h * ((a - b) - spec.alpha * d))
        .collect())
}

/// `(u - f)/alpha - div(Psi'(D+ u) / 2)`; zero at a minimiser.
pub fn euler_lagrange_residual(u: &Signal1D, f: &Signal1D, spec: &EnergySpec) -> Result<Signal1D> {
    u.ensure_same_shape(f)?;
    let div = spec.divergence_term(u);
    let out = u
        .values()
        .iter()
        .zip(f.values())
        .zip(div)
        .map(|((a, b), d)| (a - b) / spec.alpha - d)
        .collect();
    Signal1D::from_parts_unchecked(out, u.h()).ensure_finite()
}

/// `m` explicit steps of size `alpha / m` with flux `Psi'/2`, starting at `f`.
///
/// Fails with [`Error::UnstableStep`] if `alpha / m` exceeds the max-min
/// bound of that flux.
pub fn minimize_by_diffusion(f: &Signal1D, spec: &EnergySpec, m: usize) -> Result<Signal1D> {
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: 0.0,
        });
    }
    let coupling = CouplingParams::coupled(spec.alpha, f.h())?;
    let phi = spec.psi.to_role(Role::Activation, &coupling)?;
    let tau = spec.alpha / m as f64;
    let lipschitz = local_lipschitz(f, &phi)?;
    if lipschitz > 0.0 {
        let bound = max_stable_tau(lipschitz, f.h(), StabilityMode::MaxMin)?;
        if tau > bound {
            return Err(Error::UnstableStep {
                tau,
                bound,
                min_steps: (spec.alpha / bound).ceil() as usize,
            });
        }
    }
    run_steps(f, &phi, tau, m)
}

/// Exact minimiser for `Psi(r) = r^2`: solves `u - alpha Lap(u) = f` with
/// the reflecting-boundary Laplacian by the Thomas algorithm.
pub fn tikhonov_solve_oracle(f: &Signal1D, alpha: f64) -> Result<Signal1D> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
        });
    }
    let n = f.len();
    let k = alpha / (f.h() * f.h());
    if n == 1 {
        return Ok(f.clone());
    }
    let lower = vec![-k; n];
    let upper = vec![-k; n];
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                1.0 + k
            } else {
                1.0 + 2.0 * k
            }
        })
        .collect();
    let u = solve_tridiagonal(&lower, &diag, &upper, f.values());
    Signal1D::from_parts_unchecked(u, f.h()).ensure_finite()
}

// lower[0] and upper[n-1] are unused. The system here is strictly
// diagonally dominant, so no pivoting is needed.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}
