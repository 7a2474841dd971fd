//! Explicit scheme for 1D nonlinear diffusion.
//!
//! One step computes
//! `u_i + (tau/h) * (Phi((u_{i+1} - u_i)/h) - Phi((u_i - u_{i-1})/h))`
//! with reflecting boundaries, so the flux across either end is `Phi(0)`.

use crate::dictionary::{estimate_lipschitz, Role, RoleFunction};
use crate::error::{Error, Result};
use crate::signal::{flux_divergence, forward_diff, forward_differences, Signal1D};

/// Samples used when `diffuse` estimates the Lipschitz constant.
pub const LIPSCHITZ_SAMPLES: usize = 20_001;

/// Which stability notion the time step must honour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StabilityMode {
    /// Maximum-minimum principle: `tau <= h^2 / (2L)`.
    MaxMin,
    /// Sign stability: `tau <= h^2 / (4L)`.
    #[default]
    SignStable,
}

impl std::str::FromStr for StabilityMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "maxmin" | "max-min" => Ok(Self::MaxMin),
            "sign" | "sign-stable" | "signstable" => Ok(Self::SignStable),
            other => Err(format!("unknown stability mode `{other}`")),
        }
    }
}

/// The schedule actually used by [`diffuse`].
#[derive(Debug, Clone)]
pub struct DiffusionPlan {
    pub phi: RoleFunction,
    pub tau: f64,
    pub steps: usize,
    pub h: f64,
    pub stopping_time: f64,
    pub lipschitz: f64,
    pub mode: StabilityMode,
}

/// One explicit diffusion step. Stability is not checked here.
pub fn explicit_step(u: &Signal1D, phi: &RoleFunction, tau: f64) -> Result<Signal1D> {
    phi.expect_role(Role::Activation)?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
        });
    }
    Signal1D::from_parts_unchecked(step_values(u.values(), phi, tau, u.h()), u.h()).ensure_finite()
}

pub(crate) fn step_values(u: &[f64], phi: &RoleFunction, tau: f64, h: f64) -> Vec<f64> {
    let mut flux = forward_differences(u, h);
    for v in &mut flux {
        *v = phi.eval(*v);
    }
    let div = flux_divergence(&flux, phi.eval(0.0), h);
    u.iter().zip(div).map(|(x, d)| x + tau * d).collect()
}

/// Largest stable time step for an activation with Lipschitz constant `l`.
pub fn max_stable_tau(l: f64, h: f64, mode: StabilityMode) -> Result<f64> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lipschitz",
            value: l,
        });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidGridSize(h));
    }
    let denom = match mode {
        StabilityMode::MaxMin => 2.0 * l,
        StabilityMode::SignStable => 4.0 * l,
    };
    Ok(h * h / denom)
}

/// Lipschitz estimate of `phi` over twice the gradient range of `f`.
pub fn local_lipschitz(f: &Signal1D, phi: &RoleFunction) -> Result<f64> {
    let grad = forward_diff(f)
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let r_max = (2.0 * grad).max(1.0);
    estimate_lipschitz(phi, r_max, LIPSCHITZ_SAMPLES)
}

/// Diffuses `f` up to time `stopping_time` with `m = ceil(T / tau_max)`
/// uniform steps of size `T / m`.
pub fn diffuse(
    f: &Signal1D,
    phi: &RoleFunction,
    stopping_time: f64,
    mode: StabilityMode,
) -> Result<(Signal1D, DiffusionPlan)> {
    phi.expect_role(Role::Activation)?;
    if !(stopping_time.is_finite() && stopping_time >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "stopping_time",
            value: stopping_time,
        });
    }
    let lipschitz = local_lipschitz(f, phi)?;
    // A flat activation cannot move anything; any step is stable.
    let tau_max = if lipschitz > 0.0 {
        max_stable_tau(lipschitz, f.h(), mode)?
    } else {
        f64::INFINITY
    };
    let steps = if stopping_time == 0.0 {
        0
    } else {
        ((stopping_time / tau_max).ceil() as usize).max(1)
    };
    let tau = if steps == 0 {
        0.0
    } else {
        stopping_time / steps as f64
    };
    let plan = DiffusionPlan {
        phi: phi.clone(),
        tau,
        steps,
        h: f.h(),
        stopping_time,
        lipschitz,
        mode,
    };
    let out = run_steps(f, phi, tau, steps)?;
    Ok((out, plan))
}

/// `steps` explicit steps of size `tau`.
pub fn run_steps(f: &Signal1D, phi: &RoleFunction, tau: f64, steps: usize) -> Result<Signal1D> {
    phi.expect_role(Role::Activation)?;
    let h = f.h();
    let mut u = f.values().to_vec();
    for _ in 0..steps {
        u = step_values(&u, phi, tau, h);
    }
    Signal1D::from_parts_unchecked(u, h).ensure_finite()
}
