//! One-dimensional signal denoising seen through four equivalent lenses:
//! nonlinear diffusion, shift-invariant Haar wavelet shrinkage, first-order
//! variational regularisation and residual networks built from diffusion
//! blocks.
//!
//! [`dictionary`] translates a nonlinearity between the four roles it plays
//! (diffusivity, regulariser, shrinkage function, activation). The scheme
//! modules then apply it: [`diffusion::explicit_step`],
//! [`haar::shift_invariant_step`], [`variational::minimize_by_diffusion`]
//! and [`resnet::apply_block`] agree step for step under matching
//! parameters. [`stability`] checks the maximum-minimum principle and sign
//! stability empirically.

pub mod dictionary;
pub mod diffusion;
pub mod error;
pub mod haar;
pub mod resnet;
pub mod signal;
pub mod stability;
pub mod variational;

pub use dictionary::{
    estimate_lipschitz, eval_family, translate, CouplingParams, Family, FamilySpec, Provenance,
    Role, RoleFunction,
};
pub use diffusion::{diffuse, explicit_step, max_stable_tau, DiffusionPlan, StabilityMode};
pub use error::{Error, Result};
pub use haar::{iterate_shrinkage, shift_invariant_step, shrink_pair};
pub use resnet::{apply_block, chain, make_diffusion_block, ResidualBlock};
pub use signal::{backward_diff, forward_diff, Signal1D};
pub use stability::{analyze, check_range_preservation, count_sign_changes, StabilityReport};
pub use variational::{
    discrete_energy, euler_lagrange_residual, minimize_by_diffusion, tikhonov_solve_oracle,
    EnergySpec,
};
