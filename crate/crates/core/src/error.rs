use thiserror::Error;

use crate::dictionary::Role;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("signal must contain at least one sample")]
    EmptySignal,
    #[error("sample {index} is not finite ({value})")]
    NonFiniteSample { index: usize, value: f64 },
    #[error("grid size must be finite and positive, got {0}")]
    InvalidGridSize(f64),
    #[error("signals differ in shape: {left_len} samples at h={left_h} vs {right_len} samples at h={right_h}")]
    ShapeMismatch {
        left_len: usize,
        left_h: f64,
        right_len: usize,
        right_h: f64,
    },
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("expected a {expected:?} function, got {actual:?}")]
    WrongRole { expected: Role, actual: Role },
    #[error("translation to {0:?} needs the coupling constant `{1}`, which was not supplied")]
    MissingCoupling(Role, &'static str),
    #[error("translation chain mixes tau={tau} with alpha={alpha}; they must be equal")]
    CouplingMismatch { tau: f64, alpha: f64 },
    #[error("wavelet shrinkage is defined for grid size h = 1, got {0}")]
    GridSizeNotUnit(f64),
    #[error("time step {tau} exceeds the stability bound {bound}; use at least {min_steps} steps")]
    UnstableStep {
        tau: f64,
        bound: f64,
        min_steps: usize,
    },
    #[error("bias of length {actual} does not match signal length {expected}")]
    BiasLength { expected: usize, actual: usize },
    #[error("stencil must have odd, nonzero length and finite weights")]
    InvalidStencil,
    #[error("trajectory is empty")]
    EmptyTrajectory,
}

pub type Result<T> = std::result::Result<T, Error>;
