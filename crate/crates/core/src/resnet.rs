//! Residual blocks `u = sigma2(f + W2 sigma1(W1 f + b1) + b2)` with
//! stencil convolutions, and the diffusion block that reproduces one
//! explicit diffusion step.

use std::f64::consts::SQRT_2;

use crate::dictionary::{Role, RoleFunction};
use crate::error::{Error, Result};
use crate::signal::Signal1D;

/// How a stencil reads samples beyond the ends of its input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Ghost samples repeat the nearest end sample.
    Reflect,
    /// Ghost samples are zero. Used for sequences of differences, which
    /// vanish across a reflecting boundary.
    Zero,
}

/// Convolution weights centred on the output position:
/// `out_i = sum_k weights[k] * x_{i + k - c}` with `c = len / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    weights: Vec<f64>,
    padding: Padding,
}

impl Stencil {
    pub fn new(weights: Vec<f64>, padding: Padding) -> Result<Self> {
        if weights.len().is_multiple_of(2) || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidStencil);
        }
        Ok(Self { weights, padding })
    }

    /// `(1/h) [0, -1, 1]`
    pub fn forward_difference(h: f64) -> Self {
        Self {
            weights: vec![0.0, -1.0 / h, 1.0 / h],
            padding: Padding::Reflect,
        }
    }

    /// `(scale/h) [-1, 1, 0]` acting on a difference sequence.
    pub fn backward_difference(scale: f64, h: f64) -> Self {
        let w = scale / h;
        Self {
            weights: vec![-w, w, 0.0],
            padding: Padding::Zero,
        }
    }

    pub fn identity() -> Self {
        Self {
            weights: vec![1.0],
            padding: Padding::Reflect,
        }
    }

    pub fn zero() -> Self {
        Self {
            weights: vec![0.0],
            padding: Padding::Reflect,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len() as isize;
        let c = (self.weights.len() / 2) as isize;
        let sample = |j: isize| -> f64 {
            if (0..n).contains(&j) {
                x[j as usize]
            } else {
                match self.padding {
                    Padding::Reflect => x[j.clamp(0, n - 1) as usize],
                    Padding::Zero => 0.0,
                }
            }
        };
        (0..n)
            .map(|i| {
                self.weights
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(k, w)| w * sample(i + k as isize - c))
                    .sum()
            })
            .collect()
    }
}

/// Pointwise nonlinearity of a block.
#[derive(Debug, Clone)]
pub enum Nonlinearity {
    Identity,
    /// Maps everything to zero, switching off the inner branch.
    Zero,
    Relu,
    Function(RoleFunction),
}

impl Nonlinearity {
    pub fn apply(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Identity => r,
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Relu => relu(r),
            Nonlinearity::Function(f) => f.eval(r),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResidualBlock {
    pub w1: Stencil,
    /// Empty means no bias.
    pub b1: Vec<f64>,
    pub sigma1: Nonlinearity,
    pub w2: Stencil,
    pub b2: Vec<f64>,
    pub sigma2: Nonlinearity,
}

impl ResidualBlock {
    /// A block reduced to its skip connection.
    pub fn identity() -> Self {
        Self {
            w1: Stencil::identity(),
            b1: Vec::new(),
            sigma1: Nonlinearity::Zero,
            w2: Stencil::identity(),
            b2: Vec::new(),
            sigma2: Nonlinearity::Identity,
        }
    }
}

fn add_bias(v: &mut [f64], bias: &[f64]) -> Result<()> {
    if bias.is_empty() {
        return Ok(());
    }
    if bias.len() != v.len() {
        return Err(Error::BiasLength {
            expected: v.len(),
            actual: bias.len(),
        });
    }
    for (x, b) in v.iter_mut().zip(bias) {
        *x += b;
    }
    Ok(())
}

pub fn apply_block(block: &ResidualBlock, f: &Signal1D) -> Result<Signal1D> {
    let x = f.values();
    let mut inner = block.w1.apply(x);
    add_bias(&mut inner, &block.b1)?;
    for v in &mut inner {
        *v = block.sigma1.apply(*v);
    }
    let branch = block.w2.apply(&inner);
    let mut out: Vec<f64> = x.iter().zip(branch).map(|(a, b)| a + b).collect();
    add_bias(&mut out, &block.b2)?;
    for v in &mut out {
        *v = block.sigma2.apply(*v);
    }
    Signal1D::from_parts_unchecked(out, f.h()).ensure_finite()
}

/// Residual block equivalent to one explicit diffusion step with flux `phi`.
pub fn make_diffusion_block(phi: &RoleFunction, tau: f64, h: f64) -> Result<ResidualBlock> {
    phi.expect_role(Role::Activation)?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
        });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidGridSize(h));
    }
    Ok(ResidualBlock {
        w1: Stencil::forward_difference(h),
        b1: Vec::new(),
        sigma1: Nonlinearity::Function(phi.clone()),
        w2: Stencil::backward_difference(tau, h),
        b2: Vec::new(),
        sigma2: Nonlinearity::Identity,
    })
}

pub fn chain(blocks: &[ResidualBlock], f: &Signal1D) -> Result<Signal1D> {
    blocks
        .iter()
        .try_fold(f.clone(), |u, block| apply_block(block, &u))
}

#[inline]
pub fn relu(r: f64) -> f64 {
    r.max(0.0)
}

/// Truncated-TV activation as `r - relu(r - sqrt2 theta) + relu(-r - sqrt2 theta)`.
pub fn truncated_tv_via_relu(theta: f64, r: f64) -> f64 {
    let knee = SQRT_2 * theta;
    r - relu(r - knee) + relu(-r - knee)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{eval_family, FamilySpec};
    use crate::diffusion::explicit_step;

    fn unit(v: &[f64]) -> Signal1D {
        Signal1D::unit(v.to_vec()).unwrap()
    }

    #[test]
    fn identity_blocks() {
        let f = unit(&[0.5, -2.0, 3.0, 1.0]);
        assert_eq!(apply_block(&ResidualBlock::identity(), &f).unwrap(), f);

        let mut skip =
            make_diffusion_block(&RoleFunction::identity_activation(), 0.3, 1.0).unwrap();
        skip.w2 = Stencil::zero();
        assert_eq!(apply_block(&skip, &f).unwrap(), f);

        let frozen = make_diffusion_block(&RoleFunction::identity_activation(), 0.0, 1.0).unwrap();
        assert_eq!(apply_block(&frozen, &f).unwrap(), f);
    }

    #[test]
    fn diffusion_block_example() {
        let block = make_diffusion_block(&RoleFunction::identity_activation(), 0.25, 1.0).unwrap();
        let out = apply_block(&block, &unit(&[0.0, 0.0, 1.0, 0.0, 0.0])).unwrap();
        assert_eq!(out.values(), &[0.0, 0.25, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn linear_block_is_laplacian_step() {
        let h = 0.5;
        let tau = 0.05;
        let f = Signal1D::new(vec![1.0, 4.0, -2.0, 0.0, 3.0], h).unwrap();
        let block = make_diffusion_block(&RoleFunction::identity_activation(), tau, h).unwrap();
        let out = apply_block(&block, &f).unwrap();
        let v = f.values();
        let n = v.len();
        for i in 0..n {
            let l = v[i.saturating_sub(1)];
            let r = v[(i + 1).min(n - 1)];
            let expected = v[i] + tau * (r - 2.0 * v[i] + l) / (h * h);
            assert!((out.values()[i] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn chain_examples() {
        let f = unit(&[0.2, 0.9, 0.1, 0.4]);
        assert_eq!(chain(&[], &f).unwrap(), f);
        let phi = RoleFunction::family(FamilySpec::perona_malik(0.5).unwrap(), Role::Activation);
        let block = make_diffusion_block(&phi, 0.25, 1.0).unwrap();
        let blocks = vec![block; 7];
        let mut reference = f.clone();
        for _ in 0..7 {
            reference = explicit_step(&reference, &phi, 0.25).unwrap();
        }
        assert!(chain(&blocks, &f).unwrap().max_abs_diff(&reference) <= 1e-14);
        // composition splits anywhere
        let head = chain(&blocks[..3], &f).unwrap();
        assert_eq!(
            chain(&blocks[3..], &head).unwrap(),
            chain(&blocks, &f).unwrap()
        );
    }

    #[test]
    fn bias_handling() {
        let f = unit(&[1.0, 2.0, 3.0]);
        let mut block = ResidualBlock::identity();
        block.b2 = vec![1.0, 0.0, -1.0];
        assert_eq!(apply_block(&block, &f).unwrap().values(), &[2.0, 2.0, 2.0]);
        block.b1 = vec![1.0];
        assert_eq!(
            apply_block(&block, &f).unwrap_err(),
            Error::BiasLength {
                expected: 3,
                actual: 1
            }
        );
    }

    #[test]
    fn stencil_validation_and_padding() {
        assert!(Stencil::new(vec![1.0, 2.0], Padding::Reflect).is_err());
        assert!(Stencil::new(vec![f64::NAN], Padding::Reflect).is_err());
        let s = Stencil::new(vec![1.0, 0.0, 1.0], Padding::Reflect).unwrap();
        assert_eq!(s.apply(&[1.0, 2.0, 3.0]), vec![3.0, 4.0, 5.0]);
        let z = Stencil::new(vec![1.0, 0.0, 1.0], Padding::Zero).unwrap();
        assert_eq!(z.apply(&[1.0, 2.0, 3.0]), vec![2.0, 4.0, 2.0]);
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu(-1.0), 0.0);
        assert_eq!(relu(0.0), 0.0);
        assert_eq!(relu(2.5), 2.5);
        assert_eq!(truncated_tv_via_relu(1.0, 0.5), 0.5);
        assert!((truncated_tv_via_relu(1.0, 3.0) - SQRT_2).abs() < 1e-15);
        assert!((truncated_tv_via_relu(1.0, -3.0) + SQRT_2).abs() < 1e-15);
        let tv = FamilySpec::truncated_tv(0.3).unwrap();
        for i in -50..=50 {
            let r = i as f64 * 0.03;
            let closed = eval_family(&tv, Role::Activation, r);
            assert!((truncated_tv_via_relu(0.3, r) - closed).abs() <= 1e-14);
        }
    }

    #[test]
    fn general_wiring_can_blow_up() {
        // anti-diffusive wiring: no stability claim, values leave the range
        let mut block =
            make_diffusion_block(&RoleFunction::identity_activation(), 0.25, 1.0).unwrap();
        block.w2 = Stencil::backward_difference(-0.25, 1.0);
        let f = unit(&[0.0, 1.0, 0.0, 1.0]);
        let out = chain(&vec![block; 20], &f).unwrap();
        assert!(out.max() > 1.0 || out.min() < 0.0);
    }
}
