//! Seeded additive noise. The generator is ChaCha8 (`rand_chacha`) seeded
//! through `seed_from_u64`, so a seed yields the same samples on every
//! platform.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rosetta_core::Signal1D;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    /// Standard deviation.
    Gaussian(f64),
    /// Half-width of the support `[-a, a]`.
    Uniform(f64),
}

impl NoiseModel {
    /// Parses `none`, `gaussian` or `uniform` with the matching magnitude.
    pub fn from_parts(kind: &str, magnitude: Option<f64>) -> Result<Self> {
        let need = |name: &str| {
            magnitude.ok_or_else(|| CliError::Usage(format!("{name} noise needs a magnitude")))
        };
        match kind {
            "none" => Ok(Self::None),
            "gaussian" => Ok(Self::Gaussian(need("gaussian")?)),
            "uniform" => Ok(Self::Uniform(need("uniform")?)),
            other => Err(CliError::Usage(format!("unknown noise model `{other}`"))),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseModel::None)
    }
}

impl FromStr for NoiseModel {
    type Err = String;

    /// `none`, `gaussian:<sigma>` or `uniform:<a>`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (kind, mag) = match s.split_once(':') {
            Some((k, m)) => (k, Some(m.parse::<f64>().map_err(|e| e.to_string())?)),
            None => (s, None),
        };
        Self::from_parts(kind, mag).map_err(|e| e.to_string())
    }
}

pub fn add_noise(u: &Signal1D, model: NoiseModel, seed: u64) -> Result<Signal1D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let check = |name: &str, x: f64| {
        if x.is_finite() && x >= 0.0 {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "{name} must be finite and nonnegative, got {x}"
            )))
        }
    };
    let values: Vec<f64> = match model {
        NoiseModel::None => return Ok(u.clone()),
        NoiseModel::Gaussian(sigma) => {
            check("sigma", sigma)?;
            let normal = Normal::new(0.0, sigma).map_err(|e| CliError::Usage(e.to_string()))?;
            u.values()
                .iter()
                .map(|v| v + normal.sample(&mut rng))
                .collect()
        }
        NoiseModel::Uniform(a) => {
            check("amplitude", a)?;
            u.values()
                .iter()
                .map(|v| v + rng.random_range(-a..=a))
                .collect()
        }
    };
    Ok(u.with_values(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Signal1D {
        Signal1D::unit(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap()
    }

    #[test]
    fn none_and_zero_sigma_are_identity() {
        assert_eq!(add_noise(&base(), NoiseModel::None, 1).unwrap(), base());
        assert_eq!(
            add_noise(&base(), NoiseModel::Gaussian(0.0), 1).unwrap(),
            base()
        );
    }

    #[test]
    fn seeded_and_reproducible() {
        let a = add_noise(&base(), NoiseModel::Gaussian(0.3), 42).unwrap();
        let b = add_noise(&base(), NoiseModel::Gaussian(0.3), 42).unwrap();
        let c = add_noise(&base(), NoiseModel::Gaussian(0.3), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let u = add_noise(&base(), NoiseModel::Uniform(0.5), 7).unwrap();
        assert!(u.max_abs_diff(&base()) <= 0.5);
    }

    #[test]
    fn rejects_negative_magnitudes() {
        assert!(add_noise(&base(), NoiseModel::Gaussian(-1.0), 0).is_err());
        assert!(add_noise(&base(), NoiseModel::Uniform(-0.1), 0).is_err());
    }

    #[test]
    fn parses_models() {
        assert_eq!("none".parse::<NoiseModel>().unwrap(), NoiseModel::None);
        assert_eq!(
            "gaussian:0.5".parse::<NoiseModel>().unwrap(),
            NoiseModel::Gaussian(0.5)
        );
        assert!("uniform".parse::<NoiseModel>().is_err());
    }
}
