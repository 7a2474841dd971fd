//! Deterministic test signals.
//!
//! * `step`: 0 for `i < N/2`, then 1.
//! * `spike`: 1 at index `N/2`, 0 elsewhere.
//! * `sine`: `sin(2 pi periods i / N)` for `i = 0..N`.
//! * `piecewise`: `pieces` equal segments with levels drawn uniformly from
//!   `[0, 1)` by ChaCha8 seeded with `seed`.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rosetta_core::Signal1D;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Step,
    Sine,
    Piecewise,
    Spike,
}

impl FromStr for SignalKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "step" => Ok(Self::Step),
            "sine" => Ok(Self::Sine),
            "piecewise" => Ok(Self::Piecewise),
            "spike" => Ok(Self::Spike),
            other => Err(format!("unknown signal kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateParams {
    pub h: f64,
    pub periods: f64,
    pub pieces: usize,
}

impl Default for GenerateParams {
    fn default() -> Self {
        Self {
            h: 1.0,
            periods: 1.0,
            pieces: 4,
        }
    }
}

pub fn generate_signal(
    kind: SignalKind,
    n: usize,
    params: &GenerateParams,
    seed: u64,
) -> Result<Signal1D> {
    if n == 0 {
        return Err(CliError::Usage("signal length must be at least 1".into()));
    }
    let values = match kind {
        SignalKind::Step => (0..n).map(|i| if i < n / 2 { 0.0 } else { 1.0 }).collect(),
        SignalKind::Spike => (0..n).map(|i| if i == n / 2 { 1.0 } else { 0.0 }).collect(),
        SignalKind::Sine => {
            if !params.periods.is_finite() {
                return Err(CliError::Usage("periods must be finite".into()));
            }
            (0..n)
                .map(|i| (2.0 * PI * params.periods * i as f64 / n as f64).sin())
                .collect()
        }
        SignalKind::Piecewise => {
            if params.pieces == 0 || params.pieces > n {
                return Err(CliError::Usage(format!(
                    "pieces must lie in 1..={n}, got {}",
                    params.pieces
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let levels: Vec<f64> = (0..params.pieces).map(|_| rng.random()).collect();
            (0..n).map(|i| levels[i * params.pieces / n]).collect()
        }
    };
    Ok(Signal1D::new(values, params.h)?)
}
