//! The four denoising paths behind `denoise` and `compare`.
//!
//! Step sizes come from the analytic Lipschitz constant of the family's
//! activation, so every method sees the same schedule: `steps` uniform steps
//! of size `tau` with stopping time `T = steps * tau`. The variational path
//! uses `alpha = T`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rosetta_core::diffusion::run_steps;
use rosetta_core::resnet::apply_block;
use rosetta_core::{
    analyze, iterate_shrinkage, make_diffusion_block, max_stable_tau, minimize_by_diffusion,
    translate, CouplingParams, EnergySpec, Error, FamilySpec, Role, RoleFunction, Signal1D,
    StabilityMode, StabilityReport,
};

use crate::error::{CliError, Result};
use crate::noise::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Diffusion,
    Wavelet,
    Variational,
    Resnet,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Diffusion,
        Method::Wavelet,
        Method::Variational,
        Method::Resnet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Diffusion => "diffusion",
            Method::Wavelet => "wavelet",
            Method::Variational => "variational",
            Method::Resnet => "resnet",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    Time(f64),
    Steps(usize),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub family: FamilySpec,
    /// Only `tau` is read: an explicit step size instead of the largest
    /// stable one.
    pub coupling: CouplingParams,
    pub stop: StopRule,
    pub mode: StabilityMode,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub noise: NoiseModel,
}

impl RunConfig {
    pub fn new(method: Method, family: FamilySpec, stop: StopRule) -> Self {
        Self {
            method,
            family,
            coupling: CouplingParams::default(),
            stop,
            mode: StabilityMode::default(),
            input: None,
            output: None,
            seed: None,
            noise: NoiseModel::None,
        }
        .with_tau(None)
    }

    pub fn with_tau(mut self, tau: Option<f64>) -> Self {
        self.coupling = CouplingParams::new(tau, None, self.coupling.h())
            .unwrap_or_else(|_| CouplingParams::new(None, None, 1.0).expect("unit grid"));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.noise.is_none() && self.seed.is_none() {
            return Err(CliError::Usage(
                "a seed is required when noise is added".into(),
            ));
        }
        match self.stop {
            StopRule::Time(t) if !(t.is_finite() && t >= 0.0) => Err(CliError::Usage(format!(
                "stopping time must be finite and nonnegative, got {t}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub tau: f64,
    pub steps: usize,
}

impl Schedule {
    pub fn stopping_time(&self) -> f64 {
        self.tau * self.steps as f64
    }
}

/// Resolves the step size and count, failing with `UnstableStep` if the
/// requested step exceeds the bound of `mode`.
pub fn schedule(config: &RunConfig, h: f64) -> Result<Schedule> {
    config.validate()?;
    let bound = max_stable_tau(config.family.lipschitz(), h, config.mode)?;
    let requested = config.coupling.tau();
    let (tau, steps, horizon) = match config.stop {
        StopRule::Steps(m) => {
            let tau = requested.unwrap_or(bound);
            (tau, m, tau * m as f64)
        }
        StopRule::Time(0.0) => (requested.unwrap_or(bound), 0, 0.0),
        StopRule::Time(t) => {
            let target = requested.unwrap_or(bound);
            let m = ((t / target).ceil() as usize).max(1);
            (t / m as f64, m, t)
        }
    };
    // T / ceil(T / bound) may land an ulp above the bound
    if tau > bound * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::UnstableStep {
            tau,
            bound,
            min_steps: (horizon / bound).ceil() as usize,
        }
        .into());
    }
    Ok(Schedule { tau, steps })
}

#[derive(Debug, Clone)]
pub struct Denoised {
    pub signal: Signal1D,
    pub schedule: Schedule,
    /// Diagnostics of the equivalent explicit diffusion; absent when no step
    /// is taken.
    pub report: Option<StabilityReport>,
}

pub fn denoise(f: &Signal1D, config: &RunConfig) -> Result<Denoised> {
    let sched = schedule(config, f.h())?;
    let signal = run_method(f, config.method, &config.family, sched)?;
    let phi = RoleFunction::family(config.family, Role::Activation);
    let report = if sched.steps > 0 {
        Some(analyze(f, &phi, sched.tau, sched.steps)?)
    } else {
        None
    };
    Ok(Denoised {
        signal,
        schedule: sched,
        report,
    })
}

/// Shrinkage function whose iteration matches diffusion with step `tau`.
/// At `tau = 1/4` this is the family's own shrinkage function.
pub fn wavelet_shrinkage(family: &FamilySpec, tau: f64) -> Result<RoleFunction> {
    if tau == 0.25 {
        return Ok(RoleFunction::family(*family, Role::Shrinkage));
    }
    let phi = RoleFunction::family(*family, Role::Activation);
    let coupling = CouplingParams::new(Some(tau), None, 1.0)?;
    Ok(translate(&phi, Role::Shrinkage, &coupling)?)
}

pub fn run_method(
    f: &Signal1D,
    method: Method,
    family: &FamilySpec,
    sched: Schedule,
) -> Result<Signal1D> {
    let Schedule { tau, steps } = sched;
    if steps == 0 {
        return Ok(f.clone());
    }
    let phi = RoleFunction::family(*family, Role::Activation);
    let out = match method {
        Method::Diffusion => run_steps(f, &phi, tau, steps)?,
        Method::Wavelet => iterate_shrinkage(f, &wavelet_shrinkage(family, tau)?, steps)?,
        Method::Variational => {
            let psi = RoleFunction::family(*family, Role::Regulariser);
            let spec = EnergySpec::new(psi, sched.stopping_time())?;
            minimize_by_diffusion(f, &spec, steps)?
        }
        Method::Resnet => {
            let block = make_diffusion_block(&phi, tau, f.h())?;
            let mut u = f.clone();
            for _ in 0..steps {
                u = apply_block(&block, &u)?;
            }
            u
        }
    };
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub schedule: Schedule,
    pub outputs: Vec<(Method, Signal1D)>,
    /// Max-norm distance for every unordered pair of methods.
    pub deltas: Vec<(Method, Method, f64)>,
}

impl Comparison {
    pub fn max_delta(&self) -> f64 {
        self.deltas.iter().map(|d| d.2).fold(0.0, f64::max)
    }

    pub fn to_key_values(&self) -> String {
        let mut out = format!(
            "tau={:e}\nsteps={}\nstopping_time={:e}\n",
            self.schedule.tau,
            self.schedule.steps,
            self.schedule.stopping_time()
        );
        for (a, b, d) in &self.deltas {
            out.push_str(&format!("delta_{a}_{b}={d:e}\n"));
        }
        out.push_str(&format!("max_delta={:e}\n", self.max_delta()));
        out
    }
}

/// Runs all four methods on the same schedule, one thread each.
pub fn compare(f: &Signal1D, family: &FamilySpec, sched: Schedule) -> Result<Comparison> {
    let results: Vec<(Method, Result<Signal1D>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = Method::ALL
            .into_iter()
            .map(|m| (m, scope.spawn(move || run_method(f, m, family, sched))))
            .collect();
        handles
            .into_iter()
            .map(|(m, h)| (m, h.join().expect("method thread panicked")))
            .collect()
    });
    let mut outputs = Vec::with_capacity(results.len());
    for (m, r) in results {
        outputs.push((m, r?));
    }
    let mut deltas = Vec::new();
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            let d = outputs[i].1.max_abs_diff(&outputs[j].1);
            deltas.push((outputs[i].0, outputs[j].0, d));
        }
    }
    Ok(Comparison {
        schedule: sched,
        outputs,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rosetta_core::Family;

    fn spike() -> Signal1D {
        Signal1D::unit(vec![0.0, 0.0, 1.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let f = Signal1D::unit(vec![0.3, -1.0, 2.0]).unwrap();
        for m in Method::ALL {
            let cfg = RunConfig::new(
                m,
                FamilySpec::unit(Family::PeronaMalik),
                StopRule::Time(0.0),
            );
            let out = denoise(&f, &cfg).unwrap();
            assert_eq!(out.signal, f);
            assert!(out.report.is_none());
        }
    }

    #[test]
    fn spike_comparison() {
        let sched = Schedule {
            tau: 0.25,
            steps: 1,
        };
        let cmp = compare(&spike(), &FamilySpec::constant(), sched).unwrap();
        assert_eq!(cmp.deltas.len(), 6);
        assert!(cmp.max_delta() <= 1e-12, "{}", cmp.to_key_values());
        let diffusion = &cmp.outputs[0].1;
        assert_eq!(diffusion.values(), &[0.0, 0.25, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn methods_agree_for_every_family() {
        let f = Signal1D::unit(vec![0.1, 0.9, 0.4, -0.3, 0.8, 0.0, 0.55]).unwrap();
        for fam in Family::ALL {
            for tau in [0.25, 0.1] {
                let sched = Schedule { tau, steps: 5 };
                if fam == Family::TruncatedQuadratic {
                    // the hard-threshold flux jumps, so its Lipschitz estimate
                    // rejects the variational step
                    let err = compare(&f, &FamilySpec::unit(fam), sched).unwrap_err();
                    assert_eq!(err.exit_code(), 3);
                    continue;
                }
                let cmp = match compare(&f, &FamilySpec::unit(fam), sched) {
                    Ok(c) => c,
                    Err(e) => panic!("{fam:?} tau={tau}: {e}"),
                };
                for (a, b, d) in &cmp.deltas {
                    let tol = if *a == Method::Variational || *b == Method::Variational {
                        1e-8
                    } else {
                        1e-12
                    };
                    assert!(*d <= tol, "{fam:?} tau={tau} {a}-{b}: {d:e}");
                }
            }
        }
    }

    #[test]
    fn schedules() {
        let fam = FamilySpec::constant();
        let cfg = RunConfig::new(Method::Diffusion, fam, StopRule::Time(1.0));
        assert_eq!(
            schedule(&cfg, 1.0).unwrap(),
            Schedule {
                tau: 0.25,
                steps: 4
            }
        );
        let cfg = RunConfig::new(Method::Diffusion, fam, StopRule::Steps(2)).with_tau(Some(0.3));
        assert!(matches!(
            schedule(&cfg, 1.0),
            Err(CliError::Core(Error::UnstableStep { .. }))
        ));
        let mut cfg =
            RunConfig::new(Method::Diffusion, fam, StopRule::Steps(3)).with_tau(Some(0.5));
        cfg.mode = StabilityMode::MaxMin;
        assert_eq!(
            schedule(&cfg, 1.0).unwrap(),
            Schedule { tau: 0.5, steps: 3 }
        );
        let cfg = RunConfig::new(Method::Diffusion, fam, StopRule::Time(1.0)).with_tau(Some(0.15));
        let s = schedule(&cfg, 1.0).unwrap();
        assert_eq!(s.steps, 7);
        assert!((s.stopping_time() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noise_needs_seed() {
        let mut cfg = RunConfig::new(
            Method::Diffusion,
            FamilySpec::constant(),
            StopRule::Steps(1),
        );
        cfg.noise = NoiseModel::Gaussian(0.1);
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
        cfg.seed = Some(3);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn wavelet_needs_unit_grid() {
        let f = Signal1D::new(vec![0.0, 1.0, 0.0], 0.5).unwrap();
        let cfg = RunConfig::new(Method::Wavelet, FamilySpec::constant(), StopRule::Steps(1));
        let err = denoise(&f, &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
