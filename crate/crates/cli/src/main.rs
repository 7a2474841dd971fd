use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rosetta_cli::csv::{read_signal, read_signal_file, write_signal, write_signal_file};
use rosetta_cli::generate::{generate_signal, GenerateParams, SignalKind};
use rosetta_cli::methods::{compare, denoise, schedule, Method, RunConfig, StopRule};
use rosetta_cli::noise::{add_noise, NoiseModel};
use rosetta_cli::{CliError, Result};
use rosetta_core::{
    analyze, max_stable_tau, translate, CouplingParams, Family, FamilySpec, Role, RoleFunction,
    Signal1D, StabilityMode,
};

/// Diffusion, wavelet shrinkage, variational and residual-network
/// denoising of 1-D signals, and translation between their nonlinearities.
#[derive(Debug, Parser)]
#[command(name = "rosetta", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a test signal.
    Generate(GenerateArgs),
    /// Add seeded noise to a signal.
    Noise(NoiseArgs),
    /// Denoise a signal with one method.
    Denoise(DenoiseArgs),
    /// Evaluate a family function translated into another role.
    Translate(TranslateArgs),
    /// Run explicit diffusion and report range and sign diagnostics.
    Stability(StabilityArgs),
    /// Run all four methods on one schedule and report their distances.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// constant, charbonnier, truncated-tv, perona-malik, truncated-bfb or
    /// truncated-quadratic.
    #[arg(long, default_value = "constant")]
    family: Family,
    /// Contrast parameter (charbonnier, perona-malik).
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Threshold (truncated families).
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
}

impl FamilyArgs {
    fn spec(&self) -> Result<FamilySpec> {
        Ok(FamilySpec::new(self.family, self.lambda, self.theta)?)
    }
}

#[derive(Debug, Args)]
struct NoiseOptions {
    /// none, gaussian or uniform.
    #[arg(long, default_value = "none")]
    noise: String,
    /// Standard deviation of gaussian noise.
    #[arg(long)]
    sigma: Option<f64>,
    /// Half-width of uniform noise.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Required unless the noise model is `none`.
    #[arg(long)]
    seed: Option<u64>,
}

impl NoiseOptions {
    fn model(&self) -> Result<NoiseModel> {
        let magnitude = match self.noise.as_str() {
            "gaussian" => self.sigma,
            "uniform" => self.amplitude,
            _ => None,
        };
        NoiseModel::from_parts(&self.noise, magnitude)
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// step, sine, piecewise or spike.
    #[arg(long)]
    kind: SignalKind,
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Number of sine periods over the signal.
    #[arg(long, default_value_t = 1.0)]
    periods: f64,
    /// Number of constant pieces.
    #[arg(long, default_value_t = 4)]
    pieces: usize,
    /// Seed for the piecewise levels.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    #[command(flatten)]
    noise: NoiseOptions,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "stop", required = true, multiple = false, args = ["stopping_time", "steps"])]
struct DenoiseArgs {
    /// diffusion, wavelet, variational or resnet.
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    family: FamilyArgs,
    /// Step size; defaults to the largest stable one.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    stopping_time: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Stability notion for the step size: sign or maxmin.
    #[arg(long, default_value = "sign")]
    mode: StabilityMode,
    #[command(flatten)]
    noise: NoiseOptions,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Where to write the stability report (default stderr).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TranslateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value = "diffusivity")]
    from: Role,
    #[arg(long)]
    to: Role,
    /// Evaluation point; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    at: Vec<f64>,
    /// Evenly spaced points as `start,end,count`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Step size; defaults to the bound of `mode`. Not clamped.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value = "sign")]
    mode: StabilityMode,
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, default_value = "sign")]
    mode: StabilityMode,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory receiving one `<method>.csv` per method.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn load(input: Option<&Path>) -> Result<Signal1D> {
    match input {
        Some(path) => read_signal_file(path),
        None => read_signal(BufReader::new(io::stdin().lock()), "<stdin>"),
    }
}

fn store(output: Option<&Path>, signal: &Signal1D) -> Result<()> {
    match output {
        Some(path) => write_signal_file(path, signal),
        None => write_signal(io::stdout().lock(), signal).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn write_text(path: Option<&Path>, text: &str, fallback_stderr: bool) -> Result<()> {
    let res = match path {
        Some(p) => std::fs::write(p, text).map_err(|source| (p.to_path_buf(), source)),
        None if fallback_stderr => io::stderr()
            .write_all(text.as_bytes())
            .map_err(|source| (PathBuf::from("<stderr>"), source)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| (PathBuf::from("<stdout>"), source)),
    };
    res.map_err(|(path, source)| CliError::Io { path, source })
}

fn seed_for(model: NoiseModel, seed: Option<u64>) -> Result<u64> {
    match (model, seed) {
        (NoiseModel::None, s) => Ok(s.unwrap_or(0)),
        (_, Some(s)) => Ok(s),
        (_, None) => Err(CliError::Usage(
            "--seed is required when noise is added".into(),
        )),
    }
}

fn run_generate(args: GenerateArgs) -> Result<()> {
    let params = GenerateParams {
        h: args.h,
        periods: args.periods,
        pieces: args.pieces,
    };
    let signal = generate_signal(args.kind, args.length, &params, args.seed)?;
    store(args.output.as_deref(), &signal)
}

fn run_noise(args: NoiseArgs) -> Result<()> {
    let model = args.noise.model()?;
    let seed = seed_for(model, args.noise.seed)?;
    let signal = load(args.input.as_deref())?;
    store(args.output.as_deref(), &add_noise(&signal, model, seed)?)
}

fn run_denoise(args: DenoiseArgs) -> Result<()> {
    let stop = match (args.stopping_time, args.steps) {
        (Some(t), None) => StopRule::Time(t),
        (None, Some(m)) => StopRule::Steps(m),
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --stopping-time and --steps".into(),
            ))
        }
    };
    let mut config = RunConfig::new(args.method, args.family.spec()?, stop);
    config.coupling = CouplingParams::new(args.tau, None, 1.0)?;
    config.mode = args.mode;
    config.input = args.input;
    config.output = args.output;
    config.noise = args.noise.model()?;
    config.seed = args.noise.seed;
    config.validate()?;

    let clean = load(config.input.as_deref())?;
    let f = add_noise(&clean, config.noise, seed_for(config.noise, config.seed)?)?;
    let result = denoise(&f, &config)?;
    store(config.output.as_deref(), &result.signal)?;

    let mut text = format!(
        "method={}\nfamily={}\nnoise_seed={}\n",
        config.method,
        config.family.family(),
        config.seed.map_or("none".to_string(), |s| s.to_string()),
    );
    match &result.report {
        Some(report) => text.push_str(&report.to_key_values()),
        None => text.push_str(&format!("tau={:e}\nsteps=0\n", result.schedule.tau)),
    }
    write_text(args.report.as_deref(), &text, true)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || CliError::Usage(format!("--grid expects start,end,count, got `{spec}`"));
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let [start, end, count] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = start.parse().map_err(|_| bad())?;
    let end: f64 = end.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    Ok(match count {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    })
}

fn run_translate(args: TranslateArgs) -> Result<()> {
    let mut points = args.at.clone();
    if let Some(grid) = &args.grid {
        points.extend(parse_grid(grid)?);
    }
    if points.is_empty() {
        return Err(CliError::Usage("give --at or --grid".into()));
    }
    let coupling = CouplingParams::new(Some(args.tau), Some(args.alpha), args.h)?;
    let source = RoleFunction::family(args.family.spec()?, args.from);
    let target = translate(&source, args.to, &coupling)?;
    let mut text = String::new();
    if points.len() == 1 && args.grid.is_none() {
        text.push_str(&format!("{}\n", target.eval(points[0])));
    } else {
        text.push_str(&format!("# {}\n", target.provenance()));
        for r in points {
            text.push_str(&format!("{r},{}\n", target.eval(r)));
        }
    }
    write_text(None, &text, false)
}

fn run_stability(args: StabilityArgs) -> Result<()> {
    let f = load(args.input.as_deref())?;
    let spec = args.family.spec()?;
    let tau = match args.tau {
        Some(t) => t,
        None => max_stable_tau(spec.lipschitz(), f.h(), args.mode)?,
    };
    let phi = RoleFunction::family(spec, Role::Activation);
    let report = analyze(&f, &phi, tau, args.steps)?;
    write_text(None, &report.to_key_values(), false)?;
    if report.range_ok {
        Ok(())
    } else {
        Err(CliError::Stability(format!(
            "{} samples left [min f, max f], worst overshoot {:e}",
            report.violations.len(),
            report.worst_overshoot
        )))
    }
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let f = load(args.input.as_deref())?;
    let mut config = RunConfig::new(
        Method::Diffusion,
        args.family.spec()?,
        StopRule::Steps(args.steps),
    );
    config.coupling = CouplingParams::new(args.tau, None, 1.0)?;
    config.mode = args.mode;
    let sched = schedule(&config, f.h())?;
    let cmp = compare(&f, &config.family, sched)?;
    if let Some(dir) = &args.output_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        for (method, out) in &cmp.outputs {
            write_signal_file(&dir.join(format!("{method}.csv")), out)?;
        }
    }
    write_text(None, &cmp.to_key_values(), false)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Noise(a) => run_noise(a),
        Command::Denoise(a) => run_denoise(a),
        Command::Translate(a) => run_translate(a),
        Command::Stability(a) => run_stability(a),
        Command::Compare(a) => run_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
