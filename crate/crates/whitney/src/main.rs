//! Batch front door: run simulations, classifications, searches and
//! experiments from motion-profile presets or files, emitting CSV/JSON.
//!
//! Exit codes: 0 success, 1 domain error (invalid bracket, resolution
//! floor, integration failure), 2 usage error. Data goes to stdout or
//! `--output`; diagnostics go to stderr. Identical invocations produce
//! identical bytes.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use whitney::classify::{classify, epsilon_threshold, Classification, ClassifyOpts};
use whitney::dynamics::{Mode, RodModel, RodParams, State};
use whitney::experiments;
use whitney::experiments::{extrapolate, Extrapolation, TWO_WEEKS};
use whitney::integrate::{integrate, IntegrateOpts, Method};
use whitney::profile::{MotionProfile, ProfileSpec};
use whitney::report;
use whitney::search::{decay_fit, survival_search, SurvivalBracket, SurvivalWindow};

#[derive(Parser)]
#[command(
    name = "whitney",
    about = "Inverted rod on a moving platform: simulate, classify, search, experiment",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and emit CSV (t, alpha, omega, f, ddf).
    Simulate(SimulateArgs),
    /// Classify initial angles: fell forward / fell backward / survived.
    Classify(ClassifyArgs),
    /// Straddle bisection for a never-falling angle; bracket + window JSON.
    Search(SearchArgs),
    /// Sweep the end map alpha0 -> alpha(T) over a grid; CSV.
    Endmap(EndmapArgs),
    /// Window-width decay over horizons: fit JSON (+ optional points CSV).
    Decay(DecayArgs),
    /// Guaranteed-fall threshold arctan(g/A_max) for a profile; JSON.
    Epsilon(EpsilonArgs),
    /// List built-in motion profiles and the profile file schema.
    Profiles,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Preset: rest | const_accel:A | sinusoid:A,W,PHASE
    #[arg(long, conflicts_with = "profile_file")]
    profile: Option<String>,
    /// JSON file with a profile description (see `whitney profiles`).
    #[arg(long)]
    profile_file: Option<PathBuf>,
    /// Gravity, m/s².
    #[arg(long, default_value_t = RodParams::DEFAULT_G)]
    g: f64,
    /// Rod length, m.
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    #[arg(long, value_enum, default_value_t = RodModelArg::PointMass)]
    rod_model: RodModelArg,
    /// Adaptive integrator relative tolerance.
    #[arg(long, default_value_t = whitney::integrate::DEFAULT_REL_TOL)]
    rel_tol: f64,
    /// Event localization tolerance (rad and s).
    #[arg(long, default_value_t = whitney::integrate::DEFAULT_CROSSING_TOL)]
    crossing_tol: f64,
    /// Write data here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RodModelArg {
    PointMass,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Free,
    Absorbing,
    SmoothStick,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Initial angle, rad (angles are radians everywhere).
    #[arg(long)]
    alpha0: f64,
    /// Initial angular velocity, rad/s.
    #[arg(long, default_value_t = 0.0)]
    omega0: f64,
    #[arg(long)]
    t_end: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Free)]
    mode: ModeArg,
    /// Smooth-stick cutoff band, rad.
    #[arg(long, default_value_t = Mode::DEFAULT_STICK_DELTA)]
    stick_delta: f64,
    /// Smooth-stick damping, 1/s.
    #[arg(long, default_value_t = Mode::DEFAULT_STICK_DAMPING)]
    stick_damping: f64,
    /// Fixed RK4 step; omit for the adaptive stepper.
    #[arg(long)]
    rk4_h: Option<f64>,
    /// Uniform output grid spacing, s.
    #[arg(long)]
    sample_dt: Option<f64>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Single initial angle, rad.
    #[arg(long, conflicts_with_all = ["samples", "grid"])]
    alpha0: Option<f64>,
    /// Number of random initial angles in (0, pi).
    #[arg(long, requires = "seed")]
    samples: Option<usize>,
    /// RNG seed for --samples.
    #[arg(long)]
    seed: Option<u64>,
    /// Uniform grid "lo,hi,n" of initial angles.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 5.0)]
    horizon: f64,
    /// Bisection tolerance, rad.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct EndmapArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Absorbing)]
    mode: ModeArg,
    #[arg(long, default_value_t = Mode::DEFAULT_STICK_DELTA)]
    stick_delta: f64,
    #[arg(long, default_value_t = Mode::DEFAULT_STICK_DAMPING)]
    stick_damping: f64,
    #[arg(long, default_value_t = 5.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.0)]
    grid_lo: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    grid_hi: f64,
    /// Number of grid points (>= 2).
    #[arg(long)]
    grid_n: usize,
}

#[derive(Args)]
struct DecayArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated horizons, s (at least 4).
    #[arg(long)]
    horizons: String,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Also write the fitted points as CSV here.
    #[arg(long)]
    points_out: Option<PathBuf>,
    /// Extrapolation target, s.
    #[arg(long, default_value_t = TWO_WEEKS)]
    extrapolate_t: f64,
}

#[derive(Args)]
struct EpsilonArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Acceleration bound window start, s.
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// Acceleration bound window end, s.
    #[arg(long, default_value_t = 10.0)]
    t1: f64,
}

enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Search(args) => cmd_search(args),
        Command::Endmap(args) => cmd_endmap(args),
        Command::Decay(args) => cmd_decay(args),
        Command::Epsilon(args) => cmd_epsilon(args),
        Command::Profiles => cmd_profiles(),
    }
}

fn parse_preset(s: &str) -> Result<ProfileSpec, CliError> {
    let (kind, rest) = match s.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (s, None),
    };
    let floats = |r: &str| -> Result<Vec<f64>, CliError> {
        r.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(usage))
            .collect()
    };
    match (kind, rest) {
        ("rest", None) => Ok(ProfileSpec::Rest),
        ("const_accel", Some(r)) => {
            let v = floats(r)?;
            if v.len() != 1 {
                return Err(CliError::Usage(format!(
                    "const_accel takes one parameter, got `{r}`"
                )));
            }
            Ok(ProfileSpec::ConstAccel { accel: v[0] })
        }
        ("sinusoid", Some(r)) => {
            let v = floats(r)?;
            if v.len() != 3 {
                return Err(CliError::Usage(format!(
                    "sinusoid takes amplitude,omega,phase, got `{r}`"
                )));
            }
            Ok(ProfileSpec::Sinusoid {
                amplitude: v[0],
                omega: v[1],
                phase: v[2],
            })
        }
        _ => Err(CliError::Usage(format!(
            "unknown profile `{s}`; see `whitney profiles`"
        ))),
    }
}

impl CommonArgs {
    fn profile(&self) -> Result<MotionProfile, CliError> {
        let spec = match (&self.profile, &self.profile_file) {
            (Some(s), None) => parse_preset(s)?,
            (None, Some(path)) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(usage)?
            }
            (None, None) => ProfileSpec::Rest,
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        };
        MotionProfile::new(&spec).map_err(usage)
    }

    fn params(&self) -> Result<RodParams, CliError> {
        let model = match self.rod_model {
            RodModelArg::PointMass => RodModel::PointMass,
            RodModelArg::Uniform => RodModel::UniformRod,
        };
        RodParams::new(self.g, self.length, model).map_err(usage)
    }

    fn classify_opts(&self) -> ClassifyOpts {
        ClassifyOpts {
            rel_tol: self.rel_tol,
            crossing_tol: self.crossing_tol,
            omega0: 0.0,
        }
    }

    fn writer(&self) -> Result<Box<dyn Write>, CliError> {
        match &self.output {
            Some(path) => {
                let f = fs::File::create(path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                Ok(Box::new(f))
            }
            None => Ok(Box::new(std::io::stdout())),
        }
    }
}

fn make_mode(mode: ModeArg, delta: f64, damping: f64) -> Result<Mode, CliError> {
    match mode {
        ModeArg::Free => Ok(Mode::Free),
        ModeArg::Absorbing => Ok(Mode::Absorbing),
        ModeArg::SmoothStick => Mode::smooth_stick(delta, damping).map_err(usage),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let params = args.common.params()?;
    let profile = args.common.profile()?;
    let mode = make_mode(args.mode, args.stick_delta, args.stick_damping)?;
    let mut opts = IntegrateOpts {
        method: match args.rk4_h {
            Some(h) => Method::Rk4 { h },
            None => Method::Adaptive {
                rel_tol: args.common.rel_tol,
            },
        },
        crossing_tol: args.common.crossing_tol,
        ..IntegrateOpts::default()
    };
    opts.sample_dt = args.sample_dt;
    let traj = integrate(
        &params,
        &profile,
        mode,
        State::new(0.0, args.alpha0, args.omega0),
        args.t_end,
        &opts,
    )
    .map_err(domain)?;
    if let Some(ev) = &traj.event {
        eprintln!(
            "event: {:?} crossing of level {} at t = {}",
            ev.side, ev.level, ev.t_cross
        );
    }
    for d in &traj.diagnostics {
        eprintln!("diagnostic: {d}");
    }
    let mut out = args.common.writer()?;
    report::write_trajectory_csv(&mut out, &traj).map_err(domain)?;
    out.flush().map_err(domain)
}

#[derive(Serialize)]
struct SingleClassification {
    alpha0: f64,
    #[serde(flatten)]
    classification: Classification,
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), CliError> {
    let params = args.common.params()?;
    let profile = args.common.profile()?;
    let opts = args.common.classify_opts();
    let horizon = args.horizon;
    let mut out = args.common.writer()?;

    let alphas: Vec<f64> = if let Some(a) = args.alpha0 {
        let c = classify(&params, &profile, a, horizon, &opts).map_err(domain)?;
        let line = report::to_json_line(&SingleClassification {
            alpha0: a,
            classification: c,
        });
        out.write_all(line.as_bytes()).map_err(domain)?;
        return out.flush().map_err(domain);
    } else if let Some(n) = args.samples {
        let seed = args.seed.expect("clap requires seed with samples");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| rng.gen_range(f64::MIN_POSITIVE..std::f64::consts::PI))
            .collect()
    } else if let Some(grid) = &args.grid {
        let parts: Vec<&str> = grid.split(',').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "--grid wants lo,hi,n; got `{grid}`"
            )));
        }
        let lo: f64 = parts[0].trim().parse().map_err(usage)?;
        let hi: f64 = parts[1].trim().parse().map_err(usage)?;
        let n: usize = parts[2].trim().parse().map_err(usage)?;
        if n < 2 || !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(CliError::Usage(format!(
                "--grid wants lo < hi and n >= 2; got `{grid}`"
            )));
        }
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    } else {
        return Err(CliError::Usage(
            "classify needs --alpha0, --samples with --seed, or --grid".into(),
        ));
    };

    let rows: Result<Vec<(f64, Classification)>, CliError> = alphas
        .par_iter()
        .map(|&a| {
            classify(&params, &profile, a, horizon, &opts)
                .map(|c| (a, c))
                .map_err(domain)
        })
        .collect();
    report::write_classification_csv(&mut out, &rows?).map_err(domain)?;
    out.flush().map_err(domain)
}

#[derive(Serialize)]
struct SearchReport {
    horizon: f64,
    tol: f64,
    a_max: f64,
    epsilon: f64,
    bracket: SurvivalBracket,
    window: Option<SurvivalWindow>,
    diagnostics: Vec<String>,
}

fn cmd_search(args: SearchArgs) -> Result<(), CliError> {
    let params = args.common.params()?;
    let profile = args.common.profile()?;
    let opts = args.common.classify_opts();
    let a_max = profile.max_abs_accel(0.0, args.horizon).map_err(domain)?;
    let eps = epsilon_threshold(&params, a_max).map_err(domain)?;
    let found =
        survival_search(&params, &profile, args.horizon, args.tol, &opts).map_err(domain)?;
    let reportv = SearchReport {
        horizon: args.horizon,
        tol: args.tol,
        a_max,
        epsilon: eps.epsilon,
        bracket: found.bracket,
        window: found.window,
        diagnostics: found.trace.diagnostics,
    };
    let mut out = args.common.writer()?;
    out.write_all(report::to_json_line(&reportv).as_bytes())
        .map_err(domain)?;
    out.flush().map_err(domain)
}

fn cmd_endmap(args: EndmapArgs) -> Result<(), CliError> {
    let params = args.common.params()?;
    let profile = args.common.profile()?;
    let mode = make_mode(args.mode, args.stick_delta, args.stick_damping)?;
    if args.grid_n < 2 {
        return Err(CliError::Usage("--grid-n must be >= 2".into()));
    }
    let n = args.grid_n;
    let grid: Vec<f64> = (0..n)
        .map(|i| args.grid_lo + (args.grid_hi - args.grid_lo) * i as f64 / (n - 1) as f64)
        .collect();
    let table = experiments::end_map_sweep(
        &params,
        &profile,
        mode,
        args.horizon,
        &grid,
        &args.common.classify_opts(),
    )
    .map_err(domain)?;
    let mut out = args.common.writer()?;
    report::write_end_map_csv(&mut out, &table).map_err(domain)?;
    out.flush().map_err(domain)
}

#[derive(Serialize)]
struct DecayReport {
    tol: f64,
    fit: whitney::search::DecayFit,
    extrapolation: Extrapolation,
}

fn cmd_decay(args: DecayArgs) -> Result<(), CliError> {
    let params = args.common.params()?;
    let profile = args.common.profile()?;
    let horizons: Result<Vec<f64>, CliError> = args
        .horizons
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(usage))
        .collect();
    let horizons = horizons?;
    let fit = decay_fit(
        &params,
        &profile,
        &horizons,
        args.tol,
        &args.common.classify_opts(),
    )
    .map_err(domain)?;
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    let extrapolation = extrapolate(&fit, args.extrapolate_t);
    if let Some(path) = &args.points_out {
        let f = fs::File::create(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        report::write_decay_points_csv(f, &fit).map_err(domain)?;
    }
    let reportv = DecayReport {
        tol: args.tol,
        fit,
        extrapolation,
    };
    let mut out = args.common.writer()?;
    out.write_all(report::to_json_line(&reportv).as_bytes())
        .map_err(domain)?;
    out.flush().map_err(domain)
}

#[derive(Serialize)]
struct EpsilonReport {
    t0: f64,
    t1: f64,
    a_max: f64,
    epsilon: f64,
}

fn cmd_epsilon(args: EpsilonArgs) -> Result<(), CliError> {
    let params = args.common.params()?;
    let profile = args.common.profile()?;
    let a_max = profile.max_abs_accel(args.t0, args.t1).map_err(usage)?;
    let eps = epsilon_threshold(&params, a_max).map_err(domain)?;
    let reportv = EpsilonReport {
        t0: args.t0,
        t1: args.t1,
        a_max,
        epsilon: eps.epsilon,
    };
    let mut out = args.common.writer()?;
    out.write_all(report::to_json_line(&reportv).as_bytes())
        .map_err(domain)?;
    out.flush().map_err(domain)
}

fn cmd_profiles() -> Result<(), CliError> {
    println!(
        "\
presets (--profile):
  rest                      stationary platform, f(t) = 0
  const_accel:A             f(t) = A t^2 / 2           (A in m/s^2)
  sinusoid:A,W,PHASE        f(t) = A sin(W t + PHASE)  (m, rad/s, rad)

profile files (--profile-file, JSON, SI units):
  {{\"kind\": \"rest\"}}
  {{\"kind\": \"const_accel\", \"accel\": 2.0}}
  {{\"kind\": \"sinusoid\", \"amplitude\": 3.0, \"omega\": 2.0, \"phase\": 0.0}}
  {{\"kind\": \"spline\", \"knots\": [[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]}}
  {{\"kind\": \"stop_forever\", \"t_stop\": 8.0, \"blend\": 1.0,
    \"base\": {{\"kind\": \"sinusoid\", \"amplitude\": 3.0, \"omega\": 2.0, \"phase\": 0.0}}}}

The spline is the natural cubic through the knots; every profile
continues inertially (f'' = 0) past its end. Angles are radians
everywhere; alpha = 0 is the forward floor, pi/2 upright, pi backward."
    );
    Ok(())
}
