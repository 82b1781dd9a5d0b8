use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gbsm_core::approximation::Dataset;
use gbsm_core::experiments::{run_campaign, ExperimentConfig, ExperimentError, ExperimentKind};
use gbsm_core::mdp::{garnet_generate, GarnetConfig, Mdp, MdpError};
use gbsm_core::metric::{bsm, gbsm, FixedPointConfig, MetricError, DEFAULT_TOL};
use gbsm_core::practical::{compute_gbsm_practical, PracticalConfig, PracticalError};

const EXIT_USAGE: u8 = 1;
const EXIT_COMPUTE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "gbsm", version, about = "Bisimulation metrics within and between finite MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random Garnet MDP as JSON.
    GarnetGen(GarnetArgs),
    /// Metric between the states of two MDPs.
    Gbsm(GbsmArgs),
    /// Bisimulation metric within one MDP.
    Bsm(BsmArgs),
    /// Metric between a dataset-only target and a known source MDP.
    GbsmPractical(PracticalArgs),
    /// Run a seeded experiment campaign and write per-trial CSV.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GarnetArgs {
    #[arg(long, default_value_t = 20)]
    states: usize,
    #[arg(long, default_value_t = 5)]
    actions: usize,
    /// Fraction of states reachable from each state-action pair.
    #[arg(long, default_value_t = 0.5)]
    branching: f64,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    reward_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GbsmArgs {
    /// First MDP (rows of the metric).
    first: PathBuf,
    /// Second MDP (columns of the metric).
    second: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BsmArgs {
    mdp: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PracticalArgs {
    /// Target transitions as CSV with header s,a,s_next,r.
    data: PathBuf,
    /// Source MDP as JSON.
    source: PathBuf,
    /// Minimum samples per state-action pair.
    #[arg(long, default_value_t = 10)]
    eta1: usize,
    /// Convergence threshold on successive iterates.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    eta2: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Metric output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stage report output path; standard error when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// transfer, vfa, ssa_agg, ssa_est, practical or properties.
    name: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Comma-separated discount factors.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.5, 0.9])]
    gamma: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    states: usize,
    #[arg(long, default_value_t = 5)]
    actions: usize,
    #[arg(long, default_value_t = 0.5)]
    branching: f64,
    /// Fixed noise level; cycles 0.1, 0.2, 0.3 when omitted.
    #[arg(long)]
    noise_std: Option<f64>,
    /// Samples per state-action pair (sampled estimation, practical data).
    #[arg(long)]
    sample_k: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    agg_fraction: f64,
    #[arg(long, default_value_t = 10)]
    eta1: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    eta2: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Map each target state to its nearest source state in transfer runs.
    #[arg(long)]
    nearest: bool,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn compute(message: impl ToString) -> Self {
        Failure {
            code: EXIT_COMPUTE,
            message: message.to_string(),
        }
    }

    fn io(path: &Path, message: impl ToString) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("{}: {}", path.display(), message.to_string()),
        }
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::InvalidConfig(_) => Failure::usage(e),
            _ => Failure::compute(e),
        }
    }
}

fn load_mdp(path: &Path) -> Result<Mdp, Failure> {
    Mdp::load(path).map_err(|e| match e {
        MdpError::Io(_) | MdpError::Json(_) => Failure::io(path, e),
        other => Failure::io(path, format!("invalid MDP: {other}")),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}

fn fixed_point(tol: f64, max_iters: Option<usize>) -> Result<FixedPointConfig, Failure> {
    let cfg = FixedPointConfig { tol, max_iters };
    cfg.validate()?;
    Ok(cfg)
}

fn garnet_gen(args: GarnetArgs) -> Result<(), Failure> {
    let cfg = GarnetConfig {
        num_states: args.states,
        num_actions: args.actions,
        branching_fraction: args.branching,
        gamma: args.gamma,
        reward_max: args.reward_max,
        seed: args.seed,
    };
    cfg.validate().map_err(Failure::usage)?;
    let m = garnet_generate(&cfg).map_err(Failure::compute)?;
    emit(args.out.as_deref(), &m.to_json().map_err(Failure::compute)?)
}

fn metric_json(d: &gbsm_core::metric::MetricMatrix) -> Result<String, Failure> {
    d.to_json().map_err(Failure::compute)
}

fn run_gbsm(args: GbsmArgs) -> Result<(), Failure> {
    let cfg = fixed_point(args.tol, args.max_iters)?;
    let m1 = load_mdp(&args.first)?;
    let m2 = load_mdp(&args.second)?;
    let d = gbsm(&m1, &m2, &cfg)?;
    emit(args.out.as_deref(), &metric_json(&d)?)
}

fn run_bsm(args: BsmArgs) -> Result<(), Failure> {
    let cfg = fixed_point(args.tol, args.max_iters)?;
    let m = load_mdp(&args.mdp)?;
    let d = bsm(&m, &cfg)?;
    emit(args.out.as_deref(), &metric_json(&d)?)
}

fn run_practical(args: PracticalArgs) -> Result<(), Failure> {
    let cfg = PracticalConfig {
        eta1: args.eta1,
        eta2: args.eta2,
        max_iters: args.max_iters,
    };
    cfg.validate().map_err(Failure::usage)?;
    let data = Dataset::load(&args.data).map_err(|e| Failure::io(&args.data, e))?;
    let source = load_mdp(&args.source)?;
    let out = compute_gbsm_practical(&data, &source, &cfg).map_err(|e| match e {
        PracticalError::InvalidConfig(_) => Failure::usage(e),
        PracticalError::Approx(_) => Failure::io(&args.data, e),
        _ => Failure::compute(e),
    })?;
    let report = serde_json::to_string_pretty(&out.report).map_err(Failure::compute)?;
    match &args.report {
        Some(path) => fs::write(path, &report).map_err(|e| Failure::io(path, e))?,
        None => eprintln!("{report}"),
    }
    emit(args.out.as_deref(), &metric_json(&out.metric)?)
}

fn run_experiment(args: ExperimentArgs) -> Result<(), Failure> {
    let kind: ExperimentKind = args.name.parse().map_err(Failure::usage)?;
    let mut cfg = ExperimentConfig::new(kind, &args.out);
    cfg.trials = args.trials;
    cfg.gammas = args.gamma;
    cfg.garnet = GarnetConfig {
        num_states: args.states,
        num_actions: args.actions,
        branching_fraction: args.branching,
        ..GarnetConfig::default()
    };
    cfg.noise_std = args.noise_std;
    cfg.sample_k = args.sample_k;
    cfg.agg_fraction = args.agg_fraction;
    cfg.eta1 = args.eta1;
    cfg.eta2 = args.eta2;
    cfg.tol = args.tol;
    cfg.seed = args.seed;
    cfg.nearest_map = args.nearest;
    let (rows, summary) = run_campaign(&cfg).map_err(|e| match e {
        ExperimentError::InvalidConfig(_) | ExperimentError::UnknownExperiment(_) => Failure::usage(e),
        ExperimentError::Io(_) | ExperimentError::Csv(_) => Failure::io(&args.out, e),
        ExperimentError::SpotCheck(_) => Failure::compute(e),
    })?;
    print!("{summary}");
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        return Err(Failure::compute(format!("{failed} trials failed; see {}", args.out.display())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::GarnetGen(a) => garnet_gen(a),
        Command::Gbsm(a) => run_gbsm(a),
        Command::Bsm(a) => run_bsm(a),
        Command::GbsmPractical(a) => run_practical(a),
        Command::Experiment(a) => run_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
