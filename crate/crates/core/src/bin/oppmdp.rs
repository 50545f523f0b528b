use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use opportunistic_mdp::baselines::{
    heuristic_simulate, heuristic_value, Heuristic, HeuristicConfig,
};
use opportunistic_mdp::envs::robot::{RobotEnv, POWER_BUDGET};
use opportunistic_mdp::envs::synthetic::FiniteInstance;
use opportunistic_mdp::experiment::{self, EnvKind, ExperimentConfig, Manifest, SweepParameter};
use opportunistic_mdp::oracle::solve_unconstrained;
use opportunistic_mdp::Error;

#[derive(Parser)]
#[command(
    name = "oppmdp",
    version,
    about = "Opportunistic MDP learner experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One learner run; writes metrics CSV, occupancy JSON and a manifest.
    Run(RunArgs),
    /// Runs a grid over one parameter and prints aggregated CSV.
    Sweep(SweepArgs),
    /// Optimizes (and optionally simulates) a threshold heuristic.
    Heuristic(HeuristicArgs),
    /// Exact optimum of a small unconstrained instance.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn on(self) -> bool {
        matches!(self, Toggle::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvArg {
    Robot,
    Synthetic,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config; any flag below overrides it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reuse the config recorded in a run manifest.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum)]
    env: Option<EnvArg>,
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long = "V")]
    v: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "T")]
    t: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    redirect: Option<Toggle>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    theta_high: Option<f64>,
    #[arg(long)]
    theta_low: Option<f64>,
    #[arg(long, value_enum)]
    power: Option<Toggle>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut c = match (&self.config, &self.manifest) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(p)) => Manifest::load(p)?.config,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(e) = self.env {
            c.env = match e {
                EnvArg::Robot => EnvKind::Robot,
                EnvArg::Synthetic => EnvKind::Synthetic,
            };
        }
        if let Some(p) = &self.instance {
            c.instance = Some(p.clone());
        }
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(x) = self.$field { c.$field = x; })*};
        }
        set!(
            u,
            v,
            alpha,
            t,
            seed,
            gamma,
            theta_high,
            theta_low,
            checkpoint_every
        );
        if let Some(r) = self.redirect {
            c.redirect = r.on();
        }
        if let Some(p) = self.power {
            c.power = p.on();
        }
        if let Some(o) = &self.out {
            c.output_dir = Some(o.clone());
        }
        Ok(c)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// alpha, V or u.
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<f64>,
    /// Seeds per point.
    #[arg(long)]
    seeds: Option<usize>,
    /// Concurrent runs (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct HeuristicArgs {
    #[arg(long, default_value_t = 2)]
    which: u8,
    #[arg(long, default_value_t = 4.0)]
    u: f64,
    /// Cap the average power at the robot's budget.
    #[arg(long, value_enum, default_value = "off")]
    power: Toggle,
    /// Grid spacing as a fraction of the threshold range.
    #[arg(long, default_value_t = 1e-4)]
    resolution: f64,
    /// Also run the policy for this many slots.
    #[arg(long)]
    simulate: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let mut c = args.config.resolve()?;
    c.output_dir.get_or_insert_with(|| PathBuf::from("out"));
    let out = experiment::run(&c)?;
    println!("{}", serde_json::to_string_pretty(&out.summary)?);
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Error> {
    let mut c = args.config.resolve()?;
    if let Some(s) = args.seeds {
        c.seeds_per_point = s;
    }
    if let Some(w) = args.workers {
        c.workers = w;
    }
    let param = SweepParameter::parse(&args.param)?;
    let res = experiment::sweep(&c, param, &args.values)?;
    if let Some(dir) = &c.output_dir {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("sweep_{}.csv", param.name()));
        res.write_csv(BufWriter::new(fs::File::create(path)?))?;
    }
    res.write_csv(std::io::stdout().lock())
}

fn heuristic(args: &HeuristicArgs) -> Result<(), Error> {
    let which = Heuristic::from_index(args.which)?;
    let config = HeuristicConfig {
        which,
        u: args.u,
        resolution: args.resolution,
        power_budget: args.power.on().then_some(POWER_BUDGET),
    };
    let value = heuristic_value(&config)?;
    let mut report = serde_json::to_value(&value)?;
    if let Some(t) = args.simulate {
        let env = RobotEnv::with_u(args.u)?;
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let sim = heuristic_simulate(which, &value.thresholds, &env, &mut rng, t)?;
        report["simulated"] = serde_json::to_value(sim)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<(), Error> {
    let inst = FiniteInstance::load(&args.instance)
        .map_err(|e| Error::Config(format!("cannot load {}: {e}", args.instance.display())))?;
    let result = solve_unconstrained(&inst.build()?)?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Heuristic(a) => heuristic(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numeric { .. } => ExitCode::from(3),
                Error::Internal(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
