//! Configured runs and parameter sweeps, with their file artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::robot::{RobotConfig, RobotEnv};
use crate::envs::synthetic::{FiniteInstance, FiniteProblem};
use crate::error::{Error, Result};
use crate::learner::{LearnerConfig, RunOutcome, Simulation};
use crate::metrics::occupancy_json;
use crate::problem::Problem;
use crate::redirect::RedirectConfig;
use crate::rng::derive_seed;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    #[default]
    Robot,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    /// Instance file for the synthetic environment.
    pub instance: Option<PathBuf>,
    pub u: f64,
    pub power: bool,
    #[serde(rename = "V")]
    pub v: f64,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t: u64,
    pub seed: u64,
    pub redirect: bool,
    pub gamma: f64,
    pub theta_high: f64,
    pub theta_low: f64,
    /// Slots between metrics CSV rows.
    pub checkpoint_every: u64,
    /// Directory receiving the CSV, occupancy JSON and manifest.
    pub output_dir: Option<PathBuf>,
    pub seeds_per_point: usize,
    /// Concurrent sweep points; 0 uses every available core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let r = RedirectConfig::default();
        Self {
            env: EnvKind::Robot,
            instance: None,
            u: 4.0,
            power: false,
            v: 5.0,
            alpha: 1000.0,
            t: 1_000_000,
            seed: 1,
            redirect: false,
            gamma: r.gamma,
            theta_high: r.theta_high,
            theta_low: r.theta_low,
            checkpoint_every: 10_000,
            output_dir: None,
            seeds_per_point: 1,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn learner(&self) -> LearnerConfig {
        let cfg = LearnerConfig::new(self.v, self.alpha, self.t);
        if self.redirect {
            cfg.with_redirect(RedirectConfig {
                gamma: self.gamma,
                theta_high: self.theta_high,
                theta_low: self.theta_low,
            })
        } else {
            cfg
        }
    }

    pub fn robot(&self) -> RobotConfig {
        RobotConfig {
            u: self.u,
            power_constraint: self.power,
            walls: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.learner().validate()?;
        match self.env {
            EnvKind::Robot => {
                if !(0.0..=20.0).contains(&self.u) {
                    return Err(Error::Config(format!(
                        "u must lie in [0, 20], got {}",
                        self.u
                    )));
                }
            }
            EnvKind::Synthetic => {
                if self.instance.is_none() {
                    return Err(Error::Config("synthetic env needs an instance file".into()));
                }
                if self.power {
                    return Err(Error::Config(
                        "power constraint applies to the robot only".into(),
                    ));
                }
            }
        }
        if self.seeds_per_point == 0 {
            return Err(Error::Config("seeds_per_point must be at least 1".into()));
        }
        Ok(())
    }

    /// Loads the environment named by the config.
    pub fn environment(&self) -> Result<Environment> {
        self.validate()?;
        Ok(match self.env {
            EnvKind::Robot => Environment::Robot(RobotEnv::new(&self.robot())?),
            EnvKind::Synthetic => {
                let path = self.instance.as_ref().expect("validated");
                let inst = FiniteInstance::load(path).map_err(|e| {
                    Error::Config(format!("cannot load instance {}: {e}", path.display()))
                })?;
                Environment::Synthetic(inst.build()?)
            }
        })
    }
}

pub enum Environment {
    Robot(RobotEnv),
    Synthetic(FiniteProblem),
}

impl Environment {
    pub fn num_states(&self) -> usize {
        match self {
            Self::Robot(p) => p.num_states(),
            Self::Synthetic(p) => p.num_states(),
        }
    }

    pub fn state_label(&self, i: usize) -> String {
        match self {
            Self::Robot(p) => p.state_label(i),
            Self::Synthetic(p) => p.state_label(i),
        }
    }

    /// Runs the learner to the configured horizon.
    pub fn simulate(&self, config: &ExperimentConfig, seed: u64) -> Result<RunOutcome> {
        fn go<P: Problem>(p: &P, c: &ExperimentConfig, seed: u64) -> Result<RunOutcome> {
            Simulation::with_checkpoints(p, c.learner(), seed, c.checkpoint_every)?.run_to_horizon()
        }
        match self {
            Self::Robot(p) => go(p, config, seed),
            Self::Synthetic(p) => go(p, config, seed),
        }
    }
}

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub slots: u64,
    pub r_virtual: f64,
    pub r_actual: f64,
    pub constraint_virtual: Vec<f64>,
    pub constraint_actual: Vec<f64>,
    /// Smallest per-state slack of the global-balance bound.
    pub balance_slack_min: f64,
    pub mean_path_length: f64,
    pub redirect_activations: u64,
    pub redirect_slots: u64,
    pub final_queue_norm: f64,
}

impl RunSummary {
    pub fn from_outcome(seed: u64, out: &RunOutcome) -> Self {
        let r = &out.report;
        Self {
            seed,
            slots: r.slots,
            r_virtual: r.r_virtual,
            r_actual: r.r_actual,
            constraint_virtual: r.constraint_virtual.clone(),
            constraint_actual: r.constraint_actual.clone(),
            balance_slack_min: out
                .balance_slack
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
            mean_path_length: r.mean_path_length,
            redirect_activations: out.redirect_activations,
            redirect_slots: r.redirect_slots,
            final_queue_norm: out.final_queues.norm(),
        }
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub summary: RunSummary,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const OCCUPANCY_FILE: &str = "occupancy.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub outcome: RunOutcome,
    pub summary: RunSummary,
    pub occupancy: serde_json::Value,
    pub manifest: Manifest,
}

/// Executes one learner run and, when `output_dir` is set, writes the
/// metrics CSV, the occupancy JSON and the manifest there.
pub fn run(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let env = config.environment()?;
    let outcome = env.simulate(config, config.seed)?;
    let summary = RunSummary::from_outcome(config.seed, &outcome);
    let occupancy = occupancy_json(
        |i| env.state_label(i),
        &outcome.report.occupancy_virtual,
        &outcome.report.occupancy_actual,
    );
    let manifest = Manifest {
        version: VERSION.to_string(),
        config: config.clone(),
        seed: config.seed,
        summary: summary.clone(),
    };
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir)?;
        outcome
            .metrics
            .write_csv(BufWriter::new(fs::File::create(dir.join(METRICS_FILE))?))?;
        fs::write(
            dir.join(OCCUPANCY_FILE),
            serde_json::to_string_pretty(&occupancy)?,
        )?;
        fs::write(
            dir.join(MANIFEST_FILE),
            serde_json::to_string_pretty(&manifest)?,
        )?;
    }
    Ok(RunArtifacts {
        outcome,
        summary,
        occupancy,
        manifest,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "V")]
    V,
    #[serde(rename = "u")]
    U,
}

impl SweepParameter {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(Self::Alpha),
            "V" | "v" => Ok(Self::V),
            "u" => Ok(Self::U),
            _ => Err(Error::Config(format!(
                "cannot sweep over {s:?}; use alpha, V or u"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::V => "V",
            Self::U => "u",
        }
    }

    fn code(self) -> u64 {
        match self {
            Self::Alpha => 1,
            Self::V => 2,
            Self::U => 3,
        }
    }

    /// Copy of `config` with this parameter set to `value`.
    pub fn apply(self, config: &ExperimentConfig, value: f64) -> ExperimentConfig {
        let mut c = config.clone();
        match self {
            Self::Alpha => c.alpha = value,
            Self::V => c.v = value,
            Self::U => c.u = value,
        }
        c
    }
}

/// Seed of replicate `rep` at sweep point `value`.
pub fn point_seed(master: u64, parameter: SweepParameter, value: f64, rep: usize) -> u64 {
    derive_seed(master, &[parameter.code(), value.to_bits(), rep as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub value: f64,
    pub replicate: usize,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// `"virtual"` or `"actual"`.
    pub system: String,
    pub runs: usize,
    pub reward_mean: f64,
    pub reward_stderr: f64,
    pub constraint_mean: Vec<f64>,
    pub constraint_stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub runs: Vec<SweepRun>,
    pub rows: Vec<SweepRow>,
}

/// Sample mean and standard error (0 for a single sample).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every `(value, replicate)` pair, `workers` at a time, and
/// aggregates per value and system in input order.
pub fn sweep(
    config: &ExperimentConfig,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let points: Vec<(f64, usize)> = values
        .iter()
        .flat_map(|&v| (0..config.seeds_per_point).map(move |r| (v, r)))
        .collect();
    for &v in values {
        parameter.apply(config, v).validate()?;
    }
    let work = |&(value, rep): &(f64, usize)| -> Result<SweepRun> {
        let mut c = parameter.apply(config, value);
        c.seed = point_seed(config.seed, parameter, value, rep);
        c.output_dir = None;
        let env = c.environment()?;
        let out = env.simulate(&c, c.seed)?;
        Ok(SweepRun {
            value,
            replicate: rep,
            summary: RunSummary::from_outcome(c.seed, &out),
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let runs: Vec<SweepRun> =
        pool.install(|| points.par_iter().map(work).collect::<Result<_>>())?;

    let mut rows = Vec::new();
    for &value in values {
        let at: Vec<&SweepRun> = runs
            .iter()
            .filter(|r| r.value.to_bits() == value.to_bits())
            .collect();
        for system in ["virtual", "actual"] {
            let pick = |r: &RunSummary| match system {
                "virtual" => (r.r_virtual, r.constraint_virtual.clone()),
                _ => (r.r_actual, r.constraint_actual.clone()),
            };
            let picked: Vec<(f64, Vec<f64>)> = at.iter().map(|r| pick(&r.summary)).collect();
            let rewards: Vec<f64> = picked.iter().map(|p| p.0).collect();
            let (reward_mean, reward_stderr) = mean_stderr(&rewards);
            let k = picked[0].1.len();
            let (constraint_mean, constraint_stderr) = (0..k)
                .map(|l| mean_stderr(&picked.iter().map(|p| p.1[l]).collect::<Vec<_>>()))
                .unzip();
            rows.push(SweepRow {
                value,
                system: system.to_string(),
                runs: at.len(),
                reward_mean,
                reward_stderr,
                constraint_mean,
                constraint_stderr,
            });
        }
    }
    Ok(SweepResult {
        parameter,
        runs,
        rows,
    })
}

impl SweepResult {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let k = self.rows.first().map_or(0, |r| r.constraint_mean.len());
        write!(
            out,
            "{},system,runs,reward_mean,reward_stderr",
            self.parameter.name()
        )?;
        for l in 1..=k {
            write!(out, ",constraint_{l}_mean,constraint_{l}_stderr")?;
        }
        writeln!(out)?;
        for r in &self.rows {
            write!(
                out,
                "{},{},{},{},{}",
                r.value, r.system, r.runs, r.reward_mean, r.reward_stderr
            )?;
            for (m, s) in r.constraint_mean.iter().zip(&r.constraint_stderr) {
                write!(out, ",{m},{s}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            t: 2_000,
            checkpoint_every: 500,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn defaults_match_headline_configuration() {
        let c = ExperimentConfig::default();
        assert_eq!((c.u, c.v, c.alpha, c.t), (4.0, 5.0, 1000.0, 1_000_000));
        assert_eq!((c.gamma, c.theta_high, c.theta_low), (1e-3, 0.1, 1e-5));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_invalid_configs() {
        let bad = [
            ExperimentConfig { t: 0, ..small() },
            ExperimentConfig { v: 0.0, ..small() },
            ExperimentConfig {
                alpha: -1.0,
                ..small()
            },
            ExperimentConfig { u: 25.0, ..small() },
            ExperimentConfig {
                seeds_per_point: 0,
                ..small()
            },
            ExperimentConfig {
                env: EnvKind::Synthetic,
                ..small()
            },
            ExperimentConfig {
                theta_high: 0.0,
                redirect: true,
                ..small()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn config_json_uses_flag_names() {
        let c = ExperimentConfig::from_json(r#"{"V": 2, "T": 10, "alpha": 3}"#).unwrap();
        assert_eq!((c.v, c.t, c.alpha), (2.0, 10, 3.0));
    }

    #[test]
    fn sweep_matches_independent_runs() {
        let c = ExperimentConfig {
            seeds_per_point: 2,
            workers: 2,
            ..small()
        };
        let res = sweep(&c, SweepParameter::Alpha, &[50.0, 1000.0]).unwrap();
        assert_eq!(res.rows.len(), 4);
        for r in &res.runs {
            let mut single = SweepParameter::Alpha.apply(&c, r.value);
            single.seed = point_seed(c.seed, SweepParameter::Alpha, r.value, r.replicate);
            let alone = run(&single).unwrap().summary;
            assert_eq!(alone, r.summary);
        }
        let a = &res.rows[1];
        let xs: Vec<f64> = res.runs[..2].iter().map(|r| r.summary.r_actual).collect();
        assert_eq!(a.reward_mean, mean_stderr(&xs).0);
        assert!(sweep(&c, SweepParameter::U, &[]).is_err());
    }

    #[test]
    fn mean_stderr_known_values() {
        assert_eq!(mean_stderr(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
