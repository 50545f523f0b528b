//! Frame-based threshold policies for the robot that know the reward law.
//!
//! Every heuristic repeats a frame that starts and ends at home, so its
//! long-run reward is `E[frame reward] / E[frame length]` (renewal-reward).
//!
//! * Heuristic 1: walk 3 steps to cell 16, wait there for an object worth
//!   more than `theta`, collect it and walk 3 steps home.
//! * Heuristic 2: the same with cell 9, which is 10 steps from home.
//! * Heuristic 3: visit cell 16 for a single slot and take an object worth
//!   more than `theta1` home; otherwise continue 7 steps to cell 9 and wait
//!   for an object worth more than `theta2`.
//!
//! Waiting in a cell whose value law is `Unif[0, r]` gated by a fair coin
//! takes a geometric number of slots with success probability
//! `(r - theta) / (2r)`, and the collected value averages `(theta + r) / 2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::grid::HOME_CELL;
use crate::envs::robot::{RobotAction, RobotEnv, RobotState, HIGH_VALUE_CELL, TUNABLE_CELL};
use crate::error::{Error, Result};

const HIGH_VALUE_RANGE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heuristic {
    One,
    Two,
    Three,
}

impl Heuristic {
    pub fn from_index(which: u8) -> Result<Self> {
        match which {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            _ => Err(Error::Config(format!(
                "heuristic must be 1, 2 or 3, got {which}"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Self::One => 1,
            Self::Two => 2,
            Self::Three => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub which: Heuristic,
    pub u: f64,
    /// Grid spacing as a fraction of each threshold's range.
    pub resolution: f64,
    /// Optional cap on the long-run average power.
    pub power_budget: Option<f64>,
}

impl HeuristicConfig {
    pub fn new(which: Heuristic, u: f64) -> Self {
        Self {
            which,
            u,
            resolution: 1e-4,
            power_budget: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u >= 0.0 && self.u.is_finite()) {
            return Err(Error::Config(format!(
                "u must be nonnegative, got {}",
                self.u
            )));
        }
        if !(self.resolution > 0.0 && self.resolution < 1.0) {
            return Err(Error::Config(format!(
                "resolution must lie in (0,1), got {}",
                self.resolution
            )));
        }
        Ok(())
    }
}

/// Expected reward, length and power of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameStats {
    pub reward: f64,
    pub length: f64,
    pub power: f64,
}

impl FrameStats {
    pub fn reward_rate(&self) -> f64 {
        self.reward / self.length
    }

    pub fn power_rate(&self) -> f64 {
        self.power / self.length
    }
}

/// Wait at a cell with value law `Unif[0, range]` behind a fair coin for an
/// object worth more than `theta`: (success probability per slot, mean
/// collected value).
fn wait_law(range: f64, theta: f64) -> (f64, f64) {
    ((range - theta) / (2.0 * range), (theta + range) / 2.0)
}

/// Heuristic 1 frame: 3 unloaded moves, the wait, 3 loaded moves (the
/// first taken on the collecting slot).
pub fn h1_frame(theta: f64, u: f64) -> FrameStats {
    let (p, value) = wait_law(u, theta);
    FrameStats {
        reward: value,
        length: 5.0 + 1.0 / p,
        power: 3.0 + 2.0 * 3.0,
    }
}

/// Heuristic 2 frame: 10 steps each way around the walls.
pub fn h2_frame(theta: f64) -> FrameStats {
    let (p, value) = wait_law(HIGH_VALUE_RANGE, theta);
    FrameStats {
        reward: value,
        length: 19.0 + 1.0 / p,
        power: 10.0 + 2.0 * 10.0,
    }
}

/// Heuristic 3 frame: a 6-slot frame when the single look at cell 16
/// succeeds, else a Heuristic-2 frame routed through cell 16.
pub fn h3_frame(theta1: f64, theta2: f64, u: f64) -> FrameStats {
    let (hit, near_value) = if u > 0.0 {
        wait_law(u, theta1)
    } else {
        (0.0, 0.0)
    };
    let far = h2_frame(theta2);
    FrameStats {
        reward: hit * near_value + (1.0 - hit) * far.reward,
        length: hit * 6.0 + (1.0 - hit) * far.length,
        power: hit * (3.0 + 2.0 * 3.0) + (1.0 - hit) * far.power,
    }
}

/// Best thresholds found and the resulting long-run averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicValue {
    pub which: Heuristic,
    pub u: f64,
    pub thresholds: Vec<f64>,
    pub reward: f64,
    pub power: f64,
}

/// Maximizes `f` over the box `lo..hi` (one entry per dimension) by grid
/// search: `points` per dimension, then repeated zooms around the best
/// point. `f` returns `None` for infeasible points.
fn grid_maximize<F>(lo: &[f64], hi: &[f64], points: usize, f: F) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let dims = lo.len();
    let mut lo = lo.to_vec();
    let mut hi = hi.to_vec();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut points = points;
    for _ in 0..60 {
        let steps: Vec<f64> = (0..dims).map(|d| (hi[d] - lo[d]) / points as f64).collect();
        let mut idx = vec![0usize; dims];
        let mut x = vec![0.0; dims];
        loop {
            for d in 0..dims {
                x[d] = lo[d] + steps[d] * idx[d] as f64;
            }
            if let Some(val) = f(&x) {
                if best.as_ref().is_none_or(|(_, b)| val > *b) {
                    best = Some((x.clone(), val));
                }
            }
            let mut d = 0;
            while d < dims {
                idx[d] += 1;
                if idx[d] <= points {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == dims {
                break;
            }
        }
        let (center, _) = best.as_ref()?;
        if steps.iter().all(|&s| s < 1e-12) {
            break;
        }
        for d in 0..dims {
            let (l0, h0) = (lo[d], hi[d]);
            lo[d] = (center[d] - steps[d]).max(l0);
            hi[d] = (center[d] + steps[d]).min(h0);
        }
        points = 20;
    }
    best
}

/// Optimizes the thresholds of a heuristic over its closed-form frame
/// statistics.
pub fn heuristic_value(config: &HeuristicConfig) -> Result<HeuristicValue> {
    config.validate()?;
    let u = config.u;
    let budget = config.power_budget;
    let feasible = |s: FrameStats| budget.is_none_or(|b| s.power_rate() <= b + 1e-12);
    let first_points = (1.0 / config.resolution).round() as usize;
    let upper = |range: f64| range * (1.0 - config.resolution);
    let frame = |x: &[f64]| match config.which {
        Heuristic::One => h1_frame(x[0], u),
        Heuristic::Two => h2_frame(x[0]),
        Heuristic::Three => h3_frame(x[0], x[1], u),
    };
    let objective = |x: &[f64]| {
        let s = frame(x);
        feasible(s).then(|| s.reward_rate())
    };
    let found = match config.which {
        Heuristic::One if u == 0.0 => None,
        Heuristic::One => grid_maximize(&[0.0], &[upper(u)], first_points, objective),
        Heuristic::Two => {
            grid_maximize(&[0.0], &[upper(HIGH_VALUE_RANGE)], first_points, objective)
        }
        Heuristic::Three => {
            let pts = first_points.min(400);
            grid_maximize(&[0.0, 0.0], &[u, upper(HIGH_VALUE_RANGE)], pts, objective)
        }
    };
    let (thresholds, reward) = match found {
        Some(best) => best,
        None if config.which == Heuristic::One && u == 0.0 => (vec![0.0], 0.0),
        None => {
            return Err(Error::Config(
                "no threshold satisfies the power budget".into(),
            ))
        }
    };
    let power = if config.which == Heuristic::One && u == 0.0 {
        0.0
    } else {
        frame(&thresholds).power_rate()
    };
    Ok(HeuristicValue {
        which: config.which,
        u,
        thresholds,
        reward,
        power,
    })
}

/// `max(H1(u), H2, H3(u))`, the best reward among the three heuristics.
pub fn best_heuristic_reward(u: f64) -> Result<f64> {
    [Heuristic::One, Heuristic::Two, Heuristic::Three]
        .into_iter()
        .map(|h| heuristic_value(&HeuristicConfig::new(h, u)).map(|v| v.reward))
        .try_fold(f64::NEG_INFINITY, |m, r| r.map(|r| m.max(r)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stage {
    Go(usize),
    Wait(usize, f64),
    Probe(usize, f64),
}

/// Time averages from a literal run of a heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedHeuristic {
    pub slots: u64,
    pub reward: f64,
    pub power: f64,
    pub frames: u64,
}

/// Runs a heuristic on the robot for `slots` slots with the given
/// thresholds and returns its time-average reward and power.
pub fn heuristic_simulate<R: Rng + ?Sized>(
    which: Heuristic,
    thresholds: &[f64],
    env: &RobotEnv,
    rng: &mut R,
    slots: u64,
) -> Result<SimulatedHeuristic> {
    let need = if which == Heuristic::Three { 2 } else { 1 };
    if thresholds.len() != need {
        return Err(Error::Config(format!(
            "heuristic {} takes {need} threshold(s)",
            which.index()
        )));
    }
    if slots == 0 {
        return Err(Error::EmptyRun);
    }
    let stages = match which {
        Heuristic::One => vec![
            Stage::Go(TUNABLE_CELL),
            Stage::Wait(TUNABLE_CELL, thresholds[0]),
        ],
        Heuristic::Two => vec![
            Stage::Go(HIGH_VALUE_CELL),
            Stage::Wait(HIGH_VALUE_CELL, thresholds[0]),
        ],
        Heuristic::Three => vec![
            Stage::Go(TUNABLE_CELL),
            Stage::Probe(TUNABLE_CELL, thresholds[0]),
            Stage::Go(HIGH_VALUE_CELL),
            Stage::Wait(HIGH_VALUE_CELL, thresholds[1]),
        ],
    };
    let grid = env.grid();
    let toward = |from: usize, to: usize| {
        grid.move_toward(from, to)
            .ok_or_else(|| Error::Model(format!("no path from cell {from} to {to}")))
    };
    let mut state = RobotState::new(HOME_CELL, false);
    let mut stage = 0;
    let mut reward = 0.0;
    let mut power = 0.0;
    let mut frames = 0;
    for _ in 0..slots {
        let w = env.sample_rewards(rng);
        let action = if state.hold {
            RobotAction::new(false, toward(state.cell, HOME_CELL)?)
        } else {
            loop {
                match stages[stage] {
                    Stage::Go(c) if state.cell == c => stage += 1,
                    Stage::Go(c) => break RobotAction::new(false, toward(state.cell, c)?),
                    Stage::Wait(c, theta) => {
                        break if w[c - 1] > theta {
                            RobotAction::new(true, toward(c, HOME_CELL)?)
                        } else {
                            RobotAction::new(false, crate::envs::grid::Move::Stay)
                        };
                    }
                    Stage::Probe(c, theta) => {
                        if w[c - 1] > theta {
                            break RobotAction::new(true, toward(c, HOME_CELL)?);
                        }
                        stage += 1;
                    }
                }
            }
        };
        let (c0, _) = env.costs(state, action, &w);
        reward -= c0;
        power += RobotEnv::power(state, action);
        let next = env.transition(state, action)?;
        if action.collect {
            frames += 1;
        }
        if next.cell == HOME_CELL && state.cell != HOME_CELL {
            stage = 0;
        }
        state = next;
    }
    let t = slots as f64;
    Ok(SimulatedHeuristic {
        slots,
        reward: reward / t,
        power: power / t,
        frames,
    })
}
