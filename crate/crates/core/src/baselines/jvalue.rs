//! A value-function learner that drives the actual system directly.
//!
//! After seeing `W(t)` it picks, in every state `i`, the menu action that
//! maximizes `-c_{i,0}(W(t), a) + rho * sum_j p_{i,j}(W(t), a) J_j(t-1)`,
//! then blends the maximized values into `J` with step `eta`. It ignores
//! cost constraints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::CompensatedSum;
use crate::problem::Problem;
use crate::rng::RngStreams;
use crate::simplex::sample_sparse;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JConfig {
    /// Discount `rho` in `(0, 1)`.
    pub rho: f64,
    /// Averaging step `eta` in `(0, 1]`.
    pub eta: f64,
    pub horizon: u64,
}

impl JConfig {
    pub fn new(horizon: u64) -> Self {
        Self {
            rho: 0.999,
            eta: 1e-3,
            horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!(
                "rho must lie in (0,1), got {}",
                self.rho
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!(
                "eta must lie in (0,1], got {}",
                self.eta
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon T must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JState {
    pub j: Vec<f64>,
    pub rho: f64,
    pub eta: f64,
}

impl JState {
    pub fn new(n: usize, rho: f64, eta: f64) -> Self {
        Self {
            j: vec![0.0; n],
            rho,
            eta,
        }
    }
}

/// One update of `J` under side information `w`. Writes the maximizing
/// action of every state into `actions` (ties go to the earliest menu
/// entry).
pub fn j_step<P: Problem>(
    state: &mut JState,
    problem: &P,
    w: &P::Side,
    actions: &mut Vec<P::Action>,
) -> Result<()> {
    let n = problem.num_states();
    let mut menu = Vec::new();
    let mut costs = vec![0.0; problem.num_constraints() + 1];
    let mut row = Vec::new();
    let mut values = vec![0.0; n];
    actions.clear();
    for (i, value) in values.iter_mut().enumerate() {
        menu.clear();
        problem.actions(i, w, &mut menu);
        let mut best: Option<(P::Action, f64)> = None;
        for &a in &menu {
            problem.costs(i, w, a, &mut costs);
            row.clear();
            problem.transitions(i, w, a, &mut row);
            let future: f64 = row.iter().map(|&(j, p)| p * state.j[j]).sum();
            let score = -costs[0] + state.rho * future;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((a, score));
            }
        }
        let (a, score) =
            best.ok_or_else(|| Error::Model(format!("empty action menu in state {i}")))?;
        actions.push(a);
        *value = score;
    }
    for (j, v) in state.j.iter_mut().zip(&values) {
        *j = (1.0 - state.eta) * *j + state.eta * v;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JOutcome {
    pub slots: u64,
    /// Time-average of `-c_0` on the actual system.
    pub reward: f64,
    pub occupancy: Vec<f64>,
    pub final_j: Vec<f64>,
}

/// Runs the value-function learner on the actual system, using the same
/// seeded streams for `W(t)` and transitions as the main learner.
pub fn run_j_baseline<P: Problem>(problem: &P, config: &JConfig, seed: u64) -> Result<JOutcome> {
    config.validate()?;
    let n = problem.num_states();
    let mut state = JState::new(n, config.rho, config.eta);
    let mut rng = RngStreams::new(seed);
    let mut s = problem.initial_state();
    let mut actions = Vec::with_capacity(n);
    let mut costs = vec![0.0; problem.num_constraints() + 1];
    let mut row = Vec::new();
    let mut reward = CompensatedSum::default();
    let mut visits = vec![0u64; n];
    for _ in 0..config.horizon {
        let w = problem.sample_side(rng.side());
        rng.control_uniform();
        j_step(&mut state, problem, &w, &mut actions)?;
        let a = actions[s];
        problem.costs(s, &w, a, &mut costs);
        reward.add(-costs[0]);
        row.clear();
        problem.transitions(s, &w, a, &mut row);
        visits[s] += 1;
        s = sample_sparse(&row, rng.nature_uniform());
    }
    let t = config.horizon as f64;
    Ok(JOutcome {
        slots: config.horizon,
        reward: reward.value() / t,
        occupancy: visits.iter().map(|&c| c as f64 / t).collect(),
        final_j: state.j,
    })
}
