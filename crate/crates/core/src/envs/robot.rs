//! Object-collecting robot on the walled grid.
//!
//! The basic state is `(cell, hold)`: 20 cells times a hold flag gives 40
//! basic states. Each slot an object may sit in every cell except home; the
//! robot sees all values, may collect the object in its own cell when its
//! hands are free, and moves one step or stays. Arriving at home deposits
//! whatever it holds. The objective cost is minus the collected value.
//!
//! With the power constraint enabled there is one extra cost: power spent
//! minus the budget of 0.9 per slot. Staying costs 0, moving with empty
//! hands costs 1, moving while carrying costs 2. Collecting and moving in
//! the same slot counts as carrying.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::grid::{Grid, Move, CELLS, HOME_CELL};
use crate::error::{Error, Result};
use crate::problem::Problem;

pub const NUM_STATES: usize = 2 * CELLS;
pub const POWER_BUDGET: f64 = 0.9;
/// Largest possible object value, and so the cost bound `c_max`.
pub const ROBOT_C_MAX: f64 = 20.0;
pub const HIGH_VALUE_CELL: usize = 9;
pub const TUNABLE_CELL: usize = 16;

/// Object values `W_1..W_20`, indexed by `cell - 1`.
pub type Rewards = [f64; CELLS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    /// Upper end of the uniform value law in cell 16.
    pub u: f64,
    pub power_constraint: bool,
    /// Replaces the default wall set when present.
    pub walls: Option<Vec<(usize, usize)>>,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            u: 4.0,
            power_constraint: false,
            walls: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RobotState {
    pub cell: usize,
    pub hold: bool,
}

impl RobotState {
    pub fn new(cell: usize, hold: bool) -> Self {
        Self { cell, hold }
    }

    pub fn index(self) -> usize {
        (self.cell - 1) + if self.hold { CELLS } else { 0 }
    }

    pub fn from_index(i: usize) -> Self {
        Self {
            cell: i % CELLS + 1,
            hold: i >= CELLS,
        }
    }
}

impl fmt::Display for RobotState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.cell, u8::from(self.hold))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RobotAction {
    pub collect: bool,
    pub mv: Move,
}

impl RobotAction {
    pub fn new(collect: bool, mv: Move) -> Self {
        Self { collect, mv }
    }
}

#[derive(Debug, Clone)]
pub struct RobotEnv {
    grid: Grid,
    u: f64,
    power_constraint: bool,
    /// `moves[cell][m]` is the cell reached by `Move::ALL[m]`, if legal.
    moves: Vec<[Option<usize>; 5]>,
    escort: Vec<Option<Move>>,
}

impl RobotEnv {
    pub fn new(config: &RobotConfig) -> Result<Self> {
        if !(config.u >= 0.0 && config.u.is_finite()) {
            return Err(Error::Config(format!(
                "u must be a nonnegative number, got {}",
                config.u
            )));
        }
        if config.u > ROBOT_C_MAX {
            return Err(Error::Config(format!(
                "u = {} exceeds c_max = {ROBOT_C_MAX}",
                config.u
            )));
        }
        let grid = match &config.walls {
            Some(w) => Grid::new(w)?,
            None => Grid::default(),
        };
        if !grid.is_connected() {
            return Err(Error::Config("wall set disconnects the grid".into()));
        }
        let mut moves = vec![[None; 5]; CELLS + 1];
        let mut escort = vec![None; CELLS + 1];
        for cell in 1..=CELLS {
            for (m, mv) in Move::ALL.iter().enumerate() {
                moves[cell][m] = grid.step(cell, *mv);
            }
            escort[cell] = grid.move_toward(cell, HOME_CELL);
        }
        Ok(Self {
            grid,
            u: config.u,
            power_constraint: config.power_constraint,
            moves,
            escort,
        })
    }

    pub fn with_u(u: f64) -> Result<Self> {
        Self::new(&RobotConfig {
            u,
            ..Default::default()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn power_constraint(&self) -> bool {
        self.power_constraint
    }

    /// Legal actions in `state` given object values `w`: Collect variants
    /// (only with free hands and an object present) then NoCollect
    /// variants, each over Stay, N, S, W, E minus blocked moves.
    pub fn menu(&self, state: RobotState, w: &Rewards, out: &mut Vec<RobotAction>) {
        let legal = &self.moves[state.cell];
        if !state.hold && w[state.cell - 1] > 0.0 {
            for (m, mv) in Move::ALL.iter().enumerate() {
                if legal[m].is_some() {
                    out.push(RobotAction::new(true, *mv));
                }
            }
        }
        for (m, mv) in Move::ALL.iter().enumerate() {
            if legal[m].is_some() {
                out.push(RobotAction::new(false, *mv));
            }
        }
    }

    fn target(&self, cell: usize, mv: Move) -> Option<usize> {
        self.moves[cell][mv as usize]
    }

    /// Deterministic next state. Collecting sets the hold flag; reaching the
    /// home cell clears it.
    pub fn transition(&self, state: RobotState, action: RobotAction) -> Result<RobotState> {
        if !(1..=CELLS).contains(&state.cell) {
            return Err(Error::Model(format!("cell {} outside 1..=20", state.cell)));
        }
        if action.collect && state.hold {
            return Err(Error::Model(format!(
                "cannot collect while holding in {state}"
            )));
        }
        let cell = self
            .target(state.cell, action.mv)
            .ok_or_else(|| Error::Model(format!("move {:?} is blocked from {state}", action.mv)))?;
        Ok(self.next_state(state, action, cell))
    }

    fn next_state(&self, state: RobotState, action: RobotAction, cell: usize) -> RobotState {
        let hold = cell != HOME_CELL && (state.hold || action.collect);
        RobotState { cell, hold }
    }

    /// Power spent by `action` in `state`.
    pub fn power(state: RobotState, action: RobotAction) -> f64 {
        match action.mv {
            Move::Stay => 0.0,
            _ if state.hold || action.collect => 2.0,
            _ => 1.0,
        }
    }

    /// `(c_0, c_1)` where `c_1` (power minus budget) exists only with the
    /// power constraint enabled.
    pub fn costs(&self, state: RobotState, action: RobotAction, w: &Rewards) -> (f64, Option<f64>) {
        let c0 = if action.collect {
            -w[state.cell - 1]
        } else {
            0.0
        };
        let c1 = self
            .power_constraint
            .then(|| Self::power(state, action) - POWER_BUDGET);
        (c0, c1)
    }

    /// Upper end of the uniform value law of `cell`.
    pub fn value_range(&self, cell: usize) -> f64 {
        match cell {
            HOME_CELL => 0.0,
            HIGH_VALUE_CELL => 20.0,
            TUNABLE_CELL => self.u,
            _ => 1.0,
        }
    }

    /// Draws object values: no object at home; elsewhere an object appears
    /// with probability 1/2 with a value uniform on the cell's range.
    ///
    /// One uniform `x` per cell: `x < 1/2` means no object, otherwise the
    /// value is `(2x - 1) * range`.
    pub fn sample_rewards<R: Rng + ?Sized>(&self, rng: &mut R) -> Rewards {
        let mut w = [0.0; CELLS];
        for (idx, slot) in w.iter_mut().enumerate().skip(1) {
            let x: f64 = rng.random();
            if x >= 0.5 {
                *slot = (2.0 * x - 1.0) * self.value_range(idx + 1);
            }
        }
        w
    }

    /// Renders per-state fractions as two 4x5 tables (empty hands, then
    /// holding), three decimals each.
    pub fn format_occupancy(fractions: &[f64]) -> String {
        let mut out = String::new();
        for (hold, title) in [(false, "Not holding"), (true, "Holding")] {
            out.push_str(title);
            out.push('\n');
            for row in 0..4 {
                let cells: Vec<String> = (1..=5)
                    .map(|c| {
                        let cell = row * 5 + c;
                        format!("{:.3}", fractions[RobotState::new(cell, hold).index()])
                    })
                    .collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

impl Problem for RobotEnv {
    type Side = Rewards;
    type Action = RobotAction;

    fn num_states(&self) -> usize {
        NUM_STATES
    }

    fn num_constraints(&self) -> usize {
        usize::from(self.power_constraint)
    }

    fn cost_bound(&self) -> f64 {
        ROBOT_C_MAX
    }

    fn initial_state(&self) -> usize {
        RobotState::new(HOME_CELL, false).index()
    }

    fn sample_side<R: Rng + ?Sized>(&self, rng: &mut R) -> Rewards {
        self.sample_rewards(rng)
    }

    fn actions(&self, i: usize, w: &Rewards, out: &mut Vec<RobotAction>) {
        self.menu(RobotState::from_index(i), w, out)
    }

    fn costs(&self, i: usize, w: &Rewards, a: RobotAction, out: &mut [f64]) {
        let (c0, c1) = self.costs(RobotState::from_index(i), a, w);
        out[0] = c0;
        if let Some(c1) = c1 {
            out[1] = c1;
        }
    }

    fn transitions(&self, i: usize, _w: &Rewards, a: RobotAction, out: &mut Vec<(usize, f64)>) {
        let state = RobotState::from_index(i);
        let cell = self
            .target(state.cell, a.mv)
            .expect("layer 2 only proposes menu actions");
        out.push((self.next_state(state, a, cell).index(), 1.0));
    }

    fn home_state(&self) -> Option<usize> {
        Some(RobotState::new(HOME_CELL, false).index())
    }

    fn escort_action(&self, i: usize, _w: &Rewards) -> Option<RobotAction> {
        let state = RobotState::from_index(i);
        match self.escort[state.cell] {
            Some(mv) => Some(RobotAction::new(false, mv)),
            // (1,1) cannot be reached, but staying there deposits.
            None if state.hold => Some(RobotAction::new(false, Move::Stay)),
            None => None,
        }
    }

    fn state_label(&self, i: usize) -> String {
        RobotState::from_index(i).to_string()
    }
}
