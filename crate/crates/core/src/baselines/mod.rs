//! Reference policies the learner is compared against.

pub mod heuristics;
pub mod jvalue;

pub use heuristics::{
    best_heuristic_reward, heuristic_simulate, heuristic_value, Heuristic, HeuristicConfig,
    HeuristicValue, SimulatedHeuristic,
};
pub use jvalue::{j_step, run_j_baseline, JConfig, JOutcome, JState};
