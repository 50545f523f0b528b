//! Run-time consistency checks for the learner.

use crate::error::Result;
use crate::learner::{layer1_update, LearnerConfig, Simulation};
use crate::metrics::CompensatedSum;
use crate::problem::Problem;

/// Runs `slots` slots and returns `max_j |Q_j - sum_t pi(t)^T Y(t-1) y_j|`
/// at the end, with the right side accumulated independently of the
/// queue update.
pub fn telescoping_residual<P: Problem>(
    problem: &P,
    config: LearnerConfig,
    seed: u64,
    slots: u64,
) -> Result<f64> {
    let n = problem.num_states();
    let mut sim = Simulation::new(problem, config, seed)?;
    let mut sums = vec![CompensatedSum::default(); n];
    let mut flow = vec![0.0; n];
    for _ in 0..slots {
        let state = sim.state();
        let pi = layer1_update(state, config.v, config.alpha)?;
        state.cached.pi_y(pi.probs(), &mut flow);
        for (s, f) in sums.iter_mut().zip(&flow) {
            s.add(*f);
        }
        sim.step()?;
    }
    Ok(sim
        .state()
        .queues
        .q
        .iter()
        .zip(&sums)
        .map(|(q, s)| (q - s.value()).abs())
        .fold(0.0, f64::max))
}
