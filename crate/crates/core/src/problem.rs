//! The opportunistic Markov decision problem interface.
//!
//! A problem has `n` basic states and `k` inequality constraints. Every slot
//! nature draws an i.i.d. side-information value `W(t)` whose law the
//! learner never sees. Costs `c_{i,l}(w, a)` and transition probabilities
//! `p_{i,j}(w, a)` are evaluated by the problem; the learner only touches
//! `W(t)` through them.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance for `sum_j p_{i,j}(w, a) = 1`.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// An opportunistic MDP. Basic states are indexed `0..num_states()`.
///
/// Transition rows are sparse: `transitions` writes `(j, p_{i,j})` pairs
/// for the positive entries, sorted by `j`.
pub trait Problem {
    /// Side information `W(t)`. Opaque to the learner.
    type Side: Clone + fmt::Debug + PartialEq;
    type Action: Copy + fmt::Debug + PartialEq;

    fn num_states(&self) -> usize;

    fn num_constraints(&self) -> usize;

    /// Uniform bound `c_max` on every cost magnitude.
    fn cost_bound(&self) -> f64;

    /// Starting basic state `S(0)` of the actual system.
    fn initial_state(&self) -> usize;

    fn sample_side<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Side;

    /// Writes the ordered action menu for state `i` under side info `w`.
    fn actions(&self, i: usize, w: &Self::Side, out: &mut Vec<Self::Action>);

    /// Writes `c_{i,0}, ..., c_{i,k}` into `out` (length `k + 1`).
    fn costs(&self, i: usize, w: &Self::Side, a: Self::Action, out: &mut [f64]);

    /// Writes the sparse row `p_{i,.}(w, a)` into `out`.
    fn transitions(&self, i: usize, w: &Self::Side, a: Self::Action, out: &mut Vec<(usize, f64)>);

    /// Home state used by redirect mode, if the problem defines one.
    fn home_state(&self) -> Option<usize> {
        None
    }

    /// Action that moves the actual system toward [`Problem::home_state`].
    fn escort_action(&self, _i: usize, _w: &Self::Side) -> Option<Self::Action> {
        None
    }

    fn state_label(&self, i: usize) -> String {
        i.to_string()
    }
}

/// Checks the per-evaluation contracts of a problem at `(i, w)`: nonempty
/// menu, cost magnitudes within `c_max`, and every transition row sorted,
/// in range and summing to one.
pub fn check_slot<P: Problem>(problem: &P, i: usize, w: &P::Side) -> Result<()> {
    let n = problem.num_states();
    let k = problem.num_constraints();
    let c_max = problem.cost_bound();
    let mut menu = Vec::new();
    problem.actions(i, w, &mut menu);
    if menu.is_empty() {
        return Err(Error::Model(format!("empty action menu in state {i}")));
    }
    let mut costs = vec![0.0; k + 1];
    let mut row = Vec::new();
    for &a in &menu {
        problem.costs(i, w, a, &mut costs);
        if let Some(c) = costs.iter().find(|c| !(c.abs() <= c_max)) {
            return Err(Error::Model(format!(
                "cost {c} exceeds c_max={c_max} in state {i} under {a:?}"
            )));
        }
        row.clear();
        problem.transitions(i, w, a, &mut row);
        check_row(&row, n).map_err(|e| Error::Model(format!("state {i}, action {a:?}: {e}")))?;
    }
    Ok(())
}

pub(crate) fn check_row(row: &[(usize, f64)], n: usize) -> Result<()> {
    let mut total = 0.0;
    let mut prev: Option<usize> = None;
    for &(j, p) in row {
        if j >= n {
            return Err(Error::Model(format!("transition to unknown state {j}")));
        }
        if prev.is_some_and(|q| q >= j) {
            return Err(Error::Model("transition row not sorted by state".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Model(format!(
                "transition probability {p} outside [0,1]"
            )));
        }
        prev = Some(j);
        total += p;
    }
    if (total - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::Model(format!("transition row sums to {total}")));
    }
    Ok(())
}
