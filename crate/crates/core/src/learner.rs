//! The layered drift-plus-penalty learner and its coupled actual system.
//!
//! Each slot the learner
//!
//! 1. picks the virtual state distribution `pi(t)` from slot `t-1`
//!    information only (layer 1, a closed-form exponentiated update);
//! 2. observes `W(t)` and picks a contingency action `A_i(t)` for every basic
//!    state by a max-weight rule (layer 2);
//! 3. updates the virtual queues `Q` (global balance) and `Z` (cost
//!    constraints) with `pi(t)` and the slot `t-1` matrices;
//! 4. applies `A_{S(t)}(t)` on the actual system, unless redirect mode is
//!    escorting it home.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrices::SlotMatrices;
use crate::metrics::{Report, RunMetrics};
use crate::problem::Problem;
use crate::redirect::{RedirectConfig, RedirectState};
use crate::rng::RngStreams;
use crate::simplex::{l1_distance, sample_sparse, BeliefVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Penalty weight `V`.
    pub v: f64,
    /// Proximity weight `alpha` on `D(pi(t); pi(t-1))`.
    pub alpha: f64,
    pub horizon: u64,
    pub redirect: Option<RedirectConfig>,
}

impl LearnerConfig {
    pub fn new(v: f64, alpha: f64, horizon: u64) -> Self {
        Self {
            v,
            alpha,
            horizon,
            redirect: None,
        }
    }

    pub fn with_redirect(mut self, redirect: RedirectConfig) -> Self {
        self.redirect = Some(redirect);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::Config(format!("V must be positive, got {}", self.v)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon T must be at least 1".into()));
        }
        if let Some(r) = &self.redirect {
            r.validate()?;
        }
        Ok(())
    }
}

/// Virtual queues `Q` (one per basic state) and `Z` (one per constraint).
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueues {
    pub q: Vec<f64>,
    pub z: Vec<f64>,
}

impl VirtualQueues {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            q: vec![0.0; n],
            z: vec![0.0; k],
        }
    }

    /// `||J|| = ||(Q; Z)||_2`.
    pub fn norm(&self) -> f64 {
        self.q
            .iter()
            .chain(&self.z)
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `Q_j += pi^T Y y_j` and `Z_l = max(Z_l + pi^T G g_l, 0)` using the
    /// matrices of the previous slot.
    pub fn update(&mut self, belief: &[f64], previous: &SlotMatrices, scratch: &mut Vec<f64>) {
        let n = self.q.len();
        scratch.resize(n.max(self.z.len()), 0.0);
        previous.pi_y(belief, &mut scratch[..n]);
        for (q, d) in self.q.iter_mut().zip(&scratch[..n]) {
            *q += d;
        }
        let k = self.z.len();
        if k > 0 {
            previous.pi_g(belief, &mut scratch[..k]);
            for (z, d) in self.z.iter_mut().zip(&scratch[..k]) {
                *z = (*z + d).max(0.0);
            }
        }
    }
}

/// Learner state at the start of slot `t`: `pi(t-1)`, `Q(t)`, `Z(t)` and
/// the slot `t-1` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub belief: BeliefVector,
    pub queues: VirtualQueues,
    pub cached: SlotMatrices,
    pub slot: u64,
}

impl LearnerState {
    pub fn new(n: usize, k: usize, c_max: f64) -> Self {
        Self {
            belief: BeliefVector::uniform(n),
            queues: VirtualQueues::new(n, k),
            cached: SlotMatrices::initial(n, k, c_max),
            slot: 0,
        }
    }

    pub fn for_problem<P: Problem>(problem: &P) -> Self {
        Self::new(
            problem.num_states(),
            problem.num_constraints(),
            problem.cost_bound(),
        )
    }
}

/// Layer-1 weights `M_i(t) = y_i^T (V G0(t-1) + Y(t-1) Q(t) + G(t-1) Z(t))`.
pub fn layer1_scores(state: &LearnerState, v: f64) -> Vec<f64> {
    let n = state.cached.num_states();
    let mut yq = vec![0.0; n];
    state.cached.y_times(&state.queues.q, &mut yq);
    let mut gz = vec![0.0; n];
    state.cached.g_times(&state.queues.z, &mut gz);
    state
        .cached
        .g0()
        .iter()
        .zip(yq.iter().zip(&gz))
        .map(|(g0, (yq, gz))| v * g0 + yq + gz)
        .collect()
}

/// Layer 1: `pi_i(t) ∝ pi_i(t-1) exp(-M_i(t) / alpha)`.
///
/// Reads nothing from slot `t`.
pub fn layer1_update(state: &LearnerState, v: f64, alpha: f64) -> Result<BeliefVector> {
    let scores = layer1_scores(state, v);
    if let Some(i) = scores.iter().position(|m| !m.is_finite()) {
        return Err(Error::Numeric {
            slot: state.slot,
            detail: format!("layer-1 weight M_{i} = {}", scores[i]),
        });
    }
    state
        .belief
        .exponentiated_update(&scores, alpha)
        .map_err(|e| Error::Numeric {
            slot: state.slot,
            detail: e.to_string(),
        })
}

/// Reusable buffers for layer 2.
#[derive(Debug, Default)]
pub struct Layer2Scratch<A> {
    menu: Vec<A>,
    costs: Vec<f64>,
    row: Vec<(usize, f64)>,
}

impl<A> Layer2Scratch<A> {
    pub fn new() -> Self {
        Self {
            menu: Vec::new(),
            costs: Vec::new(),
            row: Vec::new(),
        }
    }
}

/// Layer 2 for one basic state: the menu action minimizing
/// `V c_{i,0}(w,a) + sum_l Z_l c_{i,l}(w,a) - sum_j Q_j p_{i,j}(w,a)`.
/// Ties go to the earliest menu entry.
pub fn layer2_select<P: Problem>(
    problem: &P,
    i: usize,
    w: &P::Side,
    queues: &VirtualQueues,
    v: f64,
) -> Result<P::Action> {
    layer2_select_with(problem, i, w, queues, v, &mut Layer2Scratch::new())
}

pub fn layer2_select_with<P: Problem>(
    problem: &P,
    i: usize,
    w: &P::Side,
    queues: &VirtualQueues,
    v: f64,
    scratch: &mut Layer2Scratch<P::Action>,
) -> Result<P::Action> {
    scratch.menu.clear();
    problem.actions(i, w, &mut scratch.menu);
    scratch.costs.resize(queues.z.len() + 1, 0.0);
    let mut best: Option<(f64, P::Action)> = None;
    for &a in &scratch.menu {
        problem.costs(i, w, a, &mut scratch.costs);
        scratch.row.clear();
        problem.transitions(i, w, a, &mut scratch.row);
        let score = v * scratch.costs[0]
            + queues
                .z
                .iter()
                .zip(&scratch.costs[1..])
                .map(|(z, c)| z * c)
                .sum::<f64>()
            - scratch
                .row
                .iter()
                .map(|&(j, p)| queues.q[j] * p)
                .sum::<f64>();
        if best.is_none_or(|(b, _)| score < b) {
            best = Some((score, a));
        }
    }
    best.map(|(_, a)| a)
        .ok_or_else(|| Error::Model(format!("empty action menu in state {i}")))
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord<S, A> {
    pub slot: u64,
    /// `W(t)`; `None` only before the first step.
    pub side: Option<S>,
    /// `U(t)`. Drawn every slot; the layer-2 rule is deterministic and does
    /// not consume it.
    pub control_draw: f64,
    /// `V(t)`, consumed by the actual-system transition.
    pub nature_draw: f64,
    /// `pi(t)`.
    pub belief: Vec<f64>,
    /// Contingency actions `A_i(t)` for every basic state.
    pub actions: Vec<A>,
    /// `pi(t)^T G0(t)` followed by `pi(t)^T G(t) g_l`.
    pub virtual_costs: Vec<f64>,
    pub actual_state: usize,
    pub actual_action: Option<A>,
    /// `c_{S(t),l}(W(t), action)` for `l = 0..=k`.
    pub actual_costs: Vec<f64>,
    pub next_state: usize,
    pub redirect_active: bool,
}

/// Final results of a run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Report,
    pub metrics: RunMetrics,
    /// Per-state slack of the time-averaged global-balance bound; every
    /// entry is nonnegative up to rounding.
    pub balance_slack: Vec<f64>,
    pub final_queues: VirtualQueues,
    pub redirect_activations: u64,
}

/// Co-simulation of the virtual and actual systems.
pub struct Simulation<'a, P: Problem> {
    problem: &'a P,
    config: LearnerConfig,
    state: LearnerState,
    current: SlotMatrices,
    rng: RngStreams,
    actual: usize,
    redirect: Option<RedirectState>,
    metrics: RunMetrics,
    record: SlotRecord<P::Side, P::Action>,
    scratch: Layer2Scratch<P::Action>,
    costs: Vec<f64>,
    queue_scratch: Vec<f64>,
    balance: Vec<f64>,
    row: Vec<(usize, f64)>,
}

impl<'a, P: Problem> Simulation<'a, P> {
    pub fn new(problem: &'a P, config: LearnerConfig, seed: u64) -> Result<Self> {
        Self::with_checkpoints(problem, config, seed, 0)
    }

    /// Like [`Simulation::new`], recording a metrics checkpoint every
    /// `checkpoint_every` slots (0 disables them; the last slot is always
    /// checkpointed by [`Simulation::finish`]).
    pub fn with_checkpoints(
        problem: &'a P,
        config: LearnerConfig,
        seed: u64,
        checkpoint_every: u64,
    ) -> Result<Self> {
        config.validate()?;
        let n = problem.num_states();
        let k = problem.num_constraints();
        if n == 0 {
            return Err(Error::Model("problem has no basic states".into()));
        }
        if !(problem.cost_bound() > 0.0) {
            return Err(Error::Model("c_max must be positive".into()));
        }
        let start = problem.initial_state();
        if start >= n {
            return Err(Error::Model(format!("initial state {start} out of range")));
        }
        let redirect = match config.redirect {
            Some(rc) => {
                let home = problem.home_state().ok_or_else(|| {
                    Error::Config("redirect mode needs a problem with a home state".into())
                })?;
                Some(RedirectState::new(rc, n, home))
            }
            None => None,
        };
        Ok(Self {
            problem,
            config,
            state: LearnerState::new(n, k, problem.cost_bound()),
            current: SlotMatrices::initial(n, k, problem.cost_bound()),
            rng: RngStreams::new(seed),
            actual: start,
            redirect,
            metrics: RunMetrics::new(n, k, checkpoint_every),
            record: SlotRecord {
                slot: 0,
                side: None,
                control_draw: 0.0,
                nature_draw: 0.0,
                belief: vec![0.0; n],
                actions: Vec::with_capacity(n),
                virtual_costs: vec![0.0; k + 1],
                actual_state: start,
                actual_action: None,
                actual_costs: vec![0.0; k + 1],
                next_state: start,
                redirect_active: false,
            },
            scratch: Layer2Scratch::new(),
            costs: vec![0.0; k + 1],
            queue_scratch: Vec::new(),
            balance: vec![0.0; n],
            row: Vec::new(),
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn actual_state(&self) -> usize {
        self.actual
    }

    pub fn redirect(&self) -> Option<&RedirectState> {
        self.redirect.as_ref()
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    /// Runs one slot and returns its record.
    pub fn step(&mut self) -> Result<&SlotRecord<P::Side, P::Action>> {
        let problem = self.problem;
        let v = self.config.v;
        let t = self.state.slot;
        let n = problem.num_states();

        // Layer 1 sees only slot t-1 information.
        let belief = layer1_update(&self.state, v, self.config.alpha)?;
        let pi = belief.probs();

        let w = problem.sample_side(self.rng.side());
        let u = self.rng.control_uniform();

        let rec = &mut self.record;
        rec.actions.clear();
        for i in 0..n {
            let a = layer2_select_with(problem, i, &w, &self.state.queues, v, &mut self.scratch)?;
            rec.actions.push(a);
        }
        self.current
            .fill(problem, &w, &rec.actions, &mut self.costs);

        self.state
            .queues
            .update(pi, &self.state.cached, &mut self.queue_scratch);
        if let Some(bad) = self
            .state
            .queues
            .q
            .iter()
            .chain(&self.state.queues.z)
            .find(|x| !x.is_finite())
        {
            return Err(Error::Numeric {
                slot: t,
                detail: format!("virtual queue became {bad}"),
            });
        }

        rec.virtual_costs[0] = self.current.pi_g0(pi);
        self.current.pi_g(pi, &mut rec.virtual_costs[1..]);

        // Actual system.
        let s = self.actual;
        let redirecting = self.redirect.as_ref().is_some_and(|r| r.is_active());
        let action = if redirecting {
            problem.escort_action(s, &w).ok_or_else(|| {
                Error::Model(format!("no escort action from state {s} in redirect mode"))
            })?
        } else {
            rec.actions[s]
        };
        problem.costs(s, &w, action, &mut rec.actual_costs);
        self.row.clear();
        problem.transitions(s, &w, action, &mut self.row);
        let r = self.rng.nature_uniform();
        let next = sample_sparse(&self.row, r);

        if let Some(red) = self.redirect.as_mut() {
            red.observe(s, pi, next);
        }

        self.current.pi_y(pi, &mut self.balance);
        let path_step = if t == 0 {
            0.0
        } else {
            l1_distance(pi, self.state.belief.probs())
        };
        self.metrics.record(
            pi,
            &rec.virtual_costs,
            s,
            &rec.actual_costs,
            &self.balance,
            path_step,
            redirecting,
        );
        self.metrics.maybe_checkpoint(self.state.queues.norm());

        rec.slot = t;
        rec.side = Some(w);
        rec.control_draw = u;
        rec.nature_draw = r;
        rec.belief.copy_from_slice(pi);
        rec.actual_state = s;
        rec.actual_action = Some(action);
        rec.next_state = next;
        rec.redirect_active = redirecting;

        std::mem::swap(&mut self.state.cached, &mut self.current);
        self.state.belief = belief;
        self.state.slot += 1;
        self.actual = next;
        Ok(&self.record)
    }

    /// Runs `slots` more slots.
    pub fn run(&mut self, slots: u64) -> Result<()> {
        for _ in 0..slots {
            self.step()?;
        }
        Ok(())
    }

    /// Runs up to the configured horizon and summarizes.
    pub fn run_to_horizon(mut self) -> Result<RunOutcome> {
        let remaining = self.config.horizon.saturating_sub(self.state.slot);
        self.run(remaining)?;
        self.finish()
    }

    /// Summarizes the slots run so far.
    pub fn finish(mut self) -> Result<RunOutcome> {
        let report = self.metrics.finalize()?;
        // pi(T) and Q(T+1) depend only on slots < T.
        let next = layer1_update(&self.state, self.config.v, self.config.alpha)?;
        let mut lookahead = self.state.queues.clone();
        lookahead.update(next.probs(), &self.state.cached, &mut self.queue_scratch);
        let final_step = l1_distance(next.probs(), self.state.belief.probs());
        let balance_slack = self.metrics.balance_slack(&lookahead.q, final_step)?;
        self.metrics.push_checkpoint(self.state.queues.norm());
        Ok(RunOutcome {
            report,
            metrics: self.metrics,
            balance_slack,
            final_queues: self.state.queues,
            redirect_activations: self.redirect.map_or(0, |r| r.activations()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::grid::Move;
    use crate::envs::robot::{RobotAction, RobotEnv, RobotState};
    use crate::envs::synthetic::{single_state, toggle};
    use rand::Rng;

    #[test]
    fn first_belief_is_uniform_and_first_update_leaves_queues_at_zero() {
        let env = RobotEnv::with_u(4.0).unwrap();
        let mut sim = Simulation::new(&env, LearnerConfig::new(5.0, 1000.0, 10), 1).unwrap();
        let rec = sim.step().unwrap();
        assert!(rec.belief.iter().all(|&p| (p - 1.0 / 40.0).abs() < 1e-15));
        assert!(sim.state().queues.q.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn equal_scores_keep_the_belief() {
        let mut st = LearnerState::new(3, 0, 1.0);
        st.belief = BeliefVector::from_probs(&[0.2, 0.3, 0.5]).unwrap();
        let next = layer1_update(&st, 2.0, 7.0).unwrap();
        for (a, b) in next.probs().iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn collect_wins_with_empty_queues() {
        let env = RobotEnv::with_u(4.0).unwrap();
        let mut w = [0.0; 20];
        w[11] = 5.0;
        let i = RobotState::new(12, false).index();
        let a = layer2_select(&env, i, &w, &VirtualQueues::new(40, 0), 1.0).unwrap();
        assert!(a.collect);
    }

    #[test]
    fn ties_go_to_the_first_menu_entry() {
        let inst = single_state(vec![1.0], vec![vec![0.25, 0.25, 0.25]], 1.0);
        let p = inst.build().unwrap();
        let a = layer2_select(&p, 0, &0, &VirtualQueues::new(1, 0), 3.0).unwrap();
        assert_eq!(a, 0);
        let env = RobotEnv::with_u(4.0).unwrap();
        let i = RobotState::new(20, false).index();
        let a = layer2_select(&env, i, &[0.0; 20], &VirtualQueues::new(40, 0), 1.0).unwrap();
        assert_eq!(a, RobotAction::new(false, Move::Stay));
    }

    #[test]
    fn single_state_problem_never_moves() {
        let inst = single_state(vec![0.5, 0.5], vec![vec![0.0, -1.0], vec![0.3, 0.1]], 1.0);
        let p = inst.build().unwrap();
        let mut sim = Simulation::new(&p, LearnerConfig::new(1.0, 1.0, 200), 4).unwrap();
        for _ in 0..200 {
            let rec = sim.step().unwrap();
            assert_eq!(rec.belief, vec![1.0]);
        }
        assert_eq!(sim.state().queues.q, vec![0.0]);
        let out = sim.finish().unwrap();
        assert!((out.report.r_virtual - 0.45).abs() < 0.1);
    }

    /// Straight-line rewrite of the queue recursion for the toggle instance
    /// (two states, dense arithmetic, no shared helpers).
    #[test]
    fn toggle_queues_match_reference_recursion() {
        let p = toggle().build().unwrap();
        let (v, alpha) = (2.0, 10.0);
        let mut sim = Simulation::new(&p, LearnerConfig::new(v, alpha, 100), 9).unwrap();

        let mut pi_prev = [0.5, 0.5];
        let mut q = [0.0, 0.0];
        let mut g0_prev = [-1.0, -1.0];
        let mut p_prev = [[1.0, 0.0], [0.0, 1.0]];
        for _ in 0..100 {
            let rec = sim.step().unwrap().clone();
            let w = rec.side.unwrap();
            let mut m = [0.0; 2];
            for i in 0..2 {
                let yq = q[i] - (p_prev[i][0] * q[0] + p_prev[i][1] * q[1]);
                m[i] = v * g0_prev[i] + yq;
            }
            let raw = [
                pi_prev[0] * (-m[0] / alpha).exp(),
                pi_prev[1] * (-m[1] / alpha).exp(),
            ];
            let pi = [raw[0] / (raw[0] + raw[1]), raw[1] / (raw[0] + raw[1])];
            for i in 0..2 {
                assert!((pi[i] - rec.belief[i]).abs() < 1e-12);
            }
            for j in 0..2 {
                let inflow = pi[0] * p_prev[0][j] + pi[1] * p_prev[1][j];
                q[j] += pi[j] - inflow;
            }
            for j in 0..2 {
                assert!((q[j] - sim.state().queues.q[j]).abs() < 1e-12);
            }
            let mut p_now = [[0.0; 2]; 2];
            let mut g0_now = [0.0; 2];
            for i in 0..2 {
                let a = rec.actions[i];
                let stay = if i == 0 { -(w as f64) } else { 0.0 };
                let go = 0.0;
                let cost = |a: usize| if a == 0 { stay } else { go };
                let qi = q_before(&q, &pi, &p_prev);
                let best = if v * stay - qi[i] <= v * go - qi[1 - i] {
                    0
                } else {
                    1
                };
                assert_eq!(a, best);
                g0_now[i] = cost(a);
                p_now[i][if a == 0 { i } else { 1 - i }] = 1.0;
            }
            pi_prev = pi;
            g0_prev = g0_now;
            p_prev = p_now;
        }

        // Layer 2 ran before this slot's queue update.
        fn q_before(q: &[f64; 2], pi: &[f64; 2], p: &[[f64; 2]; 2]) -> [f64; 2] {
            let mut out = *q;
            for j in 0..2 {
                out[j] -= pi[j] - (pi[0] * p[0][j] + pi[1] * p[1][j]);
            }
            out
        }
    }

    #[test]
    fn same_seed_reproduces_every_slot() {
        let env = RobotEnv::with_u(6.0).unwrap();
        let cfg = LearnerConfig::new(5.0, 1000.0, 500).with_redirect(RedirectConfig::default());
        let mut a = Simulation::new(&env, cfg, 42).unwrap();
        let mut b = Simulation::new(&env, cfg, 42).unwrap();
        for _ in 0..500 {
            assert_eq!(a.step().unwrap(), b.step().unwrap());
        }
        let mut c = Simulation::new(&env, cfg, 43).unwrap();
        let differs = (0..50).any(|_| a.step().unwrap().side != c.step().unwrap().side);
        assert!(differs);
    }

    /// A problem that records every side-information draw and refuses to
    /// evaluate costs or transitions at a draw it has not produced yet.
    struct Guarded {
        inner: crate::envs::synthetic::FiniteProblem,
        drawn: std::cell::Cell<u64>,
    }

    impl Problem for Guarded {
        type Side = (u64, usize);
        type Action = usize;
        fn num_states(&self) -> usize {
            self.inner.num_states()
        }
        fn num_constraints(&self) -> usize {
            0
        }
        fn cost_bound(&self) -> f64 {
            self.inner.cost_bound()
        }
        fn initial_state(&self) -> usize {
            0
        }
        fn sample_side<R: Rng + ?Sized>(&self, rng: &mut R) -> (u64, usize) {
            self.drawn.set(self.drawn.get() + 1);
            (self.drawn.get(), self.inner.sample_side(rng))
        }
        fn actions(&self, i: usize, w: &(u64, usize), out: &mut Vec<usize>) {
            self.inner.actions(i, &w.1, out)
        }
        fn costs(&self, i: usize, w: &(u64, usize), a: usize, out: &mut [f64]) {
            assert_eq!(w.0, self.drawn.get(), "stale side information");
            self.inner.costs(i, &w.1, a, out)
        }
        fn transitions(&self, i: usize, w: &(u64, usize), a: usize, out: &mut Vec<(usize, f64)>) {
            assert_eq!(w.0, self.drawn.get(), "stale side information");
            self.inner.transitions(i, &w.1, a, out)
        }
    }

    #[test]
    fn belief_is_fixed_before_side_information_is_drawn() {
        let g = Guarded {
            inner: toggle().build().unwrap(),
            drawn: std::cell::Cell::new(0),
        };
        let cfg = LearnerConfig::new(2.0, 10.0, 300);
        let mut sim = Simulation::new(&g, cfg, 5).unwrap();
        for _ in 0..300 {
            // pi(t) as computed before W(t) exists.
            let expected = layer1_update(sim.state(), cfg.v, cfg.alpha).unwrap();
            let before = g.drawn.get();
            let rec = sim.step().unwrap();
            assert_eq!(g.drawn.get(), before + 1);
            assert_eq!(rec.belief, expected.probs());
        }
    }

    struct Broken;

    impl Problem for Broken {
        type Side = ();
        type Action = ();
        fn num_states(&self) -> usize {
            2
        }
        fn num_constraints(&self) -> usize {
            0
        }
        fn cost_bound(&self) -> f64 {
            1.0
        }
        fn initial_state(&self) -> usize {
            0
        }
        fn sample_side<R: Rng + ?Sized>(&self, _rng: &mut R) {}
        fn actions(&self, _i: usize, _w: &(), out: &mut Vec<()>) {
            out.push(());
        }
        fn costs(&self, _i: usize, _w: &(), _a: (), out: &mut [f64]) {
            out[0] = f64::NAN;
        }
        fn transitions(&self, i: usize, _w: &(), _a: (), out: &mut Vec<(usize, f64)>) {
            out.push((i, 1.0));
        }
    }

    #[test]
    fn non_finite_costs_surface_as_numeric_errors() {
        let mut sim = Simulation::new(&Broken, LearnerConfig::new(1.0, 1.0, 5), 0).unwrap();
        sim.step().unwrap();
        match sim.step() {
            Err(Error::Numeric { slot, .. }) => assert_eq!(slot, 1),
            other => panic!("expected a numeric error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let p = toggle().build().unwrap();
        for cfg in [
            LearnerConfig::new(0.0, 1.0, 1),
            LearnerConfig::new(1.0, 0.0, 1),
            LearnerConfig::new(1.0, 1.0, 0),
            LearnerConfig::new(f64::NAN, 1.0, 1),
        ] {
            assert!(matches!(Simulation::new(&p, cfg, 0), Err(Error::Config(_))));
        }
        let no_home = single_state(vec![1.0], vec![vec![0.0]], 1.0)
            .build()
            .unwrap();
        let cfg = LearnerConfig::new(1.0, 1.0, 1).with_redirect(RedirectConfig::default());
        assert!(Simulation::new(&no_home, cfg, 0).is_err());
    }
}
