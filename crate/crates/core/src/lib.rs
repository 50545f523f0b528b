//! Learning to control opportunistic Markov decision problems.
//!
//! An opportunistic MDP observes i.i.d. side information `W(t)` with an
//! unknown law before acting each slot. The learner keeps a virtual system
//! whose state is a point `pi(t)` on the probability simplex and enforces
//! time-averaged global balance and cost constraints with virtual queues;
//! an actual system follows the contingency actions it produces.
//!
//! ```
//! use opportunistic_mdp::envs::synthetic::toggle;
//! use opportunistic_mdp::{LearnerConfig, Simulation};
//!
//! let problem = toggle().build()?;
//! let outcome = Simulation::new(&problem, LearnerConfig::new(2.0, 100.0, 5_000), 7)?
//!     .run_to_horizon()?;
//! assert!(outcome.report.r_virtual > 0.3);
//! # Ok::<(), opportunistic_mdp::Error>(())
//! ```

// Negated comparisons reject NaN; index loops mirror the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod diagnostics;
pub mod envs;
pub mod error;
pub mod experiment;
pub mod learner;
pub mod matrices;
pub mod metrics;
pub mod oracle;
pub mod problem;
pub mod redirect;
pub mod rng;
pub mod simplex;

pub use error::{Error, Result};
pub use learner::{
    layer1_update, layer2_select, LearnerConfig, LearnerState, RunOutcome, Simulation, SlotRecord,
    VirtualQueues,
};
pub use metrics::{Report, RunMetrics};
pub use problem::Problem;
pub use redirect::{RedirectConfig, RedirectState};
pub use rng::RngStreams;
pub use simplex::BeliefVector;

/// Runs the guide's code snippets as doc-tests.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/model.md")]
    pub struct Model;
    #[doc = include_str!("../../../book/src/algorithm.md")]
    pub struct Algorithm;
    #[doc = include_str!("../../../book/src/redirect.md")]
    pub struct Redirect;
    #[doc = include_str!("../../../book/src/robot.md")]
    pub struct Robot;
    #[doc = include_str!("../../../book/src/baselines.md")]
    pub struct Baselines;
    #[doc = include_str!("../../../book/src/oracle.md")]
    pub struct Oracle;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
}
