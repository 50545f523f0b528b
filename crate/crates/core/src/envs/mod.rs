//! Concrete problems: the object-collecting robot and table-driven
//! finite instances.

pub mod grid;
pub mod robot;
pub mod synthetic;

pub use grid::{Grid, Move};
pub use robot::{RobotAction, RobotConfig, RobotEnv, RobotState};
pub use synthetic::{FiniteAction, FiniteInstance, FiniteProblem};
