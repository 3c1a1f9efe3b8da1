//! Quasi-reversibility solve for the coefficient fields `v_1 .. v_N`.

pub mod lineup;
pub mod solve;
pub mod system;

pub use lineup::{lineup, unlineup, LineupIndexer};
pub use solve::{default_max_iter, solve, solve_direct, solve_normal, SolveReport, SolverKind};
pub use system::{Mode, QrmSystem, RowLayout};
