//! Geometric multigrid on the unit cube with a simulated domain-partitioned
//! runtime, single-rank fault injection, and local Dirichlet recovery.
//!
//! The solver runs V-, W-, or F-cycles of a correction-scheme multigrid with a
//! hybrid Gauss-Seidel smoother (lexicographic within each subdomain, frozen
//! ghost values across subdomain interfaces). The runtime is a bulk-synchronous
//! simulation of ranks: each rank owns a box of the partitioned hierarchy and
//! exchanges ghost layers at superstep barriers. A fault erases one rank's
//! interior data; recovery strategies rebuild it either from a checkpoint or by
//! solving a local Dirichlet problem on the lost box with values gathered from
//! the surviving interface replicas.
//!
//! The [`metrics`] module turns paired fault/no-fault runs into a cycle
//! advantage figure: how many extra global cycles the unrecovered run needs to
//! match the recovered run's residual.

pub mod checkpoint;
pub mod dense;
pub mod grid;
pub mod metrics;
pub mod partition;
pub mod resilience;
pub mod solver;
pub mod state;
pub mod work;

pub use grid::{build_hierarchy, BoundaryData, BoxGrid, Field, GridHierarchy, Level};
pub use metrics::{ConvergenceLog, CycleAdvantage};
pub use partition::{build_partition, NodeClass, Partition, Subdomain};
pub use resilience::{FaultScenario, RecoveryKind, RecoveryStrategy};
pub use solver::{CoarsePolicy, CycleType, Solver, SolverConfig};
pub use state::SimState;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("simulator error: {0}")]
    Simulator(String),
    #[error("dead rank {rank} touched during {op}")]
    DeadRank { rank: usize, op: &'static str },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
