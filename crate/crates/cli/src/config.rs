//! JSON run configuration.

use std::path::Path;

use faultmg::solver::{CoarsePolicy, CycleType, SolverConfig};
use serde::{Deserialize, Serialize};

fn default_smooth() -> usize {
    3
}

fn default_cycle() -> CycleType {
    CycleType::V
}

fn default_stop_tol() -> f64 {
    1e-15
}

fn default_max_cycles() -> usize {
    30
}

fn default_fault_cycles() -> Vec<usize> {
    vec![5, 7, 11]
}

fn default_speedup() -> f64 {
    1.0
}

fn default_iterations() -> RecoveryIterations {
    RecoveryIterations { cycles: vec![1, 2, 3], pcg: 10, smooth: 10 }
}

/// Iteration counts of the local recovery strategies in the suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryIterations {
    /// Local V-cycle counts to compare (W and F always run once).
    pub cycles: Vec<usize>,
    pub pcg: usize,
    pub smooth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Cells per axis of the coarsest grid.
    pub base_cells: usize,
    /// Number of uniform refinements above the coarsest grid.
    pub refinements: usize,
    /// Rank boxes per axis.
    pub ranks: [usize; 3],
    #[serde(default = "default_smooth")]
    pub pre_smooth: usize,
    #[serde(default = "default_smooth")]
    pub post_smooth: usize,
    #[serde(default = "default_cycle")]
    pub cycle: CycleType,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default = "default_max_cycles")]
    pub max_cycles: usize,
    /// Cycle counts after which a fault is injected, one study per entry.
    #[serde(default = "default_fault_cycles")]
    pub fault_cycles: Vec<usize>,
    /// Rank erased by the fault.
    pub victim: usize,
    /// Speedup factor applied to every recovery's modeled time.
    #[serde(default = "default_speedup")]
    pub speedup: f64,
    #[serde(default = "default_iterations")]
    pub recovery_iterations: RecoveryIterations,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.base_cells < 2 {
            return Err(format!("base_cells must be >= 2, got {}", self.base_cells));
        }
        if self.refinements < 1 {
            return Err("refinements must be >= 1".into());
        }
        for (axis, &c) in ["x", "y", "z"].iter().zip(&self.ranks) {
            if c < 1 {
                return Err(format!("ranks.{axis} must be >= 1"));
            }
            if c > self.base_cells {
                return Err(format!(
                    "ranks.{axis} = {c} exceeds the {} coarse cells along that axis",
                    self.base_cells
                ));
            }
        }
        let rank_count = self.ranks.iter().product::<usize>();
        if rank_count < 2 {
            return Err("at least 2 ranks are needed for fault simulation".into());
        }
        if self.victim >= rank_count {
            return Err(format!("victim {} out of range for {rank_count} ranks", self.victim));
        }
        if self.pre_smooth < 1 || self.post_smooth < 1 {
            return Err("smoothing counts must be >= 1".into());
        }
        if self.stop_tol.is_nan() || self.stop_tol <= 0.0 {
            return Err("stop_tol must be positive".into());
        }
        if self.max_cycles < 1 {
            return Err("max_cycles must be >= 1".into());
        }
        if self.fault_cycles.iter().any(|&f| f < 1) {
            return Err("fault_cycles entries must be >= 1".into());
        }
        if self.speedup.is_nan() || self.speedup < 1.0 {
            return Err(format!("speedup must be >= 1, got {}", self.speedup));
        }
        if self.recovery_iterations.cycles.is_empty() {
            return Err("recovery_iterations.cycles must not be empty".into());
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            pre_smooth: self.pre_smooth,
            post_smooth: self.post_smooth,
            cycle: self.cycle,
            max_cycles: self.max_cycles,
            stop_tol: self.stop_tol,
            coarse_policy: CoarsePolicy::DenseDirect,
        }
    }
}
