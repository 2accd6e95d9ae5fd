//! Convergence logs, per-cycle rate estimation, and the cycle-advantage
//! figure computed from paired fault runs.
//!
//! The cycle advantage of a recovery strategy measures how many extra global
//! cycles an unrecovered run needs to match the recovered run's residual at a
//! common evaluation cycle, using the asymptotic per-cycle rate as the
//! conversion factor:
//!
//! `advantage = log(|r_rec| / |r_norec|) / log(rate)`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scaled residual below which a log entry counts as round-off saturated.
pub const SATURATION_FLOOR: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxCycles,
}

/// What happened at the fault cycle of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub cycle: usize,
    pub victim: usize,
    pub strategy: String,
    pub local_iterations: usize,
    /// Scaled residual logged just before the fault struck.
    pub scaled_before: f64,
    /// Scaled residual with the victim's interior lost (zeroed).
    pub scaled_after_fault: f64,
    /// Scaled residual once the recovery strategy has run.
    pub scaled_after_recovery: f64,
    /// Work units the recovery consumed.
    pub recovery_work: f64,
    /// Modeled wall time of the recovery: work / speedup.
    pub recovery_time: f64,
}

/// Per-cycle residual history of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    /// Scaled residuals by cycle; entry 0 is the initial residual (1.0).
    pub scaled_residuals: Vec<f64>,
    /// Absolute initial residual used for the scaling.
    pub initial_residual: f64,
    pub fault: Option<FaultEvent>,
    pub stop_reason: StopReason,
    pub work_per_cycle: Vec<f64>,
    pub total_work: f64,
}

impl ConvergenceLog {
    /// Number of cycles run (log length minus the initial entry).
    pub fn total_cycles(&self) -> usize {
        self.scaled_residuals.len() - 1
    }

    pub fn scaled(&self, cycle: usize) -> Option<f64> {
        self.scaled_residuals.get(cycle).copied()
    }

    /// First cycle whose scaled residual is at or below `tol`.
    pub fn cycles_to_reach(&self, tol: f64) -> Option<usize> {
        self.scaled_residuals.iter().position(|&r| r <= tol)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,scaled_residual,event\n");
        for (cycle, r) in self.scaled_residuals.iter().enumerate() {
            let event = match &self.fault {
                Some(ev) if ev.cycle == cycle => format!("fault:{}", ev.strategy),
                _ => String::new(),
            };
            out.push_str(&format!("{cycle},{r:.17e},{event}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Estimate the asymptotic per-cycle residual reduction rate from a no-fault
/// run: the geometric mean of consecutive ratios over the window from cycle 4
/// to the last cycle still above `1e-13`.
pub fn estimate_rate(log: &ConvergenceLog) -> Result<f64> {
    const WINDOW_START: usize = 4;
    let end = log
        .scaled_residuals
        .iter()
        .rposition(|&r| r > 1e-13)
        .unwrap_or(0);
    if end < WINDOW_START + 3 {
        return Err(Error::InsufficientData(format!(
            "rate window [{WINDOW_START}, {end}] has fewer than 3 ratios"
        )));
    }
    let first = log.scaled_residuals[WINDOW_START];
    let last = log.scaled_residuals[end];
    Ok((last / first).powf(1.0 / (end - WINDOW_START) as f64))
}

/// Cycle advantage of a recovered run over the paired unrecovered run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleAdvantage {
    pub advantage: f64,
    /// Per-cycle rate used for the conversion.
    pub rate: f64,
    /// Common evaluation cycle.
    pub eval_cycle: usize,
    pub strategy: String,
}

/// Compare a recovered and an unrecovered log at `eval_cycle`.
pub fn cycle_advantage(
    recovered: &ConvergenceLog,
    no_recovery: &ConvergenceLog,
    rate: f64,
    eval_cycle: usize,
) -> Result<CycleAdvantage> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Config(format!("per-cycle rate must lie in (0, 1), got {rate}")));
    }
    let fault_cycle = |log: &ConvergenceLog| log.fault.as_ref().map(|f| f.cycle);
    match (fault_cycle(recovered), fault_cycle(no_recovery)) {
        (Some(a), Some(b)) if a == b => {
            if eval_cycle < a {
                return Err(Error::Config(format!(
                    "evaluation cycle {eval_cycle} precedes the fault at cycle {a}"
                )));
            }
        }
        (a, b) => {
            return Err(Error::Config(format!(
                "paired logs must carry the same fault cycle, got {a:?} and {b:?}"
            )));
        }
    }
    let r_rec = recovered
        .scaled(eval_cycle)
        .ok_or_else(|| Error::InsufficientData(format!("recovered log lacks cycle {eval_cycle}")))?;
    let r_norec = no_recovery.scaled(eval_cycle).ok_or_else(|| {
        Error::InsufficientData(format!("no-recovery log lacks cycle {eval_cycle}"))
    })?;
    let strategy = recovered
        .fault
        .as_ref()
        .map(|f| f.strategy.clone())
        .unwrap_or_default();
    Ok(CycleAdvantage {
        advantage: (r_rec / r_norec).ln() / rate.ln(),
        rate,
        eval_cycle,
        strategy,
    })
}

/// Choose the common evaluation cycle for a fault group: the no-fault run's
/// cycle count, clipped down while the unrecovered residual there has already
/// fallen to the round-off region (<= 1e-14), and never before the fault.
pub fn select_eval_cycle(
    baseline: &ConvergenceLog,
    no_recovery: &ConvergenceLog,
    fault_cycle: usize,
) -> usize {
    let mut k = baseline.total_cycles().min(no_recovery.total_cycles());
    while k > fault_cycle {
        match no_recovery.scaled(k) {
            Some(r) if r > 1e-14 => break,
            _ => k -= 1,
        }
    }
    k.max(fault_cycle)
}

/// One row of the strategy comparison grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEntry {
    pub fault_cycle: usize,
    pub strategy: String,
    pub advantage: f64,
    pub eval_cycle: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvantageTable {
    pub rate: f64,
    pub entries: Vec<AdvantageEntry>,
}

impl AdvantageTable {
    pub fn entry(&self, fault_cycle: usize, strategy: &str) -> Option<&AdvantageEntry> {
        self.entries
            .iter()
            .find(|e| e.fault_cycle == fault_cycle && e.strategy == strategy)
    }

    /// Aligned text rendering, advantage with 3 decimals.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("per-cycle rate: {:.4}\n", self.rate));
        let mut faults: Vec<usize> = self.entries.iter().map(|e| e.fault_cycle).collect();
        faults.sort_unstable();
        faults.dedup();
        let width = self
            .entries
            .iter()
            .map(|e| e.strategy.len())
            .max()
            .unwrap_or(8)
            .max(8);
        for fc in faults {
            out.push_str(&format!("\nfault after {fc} cycles\n"));
            out.push_str(&format!("{:<width$}  advantage\n", "strategy"));
            for e in self.entries.iter().filter(|e| e.fault_cycle == fc) {
                out.push_str(&format!("{:<width$}  {:>9.3}\n", e.strategy, e.advantage));
            }
        }
        out
    }
}

/// Paired runs sharing one fault scenario.
pub struct PairedRuns {
    pub fault_cycle: usize,
    pub no_recovery: ConvergenceLog,
    pub recovered: Vec<ConvergenceLog>,
}

/// Build the full strategy-by-fault-time grid of advantages.
pub fn advantage_table(baseline: &ConvergenceLog, groups: &[PairedRuns]) -> Result<AdvantageTable> {
    let rate = estimate_rate(baseline)?;
    let mut entries = Vec::new();
    for group in groups {
        let eval_cycle = select_eval_cycle(baseline, &group.no_recovery, group.fault_cycle);
        for log in &group.recovered {
            let adv = cycle_advantage(log, &group.no_recovery, rate, eval_cycle)?;
            entries.push(AdvantageEntry {
                fault_cycle: group.fault_cycle,
                strategy: adv.strategy,
                advantage: adv.advantage,
                eval_cycle,
            });
        }
    }
    Ok(AdvantageTable { rate, entries })
}

/// Outcome of checking the defining identity of the advantage against the
/// unrecovered log's own tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConsistencyReport {
    Checked {
        /// `rate^advantage * |r_norec at eval_cycle|`.
        expected: f64,
        /// Unrecovered residual `round(advantage)` cycles past `eval_cycle`.
        observed: f64,
        ratio: f64,
        within: bool,
    },
    Skipped {
        reason: String,
    },
}

/// Verify that the unrecovered run, continued `round(advantage)` cycles past
/// the evaluation cycle, lands on the recovered residual within a factor of
/// `rate^(+/-0.75)`.
pub fn consistency_check(
    no_recovery: &ConvergenceLog,
    advantage: f64,
    rate: f64,
    eval_cycle: usize,
) -> ConsistencyReport {
    let target = eval_cycle + advantage.round().max(0.0) as usize;
    let base = match no_recovery.scaled(eval_cycle) {
        Some(v) => v,
        None => {
            return ConsistencyReport::Skipped {
                reason: format!("no-recovery log lacks cycle {eval_cycle}"),
            }
        }
    };
    let observed = match no_recovery.scaled(target) {
        Some(v) => v,
        None => {
            return ConsistencyReport::Skipped {
                reason: format!("no-recovery log too short for cycle {target}"),
            }
        }
    };
    if observed <= SATURATION_FLOOR {
        return ConsistencyReport::Skipped {
            reason: format!("tail saturated at cycle {target} ({observed:e})"),
        };
    }
    let expected = rate.powf(advantage) * base;
    let ratio = observed / expected;
    let lo = rate.powf(0.75);
    let hi = rate.powf(-0.75);
    ConsistencyReport::Checked { expected, observed, ratio, within: ratio >= lo && ratio <= hi }
}
