//! The full measurement suite: baseline, unrecovered and recovered fault
//! runs, the advantage table, and all output files.

use std::path::{Path, PathBuf};

use faultmg::checkpoint::CheckpointStore;
use faultmg::grid::{self, BoundaryData};
use faultmg::metrics::{
    self, AdvantageTable, ConsistencyReport, ConvergenceLog, PairedRuns,
};
use faultmg::partition::{self, Partition};
use faultmg::resilience::{FaultScenario, RecoveryKind, RecoveryStrategy};
use faultmg::solver::{CycleType, Solver, SolverConfig};
use faultmg::state::SimState;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Serialize)]
struct StrategySummary {
    strategy: String,
    fault_cycle: usize,
    advantage: f64,
    eval_cycle: usize,
    recovery_work: f64,
    recovery_time: f64,
    consistency: ConsistencyReport,
}

#[derive(Serialize)]
struct Summary {
    rate: f64,
    baseline_cycles: usize,
    baseline_final_residual: f64,
    strategies: Vec<StrategySummary>,
}

pub struct SuiteOutput {
    pub out_dir: PathBuf,
    pub table: AdvantageTable,
}

fn slug(label: &str) -> String {
    label.replace(' ', "_")
}

fn run_one(
    part: &Partition,
    cfg: SolverConfig,
    fault: Option<&FaultScenario>,
    strategy: &RecoveryStrategy,
) -> Result<ConvergenceLog, String> {
    let mut solver = Solver::new(part, cfg).map_err(|e| e.to_string())?;
    let mut state = SimState::new(part);
    let mut store =
        (strategy.kind == RecoveryKind::Checkpoint).then(CheckpointStore::in_memory);
    solver
        .solve(&mut state, fault, Some(strategy), store.as_mut())
        .map_err(|e| e.to_string())
}

pub fn run_suite(config: &RunConfig, out_dir: &Path) -> Result<SuiteOutput, String> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| e.to_string())?;

    let hierarchy = grid::build_hierarchy(config.base_cells, config.refinements, BoundaryData::harmonic())
        .map_err(|e| e.to_string())?;
    let part = partition::build_partition(&hierarchy, config.ranks).map_err(|e| e.to_string())?;
    let solver_cfg = config.solver_config();

    let baseline = run_one(&part, solver_cfg.clone(), None, &RecoveryStrategy::none())?;
    baseline
        .write_csv(&out_dir.join("baseline.csv"))
        .map_err(|e| e.to_string())?;
    let rate = metrics::estimate_rate(&baseline).map_err(|e| e.to_string())?;

    // the unrecovered leg keeps cycling past the normal stop so the advantage
    // identity can be checked several cycles beyond the evaluation point
    let norec_cfg = SolverConfig {
        stop_tol: (solver_cfg.stop_tol / 10.0).max(f64::MIN_POSITIVE),
        max_cycles: solver_cfg.max_cycles + 10,
        ..solver_cfg.clone()
    };

    let mut strategies = vec![RecoveryStrategy::checkpoint()];
    for &c in &config.recovery_iterations.cycles {
        strategies.push(RecoveryStrategy::local_cycle(CycleType::V, c));
    }
    strategies.push(RecoveryStrategy::local_cycle(CycleType::W, 1));
    strategies.push(RecoveryStrategy::local_cycle(CycleType::F, 1));
    strategies.push(RecoveryStrategy::local_pcg(config.recovery_iterations.pcg));
    strategies.push(RecoveryStrategy::local_smooth(config.recovery_iterations.smooth));
    let strategies: Vec<RecoveryStrategy> =
        strategies.into_iter().map(|s| s.with_speedup(config.speedup)).collect();

    let mut groups = Vec::new();
    let mut summaries = Vec::new();
    for &fc in &config.fault_cycles {
        let scenario = FaultScenario { fault_after_cycle: fc, victim: config.victim };
        scenario.validate(&part).map_err(|e| e.to_string())?;
        let no_recovery =
            run_one(&part, norec_cfg.clone(), Some(&scenario), &RecoveryStrategy::none())?;
        no_recovery
            .write_csv(&out_dir.join(format!("fault{fc}_none.csv")))
            .map_err(|e| e.to_string())?;
        let eval_cycle = metrics::select_eval_cycle(&baseline, &no_recovery, fc);

        let mut recovered = Vec::new();
        for strategy in &strategies {
            let log = run_one(&part, solver_cfg.clone(), Some(&scenario), strategy)?;
            log.write_csv(&out_dir.join(format!("fault{fc}_{}.csv", slug(&strategy.label()))))
                .map_err(|e| e.to_string())?;
            let adv = metrics::cycle_advantage(&log, &no_recovery, rate, eval_cycle)
                .map_err(|e| e.to_string())?;
            let ev = log.fault.as_ref().expect("faulted run carries its event");
            summaries.push(StrategySummary {
                strategy: strategy.label(),
                fault_cycle: fc,
                advantage: adv.advantage,
                eval_cycle,
                recovery_work: ev.recovery_work,
                recovery_time: ev.recovery_time,
                consistency: metrics::consistency_check(&no_recovery, adv.advantage, rate, eval_cycle),
            });
            recovered.push(log);
        }
        groups.push(PairedRuns { fault_cycle: fc, no_recovery, recovered });
    }

    let table = metrics::advantage_table(&baseline, &groups).map_err(|e| e.to_string())?;
    let json = serde_json::to_string_pretty(&table).map_err(|e| e.to_string())?;
    std::fs::write(out_dir.join("advantage.json"), json).map_err(|e| e.to_string())?;
    std::fs::write(out_dir.join("advantage.txt"), table.render_text())
        .map_err(|e| e.to_string())?;

    let summary = Summary {
        rate,
        baseline_cycles: baseline.total_cycles(),
        baseline_final_residual: *baseline.scaled_residuals.last().unwrap(),
        strategies: summaries,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
    std::fs::write(out_dir.join("summary.json"), json).map_err(|e| e.to_string())?;

    Ok(SuiteOutput { out_dir: out_dir.to_path_buf(), table })
}
