//! Global multigrid cycling over the partitioned hierarchy.
//!
//! The smoother is a hybrid Gauss-Seidel: lexicographic Gauss-Seidel inside
//! each rank's box over the nodes that rank authoritatively owns, with ghost
//! values frozen at sweep start, followed by a ghost exchange. Across
//! interfaces the coupling is therefore Jacobi-like; on a single-rank layout
//! the scheme degenerates to classical lexicographic Gauss-Seidel.

use serde::{Deserialize, Serialize};

use crate::checkpoint::CheckpointStore;
use crate::dense::DenseSolver;
use crate::grid::{self, BoxGrid, Field};
use crate::metrics::{ConvergenceLog, FaultEvent, StopReason};
use crate::partition::Partition;
use crate::resilience::{run_recovery, FaultScenario, RecoveryStrategy};
use crate::state::{DistField, SimState};
use crate::work::WorkCounter;
use crate::{Error, Result};

/// Coarse-grid visitation schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleType {
    V,
    W,
    /// One descending chain with a V-leg launched at every level on the way
    /// up, so level `L - j` is visited `j + 1` times.
    F,
}

impl std::fmt::Display for CycleType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CycleType::V => "V",
            CycleType::W => "W",
            CycleType::F => "F",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CoarsePolicy {
    /// LU factorization of the coarsest interior matrix, cached across cycles.
    DenseDirect,
    /// A fixed number of Gauss-Seidel sweeps instead of an exact solve.
    SmootherSweeps(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub pre_smooth: usize,
    pub post_smooth: usize,
    pub cycle: CycleType,
    pub max_cycles: usize,
    /// Stop when the scaled residual falls to this value.
    pub stop_tol: f64,
    pub coarse_policy: CoarsePolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            pre_smooth: 3,
            post_smooth: 3,
            cycle: CycleType::V,
            max_cycles: 30,
            stop_tol: 1e-15,
            coarse_policy: CoarsePolicy::DenseDirect,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pre_smooth < 1 || self.post_smooth < 1 {
            return Err(Error::Config("smoothing counts must be >= 1".into()));
        }
        if self.stop_tol.is_nan() || self.stop_tol <= 0.0 {
            return Err(Error::Config("stop tolerance must be positive".into()));
        }
        Ok(())
    }
}

pub struct Solver<'p> {
    part: &'p Partition,
    pub config: SolverConfig,
    coarse: Option<DenseSolver>,
    /// Per-level residual scratch.
    res: Vec<DistField>,
    pub work: WorkCounter,
}

impl<'p> Solver<'p> {
    pub fn new(part: &'p Partition, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let res = (0..part.num_levels).map(|l| DistField::zeros(part, l)).collect();
        let work = WorkCounter::new(part.unknowns(part.finest_level()));
        Ok(Self { part, config, coarse: None, res, work })
    }

    fn check_alive(&self, state: &SimState, op: &'static str) -> Result<()> {
        if let Some(rank) = state.alive.iter().position(|a| !a) {
            return Err(Error::DeadRank { rank, op });
        }
        Ok(())
    }

    /// `sweeps` hybrid Gauss-Seidel sweeps on one level, each followed by a
    /// ghost exchange.
    pub fn smooth(&mut self, state: &mut SimState, level: usize, sweeps: usize) -> Result<()> {
        self.check_alive(state, "smooth")?;
        let part = self.part;
        let lay = part.layout(level);
        let h2 = lay.spacing * lay.spacing;
        for _ in 0..sweeps {
            for r in 0..part.rank_count() {
                let [sx, sy, sz] = lay.boxes[r].strides();
                let rhs = &state.rhs[level].data[r];
                let u = &mut state.u[level].data[r];
                for node in &lay.owned[r] {
                    let c = node.local;
                    u[c] = (h2 * rhs[c]
                        + u[c - sx]
                        + u[c + sx]
                        + u[c - sy]
                        + u[c + sy]
                        + u[c - sz]
                        + u[c + sz])
                        / 6.0;
                }
            }
            state.u[level].exchange(part, &state.alive)?;
            self.work.sweep(lay.unknowns);
        }
        Ok(())
    }

    /// Compute `r = f - A u` on one level into the residual scratch and
    /// exchange its ghosts.
    fn residual_into(&mut self, state: &SimState, level: usize) -> Result<()> {
        self.check_alive(state, "residual")?;
        let part = self.part;
        let lay = part.layout(level);
        let inv_h2 = 1.0 / (lay.spacing * lay.spacing);
        for r in 0..part.rank_count() {
            let [sx, sy, sz] = lay.boxes[r].strides();
            let rhs = &state.rhs[level].data[r];
            let u = &state.u[level].data[r];
            let res = &mut self.res[level].data[r];
            for node in &lay.owned[r] {
                let c = node.local;
                // neighbor-difference form, same reasoning as `grid::residual`
                let uc = u[c];
                let diffs = (u[c - sx] - uc)
                    + (u[c + sx] - uc)
                    + (u[c - sy] - uc)
                    + (u[c + sy] - uc)
                    + (u[c - sz] - uc)
                    + (u[c + sz] - uc);
                res[c] = rhs[c] + diffs * inv_h2;
            }
        }
        self.res[level].exchange(part, &state.alive)?;
        self.work.stencil(lay.unknowns);
        Ok(())
    }

    /// Discrete L2 norm of the current residual on one level, summed in rank
    /// order for determinism.
    pub fn residual_norm(&mut self, state: &SimState, level: usize) -> Result<f64> {
        self.residual_into(state, level)?;
        let lay = self.part.layout(level);
        let mut sum = 0.0;
        for r in 0..self.part.rank_count() {
            let res = &self.res[level].data[r];
            let mut part_sum = 0.0;
            for node in &lay.owned[r] {
                let v = res[node.local];
                part_sum += v * v;
            }
            sum += part_sum;
        }
        Ok((lay.spacing.powi(3) * sum).sqrt())
    }

    /// Full-weighting restriction of the level residual into the next coarser
    /// right-hand side.
    fn restrict_to(&mut self, state: &mut SimState, level: usize) -> Result<()> {
        assert!(level >= 1, "cannot restrict below the coarsest level");
        let part = self.part;
        let fine = part.layout(level);
        let coarse = part.layout(level - 1);
        const W1D: [f64; 3] = [0.25, 0.5, 0.25];
        for r in 0..part.rank_count() {
            let fb = fine.boxes[r];
            let res = &self.res[level].data[r];
            let rhs_c = &mut state.rhs[level - 1].data[r];
            for node in &coarse.owned[r] {
                let f0 = [2 * node.ijk[0], 2 * node.ijk[1], 2 * node.ijk[2]];
                let mut acc = 0.0;
                for (dk, wk) in (-1i64..=1).zip(W1D) {
                    for (dj, wj) in (-1i64..=1).zip(W1D) {
                        for (di, wi) in (-1i64..=1).zip(W1D) {
                            let p = [
                                (f0[0] as i64 + di) as usize,
                                (f0[1] as i64 + dj) as usize,
                                (f0[2] as i64 + dk) as usize,
                            ];
                            acc += wi * wj * wk * res[fb.local_idx(p)];
                        }
                    }
                }
                rhs_c[node.local] = acc;
            }
        }
        state.rhs[level - 1].exchange(part, &state.alive)?;
        self.work.transfer(coarse.unknowns);
        Ok(())
    }

    /// Zero the correction stored on a level (all ranks, halos included).
    fn zero_correction(&self, state: &mut SimState, level: usize) {
        for data in &mut state.u[level].data {
            data.fill(0.0);
        }
    }

    /// Add the trilinear interpolant of the coarser-level correction.
    fn prolong_correct(&mut self, state: &mut SimState, level: usize) -> Result<()> {
        let part = self.part;
        let fine = part.layout(level);
        let coarse = part.layout(level - 1);
        for r in 0..part.rank_count() {
            let cb = coarse.boxes[r];
            let [csx, csy, csz] = cb.strides();
            let (u_f, u_c) = {
                // distinct levels, disjoint borrows
                let (lo, hi) = state.u.split_at_mut(level);
                (&mut hi[0].data[r], &lo[level - 1].data[r])
            };
            for node in &fine.owned[r] {
                let [i, j, k] = node.ijk;
                let base = cb.local_idx([i / 2, j / 2, k / 2]);
                let mut acc = 0.0;
                let mut cnt = 0.0;
                for dk in 0..=(k % 2) {
                    for dj in 0..=(j % 2) {
                        for di in 0..=(i % 2) {
                            acc += u_c[base + di * csx + dj * csy + dk * csz];
                            cnt += 1.0;
                        }
                    }
                }
                u_f[node.local] += acc / cnt;
            }
        }
        state.u[level].exchange(part, &state.alive)?;
        self.work.transfer(fine.unknowns);
        Ok(())
    }

    /// Solve the coarsest-level system under the configured policy.
    pub fn coarse_solve(&mut self, state: &mut SimState) -> Result<()> {
        self.check_alive(state, "coarse_solve")?;
        match self.config.coarse_policy {
            CoarsePolicy::SmootherSweeps(count) => self.smooth(state, 0, count),
            CoarsePolicy::DenseDirect => {
                let part = self.part;
                let lay = part.layout(0);
                if self.coarse.is_none() {
                    self.coarse = Some(DenseSolver::new(BoxGrid::unit_cube(lay.cells)));
                }
                let f = state.rhs[0].assemble(part, &state.alive);
                let bc = Field::zeros(BoxGrid::unit_cube(lay.cells));
                let sol = self.coarse.as_ref().unwrap().solve(&f, &bc);
                state.u[0].distribute(part, &sol);
                self.work.direct_solve(lay.unknowns);
                Ok(())
            }
        }
    }

    /// One multigrid cycle rooted at `level`. Level 0 degenerates to the
    /// coarse solve.
    pub fn cycle_at(&mut self, state: &mut SimState, level: usize, ty: CycleType) -> Result<()> {
        if level == 0 {
            return self.coarse_solve(state);
        }
        self.smooth(state, level, self.config.pre_smooth)?;
        self.residual_into(state, level)?;
        self.restrict_to(state, level)?;
        self.zero_correction(state, level - 1);
        match ty {
            CycleType::V => self.cycle_at(state, level - 1, CycleType::V)?,
            CycleType::W => {
                self.cycle_at(state, level - 1, CycleType::W)?;
                self.cycle_at(state, level - 1, CycleType::W)?;
            }
            CycleType::F => {
                self.cycle_at(state, level - 1, CycleType::F)?;
                self.cycle_at(state, level - 1, CycleType::V)?;
            }
        }
        self.prolong_correct(state, level)?;
        self.smooth(state, level, self.config.post_smooth)
    }

    /// Residual norm with the victim's interior already lost: assembled with
    /// zeros in the dead region, measured against the zero right-hand side.
    fn erased_residual_norm(&self, state: &SimState) -> f64 {
        let level = self.part.finest_level();
        let u = state.u[level].assemble(self.part, &state.alive);
        let f = Field::zeros(u.grid);
        grid::norm(&grid::residual(&f, &u))
    }

    /// Run the outer iteration: cycles with per-cycle residual logging,
    /// optional per-cycle checkpointing, and optional fault injection with a
    /// recovery strategy.
    pub fn solve(
        &mut self,
        state: &mut SimState,
        fault: Option<&FaultScenario>,
        recovery: Option<&RecoveryStrategy>,
        mut checkpoints: Option<&mut CheckpointStore>,
    ) -> Result<ConvergenceLog> {
        let finest = self.part.finest_level();
        if let Some(sc) = fault {
            sc.validate(self.part)?;
        }
        let r0 = self.residual_norm(state, finest)?;
        if r0 == 0.0 {
            return Err(Error::Config("initial residual is zero; nothing to solve".into()));
        }
        let mut scaled = vec![1.0];
        let mut work_per_cycle = Vec::new();
        let mut fault_event: Option<FaultEvent> = None;
        let mut stop_reason = StopReason::MaxCycles;

        for cycle in 1..=self.config.max_cycles {
            let work_before = self.work.total;
            self.cycle_at(state, finest, self.config.cycle)?;
            let r = self.residual_norm(state, finest)? / r0;
            scaled.push(r);
            work_per_cycle.push(self.work.total - work_before);

            if let Some(store) = checkpoints.as_deref_mut() {
                store.write(self.part, state, cycle)?;
            }
            if r <= self.config.stop_tol {
                stop_reason = StopReason::Converged;
                break;
            }
            if let Some(sc) = fault {
                if sc.fault_after_cycle == cycle {
                    let default_strategy = RecoveryStrategy::none();
                    let strategy = recovery.unwrap_or(&default_strategy);
                    state.erase_rank(self.part, sc.victim)?;
                    let after_fault = self.erased_residual_norm(state) / r0;
                    let report = run_recovery(
                        self.part,
                        state,
                        sc,
                        strategy,
                        &self.config,
                        checkpoints.as_deref(),
                    )?;
                    let after_recovery = self.residual_norm(state, finest)? / r0;
                    fault_event = Some(FaultEvent {
                        cycle,
                        victim: sc.victim,
                        strategy: strategy.label(),
                        local_iterations: strategy.iterations,
                        scaled_before: r,
                        scaled_after_fault: after_fault,
                        scaled_after_recovery: after_recovery,
                        recovery_work: report.work_units,
                        recovery_time: report.modeled_time,
                    });
                }
            }
        }

        Ok(ConvergenceLog {
            scaled_residuals: scaled,
            initial_residual: r0,
            fault: fault_event,
            stop_reason,
            work_per_cycle: work_per_cycle.clone(),
            total_work: work_per_cycle.iter().sum(),
        })
    }
}
