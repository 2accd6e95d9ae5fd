//! Fault scenarios and local recovery of a lost subdomain.
//!
//! After a rank's interior is erased, its box becomes a self-contained
//! Dirichlet problem: the box faces carry either surviving interface values
//! (gathered from the neighbors' redundant copies) or the physical boundary
//! data. The lost interior is rebuilt from a zero initial guess by the chosen
//! local solver — Gauss-Seidel sweeps, Jacobi-preconditioned CG, or multigrid
//! cycles on the box's own level stack — or restored exactly from a
//! checkpoint. Global cycling stays halted while the recovery runs; its cost
//! is modeled in work units divided by an assigned speedup factor.

use serde::{Deserialize, Serialize};

use crate::checkpoint::CheckpointStore;
use crate::dense::DenseSolver;
use crate::grid::{self, BoxGrid, Field};
use crate::partition::{NodeClass, Partition};
use crate::solver::{CycleType, SolverConfig};
use crate::state::SimState;
use crate::work::WorkCounter;
use crate::{Error, Result};

/// When the fault strikes and whom it kills.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultScenario {
    /// The fault strikes after this many completed cycles.
    pub fault_after_cycle: usize,
    pub victim: usize,
}

impl FaultScenario {
    pub fn validate(&self, part: &Partition) -> Result<()> {
        if self.fault_after_cycle < 1 {
            return Err(Error::Config("fault cycle must be >= 1".into()));
        }
        if self.victim >= part.rank_count() {
            return Err(Error::Config(format!(
                "victim rank {} out of range for {} ranks",
                self.victim,
                part.rank_count()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecoveryKind {
    /// Zero the lost interior and continue.
    None,
    /// Complete checkpointing-recovery: restore the lost interior from the
    /// per-cycle snapshot store.
    Checkpoint,
    /// Local lexicographic Gauss-Seidel sweeps.
    LocalSmooth,
    /// Local Jacobi-preconditioned conjugate gradients.
    LocalPcg,
    /// Local multigrid cycles on the box's own hierarchy.
    LocalCycle(CycleType),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryStrategy {
    pub kind: RecoveryKind,
    /// Local solver iteration count; zero for `None` and ignored by
    /// `Checkpoint`.
    pub iterations: usize,
    /// Speedup factor applied to recovery work, >= 1.
    pub speedup: f64,
}

impl RecoveryStrategy {
    pub fn none() -> Self {
        Self { kind: RecoveryKind::None, iterations: 0, speedup: 1.0 }
    }

    pub fn checkpoint() -> Self {
        Self { kind: RecoveryKind::Checkpoint, iterations: 0, speedup: 1.0 }
    }

    pub fn local_smooth(iterations: usize) -> Self {
        Self { kind: RecoveryKind::LocalSmooth, iterations, speedup: 1.0 }
    }

    pub fn local_pcg(iterations: usize) -> Self {
        Self { kind: RecoveryKind::LocalPcg, iterations, speedup: 1.0 }
    }

    pub fn local_cycle(ty: CycleType, iterations: usize) -> Self {
        Self { kind: RecoveryKind::LocalCycle(ty), iterations, speedup: 1.0 }
    }

    pub fn with_speedup(mut self, speedup: f64) -> Self {
        self.speedup = speedup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.speedup.is_nan() || self.speedup < 1.0 {
            return Err(Error::Config(format!("speedup must be >= 1, got {}", self.speedup)));
        }
        if self.kind == RecoveryKind::None && self.iterations != 0 {
            return Err(Error::Config("strategy `none` cannot carry local iterations".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.kind {
            RecoveryKind::None => "none".into(),
            RecoveryKind::Checkpoint => "ccr".into(),
            RecoveryKind::LocalSmooth => format!("smooth x{}", self.iterations),
            RecoveryKind::LocalPcg => format!("pcg x{}", self.iterations),
            RecoveryKind::LocalCycle(ty) => {
                format!("{}cycle x{}", ty.to_string().to_lowercase(), self.iterations)
            }
        }
    }
}

/// Modeled recovery time under the speedup model: work divided by speedup.
pub fn recovery_cost(strategy: &RecoveryStrategy, measured_work: f64) -> Result<f64> {
    strategy.validate()?;
    if measured_work < 0.0 {
        return Err(Error::Config("measured work must be nonnegative".into()));
    }
    Ok(measured_work / strategy.speedup)
}

/// What a recovery did and what it cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub strategy: String,
    pub iterations_run: usize,
    pub work_units: f64,
    pub modeled_time: f64,
}

/// The Dirichlet problem on a lost subdomain's box.
pub struct LocalProblem {
    /// Box grids per hierarchy level, coarsest first.
    pub grids: Vec<BoxGrid>,
    /// Global node offset of the box per level.
    pub offsets: Vec<[usize; 3]>,
    /// Finest-level field with gathered Dirichlet data on the box faces and
    /// zero interior.
    pub dirichlet: Field,
}

impl LocalProblem {
    pub fn finest(&self) -> usize {
        self.grids.len() - 1
    }
}

/// Gather the surviving face values of a dead rank's box into a local
/// Dirichlet problem. Interface nodes come from the lowest live sharer,
/// physical boundary nodes from the boundary data.
pub fn build_local_problem(part: &Partition, state: &SimState, victim: usize) -> Result<LocalProblem> {
    if state.alive[victim] {
        return Err(Error::Simulator(format!("rank {victim} is alive; nothing to recover")));
    }
    let levels = part.num_levels;
    let mut grids = Vec::with_capacity(levels);
    let mut offsets = Vec::with_capacity(levels);
    for level in 0..levels {
        let b = part.rank_box(level, victim);
        let h = part.level_spacing(level);
        let cells = [b.hi[0] - b.lo[0], b.hi[1] - b.lo[1], b.hi[2] - b.lo[2]];
        let origin = [b.lo[0] as f64 * h, b.lo[1] as f64 * h, b.lo[2] as f64 * h];
        grids.push(BoxGrid::new(cells, h, origin));
        offsets.push(b.lo);
    }

    let finest = levels - 1;
    let fine_grid = grids[finest];
    let off = offsets[finest];
    let n_global = part.level_cells(finest);
    let mut dirichlet = Field::zeros(fine_grid);
    let ln = fine_grid.nodes();
    for k in 0..ln[2] {
        for j in 0..ln[1] {
            for i in 0..ln[0] {
                if !fine_grid.is_boundary(i, j, k) {
                    continue;
                }
                let p = [off[0] + i, off[1] + j, off[2] + k];
                let v = if p.contains(&0) || p.contains(&n_global) {
                    let pos = fine_grid.position(i, j, k);
                    part.boundary.eval(pos[0], pos[1], pos[2])
                } else {
                    let live = part
                        .sharers(finest, p)
                        .into_iter()
                        .find(|&r| state.alive[r])
                        .ok_or_else(|| {
                            Error::Simulator(format!("no live replica for interface node {p:?}"))
                        })?;
                    state.u[finest].get(part, live, p)
                };
                dirichlet.set(i, j, k, v);
            }
        }
    }
    Ok(LocalProblem { grids, offsets, dirichlet })
}

/// `iterations` Gauss-Seidel sweeps on the finest local level from a zero
/// interior.
pub fn local_smooth(problem: &LocalProblem, iterations: usize, work: &mut WorkCounter) -> Field {
    let mut u = problem.dirichlet.clone();
    let f = Field::zeros(u.grid);
    for _ in 0..iterations {
        grid::gs_sweep(&mut u, &f);
        work.sweep(u.grid.interior_count());
    }
    u
}

/// Jacobi-preconditioned conjugate gradients on the finest local level from a
/// zero interior. Returns the solution and the iterations actually run
/// (breakdown stops early).
pub fn local_pcg(
    problem: &LocalProblem,
    iterations: usize,
    work: &mut WorkCounter,
) -> (Field, usize) {
    let g = problem.dirichlet.grid;
    let mut u = problem.dirichlet.clone();
    let f = Field::zeros(g);
    let inner = |a: &Field, b: &Field| -> f64 {
        let n = g.nodes();
        let mut s = 0.0;
        for k in 1..n[2] - 1 {
            for j in 1..n[1] - 1 {
                for i in 1..n[0] - 1 {
                    s += a.at(i, j, k) * b.at(i, j, k);
                }
            }
        }
        s
    };
    // Jacobi preconditioner: the stencil diagonal is constant 6/h^2.
    let m_inv = g.spacing * g.spacing / 6.0;

    let mut r = grid::residual(&f, &u);
    let mut z = r.clone();
    z.as_mut_slice().iter_mut().for_each(|v| *v *= m_inv);
    let mut p = z.clone();
    let mut rz = inner(&r, &z);
    let mut done = 0;
    for _ in 0..iterations {
        if rz.abs() == 0.0 {
            break;
        }
        let q = grid::apply_operator(&p);
        let p_ap = inner(&p, &q);
        if p_ap.abs() <= f64::MIN_POSITIVE * 16.0 {
            break;
        }
        let alpha = rz / p_ap;
        let n = g.nodes();
        for k in 1..n[2] - 1 {
            for j in 1..n[1] - 1 {
                for i in 1..n[0] - 1 {
                    u.set(i, j, k, u.at(i, j, k) + alpha * p.at(i, j, k));
                    r.set(i, j, k, r.at(i, j, k) - alpha * q.at(i, j, k));
                }
            }
        }
        let rz_new = {
            z = r.clone();
            z.as_mut_slice().iter_mut().for_each(|v| *v *= m_inv);
            inner(&r, &z)
        };
        let beta = rz_new / rz;
        for idx in 0..p.as_slice().len() {
            p.as_mut_slice()[idx] = z.as_slice()[idx] + beta * p.as_slice()[idx];
        }
        rz = rz_new;
        done += 1;
        work.cg_iteration(g.interior_count());
    }
    (u, done)
}

/// Multigrid on the local box hierarchy, same smoother and transfers as the
/// global solver, Dirichlet data fixed on the finest level.
pub struct LocalMultigrid {
    grids: Vec<BoxGrid>,
    pre_smooth: usize,
    post_smooth: usize,
    coarse: DenseSolver,
}

impl LocalMultigrid {
    pub fn new(problem: &LocalProblem, pre_smooth: usize, post_smooth: usize) -> Self {
        Self {
            grids: problem.grids.clone(),
            pre_smooth,
            post_smooth,
            coarse: DenseSolver::new(problem.grids[0]),
        }
    }

    pub fn cycle(&self, u: &mut Field, ty: CycleType, work: &mut WorkCounter) {
        let finest = self.grids.len() - 1;
        let f = Field::zeros(self.grids[finest]);
        self.cycle_at(finest, u, &f, ty, work);
    }

    fn cycle_at(&self, level: usize, u: &mut Field, f: &Field, ty: CycleType, work: &mut WorkCounter) {
        if level == 0 {
            *u = self.coarse.solve(f, &Field::zeros(self.grids[0]));
            work.direct_solve(self.grids[0].interior_count());
            return;
        }
        for _ in 0..self.pre_smooth {
            grid::gs_sweep(u, f);
            work.sweep(self.grids[level].interior_count());
        }
        let r = grid::residual(f, u);
        work.stencil(self.grids[level].interior_count());
        let rc = grid::restrict(&r);
        work.transfer(self.grids[level - 1].interior_count());
        let mut e = Field::zeros(self.grids[level - 1]);
        match ty {
            CycleType::V => self.cycle_at(level - 1, &mut e, &rc, CycleType::V, work),
            CycleType::W => {
                self.cycle_at(level - 1, &mut e, &rc, CycleType::W, work);
                self.cycle_at(level - 1, &mut e, &rc, CycleType::W, work);
            }
            CycleType::F => {
                self.cycle_at(level - 1, &mut e, &rc, CycleType::F, work);
                self.cycle_at(level - 1, &mut e, &rc, CycleType::V, work);
            }
        }
        let ef = grid::prolongate(&e);
        work.transfer(self.grids[level].interior_count());
        for idx in 0..u.as_slice().len() {
            u.as_mut_slice()[idx] += ef.as_slice()[idx];
        }
        for _ in 0..self.post_smooth {
            grid::gs_sweep(u, f);
            work.sweep(self.grids[level].interior_count());
        }
    }
}

/// `iterations` local multigrid cycles from a zero interior.
pub fn local_mg_cycle(
    problem: &LocalProblem,
    ty: CycleType,
    iterations: usize,
    pre_smooth: usize,
    post_smooth: usize,
    work: &mut WorkCounter,
) -> Field {
    let mg = LocalMultigrid::new(problem, pre_smooth, post_smooth);
    let mut u = problem.dirichlet.clone();
    for _ in 0..iterations {
        mg.cycle(&mut u, ty, work);
    }
    u
}

/// Execute the recovery: gather interface values, bring a substitute online
/// with a zero interior, run the strategy's local solver (or checkpoint
/// restore), and refresh all ghost layers before global cycling resumes.
pub fn run_recovery(
    part: &Partition,
    state: &mut SimState,
    scenario: &FaultScenario,
    strategy: &RecoveryStrategy,
    solver_config: &SolverConfig,
    checkpoints: Option<&CheckpointStore>,
) -> Result<RecoveryReport> {
    strategy.validate()?;
    let victim = scenario.victim;
    if state.alive[victim] {
        return Err(Error::Simulator(format!("rank {victim} is alive; no recovery pending")));
    }
    let finest = part.finest_level();
    let mut work = WorkCounter::new(part.unknowns(finest));
    let mut iterations_run = 0;

    match strategy.kind {
        RecoveryKind::None => {
            state.assign_substitute(part, victim)?;
        }
        RecoveryKind::Checkpoint => {
            let store = checkpoints.ok_or_else(|| {
                Error::Config("checkpoint recovery requested but no store was kept".into())
            })?;
            state.assign_substitute(part, victim)?;
            store.restore_rank(part, state, scenario.fault_after_cycle, victim)?;
        }
        RecoveryKind::LocalSmooth | RecoveryKind::LocalPcg | RecoveryKind::LocalCycle(_) => {
            let problem = build_local_problem(part, state, victim)?;
            state.assign_substitute(part, victim)?;
            let solution = match strategy.kind {
                RecoveryKind::LocalSmooth => {
                    iterations_run = strategy.iterations;
                    local_smooth(&problem, strategy.iterations, &mut work)
                }
                RecoveryKind::LocalPcg => {
                    let (sol, done) = local_pcg(&problem, strategy.iterations, &mut work);
                    iterations_run = done;
                    sol
                }
                RecoveryKind::LocalCycle(ty) => {
                    iterations_run = strategy.iterations;
                    local_mg_cycle(
                        &problem,
                        ty,
                        strategy.iterations,
                        solver_config.pre_smooth,
                        solver_config.post_smooth,
                        &mut work,
                    )
                }
                _ => unreachable!(),
            };
            // write the recovered interior back into the victim's storage
            let off = problem.offsets[finest];
            let ln = solution.grid.nodes();
            for k in 0..ln[2] {
                for j in 0..ln[1] {
                    for i in 0..ln[0] {
                        if solution.grid.is_boundary(i, j, k) {
                            continue;
                        }
                        let p = [off[0] + i, off[1] + j, off[2] + k];
                        debug_assert_eq!(
                            part.node_class(finest, victim, p),
                            Some(NodeClass::Interior)
                        );
                        state.u[finest].set(part, victim, p, solution.at(i, j, k));
                    }
                }
            }
        }
    }

    // all ranks live again: refresh every ghost layer before cycling resumes
    for level in 0..part.num_levels {
        state.u[level].exchange(part, &state.alive)?;
        state.rhs[level].exchange(part, &state.alive)?;
    }

    Ok(RecoveryReport {
        strategy: strategy.label(),
        iterations_run,
        work_units: work.total,
        modeled_time: recovery_cost(strategy, work.total)?,
    })
}
