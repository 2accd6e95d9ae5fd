//! Behavior of the distributed multigrid solver: smoother equivalence on a
//! single rank, cycle convergence, coarse policies, and determinism.

mod common;

use faultmg::grid::{self, BoundaryData, Field};
use faultmg::partition;
use faultmg::solver::{CoarsePolicy, CycleType, Solver, SolverConfig};
use faultmg::state::SimState;

fn hierarchy(n0: usize, levels: usize) -> grid::GridHierarchy {
    grid::build_hierarchy(n0, levels, BoundaryData::harmonic()).unwrap()
}

fn default_run(n0: usize, levels: usize, counts: [usize; 3], cfg: SolverConfig) -> faultmg::ConvergenceLog {
    let h = hierarchy(n0, levels);
    let part = partition::build_partition(&h, counts).unwrap();
    let mut solver = Solver::new(&part, cfg).unwrap();
    let mut state = SimState::new(&part);
    solver.solve(&mut state, None, None, None).unwrap()
}

#[test]
fn single_rank_smoother_is_classical_gauss_seidel() {
    let h = hierarchy(4, 1);
    let part = partition::single_rank_partition(&h).unwrap();
    let mut solver = Solver::new(&part, SolverConfig::default()).unwrap();
    let mut state = SimState::new(&part);
    let level = part.finest_level();

    let mut reference = state.assemble_u(&part, level);
    let f = Field::zeros(reference.grid);
    for sweeps in 1..=3 {
        solver.smooth(&mut state, level, 1).unwrap();
        grid::gs_sweep(&mut reference, &f);
        let ours = state.assemble_u(&part, level);
        assert_eq!(
            ours.as_slice(),
            reference.as_slice(),
            "sweep {sweeps} deviates from lexicographic Gauss-Seidel"
        );
    }
}

#[test]
fn exact_solution_is_a_fixed_point_of_the_cycle() {
    let h = hierarchy(2, 1);
    let part = partition::build_partition(&h, [2, 1, 1]).unwrap();
    let level = part.finest_level();
    let grid_f = grid::BoxGrid::unit_cube(part.level_cells(level));
    let mut bc = Field::zeros(grid_f);
    bc.fill_boundary(common::harmonic);
    let exact = common::dense_solve(&grid_f, &Field::zeros(grid_f), &bc);

    let mut solver = Solver::new(&part, SolverConfig::default()).unwrap();
    let mut state = SimState::new(&part);
    state.u[level].distribute(&part, &exact);
    let r0 = solver.residual_norm(&state.clone(), level).unwrap();
    assert!(r0 < 1e-12, "exact solution already has residual {r0}");
    solver.cycle_at(&mut state, level, CycleType::V).unwrap();
    let r1 = solver.residual_norm(&state, level).unwrap();
    assert!(r1 < 1e-12, "cycle moved away from the fixed point: {r1}");
}

#[test]
fn trivial_hierarchy_cycle_is_the_coarse_solve() {
    // rooted at level 0 the cycle must coincide with the dense coarse solve
    let h = hierarchy(4, 1);
    let part = partition::build_partition(&h, [2, 2, 1]).unwrap();
    let mut solver = Solver::new(&part, SolverConfig::default()).unwrap();
    let mut state = SimState::new(&part);
    // seed a nonzero coarse right-hand side
    let grid0 = grid::BoxGrid::unit_cube(part.level_cells(0));
    let mut f0 = Field::zeros(grid0);
    f0.fill_with(|x, y, z| x * y + z);
    // zero the boundary rows, the coarse system is interior-only
    let mut masked = Field::zeros(grid0);
    let n = grid0.nodes();
    for k in 1..n[2] - 1 {
        for j in 1..n[1] - 1 {
            for i in 1..n[0] - 1 {
                masked.set(i, j, k, f0.at(i, j, k));
            }
        }
    }
    state.rhs[0].distribute(&part, &masked);
    solver.cycle_at(&mut state, 0, CycleType::V).unwrap();
    let got = state.u[0].assemble(&part, &state.alive);
    let want = common::dense_solve(&grid0, &masked, &Field::zeros(grid0));
    assert!(common::max_abs_diff(&got, &want) < 1e-11);
}

#[test]
fn v_cycle_converges_and_the_tail_is_monotone() {
    let log = default_run(4, 2, [2, 2, 2], SolverConfig::default());
    assert_eq!(log.stop_reason, faultmg::metrics::StopReason::Converged);
    // each cycle gains well over an order of magnitude at these sizes
    assert!(log.scaled(1).unwrap() < 0.1);
    for w in log.scaled_residuals.windows(2) {
        if w[0] > 1e-13 {
            assert!(w[1] < w[0], "residual history not monotone: {w:?}");
        }
    }
}

#[test]
fn w_and_f_cycles_converge_no_slower_than_v() {
    let cycles_of = |ty: CycleType| {
        let cfg = SolverConfig { cycle: ty, ..SolverConfig::default() };
        let log = default_run(4, 2, [2, 2, 2], cfg);
        assert_eq!(log.stop_reason, faultmg::metrics::StopReason::Converged, "{ty} stalled");
        log.total_cycles()
    };
    let v = cycles_of(CycleType::V);
    let w = cycles_of(CycleType::W);
    let f = cycles_of(CycleType::F);
    assert!(w <= v, "W needed {w} cycles, V {v}");
    assert!(f <= v, "F needed {f} cycles, V {v}");
}

#[test]
fn f_cycle_costs_less_than_w_per_cycle() {
    let work_of = |ty: CycleType| {
        let cfg = SolverConfig { cycle: ty, max_cycles: 3, stop_tol: 1e-30, ..SolverConfig::default() };
        let log = default_run(4, 3, [2, 2, 2], cfg);
        log.work_per_cycle[1]
    };
    let w = work_of(CycleType::W);
    let f = work_of(CycleType::F);
    assert!(f < w, "F cycle work {f} not below W cycle work {w}");
    assert!(f > 0.9 * w * 7.0 / 8.0, "F work {f} implausibly small against W {w}");
}

#[test]
fn smoother_sweep_coarse_policy_converges() {
    let cfg = SolverConfig {
        coarse_policy: CoarsePolicy::SmootherSweeps(30),
        ..SolverConfig::default()
    };
    let log = default_run(4, 2, [2, 2, 2], cfg);
    assert_eq!(log.stop_reason, faultmg::metrics::StopReason::Converged);
    // and lands within a few cycles of the exact coarse solve
    let exact = default_run(4, 2, [2, 2, 2], SolverConfig::default());
    assert!(log.total_cycles() <= exact.total_cycles() + 3);
}

#[test]
fn convergence_is_partition_independent_up_to_a_few_cycles() {
    let mut counts_cycles = Vec::new();
    for counts in [[2, 2, 2], [4, 2, 1], [2, 1, 1], [4, 4, 2]] {
        let log = default_run(4, 2, counts, SolverConfig::default());
        assert_eq!(
            log.stop_reason,
            faultmg::metrics::StopReason::Converged,
            "layout {counts:?} stalled"
        );
        counts_cycles.push(log.total_cycles());
    }
    let min = *counts_cycles.iter().min().unwrap();
    let max = *counts_cycles.iter().max().unwrap();
    assert!(max - min <= 3, "cycle counts vary too much across layouts: {counts_cycles:?}");
}

#[test]
fn runs_are_deterministic() {
    let a = default_run(4, 2, [3, 2, 2], SolverConfig::default());
    let b = default_run(4, 2, [3, 2, 2], SolverConfig::default());
    assert_eq!(a, b, "identical runs must be bit-identical");
}

#[test]
fn single_rank_and_multirank_agree_on_the_solution() {
    // different smoother coupling, same linear system: both converge to the
    // same discrete solution
    let h = hierarchy(4, 2);
    let level = 2;
    let solve_with = |part: &faultmg::Partition| {
        let mut solver = Solver::new(part, SolverConfig::default()).unwrap();
        let mut state = SimState::new(part);
        solver.solve(&mut state, None, None, None).unwrap();
        state.assemble_u(part, level)
    };
    let single = solve_with(&partition::single_rank_partition(&h).unwrap());
    let multi = solve_with(&partition::build_partition(&h, [2, 2, 2]).unwrap());
    assert!(common::max_abs_diff(&single, &multi) < 1e-11);
}

#[test]
fn work_accounting_scales_with_the_cycle() {
    let cfg = SolverConfig { max_cycles: 4, stop_tol: 1e-30, ..SolverConfig::default() };
    let log = default_run(4, 2, [2, 2, 2], cfg);
    assert_eq!(log.work_per_cycle.len(), 4);
    // steady cycles cost the same
    assert!((log.work_per_cycle[1] - log.work_per_cycle[2]).abs() < 1e-12);
    // 6 sweeps + residual + transfers on the finest level alone exceed 7 WU
    assert!(log.work_per_cycle[1] > 7.0);
    // and the whole V-cycle stays under twice the finest-level cost
    assert!(log.work_per_cycle[1] < 16.0);
    assert!((log.total_work - log.work_per_cycle.iter().sum::<f64>()).abs() < 1e-12);
}

#[test]
fn config_validation() {
    let bad = SolverConfig { pre_smooth: 0, ..SolverConfig::default() };
    assert!(bad.validate().is_err());
    let bad = SolverConfig { stop_tol: 0.0, ..SolverConfig::default() };
    assert!(bad.validate().is_err());
    assert!(SolverConfig::default().validate().is_ok());
}
