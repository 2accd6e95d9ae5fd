//! Partition geometry, ghost exchange determinism, fault erasure locality,
//! and global assembly round-trips.

mod common;

use faultmg::grid::{self, BoundaryData};
use faultmg::partition::{self, NodeClass};
use faultmg::state::{DistField, SimState};
use faultmg::Error;
use proptest::prelude::*;

fn hierarchy(n0: usize, levels: usize) -> grid::GridHierarchy {
    grid::build_hierarchy(n0, levels, BoundaryData::harmonic()).unwrap()
}

#[test]
fn even_split_box_geometry() {
    let h = hierarchy(4, 2);
    let part = partition::build_partition(&h, [2, 2, 2]).unwrap();
    assert_eq!(part.rank_count(), 8);
    // rank 0 covers the low corner: coarse cells 0..2 per axis
    let b = part.rank_box(0, 0);
    assert_eq!(b.lo, [0, 0, 0]);
    assert_eq!(b.hi, [2, 2, 2]);
    assert_eq!(b.ext_lo, [0, 0, 0]);
    assert_eq!(b.ext_hi, [3, 3, 3]);
    // same box scaled by 4 on the finest level
    let b2 = part.rank_box(2, 0);
    assert_eq!(b2.hi, [8, 8, 8]);
    assert_eq!(b2.ext_hi, [9, 9, 9]);
    // the last rank covers the high corner and has no upper halo
    let last = part.rank_box(0, 7);
    assert_eq!(last.hi, [4, 4, 4]);
    assert_eq!(last.ext_hi, [4, 4, 4]);
    assert_eq!(last.ext_lo, [1, 1, 1]);
}

#[test]
fn uneven_split_keeps_all_cells() {
    // 4 coarse cells over 3 boxes: sizes 2, 1, 1
    let h = hierarchy(4, 1);
    let part = partition::build_partition(&h, [3, 1, 1]).unwrap();
    assert_eq!(part.splits[0], vec![0, 2, 3, 4]);
    assert_eq!(part.rank_box(0, 0).hi[0], 2);
    assert_eq!(part.rank_box(0, 1).lo[0], 2);
    assert_eq!(part.rank_box(0, 1).hi[0], 3);
    assert_eq!(part.rank_box(0, 2).hi[0], 4);
}

#[test]
fn partition_validation() {
    let h = hierarchy(4, 1);
    assert!(partition::build_partition(&h, [1, 1, 1]).is_err(), "single rank is rejected");
    assert!(partition::build_partition(&h, [5, 1, 1]).is_err(), "more boxes than cells");
    assert!(partition::build_partition(&h, [0, 2, 2]).is_err());
    assert!(partition::single_rank_partition(&h).is_ok());
    // the 48-rank flagship layout on a 4-cell base
    let h4 = hierarchy(4, 2);
    let p48 = partition::build_partition(&h4, [4, 4, 3]).unwrap();
    assert_eq!(p48.rank_count(), 48);
}

#[test]
fn closed_boxes_cover_every_node_and_owner_is_lowest_sharer() {
    let h = hierarchy(4, 2);
    let part = partition::build_partition(&h, [3, 2, 2]).unwrap();
    for level in 0..part.num_levels {
        let n = part.level_cells(level);
        for k in 0..=n {
            for j in 0..=n {
                for i in 0..=n {
                    let p = [i, j, k];
                    let sharers = part.sharers(level, p);
                    assert!(!sharers.is_empty(), "node {p:?} uncovered on level {level}");
                    assert_eq!(part.owner(level, p), sharers[0]);
                    for &r in &sharers {
                        assert!(part.rank_box(level, r).contains(p));
                    }
                }
            }
        }
    }
}

#[test]
fn interiors_are_disjoint_and_partition_the_unknowns() {
    let h = hierarchy(4, 1);
    let part = partition::build_partition(&h, [2, 2, 1]).unwrap();
    for level in 0..part.num_levels {
        let n = part.level_cells(level);
        let mut interior_seen = vec![0usize; (n + 1).pow(3)];
        let idx = |p: [usize; 3]| (p[2] * (n + 1) + p[1]) * (n + 1) + p[0];
        let mut unknowns = 0;
        for r in 0..part.rank_count() {
            let sd = part.subdomain(r);
            for p in sd.nodes_with_class(level, NodeClass::Interior) {
                interior_seen[idx(p)] += 1;
            }
            // interface nodes really are multiply covered
            for p in sd.nodes_with_class(level, NodeClass::Interface) {
                assert!(part.sharers(level, p).len() >= 2, "interface node {p:?} not shared");
            }
        }
        for k in 0..=n {
            for j in 0..=n {
                for i in 0..=n {
                    let p = [i, j, k];
                    let on_boundary = p.iter().any(|&c| c == 0 || c == n);
                    let owner = part.owner(level, p);
                    match part.node_class(level, owner, p).unwrap() {
                        NodeClass::Interior => {
                            assert_eq!(interior_seen[idx(p)], 1, "interior {p:?} multiply owned");
                            unknowns += 1;
                        }
                        NodeClass::Interface => {
                            assert_eq!(interior_seen[idx(p)], 0);
                            assert!(!on_boundary);
                            unknowns += 1;
                        }
                        NodeClass::PhysicalBoundary => assert!(on_boundary),
                    }
                }
            }
        }
        assert_eq!(part.unknowns(level), unknowns);
        assert_eq!(unknowns, (n - 1).pow(3) as usize);
    }
}

#[test]
fn node_classification_examples() {
    let h = hierarchy(4, 1);
    let part = partition::build_partition(&h, [2, 2, 2]).unwrap();
    // level 1 has 8 cells per axis, the partition plane at index 4
    assert_eq!(part.node_class(1, 0, [2, 3, 3]), Some(NodeClass::Interior));
    assert_eq!(part.node_class(1, 0, [4, 3, 3]), Some(NodeClass::Interface));
    assert_eq!(part.node_class(1, 0, [0, 3, 3]), Some(NodeClass::PhysicalBoundary));
    assert_eq!(part.node_class(1, 0, [6, 3, 3]), None, "outside rank 0's box");
    // the plane node is classified identically by both sharers
    assert_eq!(part.node_class(1, 1, [4, 3, 3]), Some(NodeClass::Interface));
}

#[test]
fn exchange_fills_ghosts_with_owner_values() {
    let h = hierarchy(4, 1);
    let part = partition::build_partition(&h, [2, 2, 2]).unwrap();
    let level = 1;
    let mut field = DistField::zeros(&part, level);
    // authoritative entries get a position tag, ghosts are poisoned
    let tag = |p: [usize; 3]| (p[0] * 10_000 + p[1] * 100 + p[2]) as f64;
    let n = part.level_cells(level);
    for r in 0..part.rank_count() {
        let b = part.rank_box(level, r);
        for k in b.ext_lo[2]..=b.ext_hi[2] {
            for j in b.ext_lo[1]..=b.ext_hi[1] {
                for i in b.ext_lo[0]..=b.ext_hi[0] {
                    let p = [i, j, k];
                    let v = if part.owner(level, p) == r { tag(p) } else { -1.0 };
                    field.data[r][b.local_idx(p)] = v;
                }
            }
        }
    }
    let alive = vec![true; part.rank_count()];
    field.exchange(&part, &alive).unwrap();
    for r in 0..part.rank_count() {
        let b = part.rank_box(level, r);
        for k in b.ext_lo[2]..=b.ext_hi[2] {
            for j in b.ext_lo[1]..=b.ext_hi[1] {
                for i in b.ext_lo[0]..=b.ext_hi[0] {
                    let p = [i, j, k];
                    assert_eq!(
                        field.data[r][b.local_idx(p)],
                        tag(p),
                        "rank {r} node {p:?} not refreshed"
                    );
                }
            }
        }
    }
    let _ = n;
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exchange_order_independent_and_idempotent(seed in any::<u64>(), perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let h = hierarchy(4, 1);
        let part = partition::build_partition(&h, [2, 2, 1]).unwrap();
        let level = 1;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut field = DistField::zeros(&part, level);
        for data in &mut field.data {
            for v in data.iter_mut() {
                *v = rand::Rng::gen_range(&mut rng, -1.0..1.0);
            }
        }
        let alive = vec![true; part.rank_count()];

        let mut in_order = field.clone();
        in_order.exchange(&part, &alive).unwrap();

        let mut order: Vec<usize> = (0..part.rank_count()).collect();
        let mut prng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
        order.shuffle(&mut prng);
        let mut permuted = field.clone();
        permuted.exchange_ordered(&part, &alive, &order).unwrap();
        prop_assert_eq!(&in_order, &permuted);

        let mut twice = in_order.clone();
        twice.exchange(&part, &alive).unwrap();
        prop_assert_eq!(&in_order, &twice);
    }
}

#[test]
fn exchange_with_dead_source_fails() {
    let h = hierarchy(4, 1);
    let part = partition::build_partition(&h, [2, 1, 1]).unwrap();
    let mut state = SimState::new(&part);
    state.erase_rank(&part, 1).unwrap();
    let err = state.u[1].exchange(&part, &state.alive).unwrap_err();
    assert!(matches!(err, Error::DeadRank { rank: 1, .. }), "got {err:?}");
}

#[test]
fn erase_poisons_only_the_victim_and_spares_interfaces() {
    let h = hierarchy(4, 2);
    let part = partition::build_partition(&h, [2, 2, 2]).unwrap();
    let mut state = SimState::new(&part);
    let pristine = state.clone();
    let victim = 3;
    state.erase_rank(&part, victim).unwrap();
    assert!(!state.alive[victim]);

    for level in 0..part.num_levels {
        for r in 0..part.rank_count() {
            if r != victim {
                assert_eq!(state.u[level].data[r], pristine.u[level].data[r], "rank {r} touched");
                assert_eq!(state.rhs[level].data[r], pristine.rhs[level].data[r]);
                continue;
            }
            let b = part.rank_box(level, r);
            for k in b.ext_lo[2]..=b.ext_hi[2] {
                for j in b.ext_lo[1]..=b.ext_hi[1] {
                    for i in b.ext_lo[0]..=b.ext_hi[0] {
                        let p = [i, j, k];
                        let idx = b.local_idx(p);
                        let survives = matches!(
                            part.node_class(level, r, p),
                            Some(NodeClass::Interface) | Some(NodeClass::PhysicalBoundary)
                        );
                        if survives {
                            assert_eq!(state.u[level].data[r][idx], pristine.u[level].data[r][idx]);
                        } else {
                            assert!(state.u[level].data[r][idx].is_nan(), "{p:?} not poisoned");
                            assert!(state.rhs[level].data[r][idx].is_nan());
                        }
                    }
                }
            }
        }
    }
    // erasing twice is an error
    assert!(state.erase_rank(&part, victim).is_err());
}

#[test]
fn interface_values_survive_via_live_sharers() {
    let h = hierarchy(4, 1);
    let part = partition::build_partition(&h, [2, 2, 2]).unwrap();
    let level = part.finest_level();
    let mut state = SimState::new(&part);
    // give every unknown a recognizable value through the assembled field
    let mut global = state.assemble_u(&part, level);
    global.fill_with(|x, y, z| 1.0 + x + 2.0 * y + 3.0 * z);
    state.u[level].distribute(&part, &global);

    let victim = 0;
    state.erase_rank(&part, victim).unwrap();
    for p in part.subdomain(victim).nodes_with_class(level, NodeClass::Interface) {
        let live = part
            .sharers(level, p)
            .into_iter()
            .find(|&r| state.alive[r])
            .expect("an interface node always has a surviving sharer");
        assert_eq!(state.u[level].get(&part, live, p), global.at(p[0], p[1], p[2]));
    }
}

#[test]
fn assemble_reads_zero_for_lost_interior() {
    let h = hierarchy(4, 1);
    let part = partition::build_partition(&h, [2, 2, 2]).unwrap();
    let level = part.finest_level();
    let mut state = SimState::new(&part);
    let mut global = state.assemble_u(&part, level);
    global.fill_with(|x, y, z| x + y + z + 0.25);
    state.u[level].distribute(&part, &global);

    let victim = 7;
    state.erase_rank(&part, victim).unwrap();
    let assembled = state.assemble_u(&part, level);
    assert!(assembled.is_finite(), "assembly must never leak NaN poison");
    let n = part.level_cells(level);
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                let p = [i, j, k];
                let lost = part.owner(level, p) == victim
                    && part.node_class(level, victim, p) == Some(NodeClass::Interior);
                let want = if lost { 0.0 } else { global.at(i, j, k) };
                assert_eq!(assembled.at(i, j, k), want, "node {p:?}");
            }
        }
    }
}

#[test]
fn distribute_then_assemble_round_trips() {
    let h = hierarchy(4, 2);
    let part = partition::build_partition(&h, [3, 2, 1]).unwrap();
    for level in 0..part.num_levels {
        let mut field = DistField::zeros(&part, level);
        let mut global = field.assemble(&part, &vec![true; part.rank_count()]);
        global.fill_with(|x, y, z| (4.0 * x).sin() + (3.0 * y).cos() * z);
        field.distribute(&part, &global);
        let back = field.assemble(&part, &vec![true; part.rank_count()]);
        assert_eq!(back, global);
    }
}

#[test]
fn substitute_restores_a_workable_rank() {
    let h = hierarchy(4, 1);
    let part = partition::build_partition(&h, [2, 2, 2]).unwrap();
    let mut state = SimState::new(&part);
    let victim = 2;
    state.erase_rank(&part, victim).unwrap();
    state.assign_substitute(&part, victim).unwrap();
    assert!(state.alive[victim]);
    for level in 0..part.num_levels {
        for data in &state.u[level].data {
            assert!(data.iter().all(|v| v.is_finite()), "poison left after substitution");
        }
        // exchanges work again
        state.u[level].exchange(&part, &state.alive).unwrap();
    }
    // substituting a live rank is an error
    assert!(state.assign_substitute(&part, victim).is_err());
}

#[test]
fn initial_state_carries_dirichlet_data() {
    let h = hierarchy(4, 1);
    let part = partition::build_partition(&h, [2, 2, 1]).unwrap();
    let state = SimState::new(&part);
    let level = part.finest_level();
    let u = state.assemble_u(&part, level);
    let n = part.level_cells(level);
    let hh = part.level_spacing(level);
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                let want = if [i, j, k].iter().any(|&c| c == 0 || c == n) {
                    common::harmonic(i as f64 * hh, j as f64 * hh, k as f64 * hh)
                } else {
                    0.0
                };
                assert_eq!(u.at(i, j, k), want);
            }
        }
    }
}
