//! Per-rank value storage and the bulk-synchronous state of a run.
//!
//! A [`DistField`] holds one scalar field split across ranks, each rank
//! covering its extended (haloed) box. After [`DistField::exchange`] every
//! non-authoritative entry equals the owner's value bit-exactly, regardless of
//! the order in which ranks are processed: each copy has a unique source and
//! sources are never written during the exchange.

use crate::grid::Field;
use crate::partition::{NodeClass, Partition};
use crate::{Error, Result};

/// One field distributed over the partition's ranks at a fixed level.
#[derive(Clone, Debug, PartialEq)]
pub struct DistField {
    pub level: usize,
    /// Per rank, extended-box storage in local lexicographic order.
    pub data: Vec<Vec<f64>>,
}

impl DistField {
    pub fn zeros(part: &Partition, level: usize) -> Self {
        let lay = part.layout(level);
        let data = lay.boxes.iter().map(|b| vec![0.0; b.ext_len()]).collect();
        Self { level, data }
    }

    /// Refresh every ghost copy from its authoritative source, processing
    /// ranks in ascending order.
    pub fn exchange(&mut self, part: &Partition, alive: &[bool]) -> Result<()> {
        let order: Vec<usize> = (0..part.rank_count()).collect();
        self.exchange_ordered(part, alive, &order)
    }

    /// Ghost exchange with an explicit rank processing order. The result is
    /// independent of `order`; exposing it lets tests assert exactly that.
    pub fn exchange_ordered(&mut self, part: &Partition, alive: &[bool], order: &[usize]) -> Result<()> {
        let lay = part.layout(self.level);
        for &r in order {
            if !alive[r] {
                return Err(Error::DeadRank { rank: r, op: "ghost_exchange" });
            }
            for gc in &lay.ghosts[r] {
                if !alive[gc.src_rank] {
                    return Err(Error::DeadRank { rank: gc.src_rank, op: "ghost_exchange" });
                }
                let v = self.data[gc.src_rank][gc.src];
                self.data[r][gc.dst] = v;
            }
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, part: &Partition, rank: usize, p: [usize; 3]) -> f64 {
        self.data[rank][part.rank_box(self.level, rank).local_idx(p)]
    }

    #[inline]
    pub fn set(&mut self, part: &Partition, rank: usize, p: [usize; 3], v: f64) {
        let idx = part.rank_box(self.level, rank).local_idx(p);
        self.data[rank][idx] = v;
    }

    /// Assemble the global field, reading every node from its authoritative
    /// rank. For a dead owner, interface values come from the lowest live
    /// sharer and lost interior values read as zero.
    pub fn assemble(&self, part: &Partition, alive: &[bool]) -> Field {
        let level = self.level;
        let cells = part.level_cells(level);
        let grid = crate::grid::BoxGrid::unit_cube(cells);
        let mut out = Field::zeros(grid);
        for k in 0..=cells {
            for j in 0..=cells {
                for i in 0..=cells {
                    let p = [i, j, k];
                    let owner = part.owner(level, p);
                    let v = if alive[owner] {
                        self.get(part, owner, p)
                    } else if let Some(&live) = part
                        .sharers(level, p)
                        .iter()
                        .find(|&&r| alive[r])
                    {
                        self.get(part, live, p)
                    } else if part.node_class(level, owner, p) == Some(NodeClass::Interior) {
                        0.0
                    } else {
                        // Dirichlet or interface data survives in place.
                        self.get(part, owner, p)
                    };
                    out.set(i, j, k, v);
                }
            }
        }
        out
    }

    /// Overwrite every rank's storage (including halos) from a global field.
    pub fn distribute(&mut self, part: &Partition, field: &Field) {
        let lay = part.layout(self.level);
        for (r, b) in lay.boxes.iter().enumerate() {
            for k in b.ext_lo[2]..=b.ext_hi[2] {
                for j in b.ext_lo[1]..=b.ext_hi[1] {
                    for i in b.ext_lo[0]..=b.ext_hi[0] {
                        self.data[r][b.local_idx([i, j, k])] = field.at(i, j, k);
                    }
                }
            }
        }
    }
}

/// Full simulation state: solution and right-hand side per level, plus the
/// alive flag of every rank.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub alive: Vec<bool>,
    /// Solution on the finest level; corrections on coarser levels.
    pub u: Vec<DistField>,
    /// Right-hand side per level (restricted residuals below the finest).
    pub rhs: Vec<DistField>,
}

impl SimState {
    /// Zero interior, Dirichlet data on the physical boundary of the finest
    /// level, zero right-hand side everywhere.
    pub fn new(part: &Partition) -> Self {
        let levels = part.num_levels;
        let mut u: Vec<DistField> = (0..levels).map(|l| DistField::zeros(part, l)).collect();
        let rhs = (0..levels).map(|l| DistField::zeros(part, l)).collect();
        let finest = part.finest_level();
        let lay = part.layout(finest);
        let n = lay.cells;
        let h = lay.spacing;
        for (r, b) in lay.boxes.iter().enumerate() {
            for k in b.ext_lo[2]..=b.ext_hi[2] {
                for j in b.ext_lo[1]..=b.ext_hi[1] {
                    for i in b.ext_lo[0]..=b.ext_hi[0] {
                        if i == 0 || j == 0 || k == 0 || i == n || j == n || k == n {
                            let v = part.boundary.eval(i as f64 * h, j as f64 * h, k as f64 * h);
                            let idx = b.local_idx([i, j, k]);
                            u[finest].data[r][idx] = v;
                        }
                    }
                }
            }
        }
        Self { alive: vec![true; part.rank_count()], u, rhs }
    }

    pub fn assemble_u(&self, part: &Partition, level: usize) -> Field {
        self.u[level].assemble(part, &self.alive)
    }

    /// Destroy one rank's lost data: every interior entry of its storage on
    /// every level is overwritten with NaN poison, as are its ghost copies of
    /// neighbor data. Redundant interface values and Dirichlet data survive.
    pub fn erase_rank(&mut self, part: &Partition, rank: usize) -> Result<()> {
        if !self.alive[rank] {
            return Err(Error::Simulator(format!("rank {rank} is already dead")));
        }
        for level in 0..part.num_levels {
            let b = part.rank_box(level, rank);
            for k in b.ext_lo[2]..=b.ext_hi[2] {
                for j in b.ext_lo[1]..=b.ext_hi[1] {
                    for i in b.ext_lo[0]..=b.ext_hi[0] {
                        let p = [i, j, k];
                        let keep = matches!(
                            part.node_class(level, rank, p),
                            Some(NodeClass::Interface) | Some(NodeClass::PhysicalBoundary)
                        );
                        if !keep {
                            let idx = b.local_idx(p);
                            self.u[level].data[rank][idx] = f64::NAN;
                            self.rhs[level].data[rank][idx] = f64::NAN;
                        }
                    }
                }
            }
        }
        self.alive[rank] = false;
        Ok(())
    }

    /// Bring a substitute online for a dead rank: zero interior as initial
    /// guess, right-hand side cleared, ghost copies refreshed from neighbors.
    pub fn assign_substitute(&mut self, part: &Partition, rank: usize) -> Result<()> {
        if self.alive[rank] {
            return Err(Error::Simulator(format!("rank {rank} is not dead")));
        }
        for level in 0..part.num_levels {
            let b = part.rank_box(level, rank);
            for k in b.ext_lo[2]..=b.ext_hi[2] {
                for j in b.ext_lo[1]..=b.ext_hi[1] {
                    for i in b.ext_lo[0]..=b.ext_hi[0] {
                        let p = [i, j, k];
                        let idx = b.local_idx(p);
                        if !self.u[level].data[rank][idx].is_finite() {
                            self.u[level].data[rank][idx] = 0.0;
                        }
                        if !self.rhs[level].data[rank][idx].is_finite() {
                            self.rhs[level].data[rank][idx] = 0.0;
                        }
                    }
                }
            }
        }
        self.alive[rank] = true;
        // refresh this rank's ghost copies from the (all live) owners
        for level in 0..part.num_levels {
            let lay = part.layout(level);
            for gc in &lay.ghosts[rank] {
                if !self.alive[gc.src_rank] {
                    return Err(Error::DeadRank { rank: gc.src_rank, op: "substitute ghost refresh" });
                }
                let v = self.u[level].data[gc.src_rank][gc.src];
                self.u[level].data[rank][gc.dst] = v;
                let w = self.rhs[level].data[gc.src_rank][gc.src];
                self.rhs[level].data[rank][gc.dst] = w;
            }
        }
        Ok(())
    }
}
