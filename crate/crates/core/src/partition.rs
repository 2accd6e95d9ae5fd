//! Decomposition of the hierarchy into rank-owned boxes.
//!
//! Each rank owns one box of cells of the coarsest level; the same box, scaled
//! by the refinement factor, applies on every level, so subdomain boundaries
//! coincide with grid lines of all levels. Nodes on internal box faces are
//! shared between all touching ranks and stored redundantly; the rank with the
//! lowest id among the sharers holds the authoritative copy. Each rank's
//! storage extends one node layer beyond its closed box (the ghost halo), so
//! stencils at every node the rank updates are local.

use crate::grid::{BoundaryData, GridHierarchy};
use crate::{Error, Result};

/// Classification of a node relative to one subdomain's closed box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    /// Owned exclusively by this subdomain.
    Interior,
    /// On an internal partition plane, stored redundantly by all sharers.
    Interface,
    /// On the physical domain boundary; carries Dirichlet data.
    PhysicalBoundary,
}

/// One rank's node boxes at one level. `lo..=hi` is the closed box; the
/// extended box adds the ghost halo where a neighbor exists.
#[derive(Clone, Copy, Debug)]
pub struct RankBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    pub ext_lo: [usize; 3],
    pub ext_hi: [usize; 3],
}

impl RankBox {
    #[inline]
    pub fn contains(&self, p: [usize; 3]) -> bool {
        (0..3).all(|a| self.lo[a] <= p[a] && p[a] <= self.hi[a])
    }

    #[inline]
    pub fn ext_contains(&self, p: [usize; 3]) -> bool {
        (0..3).all(|a| self.ext_lo[a] <= p[a] && p[a] <= self.ext_hi[a])
    }

    #[inline]
    pub fn ext_dims(&self) -> [usize; 3] {
        [
            self.ext_hi[0] - self.ext_lo[0] + 1,
            self.ext_hi[1] - self.ext_lo[1] + 1,
            self.ext_hi[2] - self.ext_lo[2] + 1,
        ]
    }

    #[inline]
    pub fn ext_len(&self) -> usize {
        let d = self.ext_dims();
        d[0] * d[1] * d[2]
    }

    /// Index of a global node in this rank's extended-box storage.
    #[inline]
    pub fn local_idx(&self, p: [usize; 3]) -> usize {
        debug_assert!(self.ext_contains(p));
        let d = self.ext_dims();
        ((p[2] - self.ext_lo[2]) * d[1] + (p[1] - self.ext_lo[1])) * d[0] + (p[0] - self.ext_lo[0])
    }

    /// Strides for stepping one node in x, y, z within extended storage.
    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        let d = self.ext_dims();
        [1, d[0], d[0] * d[1]]
    }
}

/// A node this rank updates during smoothing and residual passes.
#[derive(Clone, Copy, Debug)]
pub(crate) struct OwnedNode {
    pub local: usize,
    pub ijk: [usize; 3],
}

/// One ghost copy: `dst` entry of a rank's storage mirrors `src` of `src_rank`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct GhostCopy {
    pub dst: usize,
    pub src_rank: usize,
    pub src: usize,
}

pub(crate) struct LevelLayout {
    pub cells: usize,
    pub spacing: f64,
    pub boxes: Vec<RankBox>,
    /// Per rank: copies feeding its non-authoritative entries.
    pub ghosts: Vec<Vec<GhostCopy>>,
    /// Per rank: authoritative non-Dirichlet nodes, lexicographic (z outer).
    pub owned: Vec<Vec<OwnedNode>>,
    /// Total unknowns (non-boundary nodes) on this level.
    pub unknowns: usize,
}

/// The rank decomposition of the hierarchy.
pub struct Partition {
    pub counts: [usize; 3],
    pub base_cells: usize,
    pub num_levels: usize,
    pub boundary: BoundaryData,
    /// Cell-split boundaries of the coarsest level, per axis.
    pub splits: [Vec<usize>; 3],
    levels: Vec<LevelLayout>,
}

/// Split the hierarchy into `counts` boxes per axis.
///
/// The coarsest-level cells are divided as evenly as possible per axis (boxes
/// earlier in an axis get the extra cell), which keeps subdomain boundaries on
/// grid lines of every level even when the counts do not divide `n0`.
pub fn build_partition(hierarchy: &GridHierarchy, counts: [usize; 3]) -> Result<Partition> {
    let rank_count = counts[0] * counts[1] * counts[2];
    if rank_count < 2 {
        return Err(Error::Config(
            "partition needs at least 2 ranks (a single rank leaves no redundancy)".into(),
        ));
    }
    build(hierarchy, counts)
}

/// A single-rank layout of the same machinery, for reference runs and tests.
/// Not a valid fault-simulation configuration.
pub fn single_rank_partition(hierarchy: &GridHierarchy) -> Result<Partition> {
    build(hierarchy, [1, 1, 1])
}

fn build(hierarchy: &GridHierarchy, counts: [usize; 3]) -> Result<Partition> {
    let n0 = hierarchy.base_cells;
    let mut splits: [Vec<usize>; 3] = [vec![], vec![], vec![]];
    for a in 0..3 {
        let p = counts[a];
        if p < 1 {
            return Err(Error::Config(format!("partition count for axis {a} must be >= 1")));
        }
        if p > n0 {
            return Err(Error::Config(format!(
                "axis {a}: cannot split {n0} coarse cells into {p} boxes"
            )));
        }
        let base = n0 / p;
        let rem = n0 % p;
        let mut s = vec![0usize];
        for b in 0..p {
            let size = base + usize::from(b < rem);
            s.push(s[b] + size);
        }
        splits[a] = s;
    }

    let levels = hierarchy
        .levels
        .iter()
        .map(|lvl| build_level(&splits, counts, lvl.index, lvl.cells_per_dim, lvl.spacing))
        .collect();

    Ok(Partition {
        counts,
        base_cells: n0,
        num_levels: hierarchy.levels.len(),
        boundary: hierarchy.boundary.clone(),
        splits,
        levels,
    })
}

fn build_level(
    splits: &[Vec<usize>; 3],
    counts: [usize; 3],
    level: usize,
    cells: usize,
    spacing: f64,
) -> LevelLayout {
    let rank_count = counts[0] * counts[1] * counts[2];
    let n = cells;
    let scale = |c: usize| c << level;

    let mut boxes = Vec::with_capacity(rank_count);
    for mz in 0..counts[2] {
        for my in 0..counts[1] {
            for mx in 0..counts[0] {
                let m = [mx, my, mz];
                let mut lo = [0; 3];
                let mut hi = [0; 3];
                let mut ext_lo = [0; 3];
                let mut ext_hi = [0; 3];
                for a in 0..3 {
                    lo[a] = scale(splits[a][m[a]]);
                    hi[a] = scale(splits[a][m[a] + 1]);
                    ext_lo[a] = if lo[a] > 0 { lo[a] - 1 } else { 0 };
                    ext_hi[a] = if hi[a] < n { hi[a] + 1 } else { n };
                }
                boxes.push(RankBox { lo, hi, ext_lo, ext_hi });
            }
        }
    }

    let owner_axis = |a: usize, coord: usize| -> usize {
        // lowest box index whose closed range contains the coordinate
        for m in 0..counts[a] {
            if coord <= scale(splits[a][m + 1]) {
                return m;
            }
        }
        counts[a] - 1
    };
    let owner_of = |p: [usize; 3]| -> usize {
        let mx = owner_axis(0, p[0]);
        let my = owner_axis(1, p[1]);
        let mz = owner_axis(2, p[2]);
        (mz * counts[1] + my) * counts[0] + mx
    };

    let mut ghosts = vec![Vec::new(); rank_count];
    let mut owned = vec![Vec::new(); rank_count];
    let mut unknowns = 0usize;
    for (r, b) in boxes.iter().enumerate() {
        for k in b.ext_lo[2]..=b.ext_hi[2] {
            for j in b.ext_lo[1]..=b.ext_hi[1] {
                for i in b.ext_lo[0]..=b.ext_hi[0] {
                    let p = [i, j, k];
                    let owner = owner_of(p);
                    let local = b.local_idx(p);
                    if owner != r {
                        ghosts[r].push(GhostCopy {
                            dst: local,
                            src_rank: owner,
                            src: boxes[owner].local_idx(p),
                        });
                        continue;
                    }
                    debug_assert!(b.contains(p));
                    let on_domain_boundary =
                        p.contains(&0) || p.contains(&n);
                    if on_domain_boundary {
                        continue;
                    }
                    owned[r].push(OwnedNode { local, ijk: p });
                    unknowns += 1;
                }
            }
        }
    }

    LevelLayout { cells, spacing, boxes, ghosts, owned, unknowns }
}

impl Partition {
    pub fn rank_count(&self) -> usize {
        self.counts[0] * self.counts[1] * self.counts[2]
    }

    pub fn finest_level(&self) -> usize {
        self.num_levels - 1
    }

    pub(crate) fn layout(&self, level: usize) -> &LevelLayout {
        &self.levels[level]
    }

    pub fn rank_box(&self, level: usize, rank: usize) -> RankBox {
        self.levels[level].boxes[rank]
    }

    pub fn level_cells(&self, level: usize) -> usize {
        self.levels[level].cells
    }

    pub fn level_spacing(&self, level: usize) -> f64 {
        self.levels[level].spacing
    }

    /// Unknown (non-Dirichlet) node count of a level.
    pub fn unknowns(&self, level: usize) -> usize {
        self.levels[level].unknowns
    }

    /// All ranks whose closed box contains the node, ascending.
    pub fn sharers(&self, level: usize, p: [usize; 3]) -> Vec<usize> {
        let lay = &self.levels[level];
        (0..self.rank_count())
            .filter(|&r| lay.boxes[r].contains(p))
            .collect()
    }

    /// The rank holding the authoritative copy of a node (lowest sharer).
    pub fn owner(&self, level: usize, p: [usize; 3]) -> usize {
        let lay = &self.levels[level];
        (0..self.rank_count())
            .find(|&r| lay.boxes[r].contains(p))
            .expect("every node lies in at least one closed box")
    }

    /// Classification of a node with respect to one rank's box, if contained.
    pub fn node_class(&self, level: usize, rank: usize, p: [usize; 3]) -> Option<NodeClass> {
        let lay = &self.levels[level];
        let b = &lay.boxes[rank];
        if !b.contains(p) {
            return None;
        }
        let n = lay.cells;
        if p.contains(&0) || p.contains(&n) {
            return Some(NodeClass::PhysicalBoundary);
        }
        let shared =
            (0..3).any(|a| (p[a] == b.lo[a] && b.lo[a] > 0) || (p[a] == b.hi[a] && b.hi[a] < n));
        Some(if shared { NodeClass::Interface } else { NodeClass::Interior })
    }

    pub fn subdomain(&self, rank: usize) -> Subdomain<'_> {
        assert!(rank < self.rank_count());
        Subdomain { partition: self, rank }
    }
}

/// View of one rank's geometry.
#[derive(Clone, Copy)]
pub struct Subdomain<'a> {
    pub partition: &'a Partition,
    pub rank: usize,
}

impl Subdomain<'_> {
    pub fn node_box(&self, level: usize) -> RankBox {
        self.partition.rank_box(level, self.rank)
    }

    pub fn class(&self, level: usize, p: [usize; 3]) -> Option<NodeClass> {
        self.partition.node_class(level, self.rank, p)
    }

    /// All nodes of the closed box with the given classification.
    pub fn nodes_with_class(&self, level: usize, class: NodeClass) -> Vec<[usize; 3]> {
        let b = self.node_box(level);
        let mut out = Vec::new();
        for k in b.lo[2]..=b.hi[2] {
            for j in b.lo[1]..=b.hi[1] {
                for i in b.lo[0]..=b.hi[0] {
                    if self.class(level, [i, j, k]) == Some(class) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }
}
