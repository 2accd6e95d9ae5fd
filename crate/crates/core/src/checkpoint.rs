//! Per-cycle snapshots of rank-private data for checkpointing-recovery.
//!
//! A snapshot captures, for every rank and level, the interior-class entries
//! of the solution and right-hand side in lexicographic order. Interface and
//! physical boundary nodes are excluded: interfaces survive faults through
//! replication and boundary values are re-imposed from the problem data.
//!
//! Snapshots are held in memory or written to one file per cycle so a store
//! reopened on the same directory can restore data written by an earlier
//! process.
//!
//! File layout, all little-endian:
//! magic `MGCK`, u32 version, u32 base cells, u32 levels, 3 x u32 partition
//! counts, u64 cycle; then for each rank and each level (coarse to fine), a
//! u64 interior count followed by that many f64 solution values and the same
//! count of f64 right-hand-side values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::partition::{NodeClass, Partition};
use crate::state::SimState;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"MGCK";
const VERSION: u32 = 1;

enum Backing {
    Memory(BTreeMap<usize, Vec<u8>>),
    Directory(PathBuf),
}

pub struct CheckpointStore {
    backing: Backing,
}

impl CheckpointStore {
    pub fn in_memory() -> Self {
        Self { backing: Backing::Memory(BTreeMap::new()) }
    }

    /// Store snapshots as `checkpoint_NNNN.bin` files under `dir`. Snapshots
    /// already present in the directory stay available for restore.
    pub fn file_backed(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { backing: Backing::Directory(dir) })
    }

    fn file_path(dir: &Path, cycle: usize) -> PathBuf {
        dir.join(format!("checkpoint_{cycle:04}.bin"))
    }

    /// Snapshot the state after `cycle` completed cycles.
    pub fn write(&mut self, part: &Partition, state: &SimState, cycle: usize) -> Result<()> {
        let blob = encode(part, state, cycle)?;
        match &mut self.backing {
            Backing::Memory(map) => {
                map.insert(cycle, blob);
            }
            Backing::Directory(dir) => {
                std::fs::write(Self::file_path(dir, cycle), blob)?;
            }
        }
        Ok(())
    }

    fn blob(&self, cycle: usize) -> Result<Vec<u8>> {
        match &self.backing {
            Backing::Memory(map) => map
                .get(&cycle)
                .cloned()
                .ok_or_else(|| Error::Checkpoint(format!("no snapshot for cycle {cycle}"))),
            Backing::Directory(dir) => std::fs::read(Self::file_path(dir, cycle))
                .map_err(|e| Error::Checkpoint(format!("no snapshot for cycle {cycle}: {e}"))),
        }
    }

    /// Cycles with an available snapshot, ascending.
    pub fn cycles(&self) -> Vec<usize> {
        match &self.backing {
            Backing::Memory(map) => map.keys().copied().collect(),
            Backing::Directory(dir) => {
                let mut out = Vec::new();
                if let Ok(entries) = std::fs::read_dir(dir) {
                    for entry in entries.flatten() {
                        let name = entry.file_name();
                        let name = name.to_string_lossy();
                        if let Some(num) = name
                            .strip_prefix("checkpoint_")
                            .and_then(|s| s.strip_suffix(".bin"))
                        {
                            if let Ok(c) = num.parse() {
                                out.push(c);
                            }
                        }
                    }
                }
                out.sort_unstable();
                out
            }
        }
    }

    /// Restore one rank's interior data from the snapshot taken at `cycle`.
    pub fn restore_rank(
        &self,
        part: &Partition,
        state: &mut SimState,
        cycle: usize,
        rank: usize,
    ) -> Result<()> {
        self.restore(part, state, cycle, Some(rank))
    }

    /// Restore every rank's interior data from the snapshot taken at `cycle`.
    pub fn restore_all(&self, part: &Partition, state: &mut SimState, cycle: usize) -> Result<()> {
        self.restore(part, state, cycle, None)
    }

    fn restore(
        &self,
        part: &Partition,
        state: &mut SimState,
        cycle: usize,
        only_rank: Option<usize>,
    ) -> Result<()> {
        let blob = self.blob(cycle)?;
        decode_into(&blob, part, state, cycle, only_rank)
    }
}

fn interior_nodes(part: &Partition, level: usize, rank: usize) -> Vec<[usize; 3]> {
    let b = part.rank_box(level, rank);
    let mut out = Vec::new();
    for k in b.lo[2]..=b.hi[2] {
        for j in b.lo[1]..=b.hi[1] {
            for i in b.lo[0]..=b.hi[0] {
                let p = [i, j, k];
                if part.node_class(level, rank, p) == Some(NodeClass::Interior) {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn encode(part: &Partition, state: &SimState, cycle: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(part.base_cells as u32).to_le_bytes());
    buf.extend_from_slice(&(part.num_levels as u32).to_le_bytes());
    for c in part.counts {
        buf.extend_from_slice(&(c as u32).to_le_bytes());
    }
    buf.extend_from_slice(&(cycle as u64).to_le_bytes());
    for rank in 0..part.rank_count() {
        for level in 0..part.num_levels {
            let nodes = interior_nodes(part, level, rank);
            buf.extend_from_slice(&(nodes.len() as u64).to_le_bytes());
            for &p in &nodes {
                let v = state.u[level].get(part, rank, p);
                if !v.is_finite() {
                    return Err(Error::Checkpoint(format!(
                        "refusing to snapshot non-finite value at rank {rank} level {level}"
                    )));
                }
                buf.extend_from_slice(&v.to_le_bytes());
            }
            for &p in &nodes {
                let v = state.rhs[level].get(part, rank, p);
                if !v.is_finite() {
                    return Err(Error::Checkpoint(format!(
                        "refusing to snapshot non-finite value at rank {rank} level {level}"
                    )));
                }
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(buf)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint("snapshot truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn decode_into(
    blob: &[u8],
    part: &Partition,
    state: &mut SimState,
    cycle: usize,
    only_rank: Option<usize>,
) -> Result<()> {
    let mut r = Reader { buf: blob, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad snapshot magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported snapshot version {version}")));
    }
    let base = r.u32()? as usize;
    let levels = r.u32()? as usize;
    let counts = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    if base != part.base_cells || levels != part.num_levels || counts != part.counts {
        return Err(Error::Checkpoint(format!(
            "snapshot layout mismatch: ({base}, {levels}, {counts:?}) vs ({}, {}, {:?})",
            part.base_cells, part.num_levels, part.counts
        )));
    }
    let stored_cycle = r.u64()? as usize;
    if stored_cycle != cycle {
        return Err(Error::Checkpoint(format!(
            "snapshot records cycle {stored_cycle}, expected {cycle}"
        )));
    }
    for rank in 0..part.rank_count() {
        for level in 0..part.num_levels {
            let nodes = interior_nodes(part, level, rank);
            let count = r.u64()? as usize;
            if count != nodes.len() {
                return Err(Error::Checkpoint(format!(
                    "snapshot interior count mismatch at rank {rank} level {level}"
                )));
            }
            let apply = only_rank.is_none_or(|t| t == rank);
            for &p in &nodes {
                let v = r.f64()?;
                if apply {
                    state.u[level].set(part, rank, p, v);
                }
            }
            for &p in &nodes {
                let v = r.f64()?;
                if apply {
                    state.rhs[level].set(part, rank, p, v);
                }
            }
        }
    }
    if r.pos != blob.len() {
        return Err(Error::Checkpoint("snapshot has trailing bytes".into()));
    }
    Ok(())
}
