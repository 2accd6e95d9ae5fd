//! Work-unit accounting.
//!
//! The currency is one smoothing sweep over the full finest grid (1 WU).
//! Every stencil pass — smoothing, residual, operator application — over `m`
//! unknowns costs `m / N` WU where `N` is the finest unknown count; transfers
//! cost in proportion to the nodes they write.

/// Accumulates modeled work in sweep-equivalents of the finest grid.
#[derive(Clone, Debug)]
pub struct WorkCounter {
    finest_unknowns: f64,
    pub total: f64,
}

impl WorkCounter {
    pub fn new(finest_unknowns: usize) -> Self {
        Self { finest_unknowns: finest_unknowns as f64, total: 0.0 }
    }

    /// One Gauss-Seidel sweep over `unknowns` nodes.
    pub fn sweep(&mut self, unknowns: usize) {
        self.total += unknowns as f64 / self.finest_unknowns;
    }

    /// One residual or operator application over `unknowns` nodes.
    pub fn stencil(&mut self, unknowns: usize) {
        self.total += unknowns as f64 / self.finest_unknowns;
    }

    /// One transfer (restriction or prolongation) writing `nodes` nodes.
    pub fn transfer(&mut self, nodes: usize) {
        self.total += nodes as f64 / self.finest_unknowns;
    }

    /// A direct coarse solve over `unknowns` nodes. Charged like one pass;
    /// the factorization is cached across cycles.
    pub fn direct_solve(&mut self, unknowns: usize) {
        self.total += unknowns as f64 / self.finest_unknowns;
    }

    /// One preconditioned CG iteration over `unknowns` nodes: a stencil pass
    /// plus vector updates, charged as two passes.
    pub fn cg_iteration(&mut self, unknowns: usize) {
        self.total += 2.0 * unknowns as f64 / self.finest_unknowns;
    }
}
