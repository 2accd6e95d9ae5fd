//! Structured grids, node-centered fields, the 7-point Laplace stencil, and
//! the inter-grid transfer operators.
//!
//! Everything here is single-domain: a [`BoxGrid`] is an axis-aligned box of
//! cells with uniform spacing, used both for the global unit cube and for the
//! local box of a lost subdomain during recovery.

use std::sync::Arc;

use crate::{Error, Result};

/// An axis-aligned box of `cells[d]` cells per axis with uniform spacing.
/// Nodes sit at `origin + (i, j, k) * spacing` for `0 <= i <= cells[0]` etc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxGrid {
    pub cells: [usize; 3],
    pub spacing: f64,
    pub origin: [f64; 3],
}

impl BoxGrid {
    pub fn new(cells: [usize; 3], spacing: f64, origin: [f64; 3]) -> Self {
        Self { cells, spacing, origin }
    }

    /// The unit cube split into `cells` cells per axis.
    pub fn unit_cube(cells: usize) -> Self {
        Self::new([cells; 3], 1.0 / cells as f64, [0.0; 3])
    }

    pub fn nodes(&self) -> [usize; 3] {
        [self.cells[0] + 1, self.cells[1] + 1, self.cells[2] + 1]
    }

    pub fn node_count(&self) -> usize {
        let n = self.nodes();
        n[0] * n[1] * n[2]
    }

    /// Interior (non-face) node count.
    pub fn interior_count(&self) -> usize {
        self.cells[0].saturating_sub(1)
            * self.cells[1].saturating_sub(1)
            * self.cells[2].saturating_sub(1)
    }

    /// Lexicographic index, z outermost, x fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.nodes();
        (k * n[1] + j) * n[0] + i
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        i == 0
            || j == 0
            || k == 0
            || i == self.cells[0]
            || j == self.cells[1]
            || k == self.cells[2]
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
            self.origin[2] + k as f64 * self.spacing,
        ]
    }

    /// The grid with every cell count halved, if all are even and nonzero.
    pub fn coarsen(&self) -> Option<BoxGrid> {
        if self.cells.iter().all(|&c| c >= 2 && c % 2 == 0) {
            Some(BoxGrid::new(
                [self.cells[0] / 2, self.cells[1] / 2, self.cells[2] / 2],
                self.spacing * 2.0,
                self.origin,
            ))
        } else {
            None
        }
    }

    pub fn refine(&self) -> BoxGrid {
        BoxGrid::new(
            [self.cells[0] * 2, self.cells[1] * 2, self.cells[2] * 2],
            self.spacing * 0.5,
            self.origin,
        )
    }
}

/// Node-centered scalar field over a [`BoxGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: BoxGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: BoxGrid) -> Self {
        Self { grid, values: vec![0.0; grid.node_count()] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.grid.idx(i, j, k);
        self.values[idx] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Evaluate `f` at every node position and store the result.
    pub fn fill_with(&mut self, f: impl Fn(f64, f64, f64) -> f64) {
        let n = self.grid.nodes();
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let p = self.grid.position(i, j, k);
                    let idx = self.grid.idx(i, j, k);
                    self.values[idx] = f(p[0], p[1], p[2]);
                }
            }
        }
    }

    /// Set boundary nodes from `f`, leaving the interior untouched.
    pub fn fill_boundary(&mut self, f: impl Fn(f64, f64, f64) -> f64) {
        let n = self.grid.nodes();
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    if self.grid.is_boundary(i, j, k) {
                        let p = self.grid.position(i, j, k);
                        let idx = self.grid.idx(i, j, k);
                        self.values[idx] = f(p[0], p[1], p[2]);
                    }
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Dirichlet boundary data as a function of position.
#[derive(Clone)]
pub struct BoundaryData(Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>);

impl BoundaryData {
    pub fn new(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn zero() -> Self {
        Self::new(|_, _, _| 0.0)
    }

    /// A harmonic function, so the Laplace problem it closes is consistent:
    /// `sin(pi (x + sqrt(2) y)) * sinh(sqrt(3) pi z)`.
    pub fn harmonic() -> Self {
        Self::new(|x, y, z| {
            (std::f64::consts::PI * (x + 2.0_f64.sqrt() * y)).sin()
                * (3.0_f64.sqrt() * std::f64::consts::PI * z).sinh()
        })
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        (self.0)(x, y, z)
    }
}

impl Default for BoundaryData {
    fn default() -> Self {
        Self::harmonic()
    }
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BoundaryData(..)")
    }
}

/// One refinement level of the global hierarchy on the unit cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub index: usize,
    pub cells_per_dim: usize,
    pub spacing: f64,
}

impl Level {
    pub fn nodes_per_dim(&self) -> usize {
        self.cells_per_dim + 1
    }

    pub fn grid(&self) -> BoxGrid {
        BoxGrid::unit_cube(self.cells_per_dim)
    }
}

/// The nested levels `0..=L` produced by uniform refinement of an
/// `n0 x n0 x n0` base grid.
#[derive(Clone, Debug)]
pub struct GridHierarchy {
    pub levels: Vec<Level>,
    pub boundary: BoundaryData,
    pub base_cells: usize,
}

impl GridHierarchy {
    pub fn finest(&self) -> &Level {
        self.levels.last().unwrap()
    }

    pub fn finest_index(&self) -> usize {
        self.levels.len() - 1
    }

    /// A field on `level` with boundary nodes set from the hierarchy's
    /// Dirichlet data and zero interior.
    pub fn boundary_field(&self, level: usize) -> Field {
        let mut f = Field::zeros(self.levels[level].grid());
        let g = self.boundary.clone();
        f.fill_boundary(|x, y, z| g.eval(x, y, z));
        f
    }
}

/// Build the level stack `n0, 2 n0, ..., n0 * 2^L` cells per dimension.
pub fn build_hierarchy(n0: usize, max_level: usize, boundary: BoundaryData) -> Result<GridHierarchy> {
    if n0 < 2 {
        return Err(Error::Config(format!("base grid needs at least 2 cells per dim, got {n0}")));
    }
    if max_level < 1 {
        return Err(Error::Config(format!("hierarchy needs at least 2 levels, got L={max_level}")));
    }
    let levels = (0..=max_level)
        .map(|l| {
            let cells = n0 << l;
            Level { index: l, cells_per_dim: cells, spacing: 1.0 / cells as f64 }
        })
        .collect();
    Ok(GridHierarchy { levels, boundary, base_cells: n0 })
}

/// Apply the scaled 7-point stencil: `(6 u_ijk - sum of axis neighbors) / h^2`
/// at interior nodes; boundary rows act as the identity.
pub fn apply_operator(u: &Field) -> Field {
    let g = u.grid;
    let n = g.nodes();
    let inv_h2 = 1.0 / (g.spacing * g.spacing);
    let mut out = Field::zeros(g);
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let v = if g.is_boundary(i, j, k) {
                    u.at(i, j, k)
                } else {
                    (6.0 * u.at(i, j, k)
                        - u.at(i - 1, j, k)
                        - u.at(i + 1, j, k)
                        - u.at(i, j - 1, k)
                        - u.at(i, j + 1, k)
                        - u.at(i, j, k - 1)
                        - u.at(i, j, k + 1))
                        * inv_h2
                };
                out.set(i, j, k, v);
            }
        }
    }
    debug_assert!(out.is_finite());
    out
}

/// Residual `r = f - A u` at interior nodes, zero on the boundary.
///
/// Evaluated as a sum of neighbor differences rather than `6u - sum`, which
/// keeps the cancellation error small once the iterate is nearly converged.
pub fn residual(f: &Field, u: &Field) -> Field {
    assert_eq!(f.grid, u.grid, "residual needs f and u on the same grid");
    let g = u.grid;
    let n = g.nodes();
    let inv_h2 = 1.0 / (g.spacing * g.spacing);
    let mut out = Field::zeros(g);
    for k in 1..n[2] - 1 {
        for j in 1..n[1] - 1 {
            for i in 1..n[0] - 1 {
                let c = u.at(i, j, k);
                let diffs = (u.at(i - 1, j, k) - c)
                    + (u.at(i + 1, j, k) - c)
                    + (u.at(i, j - 1, k) - c)
                    + (u.at(i, j + 1, k) - c)
                    + (u.at(i, j, k - 1) - c)
                    + (u.at(i, j, k + 1) - c);
                out.set(i, j, k, f.at(i, j, k) + diffs * inv_h2);
            }
        }
    }
    debug_assert!(out.is_finite());
    out
}

/// Discrete L2 norm over interior nodes: `sqrt(h^3 * sum r^2)`.
pub fn norm(r: &Field) -> f64 {
    let g = r.grid;
    let n = g.nodes();
    let mut sum = 0.0;
    for k in 1..n[2] - 1 {
        for j in 1..n[1] - 1 {
            for i in 1..n[0] - 1 {
                let v = r.at(i, j, k);
                sum += v * v;
            }
        }
    }
    (g.spacing.powi(3) * sum).sqrt()
}

/// One lexicographic Gauss-Seidel sweep over the interior of `u`.
pub fn gs_sweep(u: &mut Field, f: &Field) {
    assert_eq!(f.grid, u.grid, "smoothing needs f and u on the same grid");
    let g = u.grid;
    let n = g.nodes();
    let h2 = g.spacing * g.spacing;
    for k in 1..n[2] - 1 {
        for j in 1..n[1] - 1 {
            for i in 1..n[0] - 1 {
                let v = (h2 * f.at(i, j, k)
                    + u.at(i - 1, j, k)
                    + u.at(i + 1, j, k)
                    + u.at(i, j - 1, k)
                    + u.at(i, j + 1, k)
                    + u.at(i, j, k - 1)
                    + u.at(i, j, k + 1))
                    / 6.0;
                u.set(i, j, k, v);
            }
        }
    }
}

const FW_1D: [f64; 3] = [0.25, 0.5, 0.25];

/// 27-point full weighting onto the next coarser grid. Boundary nodes are
/// injected from the coincident fine node.
pub fn restrict(fine: &Field) -> Field {
    let cg = fine
        .grid
        .coarsen()
        .expect("cannot restrict: cell counts must be even and >= 2");
    let cn = cg.nodes();
    let mut out = Field::zeros(cg);
    for k in 0..cn[2] {
        for j in 0..cn[1] {
            for i in 0..cn[0] {
                let (fi, fj, fk) = (2 * i, 2 * j, 2 * k);
                let v = if cg.is_boundary(i, j, k) {
                    fine.at(fi, fj, fk)
                } else {
                    let mut acc = 0.0;
                    for (dk, wk) in (-1i64..=1).zip(FW_1D) {
                        for (dj, wj) in (-1i64..=1).zip(FW_1D) {
                            for (di, wi) in (-1i64..=1).zip(FW_1D) {
                                acc += wi * wj * wk
                                    * fine.at(
                                        (fi as i64 + di) as usize,
                                        (fj as i64 + dj) as usize,
                                        (fk as i64 + dk) as usize,
                                    );
                            }
                        }
                    }
                    acc
                };
                out.set(i, j, k, v);
            }
        }
    }
    debug_assert!(out.is_finite());
    out
}

/// Trilinear interpolation onto the next finer grid; zero is injected at the
/// fine boundary (correction scheme).
pub fn prolongate(coarse: &Field) -> Field {
    let fg = coarse.grid.refine();
    let fn_ = fg.nodes();
    let mut out = Field::zeros(fg);
    for k in 0..fn_[2] {
        for j in 0..fn_[1] {
            for i in 0..fn_[0] {
                if fg.is_boundary(i, j, k) {
                    continue;
                }
                out.set(i, j, k, trilinear_at(coarse, i, j, k));
            }
        }
    }
    debug_assert!(out.is_finite());
    out
}

/// Value of the trilinear interpolant of `coarse` at fine node `(i, j, k)`
/// of the refined grid.
#[inline]
pub fn trilinear_at(coarse: &Field, i: usize, j: usize, k: usize) -> f64 {
    let (ci, ri) = (i / 2, i % 2);
    let (cj, rj) = (j / 2, j % 2);
    let (ck, rk) = (k / 2, k % 2);
    let mut acc = 0.0;
    for dk in 0..=rk {
        for dj in 0..=rj {
            for di in 0..=ri {
                acc += coarse.at(ci + di, cj + dj, ck + dk);
            }
        }
    }
    acc / ((1 + ri) * (1 + rj) * (1 + rk)) as f64
}
