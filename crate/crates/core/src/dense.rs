//! Dense direct solve of the 7-point Dirichlet system on a box.
//!
//! Used for the coarse-level solve of the global cycle and for the coarsest
//! level of the local recovery hierarchy. Grids there are small, so an LU
//! factorization of the interior matrix is cheap and cached.

use nalgebra::{DMatrix, DVector, LU};

use crate::grid::{BoxGrid, Field};

/// LU-factored interior matrix of the 7-point stencil on one grid.
pub struct DenseSolver {
    grid: BoxGrid,
    interior: Vec<[usize; 3]>,
    index: Vec<Option<usize>>,
    lu: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl DenseSolver {
    pub fn new(grid: BoxGrid) -> Self {
        let n = grid.nodes();
        let mut interior = Vec::new();
        let mut index = vec![None; grid.node_count()];
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    if !grid.is_boundary(i, j, k) {
                        index[grid.idx(i, j, k)] = Some(interior.len());
                        interior.push([i, j, k]);
                    }
                }
            }
        }
        let m = interior.len();
        let lu = if m == 0 {
            None
        } else {
            let inv_h2 = 1.0 / (grid.spacing * grid.spacing);
            let mut a = DMatrix::<f64>::zeros(m, m);
            for (row, &[i, j, k]) in interior.iter().enumerate() {
                a[(row, row)] = 6.0 * inv_h2;
                for (ni, nj, nk) in neighbors(i, j, k) {
                    if let Some(col) = index[grid.idx(ni, nj, nk)] {
                        a[(row, col)] = -inv_h2;
                    }
                }
            }
            Some(a.lu())
        };
        Self { grid, interior, index, lu }
    }

    pub fn unknowns(&self) -> usize {
        self.interior.len()
    }

    /// Solve `A u = f` with Dirichlet values taken from the boundary nodes of
    /// `boundary_values`. Returns the full field (boundary copied through).
    pub fn solve(&self, f: &Field, boundary_values: &Field) -> Field {
        assert_eq!(f.grid, self.grid);
        assert_eq!(boundary_values.grid, self.grid);
        let mut out = boundary_values.clone();
        let m = self.interior.len();
        if m == 0 {
            return out;
        }
        let inv_h2 = 1.0 / (self.grid.spacing * self.grid.spacing);
        let mut rhs = DVector::<f64>::zeros(m);
        for (row, &[i, j, k]) in self.interior.iter().enumerate() {
            let mut v = f.at(i, j, k);
            for (ni, nj, nk) in neighbors(i, j, k) {
                if self.index[self.grid.idx(ni, nj, nk)].is_none() {
                    v += inv_h2 * boundary_values.at(ni, nj, nk);
                }
            }
            rhs[row] = v;
        }
        let sol = self
            .lu
            .as_ref()
            .unwrap()
            .solve(&rhs)
            .expect("Dirichlet 7-point system is nonsingular");
        for (row, &[i, j, k]) in self.interior.iter().enumerate() {
            out.set(i, j, k, sol[row]);
        }
        out
    }
}

#[inline]
fn neighbors(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    // interior nodes only, so all six offsets are in range
    [
        (i - 1, j, k),
        (i + 1, j, k),
        (i, j - 1, k),
        (i, j + 1, k),
        (i, j, k - 1),
        (i, j, k + 1),
    ]
}
