//! Shared test-side oracle: an independent dense assembly and solve of the
//! 7-point Dirichlet system, written against the raw stencil definition so it
//! cannot inherit a bug from the library's own solver path.

#![allow(dead_code)]

use faultmg::grid::{BoxGrid, Field};
use nalgebra::{DMatrix, DVector};

/// Interior nodes of a grid in lexicographic order (z outer, x fastest).
pub fn interior_nodes(grid: &BoxGrid) -> Vec<[usize; 3]> {
    let n = grid.nodes();
    let mut out = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                if !grid.is_boundary(i, j, k) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Dense interior matrix of `-Delta` with the 7-point stencil, scaled `1/h^2`.
pub fn dense_matrix(grid: &BoxGrid) -> DMatrix<f64> {
    let nodes = interior_nodes(grid);
    let lookup = |p: [usize; 3]| nodes.iter().position(|&q| q == p);
    let m = nodes.len();
    let inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    let mut a = DMatrix::zeros(m, m);
    for (row, &[i, j, k]) in nodes.iter().enumerate() {
        a[(row, row)] = 6.0 * inv_h2;
        let nb = [
            [i - 1, j, k],
            [i + 1, j, k],
            [i, j - 1, k],
            [i, j + 1, k],
            [i, j, k - 1],
            [i, j, k + 1],
        ];
        for p in nb {
            if let Some(col) = lookup(p) {
                a[(row, col)] = -inv_h2;
            }
        }
    }
    a
}

/// Solve the Dirichlet problem `-Delta u = f` with boundary values taken from
/// `bc`, by dense LU on the interior system. Returns the full field.
pub fn dense_solve(grid: &BoxGrid, f: &Field, bc: &Field) -> Field {
    let nodes = interior_nodes(grid);
    let m = nodes.len();
    let mut out = bc.clone();
    if m == 0 {
        return out;
    }
    let a = dense_matrix(grid);
    let inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    let mut rhs = DVector::zeros(m);
    for (row, &[i, j, k]) in nodes.iter().enumerate() {
        let mut v = f.at(i, j, k);
        let nb = [
            [i - 1, j, k],
            [i + 1, j, k],
            [i, j - 1, k],
            [i, j + 1, k],
            [i, j, k - 1],
            [i, j, k + 1],
        ];
        for [ni, nj, nk] in nb {
            if grid.is_boundary(ni, nj, nk) {
                v += inv_h2 * bc.at(ni, nj, nk);
            }
        }
        rhs[row] = v;
    }
    let sol = a.lu().solve(&rhs).expect("oracle system is nonsingular");
    for (row, &[i, j, k]) in nodes.iter().enumerate() {
        out.set(i, j, k, sol[row]);
    }
    out
}

/// The Dirichlet data of the standard problem.
pub fn harmonic(x: f64, y: f64, z: f64) -> f64 {
    (std::f64::consts::PI * (x + 2.0_f64.sqrt() * y)).sin()
        * (3.0_f64.sqrt() * std::f64::consts::PI * z).sinh()
}

pub fn max_abs_diff(a: &Field, b: &Field) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
