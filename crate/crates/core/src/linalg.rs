//! Small dense helpers over row-major `d×d` slices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

fn to_matrix(dim: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(dim, dim, data)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub(crate) fn symmetric_eigenvalues(dim: usize, data: &[f64]) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(to_matrix(dim, data))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub(crate) fn determinant(dim: usize, data: &[f64]) -> f64 {
    to_matrix(dim, data).determinant()
}

/// Symmetric square root `V diag(√λ) Vᵀ`; negative round-off eigenvalues are
/// clamped to zero.
pub(crate) fn symmetric_sqrt(dim: usize, data: &[f64]) -> Vec<f64> {
    let eig = SymmetricEigen::new(to_matrix(dim, data));
    let v = &eig.eigenvectors;
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[i * dim + j] = (0..dim)
                .map(|k| v[(i, k)] * eig.eigenvalues[k].max(0.0).sqrt() * v[(j, k)])
                .sum();
        }
    }
    out
}

/// Diagonally pivoted Cholesky factor `F` (row-major `d×d`) with `F Fᵀ = R`,
/// tolerant of positive semidefinite `R`.
///
/// Elimination stops once the largest remaining diagonal falls below
/// `tol · max_i R_ii`; the remaining columns are zero, so a rank-`r` input
/// gives a factor with `r` non-zero columns.
pub(crate) fn pivoted_cholesky(dim: usize, data: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut a = data.to_vec();
    let mut perm: Vec<usize> = (0..dim).collect();
    // factor of the permuted matrix, row-major
    let mut l = vec![0.0; dim * dim];
    let scale = (0..dim).map(|i| data[i * dim + i]).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(l);
    }
    let cutoff = tol * scale;

    for k in 0..dim {
        let (piv, piv_val) = (k..dim)
            .map(|i| (i, a[perm[i] * dim + perm[i]]))
            .fold((k, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        if piv_val < -cutoff.max(1e-10 * scale) {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: piv_val,
            });
        }
        if piv_val <= cutoff {
            // a PSD Schur complement with a negligible diagonal is negligible everywhere
            let worst = (k..dim)
                .flat_map(|i| (k..dim).map(move |j| (i, j)))
                .map(|(i, j)| a[perm[i] * dim + perm[j]].abs())
                .fold(0.0, f64::max);
            if worst > cutoff.max(1e-8 * scale) {
                return Err(Error::NotPositiveSemidefinite {
                    min_eigenvalue: -worst,
                });
            }
            break;
        }
        perm.swap(k, piv);
        l.swap_rows(k, piv, dim);

        let pk = perm[k];
        let d = piv_val.sqrt();
        l[k * dim + k] = d;
        for i in k + 1..dim {
            let pi = perm[i];
            l[i * dim + k] = a[pi * dim + pk] / d;
        }
        for i in k + 1..dim {
            let pi = perm[i];
            for j in k + 1..=i {
                let pj = perm[j];
                let upd = a[pi * dim + pj] - l[i * dim + k] * l[j * dim + k];
                a[pi * dim + pj] = upd;
                a[pj * dim + pi] = upd;
            }
        }
    }

    // undo the permutation: row perm[i] of F is row i of L
    let mut f = vec![0.0; dim * dim];
    for i in 0..dim {
        f[perm[i] * dim..perm[i] * dim + dim].copy_from_slice(&l[i * dim..i * dim + dim]);
    }
    Ok(f)
}

trait SwapRows {
    fn swap_rows(&mut self, a: usize, b: usize, dim: usize);
}

impl SwapRows for Vec<f64> {
    fn swap_rows(&mut self, a: usize, b: usize, dim: usize) {
        if a != b {
            for j in 0..dim {
                self.swap(a * dim + j, b * dim + j);
            }
        }
    }
}

/// `y = M x` for row-major `M`.
pub(crate) fn mat_vec(dim: usize, m: &[f64], x: &[f64], y: &mut [f64]) {
    for i in 0..dim {
        y[i] = m[i * dim..i * dim + dim]
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum();
    }
}
