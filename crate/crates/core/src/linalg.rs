//! Small dense linear-algebra kernels shared by the LP solver and the
//! analysis layer: LU with partial pivoting (with a transposed solve,
//! which the simplex pricing step needs) and an orthonormal null-space
//! basis built from a full Householder QR.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense LU factorization with partial (row) pivoting: P·A = L·U.
///
/// `L` has unit diagonal and is stored below the diagonal of `lu`;
/// `U` on and above. `perm[i]` is the source row of pivoted row `i`.
pub struct LuFactors {
    lu: DMatrix<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factor a square matrix. Fails if any pivot falls below `pivot_tol`
    /// relative to the largest entry of the matrix.
    pub fn factor(a: &DMatrix<f64>, pivot_tol: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let scale = a.amax().max(1.0);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for col in 0..n {
            // Pick the largest remaining entry in this column as pivot.
            let mut pivot_row = col;
            let mut pivot_val = lu[(col, col)].abs();
            for row in (col + 1)..n {
                let v = lu[(row, col)].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = row;
                }
            }
            if pivot_val < pivot_tol * scale {
                return Err(Error::NumericalFailure(format!(
                    "rank deficiency: pivot {:.3e} below tolerance at column {}",
                    pivot_val, col
                )));
            }
            if pivot_row != col {
                lu.swap_rows(pivot_row, col);
                perm.swap(pivot_row, col);
            }
            let inv_piv = 1.0 / lu[(col, col)];
            for row in (col + 1)..n {
                let factor = lu[(row, col)] * inv_piv;
                lu[(row, col)] = factor;
                if factor != 0.0 {
                    for j in (col + 1)..n {
                        lu[(row, j)] -= factor * lu[(col, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solve A·x = b in place.
    pub fn solve_in_place(&self, b: &mut DVector<f64>) {
        let n = self.dim();
        // Apply the row permutation.
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        // Forward substitution with unit-diagonal L.
        for i in 1..n {
            let mut sum = x[i];
            for k in 0..i {
                sum -= self.lu[(i, k)] * x[k];
            }
            x[i] = sum;
        }
        // Back substitution with U.
        for i in (0..n).rev() {
            let mut sum = x[i];
            for k in (i + 1)..n {
                sum -= self.lu[(i, k)] * x[k];
            }
            x[i] = sum / self.lu[(i, i)];
        }
        *b = x;
    }

    /// Solve Aᵀ·x = b in place.
    pub fn solve_transpose_in_place(&self, b: &mut DVector<f64>) {
        let n = self.dim();
        // Aᵀ = (P⁻¹ L U)ᵀ = Uᵀ Lᵀ P⁻ᵀ; solve Uᵀ y = b, then Lᵀ z = y,
        // then undo the permutation.
        let mut y = b.clone();
        for i in 0..n {
            let mut sum = y[i];
            for k in 0..i {
                sum -= self.lu[(k, i)] * y[k];
            }
            y[i] = sum / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum -= self.lu[(k, i)] * y[k];
            }
            y[i] = sum;
        }
        for i in 0..n {
            b[self.perm[i]] = y[i];
        }
    }
}

/// Orthonormal basis of the null space of `g` (m×n, m ≤ n), as the last
/// n−m columns of the full Q factor of a Householder QR of gᵀ.
///
/// Fails when g is numerically row-rank deficient.
pub fn orthonormal_null_basis(g: &DMatrix<f64>, rank_tol: f64) -> Result<DMatrix<f64>> {
    let m = g.nrows();
    let n = g.ncols();
    if m > n {
        return Err(Error::DimensionMismatch(format!(
            "null basis needs m <= n, got {}x{}",
            m, n
        )));
    }
    // Householder QR of gᵀ (n×m), accumulating the reflectors.
    let mut a = g.transpose();
    let scale = a.amax().max(1.0);
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(m);
    for col in 0..m {
        // Build the reflector for column `col` below the diagonal.
        let mut v = DVector::zeros(n);
        let mut norm_sq = 0.0;
        for i in col..n {
            let x = a[(i, col)];
            v[i] = x;
            norm_sq += x * x;
        }
        let norm = norm_sq.sqrt();
        if norm < rank_tol * scale {
            return Err(Error::NumericalFailure(format!(
                "rank deficiency: row {} of the sensing matrix is dependent",
                col
            )));
        }
        let alpha = if v[col] >= 0.0 { -norm } else { norm };
        v[col] -= alpha;
        let v_norm = v.norm();
        if v_norm > 0.0 {
            v /= v_norm;
            // Apply (I − 2vvᵀ) to the remaining columns.
            for j in col..m {
                let mut dot = 0.0;
                for i in col..n {
                    dot += v[i] * a[(i, j)];
                }
                let dot2 = 2.0 * dot;
                for i in col..n {
                    a[(i, j)] -= dot2 * v[i];
                }
            }
        }
        a[(col, col)] = alpha;
        reflectors.push(v);
    }
    // Null basis = Q·e_j for j = m..n: apply reflectors in reverse to unit vectors.
    let mut basis = DMatrix::zeros(n, n - m);
    for (jj, j) in (m..n).enumerate() {
        let mut q = DVector::zeros(n);
        q[j] = 1.0;
        for v in reflectors.iter().rev() {
            let dot2 = 2.0 * v.dot(&q);
            if dot2 != 0.0 {
                q.axpy(-dot2, v, 1.0);
            }
        }
        basis.set_column(jj, &q);
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lu_solves_match_direct_inverse() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, -2.0, 3.0, 1.0, 0.0, -1.0, 2.5]);
        let lu = LuFactors::factor(&a, 1e-12).unwrap();
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);

        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        assert_abs_diff_eq!((&a * &x - &b).amax(), 0.0, epsilon = 1e-12);

        let mut xt = b.clone();
        lu.solve_transpose_in_place(&mut xt);
        assert_abs_diff_eq!((a.transpose() * &xt - &b).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(LuFactors::factor(&a, 1e-9).is_err());
    }

    #[test]
    fn null_basis_block_identity() {
        // g = [I | 0]: null basis must span the trailing coordinates.
        let mut g = DMatrix::zeros(2, 5);
        g[(0, 0)] = 1.0;
        g[(1, 1)] = 1.0;
        let a = orthonormal_null_basis(&g, 1e-12).unwrap();
        assert_eq!(a.shape(), (5, 3));
        assert_abs_diff_eq!((&g * &a).amax(), 0.0, epsilon = 1e-12);
        // Orthonormal columns.
        let gram = a.transpose() * &a;
        assert_abs_diff_eq!((gram - DMatrix::identity(3, 3)).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn null_basis_square_matrix_is_empty() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 1.1]);
        let a = orthonormal_null_basis(&g, 1e-12).unwrap();
        assert_eq!(a.shape(), (2, 0));
    }
}
