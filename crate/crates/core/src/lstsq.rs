//! Least squares through orthogonal factorizations: Householder QR on the
//! full-rank path, SVD pseudo-inverse (minimum-norm minimizer) when the
//! matrix is numerically rank deficient.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value / R-diagonal cutoff for rank decisions.
const RANK_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub x: DVector<f64>,
    /// ‖A x − b‖₂.
    pub residual: f64,
    /// Set when A was numerically rank deficient; `x` is then the
    /// minimum-norm solution among the minimizers.
    pub rank_deficient: bool,
}

/// Minimize ‖A x − b‖₂ for a tall (p ≥ q) matrix.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LsqSolution> {
    let (p, q) = a.shape();
    if b.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "b has length {} but A has {} rows",
            b.len(),
            p
        )));
    }
    if p < q {
        return Err(Error::InvalidArgument(format!(
            "least_squares needs p >= q, got {}x{}",
            p, q
        )));
    }
    if q == 0 {
        return Ok(LsqSolution {
            x: DVector::zeros(0),
            residual: b.norm(),
            rank_deficient: false,
        });
    }

    let qr = a.clone().qr();
    let r = qr.r();
    let diag_max = (0..q).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    let full_rank = diag_max > 0.0
        && (0..q).all(|i| r[(i, i)].abs() > RANK_RTOL * diag_max);

    if full_rank {
        let qtb = qr.q().tr_mul(b);
        if let Some(x) = r.solve_upper_triangular(&qtb) {
            let residual = (a * &x - b).norm();
            return Ok(LsqSolution {
                x,
                residual,
                rank_deficient: false,
            });
        }
    }

    let svd = a.clone().svd(true, true);
    let sv_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let x = svd
        .solve(b, RANK_RTOL * sv_max.max(1e-300))
        .map_err(|e| Error::NumericalFailure(format!("SVD solve failed: {e}")))?;
    let residual = (a * &x - b).norm();
    Ok(LsqSolution {
        x,
        residual,
        rank_deficient: true,
    })
}
