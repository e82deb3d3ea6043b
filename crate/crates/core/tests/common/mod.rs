//! Independent oracles the integration suite checks the library against.
//! Each one recomputes its target quantity by a different route than the
//! implementation under test.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use tbp::SensingMatrix;

/// Exhaustive vertex enumeration for min ‖β‖₁ s.t. Gβ = y: solve every
/// square m×m column subsystem and keep the feasible vertex with the
/// smallest ℓ₁ norm. Exponential; for tiny instances only.
pub fn bp_enumeration_oracle(g: &SensingMatrix, y: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
    let (m, n) = (g.rows(), g.cols());
    assert!(m <= n);
    let mut subset: Vec<usize> = (0..m).collect();
    let mut best: Option<(f64, DVector<f64>)> = None;
    loop {
        let sub = g.select_columns(&subset);
        if let Some(lu) = sub.clone().lu().solve(y) {
            let residual = (&sub * &lu - y).amax();
            if residual <= 1e-9 * y.amax().max(1.0) {
                let obj: f64 = lu.iter().map(|v| v.abs()).sum();
                let mut full = DVector::zeros(n);
                for (idx, &j) in subset.iter().enumerate() {
                    full[j] = lu[idx];
                }
                match &best {
                    Some((b, _)) if *b <= obj => {}
                    _ => best = Some((obj, full)),
                }
            }
        }
        if !next_combination(&mut subset, n) {
            break;
        }
    }
    best
}

/// Least squares through the normal equations, (AᵀA)⁻¹Aᵀb.
pub fn normal_equations_lsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let ata = a.tr_mul(a);
    let atb = a.tr_mul(b);
    ata.try_inverse().expect("well-conditioned oracle instance") * atb
}

/// LASSO by plain proximal gradient (ISTA) with a conservative step,
/// iterated to a much tighter stationarity level than the solver under
/// test uses.
pub fn ista_lasso(
    g: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    stationarity_tol: f64,
) -> DVector<f64> {
    let n = g.ncols();
    let gram = g.tr_mul(g);
    let lipschitz = SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let step = 0.5 / lipschitz;
    let mut beta = DVector::zeros(n);
    for _ in 0..5_000_000usize {
        let residual = y - g * &beta;
        let grad = g.tr_mul(&residual);
        let mut worst = 0.0f64;
        for j in 0..n {
            let v = if beta[j] == 0.0 {
                (grad[j].abs() - lambda).max(0.0)
            } else {
                (grad[j] - lambda * beta[j].signum()).abs()
            };
            worst = worst.max(v);
        }
        if worst <= stationarity_tol {
            break;
        }
        for j in 0..n {
            let z = beta[j] + step * grad[j];
            let t = step * lambda;
            beta[j] = if z > t {
                z - t
            } else if z < -t {
                z + t
            } else {
                0.0
            };
        }
    }
    beta
}

/// δ₂ by scanning all column pairs with the closed-form 2×2 symmetric
/// eigenvalues.
pub fn pairwise_rip_oracle(g: &SensingMatrix) -> f64 {
    let n = g.cols();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = g.column(i).norm_squared();
            let c = g.column(j).norm_squared();
            let b = g.column(i).dot(&g.column(j));
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            worst = worst.max((mid + rad - 1.0).max(1.0 - (mid - rad)));
        }
    }
    worst
}

/// Orthonormal basis of null(G) by classical Gram-Schmidt: orthonormalize
/// the rows of G, then sweep the coordinate vectors, keeping each
/// component orthogonal to everything collected so far.
pub fn gram_schmidt_null_complement(g: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = g.shape();
    let mut collected: Vec<DVector<f64>> = Vec::new();
    for i in 0..m {
        let mut r = g.row(i).transpose();
        for q in &collected {
            let d = q.dot(&r);
            r.axpy(-d, q, 1.0);
        }
        let norm = r.norm();
        assert!(norm > 1e-10, "oracle expects full row rank");
        collected.push(r / norm);
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        if basis.len() == n - m {
            break;
        }
        let mut r = DVector::zeros(n);
        r[i] = 1.0;
        for q in collected.iter().chain(basis.iter()) {
            let d = q.dot(&r);
            r.axpy(-d, q, 1.0);
        }
        // Re-orthogonalize once; classical GS drifts.
        for q in collected.iter().chain(basis.iter()) {
            let d = q.dot(&r);
            r.axpy(-d, q, 1.0);
        }
        let norm = r.norm();
        if norm > 1e-8 {
            basis.push(r / norm);
        }
    }
    assert_eq!(basis.len(), n - m);
    DMatrix::from_columns(&basis)
}

/// A column-normalized simplex frame perturbed by Gaussian noise of size
/// `eta`: n = m+1 unit columns with pairwise coherence near 1/m. The
/// small-scale family whose exact RIP constants stay below 1/7.
pub fn perturbed_simplex_frame(m: usize, eta: f64, rng: &mut impl rand::Rng) -> SensingMatrix {
    use rand_distr::StandardNormal;
    let n = m + 1;
    // Orthonormal basis of the complement of the all-ones direction.
    let ones = DMatrix::from_element(1, n, 1.0);
    let basis = null_basis_of(&ones);
    let mut g = basis.transpose();
    for i in 0..m {
        for j in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            g[(i, j)] += eta * z;
        }
    }
    for j in 0..n {
        let norm = g.column(j).norm();
        for i in 0..m {
            g[(i, j)] /= norm;
        }
    }
    SensingMatrix::from_matrix(g)
}

fn null_basis_of(a: &DMatrix<f64>) -> DMatrix<f64> {
    gram_schmidt_null_complement(a)
}

pub fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in (i + 1)..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Two binomial standard errors of an empirical success probability.
pub fn two_binomial_se(p_hat: f64, trials: usize) -> f64 {
    2.0 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt()
}
