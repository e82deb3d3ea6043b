//! Theory constants and structural verifiers: exact restricted-isometry
//! constants at small scale, the ℓ₂-stability constant C_s, the admissible
//! noise level ε₀, the null-space reformulation of basis pursuit, the
//! minimum-norm output-to-input noise conversion, and the empirical
//! critical noise scale γ₀.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::ensembles::{SensingMatrix, SparseSignal};
use crate::error::{Error, Result};
use crate::linalg::orthonormal_null_basis;
use crate::lp::{LpSolution, ToleranceSet};
use crate::lstsq::least_squares;
use crate::recovery::{compute_metrics, tbp};
use crate::RngStream;

/// Hard cap on enumerated supports in exact RIP mode.
pub const RIP_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RipMethod {
    ExactEnumeration,
    MonteCarloLowerBound,
}

/// The restricted-isometry constant δ_k of a matrix, with the support
/// attaining it.
#[derive(Debug, Clone)]
pub struct RipReport {
    pub k: usize,
    pub delta_k: f64,
    pub extremal_support: Vec<usize>,
    pub method: RipMethod,
}

/// Closed-form constants of the linear-sparsity noise-tolerance analysis.
#[derive(Debug, Clone, Copy)]
pub struct TheoryConstants {
    /// Sparsity ratio k/n.
    pub alpha: f64,
    /// Dimension-to-measurement ratio n/m.
    pub c: f64,
    /// ℓ₂-stability constant.
    pub c_s: f64,
    pub d1: f64,
    pub d2: f64,
    /// Admissible ℓ∞ input-noise level: ½ (1 + d₁ + d₂√(2 log n))⁻¹.
    pub epsilon0: f64,
}

/// Orthonormal basis of null(G).
#[derive(Debug, Clone)]
pub struct NullSpaceBasis {
    /// n×(n−m) matrix whose columns span null(G).
    pub a: DMatrix<f64>,
    /// Shape of the matrix it was derived from.
    pub source_shape: (usize, usize),
}

fn delta_of_support(gram: &DMatrix<f64>, support: &[usize]) -> f64 {
    let k = support.len();
    let sub = DMatrix::from_fn(k, k, |i, j| gram[(support[i], support[j])]);
    let eigen = SymmetricEigen::new(sub);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eigen.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (hi - 1.0).max(1.0 - lo)
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > 10 * RIP_ENUMERATION_CAP {
            return acc;
        }
    }
    acc
}

fn next_combination(subset: &mut [usize], n: usize) -> bool {
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

/// Exact δ_k by enumerating every size-k support. The maximum over
/// |T| ≤ k is attained at |T| = k by eigenvalue interlacing, so only
/// size-k supports are scanned.
pub fn rip_exact(g: &SensingMatrix, k: usize) -> Result<RipReport> {
    let n = g.cols();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "RIP order k = {} out of range 1..={}",
            k, n
        )));
    }
    let count = binomial(n as u128, k as u128);
    if count > RIP_ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!(
            "C({}, {}) = {} supports exceeds the exact-mode cap {}",
            n, k, count, RIP_ENUMERATION_CAP
        )));
    }
    let gram = g.matrix().tr_mul(g.matrix());
    let mut subset: Vec<usize> = (0..k).collect();
    let mut best = f64::NEG_INFINITY;
    let mut best_support = subset.clone();
    loop {
        let d = delta_of_support(&gram, &subset);
        if d > best {
            best = d;
            best_support = subset.clone();
        }
        if !next_combination(&mut subset, n) {
            break;
        }
    }
    Ok(RipReport {
        k,
        delta_k: best,
        extremal_support: best_support,
        method: RipMethod::ExactEnumeration,
    })
}

/// Lower-bound δ_k from randomly sampled supports.
pub fn rip_monte_carlo(
    g: &SensingMatrix,
    k: usize,
    samples: usize,
    rng: RngStream,
) -> Result<RipReport> {
    let n = g.cols();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "RIP order k = {} out of range 1..={}",
            k, n
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let gram = g.matrix().tr_mul(g.matrix());
    let mut r = rng.rng();
    use rand::Rng;
    let mut best = f64::NEG_INFINITY;
    let mut best_support = Vec::new();
    let mut pool: Vec<usize> = (0..n).collect();
    for _ in 0..samples {
        for i in 0..k {
            let j = r.random_range(i..n);
            pool.swap(i, j);
        }
        let mut support = pool[..k].to_vec();
        support.sort_unstable();
        let d = delta_of_support(&gram, &support);
        if d > best {
            best = d;
            best_support = support;
        }
    }
    Ok(RipReport {
        k,
        delta_k: best,
        extremal_support: best_support,
        method: RipMethod::MonteCarloLowerBound,
    })
}

/// The ℓ₂-stability constant with the block size fixed at M = 2k:
/// C_s = √2 (√(1+δ_2k)(1 + 1/√2)/C_M + 1) where
/// C_M = √(1−δ_3k) − √((1+δ_2k)/2). Requires C_M > 0.
pub fn compute_cs(delta_2k: f64, delta_3k: f64) -> Result<f64> {
    if delta_2k < 0.0 || delta_3k < 0.0 {
        return Err(Error::DomainError("RIP constants must be nonnegative".into()));
    }
    if delta_3k >= 1.0 {
        return Err(Error::DomainError(format!(
            "delta_3k = {} leaves no isometry margin",
            delta_3k
        )));
    }
    let c_m = (1.0 - delta_3k).sqrt() - ((1.0 + delta_2k) / 2.0).sqrt();
    if c_m <= 0.0 {
        return Err(Error::DomainError(format!(
            "C_M = {:.6} is not positive for (delta_2k, delta_3k) = ({}, {})",
            c_m, delta_2k, delta_3k
        )));
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    Ok(sqrt2 * ((1.0 + delta_2k).sqrt() * (1.0 + 1.0 / sqrt2) / c_m + 1.0))
}

/// The constants d₁, d₂ and the admissible noise level ε₀ of the
/// linear-sparsity regime, at sparsity ratio alpha and dimension ratio c.
pub fn compute_epsilon0(alpha: f64, c: f64, c_s: f64, n: usize) -> Result<TheoryConstants> {
    if !(c > 1.0) {
        return Err(Error::DomainError(format!(
            "dimension ratio C must exceed 1, got {}",
            c
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(format!(
            "sparsity ratio alpha must lie in (0, 1), got {}",
            alpha
        )));
    }
    if c_s <= 0.0 || n < 2 {
        return Err(Error::DomainError("need C_s > 0 and n >= 2".into()));
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let ratio = (c / (c - 1.0)).sqrt();
    let gain = 1.0 / (ratio - 1.0);
    let d1 = (2.0 * sqrt2 / alpha) * gain * c_s;
    let d2 = (2.0 * sqrt2 / alpha.sqrt()) * gain * ratio * c_s;
    let epsilon0 = 0.5 / (1.0 + d1 + d2 * (2.0 * (n as f64).ln()).sqrt());
    Ok(TheoryConstants {
        alpha,
        c,
        c_s,
        d1,
        d2,
        epsilon0,
    })
}

/// Orthonormal basis of null(G) via a full Householder QR of Gᵀ.
pub fn null_space_basis(g: &SensingMatrix) -> Result<NullSpaceBasis> {
    let a = orthonormal_null_basis(g.matrix(), 1e-10)?;
    let scale = g.matrix().amax().max(1e-300) * a.amax().max(1.0);
    let residual = (g.matrix() * &a).amax();
    if residual > 1e-10 * scale {
        return Err(Error::NumericalFailure(format!(
            "null-space residual {:.3e} exceeds tolerance",
            residual
        )));
    }
    Ok(NullSpaceBasis {
        a,
        source_shape: (g.rows(), g.cols()),
    })
}

/// Certify that a basis-pursuit solution lies in the affine space
/// (x + w) + range(A) with A spanning null(G): returns
/// ‖(x+w) + A·v̂ − β̂‖∞ for the least-squares v̂.
pub fn verify_null_space_equivalence(
    g: &SensingMatrix,
    y: &DVector<f64>,
    x_plus_w: &DVector<f64>,
    sol: &LpSolution,
    tol: &ToleranceSet,
) -> Result<f64> {
    if x_plus_w.len() != g.cols() {
        return Err(Error::DimensionMismatch("x_plus_w length mismatch".into()));
    }
    let feas = (g.matrix() * x_plus_w - y).amax();
    if feas > tol.feas_tol * y.amax().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "y is not G(x+w): residual {:.3e}",
            feas
        )));
    }
    let basis = null_space_basis(g)?;
    let target = &sol.beta - x_plus_w;
    let fit = least_squares(&basis.a, &target)?;
    let deviation = (x_plus_w + &basis.a * fit.x - &sol.beta).amax();
    Ok(deviation)
}

/// Minimum-ℓ₂-norm solution of Gw = e, computed through a QR
/// factorization of Gᵀ (w = Q R⁻ᵀ e, which lies in the row space of G).
pub fn min_norm_noise(g: &SensingMatrix, e: &DVector<f64>) -> Result<DVector<f64>> {
    if e.len() != g.rows() {
        return Err(Error::DimensionMismatch(format!(
            "e has length {} but G has {} rows",
            e.len(),
            g.rows()
        )));
    }
    let qr = g.matrix().transpose().qr();
    let r = qr.r();
    let m = g.rows();
    let diag_max = (0..m).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if diag_max == 0.0 || (0..m).any(|i| r[(i, i)].abs() < 1e-12 * diag_max) {
        return Err(Error::NumericalFailure(
            "sensing matrix is numerically row-rank deficient".into(),
        ));
    }
    let z = r
        .transpose()
        .solve_lower_triangular(e)
        .ok_or_else(|| Error::NumericalFailure("triangular solve failed".into()))?;
    let w = qr.q() * z;
    let residual = (g.matrix() * &w - e).amax();
    if residual > 1e-8 * e.amax().max(1e-300) && residual > 1e-14 {
        return Err(Error::NumericalFailure(format!(
            "Gw = e residual {:.3e} too large",
            residual
        )));
    }
    Ok(w)
}

/// Pass/fail record for the ℓ∞ and ℓ₁ bounds on the minimum-norm noise.
#[derive(Debug, Clone, Copy)]
pub struct BoundReport {
    pub linf_norm: f64,
    pub linf_bound: f64,
    pub linf_ok: bool,
    pub l1_norm: f64,
    pub l1_bound: f64,
    pub l1_ok: bool,
}

/// Check ‖w‖∞ ≤ 2ε(√C−1)⁻¹√(2 log n) and ‖w‖₁ ≤ 2√(2C)(√C−1)⁻¹ mε
/// for a minimum-norm solution of Gw = e with noise level ε.
pub fn check_min_norm_bounds(
    g: &SensingMatrix,
    w: &DVector<f64>,
    eps: f64,
) -> Result<BoundReport> {
    let (m, n) = (g.rows() as f64, g.cols() as f64);
    let c = n / m;
    if c <= 1.0 {
        return Err(Error::DomainError(format!(
            "bounds need C = n/m > 1, got {}",
            c
        )));
    }
    if eps < 0.0 {
        return Err(Error::InvalidArgument("eps must be nonnegative".into()));
    }
    let sqrt_c = c.sqrt();
    let linf_bound = 2.0 * eps / (sqrt_c - 1.0) * (2.0 * n.ln()).sqrt();
    let l1_bound = 2.0 * (2.0 * c).sqrt() / (sqrt_c - 1.0) * m * eps;
    let linf_norm = w.amax();
    let l1_norm = w.iter().map(|v| v.abs()).sum();
    Ok(BoundReport {
        linf_norm,
        linf_bound,
        linf_ok: linf_norm <= linf_bound,
        l1_norm,
        l1_bound,
        l1_ok: l1_norm <= l1_bound,
    })
}

/// Result of the bisection for the critical noise scale.
#[derive(Debug, Clone, Copy)]
pub struct Gamma0Estimate {
    /// Largest tested ε at which TBP still misses nothing.
    pub value: f64,
    /// Set when recovery already fails at the smallest bracket (value 0).
    pub failed_at_smallest: bool,
    /// Set when the geometric growth hit its cap without a failure.
    pub bracket_capped: bool,
}

/// Empirical critical input-noise scale along a fixed unit-ℓ∞ direction:
/// the largest ε for which TBP on y = G(x + εw) still recovers every
/// support sign. Bracket grown geometrically from 2⁻²⁰, then bisected
/// (at most 40 steps, stopping at relative width `rel_tol`).
pub fn empirical_gamma0(
    g: &SensingMatrix,
    x: &SparseSignal,
    w_direction: &DVector<f64>,
    rel_tol: f64,
    tol: &ToleranceSet,
) -> Result<Gamma0Estimate> {
    if w_direction.len() != g.cols() {
        return Err(Error::DimensionMismatch("direction length mismatch".into()));
    }
    if (w_direction.amax() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "w_direction must have unit ℓ∞ norm, got {}",
            w_direction.amax()
        )));
    }
    if x.x_min() <= 0.0 {
        return Err(Error::InvalidArgument(
            "signal must have at least one support entry".into(),
        ));
    }
    let xd = x.to_dense();
    let no_miss = |eps: f64| -> Result<bool> {
        let y = g.matrix() * (&xd + eps * w_direction);
        let report = tbp(g, &y, x.x_min(), tol)?;
        let m = compute_metrics(x, &report.estimate)?;
        Ok(m.n_miss == 0)
    };

    if !no_miss(0.0)? {
        return Err(Error::InvalidArgument(
            "noiseless instance does not recover exactly; γ₀ is undefined here".into(),
        ));
    }
    let mut lo = 2f64.powi(-20);
    if !no_miss(lo)? {
        return Ok(Gamma0Estimate {
            value: 0.0,
            failed_at_smallest: true,
            bracket_capped: false,
        });
    }
    let mut hi = 2.0 * lo;
    let mut doublings = 0;
    while no_miss(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings >= 60 {
            return Ok(Gamma0Estimate {
                value: lo,
                failed_at_smallest: false,
                bracket_capped: true,
            });
        }
    }
    for _ in 0..40 {
        if hi - lo <= rel_tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if no_miss(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Gamma0Estimate {
        value: lo,
        failed_at_smallest: false,
        bracket_capped: false,
    })
}

/// Check max{N_m, N_f} ≤ (n/α)(2 C_s ε / (1 − 2ε))² for an evaluated
/// recovery report. Requires ε < ½ and 0 < α ≤ 1.
pub fn corollary_bound_check(
    report: &crate::recovery::RecoveryReport,
    c_s: f64,
    alpha: f64,
    eps: f64,
) -> Result<bool> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::DomainError(format!(
            "bound requires 0 <= eps < 1/2, got {}",
            eps
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1], got {}",
            alpha
        )));
    }
    let metrics = report.metrics.as_ref().ok_or_else(|| {
        Error::InvalidArgument("report must be evaluated against the truth first".into())
    })?;
    let n = report.estimate.len() as f64;
    let bound = (n / alpha) * (2.0 * c_s * eps / (1.0 - 2.0 * eps)).powi(2);
    Ok((metrics.n_miss as f64) <= bound && (metrics.n_false as f64) <= bound)
}
