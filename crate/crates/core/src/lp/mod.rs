//! Basis pursuit as a linear program, solved to a vertex with an explicit
//! optimal basis and a dual optimality certificate.

mod simplex;

use nalgebra::DVector;

use crate::ensembles::SensingMatrix;
use crate::error::{Error, Result};

/// Numerical tolerances for the LP solver and its certificates.
#[derive(Debug, Clone)]
pub struct ToleranceSet {
    /// Feasibility: ‖Gβ̂ − y‖∞ ≤ feas_tol · max(1, ‖y‖∞).
    pub feas_tol: f64,
    /// Minimum acceptable pivot magnitude in factorizations and ratio tests.
    pub pivot_tol: f64,
    /// Dual feasibility / complementary-slackness slack.
    pub dual_tol: f64,
    /// Duality gap: |πᵀy − ‖β̂‖₁| ≤ gap_tol · max(1, ‖β̂‖₁).
    pub gap_tol: f64,
    /// Iteration cap = iter_cap_factor · (n + m).
    pub iter_cap_factor: usize,
    /// Pivots between basis refactorizations.
    pub refactor_interval: usize,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            pivot_tol: 1e-9,
            dual_tol: 1e-7,
            gap_tol: 1e-6,
            iter_cap_factor: 50,
            refactor_interval: 100,
        }
    }
}

/// Termination state of a certified solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    /// Optimal, but the vertex is degenerate (a basic value is ~0).
    Degenerate,
}

/// A vertex solution of min ‖β‖₁ s.t. y = Gβ.
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Primal estimate β̂ (at most m nonzeros).
    pub beta: DVector<f64>,
    /// Column indices of G forming the optimal basis, sorted; |basis| = m.
    pub basis: Vec<usize>,
    /// Dual vector π of the constraint rows.
    pub duals: DVector<f64>,
    /// ‖β̂‖₁.
    pub objective: f64,
    pub status: LpStatus,
    pub iterations: usize,
}

impl LpSolution {
    pub fn nnz(&self) -> usize {
        self.beta.iter().filter(|v| **v != 0.0).count()
    }
}

/// Certificate quantities extracted from a solve.
#[derive(Debug, Clone, Copy)]
pub struct CertificateReport {
    /// max_j |πᵀ G_j|; dual feasibility needs this ≤ 1 + dual_tol.
    pub max_dual_correlation: f64,
    /// Worst violation of πᵀG_j = sgn(β̂_j) over nonzero β̂_j.
    pub worst_slackness: f64,
    /// |πᵀ y − ‖β̂‖₁|.
    pub duality_gap: f64,
    /// ‖Gβ̂ − y‖∞.
    pub feasibility_residual: f64,
}

impl CertificateReport {
    pub fn passes(&self, tol: &ToleranceSet, y_scale: f64, obj_scale: f64) -> bool {
        self.feasibility_residual <= tol.feas_tol * y_scale.max(1.0)
            && self.max_dual_correlation <= 1.0 + tol.dual_tol
            && self.worst_slackness <= tol.dual_tol
            && self.duality_gap <= tol.gap_tol * obj_scale.max(1.0)
    }
}

/// Solve min ‖β‖₁ s.t. y = Gβ to a certified vertex solution.
///
/// Uses the split formulation with a two-phase revised simplex (Dantzig
/// pricing, Bland's rule after a degenerate stall). A solve that cannot
/// produce a passing certificate is retried once with Bland pricing and
/// per-pivot refactorization before reporting failure.
pub fn basis_pursuit(
    g: &SensingMatrix,
    y: &DVector<f64>,
    tol: &ToleranceSet,
) -> Result<LpSolution> {
    if y.len() != g.rows() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {} but G has {} rows",
            y.len(),
            g.rows()
        )));
    }
    match solve_once(g, y, tol, tol.refactor_interval, false) {
        Ok(sol) => Ok(sol),
        Err(_) => solve_once(g, y, tol, 1, true),
    }
}

fn solve_once(
    g: &SensingMatrix,
    y: &DVector<f64>,
    tol: &ToleranceSet,
    refactor_interval: usize,
    force_bland: bool,
) -> Result<LpSolution> {
    let outcome = simplex::Simplex::new(g, y, tol, refactor_interval, force_bland)?.solve()?;

    let n = g.cols();
    let mut beta = DVector::zeros(n);
    let mut basis = Vec::with_capacity(g.rows());
    for (pos, &var) in outcome.basic_vars.iter().enumerate() {
        let value = outcome.basic_values[pos];
        if var < n {
            beta[var] += value;
            basis.push(var);
        } else {
            beta[var - n] -= value;
            basis.push(var - n);
        }
    }
    basis.sort_unstable();
    let objective: f64 = beta.iter().map(|v: &f64| v.abs()).sum();

    let status = if outcome.min_basic_value <= 1e-11 * y.amax().max(1.0) {
        LpStatus::Degenerate
    } else {
        LpStatus::Optimal
    };
    let sol = LpSolution {
        beta,
        basis,
        duals: outcome.duals,
        objective,
        status,
        iterations: outcome.iterations,
    };

    let report = certificate(&sol, g, y);
    if !report.passes(tol, y.amax(), sol.objective) {
        return Err(Error::NumericalFailure(format!(
            "optimality certificate failed: residual {:.2e}, dual {:.2e}, slack {:.2e}, gap {:.2e}",
            report.feasibility_residual,
            report.max_dual_correlation,
            report.worst_slackness,
            report.duality_gap
        )));
    }
    Ok(sol)
}

fn certificate(sol: &LpSolution, g: &SensingMatrix, y: &DVector<f64>) -> CertificateReport {
    let corr = g.matrix().tr_mul(&sol.duals);
    let max_dual_correlation = corr.amax();
    let mut worst_slackness = 0.0f64;
    for j in 0..g.cols() {
        let b = sol.beta[j];
        if b != 0.0 {
            worst_slackness = worst_slackness.max((corr[j] - b.signum()).abs());
        }
    }
    let duality_gap = (sol.duals.dot(y) - sol.objective).abs();
    let feasibility_residual = (g.matrix() * &sol.beta - y).amax();
    CertificateReport {
        max_dual_correlation,
        worst_slackness,
        duality_gap,
        feasibility_residual,
    }
}

/// Recompute the dual certificate of a solved instance.
pub fn extract_dual_certificate(
    sol: &LpSolution,
    g: &SensingMatrix,
    y: &DVector<f64>,
) -> CertificateReport {
    certificate(sol, g, y)
}
