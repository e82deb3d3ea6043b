//! Recovery algorithms: thresholded basis pursuit (TBP), its two-block
//! TBP+OLS refinement, and the comparison baselines (LASSO by cyclic
//! coordinate descent, max-correlation, exhaustive maximum likelihood).

use std::time::Instant;

use nalgebra::DVector;

use crate::ensembles::{SensingMatrix, SparseSignal};
use crate::error::{Error, Result};
use crate::lp::{basis_pursuit, LpStatus, ToleranceSet};
use crate::lstsq::least_squares;

/// Entries of a reported LASSO estimate below this magnitude count as zero
/// when the support is extracted from the raw solution.
pub const LASSO_SUPPORT_CUTOFF: f64 = 1e-6;

/// Miss / false-alarm counts of an estimate against the ground truth.
///
/// A support entry is counted as recovered only when its sign matches,
/// so `n_miss` is the number of true entries without a sign match and
/// `n_false` the number of estimated entries without one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportMetrics {
    pub n_miss: usize,
    pub n_false: usize,
    pub exact_sign_recovery: bool,
    pub l2_error: f64,
}

/// Outcome of one recovery run. Metric fields are filled by
/// [`RecoveryReport::evaluate`] once the caller supplies the ground truth.
#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub estimate: DVector<f64>,
    /// Indices of nonzero estimate entries, sorted.
    pub est_support: Vec<usize>,
    /// Sign (±1) per `est_support` entry.
    pub est_signs: Vec<f64>,
    pub metrics: Option<SupportMetrics>,
    pub runtime_ms: f64,
    /// Summary of the LP solve behind the estimate, when there was one.
    pub solver_stats: Option<LpSummary>,
    /// Residual of the least-squares fit behind the estimate, when there was one.
    pub fit_residual: Option<f64>,
    /// False only for iterative solvers that hit their iteration cap.
    pub converged: bool,
}

/// Compact view of an [`crate::lp::LpSolution`].
#[derive(Debug, Clone, Copy)]
pub struct LpSummary {
    pub status: LpStatus,
    pub iterations: usize,
    pub objective: f64,
}

impl RecoveryReport {
    fn from_estimate(estimate: DVector<f64>, started: Instant) -> Self {
        let mut est_support = Vec::new();
        let mut est_signs = Vec::new();
        for (j, v) in estimate.iter().enumerate() {
            if *v != 0.0 {
                est_support.push(j);
                est_signs.push(v.signum());
            }
        }
        Self {
            estimate,
            est_support,
            est_signs,
            metrics: None,
            runtime_ms: started.elapsed().as_secs_f64() * 1e3,
            solver_stats: None,
            fit_residual: None,
            converged: true,
        }
    }

    /// Fill the metric fields against a ground-truth signal.
    pub fn evaluate(&mut self, truth: &SparseSignal) -> Result<&SupportMetrics> {
        let m = compute_metrics(truth, &self.estimate)?;
        self.metrics = Some(m);
        Ok(self.metrics.as_ref().unwrap())
    }
}

/// Sign-aware miss and false-alarm counts plus the ℓ₂ error.
pub fn compute_metrics(truth: &SparseSignal, estimate: &DVector<f64>) -> Result<SupportMetrics> {
    if estimate.len() != truth.dim() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has length {} but truth has dimension {}",
            estimate.len(),
            truth.dim()
        )));
    }
    let mut matched = 0usize;
    for (&j, &v) in truth.support().iter().zip(truth.values().iter()) {
        let e = estimate[j];
        if (v > 0.0 && e > 0.0) || (v < 0.0 && e < 0.0) {
            matched += 1;
        }
    }
    let est_size = estimate.iter().filter(|v| **v != 0.0).count();
    let n_miss = truth.sparsity() - matched;
    let n_false = est_size - matched;
    let l2_error = (estimate - truth.to_dense()).norm();
    Ok(SupportMetrics {
        n_miss,
        n_false,
        exact_sign_recovery: n_miss == 0 && n_false == 0,
        l2_error,
    })
}

/// The quantizer of TBP: zero every entry strictly smaller than x_min/2
/// in magnitude, keep the rest unchanged.
pub fn apply_threshold(v: &DVector<f64>, x_min: f64) -> DVector<f64> {
    let half = 0.5 * x_min;
    v.map(|x| if x.abs() < half { 0.0 } else { x })
}

/// Thresholded basis pursuit: solve min ‖β‖₁ s.t. y = Gβ, then quantize
/// at x_min/2.
pub fn tbp(
    g: &SensingMatrix,
    y: &DVector<f64>,
    x_min: f64,
    tol: &ToleranceSet,
) -> Result<RecoveryReport> {
    if x_min <= 0.0 || !x_min.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "x_min must be positive, got {}",
            x_min
        )));
    }
    let started = Instant::now();
    let sol = basis_pursuit(g, y, tol)?;
    let estimate = apply_threshold(&sol.beta, x_min);
    let mut report = RecoveryReport::from_estimate(estimate, started);
    report.solver_stats = Some(LpSummary {
        status: sol.status,
        iterations: sol.iterations,
        objective: sol.objective,
    });
    Ok(report)
}

/// TBP on the first m of 3m measurements to locate a candidate support,
/// ordinary least squares on the remaining 2m to re-estimate amplitudes,
/// then the same quantizer.
pub fn tbp_ols(
    g: &SensingMatrix,
    y: &DVector<f64>,
    x_min: f64,
    tol: &ToleranceSet,
) -> Result<RecoveryReport> {
    if x_min <= 0.0 || !x_min.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "x_min must be positive, got {}",
            x_min
        )));
    }
    if !g.rows().is_multiple_of(3) {
        return Err(Error::InvalidArgument(format!(
            "TBP+OLS needs a row count divisible by 3, got {}",
            g.rows()
        )));
    }
    let started = Instant::now();
    let m = g.rows() / 3;
    let (g1, g2) = g.split_rows(m);
    let y1 = y.rows(0, m).into_owned();
    let y2 = y.rows(m, 2 * m).into_owned();

    let sol = basis_pursuit(&g1, &y1, tol)?;
    let candidates: Vec<usize> = (0..g.cols()).filter(|&j| sol.beta[j] != 0.0).collect();
    if candidates.len() > 2 * m {
        return Err(Error::Structural(format!(
            "candidate support of size {} would make the regression underdetermined",
            candidates.len()
        )));
    }
    let g2_sub = g2.select_columns(&candidates);
    let fit = least_squares(&g2_sub, &y2)?;

    let mut refit = DVector::zeros(g.cols());
    for (idx, &j) in candidates.iter().enumerate() {
        refit[j] = fit.x[idx];
    }
    let estimate = apply_threshold(&refit, x_min);
    let mut report = RecoveryReport::from_estimate(estimate, started);
    report.solver_stats = Some(LpSummary {
        status: sol.status,
        iterations: sol.iterations,
        objective: sol.objective,
    });
    report.fit_residual = Some(fit.residual);
    Ok(report)
}

/// Rule for choosing the LASSO penalty weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// Use `LassoConfig::lambda` as given.
    Explicit,
    /// λ = 2σ√(2 log n).
    CandesPlan { sigma: f64 },
    /// λ = 2σ√n.
    Tropp { sigma: f64 },
}

#[derive(Debug, Clone)]
pub struct LassoConfig {
    pub lambda: f64,
    /// Maximum number of full coordinate sweeps.
    pub max_iters: usize,
    /// Stationarity slack on the subgradient condition.
    pub conv_tol: f64,
    pub lambda_rule: LambdaRule,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            max_iters: 100_000,
            conv_tol: 1e-8,
            lambda_rule: LambdaRule::Explicit,
        }
    }
}

impl LassoConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    /// The penalty actually applied for signal dimension n.
    pub fn effective_lambda(&self, n: usize) -> f64 {
        match self.lambda_rule {
            LambdaRule::Explicit => self.lambda,
            LambdaRule::CandesPlan { sigma } => 2.0 * sigma * (2.0 * (n as f64).ln()).sqrt(),
            LambdaRule::Tropp { sigma } => 2.0 * sigma * (n as f64).sqrt(),
        }
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// LASSO ½‖y − Gβ‖₂² + λ‖β‖₁ by cyclic coordinate descent, run until the
/// coordinatewise subgradient condition holds within `conv_tol`.
///
/// Support and sign metrics follow the raw (unthresholded) solution;
/// entries below [`LASSO_SUPPORT_CUTOFF`] are reported as zero.
pub fn lasso(g: &SensingMatrix, y: &DVector<f64>, cfg: &LassoConfig) -> Result<RecoveryReport> {
    if y.len() != g.rows() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {} but G has {} rows",
            y.len(),
            g.rows()
        )));
    }
    let lambda = cfg.effective_lambda(g.cols());
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be nonnegative, got {}",
            lambda
        )));
    }
    let started = Instant::now();
    let n = g.cols();
    let gm = g.matrix();
    let col_sq: Vec<f64> = (0..n).map(|j| gm.column(j).norm_squared()).collect();

    let mut beta = DVector::zeros(n);
    let mut residual = y.clone();
    let mut converged = false;
    for _sweep in 0..cfg.max_iters {
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let gj_r = gm.column(j).dot(&residual);
            let z = beta[j] + gj_r / col_sq[j];
            let new = soft_threshold(z, lambda / col_sq[j]);
            let delta: f64 = new - beta[j];
            if delta != 0.0 {
                residual.axpy(-delta, &gm.column(j).into_owned(), 1.0);
                beta[j] = new;
            }
        }
        if lasso_stationarity_gap(gm, &residual, &beta, lambda) <= cfg.conv_tol {
            converged = true;
            break;
        }
    }

    let reported = beta.map(|v| if v.abs() > LASSO_SUPPORT_CUTOFF { v } else { 0.0 });
    let mut report = RecoveryReport::from_estimate(reported, started);
    report.converged = converged;
    Ok(report)
}

/// Worst violation of the LASSO optimality conditions:
/// |G_jᵀr| ≤ λ off the support and G_jᵀr = λ·sgn(β_j) on it.
pub fn lasso_stationarity_gap(
    g: &nalgebra::DMatrix<f64>,
    residual: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
) -> f64 {
    let corr = g.tr_mul(residual);
    let mut worst = 0.0f64;
    for j in 0..beta.len() {
        let v = if beta[j] == 0.0 {
            (corr[j].abs() - lambda).max(0.0)
        } else {
            (corr[j] - lambda * beta[j].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Pick the k columns most correlated with y; ties broken by lowest index.
/// Signs come from the correlations, amplitudes from a least-squares refit.
pub fn max_correlation(g: &SensingMatrix, y: &DVector<f64>, k: usize) -> Result<RecoveryReport> {
    if k == 0 || k > g.cols() {
        return Err(Error::InvalidArgument(format!(
            "sparsity k = {} out of range 1..={}",
            k,
            g.cols()
        )));
    }
    if y.len() != g.rows() {
        return Err(Error::DimensionMismatch("y length mismatch".into()));
    }
    if k > g.rows() {
        return Err(Error::InvalidArgument(format!(
            "k = {} exceeds the number of measurements {}",
            k,
            g.rows()
        )));
    }
    let started = Instant::now();
    let corr = g.matrix().tr_mul(y);
    let mut order: Vec<usize> = (0..g.cols()).collect();
    order.sort_by(|&a, &b| {
        corr[b]
            .abs()
            .partial_cmp(&corr[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut support: Vec<usize> = order[..k].to_vec();
    support.sort_unstable();
    let signs: Vec<f64> = support.iter().map(|&j| corr[j].signum()).collect();

    let sub = g.select_columns(&support);
    let fit = least_squares(&sub, y)?;
    let mut estimate = DVector::zeros(g.cols());
    for (idx, &j) in support.iter().enumerate() {
        estimate[j] = fit.x[idx];
    }
    let mut report = RecoveryReport::from_estimate(estimate, started);
    report.est_support = support;
    report.est_signs = signs;
    report.fit_residual = Some(fit.residual);
    Ok(report)
}

/// What the exhaustive ML decoder reports for the winning support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlFit {
    /// Estimate carries the least-squares amplitudes.
    FittedValues,
    /// Estimate carries unit amplitudes with the fitted signs.
    UnitSigns,
}

/// Hard cap on the number of enumerated supports.
pub const ML_ENUMERATION_CAP: u128 = 1_000_000;

/// Exhaustive maximum-likelihood decoding: least-squares fit on every
/// k-subset of columns, returning the subset with minimum residual.
/// Ties go to the lexicographically first subset.
pub fn ml_oracle(
    g: &SensingMatrix,
    y: &DVector<f64>,
    k: usize,
    fit_mode: MlFit,
) -> Result<RecoveryReport> {
    let n = g.cols();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "sparsity k = {} out of range 1..={}",
            k, n
        )));
    }
    if g.rows() < k {
        return Err(Error::InvalidArgument(format!(
            "needs m >= k, got m = {}, k = {}",
            g.rows(),
            k
        )));
    }
    let count = binomial(n as u128, k as u128);
    if count > ML_ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!(
            "C({}, {}) = {} subsets exceeds the cap of {}",
            n, k, count, ML_ENUMERATION_CAP
        )));
    }
    let started = Instant::now();
    let mut best: Option<(f64, Vec<usize>, DVector<f64>)> = None;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let sub = g.select_columns(&subset);
        let fit = least_squares(&sub, y)?;
        let better = match &best {
            None => true,
            Some((r, _, _)) => fit.residual < *r,
        };
        if better {
            best = Some((fit.residual, subset.clone(), fit.x));
        }
        if !next_combination(&mut subset, n) {
            break;
        }
    }
    let (residual, support, values) = best.expect("at least one subset");
    let mut estimate = DVector::zeros(n);
    for (idx, &j) in support.iter().enumerate() {
        estimate[j] = match fit_mode {
            MlFit::FittedValues => values[idx],
            MlFit::UnitSigns => values[idx].signum(),
        };
    }
    let mut report = RecoveryReport::from_estimate(estimate, started);
    report.fit_residual = Some(residual);
    Ok(report)
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > 10 * ML_ENUMERATION_CAP {
            return acc; // already past any cap we compare against
        }
    }
    acc
}

/// Advance to the next k-combination of {0, .., n-1} in lexicographic order.
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
