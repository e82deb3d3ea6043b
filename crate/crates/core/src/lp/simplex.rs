//! Revised simplex engine for the basis-pursuit LP
//!
//! ```text
//! min 1ᵀ(u + v)   s.t.  G u − G v = y,  u ≥ 0, v ≥ 0
//! ```
//!
//! Variables 0..n are u (column +G_j), n..2n are v (column −G_{j−n}).
//! Phase 1 adds m artificial columns ±e_i so the initial basis is the
//! identity with basic values |y_i|.
//!
//! The basis matrix is held as a dense LU factorization plus a product-form
//! eta file; it is refactorized every `refactor_interval` pivots and once
//! more after optimality, so the returned primal/dual values come from a
//! fresh factorization.

use nalgebra::DVector;

use crate::ensembles::SensingMatrix;
use crate::error::{Error, Result};
use crate::linalg::LuFactors;

use super::ToleranceSet;

/// Outcome of one simplex run on the split formulation.
pub(super) struct SimplexOutcome {
    /// Basic variable per row (all real, i.e. < 2n).
    pub basic_vars: Vec<usize>,
    /// Basic values, refreshed from a final refactorization.
    pub basic_values: DVector<f64>,
    /// Dual vector π = B⁻ᵀ 1 for the final basis.
    pub duals: DVector<f64>,
    pub iterations: usize,
    /// Smallest basic value seen at the final vertex.
    pub min_basic_value: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

#[derive(Clone, Copy, PartialEq)]
enum PivotRule {
    Dantzig,
    Bland,
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

struct Eta {
    row: usize,
    col: DVector<f64>,
}

pub(super) struct Simplex<'a> {
    g: &'a SensingMatrix,
    y: &'a DVector<f64>,
    tol: &'a ToleranceSet,
    m: usize,
    n: usize,
    /// Sign of each artificial column (so initial basic values are ≥ 0).
    art_sign: Vec<f64>,
    basic_vars: Vec<usize>,
    /// position in basis per variable, or NONE.
    var_position: Vec<usize>,
    x_basic: DVector<f64>,
    lu: LuFactors,
    etas: Vec<Eta>,
    refactor_interval: usize,
    iterations: usize,
    degen_streak: usize,
    rule: PivotRule,
    force_bland: bool,
    degen_tol: f64,
}

const NONE: usize = usize::MAX;

impl<'a> Simplex<'a> {
    pub fn new(
        g: &'a SensingMatrix,
        y: &'a DVector<f64>,
        tol: &'a ToleranceSet,
        refactor_interval: usize,
        force_bland: bool,
    ) -> Result<Self> {
        let m = g.rows();
        let n = g.cols();
        let art_sign: Vec<f64> = (0..m).map(|i| if y[i] < 0.0 { -1.0 } else { 1.0 }).collect();
        let basic_vars: Vec<usize> = (0..m).map(|i| 2 * n + i).collect();
        let mut var_position = vec![NONE; 2 * n + m];
        for (pos, &v) in basic_vars.iter().enumerate() {
            var_position[v] = pos;
        }
        let x_basic = DVector::from_fn(m, |i, _| y[i].abs());
        // Initial basis is diag(art_sign); factor it like any other so the
        // solve paths are uniform.
        let b = nalgebra::DMatrix::from_fn(m, m, |i, j| if i == j { art_sign[i] } else { 0.0 });
        let lu = LuFactors::factor(&b, tol.pivot_tol)?;
        let degen_tol = 1e-11 * y.amax().max(1e-300);
        Ok(Self {
            g,
            y,
            tol,
            m,
            n,
            art_sign,
            basic_vars,
            var_position,
            x_basic,
            lu,
            etas: Vec::new(),
            refactor_interval: refactor_interval.max(1),
            iterations: 0,
            degen_streak: 0,
            rule: if force_bland {
                PivotRule::Bland
            } else {
                PivotRule::Dantzig
            },
            force_bland,
            degen_tol,
        })
    }

    fn column_of(&self, var: usize) -> DVector<f64> {
        if var < self.n {
            self.g.column(var).into_owned()
        } else if var < 2 * self.n {
            -self.g.column(var - self.n).into_owned()
        } else {
            let i = var - 2 * self.n;
            let mut e = DVector::zeros(self.m);
            e[i] = self.art_sign[i];
            e
        }
    }

    fn ftran(&self, col: &DVector<f64>) -> DVector<f64> {
        let mut w = col.clone();
        self.lu.solve_in_place(&mut w);
        for eta in &self.etas {
            let t = w[eta.row] / eta.col[eta.row];
            if t != 0.0 {
                for i in 0..self.m {
                    w[i] -= eta.col[i] * t;
                }
                w[eta.row] = t;
            } else {
                w[eta.row] = 0.0;
            }
        }
        w
    }

    fn btran(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut w = rhs.clone();
        for eta in self.etas.iter().rev() {
            let dot = eta.col.dot(&w);
            let hr = eta.col[eta.row];
            w[eta.row] = (w[eta.row] - (dot - hr * w[eta.row])) / hr;
        }
        self.lu.solve_transpose_in_place(&mut w);
        w
    }

    fn cost(&self, var: usize, phase: Phase) -> f64 {
        let artificial = var >= 2 * self.n;
        match phase {
            Phase::One => {
                if artificial {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => 1.0,
        }
    }

    fn duals_for(&self, phase: Phase) -> DVector<f64> {
        let c_b = DVector::from_fn(self.m, |i, _| self.cost(self.basic_vars[i], phase));
        self.btran(&c_b)
    }

    /// Pick the entering variable, or None when optimal under the current rule.
    fn price(&self, phase: Phase, pi: &DVector<f64>) -> Option<(usize, f64)> {
        let corr = self.g.matrix().tr_mul(pi);
        let real_cost = match phase {
            Phase::One => 0.0,
            Phase::Two => 1.0,
        };
        let threshold = -self.tol.dual_tol;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            for (var, reduced) in [(j, real_cost - corr[j]), (self.n + j, real_cost + corr[j])] {
                if self.var_position[var] != NONE || reduced >= threshold {
                    continue;
                }
                match self.rule {
                    PivotRule::Bland => {
                        // Smallest variable index wins; u_j precedes v_j.
                        match best {
                            Some((v, _)) if v <= var => {}
                            _ => best = Some((var, reduced)),
                        }
                    }
                    PivotRule::Dantzig => match best {
                        Some((_, r)) if r <= reduced => {}
                        _ => best = Some((var, reduced)),
                    },
                }
            }
        }
        if self.rule == PivotRule::Bland {
            // The loop above already found the smallest index since j ascends.
        }
        best
    }

    /// Ratio test: leaving row for the entering direction `h`.
    fn ratio_test(&self, h: &DVector<f64>) -> Option<usize> {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let hi = h[i];
            if hi <= self.tol.pivot_tol {
                continue;
            }
            let ratio = self.x_basic[i].max(0.0) / hi;
            match leave {
                None => leave = Some((i, ratio)),
                Some((best_i, best_ratio)) => {
                    let tie_band = 1e-10 * (1.0 + best_ratio.abs());
                    if ratio < best_ratio - tie_band {
                        leave = Some((i, ratio));
                    } else if ratio <= best_ratio + tie_band {
                        let better = match self.rule {
                            // Stability: prefer the larger pivot among ties.
                            PivotRule::Dantzig => hi > h[best_i],
                            // Termination: prefer the smallest basic variable.
                            PivotRule::Bland => self.basic_vars[i] < self.basic_vars[best_i],
                        };
                        if better {
                            leave = Some((i, ratio.min(best_ratio)));
                        }
                    }
                }
            }
        }
        leave.map(|(i, _)| i)
    }

    fn refactor(&mut self) -> Result<()> {
        let b = nalgebra::DMatrix::from_fn(self.m, self.m, |i, j| {
            self.column_of(self.basic_vars[j])[i]
        });
        self.lu = LuFactors::factor(&b, self.tol.pivot_tol)?;
        self.etas.clear();
        // Refresh the basic values from the new factors to shed drift.
        let mut xb = self.y.clone();
        self.lu.solve_in_place(&mut xb);
        for v in xb.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.x_basic = xb;
        Ok(())
    }

    fn pivot(&mut self, entering: usize, leave_row: usize, h: DVector<f64>) -> Result<()> {
        let theta = self.x_basic[leave_row].max(0.0) / h[leave_row];
        for i in 0..self.m {
            self.x_basic[i] -= theta * h[i];
            if self.x_basic[i] < 0.0 {
                self.x_basic[i] = 0.0;
            }
        }
        self.x_basic[leave_row] = theta;

        let leaving = self.basic_vars[leave_row];
        self.var_position[leaving] = NONE;
        self.var_position[entering] = leave_row;
        self.basic_vars[leave_row] = entering;
        self.etas.push(Eta {
            row: leave_row,
            col: h,
        });
        if self.etas.len() >= self.refactor_interval {
            self.refactor()?;
        }

        if theta <= self.degen_tol {
            self.degen_streak += 1;
            if self.degen_streak >= STALL_LIMIT {
                self.rule = PivotRule::Bland;
            }
        } else {
            self.degen_streak = 0;
            if !self.force_bland {
                self.rule = PivotRule::Dantzig;
            }
        }
        Ok(())
    }

    fn run_phase(&mut self, phase: Phase, iter_cap: usize) -> Result<()> {
        loop {
            if self.iterations > iter_cap {
                return Err(Error::NumericalFailure(format!(
                    "iteration cap {} exceeded",
                    iter_cap
                )));
            }
            if phase == Phase::One && self.phase1_objective() <= 0.0 {
                return Ok(());
            }
            let pi = self.duals_for(phase);
            let Some((entering, _)) = self.price(phase, &pi) else {
                return Ok(());
            };
            let col = self.column_of(entering);
            let h = self.ftran(&col);
            let Some(leave_row) = self.ratio_test(&h) else {
                return Err(Error::NumericalFailure(
                    "unbounded pivot direction (inconsistent certificates)".into(),
                ));
            };
            self.pivot(entering, leave_row, h)?;
            self.iterations += 1;
        }
    }

    fn phase1_objective(&self) -> f64 {
        let mut obj = 0.0;
        for (i, &v) in self.basic_vars.iter().enumerate() {
            if v >= 2 * self.n {
                obj += self.x_basic[i];
            }
        }
        obj
    }

    /// Pivot any zero-valued artificial variables out of the basis. A row
    /// with no eligible real pivot is linearly dependent, which means the
    /// sensing matrix is row-rank deficient.
    fn evict_artificials(&mut self) -> Result<()> {
        for row in 0..self.m {
            if self.basic_vars[row] < 2 * self.n {
                continue;
            }
            let mut e_r = DVector::zeros(self.m);
            e_r[row] = 1.0;
            let rho = self.btran(&e_r);
            let weights = self.g.matrix().tr_mul(&rho);
            let mut candidate = None;
            for j in 0..self.n {
                if weights[j].abs() > self.tol.pivot_tol * 10.0 {
                    let var = if weights[j] > 0.0 { j } else { self.n + j };
                    if self.var_position[var] == NONE && self.var_position[toggle(var, self.n)] == NONE
                    {
                        candidate = Some(var);
                        break;
                    }
                }
            }
            let Some(var) = candidate else {
                return Err(Error::NumericalFailure(format!(
                    "rank deficiency: measurement row {} is redundant",
                    row
                )));
            };
            let col = self.column_of(var);
            let h = self.ftran(&col);
            if h[row].abs() <= self.tol.pivot_tol {
                return Err(Error::NumericalFailure(
                    "artificial eviction pivot collapsed".into(),
                ));
            }
            // Degenerate exchange: the artificial sits at value ~0.
            let leaving = self.basic_vars[row];
            self.var_position[leaving] = NONE;
            self.var_position[var] = row;
            self.basic_vars[row] = var;
            self.etas.push(Eta { row, col: h });
            self.x_basic[row] = self.x_basic[row].max(0.0);
            if self.etas.len() >= self.refactor_interval {
                self.refactor()?;
            }
        }
        Ok(())
    }

    pub fn solve(mut self) -> Result<SimplexOutcome> {
        let iter_cap = self.tol.iter_cap_factor * (self.n + self.m);

        self.run_phase(Phase::One, iter_cap)?;
        let feas_scale = self.y.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if self.phase1_objective() > self.tol.feas_tol * feas_scale {
            return Err(Error::NumericalFailure(format!(
                "phase-1 objective {:.3e} is nonzero: system infeasible or ill-conditioned",
                self.phase1_objective()
            )));
        }
        self.evict_artificials()?;
        self.refactor()?;

        self.run_phase(Phase::Two, iter_cap)?;
        self.refactor()?;
        let duals = self.duals_for(Phase::Two);
        let min_basic_value = self.x_basic.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(SimplexOutcome {
            basic_vars: self.basic_vars,
            basic_values: self.x_basic,
            duals,
            iterations: self.iterations,
            min_basic_value,
        })
    }
}

/// The paired split variable: u_j ↔ v_j.
fn toggle(var: usize, n: usize) -> usize {
    if var < n {
        var + n
    } else {
        var - n
    }
}
