//! Dense convex quadratic programming.
//!
//! ```text
//!     minimize    ½ zᵀ H z + fᵀ z + offset
//!     subject to  G z ≤ h
//!                 lower ≤ z ≤ upper
//! ```
//!
//! Solved by a dual active-set method that keeps the KKT system factorised
//! through Givens updates, so an optimal answer satisfies stationarity to
//! rounding error.

mod dual_active_set;

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub g: DMatrix<f64>,
    pub b: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    /// Constant added to the reported objective.
    pub offset: f64,
}

impl QpProblem {
    /// Unconstrained problem; add constraints with the `with_*` builders.
    pub fn new(h: DMatrix<f64>, f: DVector<f64>) -> Self {
        let n = f.len();
        QpProblem {
            h,
            f,
            g: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
            offset: 0.0,
        }
    }

    pub fn with_inequalities(mut self, g: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.g = g;
        self.b = b;
        self
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn n_vars(&self) -> usize {
        self.f.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let dim = |context, expected, actual| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    context,
                    expected,
                    actual,
                })
            }
        };
        dim("H rows", n, self.h.nrows())?;
        dim("H cols", n, self.h.ncols())?;
        dim("G cols", n, self.g.ncols())?;
        dim("h length", self.g.nrows(), self.b.len())?;
        dim("lower bounds", n, self.lower.len())?;
        dim("upper bounds", n, self.upper.len())?;
        for r in 0..n {
            for c in (r + 1)..n {
                if (self.h[(r, c)] - self.h[(c, r)]).abs() > 1e-10 {
                    return Err(Error::InvalidParameter(format!(
                        "H not symmetric at ({r}, {c})"
                    )));
                }
            }
        }
        for i in 0..n {
            if self.lower[i] > self.upper[i] || self.lower[i].is_nan() || self.upper[i].is_nan() {
                return Err(Error::InvalidParameter(format!(
                    "bounds of variable {i} are inconsistent: [{}, {}]",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        let finite = self.h.iter().chain(self.f.iter()).chain(self.g.iter()).all(|v| v.is_finite())
            && self.b.iter().all(|v| !v.is_nan());
        if !finite {
            return Err(Error::InvalidParameter("problem data must be finite".into()));
        }
        Ok(())
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.h * z)) + self.f.dot(z) + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feasibility: f64,
    pub kkt: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-6,
            kkt: 1e-6,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

impl fmt::Display for QpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QpStatus::Optimal => "optimal",
            QpStatus::Infeasible => "infeasible",
            QpStatus::MaxIterations => "max-iterations",
        })
    }
}

/// Lagrange multipliers, all non-negative at a KKT point.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub ineq: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl Multipliers {
    pub fn zeros(n_vars: usize, n_ineq: usize) -> Self {
        Multipliers {
            ineq: DVector::zeros(n_ineq),
            lower: DVector::zeros(n_vars),
            upper: DVector::zeros(n_vars),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: DVector<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub multipliers: Multipliers,
    pub iterations: usize,
    /// `H + εI` had to be used because `H` failed to factorise.
    pub regularized: bool,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

/// Added to the diagonal when the Cholesky factorisation of `H` fails.
pub const REGULARIZATION: f64 = 1e-9;

pub fn solve(problem: &QpProblem, tol: &Tolerances) -> Result<QpSolution> {
    problem.validate()?;
    dual_active_set::solve(problem, tol)
}

/// Primal/dual point handed to [`check_kkt`].
#[derive(Debug, Clone, PartialEq)]
pub struct KktCandidate {
    pub z: DVector<f64>,
    pub multipliers: Multipliers,
}

impl KktCandidate {
    /// A primal point with all multipliers zero.
    pub fn primal(problem: &QpProblem, z: DVector<f64>) -> Self {
        KktCandidate {
            z,
            multipliers: Multipliers::zeros(problem.n_vars(), problem.n_ineq()),
        }
    }
}

impl From<&QpSolution> for KktCandidate {
    fn from(s: &QpSolution) -> Self {
        KktCandidate {
            z: s.z.clone(),
            multipliers: s.multipliers.clone(),
        }
    }
}

/// Infinity-norm residuals of the KKT conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktReport {
    /// `‖Hz + f + Gᵀμ − μ_lower + μ_upper‖∞`
    pub stationarity: f64,
    pub primal_feasibility: f64,
    /// Largest `|μᵢ · slackᵢ|`.
    pub complementarity: f64,
    /// Largest negative multiplier magnitude.
    pub dual_feasibility: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_feasibility)
            .max(self.complementarity)
            .max(self.dual_feasibility)
    }
}

pub fn check_kkt(problem: &QpProblem, candidate: &KktCandidate) -> Result<KktReport> {
    let n = problem.n_vars();
    let m = problem.n_ineq();
    let z = &candidate.z;
    let mu = &candidate.multipliers;
    let dims = [
        ("candidate", n, z.len()),
        ("inequality multipliers", m, mu.ineq.len()),
        ("lower multipliers", n, mu.lower.len()),
        ("upper multipliers", n, mu.upper.len()),
    ];
    for (context, expected, actual) in dims {
        if expected != actual {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                actual,
            });
        }
    }

    let mut grad = &problem.h * z + &problem.f;
    if m > 0 {
        grad += problem.g.transpose() * &mu.ineq;
    }
    grad -= &mu.lower;
    grad += &mu.upper;

    let gz = &problem.g * z;
    let mut primal = 0.0f64;
    let mut comp = 0.0f64;
    let mut dual = 0.0f64;
    let mut visit = |slack: f64, mult: f64| {
        primal = primal.max(-slack);
        dual = dual.max(-mult);
        if mult != 0.0 {
            comp = comp.max((mult * slack).abs());
        }
    };
    for i in 0..m {
        visit(problem.b[i] - gz[i], mu.ineq[i]);
    }
    for j in 0..n {
        let lo = problem.lower[j];
        let up = problem.upper[j];
        let slack_lo = if lo.is_finite() { z[j] - lo } else { f64::INFINITY };
        let slack_up = if up.is_finite() { up - z[j] } else { f64::INFINITY };
        visit(slack_lo, mu.lower[j]);
        visit(slack_up, mu.upper[j]);
    }

    Ok(KktReport {
        stationarity: grad.amax(),
        primal_feasibility: primal.max(0.0),
        complementarity: comp,
        dual_feasibility: dual.max(0.0),
    })
}
