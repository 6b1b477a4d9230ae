//! Stacks one or more zone blocks into a [`QpProblem`].
//!
//! Inputs are carried in kW and the objective is scaled by 1e-6 inside the
//! QP, which keeps the Hessian diagonal O(1) for typical tariffs. Plans are
//! reported back in W with costs in the original units.
//!
//! A slack variable is created only where it can matter: the step is
//! occupied, the comfort weight is positive and at least one band edge is
//! finite. Elsewhere the soft-constraint rows can always be met by an
//! unpenalised slack, so both the slack and its rows are left out and the
//! reported `v` is the smallest slack consistent with the band.

use nalgebra::{DMatrix, DVector};

use super::{CostTerms, LocalPlan, Prediction};
use crate::error::{Error, Result};
use crate::qp::{self, QpProblem, QpSolution, Tolerances};
use crate::sim::metrics::comfort_deviation;

const INPUT_SCALE: f64 = 1e3;
const OBJECTIVE_SCALE: f64 = 1e-6;

pub(crate) struct ZoneBlock<'a> {
    pub zone: usize,
    pub prediction: &'a Prediction,
    pub costs: &'a CostTerms,
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub band_lower: &'a [f64],
    pub band_upper: &'a [f64],
    pub theta: f64,
    pub alpha: f64,
}

struct Layout {
    u_offset: usize,
    /// Variable index of `v(k+l)` when present.
    v_index: Vec<Option<usize>>,
}

pub(crate) struct Assembled {
    pub problem: QpProblem,
    layouts: Vec<Layout>,
}

impl ZoneBlock<'_> {
    fn horizon(&self) -> usize {
        self.prediction.horizon()
    }

    fn slack_active(&self, l: usize) -> bool {
        self.alpha * self.theta * self.costs.comfort_weights[l] > 0.0
            && (self.band_lower[l].is_finite() || self.band_upper[l].is_finite())
    }
}

/// `cap`, when given, adds `Σ_blocks u(k+l) ≤ cap[l]` for every finite entry.
pub(crate) fn assemble(blocks: &[ZoneBlock<'_>], cap: Option<&[f64]>) -> Result<Assembled> {
    let horizon = blocks.first().map(ZoneBlock::horizon).unwrap_or(0);
    let mut layouts = Vec::with_capacity(blocks.len());
    let mut n = 0usize;
    for b in blocks {
        if b.horizon() != horizon {
            return Err(Error::DimensionMismatch {
                context: "zone horizon",
                expected: horizon,
                actual: b.horizon(),
            });
        }
        for (context, len) in [
            ("input lower bounds", b.lower.len()),
            ("input upper bounds", b.upper.len()),
            ("band lower", b.band_lower.len()),
            ("band upper", b.band_upper.len()),
            ("comfort weights", b.costs.comfort_weights.len()),
            ("energy weights", b.costs.energy_weights.len()),
        ] {
            if len != horizon {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: horizon,
                    actual: len,
                });
            }
        }
        layouts.push(Layout {
            u_offset: n,
            v_index: Vec::new(),
        });
        n += horizon;
    }
    for (b, layout) in blocks.iter().zip(layouts.iter_mut()) {
        layout.v_index = (0..horizon)
            .map(|l| {
                b.slack_active(l).then(|| {
                    n += 1;
                    n - 1
                })
            })
            .collect();
    }

    let mut hdiag = DVector::<f64>::zeros(n);
    let mut lower = DVector::from_element(n, f64::NEG_INFINITY);
    let mut upper = DVector::from_element(n, f64::INFINITY);
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();

    for (b, layout) in blocks.iter().zip(&layouts) {
        for l in 0..horizon {
            let i = layout.u_offset + l;
            hdiag[i] = 2.0 * b.theta * b.costs.energy_weights[l] * INPUT_SCALE * INPUT_SCALE * OBJECTIVE_SCALE;
            lower[i] = b.lower[l] / INPUT_SCALE;
            upper[i] = b.upper[l] / INPUT_SCALE;
        }
        for l in 0..horizon {
            let Some(vi) = layout.v_index[l] else { continue };
            hdiag[vi] = 2.0 * b.theta * b.alpha * b.costs.comfort_weights[l] * OBJECTIVE_SCALE;
            lower[vi] = 0.0;
            let gains: Vec<(usize, f64)> = (0..=l)
                .map(|j| (layout.u_offset + j, b.prediction.gain[(l, j)] * INPUT_SCALE))
                .collect();
            let free = b.prediction.free[l];
            if b.band_lower[l].is_finite() {
                // −Φu − v ≤ free − y_min
                let mut row: Vec<(usize, f64)> = gains.iter().map(|&(j, g)| (j, -g)).collect();
                row.push((vi, -1.0));
                rows.push((row, free - b.band_lower[l]));
            }
            if b.band_upper[l].is_finite() {
                // Φu − v ≤ y_max − free
                let mut row = gains.clone();
                row.push((vi, -1.0));
                rows.push((row, b.band_upper[l] - free));
            }
        }
    }
    if let Some(cap) = cap {
        if cap.len() != horizon {
            return Err(Error::DimensionMismatch {
                context: "cap horizon",
                expected: horizon,
                actual: cap.len(),
            });
        }
        for l in 0..horizon {
            if cap[l].is_finite() {
                let row = layouts.iter().map(|lay| (lay.u_offset + l, 1.0)).collect();
                rows.push((row, cap[l] / INPUT_SCALE));
            }
        }
    }

    let mut g = DMatrix::zeros(rows.len(), n);
    let mut rhs = DVector::zeros(rows.len());
    for (r, (row, b)) in rows.into_iter().enumerate() {
        for (j, a) in row {
            g[(r, j)] = a;
        }
        rhs[r] = b;
    }
    let problem = QpProblem::new(DMatrix::from_diagonal(&hdiag), DVector::zeros(n))
        .with_inequalities(g, rhs)
        .with_bounds(lower, upper);
    Ok(Assembled { problem, layouts })
}

impl Assembled {
    pub fn solve(&self, tol: &Tolerances) -> Result<QpSolution> {
        qp::solve(&self.problem, tol)
    }

    /// Converts the solver answer back into per-zone plans.
    pub fn extract(&self, blocks: &[ZoneBlock<'_>], sol: &QpSolution) -> Vec<LocalPlan> {
        blocks
            .iter()
            .zip(&self.layouts)
            .map(|(b, layout)| {
                let horizon = b.horizon();
                let u: Vec<f64> = (0..horizon)
                    .map(|l| (sol.z[layout.u_offset + l] * INPUT_SCALE).clamp(b.lower[l], b.upper[l]) + 0.0) // no -0
                    .collect();
                let y = b.prediction.outputs(&u);
                let v: Vec<f64> = (0..horizon)
                    .map(|l| match layout.v_index[l] {
                        Some(vi) => sol.z[vi].max(0.0),
                        None => comfort_deviation(y[l], b.band_lower[l], b.band_upper[l]),
                    })
                    .collect();
                let comfort_cost = b.costs.comfort_cost(&v);
                let energy_cost = b.costs.energy_cost(&u);
                LocalPlan {
                    zone: b.zone,
                    u,
                    v,
                    y,
                    u_upper: b.upper.to_vec(),
                    comfort_cost,
                    energy_cost,
                    objective: b.alpha * comfort_cost + energy_cost,
                }
            })
            .collect()
    }
}
