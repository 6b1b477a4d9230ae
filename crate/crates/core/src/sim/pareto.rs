use serde::{Deserialize, Serialize};

use super::closed_loop::{run_closed_loop, single_step_costs};
use super::scenario::{Scenario, Strategy};
use crate::error::{Error, Result};

/// How each sweep point is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Costs accumulated over a full closed-loop run.
    #[default]
    ClosedLoop,
    /// Costs of the first open-loop plan only.
    SingleStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint {
    pub strategy: Strategy,
    pub priority: usize,
    pub alpha: f64,
    /// Energy cost `Jᵘ`.
    pub j_u: f64,
    /// Comfort cost `Jᵛ`.
    pub j_v: f64,
}

/// One evaluation per `(strategy, α)`; points ordered by strategy, α, priority.
pub fn pareto_sweep(
    scenario: &Scenario,
    alphas: &[f64],
    strategies: &[Strategy],
    mode: SweepMode,
) -> Result<Vec<ParetoPoint>> {
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {a}")));
    }
    for (i, a) in alphas.iter().enumerate() {
        if alphas[..i].contains(a) {
            return Err(Error::InvalidParameter(format!("alpha {a} listed twice")));
        }
    }
    let jobs: Vec<(Strategy, f64)> = strategies
        .iter()
        .flat_map(|&s| alphas.iter().map(move |&a| (s, a)))
        .collect();
    let eval = |&(strategy, alpha): &(Strategy, f64)| -> Result<Vec<ParetoPoint>> {
        let mut s = scenario.clone();
        s.strategy = strategy;
        s.control.alpha = alpha;
        let (ju, jv) = match mode {
            SweepMode::ClosedLoop => {
                let r = run_closed_loop(&s).map_err(|e| e.at_alpha(alpha))?;
                (r.energy_cost, r.comfort_cost)
            }
            SweepMode::SingleStep => single_step_costs(&s).map_err(|e| e.at_alpha(alpha))?,
        };
        Ok(ju
            .into_iter()
            .zip(jv)
            .enumerate()
            .map(|(i, (j_u, j_v))| ParetoPoint {
                strategy,
                priority: i + 1,
                alpha,
                j_u,
                j_v,
            })
            .collect())
    };
    #[cfg(feature = "parallel")]
    let per_job: Vec<Result<Vec<ParetoPoint>>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_job: Vec<Result<Vec<ParetoPoint>>> = jobs.iter().map(eval).collect();
    let mut points = Vec::new();
    for r in per_job {
        points.extend(r?);
    }
    Ok(points)
}
