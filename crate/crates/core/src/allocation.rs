//! Priority-based residual-energy bookkeeping for the distributed scheme.
//!
//! After every control step each zone's plan is shifted one step forward
//! (first entry dropped, last entry repeated) and subtracted from the cap
//! to form the allowances of lower-priority zones for the next step.
//!
//! Two protocols are provided. [`OneToOne`] chains distinct priorities:
//! `ĉ₁ = cap`, `ĉ_{m+1}(k+1) = ĉ_m(k+1) − shift(u_m(·|k))`. [`MultiToOne`]
//! keeps an [`InfoMatrix`] whose row `s` is the residual after all levels
//! above `s`, split evenly between the zones of level `s`. With one zone per
//! level both produce the same allowances.
//!
//! Every control step is a snapshot-read / parallel-solve / single-writer
//! update cycle: all local problems read the same allowances, so the order
//! of the parallel solves never changes the result.

use crate::error::{Error, Result};
use crate::mpc::{solve_distributed_local, HorizonConfig, LocalPlan, ZoneForecast};
use crate::thermal::DiscreteZoneModel;

/// Per-step input ceiling for one zone over the horizon, W.
#[derive(Debug, Clone, PartialEq)]
pub struct AllowanceVector(pub Vec<f64>);

impl AllowanceVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Clamps every entry to `[0, cap]`.
    pub fn clamped(mut self, cap: &[f64]) -> Self {
        for (a, c) in self.0.iter_mut().zip(cap) {
            *a = a.clamp(0.0, c.max(0.0));
        }
        self
    }
}

/// Drops the first element and repeats the last one.
pub fn shift_forward(seq: &[f64]) -> Result<Vec<f64>> {
    if seq.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "shift needs at least two elements, got {}",
            seq.len()
        )));
    }
    let mut out = seq[1..].to_vec();
    out.push(seq[seq.len() - 1]);
    Ok(out)
}

/// `ĉ_{m+1} = ĉ_m − u_m`, clamped to `[0, cap]`.
pub fn residual_one_to_one(allowance: &[f64], shifted_plan: &[f64], cap: &[f64]) -> Result<AllowanceVector> {
    check_len("shifted plan", allowance.len(), shifted_plan.len())?;
    check_len("cap", allowance.len(), cap.len())?;
    Ok(AllowanceVector(allowance.iter().zip(shifted_plan).map(|(c, u)| c - u).collect()).clamped(cap))
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}

/// Priority level of every zone, 1 being served first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityAssignment {
    levels: Vec<usize>,
    n_levels: usize,
}

impl PriorityAssignment {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        let n_levels = levels.iter().copied().max().unwrap_or(0);
        if levels.is_empty() {
            return Err(Error::Priority("no zones".into()));
        }
        for s in 1..=n_levels {
            if !levels.contains(&s) {
                return Err(Error::Priority(format!("level {s} has no zones")));
            }
        }
        if levels.contains(&0) {
            return Err(Error::Priority("levels start at 1".into()));
        }
        Ok(PriorityAssignment { levels, n_levels })
    }

    /// Zone `m` gets level `m + 1`.
    pub fn one_per_level(n: usize) -> Self {
        PriorityAssignment {
            levels: (1..=n).collect(),
            n_levels: n,
        }
    }

    pub fn n_zones(&self) -> usize {
        self.levels.len()
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn level(&self, zone: usize) -> usize {
        self.levels[zone]
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn members(&self, level: usize) -> impl Iterator<Item = usize> + '_ {
        self.levels
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == level)
            .map(|(m, _)| m)
    }

    pub fn count(&self, level: usize) -> usize {
        self.members(level).count()
    }

    pub fn is_one_to_one(&self) -> bool {
        self.n_levels == self.levels.len()
    }

    /// Zones sorted by level; ties keep zone order.
    pub fn chain_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.levels.len()).collect();
        order.sort_by_key(|&m| self.levels[m]);
        order
    }
}

/// Residual energy per priority level over the horizon (`N_o × P`).
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix {
    rows: Vec<Vec<f64>>,
}

impl InfoMatrix {
    pub fn row(&self, level: usize) -> &[f64] {
        &self.rows[level - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_levels(&self) -> usize {
        self.rows.len()
    }

    /// Level 1 gets `cap / N_pri(1)`; every other level starts from the
    /// equal split `cap / N`, the same prior as [`OneToOne::initial`].
    pub fn initial(assignment: &PriorityAssignment, cap: &[f64]) -> Self {
        let n = assignment.n_zones() as f64;
        let rows = (1..=assignment.n_levels())
            .map(|s| {
                let share = if s == 1 { assignment.count(1) as f64 } else { n };
                cap.iter().map(|c| c / share).collect()
            })
            .collect();
        InfoMatrix { rows }
    }
}

/// Row `s` = `(cap − Σ_{pri(m) < s} shifted u_m) / N_pri(s)`, clamped to `[0, cap]`.
///
/// `shifted_plans[m]` is zone `m`'s already shifted plan; entries may be
/// `None` only for zones of the lowest level, which no row depends on.
pub fn build_info_matrix(
    shifted_plans: &[Option<Vec<f64>>],
    assignment: &PriorityAssignment,
    cap: &[f64],
) -> Result<InfoMatrix> {
    check_len("plans", assignment.n_zones(), shifted_plans.len())?;
    let horizon = cap.len();
    let n_levels = assignment.n_levels();
    // Subtracted level by level, in the same order as the one-to-one chain.
    let mut residual = cap.to_vec();
    let mut rows = Vec::with_capacity(n_levels);
    for s in 1..=n_levels {
        let share = assignment.count(s) as f64;
        let row: Vec<f64> = cap
            .iter()
            .zip(&residual)
            .map(|(c, r)| (r / share).clamp(0.0, c.max(0.0)))
            .collect();
        rows.push(row);
        if s == n_levels {
            break;
        }
        for m in assignment.members(s) {
            let plan = shifted_plans[m].as_ref().ok_or(Error::MissingPlan(m))?;
            check_len("shifted plan", horizon, plan.len())?;
            for (r, u) in residual.iter_mut().zip(plan) {
                *r -= u;
            }
        }
    }
    Ok(InfoMatrix { rows })
}

/// Inputs of one zone's local problem at the current step.
pub struct LocalSolve<'a> {
    pub model: &'a DiscreteZoneModel,
    pub forecast: ZoneForecast,
}

/// Result of one coordinated control step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// `u_m(k|k)` for plant application.
    pub applied: Vec<f64>,
    pub plans: Vec<LocalPlan>,
    /// Allowance each zone solved with at this step.
    pub allowances: Vec<AllowanceVector>,
}

fn solve_all(
    zones: &[LocalSolve<'_>],
    config: &HorizonConfig,
    allowances: &[AllowanceVector],
    cap: &[f64],
) -> Result<Vec<LocalPlan>> {
    let solve_one = |m: usize| {
        solve_distributed_local(zones[m].model, &zones[m].forecast, config, m, allowances[m].as_slice(), cap)
            .map_err(|e| match e {
                Error::ZoneSolve { .. } => e,
                other => Error::ZoneSolve {
                    zone: m,
                    status: other.to_string(),
                },
            })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..zones.len()).into_par_iter().map(solve_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..zones.len()).map(solve_one).collect()
    }
}

/// One zone per priority level, allowances passed down a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct OneToOne {
    assignment: PriorityAssignment,
    allowances: Vec<AllowanceVector>,
}

impl OneToOne {
    /// Highest priority gets the full cap, every other zone `cap / N`.
    pub fn initial(assignment: PriorityAssignment, cap: &[f64]) -> Result<Self> {
        if !assignment.is_one_to_one() {
            return Err(Error::Priority("one-to-one needs a distinct level per zone".into()));
        }
        let n = assignment.n_zones() as f64;
        let allowances = (0..assignment.n_zones())
            .map(|m| {
                let share = if assignment.level(m) == 1 { 1.0 } else { n };
                AllowanceVector(cap.iter().map(|c| c / share).collect())
            })
            .collect();
        Ok(OneToOne {
            assignment,
            allowances,
        })
    }

    pub fn allowances(&self) -> &[AllowanceVector] {
        &self.allowances
    }

    /// Solves every zone against the current allowances, then chains the
    /// shifted plans into next-step allowances against `next_cap`.
    pub fn step(
        &mut self,
        zones: &[LocalSolve<'_>],
        config: &HorizonConfig,
        cap: &[f64],
        next_cap: &[f64],
    ) -> Result<StepOutcome> {
        check_len("zones", self.assignment.n_zones(), zones.len())?;
        let plans = solve_all(zones, config, &self.allowances, cap)?;
        let shifted: Vec<Vec<f64>> = plans.iter().map(|p| shift_forward(&p.u)).collect::<Result<_>>()?;
        let next = self.chain(&shifted, next_cap)?;
        let used = std::mem::replace(&mut self.allowances, next);
        Ok(StepOutcome {
            applied: plans.iter().map(LocalPlan::first_input).collect(),
            plans,
            allowances: used,
        })
    }

    fn chain(&self, shifted: &[Vec<f64>], next_cap: &[f64]) -> Result<Vec<AllowanceVector>> {
        let n = self.assignment.n_zones();
        let mut next = vec![AllowanceVector(Vec::new()); n];
        let mut upstream = AllowanceVector(next_cap.to_vec());
        for m in self.assignment.chain_order() {
            next[m] = upstream.clone();
            upstream = residual_one_to_one(upstream.as_slice(), &shifted[m], next_cap)?;
        }
        Ok(next)
    }
}

/// Several zones may share a level; residuals live in an [`InfoMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultiToOne {
    assignment: PriorityAssignment,
    info: InfoMatrix,
}

impl MultiToOne {
    pub fn initial(assignment: PriorityAssignment, cap: &[f64]) -> Self {
        let info = InfoMatrix::initial(&assignment, cap);
        MultiToOne { assignment, info }
    }

    pub fn info(&self) -> &InfoMatrix {
        &self.info
    }

    pub fn step(
        &mut self,
        zones: &[LocalSolve<'_>],
        config: &HorizonConfig,
        cap: &[f64],
        next_cap: &[f64],
    ) -> Result<StepOutcome> {
        check_len("zones", self.assignment.n_zones(), zones.len())?;
        if self.info.n_levels() != self.assignment.n_levels() {
            return Err(Error::DimensionMismatch {
                context: "information matrix rows",
                expected: self.assignment.n_levels(),
                actual: self.info.n_levels(),
            });
        }
        let allowances: Vec<AllowanceVector> = (0..zones.len())
            .map(|m| AllowanceVector(self.info.row(self.assignment.level(m)).to_vec()))
            .collect();
        let plans = solve_all(zones, config, &allowances, cap)?;
        let shifted: Vec<Option<Vec<f64>>> = plans
            .iter()
            .map(|p| shift_forward(&p.u).map(Some))
            .collect::<Result<_>>()?;
        self.info = build_info_matrix(&shifted, &self.assignment, next_cap)?;
        Ok(StepOutcome {
            applied: plans.iter().map(LocalPlan::first_input).collect(),
            plans,
            allowances,
        })
    }
}
