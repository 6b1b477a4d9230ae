use super::assembly::{assemble, ZoneBlock};
use super::{build_cost_terms, build_multizone_prediction, build_prediction, CostTerms, HorizonConfig, LocalPlan, Prediction, ZoneForecast};
use crate::error::{Error, Result};
use crate::qp::Tolerances;
use crate::thermal::{DiscreteZoneModel, MultiZoneModel};

#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedPlan {
    pub plans: Vec<LocalPlan>,
    /// `Σ θ_m (α Jᵛ_m + Jᵘ_m)`
    pub objective: f64,
}

fn check_zone(config: &HorizonConfig, zone: usize) -> Result<()> {
    config.validate()?;
    if zone >= config.n_zones() {
        return Err(Error::DimensionMismatch {
            context: "zone index",
            expected: config.n_zones(),
            actual: zone,
        });
    }
    Ok(())
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

struct LocalData {
    prediction: Prediction,
    costs: CostTerms,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

fn solve_local(
    model: &DiscreteZoneModel,
    forecast: &ZoneForecast,
    config: &HorizonConfig,
    zone: usize,
    input_ceiling: impl Fn(usize) -> f64,
) -> Result<LocalPlan> {
    let horizon = config.horizon;
    let prediction = build_prediction(model, &forecast.x0, &forecast.disturbances, horizon)?;
    let costs = build_cost_terms(&forecast.window, &forecast.prices, horizon)?;
    let lower = vec![config.u_min[zone]; horizon];
    let upper: Vec<f64> = (0..horizon)
        .map(|l| config.u_max[zone].min(input_ceiling(l)))
        .collect();
    if let Some(l) = (0..horizon).find(|&l| upper[l] < lower[l]) {
        return Err(Error::ZoneSolve {
            zone,
            status: format!(
                "infeasible input box at step {l}: allowance {} below u_min {}",
                upper[l], lower[l]
            ),
        });
    }
    let data = LocalData {
        prediction,
        costs,
        lower,
        upper,
    };
    let block = ZoneBlock {
        zone,
        prediction: &data.prediction,
        costs: &data.costs,
        lower: &data.lower,
        upper: &data.upper,
        band_lower: &forecast.window.lower,
        band_upper: &forecast.window.upper,
        theta: 1.0,
        alpha: config.alpha,
    };
    let blocks = [block];
    let assembled = assemble(&blocks, None)?;
    let sol = assembled.solve(&Tolerances::default())?;
    if !sol.is_optimal() {
        return Err(Error::ZoneSolve {
            zone,
            status: sol.status.to_string(),
        });
    }
    Ok(assembled.extract(&blocks, &sol).remove(0))
}

/// Local problem with the cap split equally: `u ≤ cap / n_zones`.
pub fn solve_decentralized(
    model: &DiscreteZoneModel,
    forecast: &ZoneForecast,
    config: &HorizonConfig,
    zone: usize,
    cap: &[f64],
) -> Result<LocalPlan> {
    check_zone(config, zone)?;
    check_len("cap horizon", config.horizon, cap.len())?;
    let n = config.n_zones() as f64;
    solve_local(model, forecast, config, zone, |l| cap[l] / n)
}

/// Local problem bounded by a residual allowance, `u ≤ ĉ`.
///
/// The allowance is clamped to `[0, cap]` before use.
pub fn solve_distributed_local(
    model: &DiscreteZoneModel,
    forecast: &ZoneForecast,
    config: &HorizonConfig,
    zone: usize,
    allowance: &[f64],
    cap: &[f64],
) -> Result<LocalPlan> {
    check_zone(config, zone)?;
    check_len("allowance horizon", config.horizon, allowance.len())?;
    check_len("cap horizon", config.horizon, cap.len())?;
    solve_local(model, forecast, config, zone, |l| allowance[l].clamp(0.0, cap[l].max(0.0)))
}

/// One problem over all zones with the shared cap as a coupling constraint.
pub fn solve_centralized(
    model: &MultiZoneModel,
    forecasts: &[ZoneForecast],
    config: &HorizonConfig,
    cap: &[f64],
) -> Result<CentralizedPlan> {
    config.validate()?;
    let n = model.n_zones();
    let horizon = config.horizon;
    check_len("zone weights", n, config.n_zones())?;
    check_len("zone forecasts", n, forecasts.len())?;
    check_len("cap horizon", horizon, cap.len())?;

    let x0: Vec<_> = forecasts.iter().map(|f| f.x0).collect();
    let dist: Vec<_> = forecasts.iter().map(|f| f.disturbances.clone()).collect();
    let predictions = build_multizone_prediction(model, &x0, &dist, horizon)?;
    let costs: Vec<CostTerms> = forecasts
        .iter()
        .map(|f| build_cost_terms(&f.window, &f.prices, horizon))
        .collect::<Result<_>>()?;
    let lower: Vec<Vec<f64>> = (0..n).map(|m| vec![config.u_min[m]; horizon]).collect();
    let upper: Vec<Vec<f64>> = (0..n).map(|m| vec![config.u_max[m]; horizon]).collect();

    let blocks: Vec<ZoneBlock<'_>> = (0..n)
        .map(|m| ZoneBlock {
            zone: m,
            prediction: &predictions[m],
            costs: &costs[m],
            lower: &lower[m],
            upper: &upper[m],
            band_lower: &forecasts[m].window.lower,
            band_upper: &forecasts[m].window.upper,
            theta: config.theta[m],
            alpha: config.alpha,
        })
        .collect();
    let assembled = assemble(&blocks, Some(cap))?;
    let sol = assembled.solve(&Tolerances::default())?;
    if !sol.is_optimal() {
        return Err(Error::Solve {
            status: sol.status.to_string(),
        });
    }
    let plans = assembled.extract(&blocks, &sol);
    let objective = plans
        .iter()
        .zip(&config.theta)
        .map(|(p, t)| t * p.objective)
        .sum();
    Ok(CentralizedPlan { plans, objective })
}
