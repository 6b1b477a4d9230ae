use nalgebra::DVector;

use super::metrics::{comfort_deviation, comfort_index, energy_rate, overall_comfort_index};
use super::scenario::{Protocol, Scenario, Strategy};
use crate::allocation::{LocalSolve, PriorityAssignment, MultiToOne, OneToOne, StepOutcome};
use crate::error::{Error, Result};
use crate::mpc::{solve_centralized, solve_decentralized, HorizonConfig, LocalPlan, ZoneForecast};
use crate::thermal::{MultiZoneModel, ZoneState};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub strategy: Strategy,
    /// Zone air temperature after each step, `[k][m]`, k = 1..K.
    pub temperatures: Vec<Vec<f64>>,
    /// Applied input `u_m(k)`, `[k][m]`, k = 0..K−1.
    pub inputs: Vec<Vec<f64>>,
    /// Input ceiling the zone solved against at step k, W.
    pub allowances: Vec<Vec<f64>>,
    /// Comfort deviation of each entry of `temperatures`.
    pub deviations: Vec<Vec<f64>>,
    /// Occupancy at the time of each entry of `temperatures`.
    pub occupied: Vec<bool>,
    /// `max(0, Σ_m u_m(k) − cap(k))`
    pub cap_violation: Vec<f64>,
    /// `I_ci` per priority level.
    pub comfort_indices: Vec<f64>,
    pub overall_comfort: f64,
    /// Mean occupied-hour power per priority level, W.
    pub energy_rates: Vec<f64>,
    /// Accumulated `Σ λ u²` per priority level, averaged over the level's zones.
    pub energy_cost: Vec<f64>,
    /// Accumulated `Σ δ e²` per priority level, averaged over the level's zones.
    pub comfort_cost: Vec<f64>,
    pub wall_time_s: f64,
}

impl SimulationResult {
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    pub fn max_cap_violation(&self) -> f64 {
        self.cap_violation.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_cap_violation(&self) -> f64 {
        self.cap_violation.iter().sum()
    }
}

enum Controller {
    Centralized,
    Decentralized,
    OneToOne(OneToOne),
    MultiToOne(MultiToOne),
}

impl Controller {
    fn new(scenario: &Scenario, assignment: &PriorityAssignment, cap0: &[f64]) -> Result<Self> {
        Ok(match scenario.strategy {
            Strategy::Centralized => Controller::Centralized,
            Strategy::Decentralized => Controller::Decentralized,
            Strategy::Distributed => match scenario.resolved_protocol()? {
                Protocol::OneToOne => Controller::OneToOne(OneToOne::initial(assignment.clone(), cap0)?),
                _ => Controller::MultiToOne(MultiToOne::initial(assignment.clone(), cap0)),
            },
        })
    }
}

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Inputs the controller sees at one step.
pub(crate) struct StepInputs {
    /// Raw samples over `k .. k+P−1`, per zone.
    pub raw: Vec<ZoneForecast>,
    /// Same, with neighbour temperatures substituted, for local solves.
    pub local: Vec<ZoneForecast>,
    pub cap: Vec<f64>,
    pub next_cap: Vec<f64>,
}

pub(crate) fn step_inputs(scenario: &Scenario, model: &MultiZoneModel, states: &[ZoneState], k: usize) -> Result<StepInputs> {
    let n = scenario.n_zones();
    let p = scenario.control.horizon;
    let temps: Vec<f64> = states.iter().map(ZoneState::zone_temperature).collect();
    let mut raw_samples = vec![Vec::with_capacity(p); n];
    let mut local_samples = vec![Vec::with_capacity(p); n];
    for l in 0..p {
        let raw = scenario.disturbances(k + l);
        let local = model.resolve_disturbances(&temps, &raw)?;
        for m in 0..n {
            raw_samples[m].push(raw[m]);
            local_samples[m].push(local[m]);
        }
    }
    let prices: Vec<f64> = (k..k + p).map(|t| scenario.price(t)).collect();
    let forecast = |m: usize, disturbances: Vec<_>| ZoneForecast {
        x0: states[m],
        disturbances,
        window: scenario.comfort_window(m, k, p),
        prices: prices.clone(),
    };
    let raw = raw_samples.into_iter().enumerate().map(|(m, d)| forecast(m, d)).collect();
    let local = local_samples.into_iter().enumerate().map(|(m, d)| forecast(m, d)).collect();
    Ok(StepInputs {
        raw,
        local,
        cap: scenario.cap_window(k, p),
        next_cap: scenario.cap_window(k + 1, p),
    })
}

fn decentralized_step(
    model: &MultiZoneModel,
    forecasts: &[ZoneForecast],
    config: &HorizonConfig,
    cap: &[f64],
) -> Result<Vec<LocalPlan>> {
    let solve = |m: usize| solve_decentralized(model.zone(m), &forecasts[m], config, m, cap);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..forecasts.len()).into_par_iter().map(solve).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..forecasts.len()).map(solve).collect()
    }
}

/// Plans of every zone at step `k`, plus the ceilings they were solved with.
fn controller_step(
    controller: &mut Controller,
    model: &MultiZoneModel,
    config: &HorizonConfig,
    inputs: StepInputs,
) -> Result<(Vec<LocalPlan>, Vec<f64>)> {
    let n = model.n_zones();
    match controller {
        Controller::Centralized => {
            let plan = solve_centralized(model, &inputs.raw, config, &inputs.cap)?;
            Ok((plan.plans, vec![inputs.cap[0]; n]))
        }
        Controller::Decentralized => {
            let plans = decentralized_step(model, &inputs.local, config, &inputs.cap)?;
            Ok((plans, vec![inputs.cap[0] / n as f64; n]))
        }
        Controller::OneToOne(_) | Controller::MultiToOne(_) => {
            let zones: Vec<LocalSolve<'_>> = inputs
                .local
                .into_iter()
                .enumerate()
                .map(|(m, forecast)| LocalSolve {
                    model: model.zone(m),
                    forecast,
                })
                .collect();
            let out: StepOutcome = match controller {
                Controller::OneToOne(c) => c.step(&zones, config, &inputs.cap, &inputs.next_cap)?,
                Controller::MultiToOne(c) => c.step(&zones, config, &inputs.cap, &inputs.next_cap)?,
                _ => unreachable!(),
            };
            let ceilings = out
                .allowances
                .iter()
                .map(|a| a.as_slice()[0].clamp(0.0, inputs.cap[0].max(0.0)))
                .collect();
            Ok((out.plans, ceilings))
        }
    }
}

/// Drives the plant with the scenario's strategy for `K` steps.
pub fn run_closed_loop(scenario: &Scenario) -> Result<SimulationResult> {
    scenario.validate()?;
    let model = scenario.nominal_model()?;
    let plant = scenario.plant_model()?;
    let config = scenario.horizon_config();
    let assignment = scenario.assignment()?;
    let n = scenario.n_zones();
    let k_end = scenario.steps;
    let cap0 = scenario.cap_window(0, config.horizon);

    let mut controller = Controller::new(scenario, &assignment, &cap0)?;

    let mut x: DVector<f64> =
        MultiZoneModel::join_states(&scenario.zones.iter().map(|z| ZoneState::uniform(z.initial_temp)).collect::<Vec<_>>());
    let mut temperatures = Vec::with_capacity(k_end);
    let mut inputs = Vec::with_capacity(k_end);
    let mut allowances = Vec::with_capacity(k_end);
    let mut deviations = Vec::with_capacity(k_end);
    let mut occupied = Vec::with_capacity(k_end);
    let mut cap_violation = Vec::with_capacity(k_end);

    let clock = Stopwatch::start();
    for k in 0..k_end {
        let states = plant.split_state(&x)?;
        let step = step_inputs(scenario, &plant, &states, k).map_err(|e| e.at_step(k))?;
        let (plans, ceilings) = controller_step(&mut controller, &model, &config, step).map_err(|e| e.at_step(k))?;
        let u: Vec<f64> = plans.iter().map(LocalPlan::first_input).collect();
        x = plant.step(&x, &u, &scenario.disturbances(k)).map_err(|e| e.at_step(k))?;

        let t = k + 1;
        let y = plant.outputs(&x)?;
        let e: Vec<f64> = (0..n)
            .map(|m| {
                let (lo, hi) = scenario.band(m, t);
                comfort_deviation(y[m], lo, hi)
            })
            .collect();
        cap_violation.push((u.iter().sum::<f64>() - scenario.cap_at(k)).max(0.0));
        occupied.push(scenario.occupied(t));
        temperatures.push(y);
        inputs.push(u);
        allowances.push(ceilings);
        deviations.push(e);
    }
    let wall_time_s = clock.seconds();

    let levels = 1..=assignment.n_levels();
    let comfort_indices: Vec<f64> = levels
        .clone()
        .map(|s| comfort_index(&deviations, &occupied, &assignment, s))
        .collect::<Result<_>>()?;
    let overall_comfort = overall_comfort_index(&scenario.control.theta, &comfort_indices)?;
    let energy_rates = levels
        .clone()
        .map(|s| energy_rate(&inputs, &occupied, &assignment, s))
        .collect::<Result<_>>()?;

    let level_mean = |s: usize, f: &dyn Fn(usize) -> f64| {
        let members: Vec<usize> = assignment.members(s).collect();
        members.iter().map(|&m| f(m)).sum::<f64>() / members.len() as f64
    };
    let energy_cost = levels
        .clone()
        .map(|s| level_mean(s, &|m| (0..k_end).map(|k| scenario.price(k) * inputs[k][m].powi(2)).sum()))
        .collect();
    let comfort_cost = levels
        .map(|s| {
            level_mean(s, &|m| {
                (0..k_end)
                    .filter(|&k| occupied[k])
                    .map(|k| deviations[k][m].powi(2))
                    .sum()
            })
        })
        .collect();

    Ok(SimulationResult {
        strategy: scenario.strategy,
        temperatures,
        inputs,
        allowances,
        deviations,
        occupied,
        cap_violation,
        comfort_indices,
        overall_comfort,
        energy_rates,
        energy_cost,
        comfort_cost,
        wall_time_s,
    })
}

/// First-step plans only: per-level `(Jᵘ, Jᵛ)` of the open-loop optimum at `k = 0`.
pub fn single_step_costs(scenario: &Scenario) -> Result<(Vec<f64>, Vec<f64>)> {
    scenario.validate()?;
    let model = scenario.nominal_model()?;
    let config = scenario.horizon_config();
    let assignment = scenario.assignment()?;
    let cap0 = scenario.cap_window(0, config.horizon);
    let mut controller = Controller::new(scenario, &assignment, &cap0)?;
    let states: Vec<ZoneState> = scenario.zones.iter().map(|z| ZoneState::uniform(z.initial_temp)).collect();
    let inputs = step_inputs(scenario, &model, &states, 0)?;
    let (plans, _) = controller_step(&mut controller, &model, &config, inputs).map_err(|e| e.at_step(0))?;
    let mut ju = Vec::with_capacity(assignment.n_levels());
    let mut jv = Vec::with_capacity(assignment.n_levels());
    for s in 1..=assignment.n_levels() {
        let members: Vec<usize> = assignment.members(s).collect();
        let count = members.len() as f64;
        ju.push(members.iter().map(|&m| plans[m].energy_cost).sum::<f64>() / count);
        jv.push(members.iter().map(|&m| plans[m].comfort_cost).sum::<f64>() / count);
    }
    if ju.iter().chain(&jv).any(|v| !v.is_finite()) {
        return Err(Error::Solve {
            status: "non-finite cost".into(),
        });
    }
    Ok((ju, jv))
}
