//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Everything runs on the builtin 3-zone scenario. Results come back as flat
//! `Float64Array`s; layouts are given per function.

use hvac_mpc::sim::{build_small_scale, pareto_sweep, run_closed_loop, Scenario, Strategy, SweepMode};
use hvac_mpc::thermal::ZoneState;
use wasm_bindgen::prelude::*;

fn err(e: hvac_mpc::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn scenario(cap_per_three: f64, alpha: f64, start_hour: f64) -> Scenario {
    let mut s = build_small_scale().with_cap_per_three(cap_per_three);
    s.control.alpha = alpha;
    s.start_hour = start_hour.rem_euclid(24.0);
    s
}

/// Free-running zone 1 over `hours` with a constant cooling input `u` (W),
/// starting at midnight. One temperature per 15-minute step.
#[wasm_bindgen]
pub fn zone_response(u: f64, hours: u32) -> Result<Vec<f64>, JsError> {
    let s = build_small_scale();
    let model = s.nominal_model().map_err(err)?;
    let zone = model.zone(0);
    let mut x = ZoneState::uniform(s.zones[0].initial_temp);
    let steps = hours as usize * 4;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x.zone_temperature());
    for k in 0..steps {
        x = zone.step(&x, u, &s.disturbances(k)[0]);
        out.push(x.zone_temperature());
    }
    Ok(out)
}

/// One control step at `hour` for each strategy.
///
/// Layout: for strategy in (centralized, decentralized, distributed), for
/// zone 1..3: `[u, allowance, T_next]`. 27 values.
#[wasm_bindgen]
pub fn allocate_step(cap_per_three: f64, alpha: f64, hour: f64) -> Result<Vec<f64>, JsError> {
    let mut s = scenario(cap_per_three, alpha, hour);
    s.steps = 1;
    let mut out = Vec::with_capacity(27);
    for st in Strategy::ALL {
        s.strategy = st;
        let r = run_closed_loop(&s).map_err(err)?;
        for m in 0..s.n_zones() {
            out.extend([r.inputs[0][m], r.allowances[0][m], r.temperatures[0][m]]);
        }
    }
    Ok(out)
}

/// Single-step Pareto points at `hour` for `n` weights log-spaced over 1e3..1e8.
///
/// Rows of `[strategy (0..3), priority, alpha, J_u, J_v]`.
#[wasm_bindgen]
pub fn pareto_front(cap_per_three: f64, hour: f64, n: u32) -> Result<Vec<f64>, JsError> {
    let n = n.max(2);
    let alphas: Vec<f64> = (0..n).map(|i| 10f64.powf(3.0 + 5.0 * i as f64 / (n - 1) as f64)).collect();
    let s = scenario(cap_per_three, 1e6, hour);
    let points = pareto_sweep(&s, &alphas, &Strategy::ALL, SweepMode::SingleStep).map_err(err)?;
    Ok(points
        .iter()
        .flat_map(|p| {
            let idx = Strategy::ALL.iter().position(|&x| x == p.strategy).unwrap_or(0) as f64;
            [idx, p.priority as f64, p.alpha, p.j_u, p.j_v]
        })
        .collect())
}
