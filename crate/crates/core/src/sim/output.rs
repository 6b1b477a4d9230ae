//! CSV writers. Column order is fixed.

use std::io::Write;

use super::closed_loop::SimulationResult;
use super::pareto::ParetoPoint;
use crate::error::Result;

pub const TRAJECTORY_HEADER: [&str; 6] = ["step", "zone", "T", "u", "allowance", "e"];
pub const PARETO_HEADER: [&str; 5] = ["strategy", "priority", "alpha", "J_u", "J_v"];

/// One row per step and zone; `T` and `e` refer to the end of the step.
pub fn write_trajectories<W: Write>(out: W, result: &SimulationResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for k in 0..result.steps() {
        for m in 0..result.inputs[k].len() {
            w.write_record([
                k.to_string(),
                (m + 1).to_string(),
                result.temperatures[k][m].to_string(),
                result.inputs[k][m].to_string(),
                result.allowances[k][m].to_string(),
                result.deviations[k][m].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn metrics_header(n_levels: usize) -> Vec<String> {
    let mut h = vec!["strategy".to_string()];
    h.extend((1..=n_levels).map(|i| format!("I_c{i}")));
    h.push("I_c0".into());
    h.extend((1..=n_levels).map(|i| format!("energy_rate_{i}")));
    h.extend(["max_violation", "total_violation", "wall_time_s"].map(String::from));
    h
}

pub fn metrics_row(r: &SimulationResult) -> Vec<String> {
    let mut row = vec![r.strategy.to_string()];
    row.extend(r.comfort_indices.iter().map(f64::to_string));
    row.push(r.overall_comfort.to_string());
    row.extend(r.energy_rates.iter().map(f64::to_string));
    row.push(r.max_cap_violation().to_string());
    row.push(r.total_cap_violation().to_string());
    row.push(format!("{:.3}", r.wall_time_s));
    row
}

/// One row per result. `wall_time_s` is the only non-deterministic column.
pub fn write_metrics<W: Write>(out: W, results: &[SimulationResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n_levels = results.first().map_or(0, |r| r.comfort_indices.len());
    w.write_record(metrics_header(n_levels))?;
    for r in results {
        w.write_record(metrics_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pareto<W: Write>(out: W, points: &[ParetoPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PARETO_HEADER)?;
    for p in points {
        w.write_record([
            p.strategy.to_string(),
            p.priority.to_string(),
            p.alpha.to_string(),
            p.j_u.to_string(),
            p.j_v.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
