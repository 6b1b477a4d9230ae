//! Comfort deviation, comfort indices and energy rates.

use crate::allocation::PriorityAssignment;
use crate::error::{Error, Result};

/// Distance of `y` outside `[lower, upper]`; zero inside or for infinite edges.
pub fn comfort_deviation(y: f64, lower: f64, upper: f64) -> f64 {
    if y < lower {
        lower - y
    } else if y > upper {
        y - upper
    } else {
        0.0
    }
}

/// `(1/K) Σ_occupied mean_{m ∈ level} |e_m(t)|`.
///
/// `deviations[t][m]` and `occupied[t]` cover the same `K` steps.
pub fn comfort_index(
    deviations: &[Vec<f64>],
    occupied: &[bool],
    assignment: &PriorityAssignment,
    level: usize,
) -> Result<f64> {
    if deviations.len() != occupied.len() {
        return Err(Error::DimensionMismatch {
            context: "occupancy mask",
            expected: deviations.len(),
            actual: occupied.len(),
        });
    }
    let members: Vec<usize> = assignment.members(level).collect();
    if members.is_empty() {
        return Err(Error::Priority(format!("level {level} has no zones")));
    }
    let k = deviations.len();
    if k == 0 {
        return Ok(0.0);
    }
    let total: f64 = deviations
        .iter()
        .zip(occupied)
        .filter(|(_, &o)| o)
        .map(|(e, _)| members.iter().map(|&m| e[m].abs()).sum::<f64>() / members.len() as f64)
        .sum();
    Ok(total / k as f64)
}

/// `sqrt(Σ θ_i I_ci²)`
pub fn overall_comfort_index(theta: &[f64], indices: &[f64]) -> Result<f64> {
    if theta.len() != indices.len() {
        return Err(Error::DimensionMismatch {
            context: "priority weights",
            expected: indices.len(),
            actual: theta.len(),
        });
    }
    Ok(theta.iter().zip(indices).map(|(t, i)| t * i * i).sum::<f64>().sqrt())
}

/// Mean applied power of a level's zones over occupied steps, W.
pub fn energy_rate(
    inputs: &[Vec<f64>],
    occupied: &[bool],
    assignment: &PriorityAssignment,
    level: usize,
) -> Result<f64> {
    let members: Vec<usize> = assignment.members(level).collect();
    if members.is_empty() {
        return Err(Error::Priority(format!("level {level} has no zones")));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (u, _) in inputs.iter().zip(occupied).filter(|(_, &o)| o) {
        sum += members.iter().map(|&m| u[m]).sum::<f64>();
        count += members.len();
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn deviation_examples() {
        assert_eq!(comfort_deviation(23.0, 22.0, 24.0), 0.0);
        assert_eq!(comfort_deviation(26.0, 22.0, 25.0), 1.0);
        assert_eq!(comfort_deviation(20.5, 22.0, 25.0), 1.5);
        assert_eq!(comfort_deviation(40.0, f64::NEG_INFINITY, f64::INFINITY), 0.0);
    }

    #[test]
    fn zero_deviation_gives_zero_indices() {
        let a = PriorityAssignment::one_per_level(3);
        let e = vec![vec![0.0; 3]; 5];
        let occ = vec![true; 5];
        let ic: Vec<f64> = (1..=3).map(|s| comfort_index(&e, &occ, &a, s).unwrap()).collect();
        assert_eq!(ic, vec![0.0; 3]);
        assert_eq!(overall_comfort_index(&[1.0, 0.1, 0.01], &ic).unwrap(), 0.0);
    }

    #[test]
    fn single_occupied_step() {
        let a = PriorityAssignment::one_per_level(1);
        let e = vec![vec![2.0], vec![3.0], vec![0.0], vec![0.0]];
        let occ = vec![true, false, false, false];
        assert_eq!(comfort_index(&e, &occ, &a, 1).unwrap(), 0.5);
    }

    #[test]
    fn shared_level_averages_zones() {
        let a = PriorityAssignment::new(vec![1, 2, 2]).unwrap();
        let e = vec![vec![0.0, 1.0, 3.0], vec![0.0, 0.0, 0.0]];
        assert_eq!(comfort_index(&e, &[true, true], &a, 2).unwrap(), 1.0);
        assert!(comfort_index(&e, &[true, true], &a, 3).is_err());
    }

    #[test]
    fn overall_index_reference_triple() {
        let ic0 = overall_comfort_index(&[1.0, 0.1, 0.01], &[0.1081, 0.3620, 1.9402]).unwrap();
        assert_abs_diff_eq!(ic0, 0.2499, epsilon = 1e-3);
    }

    #[test]
    fn energy_rate_ignores_unoccupied_steps() {
        let a = PriorityAssignment::new(vec![1, 1]).unwrap();
        let u = vec![vec![100.0, 300.0], vec![1000.0, 1000.0]];
        assert_eq!(energy_rate(&u, &[true, false], &a, 1).unwrap(), 200.0);
        assert_eq!(energy_rate(&u, &[false, false], &a, 1).unwrap(), 0.0);
    }
}
