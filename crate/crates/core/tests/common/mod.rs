//! Oracles shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use hvac_mpc::qp::QpProblem;
use hvac_mpc::sim::build_small_scale;
use hvac_mpc::thermal::{build_zone_matrices, DisturbanceSample, HvacMode, ZoneState, ZoneThermalParams, ZoneVector};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const DT: f64 = 900.0;

pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, rows: usize) -> QpProblem {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0) / (n as f64).sqrt());
    let h = m.transpose() * &m + DMatrix::identity(n, n);
    let f = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
    // Boxes on a 1e-3 lattice.
    let lo = DVector::from_fn(n, |_, _| (rng.random_range(-2.0f64..-0.5) * 1e3).round() / 1e3);
    let hi = DVector::from_fn(n, |_, _| (rng.random_range(0.5f64..2.0) * 1e3).round() / 1e3);
    let g = DMatrix::from_fn(rows, n, |_, _| rng.random_range(-1.0..1.0));
    // Positive right-hand sides keep the origin strictly feasible.
    let b = DVector::from_fn(rows, |_, _| rng.random_range(0.1..0.6));
    QpProblem::new(h, f).with_inequalities(g, b).with_bounds(lo, hi)
}

/// Lattice search around the incumbent, recentred until the centre wins and
/// then refined fourfold. Points are clamped onto the box.
pub fn grid_minimum(p: &QpProblem) -> DVector<f64> {
    let n = p.n_vars();
    let half = 3i64;
    let width = (2 * half + 1) as usize;
    let mut centre: DVector<f64> = DVector::zeros(n);
    let mut step = 1.0;
    while step >= 2.5e-4 {
        loop {
            let mut best = (p.objective(&centre), centre.clone());
            let mut idx = vec![0usize; n];
            'lattice: loop {
                let z = DVector::from_fn(n, |i, _| {
                    (centre[i] + (idx[i] as i64 - half) as f64 * step).clamp(p.lower[i], p.upper[i])
                });
                let j = p.objective(&z);
                if j < best.0 {
                    best = (j, z);
                }
                for i in 0..n {
                    idx[i] += 1;
                    if idx[i] < width {
                        continue 'lattice;
                    }
                    idx[i] = 0;
                }
                break;
            }
            if best.1 == centre {
                break;
            }
            centre = best.1;
        }
        step /= 4.0;
    }
    centre
}

pub fn rk4(f: impl Fn(&ZoneVector) -> ZoneVector, x: ZoneVector, h: f64) -> ZoneVector {
    let k1 = f(&x);
    let k2 = f(&(x + k1 * (h / 2.0)));
    let k3 = f(&(x + k2 * (h / 2.0)));
    let k4 = f(&(x + k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// One day of piecewise-constant inputs and scenario disturbances.
pub fn day() -> (Vec<f64>, Vec<DisturbanceSample>) {
    let s = build_small_scale();
    let u = (0..96).map(|k| if (36..80).contains(&k) { 400.0 + 5.0 * (k % 7) as f64 } else { 0.0 }).collect();
    let d = (0..96).map(|k| s.disturbances(k)[0]).collect();
    (u, d)
}

pub fn max_relative_error(substeps: usize) -> f64 {
    let params = ZoneThermalParams::reference();
    let cont = build_zone_matrices(&params).unwrap().with_mode(HvacMode::Cooling);
    let disc = cont.discretize(DT).unwrap();
    let (u, d) = day();
    let mut xd = ZoneState::uniform(26.0).0;
    let mut xc = xd;
    let mut worst: f64 = 0.0;
    for k in 0..u.len() {
        xd = disc.step_with(&ZoneState(xd), u[k], &disc.disturbance(&d[k])).0;
        for _ in 0..substeps {
            xc = rk4(|x| cont.derivative(x, u[k], &d[k]), xc, DT / substeps as f64);
        }
        worst = worst.max((xd[0] - xc[0]).abs() / xc[0].abs());
    }
    worst
}
