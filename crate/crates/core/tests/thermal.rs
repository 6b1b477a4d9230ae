mod common;

use common::{day, max_relative_error, DT};
use hvac_mpc::thermal::{build_zone_matrices, ZoneState, ZoneThermalParams};

#[test]
fn zero_order_hold_matches_fine_integration_over_a_day() {
    let err = max_relative_error(1000);
    assert!(err < 1e-3, "relative error {err:e}");
}

#[test]
fn integration_error_shrinks_with_substeps() {
    // Coarse RK4 is far from the exact hold; refinement must close the gap monotonically.
    let errs: Vec<f64> = [1, 2, 4, 8, 16].map(max_relative_error).to_vec();
    for w in errs.windows(2) {
        assert!(w[1] < w[0] || w[1] < 1e-12, "{errs:?}");
    }
}

#[test]
fn two_half_steps_equal_one_full_step() {
    // Zero-order hold is exact for piecewise-constant inputs.
    let cont = build_zone_matrices(&ZoneThermalParams::reference()).unwrap();
    let full = cont.discretize(DT).unwrap();
    let half = cont.discretize(DT / 2.0).unwrap();
    let (u, d) = day();
    let x0 = ZoneState::uniform(25.0);
    let a = full.step(&x0, u[50], &d[50]);
    let b = half.step(&half.step(&x0, u[50], &d[50]), u[50], &d[50]);
    assert!((a.0 - b.0).amax() < 1e-9);
}
