use hvac_mpc::allocation::{shift_forward, LocalSolve, MultiToOne, OneToOne, PriorityAssignment};
use hvac_mpc::mpc::{ComfortWindow, HorizonConfig, ZoneForecast};
use hvac_mpc::thermal::{DiscreteZoneModel, DisturbanceSample, HvacMode, ZoneState, ZoneThermalParams};
use proptest::prelude::*;

fn zone() -> DiscreteZoneModel {
    DiscreteZoneModel::new(&ZoneThermalParams::reference(), 900.0, HvacMode::Cooling).unwrap()
}

fn forecasts(t0: &[f64], outdoor: f64, p: usize) -> Vec<ZoneForecast> {
    t0.iter()
        .map(|&t| ZoneForecast {
            x0: ZoneState::uniform(t),
            disturbances: vec![DisturbanceSample::uniform_outdoor(outdoor); p],
            window: ComfortWindow::constant(p, 22.0, 24.0),
            prices: vec![0.6629; p],
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// `ĉ_{m+1}(k+1) + Σ_{j≤m} shift(u_j) = cap` whenever nothing was clamped.
    #[test]
    fn residual_chain_telescopes(
        t0 in prop::collection::vec(24.0f64..29.0, 3),
        outdoor in 28.0f64..36.0,
        cap in 300.0f64..3000.0,
        next in 300.0f64..3000.0,
    ) {
        let p = 5;
        let model = zone();
        let cfg = HorizonConfig::uniform(3, p, 1e6, 0.0, 1500.0);
        let capv = vec![cap; p];
        let next_cap = vec![next; p];
        let zones: Vec<LocalSolve> = forecasts(&t0, outdoor, p)
            .into_iter()
            .map(|forecast| LocalSolve { model: &model, forecast })
            .collect();
        let mut chain = OneToOne::initial(PriorityAssignment::one_per_level(3), &capv).unwrap();
        let out = chain.step(&zones, &cfg, &capv, &next_cap).unwrap();
        let shifted: Vec<Vec<f64>> = out.plans.iter().map(|pl| shift_forward(&pl.u).unwrap()).collect();
        prop_assert_eq!(chain.allowances()[0].as_slice(), next_cap.as_slice());
        for m in 0..2 {
            for l in 0..p {
                let used: f64 = shifted[..=m].iter().map(|s| s[l]).sum();
                let raw = next - used;
                let allowance = chain.allowances()[m + 1].as_slice()[l];
                if raw >= 0.0 {
                    prop_assert!((allowance + used - next).abs() <= 1e-9 * next);
                } else {
                    prop_assert_eq!(allowance, 0.0);
                }
            }
        }
    }

    /// Singleton levels: both protocols give the same plans and allowances step after step.
    #[test]
    fn singleton_levels_match_the_chain(
        t0 in prop::collection::vec(24.0f64..29.0, 3),
        outdoor in 28.0f64..36.0,
        cap in 300.0f64..1500.0,
    ) {
        let p = 4;
        let model = zone();
        let cfg = HorizonConfig::uniform(3, p, 1e6, 0.0, 1500.0);
        let capv = vec![cap; p];
        let mut one = OneToOne::initial(PriorityAssignment::one_per_level(3), &capv).unwrap();
        let mut multi = MultiToOne::initial(PriorityAssignment::one_per_level(3), &capv);
        let mut temps = t0.clone();
        for _ in 0..4 {
            let zones: Vec<LocalSolve> = forecasts(&temps, outdoor, p)
                .into_iter()
                .map(|forecast| LocalSolve { model: &model, forecast })
                .collect();
            let a = one.step(&zones, &cfg, &capv, &capv).unwrap();
            let b = multi.step(&zones, &cfg, &capv, &capv).unwrap();
            prop_assert_eq!(&a.applied, &b.applied);
            for m in 0..3 {
                prop_assert_eq!(one.allowances()[m].as_slice(), multi.info().row(m + 1));
            }
            temps = a.plans.iter().map(|pl| pl.y[0]).collect();
        }
    }
}
