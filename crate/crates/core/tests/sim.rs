use hvac_mpc::mpc::{solve_decentralized, HorizonConfig, ZoneForecast};
use hvac_mpc::qp::{self, QpProblem, Tolerances};
use hvac_mpc::sim::output::{write_metrics, write_pareto, write_trajectories};
use hvac_mpc::sim::{
    build_small_scale, pareto_sweep, run_closed_loop, Protocol, Scenario, Strategy, SweepMode,
};
use hvac_mpc::thermal::{MultiZoneModel, ZoneState, ZoneVector};
use nalgebra::{DMatrix, DVector};

fn short(strategy: Strategy, steps: usize) -> Scenario {
    let mut s = build_small_scale();
    s.strategy = strategy;
    s.steps = steps;
    s
}

fn initial_state(s: &Scenario) -> DVector<f64> {
    MultiZoneModel::join_states(&s.zones.iter().map(|z| ZoneState::uniform(z.initial_temp)).collect::<Vec<_>>())
}

#[test]
fn zero_capacity_hvac_follows_the_free_response() {
    for strategy in Strategy::ALL {
        let mut s = short(strategy, 96);
        s.control.u_max = 0.0;
        let r = run_closed_loop(&s).unwrap();
        let plant = s.plant_model().unwrap();
        let mut x = initial_state(&s);
        for k in 0..s.steps {
            x = plant.step(&x, &[0.0; 3], &s.disturbances(k)).unwrap();
            let y = plant.outputs(&x).unwrap();
            assert_eq!(r.temperatures[k], y, "{strategy} step {k}");
            assert!(r.inputs[k].iter().all(|u| *u == 0.0));
        }
    }
}

/// Builds the 3-zone centralized QP at one step directly in W, with the
/// prediction obtained by stepping the model on unit inputs.
fn hand_assembled_step(s: &Scenario, x: &DVector<f64>, k: usize) -> Vec<f64> {
    let model = s.nominal_model().unwrap();
    let n = s.n_zones();
    let p = s.control.horizon;
    let states = model.split_state(x).unwrap();
    let mut h_diag = Vec::new();
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let theta = &s.control.theta;
    for m in 0..n {
        for l in 0..p {
            h_diag.push(2.0 * theta[m] * s.price(k + l));
            lower.push(s.control.u_min);
            upper.push(s.control.u_max);
        }
    }
    for m in 0..n {
        let zone = model.zone(m);
        let mut free = Vec::new();
        let mut xs = states[m];
        for l in 0..p {
            xs = zone.step(&xs, 0.0, &s.disturbances(k + l)[m]);
            free.push(xs.zone_temperature());
        }
        let mut impulse = Vec::new();
        let mut xi = zone.step_with(&ZoneState(ZoneVector::zeros()), 1.0, &ZoneVector::zeros());
        for _ in 0..p {
            impulse.push(xi.zone_temperature());
            xi = zone.step_with(&xi, 0.0, &ZoneVector::zeros());
        }
        for l in 0..p {
            let t = k + l + 1;
            let (lo, hi) = s.band(m, t);
            if !s.occupied(t) || (lo.is_infinite() && hi.is_infinite()) {
                continue;
            }
            let v = h_diag.len();
            h_diag.push(2.0 * theta[m] * s.control.alpha);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            let gains: Vec<(usize, f64)> = (0..=l).map(|j| (m * p + j, impulse[l - j])).collect();
            let mut below: Vec<_> = gains.iter().map(|&(i, g)| (i, -g)).collect();
            below.push((v, -1.0));
            rows.push((below, free[l] - lo));
            let mut above = gains.clone();
            above.push((v, -1.0));
            rows.push((above, hi - free[l]));
        }
    }
    for l in 0..p {
        rows.push(((0..n).map(|m| (m * p + l, 1.0)).collect(), s.cap_at(k + l)));
    }
    let nv = h_diag.len();
    let mut g = DMatrix::zeros(rows.len(), nv);
    let mut b = DVector::zeros(rows.len());
    for (r, (row, rhs)) in rows.iter().enumerate() {
        for &(i, a) in row {
            g[(r, i)] = a;
        }
        b[r] = *rhs;
    }
    let problem = QpProblem::new(DMatrix::from_diagonal(&DVector::from_vec(h_diag)), DVector::zeros(nv))
        .with_inequalities(g, b)
        .with_bounds(DVector::from_vec(lower), DVector::from_vec(upper));
    let tol = Tolerances {
        kkt: 1e-3,
        ..Tolerances::default()
    };
    let sol = qp::solve(&problem, &tol).unwrap();
    assert!(sol.is_optimal(), "{:?}", sol.status);
    (0..n).map(|m| sol.z[m * p]).collect()
}

#[test]
fn centralized_run_matches_hand_assembled_sequence() {
    let mut s = short(Strategy::Centralized, 4);
    s.control.horizon = 2;
    s.start_hour = 13.0;
    let r = run_closed_loop(&s).unwrap();
    let plant = s.plant_model().unwrap();
    let mut x = initial_state(&s);
    for k in 0..s.steps {
        let u = hand_assembled_step(&s, &x, k);
        for m in 0..3 {
            assert!((u[m] - r.inputs[k][m]).abs() < 1e-2, "step {k} zone {m}: {} vs {}", u[m], r.inputs[k][m]);
        }
        x = plant.step(&x, &r.inputs[k], &s.disturbances(k)).unwrap();
        assert_eq!(plant.outputs(&x).unwrap(), r.temperatures[k]);
    }
    // The cap binds in this window, so the coupling row is exercised.
    assert!(r.inputs.iter().any(|u| u.iter().sum::<f64>() > 799.0));
}

#[test]
fn open_loop_plan_reproduces_its_prediction() {
    let s = build_small_scale();
    let model = s.nominal_model().unwrap();
    let zone = model.zone(0);
    let p = 8;
    let k = 44;
    let forecast = ZoneForecast {
        x0: ZoneState::uniform(26.5),
        disturbances: (k..k + p).map(|t| s.disturbances(t)[0]).collect(),
        window: s.comfort_window(0, k, p),
        prices: (k..k + p).map(|t| s.price(t)).collect(),
    };
    let cfg = HorizonConfig::uniform(3, p, 1e6, 0.0, 1500.0);
    let plan = solve_decentralized(zone, &forecast, &cfg, 0, &[800.0; 8]).unwrap();
    let mut x = forecast.x0;
    for l in 0..p {
        x = zone.step(&x, plan.u[l], &forecast.disturbances[l]);
        assert!((x.zone_temperature() - plan.y[l]).abs() < 1e-8);
    }
    assert!(plan.u.iter().any(|u| *u > 0.0));
}

#[test]
fn more_cap_never_hurts_centralized_comfort() {
    let mut last = f64::INFINITY;
    for per_three in [500.0, 800.0, 1500.0] {
        let s = short(Strategy::Centralized, 192).with_cap_per_three(per_three);
        let r = run_closed_loop(&s).unwrap();
        assert!(r.overall_comfort <= last + 1e-9, "{per_three}: {} > {last}", r.overall_comfort);
        last = r.overall_comfort;
    }
}

#[test]
fn coupled_strategies_respect_the_cap() {
    for strategy in [Strategy::Centralized, Strategy::Decentralized] {
        let r = run_closed_loop(&short(strategy, 192)).unwrap();
        // Solver feasibility tolerance is 1e-6 kW.
        assert!(r.max_cap_violation() <= 1e-3, "{strategy}: {}", r.max_cap_violation());
    }
    let r = run_closed_loop(&short(Strategy::Distributed, 192)).unwrap();
    assert_eq!(r.cap_violation.len(), 192);
    assert!(r.cap_violation.iter().all(|v| *v >= 0.0));
}

#[test]
fn result_shapes() {
    let r = run_closed_loop(&short(Strategy::Distributed, 50)).unwrap();
    assert_eq!(r.steps(), 50);
    for series in [&r.temperatures, &r.inputs, &r.allowances, &r.deviations] {
        assert_eq!(series.len(), 50);
        assert!(series.iter().all(|row| row.len() == 3));
    }
    assert!(r.comfort_indices.iter().all(|i| *i >= 0.0));
    assert_eq!(r.comfort_indices.len(), 3);
}

#[test]
fn first_priority_beats_equal_split_under_scarce_cap() {
    let dist = run_closed_loop(&short(Strategy::Distributed, 192)).unwrap();
    let dec = run_closed_loop(&short(Strategy::Decentralized, 192)).unwrap();
    assert!(dist.comfort_indices[0] < dec.comfort_indices[0]);
}

fn csv_bytes(s: &Scenario) -> (Vec<u8>, Vec<u8>) {
    let r = run_closed_loop(s).unwrap();
    let mut traj = Vec::new();
    write_trajectories(&mut traj, &r).unwrap();
    let mut metrics = Vec::new();
    let mut fixed = r.clone();
    fixed.wall_time_s = 0.0;
    write_metrics(&mut metrics, &[fixed]).unwrap();
    (traj, metrics)
}

#[test]
fn replay_is_deterministic() {
    let mut s = short(Strategy::Distributed, 96);
    s.plant.mismatch = 0.05;
    s.seed = 42;
    let a = run_closed_loop(&s).unwrap();
    let b = run_closed_loop(&s).unwrap();
    assert_eq!(a.temperatures, b.temperatures);
    assert_eq!(a.inputs, b.inputs);
    assert_eq!(csv_bytes(&s), csv_bytes(&s));
    let mut other = s.clone();
    other.seed = 43;
    assert_ne!(run_closed_loop(&other).unwrap().temperatures, a.temperatures);
}

#[test]
fn csv_columns_are_fixed() {
    let s = short(Strategy::Centralized, 3);
    let (traj, metrics) = csv_bytes(&s);
    let traj = String::from_utf8(traj).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "step,zone,T,u,allowance,e");
    assert_eq!(traj.lines().count(), 1 + 3 * 3);
    let metrics = String::from_utf8(metrics).unwrap();
    assert_eq!(
        metrics.lines().next().unwrap(),
        "strategy,I_c1,I_c2,I_c3,I_c0,energy_rate_1,energy_rate_2,energy_rate_3,max_violation,total_violation,wall_time_s"
    );
    let pts = pareto_sweep(&s, &[1e5], &[Strategy::Distributed], SweepMode::SingleStep).unwrap();
    let mut out = Vec::new();
    write_pareto(&mut out, &pts).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "strategy,priority,alpha,J_u,J_v");
    assert_eq!(text.lines().count(), 1 + 3);
}

#[test]
fn sweep_emits_one_point_per_strategy_priority_and_alpha() {
    let mut s = short(Strategy::Distributed, 8);
    s.start_hour = 12.0;
    let pts = pareto_sweep(&s, &[1e4], &Strategy::ALL, SweepMode::ClosedLoop).unwrap();
    assert_eq!(pts.len(), 9);
    assert!(pts.iter().all(|p| p.j_u >= 0.0 && p.j_v >= 0.0 && p.alpha == 1e4));
    let pts = pareto_sweep(&s, &[1e4, 1e5], &[Strategy::Centralized], SweepMode::SingleStep).unwrap();
    assert_eq!(pts.len(), 6);
    assert!(pareto_sweep(&s, &[1e4, 1e4], &Strategy::ALL, SweepMode::SingleStep).is_err());
    assert!(pareto_sweep(&s, &[0.0], &Strategy::ALL, SweepMode::SingleStep).is_err());
}

#[test]
fn solver_errors_carry_the_step() {
    let mut s = short(Strategy::Distributed, 4);
    s.control.u_min = 500.0;
    s.protocol = Protocol::OneToOne;
    let err = run_closed_loop(&s).unwrap_err();
    assert!(err.is_solver_failure());
    assert!(matches!(err, hvac_mpc::Error::AtStep { step: 0, .. }), "{err}");
}
