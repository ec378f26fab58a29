use aptt::bgk::SystemOperators;
use aptt::bgk::{shifted_transport, BgkConfig};
use aptt::harness::Scenario;
use aptt::integrator::{bootstrap_first_step, cnlf_system, step_solver_settings, SimulationState};
use aptt::linsolve::{mals_solve, residual_norm, MalsSettings};
use aptt::random::{random_operator, random_tt};
use aptt::tt::{TtOperator, TtTensor};
use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

fn smooth_rhs(cfg: &BgkConfig) -> TtTensor {
    let mut cfg = cfg.clone();
    cfg.eps_b = 1e-12;
    Scenario::Trig.initial_field(&cfg).unwrap()
}

#[test]
fn identity_system_is_solved_in_one_sweep() {
    let modes = [4, 5, 3, 4];
    let r = random_tt(&modes, &[2, 3, 2], 1).unwrap();
    let a = TtOperator::identity(&modes);
    let mut s = MalsSettings::new(1e-12);
    s.local_trunc = 1e-14;
    let (x, rep) = mals_solve(&a, &r, &TtTensor::zeros(&modes), &s).unwrap();
    assert!(rep.converged && rep.sweeps_used <= 1, "{rep:?}");
    assert!(x.sub(&r).unwrap().norm() <= 1e-12 * r.norm());
    assert!(rep.final_residual <= 1e-12);
}

#[test]
fn implicit_transport_system_meets_tolerance() {
    let cfg = BgkConfig::new(2, 8);
    let a = shifted_transport(&cfg, -cfg.dt);
    let r = smooth_rhs(&cfg);
    let settings = step_solver_settings(&cfg, r.norm());
    let (x, rep) = mals_solve(&a, &r, &r, &settings).unwrap();
    assert!(rep.converged);
    assert!(rep.final_residual <= cfg.eps_d);
    assert!(residual_norm(&a, &x, &r).unwrap() <= cfg.eps_d * 1.0001);
}

#[test]
fn tt_solution_matches_dense_solve() {
    let mut cfg = BgkConfig::new(2, 8);
    cfg.eps_d = 1e-8;
    cfg.eps_b = 1e-8;
    let a = shifted_transport(&cfg, -cfg.dt);
    let r = smooth_rhs(&cfg);
    let (x, _) = mals_solve(&a, &r, &r, &step_solver_settings(&cfg, r.norm())).unwrap();
    let dense_a = a.to_dense_matrix();
    let b = Array1::from(r.to_dense().into_data());
    let exact = dense_a.solve(&b).unwrap();
    let got = Array1::from(x.to_dense().into_data());
    let err = (&got - &exact).mapv(|v| v * v).sum().sqrt() / exact.mapv(|v| v * v).sum().sqrt();
    assert!(err <= 1e-5, "{err}");
}

#[test]
fn residual_norm_cases() {
    let modes = [3, 4, 3];
    let a = random_operator(&modes, &[2, 2], 3).unwrap();
    let x = random_tt(&modes, &[2, 2], 4).unwrap();
    let r = a.apply(&x).unwrap();
    assert!(residual_norm(&a, &x, &r).unwrap() <= 1e-13 * r.norm());
    assert!((residual_norm(&a, &TtTensor::zeros(&modes), &r).unwrap() - r.norm()).abs() <= 1e-13 * r.norm());

    let r = random_tt(&modes, &[3, 2], 5).unwrap();
    let am: Array2<f64> = a.to_dense_matrix();
    let dense = am.dot(&Array1::from(x.to_dense().into_data())) - Array1::from(r.to_dense().into_data());
    let expect = dense.mapv(|v| v * v).sum().sqrt();
    let got = residual_norm(&a, &x, &r).unwrap();
    assert!((got - expect).abs() <= 1e-12 * expect);
}

#[test]
fn random_well_conditioned_system() {
    let modes = [4, 4, 4, 4];
    // identity plus a small random operator keeps the system well posed
    let pert = random_operator(&modes, &[2, 2, 2], 9).unwrap();
    let a = TtOperator::identity(&modes).add(&pert.scaled(0.05)).unwrap();
    let r = random_tt(&modes, &[2, 2, 2], 10).unwrap();
    let mut s = MalsSettings::new(1e-9 * r.norm());
    s.local_trunc = 1e-12;
    let (x, rep) = mals_solve(&a, &r, &r, &s).unwrap();
    assert!(rep.converged, "{rep:?}");
    assert!(residual_norm(&a, &x, &r).unwrap() <= s.eps_d * 1.0001);
}

#[test]
fn residual_decreases_on_leapfrog_systems() {
    let cfg = Scenario::Trig.default_config(2, 16);
    let ops = SystemOperators::new(&cfg, cfg.dt);
    let f0 = Scenario::Trig.initial_field(&cfg).unwrap();
    let f1 = bootstrap_first_step(&f0, &cfg, &ops).unwrap();
    let state = SimulationState {
        f_prev: f0,
        f_curr: f1,
        step: 1,
        time: cfg.dt,
    };
    let (rhs, predictor, _) = cnlf_system(&state, &cfg, &ops).unwrap();
    let mut strict = cfg.clone();
    strict.eps_d = 1e-11;
    strict.eps_b = 1e-12;
    let mut s = step_solver_settings(&strict, rhs.norm());
    s.max_sweeps = 4;
    let (_, rep) = mals_solve(&ops.a, &rhs, &predictor, &s).unwrap();
    let h = &rep.residual_history;
    assert!(h.len() >= 2);
    assert!(h.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-8)), "{h:?}");
    assert!(rep.converged, "{rep:?}");
}

#[test]
fn non_convergence_is_reported() {
    let cfg = BgkConfig::new(2, 8);
    let a = shifted_transport(&cfg, -cfg.dt);
    let r = smooth_rhs(&cfg);
    let mut s = MalsSettings::new(1e-300);
    s.max_sweeps = 3;
    let (x, rep) = mals_solve(&a, &r, &r, &s).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.sweeps_used, 3);
    assert!((residual_norm(&a, &x, &r).unwrap() - rep.final_residual).abs() <= 1e-9 * r.norm());
}

#[test]
fn mismatched_modes_and_bad_settings_are_rejected() {
    let a = TtOperator::identity(&[3, 3]);
    let r = TtTensor::ones(&[3, 4]);
    assert!(mals_solve(&a, &r, &r, &MalsSettings::new(1e-6)).is_err());
    let r = TtTensor::ones(&[3, 3]);
    let mut s = MalsSettings::new(1e-6);
    s.max_sweeps = 0;
    assert!(mals_solve(&a, &r, &r, &s).is_err());
}
