use std::f64::consts::PI;

use aptt::bgk::{build_collision_term, build_transport_operator, compute_moments, conserved_sums, BgkConfig};
use aptt::harness::Scenario;
use aptt::oracle::DenseModel;
use aptt::random::random_tt;
use aptt::tt::{DenseTensor, TtTensor};
use aptt::AptError;

fn perturbed_trig(cfg: &BgkConfig, seed: u64) -> TtTensor {
    let base = Scenario::Trig.initial_field(cfg).unwrap();
    let noise = random_tt(&cfg.modes(), &vec![2; cfg.order() - 1], seed).unwrap();
    let noise = noise.scaled(1e-3 * base.norm() / noise.norm());
    base.add(&noise).unwrap()
}

#[test]
fn constant_field_moments() {
    let cfg = BgkConfig::new(2, 8);
    let model = DenseModel::new(&cfg).unwrap();
    let f = DenseTensor::from_fn(&cfg.modes(), |_| 0.25);
    let mf = model.moments(&f).unwrap();
    let expect = 0.25 * (2.0 * PI).powi(2);
    assert!(mf.rho.data().iter().all(|r| (r - expect).abs() <= 1e-12 * expect));
    let shift = -0.5 * cfg.h();
    assert!(mf.u.iter().all(|u| u.data().iter().all(|x| (x - shift).abs() <= 1e-13)));
}

#[test]
fn maxwellian_has_negligible_collision() {
    let cfg = BgkConfig::new(2, 16);
    let model = DenseModel::new(&cfg).unwrap();
    let f = Scenario::Trig.initial_field(&cfg).unwrap().to_dense();
    let q = model.collision(&f).unwrap();
    assert!(q.norm() <= 1e-6 * f.norm(), "{}", q.norm() / f.norm());
}

#[test]
fn transport_matches_tt_operator() {
    let cfg = BgkConfig::new(2, 6);
    let model = DenseModel::new(&cfg).unwrap();
    let f = perturbed_trig(&cfg, 2);
    let tt = build_transport_operator(&cfg).apply(&f).unwrap().to_dense();
    let dense = DenseTensor::new(cfg.modes(), model.transport(f.to_dense().data())).unwrap();
    assert!(tt.relative_error(&dense).unwrap() <= 1e-12);
}

#[test]
fn agrees_with_tt_model_on_random_inputs() {
    for (dim, m, seed) in [(1, 16, 1), (2, 8, 2), (3, 4, 3)] {
        let mut cfg = BgkConfig::new(dim, m);
        cfg.eps_b = 1e-10;
        let model = DenseModel::new(&cfg).unwrap();
        let f = perturbed_trig(&cfg, seed);
        let fd = f.to_dense();
        let (a, b) = (compute_moments(&f, &cfg).unwrap(), model.moments(&fd).unwrap());
        assert!(a.rho.relative_error(&b.rho).unwrap() <= 1e-12);
        assert!(a.temp.relative_error(&b.temp).unwrap() <= 1e-12);
        let q_tt = build_collision_term(&f, &cfg).unwrap().q.to_dense();
        let q_dense = model.collision(&fd).unwrap();
        // the equilibrium goes through a chain of rounded TT products, about one
        // per mode, so the error scales with the field and the order, not with the small Q
        let diff = q_tt.distance(&q_dense).unwrap();
        let budget = 10.0 * cfg.order() as f64 * cfg.eps_b * fd.norm() / cfg.kn;
        assert!(diff <= budget, "dim {dim}: {:e}", diff / fd.norm());
        let (s1, s2) = (conserved_sums(&f, &cfg).unwrap(), model.conserved_sums(&fd).unwrap());
        assert!((s1.mass - s2.mass).abs() <= 1e-12 * s2.mass);
        assert!((s1.energy - s2.energy).abs() <= 1e-12 * s2.energy);
    }
}

#[test]
fn free_transport_conserves_exactly() {
    let mut cfg = Scenario::Relaxation.default_config(2, 16);
    cfg.collisions = false;
    cfg.t_star = 20.0 * cfg.dt;
    let model = DenseModel::new(&cfg).unwrap();
    let f0 = Scenario::Relaxation.initial_field(&cfg).unwrap().to_dense();
    let s0 = model.conserved_sums(&f0).unwrap();
    model
        .run(&f0, |_, _, f| {
            let s = model.conserved_sums(f)?;
            assert!((s.mass - s0.mass).abs() <= 1e-12 * s0.mass);
            assert!((s.energy - s0.energy).abs() <= 1e-12 * s0.energy);
            for (a, b) in s.momentum.iter().zip(&s0.momentum) {
                assert!((a - b).abs() <= 1e-12 * s0.mass);
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn oversized_instances_are_refused() {
    let cfg = BgkConfig::new(2, 128);
    assert!(matches!(DenseModel::new(&cfg), Err(AptError::SizeGuard { .. })));
}

#[test]
fn run_reports_every_level() {
    let mut cfg = BgkConfig::new(1, 8);
    cfg.t_star = 0.045;
    let model = DenseModel::new(&cfg).unwrap();
    let f0 = Scenario::Trig.initial_field(&cfg).unwrap().to_dense();
    let mut times = Vec::new();
    model
        .run(&f0, |n, t, _| {
            times.push((n, t));
            Ok(())
        })
        .unwrap();
    assert_eq!(times.len(), 6);
    assert_eq!(times[5], (5, 0.045));
}
