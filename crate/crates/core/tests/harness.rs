use aptt::bgk::BgkConfig;
use aptt::harness::config::{parse_entries, render, resolve, Entry};
use aptt::harness::io::{read_dense, read_tt, write_dense, write_tt};
use aptt::harness::study::study_config;
use aptt::harness::{
    conservation_report, convergence_study_with, total_variation, DiagnosticsRow, RunDiagnostics, Scenario, StudySolver,
};
use aptt::integrator::run_simulation;
use aptt::random::{random_dense, random_tt};
use aptt::tt::{DenseTensor, TtTensor};
use aptt::AptError;

fn uniform_maxwellian(cfg: &BgkConfig) -> TtTensor {
    let gauss: Vec<f64> = cfg
        .nodes()
        .iter()
        .map(|v| (cfg.bo / (2.0 * std::f64::consts::PI)).sqrt() * (-cfg.bo * v * v / 2.0).exp())
        .collect();
    let mut factors = vec![vec![1.0; cfg.m]; cfg.dim];
    factors.extend(vec![gauss; cfg.dim]);
    TtTensor::rank_one(&factors)
}

#[test]
fn empty_config_gives_default_parameters() {
    let cfg = resolve(&parse_entries("").unwrap(), &[Entry::flag("scenario", "trig")]).unwrap();
    let b = &cfg.bgk;
    assert_eq!(cfg.scenario, Scenario::Trig);
    assert_eq!((b.k_coll, b.mu, b.kn, b.bo), (1.0, 0.5, 1.0, 3.65));
    assert_eq!((b.eps_b, b.eps_d, b.dt), (1e-6, 1e-6, 0.01));
    assert!(!cfg.compare_oracle);
}

#[test]
fn scenario_defaults_follow_the_experiments() {
    let r = Scenario::Relaxation.default_config(3, 16);
    assert_eq!((r.kn, r.dt), (10.0, 0.005));
    let d = Scenario::Discontinuous.default_config(3, 16);
    assert_eq!(
        (d.kn, d.eps_b, d.eps_d, d.dt, d.eps_diss),
        (10.0, 1e-5, 1e-5, 0.002, 0.1)
    );
}

#[test]
fn zero_grid_size_names_the_constraint() {
    let err = resolve(&[], &[Entry::flag("m", 0)]).unwrap_err();
    match err {
        AptError::Config { field, message } => {
            assert_eq!(field, "m");
            assert!(message.contains(">= 4"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn bad_values_name_their_field() {
    let file = parse_entries("m = 8\ndt = fast\n").unwrap();
    let err = resolve(&file, &[]).unwrap_err().to_string();
    assert!(err.contains("`dt`") && err.contains("line 2"), "{err}");
}

#[test]
fn rendered_config_round_trips() {
    let flags = [
        Entry::flag("scenario", "discontinuous"),
        Entry::flag("dim", 3),
        Entry::flag("m", 8),
        Entry::flag("dt", 0.1 + 0.2),
        Entry::flag("compare_oracle", true),
    ];
    let cfg = resolve(&[], &flags).unwrap();
    let again = resolve(&parse_entries(&render(&cfg)).unwrap(), &[]).unwrap();
    assert_eq!(cfg, again);
}

fn sample_diagnostics(with_oracle: bool) -> RunDiagnostics {
    let mut d = RunDiagnostics::new(2, with_oracle);
    for step in 0..4 {
        d.rows.push(DiagnosticsRow {
            step,
            time: step as f64 * 0.1,
            rank_max: 3 + step,
            rank_avg: 1.0 / 3.0 + step as f64,
            mals_sweeps: step.saturating_sub(1),
            mals_residual: (step > 1).then(|| 1e-9 / 7.0),
            mass: 1.0 + 1e-13 * step as f64,
            momentum: vec![0.0, -2e-17 * step as f64],
            energy: std::f64::consts::PI,
            rel_err_oracle: with_oracle.then_some(3e-8 * step as f64),
            wall_ms: 12.5,
        });
    }
    d
}

#[test]
fn csv_round_trip_is_lossless() {
    for with_oracle in [false, true] {
        let d = sample_diagnostics(with_oracle);
        let text = d.to_csv();
        assert_eq!(RunDiagnostics::parse_csv(&text).unwrap(), d);
    }
    let header = sample_diagnostics(true).to_csv().lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "step,time,rank_max,rank_avg,mals_sweeps,mals_residual,mass,momentum_1,momentum_2,energy,rel_err_oracle,wall_ms"
    );
}

#[test]
fn csv_rows_must_increase() {
    let mut d = sample_diagnostics(false);
    d.rows.swap(1, 2);
    assert!(RunDiagnostics::parse_csv(&d.to_csv()).is_err());
}

#[test]
fn zero_momentum_is_reported_as_absolute_drift() {
    let rep = conservation_report(&sample_diagnostics(false));
    assert!((rep.mass.max_rel.unwrap() - 3e-13).abs() < 1e-15);
    assert!(rep.momentum[0].max_rel.is_none() && rep.momentum[0].max_abs == 0.0);
    assert!(rep.momentum[1].max_rel.is_none());
    assert!((rep.momentum[1].max_abs - 6e-17).abs() < 1e-30);
    assert_eq!(rep.energy.max_abs, 0.0);
}

#[test]
fn dumps_round_trip_bit_exactly() {
    let dense = random_dense(&[4, 4, 4, 4], 3);
    let mut buf = Vec::new();
    write_dense(&mut buf, 2, 4, &dense).unwrap();
    assert!(buf.starts_with(b"APTT1 2 4 4\n"));
    assert_eq!(buf.len(), 12 + 8 * 256);
    let (d, m, back) = read_dense(buf.as_slice()).unwrap();
    assert_eq!((d, m), (2, 4));
    assert_eq!(back, dense);

    let tt = random_tt(&[4, 4, 4, 4], &[2, 3, 2], 5).unwrap();
    let mut buf = Vec::new();
    write_tt(&mut buf, 2, 4, &tt).unwrap();
    assert!(buf.starts_with(b"APTT1 2 4 4 tt\n"));
    let (_, _, back) = read_tt(buf.as_slice()).unwrap();
    assert_eq!(back.cores(), tt.cores());
}

#[test]
fn truncated_dump_is_rejected() {
    let mut buf = Vec::new();
    write_dense(&mut buf, 1, 4, &random_dense(&[4, 4], 1)).unwrap();
    buf.truncate(buf.len() - 3);
    assert!(read_dense(buf.as_slice()).is_err());
    assert!(read_dense(&b"APTT2 1 4 2\n"[..]).is_err());
}

#[test]
fn total_variation_of_a_step() {
    // one jump up and one down along each row, nothing along columns
    let f = DenseTensor::from_fn(&[4, 4], |i| if i[1] == 1 { 3.0 } else { 1.0 });
    assert_eq!(total_variation(&f), 4.0 * 4.0);
    let c = DenseTensor::from_fn(&[4, 4, 4], |_| 2.0);
    assert_eq!(total_variation(&c), 0.0);
}

#[test]
fn uniform_maxwellian_has_no_convergence_order() {
    let mut base = BgkConfig::new(1, 8);
    base.t_star = 0.25;
    base.eps_b = 1e-7;
    base.eps_d = 1e-7;
    base.collisions = false;
    let table = convergence_study_with(&[8, 16], &base, StudySolver::Tt, |c| Ok(uniform_maxwellian(c))).unwrap();
    assert_eq!(table.reference_m, 32);
    for l in &table.levels {
        assert!(l.error <= table.noise_floor, "{l:?} floor {}", table.noise_floor);
        assert!(l.order.is_none());
    }
    assert!(table.render().contains("N/A"));
}

#[test]
fn study_levels_use_quarter_cell_time_steps() {
    let base = BgkConfig::new(2, 8);
    assert_eq!(study_config(&base, 32).dt, 1.0 / 128.0);
    assert!(convergence_study_with(&[16, 8], &base, StudySolver::Tt, |c| Ok(uniform_maxwellian(c))).is_err());
}

#[test]
fn stationary_maxwellian_conserves_within_tolerance() {
    let mut cfg = BgkConfig::new(2, 16);
    cfg.t_star = 0.2;
    let f0 = uniform_maxwellian(&cfg);
    let mut diag = RunDiagnostics::new(2, false);
    run_simulation(&f0, &cfg, |rec, _| {
        diag.rows.push(DiagnosticsRow::from_record(rec, None));
        Ok(())
    })
    .unwrap();
    let rep = conservation_report(&diag);
    assert!(rep.worst() <= 10.0 * (cfg.eps_b + cfg.eps_d), "{}", rep.render());
}
