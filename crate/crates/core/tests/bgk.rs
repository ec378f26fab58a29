use std::f64::consts::PI;

use aptt::bgk::{
    build_collision_term, build_dissipation_operator, build_equilibrium, build_transport_operator,
    build_upwind_matrices, collision_frequency, compute_moments, conserved_sums, fourth_difference, BgkConfig,
    MacroFields,
};
use aptt::oracle::DenseModel;
use aptt::random::random_tt;
use aptt::tt::{DenseTensor, TtTensor};
use ndarray::Array2;

fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (p, q) = a.dim();
    let (r, s) = b.dim();
    Array2::from_shape_fn((p * r, q * s), |(i, j)| a[[i / r, j / s]] * b[[i % r, j % s]])
}

fn kron_all(factors: &[Array2<f64>]) -> Array2<f64> {
    factors[1..].iter().fold(factors[0].clone(), |acc, f| kron(&acc, f))
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

/// Maxwellian-like positive field with spatial structure.
fn smooth_field(cfg: &BgkConfig) -> TtTensor {
    let x = cfg.nodes();
    let gauss: Vec<f64> = x.iter().map(|v| (-cfg.bo * (v - 0.3).powi(2) / 2.0).exp()).collect();
    let shifted: Vec<f64> = x.iter().map(|v| (-cfg.bo * (v + 0.2).powi(2) / 1.6).exp()).collect();
    let bump: Vec<f64> = x.iter().map(|v| 1.0 + 0.4 * v.cos()).collect();
    let mut a = vec![vec![1.0; cfg.m]; cfg.dim];
    a.extend(vec![gauss; cfg.dim]);
    let mut b = vec![bump; cfg.dim];
    b.extend(vec![shifted; cfg.dim]);
    TtTensor::rank_one(&a).add(&TtTensor::rank_one(&b).scaled(0.5)).unwrap()
}

/// Brute-force moments of a dense field laid out as `(x..., v...)`.
fn brute_moments(f: &DenseTensor, cfg: &BgkConfig) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let (dim, m) = (cfg.dim, cfg.m);
    let v = cfg.nodes();
    let nv = m.pow(dim as u32);
    let nx = f.len() / nv;
    let hd = cfg.h().powi(dim as i32);
    let vel = |l: usize, i: usize| v[(l / m.pow((dim - 1 - i) as u32)) % m];
    let mut rho = vec![0.0; nx];
    let mut u = vec![vec![0.0; nx]; dim];
    let mut temp = vec![0.0; nx];
    for k in 0..nx {
        let block = &f.data()[k * nv..(k + 1) * nv];
        rho[k] = hd * block.iter().sum::<f64>();
        for i in 0..dim {
            u[i][k] = hd * block.iter().enumerate().map(|(l, x)| vel(l, i) * x).sum::<f64>() / rho[k];
        }
        let spread: f64 = block
            .iter()
            .enumerate()
            .map(|(l, x)| x * (0..dim).map(|i| (vel(l, i) - u[i][k]).powi(2)).sum::<f64>())
            .sum();
        temp[k] = cfg.bo * hd * spread / (dim as f64 * rho[k]);
    }
    (rho, u, temp)
}

#[test]
fn forward_difference_is_second_order() {
    let err = |m: usize| {
        let cfg = BgkConfig::new(1, m);
        let x = cfg.nodes();
        let up = build_upwind_matrices(m, &x);
        let s = ndarray::Array1::from_iter(x.iter().map(|v| v.sin()));
        let d = up.dplus.dot(&s);
        x.iter()
            .zip(d.iter())
            .map(|(v, dv)| (v.cos() - dv).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(8) / err(16);
    assert!((3.5..4.6).contains(&ratio), "ratio {ratio}");
    let ratio = err(16) / err(32);
    assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn fourth_difference_has_binomial_stencil() {
    let cfg = BgkConfig::new(1, 8);
    let d = fourth_difference(8);
    let h4 = cfg.h().powi(4);
    let row: Vec<f64> = d.row(0).iter().map(|v| (v * h4 * 1e9).round() / 1e9).collect();
    assert_eq!(row, vec![6.0, -4.0, 1.0, 0.0, 0.0, 0.0, 1.0, -4.0]);
}

#[test]
fn transport_matches_kronecker_assembly() {
    let cfg = BgkConfig::new(2, 4);
    let u = build_upwind_matrices(4, &cfg.nodes());
    let id = Array2::<f64>::eye(4);
    let mut expect = Array2::<f64>::zeros((256, 256));
    for i in 0..2 {
        for (d, v) in [(&u.dplus, &u.vplus), (&u.dminus, &u.vminus)] {
            let mut f = vec![id.clone(); 4];
            f[i] = d.clone();
            f[2 + i] = v.clone();
            expect = expect - kron_all(&f);
        }
    }
    let got = build_transport_operator(&cfg).to_dense_matrix();
    assert!(
        max_abs_diff(&got, &expect) <= 1e-13 * 1e2,
        "{}",
        max_abs_diff(&got, &expect)
    );
}

#[test]
fn dissipation_matches_kronecker_assembly() {
    let cfg = BgkConfig::new(2, 4);
    let d4 = fourth_difference(4);
    let id = Array2::<f64>::eye(4);
    let expect =
        kron_all(&[d4.clone(), id.clone(), id.clone(), id.clone()]) + kron_all(&[id.clone(), d4, id.clone(), id]);
    let got = build_dissipation_operator(&cfg).to_dense_matrix();
    let scale = expect.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max_abs_diff(&got, &expect) <= 1e-13 * scale);
}

#[test]
fn operator_ranks() {
    let cfg = BgkConfig::new(3, 6);
    assert!(build_transport_operator(&cfg).max_rank() <= 6);
    assert!(build_dissipation_operator(&cfg).max_rank() <= 3);
}

#[test]
fn operators_annihilate_spatially_constant_fields() {
    for m in [4, 6, 8] {
        let cfg = BgkConfig::new(1, m);
        let l = build_transport_operator(&cfg).to_dense_matrix();
        let d = build_dissipation_operator(&cfg).to_dense_matrix();
        // any field constant in x: f(x, v) = g(v)
        let g: Vec<f64> = (0..m).map(|j| 1.0 + j as f64 * 0.37).collect();
        let f = ndarray::Array1::from_iter((0..m * m).map(|k| g[k % m]));
        for op in [&l, &d] {
            let scale = op.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let out = op.dot(&f);
            assert!(out.iter().all(|v| v.abs() <= 1e-12 * scale), "m={m}");
        }
    }
    let cfg = BgkConfig::new(2, 6);
    let ones = TtTensor::ones(&cfg.modes());
    assert!(build_transport_operator(&cfg).apply(&ones).unwrap().norm() <= 1e-10);
    assert!(build_dissipation_operator(&cfg).apply(&ones).unwrap().norm() <= 1e-8);
}

#[test]
fn constant_field_moments() {
    for dim in 1..=3 {
        let cfg = BgkConfig::new(dim, 8);
        let c = 0.7;
        let f = TtTensor::ones(&cfg.modes()).scaled(c);
        let mf = compute_moments(&f, &cfg).unwrap();
        let expect = c * (2.0 * PI).powi(dim as i32);
        assert!(mf.rho.data().iter().all(|r| (r - expect).abs() <= 1e-12 * expect));
        // nodes run from -pi to pi - h, so their plain mean is -h/2
        let shift = -0.5 * cfg.h();
        assert!(mf.u.iter().all(|u| u.data().iter().all(|x| (x - shift).abs() <= 1e-12)));
    }
}

#[test]
fn constant_field_with_zeroed_boundary_node_has_no_mean_velocity() {
    for dim in 1..=3 {
        let cfg = BgkConfig::new(dim, 8);
        let mut v = vec![1.0; 8];
        v[0] = 0.0;
        let mut factors = vec![vec![1.0; 8]; dim];
        factors.extend(std::iter::repeat_n(v, dim));
        let f = TtTensor::rank_one(&factors).scaled(0.7);
        let mf = compute_moments(&f, &cfg).unwrap();
        let expect = 0.7 * (7.0 * cfg.h()).powi(dim as i32);
        assert!(mf.rho.data().iter().all(|r| (r - expect).abs() <= 1e-12 * expect));
        assert!(mf.u.iter().all(|u| u.data().iter().all(|x| x.abs() <= 1e-13)));
    }
}

#[test]
fn velocity_symmetric_field_has_no_mean_velocity() {
    let cfg = BgkConfig::new(2, 8);
    let x = cfg.nodes();
    // even about v = -h/2 + 0: the grid maps v_l -> v_{m-l} (index 0 at -pi is its own image)
    let even: Vec<f64> = (0..8)
        .map(|l| if l == 0 { 0.0 } else { (-x[l] * x[l]).exp() })
        .collect();
    let sx: Vec<f64> = x.iter().map(|v| 2.0 + v.sin()).collect();
    let f = TtTensor::rank_one(&[sx.clone(), sx, even.clone(), even]);
    let mf = compute_moments(&f, &cfg).unwrap();
    assert!(mf.u.iter().all(|u| u.data().iter().all(|x| x.abs() <= 1e-13)));
}

#[test]
fn moments_match_brute_force_sums() {
    let cfg = BgkConfig::new(2, 8);
    let noise = random_tt(&cfg.modes(), &[3, 3, 3], 17).unwrap().scaled(0.02);
    let f = smooth_field(&cfg).add(&noise).unwrap();
    let dense = f.to_dense();
    let (rho, u, temp) = brute_moments(&dense, &cfg);
    let mf = compute_moments(&f, &cfg).unwrap();
    assert!(rel(mf.rho.data(), &rho) <= 1e-12);
    for i in 0..2 {
        assert!(rel(mf.u[i].data(), &u[i]) <= 1e-11);
    }
    assert!(rel(mf.temp.data(), &temp) <= 1e-12);
}

#[test]
fn conserved_sums_match_brute_force() {
    let cfg = BgkConfig::new(2, 6);
    let f = smooth_field(&cfg);
    let d = f.to_dense();
    let v = cfg.nodes();
    let h2d = cfg.h().powi(4);
    let mut mass = 0.0;
    let mut mom = [0.0; 2];
    let mut energy = 0.0;
    for (flat, val) in d.data().iter().enumerate() {
        let (v1, v2) = (v[(flat / 6) % 6], v[flat % 6]);
        mass += h2d * val;
        mom[0] += h2d * v1 * val;
        mom[1] += h2d * v2 * val;
        energy += 0.5 * h2d * (v1 * v1 + v2 * v2) * val;
    }
    let s = conserved_sums(&f, &cfg).unwrap();
    assert!((s.mass - mass).abs() <= 1e-12 * mass);
    assert!((s.momentum[0] - mom[0]).abs() <= 1e-12 * mass);
    assert!((s.momentum[1] - mom[1]).abs() <= 1e-12 * mass);
    assert!((s.energy - energy).abs() <= 1e-12 * energy);
}

fn uniform_fields(cfg: &BgkConfig, rho: f64, u: &[f64], t: f64) -> MacroFields {
    let shape = cfg.spatial_modes();
    let c = |x: f64| DenseTensor::from_fn(&shape, |_| x);
    MacroFields {
        rho: c(rho),
        u: u.iter().map(|&x| c(x)).collect(),
        temp: c(t),
    }
}

#[test]
fn collision_frequency_cases() {
    let mut cfg = BgkConfig::new(2, 4);
    let nu = collision_frequency(&uniform_fields(&cfg, 1.0, &[0.0, 0.0], 1.0), &cfg).unwrap();
    assert!(nu.data().iter().all(|v| *v == cfg.k_coll));
    let nu = collision_frequency(&uniform_fields(&cfg, 4.0, &[0.0, 0.0], 4.0), &cfg).unwrap();
    assert!(nu.data().iter().all(|v| (*v - 8.0).abs() < 1e-15));
    cfg.mu = 1.0;
    let nu = collision_frequency(&uniform_fields(&cfg, 2.5, &[0.0, 0.0], 7.0), &cfg).unwrap();
    assert!(nu.data().iter().all(|v| *v == 2.5));
    let bad = uniform_fields(&cfg, 1.0, &[0.0, 0.0], 0.0);
    assert!(collision_frequency(&bad, &cfg).is_err());
}

#[test]
fn equilibrium_peak_value() {
    for dim in 1..=3 {
        let cfg = BgkConfig::new(dim, 8);
        let feq = build_equilibrium(&uniform_fields(&cfg, 1.0, &vec![0.0; dim], 1.0), &cfg, 1e-12).unwrap();
        let mut idx = vec![0; dim];
        idx.extend(vec![4; dim]); // node 4 of 8 is v = 0
        let expect = (cfg.bo / (2.0 * PI)).powf(dim as f64 / 2.0);
        assert!((feq.eval(&idx) - expect).abs() <= 1e-12 * expect);
    }
}

#[test]
fn equilibrium_reproduces_its_moments() {
    let cfg = BgkConfig::new(2, 32);
    let shape = cfg.spatial_modes();
    let x = cfg.nodes();
    let mf = MacroFields {
        rho: DenseTensor::from_fn(&shape, |i| 1.0 + 0.5 * x[i[0]].sin() * x[i[1]].cos()),
        u: vec![
            DenseTensor::from_fn(&shape, |i| 0.3 * x[i[1]].sin()),
            DenseTensor::from_fn(&shape, |_| -0.2),
        ],
        temp: DenseTensor::from_fn(&shape, |i| 1.0 + 0.2 * x[i[0]].cos()),
    };
    let feq = build_equilibrium(&mf, &cfg, 1e-8).unwrap();
    let back = compute_moments(&feq, &cfg).unwrap();
    assert!(rel(back.rho.data(), mf.rho.data()) <= 1e-3);
    assert!(rel(back.temp.data(), mf.temp.data()) <= 1e-3);
    for i in 0..2 {
        let diff = back.u[i]
            .data()
            .iter()
            .zip(mf.u[i].data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-3);
    }
}

#[test]
fn equilibrium_matches_dense_construction() {
    let cfg = BgkConfig::new(2, 8);
    let f = smooth_field(&cfg);
    let mf = compute_moments(&f, &cfg).unwrap();
    let eps_b = 1e-6;
    let tt = build_equilibrium(&mf, &cfg, eps_b).unwrap().to_dense();
    let dense = DenseModel::new(&cfg).unwrap().equilibrium(&mf);
    assert!(tt.relative_error(&dense).unwrap() <= 3.0 * eps_b);
}

#[test]
fn collision_vanishes_on_a_maxwellian() {
    let cfg = BgkConfig::new(2, 16);
    let shape = cfg.spatial_modes();
    let x = cfg.nodes();
    let mf = MacroFields {
        rho: DenseTensor::from_fn(&shape, |i| 1.0 + 0.5 * x[i[0]].sin() * x[i[1]].sin()),
        u: vec![DenseTensor::zeros(&shape), DenseTensor::zeros(&shape)],
        temp: DenseTensor::from_fn(&shape, |_| 1.0),
    };
    let f = build_equilibrium(&mf, &cfg, cfg.eps_b).unwrap();
    let q = build_collision_term(&f, &cfg).unwrap().q;
    let nu = collision_frequency(&compute_moments(&f, &cfg).unwrap(), &cfg).unwrap();
    let nu_scale = nu.data().iter().fold(0.0f64, |m, v| m.max(*v)) / cfg.kn;
    assert!(
        q.norm() <= 5.0 * cfg.eps_b * nu_scale * f.norm(),
        "{}",
        q.norm() / f.norm()
    );
}

#[test]
fn collision_mass_balance_is_small() {
    let cfg = BgkConfig::new(2, 32);
    let f = smooth_field(&cfg);
    let q = build_collision_term(&f, &cfg).unwrap().q;
    let s = conserved_sums(&q, &cfg).unwrap();
    let scale = conserved_sums(&f, &cfg).unwrap().mass;
    assert!(s.mass.abs() <= 1e-3 * scale, "{} vs {}", s.mass, scale);
}

#[test]
fn collision_matches_dense_oracle() {
    let mut cfg = BgkConfig::new(2, 8);
    cfg.kn = 0.7;
    let f = smooth_field(&cfg);
    let tt = build_collision_term(&f, &cfg).unwrap().q.to_dense();
    let dense = DenseModel::new(&cfg).unwrap().collision(&f.to_dense()).unwrap();
    assert!(tt.relative_error(&dense).unwrap() <= 10.0 * cfg.eps_b);
}

#[test]
fn vacuum_is_a_positivity_error() {
    let cfg = BgkConfig::new(1, 8);
    let mut sx = vec![1.0; 8];
    sx[3] = 0.0;
    let f = TtTensor::rank_one(&[sx, vec![1.0; 8]]);
    match compute_moments(&f, &cfg) {
        Err(aptt::AptError::Positivity { field, node, .. }) => {
            assert_eq!(field, "density");
            assert_eq!(node, vec![3]);
        }
        other => panic!("unexpected {other:?}"),
    }
}
