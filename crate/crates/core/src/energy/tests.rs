use std::f64::consts::PI;

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fields::{MagnetizationField, MaterialParams, StripGrid};

fn params(t: f64) -> MaterialParams {
    MaterialParams::new(0.7, 1e-2, t).unwrap()
}

fn random_field(grid: StripGrid, seed: u64) -> MagnetizationField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push([
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ]);
    }
    let mut f = MagnetizationField::from_values(grid, values).unwrap();
    f.normalize().unwrap();
    f.enforce_clamp();
    f
}

fn smooth_wall(grid: StripGrid) -> MagnetizationField {
    let t = grid.thickness();
    MagnetizationField::from_fn(grid, |x1, x3| {
        let s = x1 / t;
        let bump = (-s * s).exp();
        [bump * (1.0 + 0.3 * x3 / t), (2.0 * s).tanh(), 0.4 * bump * (PI * x3 / t).cos()]
    })
    .unwrap()
}

#[test]
fn uniform_easy_axis_has_zero_energy() {
    let g = StripGrid::new(5.0, 1.0, 24, 6).unwrap();
    let f = MagnetizationField::make_uniform(g, [0.0, 1.0, 0.0]).unwrap();
    let e = total_energy(&f, &params(1.0)).unwrap();
    assert_eq!(e.exchange, 0.0);
    assert_eq!(e.anisotropy, 0.0);
    assert!(e.stray.abs() < 1e-30);
    assert!(e.total.abs() < 1e-30);
}

#[test]
fn uniform_hard_axis_anisotropy_is_q_times_area() {
    let g = StripGrid::new(3.0, 2.0, 13, 5).unwrap();
    let p = MaterialParams::new(0.5, 3e-3, 2.0).unwrap();
    let f = MagnetizationField::make_uniform(g, [1.0, 0.0, 0.0]).unwrap();
    assert_relative_eq!(
        anisotropy_energy(&f, &p).unwrap(),
        p.q() * g.area(),
        max_relative = 1e-14
    );
    assert_eq!(exchange_energy(&f, &p).unwrap(), 0.0);
    // m1 constant in x1, m3 = 0: no charges at all
    let s = solve_stray_field(&f).unwrap();
    assert!(s.dirichlet_energy.abs() < 1e-28, "{}", s.dirichlet_energy);
}

#[test]
fn x1_uniform_m1_with_x3_dependence_has_no_charge() {
    let g = StripGrid::new(4.0, 1.0, 17, 7).unwrap();
    let mut values = vec![[0.0; 3]; g.len()];
    for r in 0..g.n3() {
        let a = 0.8 * (3.0 * g.x3(r)).sin();
        for i in 0..g.n1() {
            values[g.idx(i, r)] = [a, (1.0 - a * a).sqrt(), 0.0];
        }
    }
    let f = MagnetizationField::from_values(g, values).unwrap();
    let s = solve_stray_field(&f).unwrap();
    assert!(s.dirichlet_energy.abs() < 1e-28);
}

#[test]
fn linear_angle_ramp_exchange_closed_form() {
    // theta = s * x1 on the whole strip: every x1 edge has chord 2 sin(s h / 2).
    let (l, t) = (2.0, 0.5);
    let g = StripGrid::new(l, t, 41, 4).unwrap();
    let p = MaterialParams::new(0.3, 1e-3, t).unwrap();
    let s = 0.9;
    let mut values = vec![[0.0; 3]; g.len()];
    for r in 0..g.n3() {
        for i in 0..g.n1() {
            let th = s * g.x1(i);
            values[g.idx(i, r)] = [th.cos(), th.sin(), 0.0];
        }
    }
    let f = MagnetizationField::from_values(g, values).unwrap();
    let h = g.h1();
    let chord = 2.0 * (0.5 * s * h).sin() / h;
    let expected = p.d().powi(2) * g.area() * chord * chord;
    assert_relative_eq!(exchange_energy(&f, &p).unwrap(), expected, max_relative = 1e-12);
    // continuum value d^2 s^2 A within the chord error (s h)^2 / 12
    let continuum = p.d().powi(2) * s * s * g.area();
    let rel = (exchange_energy(&f, &p).unwrap() - continuum).abs() / continuum;
    assert!(rel <= (s * h).powi(2) / 12.0 * 1.01, "rel {rel}");
}

#[test]
fn mesh_convergence_is_second_order() {
    let p = MaterialParams::new(0.4, 1e-2, 1.0).unwrap();
    let base = StripGrid::new(4.0, 1.0, 33, 5).unwrap();
    let grids = [base, base.refined(), base.refined().refined()];
    let energies: Vec<EnergyBreakdown> = grids
        .iter()
        .map(|g| total_energy(&smooth_wall(*g), &p).unwrap())
        .collect();
    for pick in [
        |e: &EnergyBreakdown| e.exchange,
        |e: &EnergyBreakdown| e.stray,
        |e: &EnergyBreakdown| e.total,
    ] {
        let d1 = pick(&energies[0]) - pick(&energies[1]);
        let d2 = pick(&energies[1]) - pick(&energies[2]);
        let ratio = d1 / d2;
        assert!((3.0..5.5).contains(&ratio), "convergence ratio {ratio}");
    }
}

#[test]
fn reciprocity_on_random_fields() {
    for (seed, (n1, n3)) in [(1u64, (32, 8)), (2, (33, 2)), (3, (64, 11))] {
        let g = StripGrid::new(5.0, 1.3, n1, n3).unwrap();
        let f = random_field(g, seed);
        let s = solve_stray_field(&f).unwrap();
        assert!(s.dirichlet_energy > 0.0);
        assert!(s.reciprocity_defect() <= 1e-10, "defect {}", s.reciprocity_defect());
        assert_eq!(s.wrap_residual, 0.0);
        assert!(s.zero_mode_mass < 1e-12);
    }
}

#[test]
fn stray_energy_matches_exact_mode_energy_for_x3_independent_charge() {
    // m1 = a cos(k x1), x3-independent: the exact strip energy per mode is
    // |m1_hat|^2 (|k| - 1 + e^{-|k|}) / |k| (t = 1).
    let l = 4.0;
    let g = StripGrid::new(l, 1.0, 65, 65).unwrap();
    let a = 0.5;
    let k = 2.0 * PI * 3.0 / (2.0 * l);
    let mut values = vec![[0.0; 3]; g.len()];
    for r in 0..g.n3() {
        for i in 0..g.n1() {
            let m1 = a * (k * g.x1(i)).cos();
            values[g.idx(i, r)] = [m1, (1.0 - m1 * m1).sqrt(), 0.0];
        }
    }
    let f = MagnetizationField::from_values(g, values).unwrap();
    let s = solve_stray_field(&f).unwrap();
    let expected = a * a * l * (k - 1.0 + (-k).exp()) / k;
    assert_relative_eq!(s.dirichlet_energy, expected, max_relative = 1e-3);
}

#[test]
fn nonfinite_field_rejected() {
    let g = StripGrid::new(5.0, 1.0, 8, 3).unwrap();
    let f = MagnetizationField::make_uniform(g, [0.0, 1.0, 0.0]).unwrap();
    let mut v = f.into_values();
    v[5] = [f64::INFINITY, 0.0, 0.0];
    assert!(MagnetizationField::from_values(g, v).is_err());
}

#[test]
fn gradient_matches_central_differences() {
    let g = StripGrid::new(5.0, 1.0, 32, 8).unwrap();
    let p = params(1.0);
    let f = random_field(g, 11);
    let grad = energy_gradient(&f, &p).unwrap();
    let mut model = EnergyModel::new(g, p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let eps = 1e-5;
    for _ in 0..20 {
        let mut v: Vec<[f64; 3]> = (0..g.len())
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        project_tangent(&g, f.values(), &mut v);
        let shift = |sgn: f64| -> Vec<[f64; 3]> {
            f.values()
                .iter()
                .zip(&v)
                .map(|(m, d)| [m[0] + sgn * eps * d[0], m[1] + sgn * eps * d[1], m[2] + sgn * eps * d[2]])
                .collect()
        };
        let ep = model.evaluate(&shift(1.0)).unwrap().total;
        let em = model.evaluate(&shift(-1.0)).unwrap().total;
        let fd = (ep - em) / (2.0 * eps);
        let an = grad.dot(&v);
        assert!((an - fd).abs() <= 1e-5 * fd.abs(), "analytic {an} vs fd {fd}");
    }
}

#[test]
fn gradient_vanishes_at_uniform_state_and_clamps() {
    let g = StripGrid::new(5.0, 1.0, 20, 5).unwrap();
    let f = MagnetizationField::make_uniform(g, [0.0, 1.0, 0.0]).unwrap();
    assert_eq!(energy_gradient(&f, &params(1.0)).unwrap().max_norm(), 0.0);
    let f = random_field(g, 5);
    let grad = energy_gradient(&f, &params(1.0)).unwrap();
    for r in 0..g.n3() {
        assert_eq!(grad.values()[g.idx(0, r)], [0.0; 3]);
        assert_eq!(grad.values()[g.idx(g.n1() - 1, r)], [0.0; 3]);
    }
    for (gv, m) in grad.values().iter().zip(f.values()) {
        let dot = gv[0] * m[0] + gv[1] * m[1] + gv[2] * m[2];
        assert!(dot.abs() < 1e-12);
    }
}

#[test]
fn energy_invariant_under_reflection() {
    let g = StripGrid::new(5.0, 1.0, 32, 8).unwrap();
    let p = params(1.0);
    let f = random_field(g, 21);
    let a = total_energy(&f, &p).unwrap();
    let b = total_energy(&f.reflected(), &p).unwrap();
    assert_relative_eq!(a.exchange, b.exchange, max_relative = 1e-12);
    assert_relative_eq!(a.anisotropy, b.anisotropy, max_relative = 1e-12);
    assert_relative_eq!(a.stray, b.stray, max_relative = 1e-10);
}

#[test]
fn total_is_sum_of_parts() {
    let g = StripGrid::new(5.0, 1.0, 32, 8).unwrap();
    for seed in 0..5 {
        let e = total_energy(&random_field(g, seed), &params(1.0)).unwrap();
        assert_eq!(e.total, e.exchange + e.anisotropy + e.stray);
        assert!(e.exchange >= 0.0 && e.anisotropy >= 0.0 && e.stray >= 0.0);
    }
}

#[test]
fn thickness_mismatch_rejected() {
    let g = StripGrid::new(5.0, 1.0, 8, 3).unwrap();
    let f = MagnetizationField::make_uniform(g, [0.0, 1.0, 0.0]).unwrap();
    assert!(matches!(
        total_energy(&f, &MaterialParams::new(1.0, 1e-3, 2.0).unwrap()),
        Err(WallError::GridMismatch(_))
    ));
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

    #[test]
    fn stray_energy_is_nonnegative_and_reciprocal(seed in 0u64..10_000, n1 in 6usize..40, n3 in 2usize..9) {
        let g = StripGrid::new(3.0, 0.8, n1, n3).unwrap();
        let s = solve_stray_field(&random_field(g, seed)).unwrap();
        proptest::prop_assert!(s.dirichlet_energy >= 0.0);
        proptest::prop_assert!(s.reciprocity_defect() <= 1e-10);
    }
}
