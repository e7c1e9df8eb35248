use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use proptest::prelude::*;

use wpfp::grid::{build_grid, gaussian_wavepacket, total_mass, GridSpec, WignerField};
use wpfp::linalg::matrix_exp;
use wpfp::observables::steady_state_residual;
use wpfp::oracle::{harmonic_moment_evolution, MomentState};
use wpfp::poisson::{build_delta_v_selfconsistent, density, solve_poisson};
use wpfp::transport::{build_delta_v_external, step_convection, step_diffusion, step_nonlocal};
use wpfp::{ExternalPotential, GaussianIC, PhysicalParams, PotentialSpec};

fn grid() -> Arc<GridSpec> {
    build_grid(-2.0, 2.0, -3.0, 3.0, 16, 32).unwrap()
}

/// Positive background plus a few random low Fourier modes.
fn field_from(g: &Arc<GridSpec>, amps: &[f64]) -> WignerField {
    let (lx, lxi) = (g.b - g.a, g.d - g.c);
    WignerField::from_fn(g.clone(), |x, xi| {
        let mut v = 1.0;
        for (i, a) in amps.iter().enumerate() {
            let (j, k) = ((i % 3) as f64, (i / 3) as f64);
            v += a * (2.0 * PI * (j * (x - g.a) / lx + k * (xi - g.c) / lxi) + i as f64).cos();
        }
        v
    })
}

fn mass_tol(w: &WignerField) -> f64 {
    1e-13 * w.values.iter().map(|v| v.abs()).sum::<f64>() * w.grid.cell_area()
}

fn amps() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.4..0.4f64, 9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convection_conserves_mass(a in amps(), tau in 0.0..2.0f64) {
        let w = field_from(&grid(), &a);
        let out = step_convection(&w, tau);
        prop_assert!((total_mass(&out) - total_mass(&w)).abs() <= mass_tol(&w));
    }

    #[test]
    fn diffusion_conserves_mass(a in amps(), tau in 0.0..1.0f64, dqq in 0.0..0.5f64, dpp in 0.0..0.5f64, r in -1.0..1.0f64) {
        let dpq = r * (dqq * dpp).sqrt();
        let w = field_from(&grid(), &a);
        let out = step_diffusion(&w, tau, dqq, dpq, dpp);
        prop_assert!((total_mass(&out) - total_mass(&w)).abs() <= mass_tol(&w));
        let l2 = |f: &WignerField| f.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(l2(&out) <= l2(&w) * (1.0 + 1e-12));
    }

    #[test]
    fn nonlocal_conserves_mass_pointwise(a in amps(), c in prop::collection::vec(-1.0..1.0f64, 5), eps in 0.05..1.0f64, tau in 0.0..0.5f64) {
        let g = grid();
        let w = field_from(&g, &a);
        let dv = build_delta_v_external(&PotentialSpec::External(ExternalPotential::Polynomial(c)), &g, eps, 0.0).unwrap();
        prop_assert!(dv.entries.column(0).iter().all(|z| z.norm() == 0.0));
        prop_assert!(dv.entries.iter().all(|z| z.re == 0.0));
        let out = step_nonlocal(&w, tau, &dv).unwrap();
        for (r0, r1) in density(&w).iter().zip(density(&out)) {
            prop_assert!((r0 - r1).abs() <= 1e-13 * w.values.iter().map(|v| v.abs()).sum::<f64>() * g.hxi);
        }
    }

    #[test]
    fn self_consistent_pipeline_conserves_mass(a in amps(), alpha in prop::sample::select(vec![-1.0, 1.0]), tau in 0.0..0.5f64) {
        let g = grid();
        let w = field_from(&g, &a);
        let v = solve_poisson(&density(&w), alpha, &g);
        let dv = build_delta_v_selfconsistent(&v, &g, 0.3);
        let out = step_nonlocal(&w, tau, &dv).unwrap();
        prop_assert!((total_mass(&out) - total_mass(&w)).abs() <= mass_tol(&w));
    }

    #[test]
    fn poisson_ignores_constant_density_shift(a in amps(), shift in -5.0..5.0f64) {
        let g = grid();
        let rho = density(&field_from(&g, &a));
        let shifted: Vec<f64> = rho.iter().map(|r| r + shift).collect();
        let (v0, v1) = (solve_poisson(&rho, -1.0, &g), solve_poisson(&shifted, -1.0, &g));
        for (p, q) in v0.vhat.iter().zip(&v1.vhat) {
            prop_assert!((p - q).norm() <= 1e-12 * (1.0 + p.norm()));
        }
        let n = g.nx;
        for j in 1..n {
            prop_assert!((v0.vhat[j] - v0.vhat[n - j].conj()).norm() <= 1e-12 * (1.0 + v0.vhat[j].norm()));
        }
    }

    #[test]
    fn mass_is_linear(a in amps(), b in amps(), s in -3.0..3.0f64) {
        let g = grid();
        let (u, v) = (field_from(&g, &a), field_from(&g, &b));
        let combo = WignerField::from_values(g.clone(), &u.values + &(s * &v.values), 0.0).unwrap();
        let expect = total_mass(&u) + s * total_mass(&v);
        prop_assert!((total_mass(&combo) - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }

    #[test]
    fn residual_is_scale_invariant(a in amps(), b in amps(), s in 0.01..100.0f64, dt in 1e-3..1.0f64) {
        let g = grid();
        let (u, v) = (field_from(&g, &a), field_from(&g, &b));
        let r = steady_state_residual(&u, &v, dt).unwrap();
        let us = WignerField::from_values(g.clone(), &u.values * s, 0.0).unwrap();
        let vs = WignerField::from_values(g.clone(), &v.values * s, 0.0).unwrap();
        let rs = steady_state_residual(&us, &vs, dt).unwrap();
        prop_assert!((r - rs).abs() <= 1e-12 * r.max(1.0));
    }

    #[test]
    fn exponential_inverse_and_transpose(entries in prop::collection::vec(-1.0..1.0f64, 36), norm in 0.1..10.0f64) {
        let a = Array2::from_shape_vec((6, 6), entries).unwrap();
        let n1 = a.columns().into_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let a = a * (norm / n1);
        let e = matrix_exp(&a).unwrap();
        let ei = matrix_exp(&(-&a)).unwrap();
        let prod = e.dot(&ei);
        let eye = Array2::<f64>::eye(6);
        prop_assert!(prod.iter().zip(&eye).all(|(p, q)| (p - q).abs() <= 1e-10));
        let et = matrix_exp(&a.t().to_owned()).unwrap();
        let scale = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(et.iter().zip(e.t().iter()).all(|(p, q)| (p - q).abs() <= 1e-12 * scale));
    }

    #[test]
    fn exponential_respects_similarity(entries in prop::collection::vec(-1.0..1.0f64, 16), shear in prop::collection::vec(-0.5..0.5f64, 16)) {
        let a = Array2::from_shape_vec((4, 4), entries).unwrap();
        let s = Array2::<f64>::eye(4) + Array2::from_shape_vec((4, 4), shear).unwrap() * 0.5;
        let sinv = wpfp::linalg::lu_solve(s.clone(), Array2::eye(4)).unwrap();
        let lhs = matrix_exp(&s.dot(&a).dot(&sinv)).unwrap();
        let rhs = s.dot(&matrix_exp(&a).unwrap()).dot(&sinv);
        let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(lhs.iter().zip(&rhs).all(|(p, q)| (p - q).abs() <= 1e-10 * scale));
    }

    #[test]
    fn wavepacket_exchange_symmetry(a11 in 0.5..2.0f64, a22 in 0.5..2.0f64, x0 in -0.5..0.5f64, xi0 in -0.5..0.5f64) {
        let g = build_grid(-2.0, 2.0, -2.0, 2.0, 16, 16).unwrap();
        let w = gaussian_wavepacket(&GaussianIC { a11, a22, a12: 0.0, x0, xi0 }, 0.3, &g).unwrap();
        let s = gaussian_wavepacket(&GaussianIC { a11: a22, a22: a11, a12: 0.0, x0: xi0, xi0: x0 }, 0.3, &g).unwrap();
        let scale = w.max_abs();
        for m in 0..16 {
            for l in 0..16 {
                prop_assert!((w.values[[m, l]] - s.values[[l, m]]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn oracle_covariance_stays_spd(gamma in 0.0..2.0f64, dqq in 0.0..0.5f64, dpp in 0.0..0.5f64, r in -1.0..1.0f64, c2 in -1.0..2.0f64, t in 0.0..3.0f64) {
        let params = PhysicalParams {
            epsilon: 0.1,
            dpp,
            dqq,
            dpq: r * (dqq * dpp).sqrt(),
            gamma,
            potential: PotentialSpec::External(ExternalPotential::Harmonic { c2, c1: 0.3 }),
            allow_indefinite_diffusion: false,
        };
        let ic = GaussianIC { a11: 1.0, a22: 1.0, a12: 0.2, x0: 0.1, xi0: -0.2 };
        let ms: MomentState = harmonic_moment_evolution(&ic, &params, (c2, 0.3), t).unwrap();
        prop_assert!(ms.det() > 0.0 && ms.cov[0][0] > 0.0);
        prop_assert!((ms.cov[0][1] - ms.cov[1][0]).abs() <= 1e-12 * ms.cov[0][0].max(ms.cov[1][1]));
    }
}
