//! Operator oracles shared by the integration tests and the acceptance report.
//!
//! Each check returns the measured deviation next to its tolerance so callers
//! can either assert or print it.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use wpfp::friction::{
    build_friction_diffmatrix, build_friction_propagator, build_galerkin_matrices, step_friction_collocation,
    step_friction_galerkin,
};
use wpfp::grid::{build_grid, total_mass, GridSpec, WignerField};
use wpfp::linalg::matrix_exp;
use wpfp::poisson::{build_delta_v_selfconsistent, density, solve_poisson, PotentialField};
use wpfp::transport::{
    apply_nonlocal_generator, build_delta_v_external, step_convection, step_diffusion, step_nonlocal,
};
use wpfp::{ExternalPotential, PotentialSpec};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value <= self.tol
    }
}

pub fn max_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (p, q)| f64::max(m, (p - q).abs()))
}

fn rel_mass_change(before: &WignerField, after: &WignerField) -> f64 {
    let m0 = total_mass(before);
    ((total_mass(after) - m0) / m0).abs()
}

/// Smooth, x-periodic field with a resolved Gaussian profile in ξ.
pub fn smooth_field(grid: &Arc<GridSpec>) -> WignerField {
    let k = 2.0 * PI / (grid.b - grid.a);
    WignerField::from_fn(grid.clone(), |x, xi| {
        (1.2 + (k * (x - grid.a)).cos() + 0.3 * (2.0 * k * (x - grid.a)).sin()) * (-2.0 * (xi - 0.3).powi(2)).exp()
    })
}

fn gaussian_2d(grid: &Arc<GridSpec>, sx2: f64, sxi2: f64, mx: f64, mxi: f64) -> WignerField {
    let norm = 1.0 / (2.0 * PI * (sx2 * sxi2).sqrt());
    WignerField::from_fn(grid.clone(), |x, xi| {
        norm * (-(x - mx).powi(2) / (2.0 * sx2) - (xi - mxi).powi(2) / (2.0 * sxi2)).exp()
    })
}

pub fn exact_advection() -> Check {
    let g = build_grid(-2.0, 2.0, -2.0, 2.0, 32, 16).unwrap();
    let mu1 = g.mu[1];
    let w = WignerField::from_fn(g.clone(), |x, _| (mu1 * (x - g.a)).cos());
    let tau = 0.37;
    let out = step_convection(&w, tau);
    let exact = WignerField::from_fn(g.clone(), |x, xi| (mu1 * (x - g.a - xi * tau)).cos());
    Check { name: "exact advection (single mode)", value: max_diff(&out.values, &exact.values), tol: 1e-12 }
}

pub fn xi_shift_linear() -> Check {
    let g = build_grid(-4.0, 4.0, -4.0, 4.0, 32, 128).unwrap();
    let v = PotentialSpec::External(ExternalPotential::Polynomial(vec![0.0, 1.0]));
    let dv = build_delta_v_external(&v, &g, 0.1, 0.0).unwrap();
    let w = gaussian_2d(&g, 0.3, 0.2, 0.1, -0.2);
    let tau = 0.25;
    let out = step_nonlocal(&w, tau, &dv).unwrap();
    let exact = gaussian_2d(&g, 0.3, 0.2, 0.1, -0.2 - tau);
    Check { name: "nonlocal xi-shift, V = x", value: max_diff(&out.values, &exact.values), tol: 1e-12 }
}

pub fn xi_shift_quadratic() -> Check {
    let g = build_grid(-4.0, 4.0, -6.0, 6.0, 32, 192).unwrap();
    let v = PotentialSpec::External(ExternalPotential::Polynomial(vec![0.0, 0.0, 0.5]));
    let dv = build_delta_v_external(&v, &g, 0.1, 0.0).unwrap();
    let w = gaussian_2d(&g, 0.25, 0.2, 0.0, 0.0);
    let tau = 0.2;
    let out = step_nonlocal(&w, tau, &dv).unwrap();
    let norm = 1.0 / (2.0 * PI * (0.25f64 * 0.2).sqrt());
    let exact = WignerField::from_fn(g.clone(), |x, xi| {
        let s = xi + x * tau;
        norm * (-x * x / 0.5 - s * s / 0.4).exp()
    });
    Check { name: "nonlocal xi-shift, V = x^2/2", value: max_diff(&out.values, &exact.values), tol: 1e-12 }
}

pub fn heat_kernel() -> Check {
    let g = build_grid(-4.0, 4.0, -4.0, 4.0, 128, 128).unwrap();
    let (dqq, dpp, tau) = (0.2, 0.1, 0.3);
    let w = gaussian_2d(&g, 0.15, 0.1, 0.2, -0.3);
    let out = step_diffusion(&w, tau, dqq, 0.0, dpp);
    let exact = gaussian_2d(&g, 0.15 + 2.0 * dqq * tau, 0.1 + 2.0 * dpp * tau, 0.2, -0.3);
    Check { name: "heat-kernel Gaussian", value: max_diff(&out.values, &exact.values), tol: 1e-8 }
}

pub fn friction_characteristics() -> Check {
    let g = build_grid(-1.0, 1.0, -6.0, 6.0, 4, 128).unwrap();
    let (gamma, t) = (1.0, 0.1);
    let w = WignerField::from_fn(g.clone(), |_, xi| (-xi * xi).exp());
    let prop = build_friction_propagator(&g, gamma, t).unwrap();
    let out = step_friction_collocation(&w, &prop).unwrap();
    let s = (2.0 * gamma * t).exp();
    let exact = WignerField::from_fn(g, |_, xi| s * (-(xi * s).powi(2)).exp());
    Check { name: "friction characteristics", value: max_diff(&out.values, &exact.values), tol: 1e-6 }
}

pub fn friction_mass_per_step() -> Check {
    let g = build_grid(-1.0, 1.0, -6.0, 6.0, 4, 128).unwrap();
    let w = WignerField::from_fn(g.clone(), |_, xi| (-xi * xi).exp());
    let prop = build_friction_propagator(&g, 1.0, 0.1).unwrap();
    let out = step_friction_collocation(&w, &prop).unwrap();
    Check { name: "friction mass drift per step", value: rel_mass_change(&w, &out), tol: 1e-8 }
}

pub fn poisson_single_mode() -> Check {
    let g = build_grid(-2.0, 2.0, -2.0, 2.0, 64, 8).unwrap();
    let mu1 = g.mu[1];
    let rho: Vec<f64> = g.x.iter().map(|&x| (mu1 * (x - g.a)).cos()).collect();
    let v = solve_poisson(&rho, -1.0, &g).samples();
    let amp = 1.0 / (PI / 2.0).powi(2);
    let err = g.x.iter().zip(&v).fold(0.0f64, |m, (&x, &vx)| m.max((vx - amp * (mu1 * (x - g.a)).cos()).abs()));
    Check { name: "Poisson single mode", value: err, tol: 1e-12 }
}

pub fn self_consistent_delta_v_single_mode() -> Check {
    let g = build_grid(-2.0, 2.0, -3.0, 3.0, 16, 32).unwrap();
    let eps = 0.3;
    let v1 = Complex64::new(0.4, -0.7);
    let mut vhat = vec![Complex64::default(); g.nx];
    vhat[1] = v1;
    vhat[g.nx - 1] = v1.conj();
    let field = PotentialField { vhat, time_tag: 0.0, background: 0.0 };
    let table = build_delta_v_selfconsistent(&field, &g, eps);
    let vfun = |x: f64| 2.0 * (v1 * Complex64::new(0.0, g.mu[1] * (x - g.a)).exp()).re;
    let mut err = 0.0f64;
    for m in 0..g.nx {
        for k in 0..g.nxi {
            let x = g.x[m];
            let y = 0.5 * eps * g.nu[k];
            let direct = Complex64::new(0.0, (vfun(x + y) - vfun(x - y)) / eps);
            err = err.max((table.entries[[m, k]] - direct).norm());
        }
    }
    Check { name: "self-consistent dV single mode", value: err, tol: 1e-12 }
}

/// `Σ_k (iν_k)^p ŵ_k e^{iν_k(ξ-c)}` by a direct DFT along ξ, Nyquist mode dropped.
fn xi_derivative_naive(w: &WignerField, p: i32) -> Array2<f64> {
    let g = &w.grid;
    let n = g.nxi;
    let nyq = n / 2;
    let mut out = Array2::zeros(g.shape());
    for m in 0..g.nx {
        let row = w.values.row(m);
        let coef: Vec<Complex64> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| row[l] * Complex64::new(0.0, -2.0 * PI * (k * l) as f64 / n as f64).exp())
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect();
        for l in 0..n {
            let mut acc = Complex64::default();
            for (k, c) in coef.iter().enumerate() {
                if k == nyq {
                    continue;
                }
                let factor = Complex64::new(0.0, g.nu[k]).powi(p);
                acc += c * factor * Complex64::new(0.0, 2.0 * PI * (k * l) as f64 / n as f64).exp();
            }
            out[[m, l]] = acc.re;
        }
    }
    out
}

pub fn finite_moyal_cubic() -> Check {
    let g = build_grid(-2.0, 2.0, -4.0, 4.0, 16, 64).unwrap();
    let eps = 0.4;
    let c = [0.3, -0.5, 0.7, 0.25];
    let v = PotentialSpec::External(ExternalPotential::Polynomial(c.to_vec()));
    let dv = build_delta_v_external(&v, &g, eps, 0.0).unwrap();
    let w = smooth_field(&g);
    let gen = apply_nonlocal_generator(&w, &dv).unwrap();
    let d1 = xi_derivative_naive(&w, 1);
    let d3 = xi_derivative_naive(&w, 3);
    let v3 = 6.0 * c[3];
    let moyal = Array2::from_shape_fn(g.shape(), |(m, l)| {
        let x = g.x[m];
        let v1 = c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x;
        v1 * d1[[m, l]] - eps * eps / 24.0 * v3 * d3[[m, l]]
    });
    let scale = moyal.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Check { name: "finite Moyal equivalence (cubic V)", value: max_diff(&gen, &moyal) / scale, tol: 1e-10 }
}

fn symmetric_test_matrix(n: usize, seed: u64) -> Array2<f64> {
    let mut s = seed;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let a = Array2::from_shape_fn((n, n), |_| next());
    (&a + &a.t()) * 0.5
}

pub fn matrix_exp_vs_eigen() -> Check {
    let a = symmetric_test_matrix(8, 7);
    let e = matrix_exp(&a).unwrap();
    let eig = DMatrix::from_fn(8, 8, |i, j| a[[i, j]]).symmetric_eigen();
    let oracle =
        &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp)) * eig.eigenvectors.transpose();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..8 {
        for j in 0..8 {
            num += (e[[i, j]] - oracle[(i, j)]).powi(2);
            den += oracle[(i, j)].powi(2);
        }
    }
    Check { name: "matrix exp vs eigendecomposition", value: (num / den).sqrt(), tol: 1e-12 }
}

/// Collocation vs Galerkin friction on the Gaussian test.
pub fn galerkin_vs_collocation() -> Check {
    let g = build_grid(-1.0, 1.0, -6.0, 6.0, 4, 128).unwrap();
    let w = WignerField::from_fn(g.clone(), |_, xi| (-xi * xi).exp());
    let prop = build_friction_propagator(&g, 1.0, 0.1).unwrap();
    let coll = step_friction_collocation(&w, &prop).unwrap();
    let gal = step_friction_galerkin(&w, &build_galerkin_matrices(&g), 1.0, 0.1).unwrap();
    Check { name: "collocation vs Galerkin friction", value: max_diff(&coll.values, &gal.values), tol: 1e-10 }
}

/// Largest relative mass change over one convection, nonlocal (external and
/// self-consistent) and diffusion substep of an ex1-like field.
pub fn per_stage_mass() -> Check {
    let g = build_grid(-2.0, 2.0, -2.0, 2.0, 128, 128).unwrap();
    let w = gaussian_2d(&g, 0.05, 0.05, 0.1, -0.2);
    let tau = 1.0 / 256.0;
    let ext = PotentialSpec::External(ExternalPotential::DoubleWell);
    let dv = build_delta_v_external(&ext, &g, 0.1, 0.0).unwrap();
    let rho = density(&w);
    let sc = build_delta_v_selfconsistent(&solve_poisson(&rho, -1.0, &g), &g, 0.1);
    let outs = [
        step_convection(&w, tau),
        step_nonlocal(&w, tau, &dv).unwrap(),
        step_nonlocal(&w, tau, &sc).unwrap(),
        step_diffusion(&w, tau, 0.2, 0.05, 0.2),
    ];
    let worst = outs.iter().map(|o| rel_mass_change(&w, o)).fold(0.0, f64::max);
    Check { name: "per-stage mass (L1, L2, L3)", value: worst, tol: 1e-13 }
}

pub fn diffmatrix_small_case() -> Check {
    let g = build_grid(-1.0, 1.0, 0.0, 2.0 * PI, 4, 4).unwrap();
    let d = build_friction_diffmatrix(&g).d;
    let err = [(d[[0, 1]] - 0.5).abs(), d[[0, 2]].abs(), (d[[0, 3]] + 0.5).abs()].into_iter().fold(0.0, f64::max);
    Check { name: "differentiation matrix N = 4", value: err, tol: 1e-15 }
}

/// The full oracle suite in reporting order.
pub fn operator_suite() -> Vec<Check> {
    vec![
        exact_advection(),
        xi_shift_linear(),
        xi_shift_quadratic(),
        heat_kernel(),
        friction_characteristics(),
        friction_mass_per_step(),
        poisson_single_mode(),
        self_consistent_delta_v_single_mode(),
        finite_moyal_cubic(),
        matrix_exp_vs_eigen(),
        diffmatrix_small_case(),
    ]
}
