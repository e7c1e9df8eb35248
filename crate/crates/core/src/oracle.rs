//! Exact reference for quadratic external potentials.
//!
//! For `V(x) = ½ c2 x² + c1 x` the nonlocal operator reduces exactly to the
//! classical force term, so the full equation is a linear Fokker-Planck
//! equation with drift `(ξ, -c2 x - c1 - 2γ ξ)` and diffusion matrix
//! `D = [[Dqq, Dpq], [Dpq, Dpp]]`. Gaussian data stays Gaussian, with
//!
//! ```text
//! dm/dt = A m + b,        A = [[0, 1], [-c2, -2γ]],  b = (0, -c1)
//! dΣ/dt = A Σ + Σ Aᵀ + 2D
//! ```
//!
//! Both are integrated in closed form through matrix exponentials of
//! augmented systems, so the reference carries no time-stepping error.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{array, s, Array2};

use crate::error::{config_err, Result};
use crate::grid::{GaussianIC, GridSpec, WignerField};
use crate::linalg::matrix_exp;
use crate::splitting::PhysicalParams;

/// Mean and covariance of a Gaussian phase-space density.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub t: f64,
}

impl MomentState {
    pub fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    fn check_spd(&self) -> Result<()> {
        let c = &self.cov;
        if (c[0][1] - c[1][0]).abs() > 1e-12 * (c[0][0].abs() + c[1][1].abs()) {
            return config_err(format!("covariance {c:?} is not symmetric"));
        }
        if !(c[0][0] > 0.0 && self.det() > 0.0) {
            return config_err(format!("covariance {c:?} is not positive definite"));
        }
        Ok(())
    }

    /// Moments implied by the wavepacket coefficients: `Σ = (ε/2) [[a11, a12], [a12, a22]]⁻¹`.
    pub fn from_ic(ic: &GaussianIC, epsilon: f64) -> Result<Self> {
        let ic = ic.normalized()?;
        let det = ic.determinant();
        let h = 0.5 * epsilon / det;
        Ok(Self { mean: [ic.x0, ic.xi0], cov: [[h * ic.a22, -h * ic.a12], [-h * ic.a12, h * ic.a11]], t: 0.0 })
    }
}

fn to_mat(c: &[[f64; 2]; 2]) -> Array2<f64> {
    array![[c[0][0], c[0][1]], [c[1][0], c[1][1]]]
}

/// Evolves the Gaussian moments of the IC to time `t_final` under `V = ½ c2 x² + c1 x`.
pub fn harmonic_moment_evolution(
    ic: &GaussianIC,
    params: &PhysicalParams,
    quad: (f64, f64),
    t_final: f64,
) -> Result<MomentState> {
    evolve_moments(&MomentState::from_ic(ic, params.epsilon)?, params, quad, t_final)
}

/// Same as [`harmonic_moment_evolution`] starting from arbitrary moments.
pub fn evolve_moments(
    start: &MomentState,
    params: &PhysicalParams,
    (c2, c1): (f64, f64),
    t_final: f64,
) -> Result<MomentState> {
    start.check_spd()?;
    let t = t_final - start.t;
    let g2 = 2.0 * params.gamma;
    let a = array![[0.0, 1.0], [-c2, -g2]];
    let diff2 = array![[2.0 * params.dqq, 2.0 * params.dpq], [2.0 * params.dpq, 2.0 * params.dpp]];

    // mean: exp([[A, b], [0, 0]] t) applied to (m, 1)
    let mut aug = Array2::zeros((3, 3));
    aug.slice_mut(s![..2, ..2]).assign(&(&a * t));
    aug[[1, 2]] = -c1 * t;
    let em = matrix_exp(&aug)?;
    let m0 = [start.mean[0], start.mean[1], 1.0];
    let mean = [(0..3).map(|j| em[[0, j]] * m0[j]).sum(), (0..3).map(|j| em[[1, j]] * m0[j]).sum()];

    // covariance (Van Loan): exp([[-A, 2D], [0, Aᵀ]] t) = [[·, G], [0, Φᵀ]], Q = Φ G
    let mut vl = Array2::zeros((4, 4));
    vl.slice_mut(s![..2, ..2]).assign(&(&a * -t));
    vl.slice_mut(s![..2, 2..]).assign(&(&diff2 * t));
    vl.slice_mut(s![2.., 2..]).assign(&(a.t().to_owned() * t));
    let ev = matrix_exp(&vl)?;
    let phi = ev.slice(s![2.., 2..]).t().to_owned();
    let q = phi.dot(&ev.slice(s![..2, 2..]));
    let sigma = phi.dot(&to_mat(&start.cov)).dot(&phi.t()) + q;
    // symmetrize away roundoff
    let off = 0.5 * (sigma[[0, 1]] + sigma[[1, 0]]);
    let out = MomentState { mean, cov: [[sigma[[0, 0]], off], [off, sigma[[1, 1]]]], t: t_final };
    out.check_spd()?;
    Ok(out)
}

/// Samples the normalized Gaussian with the given moments on the grid.
pub fn gaussian_from_moments(ms: &MomentState, grid: &Arc<GridSpec>) -> Result<WignerField> {
    ms.check_spd()?;
    let det = ms.det();
    let inv = [[ms.cov[1][1] / det, -ms.cov[0][1] / det], [-ms.cov[1][0] / det, ms.cov[0][0] / det]];
    let amp = 1.0 / (2.0 * PI * det.sqrt());
    let mut w = WignerField::from_fn(Arc::clone(grid), |x, xi| {
        let (dx, dxi) = (x - ms.mean[0], xi - ms.mean[1]);
        let q = inv[0][0] * dx * dx + 2.0 * inv[0][1] * dx * dxi + inv[1][1] * dxi * dxi;
        amp * (-0.5 * q).exp()
    });
    w.time = ms.t;
    Ok(w)
}

/// Reference field at `t_final` for a quadratic external potential.
pub fn reference_field(
    ic: &GaussianIC,
    params: &PhysicalParams,
    grid: &Arc<GridSpec>,
    t_final: f64,
) -> Result<WignerField> {
    let quad = match &params.potential {
        crate::potential::PotentialSpec::External(v) => v.quadratic_coefficients(),
        _ => None,
    };
    let Some(quad) = quad else {
        return config_err("analytic reference requires a quadratic external potential");
    };
    gaussian_from_moments(&harmonic_moment_evolution(ic, params, quad, t_final)?, grid)
}
