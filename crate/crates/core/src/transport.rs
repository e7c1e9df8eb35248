//! Convection, nonlocal-potential and diffusion substeps.
//!
//! Each subproblem is diagonal in a Fourier basis and is advanced exactly
//! mode by mode. The unpaired `-n/2` mode has no conjugate partner, so its
//! multiplier is averaged over the `±n/2` frequencies; this keeps real data
//! real and equals the real part of the one-sided update.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{config_err, Result, WpfpError};
use crate::grid::{nyquist_index, GridSpec, WignerField};
use crate::potential::PotentialSpec;
use crate::spectral::{complexify, fft_rows, into_real, transpose};

/// `δV(x_m, εν_k/2, t)` on the grid, columns in DFT order.
#[derive(Debug, Clone)]
pub struct DeltaVTable {
    pub entries: Array2<Complex64>,
    pub time_tag: f64,
}

impl DeltaVTable {
    pub fn zeros(grid: &GridSpec, time_tag: f64) -> Self {
        Self { entries: Array2::zeros(grid.shape()), time_tag }
    }

    fn check_shape(&self, grid: &GridSpec) -> Result<()> {
        if self.entries.dim() != grid.shape() {
            return Err(WpfpError::Shape { expected: grid.shape(), found: self.entries.dim() });
        }
        Ok(())
    }
}

/// Evaluates `(i/ε)(V(x_m + εν_k/2) - V(x_m - εν_k/2))` from the closed form.
///
/// The shifted arguments may leave `[a, b]`; the potential is evaluated there
/// directly rather than periodized.
pub fn build_delta_v_external(potential: &PotentialSpec, grid: &GridSpec, epsilon: f64, t: f64) -> Result<DeltaVTable> {
    let PotentialSpec::External(v) = potential else {
        return config_err("self-consistent potentials need the Poisson path");
    };
    if epsilon.is_nan() || epsilon <= 0.0 {
        return config_err(format!("epsilon = {epsilon} must be positive"));
    }
    let entries = Array2::from_shape_fn(grid.shape(), |(m, k)| {
        let x = grid.x[m];
        let y = 0.5 * epsilon * grid.nu[k];
        Complex64::new(0.0, (v.value(x + y, t) - v.value(x - y, t)) / epsilon)
    });
    Ok(DeltaVTable { entries, time_tag: t })
}

/// Convection `∂t W = -ξ ∂x W`: x-mode `j` on row `ξ_l` picks up `exp(-i μ_j ξ_l τ)`.
pub fn step_convection(w: &WignerField, tau: f64) -> WignerField {
    let g = &w.grid;
    let (nx, nxi) = g.shape();
    // rows of constant ξ
    let mut buf = transpose(&complexify(&w.values), nx, nxi);
    fft_rows(&mut buf, nx, false);
    let nyq = nyquist_index(nx);
    let scale = 1.0 / nx as f64;
    buf.par_chunks_mut(nx).enumerate().for_each(|(l, row)| {
        let xi = g.xi[l];
        for (j, z) in row.iter_mut().enumerate() {
            let phase = g.mu[j] * xi * tau;
            let factor = if j == nyq { Complex64::new(phase.cos(), 0.0) } else { Complex64::from_polar(1.0, -phase) };
            *z *= factor * scale;
        }
    });
    fft_rows(&mut buf, nx, true);
    let values = into_real(transpose(&buf, nxi, nx), (nx, nxi), "convection");
    w.with_values(values, w.time)
}

fn nonlocal_multiplier(dv: Complex64, tau: f64, nyquist: bool) -> Complex64 {
    if nyquist {
        // δV(x, -y) = -δV(x, y)
        0.5 * ((dv * tau).exp() + (-dv * tau).exp())
    } else {
        (dv * tau).exp()
    }
}

/// Nonlocal step `∂t W = -Θ[V] W`: ξ-mode `k` at `x_m` is multiplied by `exp(δV(m, k) τ)`.
pub fn step_nonlocal(w: &WignerField, tau: f64, dv: &DeltaVTable) -> Result<WignerField> {
    let g = &w.grid;
    dv.check_shape(g)?;
    let (nx, nxi) = g.shape();
    let mut buf = complexify(&w.values);
    fft_rows(&mut buf, nxi, false);
    let nyq = nyquist_index(nxi);
    let scale = 1.0 / nxi as f64;
    buf.par_chunks_mut(nxi).enumerate().for_each(|(m, row)| {
        let dv_row = dv.entries.row(m);
        for (k, z) in row.iter_mut().enumerate() {
            *z *= nonlocal_multiplier(dv_row[k], tau, k == nyq) * scale;
        }
    });
    fft_rows(&mut buf, nxi, true);
    let values = into_real(buf, (nx, nxi), "nonlocal");
    Ok(w.with_values(values, w.time))
}

/// The generator `-Θ[V] W` itself, evaluated through the δV multipliers.
pub fn apply_nonlocal_generator(w: &WignerField, dv: &DeltaVTable) -> Result<Array2<f64>> {
    let g = &w.grid;
    dv.check_shape(g)?;
    let (nx, nxi) = g.shape();
    let mut buf = complexify(&w.values);
    fft_rows(&mut buf, nxi, false);
    let nyq = nyquist_index(nxi);
    let scale = 1.0 / nxi as f64;
    buf.par_chunks_mut(nxi).enumerate().for_each(|(m, row)| {
        for (k, z) in row.iter_mut().enumerate() {
            // the symmetric Nyquist average of ±δV vanishes
            let mult = if k == nyq { Complex64::default() } else { dv.entries[[m, k]] };
            *z *= mult * scale;
        }
    });
    fft_rows(&mut buf, nxi, true);
    Ok(into_real(buf, (nx, nxi), "nonlocal generator"))
}

/// Decay factor of the diffusion step for mode `(j, k)`, Nyquist-averaged.
fn diffusion_factor(g: &GridSpec, j: usize, k: usize, tau: f64, dqq: f64, dpq: f64, dpp: f64) -> f64 {
    let mus: &[f64] = &if j == nyquist_index(g.nx) { [g.mu[j], -g.mu[j]] } else { [g.mu[j], g.mu[j]] };
    let nus: &[f64] = &if k == nyquist_index(g.nxi) { [g.nu[k], -g.nu[k]] } else { [g.nu[k], g.nu[k]] };
    let mut acc = 0.0;
    for &mu in mus {
        for &nu in nus {
            acc += ((-dqq * mu * mu - 2.0 * dpq * mu * nu - dpp * nu * nu) * tau).exp();
        }
    }
    0.25 * acc
}

/// Phase-space diffusion `∂t W = Dqq ∂xx W + 2 Dpq ∂xξ W + Dpp ∂ξξ W`, solved in 2D Fourier space.
pub fn step_diffusion(w: &WignerField, tau: f64, dqq: f64, dpq: f64, dpp: f64) -> WignerField {
    if dqq == 0.0 && dpq == 0.0 && dpp == 0.0 {
        return w.clone();
    }
    let g: &Arc<GridSpec> = &w.grid;
    let (nx, nxi) = g.shape();
    let mut buf = complexify(&w.values);
    fft_rows(&mut buf, nxi, false);
    let mut buf = transpose(&buf, nx, nxi);
    fft_rows(&mut buf, nx, false);
    let scale = 1.0 / (nx * nxi) as f64;
    buf.par_chunks_mut(nx).enumerate().for_each(|(k, row)| {
        for (j, z) in row.iter_mut().enumerate() {
            *z *= diffusion_factor(g, j, k, tau, dqq, dpq, dpp) * scale;
        }
    });
    fft_rows(&mut buf, nx, true);
    let mut buf = transpose(&buf, nxi, nx);
    fft_rows(&mut buf, nxi, true);
    let values = into_real(buf, (nx, nxi), "diffusion");
    w.with_values(values, w.time)
}
