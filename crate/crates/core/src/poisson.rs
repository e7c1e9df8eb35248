//! Periodic Poisson solve `∂xx V = α ρ` and the self-consistent δV table.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid::{nyquist_index, GridSpec, WignerField};
use crate::spectral::{dft_real, idft};
use crate::transport::DeltaVTable;

/// Fourier coefficients `V̂_j` of the potential in DFT order, `V̂_0 = 0`.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub vhat: Vec<Complex64>,
    pub time_tag: f64,
    /// Mean density removed before solving (neutralizing background).
    pub background: f64,
}

impl PotentialField {
    /// Real potential samples `V(x_m)`.
    pub fn samples(&self) -> Vec<f64> {
        idft(&self.vhat).into_iter().map(|z| z.re).collect()
    }
}

/// Rectangle-rule density `ρ_m = h_ξ Σ_l W(x_m, ξ_l)`.
pub fn density(w: &WignerField) -> Vec<f64> {
    let h = w.grid.hxi;
    w.values.rows().into_iter().map(|row| h * row.sum()).collect()
}

/// Spectral solve with the density mean subtracted, `V̂_j = -α ρ̂_j / μ_j²`.
pub fn solve_poisson(rho: &[f64], alpha: f64, grid: &GridSpec) -> PotentialField {
    assert_eq!(rho.len(), grid.nx, "density length must equal M");
    let mean = rho.iter().sum::<f64>() / rho.len() as f64;
    log::debug!("poisson: removed background density {mean:.6e}");
    let centered: Vec<f64> = rho.iter().map(|r| r - mean).collect();
    let mut vhat = dft_real(&centered);
    vhat[0] = Complex64::default();
    for (v, &mu) in vhat.iter_mut().zip(&grid.mu).skip(1) {
        *v *= -alpha / (mu * mu);
    }
    PotentialField { vhat, time_tag: 0.0, background: mean }
}

/// `δV(x_m, εν_k/2) = (i/ε) Σ_j V̂_j e^{iμ_j(x_m-a)} · 2i sin(ε μ_j ν_k / 2)`.
///
/// The unpaired `-M/2` potential mode is split evenly between `±M/2`, where its
/// two contributions cancel; the table is therefore purely imaginary.
pub fn build_delta_v_selfconsistent(v: &PotentialField, grid: &GridSpec, epsilon: f64) -> DeltaVTable {
    let (nx, nxi) = grid.shape();
    let nyq = nyquist_index(nx);
    let columns: Vec<Vec<f64>> = (0..nxi)
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                return vec![0.0; nx];
            }
            let coef: Vec<Complex64> = (0..nx)
                .map(|j| {
                    if j == nyq {
                        Complex64::default()
                    } else {
                        v.vhat[j] * (0.5 * epsilon * grid.mu[j] * grid.nu[k]).sin()
                    }
                })
                .collect();
            idft(&coef).into_iter().map(|z| -2.0 * z.im / epsilon).collect()
        })
        .collect();
    let entries = Array2::from_shape_fn((nx, nxi), |(m, k)| Complex64::new(0.0, columns[k][m]));
    DeltaVTable { entries, time_tag: v.time_tag }
}

/// Density → Poisson → δV for the current field.
pub fn self_consistent_delta_v(w: &WignerField, alpha: f64, epsilon: f64) -> DeltaVTable {
    let mut v = solve_poisson(&density(w), alpha, &w.grid);
    v.time_tag = w.time;
    build_delta_v_selfconsistent(&v, &w.grid, epsilon)
}
