//! Friction substep `∂t W = 2γ ∂ξ(ξ W)`.
//!
//! The production path is Fourier collocation on the momentum nodes, giving the
//! dense linear system `∂t W = 2γ(I + ΛD) W` per position. The Galerkin path
//! couples the ξ-Fourier coefficients through `2γ(I + E + F)` instead and is
//! kept to cross-check the collocation result.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{linalg::general_mat_mul, Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{config_err, Result, WpfpError};
use crate::grid::{mode_number, GridSpec, WignerField};
use crate::linalg::matrix_exp;
use crate::spectral::{complexify, fft_rows, residue, IMAG_RESIDUE_TOL};

/// Identifies the momentum discretization a friction operator was built for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumTag {
    pub nxi: usize,
    pub c: f64,
    pub d: f64,
}

impl MomentumTag {
    fn of(grid: &GridSpec) -> Self {
        Self { nxi: grid.nxi, c: grid.c, d: grid.d }
    }

    fn check(&self, grid: &GridSpec) -> Result<()> {
        if *self == Self::of(grid) {
            Ok(())
        } else {
            Err(WpfpError::GridMismatch(format!(
                "friction operator built for N = {} on [{}, {}], field has N = {} on [{}, {}]",
                self.nxi, self.c, self.d, grid.nxi, grid.c, grid.d
            )))
        }
    }
}

/// Derivatives of the trigonometric cardinal functions at the momentum nodes.
#[derive(Debug, Clone)]
pub struct FrictionDiffMatrix {
    /// `d[k][j] = (-1)^{k+j} (π/(d-c)) cot(π(k-j)/N)`, zero on the diagonal.
    pub d: Array2<f64>,
    pub tag: MomentumTag,
}

pub fn build_friction_diffmatrix(grid: &GridSpec) -> FrictionDiffMatrix {
    let n = grid.nxi;
    let scale = PI / (grid.d - grid.c);
    let d = Array2::from_shape_fn((n, n), |(k, j)| {
        if k == j {
            0.0
        } else {
            let sign = if (k + j) % 2 == 0 { 1.0 } else { -1.0 };
            let arg = PI * (k as f64 - j as f64) / n as f64;
            sign * scale * arg.cos() / arg.sin()
        }
    });
    FrictionDiffMatrix { d, tag: MomentumTag::of(grid) }
}

/// `exp(2γ(I + ΛD) Δt)` acting on each position's vector of momentum samples.
#[derive(Debug, Clone)]
pub struct FrictionPropagator {
    pub p: Array2<f64>,
    pub gamma: f64,
    pub dt: f64,
    pub tag: MomentumTag,
}

pub fn build_friction_propagator(grid: &GridSpec, gamma: f64, dt: f64) -> Result<FrictionPropagator> {
    if gamma < 0.0 || !gamma.is_finite() {
        return config_err(format!("friction gamma = {gamma} must be finite and non-negative"));
    }
    if !dt.is_finite() {
        return config_err(format!("friction dt = {dt} must be finite"));
    }
    let n = grid.nxi;
    let tag = MomentumTag::of(grid);
    if gamma == 0.0 || dt == 0.0 {
        return Ok(FrictionPropagator { p: Array2::eye(n), gamma, dt, tag });
    }
    let dmat = build_friction_diffmatrix(grid);
    let s = 2.0 * gamma * dt;
    let mut a = Array2::from_shape_fn((n, n), |(k, j)| s * grid.xi[k] * dmat.d[[k, j]]);
    for k in 0..n {
        a[[k, k]] += s;
    }
    let p = matrix_exp(&a)?;
    Ok(FrictionPropagator { p, gamma, dt, tag })
}

/// Left-multiplies every position's momentum vector by the propagator (`W ← W Pᵀ`).
pub fn step_friction_collocation(w: &WignerField, prop: &FrictionPropagator) -> Result<WignerField> {
    prop.tag.check(&w.grid)?;
    if prop.gamma == 0.0 || prop.dt == 0.0 {
        return Ok(w.clone());
    }
    let pt = prop.p.t();
    let mut out = Array2::zeros(w.values.dim());
    let chunk = (w.grid.nx / rayon::current_num_threads()).max(8);
    out.axis_chunks_iter_mut(Axis(0), chunk)
        .into_par_iter()
        .zip(w.values.axis_chunks_iter(Axis(0), chunk).into_par_iter())
        .for_each(|(mut dst, src)| general_mat_mul(1.0, &src, &pt, 0.0, &mut dst));
    Ok(w.with_values(out, w.time))
}

/// Cache of collocation propagators keyed by `(γ, Δt, N, c, d)`.
#[derive(Debug, Default)]
pub struct PropagatorCache {
    entries: HashMap<(u64, u64, usize, u64, u64), Arc<FrictionPropagator>>,
}

impl PropagatorCache {
    pub fn get(&mut self, grid: &GridSpec, gamma: f64, dt: f64) -> Result<Arc<FrictionPropagator>> {
        let key = (gamma.to_bits(), dt.to_bits(), grid.nxi, grid.c.to_bits(), grid.d.to_bits());
        if let Some(p) = self.entries.get(&key) {
            return Ok(Arc::clone(p));
        }
        let p = Arc::new(build_friction_propagator(grid, gamma, dt)?);
        self.entries.insert(key, Arc::clone(&p));
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Galerkin operators in ξ-mode space, DFT index order.
#[derive(Debug, Clone)]
pub struct GalerkinFrictionMatrices {
    /// Diagonal of `E`: `iπ (d+c)/(d-c) · k`.
    pub e: Vec<Complex64>,
    /// `f[k][l] = l/(l-k)` for `l ≠ k` (mode numbers), zero otherwise.
    pub f: Array2<f64>,
    pub tag: MomentumTag,
}

pub fn build_galerkin_matrices(grid: &GridSpec) -> GalerkinFrictionMatrices {
    let n = grid.nxi;
    let ratio = PI * (grid.d + grid.c) / (grid.d - grid.c);
    let e = (0..n).map(|i| Complex64::new(0.0, ratio * mode_number(i, n) as f64)).collect();
    let f = Array2::from_shape_fn((n, n), |(ki, li)| {
        let (k, l) = (mode_number(ki, n), mode_number(li, n));
        if k == l {
            0.0
        } else {
            l as f64 / (l - k) as f64
        }
    });
    GalerkinFrictionMatrices { e, f, tag: MomentumTag::of(grid) }
}

/// `exp(2γ(I + E + F) Δt)` on ξ-Fourier coefficients.
#[derive(Debug, Clone)]
pub struct GalerkinPropagator {
    pub g: Array2<Complex64>,
    pub gamma: f64,
    pub dt: f64,
    pub tag: MomentumTag,
}

impl GalerkinPropagator {
    pub fn new(mats: &GalerkinFrictionMatrices, gamma: f64, dt: f64) -> Result<Self> {
        if gamma < 0.0 || !gamma.is_finite() || !dt.is_finite() {
            return config_err(format!("invalid friction parameters gamma = {gamma}, dt = {dt}"));
        }
        let n = mats.e.len();
        let s = 2.0 * gamma * dt;
        let a = Array2::from_shape_fn((n, n), |(k, l)| {
            let mut v = Complex64::new(s * mats.f[[k, l]], 0.0);
            if k == l {
                v += s * (1.0 + mats.e[k]);
            }
            v
        });
        Ok(Self { g: matrix_exp(&a)?, gamma, dt, tag: mats.tag })
    }

    pub fn apply(&self, w: &WignerField) -> Result<WignerField> {
        self.tag.check(&w.grid)?;
        let (nx, nxi) = w.grid.shape();
        let mut buf = complexify(&w.values);
        fft_rows(&mut buf, nxi, false);
        let scale = Complex64::new(1.0 / nxi as f64, 0.0);
        let coef = Array2::from_shape_vec((nx, nxi), buf).expect("shape").mapv(|z| z * scale);
        let mixed = coef.dot(&self.g.t());
        let mut buf = mixed.into_raw_vec_and_offset().0;
        fft_rows(&mut buf, nxi, true);
        // The unpaired -N/2 mode is coupled to the others without a conjugate
        // partner, so the imaginary residue tracks its amplitude.
        let (im, re) = residue(&buf);
        if im > IMAG_RESIDUE_TOL * re {
            log::warn!("galerkin friction: imaginary residue {im:.3e} (max |Re| = {re:.3e})");
        }
        let values = Array2::from_shape_vec((nx, nxi), buf.into_iter().map(|z| z.re).collect()).expect("shape");
        Ok(w.with_values(values, w.time))
    }
}

/// Galerkin friction step: ξ-DFT, multiply by `exp(2γ(I+E+F)dt)`, inverse DFT, real part.
pub fn step_friction_galerkin(
    w: &WignerField,
    mats: &GalerkinFrictionMatrices,
    gamma: f64,
    dt: f64,
) -> Result<WignerField> {
    if gamma == 0.0 {
        mats.tag.check(&w.grid)?;
        return Ok(w.clone());
    }
    GalerkinPropagator::new(mats, gamma, dt)?.apply(w)
}
