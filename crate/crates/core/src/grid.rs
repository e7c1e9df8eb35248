//! Truncated periodic phase-space grid and the Wigner field living on it.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use ndarray::{Array2, Zip};

use crate::error::{config_err, Result, WpfpError};

/// Uniform periodic grid on `[a, b) × [c, d)` with `nx × nxi` nodes.
///
/// Frequency tables are stored in DFT index order, i.e. mode numbers
/// `0, 1, …, n/2-1, -n/2, …, -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Number of position nodes (M).
    pub nx: usize,
    /// Number of momentum nodes (N).
    pub nxi: usize,
    pub hx: f64,
    pub hxi: f64,
    /// Position frequencies `2πj/(b-a)`.
    pub mu: Vec<f64>,
    /// Momentum frequencies `2πk/(d-c)`.
    pub nu: Vec<f64>,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

/// Mode number stored at DFT index `idx` of a length-`n` transform.
#[inline]
pub fn mode_number(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// DFT index of the unpaired `-n/2` mode.
#[inline]
pub fn nyquist_index(n: usize) -> usize {
    n / 2
}

impl GridSpec {
    pub fn new(a: f64, b: f64, c: f64, d: f64, nx: usize, nxi: usize) -> Result<Self> {
        for (name, n) in [("M", nx), ("N", nxi)] {
            if n < 4 || n % 2 != 0 {
                return config_err(format!("{name} = {n} must be even and at least 4"));
            }
        }
        if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) {
            return config_err("domain bounds must be finite");
        }
        if b <= a {
            return config_err(format!("position bounds inverted: a = {a}, b = {b}"));
        }
        if d <= c {
            return config_err(format!("momentum bounds inverted: c = {c}, d = {d}"));
        }
        let (lx, lxi) = (b - a, d - c);
        let hx = lx / nx as f64;
        let hxi = lxi / nxi as f64;
        Ok(Self {
            a,
            b,
            c,
            d,
            nx,
            nxi,
            hx,
            hxi,
            mu: (0..nx).map(|i| 2.0 * PI * mode_number(i, nx) as f64 / lx).collect(),
            nu: (0..nxi).map(|i| 2.0 * PI * mode_number(i, nxi) as f64 / lxi).collect(),
            x: (0..nx).map(|m| a + m as f64 * hx).collect(),
            xi: (0..nxi).map(|l| c + l as f64 * hxi).collect(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.nxi)
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hxi
    }

    /// Grids are interchangeable when bounds and counts agree.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.nx == other.nx
            && self.nxi == other.nxi
            && self.a == other.a
            && self.b == other.b
            && self.c == other.c
            && self.d == other.d
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(WpfpError::GridMismatch(format!(
                "{}x{} on [{}, {}]x[{}, {}] vs {}x{} on [{}, {}]x[{}, {}]",
                self.nx,
                self.nxi,
                self.a,
                self.b,
                self.c,
                self.d,
                other.nx,
                other.nxi,
                other.a,
                other.b,
                other.c,
                other.d
            )))
        }
    }
}

/// Shorthand for [`GridSpec::new`].
pub fn build_grid(a: f64, b: f64, c: f64, d: f64, nx: usize, nxi: usize) -> Result<Arc<GridSpec>> {
    GridSpec::new(a, b, c, d, nx, nxi).map(Arc::new)
}

/// Samples `W(x_m, ξ_l, t)` stored x-major: row `m` holds every momentum node at `x_m`.
#[derive(Debug, Clone)]
pub struct WignerField {
    pub grid: Arc<GridSpec>,
    pub values: Array2<f64>,
    pub time: f64,
}

impl WignerField {
    pub fn zeros(grid: Arc<GridSpec>) -> Self {
        let values = Array2::zeros(grid.shape());
        Self { grid, values, time: 0.0 }
    }

    pub fn from_values(grid: Arc<GridSpec>, values: Array2<f64>, time: f64) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(WpfpError::Shape { expected: grid.shape(), found: values.dim() });
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: Arc<GridSpec>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(grid.shape(), |(m, l)| f(grid.x[m], grid.xi[l]));
        Self { grid, values, time: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub(crate) fn with_values(&self, values: Array2<f64>, time: f64) -> Self {
        Self { grid: Arc::clone(&self.grid), values, time }
    }
}

static SIGN_WARNED: AtomicBool = AtomicBool::new(false);

/// Coefficients of the Gaussian wavepacket
/// `√(a11 a22 - a12²)/(πε) · exp(-[a11 Δx² + a22 Δξ² + 2 a12 Δx Δξ]/ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianIC {
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    pub x0: f64,
    pub xi0: f64,
}

impl GaussianIC {
    /// Maps the coefficients onto a positive-definite form.
    ///
    /// Negative diagonal entries are replaced by their magnitudes (the preset
    /// parameters list `a11 = a22 = -1`, which is not normalizable as written);
    /// the sign of `a12` is kept. The first flip in a process logs a warning.
    pub fn normalized(&self) -> Result<GaussianIC> {
        let mut out = *self;
        if self.a11 < 0.0 || self.a22 < 0.0 {
            if !SIGN_WARNED.swap(true, Ordering::Relaxed) {
                log::warn!(
                    "Gaussian coefficients a11 = {}, a22 = {} are negative; using |a11|, |a22|",
                    self.a11,
                    self.a22
                );
            }
            out.a11 = self.a11.abs();
            out.a22 = self.a22.abs();
        }
        let det = out.a11 * out.a22 - out.a12 * out.a12;
        if !(out.a11 > 0.0 && det > 0.0) || !det.is_finite() {
            return config_err(format!(
                "Gaussian form [[{}, {}], [{}, {}]] is not positive definite",
                out.a11, out.a12, out.a12, out.a22
            ));
        }
        Ok(out)
    }

    pub fn determinant(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }
}

/// Samples the normalized Gaussian wavepacket on the grid at `t = 0`.
pub fn gaussian_wavepacket(ic: &GaussianIC, epsilon: f64, grid: &Arc<GridSpec>) -> Result<WignerField> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return config_err(format!("epsilon = {epsilon} must be positive"));
    }
    let ic = ic.normalized()?;
    let amp = ic.determinant().sqrt() / (PI * epsilon);
    Ok(WignerField::from_fn(Arc::clone(grid), |x, xi| {
        let (dx, dxi) = (x - ic.x0, xi - ic.xi0);
        let q = ic.a11 * dx * dx + ic.a22 * dxi * dxi + 2.0 * ic.a12 * dx * dxi;
        amp * (-q / epsilon).exp()
    }))
}

/// Rectangle-rule phase-space integral `h_x h_ξ Σ W`.
pub fn total_mass(w: &WignerField) -> f64 {
    w.grid.cell_area() * w.values.sum()
}

/// Discrete `L²` and `L∞` norms of `w - w_ref`.
pub fn error_norms(w: &WignerField, w_ref: &WignerField) -> Result<(f64, f64)> {
    w.grid.ensure_same(&w_ref.grid)?;
    let mut sq = 0.0;
    let mut linf = 0.0_f64;
    Zip::from(&w.values).and(&w_ref.values).for_each(|&p, &q| {
        let e = (p - q).abs();
        sq += e * e;
        linf = linf.max(e);
    });
    Ok(((w.grid.cell_area() * sq).sqrt(), linf))
}
