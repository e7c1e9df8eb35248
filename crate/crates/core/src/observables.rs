//! Local and global moments, and the steady-state residual.

use crate::error::{Result, WpfpError};
use crate::grid::WignerField;

/// Per-node densities `ρ`, `j`, `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMoments {
    pub rho: Vec<f64>,
    pub current: Vec<f64>,
    pub energy: Vec<f64>,
}

/// Integrated particle number, momentum and energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalMoments {
    pub n: f64,
    pub j: f64,
    pub e: f64,
}

fn check_alpha_tilde(alpha_tilde: f64) -> Result<()> {
    if alpha_tilde == 1.0 || alpha_tilde == 0.5 {
        Ok(())
    } else {
        Err(WpfpError::Config(format!("energy weight must be 1 or 1/2, got {alpha_tilde}")))
    }
}

/// Rectangle-rule moments in ξ at every x node.
pub fn local_moments(w: &WignerField, v: &[f64], alpha_tilde: f64) -> Result<LocalMoments> {
    check_alpha_tilde(alpha_tilde)?;
    let g = &w.grid;
    if v.len() != g.nx {
        return Err(WpfpError::Shape { expected: (g.nx, 1), found: (v.len(), 1) });
    }
    let mut out = LocalMoments {
        rho: Vec::with_capacity(g.nx),
        current: Vec::with_capacity(g.nx),
        energy: Vec::with_capacity(g.nx),
    };
    for (row, &vm) in w.values.rows().into_iter().zip(v) {
        let (mut r, mut j, mut k) = (0.0, 0.0, 0.0);
        for (&wl, &xi) in row.iter().zip(&g.xi) {
            r += wl;
            j += xi * wl;
            k += 0.5 * xi * xi * wl;
        }
        out.rho.push(g.hxi * r);
        out.current.push(g.hxi * j);
        out.energy.push(g.hxi * (k + alpha_tilde * vm * r));
    }
    Ok(out)
}

/// `h_x`-weighted sums of [`local_moments`].
pub fn global_moments(w: &WignerField, v: &[f64], alpha_tilde: f64) -> Result<GlobalMoments> {
    let lm = local_moments(w, v, alpha_tilde)?;
    let h = w.grid.hx;
    Ok(GlobalMoments {
        n: h * lm.rho.iter().sum::<f64>(),
        j: h * lm.current.iter().sum::<f64>(),
        e: h * lm.energy.iter().sum::<f64>(),
    })
}

/// `‖W_next − W_prev‖_∞ / (dt ‖W_next‖_∞)`.
pub fn steady_state_residual(prev: &WignerField, next: &WignerField, dt: f64) -> Result<f64> {
    prev.grid.ensure_same(&next.grid)?;
    if dt.is_nan() || dt <= 0.0 {
        return Err(WpfpError::Config(format!("residual needs dt > 0, got {dt}")));
    }
    let scale = next.max_abs();
    if scale == 0.0 {
        return Err(WpfpError::Numeric("steady-state residual of a zero field".into()));
    }
    let diff = prev.values.iter().zip(&next.values).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(diff / (dt * scale))
}

/// One sample of the global observables.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub t: f64,
    pub moments: GlobalMoments,
    /// Residual against the previous step, when one was available.
    pub residual: Option<f64>,
    pub local: Option<LocalMoments>,
}

/// Time series of `N`, `J`, `E` with strictly increasing timestamps.
#[derive(Debug, Clone, Default)]
pub struct ObservableSeries {
    records: Vec<ObservableRecord>,
    pub alpha_tilde: f64,
}

impl ObservableSeries {
    pub fn new(alpha_tilde: f64) -> Self {
        Self { records: Vec::new(), alpha_tilde }
    }

    pub fn push(&mut self, rec: ObservableRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if rec.t.is_nan() || rec.t <= last.t {
                return Err(WpfpError::Numeric(format!(
                    "observable timestamps must increase: {} after {}",
                    rec.t, last.t
                )));
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn records(&self) -> &[ObservableRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Initial values used to normalize reported quantities.
    pub fn initial(&self) -> Option<GlobalMoments> {
        self.records.first().map(|r| r.moments)
    }

    /// Each quantity divided by its initial value; zero initial values are left unscaled.
    pub fn normalized(&self) -> Vec<(f64, GlobalMoments)> {
        let Some(m0) = self.initial() else {
            return Vec::new();
        };
        let s = |v: f64, v0: f64| if v0 != 0.0 { v / v0 } else { v };
        self.records
            .iter()
            .map(|r| {
                let m = r.moments;
                (r.t, GlobalMoments { n: s(m.n, m0.n), j: s(m.j, m0.j), e: s(m.e, m0.e) })
            })
            .collect()
    }

    /// Largest relative deviation of `N` from its initial value.
    pub fn mass_drift(&self) -> f64 {
        let Some(m0) = self.initial() else { return 0.0 };
        self.records.iter().map(|r| (r.moments.n - m0.n).abs() / m0.n.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
    }
}

/// Windowed steady-state criterion: `window` consecutive residuals below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyCriterion {
    pub threshold: f64,
    pub window: usize,
}

impl Default for SteadyCriterion {
    fn default() -> Self {
        Self { threshold: 1e-3, window: 16 }
    }
}

/// Outcome of scanning a residual history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyVerdict {
    pub reached: bool,
    /// Earliest time from which every later residual stays below threshold.
    pub t_steady: Option<f64>,
    pub final_residual: Option<f64>,
}

impl SteadyCriterion {
    /// Scans `(t, residual)` pairs. A steady state is declared when the trailing
    /// run of sub-threshold residuals is at least `window` long.
    pub fn evaluate(&self, history: &[(f64, f64)]) -> SteadyVerdict {
        let final_residual = history.last().map(|h| h.1);
        let tail = history.iter().rev().take_while(|(_, r)| *r < self.threshold).count();
        if tail >= self.window.max(1) {
            let start = history[history.len() - tail].0;
            SteadyVerdict { reached: true, t_steady: Some(start), final_residual }
        } else {
            SteadyVerdict { reached: false, t_steady: None, final_residual }
        }
    }
}
