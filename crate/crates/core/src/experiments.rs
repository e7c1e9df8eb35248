//! Convergence studies and steady-state runs.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::error::{config_err, Result, WpfpError};
use crate::grid::{build_grid, error_norms, GridSpec, WignerField};
use crate::observables::{SteadyCriterion, SteadyVerdict};
use crate::oracle::reference_field;
use crate::potential::PotentialSpec;
use crate::presets::{ExperimentPreset, ReferenceStrategy, SteadyTarget};
use crate::splitting::{run_simulation, NullSink, RunConfig, RunOutput, SimulationSink};

/// Time step used for spatial studies against the analytic oracle.
pub const SPATIAL_STUDY_DT: f64 = 1.0 / 1024.0;
/// Records per unit of steady-state cadence: one record every 16 steps.
pub const STEADY_RECORD_EVERY: usize = 16;
/// Relative `N(t)` drift allowed during a steady-state run.
pub const STEADY_MASS_DRIFT: f64 = 1e-4;
/// Spatial success: final error below this, or ...
pub const SPECTRAL_ABS: f64 = 1e-8;
/// ... first-to-last error ratio at least this.
pub const SPECTRAL_RATIO: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    M,
    N,
    Dt,
}

impl FromStr for Axis {
    type Err = WpfpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" => Ok(Axis::M),
            "N" => Ok(Axis::N),
            "dt" => Ok(Axis::Dt),
            other => config_err(format!("unknown axis '{other}', expected M, N or dt")),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::M => "M",
            Axis::N => "N",
            Axis::Dt => "dt",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceSample {
    pub nx: usize,
    pub nxi: usize,
    pub dt: f64,
    pub l2: f64,
    pub linf: f64,
    pub runtime: Duration,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub preset: String,
    pub axis: Axis,
    pub reference: String,
    pub samples: Vec<ConvergenceSample>,
    /// Order between each adjacent pair of samples.
    pub orders_l2: Vec<f64>,
    pub orders_linf: Vec<f64>,
    /// Least-squares slope of `log e` against `log h` over all samples.
    pub fitted_l2: f64,
    pub fitted_linf: f64,
}

impl ConvergenceSample {
    /// Step size along the study axis.
    fn h(&self, axis: Axis) -> f64 {
        match axis {
            Axis::M => 1.0 / self.nx as f64,
            Axis::N => 1.0 / self.nxi as f64,
            Axis::Dt => self.dt,
        }
    }
}

fn pairwise_orders(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2).zip(e.windows(2)).map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect()
}

fn ls_slope(h: &[f64], e: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

impl ConvergenceReport {
    /// Every pairwise order, in both norms, inside `range`.
    pub fn orders_within(&self, range: (f64, f64)) -> bool {
        let ok = |o: &f64| *o >= range.0 && *o <= range.1;
        !self.orders_l2.is_empty() && self.orders_l2.iter().all(ok) && self.orders_linf.iter().all(ok)
    }

    /// Last error small enough or error ratio large enough, in both norms.
    pub fn spectral_decay(&self) -> bool {
        let (Some(first), Some(last)) = (self.samples.first(), self.samples.last()) else {
            return false;
        };
        let ok = |a: f64, b: f64| b <= SPECTRAL_ABS || a / b >= SPECTRAL_RATIO;
        ok(first.l2, last.l2) && ok(first.linf, last.linf)
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "preset {}  axis {}  reference {}", self.preset, self.axis, self.reference);
        let _ = writeln!(
            s,
            "{:>6} {:>6} {:>12} {:>12} {:>12} {:>8} {:>8} {:>9}",
            "M", "N", "dt", "L2", "Linf", "p(L2)", "p(Linf)", "time[s]"
        );
        for (i, smp) in self.samples.iter().enumerate() {
            let (p2, pi) = if i == 0 {
                ("-".to_string(), "-".to_string())
            } else {
                (format!("{:.3}", self.orders_l2[i - 1]), format!("{:.3}", self.orders_linf[i - 1]))
            };
            let _ = writeln!(
                s,
                "{:>6} {:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>8} {:>8} {:>9.3}",
                smp.nx,
                smp.nxi,
                smp.dt,
                smp.l2,
                smp.linf,
                p2,
                pi,
                smp.runtime.as_secs_f64()
            );
        }
        let _ = writeln!(s, "least-squares order: L2 {:.3}  Linf {:.3}", self.fitted_l2, self.fitted_linf);
        s
    }
}

/// Samples a fine-grid field at the nodes of a nested coarse grid.
pub fn subsample(fine: &WignerField, coarse: &Arc<GridSpec>) -> Result<WignerField> {
    let f = &fine.grid;
    let same_box = [f.a, f.b, f.c, f.d] == [coarse.a, coarse.b, coarse.c, coarse.d];
    if !same_box || !f.nx.is_multiple_of(coarse.nx) || !f.nxi.is_multiple_of(coarse.nxi) {
        return Err(WpfpError::GridMismatch(format!(
            "{}x{} grid is not nested in the {}x{} reference",
            coarse.nx, coarse.nxi, f.nx, f.nxi
        )));
    }
    let (sx, sxi) = (f.nx / coarse.nx, f.nxi / coarse.nxi);
    let values = ndarray::Array2::from_shape_fn(coarse.shape(), |(m, l)| fine.values[[m * sx, l * sxi]]);
    WignerField::from_values(Arc::clone(coarse), values, fine.time)
}

fn with_grid(base: &RunConfig, nx: usize, nxi: usize, dt: f64) -> Result<RunConfig> {
    let g = &base.grid;
    let mut cfg = base.clone();
    cfg.grid = build_grid(g.a, g.b, g.c, g.d, nx, nxi)?;
    cfg.dt = dt;
    cfg.record_every = usize::MAX;
    cfg.snapshot_every = None;
    Ok(cfg)
}

enum Reference {
    Oracle,
    Field(WignerField),
}

/// Reference field for a preset on its own grid (oracle or fine-grid run).
pub fn preset_reference(preset: &ExperimentPreset) -> Result<WignerField> {
    let cfg = &preset.config;
    match preset.reference {
        ReferenceStrategy::AnalyticOracle => reference_field(&cfg.ic, &cfg.params, &cfg.grid, cfg.t_final),
        ReferenceStrategy::FineGrid { nx, nxi, dt } => {
            let out = run_simulation(&with_grid(cfg, nx, nxi, dt)?, &mut NullSink)?;
            Ok(out.field)
        }
    }
}

/// Runs every sample along `axis` and measures errors at `T` against the preset's reference.
///
/// `samples` are grid counts for the `M`/`N` axes and step sizes for `dt`. The
/// other discretization parameters come from the preset; spatial studies use
/// the reference time step (fine-grid presets) or [`SPATIAL_STUDY_DT`].
pub fn convergence_study(preset: &ExperimentPreset, axis: Axis, samples: &[f64]) -> Result<ConvergenceReport> {
    convergence_study_config(preset.id.name(), &preset.config, preset.reference, axis, samples)
}

/// Reference for an arbitrary configuration: the oracle for quadratic external
/// potentials, otherwise a run at twice the resolution with dt = [`SPATIAL_STUDY_DT`].
pub fn default_reference(config: &RunConfig) -> ReferenceStrategy {
    match &config.params.potential {
        PotentialSpec::External(v) if v.quadratic_coefficients().is_some() => ReferenceStrategy::AnalyticOracle,
        _ => ReferenceStrategy::FineGrid { nx: 2 * config.grid.nx, nxi: 2 * config.grid.nxi, dt: SPATIAL_STUDY_DT },
    }
}

/// [`convergence_study`] for an arbitrary configuration and reference.
pub fn convergence_study_config(
    name: &str,
    base: &RunConfig,
    reference: ReferenceStrategy,
    axis: Axis,
    samples: &[f64],
) -> Result<ConvergenceReport> {
    if samples.len() < 2 {
        return config_err("a convergence study needs at least two samples");
    }
    let spatial_dt = match reference {
        ReferenceStrategy::AnalyticOracle => SPATIAL_STUDY_DT,
        ReferenceStrategy::FineGrid { dt, .. } => dt,
    };
    let as_count = |v: f64| -> Result<usize> {
        if v.fract() != 0.0 || v < 4.0 {
            return config_err(format!("grid count {v} must be an integer >= 4"));
        }
        Ok(v as usize)
    };
    let mut plan = Vec::with_capacity(samples.len());
    for &v in samples {
        plan.push(match axis {
            Axis::M => (as_count(v)?, base.grid.nxi, spatial_dt),
            Axis::N => (base.grid.nx, as_count(v)?, spatial_dt),
            Axis::Dt => (base.grid.nx, base.grid.nxi, v),
        });
    }

    let (reference, description) = match reference {
        ReferenceStrategy::AnalyticOracle => (Reference::Oracle, "analytic moment oracle".to_string()),
        ReferenceStrategy::FineGrid { nx, nxi, dt } => {
            for &(m, n, d) in &plan {
                let finer = match axis {
                    Axis::M => nx > m && nxi >= n,
                    Axis::N => nxi > n && nx >= m,
                    Axis::Dt => dt < d && nx >= m && nxi >= n,
                };
                if !finer || (axis == Axis::Dt && d == dt) {
                    return config_err(format!(
                        "reference {nx}x{nxi}, dt = {dt} is not strictly finer than sample {m}x{n}, dt = {d}"
                    ));
                }
                if nx % m != 0 || nxi % n != 0 {
                    return config_err(format!("sample {m}x{n} is not nested in the {nx}x{nxi} reference"));
                }
            }
            let t0 = Instant::now();
            let field = run_simulation(&with_grid(base, nx, nxi, dt)?, &mut NullSink)?.field;
            log::info!("{}: reference {nx}x{nxi}, dt = {dt} computed in {:.1?}", name, t0.elapsed());
            (Reference::Field(field), format!("fine grid {nx}x{nxi}, dt = {dt:e} (desk-scaled)"))
        }
    };

    let mut out = Vec::with_capacity(plan.len());
    for (nx, nxi, dt) in plan {
        let cfg = with_grid(base, nx, nxi, dt)?;
        let t0 = Instant::now();
        let field = run_simulation(&cfg, &mut NullSink)?.field;
        let runtime = t0.elapsed();
        let reference = match &reference {
            Reference::Oracle => reference_field(&cfg.ic, &cfg.params, &cfg.grid, cfg.t_final)?,
            Reference::Field(f) => subsample(f, &cfg.grid)?,
        };
        let (l2, linf) = error_norms(&field, &reference)?;
        log::info!("{}: {nx}x{nxi}, dt = {dt:e}: L2 {l2:.3e}, Linf {linf:.3e} ({runtime:.1?})", name);
        out.push(ConvergenceSample { nx, nxi, dt, l2, linf, runtime });
    }
    let h: Vec<f64> = out.iter().map(|s| s.h(axis)).collect();
    let l2: Vec<f64> = out.iter().map(|s| s.l2).collect();
    let linf: Vec<f64> = out.iter().map(|s| s.linf).collect();
    Ok(ConvergenceReport {
        preset: name.to_string(),
        axis,
        reference: description,
        orders_l2: pairwise_orders(&h, &l2),
        orders_linf: pairwise_orders(&h, &linf),
        fitted_l2: ls_slope(&h, &l2),
        fitted_linf: ls_slope(&h, &linf),
        samples: out,
    })
}

/// Outcome of a long-time run.
#[derive(Debug, Clone)]
pub struct SteadyReport {
    pub name: String,
    pub output: RunOutput,
    pub verdict: SteadyVerdict,
    pub mass_drift: f64,
    pub target: Option<SteadyTarget>,
}

impl SteadyReport {
    /// Steady by the end of the target window with bounded mass drift.
    pub fn passes(&self) -> bool {
        let by = self.target.map_or(f64::INFINITY, |t| t.window.1);
        self.verdict.reached && self.verdict.t_steady.is_some_and(|t| t <= by) && self.mass_drift <= STEADY_MASS_DRIFT
    }

    pub fn text(&self) -> String {
        let v = &self.verdict;
        let t_steady = v.t_steady.map_or("none".to_string(), |t| format!("{t:.4}"));
        let window = self.target.map_or("-".to_string(), |t| format!("[{}, {}]", t.window.0, t.window.1));
        let first = self.output.series.initial();
        let last = self.output.series.records().last().map(|r| r.moments);
        let mut s = format!(
            "{}: steady {} t_steady {} (expected {}) final residual {:.3e} mass drift {:.3e}\n",
            self.name,
            v.reached,
            t_steady,
            window,
            v.final_residual.unwrap_or(f64::NAN),
            self.mass_drift
        );
        if let (Some(a), Some(b)) = (first, last) {
            let _ = writeln!(
                s,
                "  N {:.6e} -> {:.6e}  J {:.6e} -> {:.6e}  E {:.6e} -> {:.6e}",
                a.n, b.n, a.j, b.j, a.e, b.e
            );
        }
        s
    }
}

/// Runs `config` to `t_max`, recording every [`STEADY_RECORD_EVERY`] steps.
pub fn steady_state_run_config(
    name: &str,
    config: &RunConfig,
    t_max: f64,
    criterion: SteadyCriterion,
    target: Option<SteadyTarget>,
    sink: &mut dyn SimulationSink,
) -> Result<SteadyReport> {
    let mut cfg = config.clone();
    cfg.t_final = t_max;
    cfg.record_every = STEADY_RECORD_EVERY;
    let output = run_simulation(&cfg, sink)?;
    let verdict = criterion.evaluate(&output.residual_history());
    let mass_drift = output.series.mass_drift();
    Ok(SteadyReport { name: name.to_string(), output, verdict, mass_drift, target })
}

/// Steady-state run of a preset (`ex4a`, `ex4b`, `ex5`).
pub fn steady_state_run(preset: &ExperimentPreset, t_max: f64, criterion: SteadyCriterion) -> Result<SteadyReport> {
    if preset.steady.is_none() {
        return config_err(format!("{} is not a steady-state preset", preset.id));
    }
    steady_state_run_config(preset.id.name(), &preset.config, t_max, criterion, preset.steady, &mut NullSink)
}
