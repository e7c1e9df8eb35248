//! Strang composition of the four substeps and the time loop.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{config_err, Result, WpfpError};
use crate::friction::{
    build_galerkin_matrices, step_friction_collocation, FrictionPropagator, GalerkinPropagator, PropagatorCache,
};
use crate::grid::{gaussian_wavepacket, total_mass, GaussianIC, GridSpec, WignerField};
use crate::observables::{global_moments, local_moments, steady_state_residual, ObservableRecord, ObservableSeries};
use crate::poisson::{density, self_consistent_delta_v, solve_poisson};
use crate::potential::PotentialSpec;
use crate::transport::{build_delta_v_external, step_convection, step_diffusion, step_nonlocal, DeltaVTable};

/// Model coefficients. The diffusion matrix is `[[dqq, dpq], [dpq, dpp]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub epsilon: f64,
    pub dpp: f64,
    pub dqq: f64,
    pub dpq: f64,
    pub gamma: f64,
    pub potential: PotentialSpec,
    /// Accept an indefinite diffusion matrix (some modes then grow).
    pub allow_indefinite_diffusion: bool,
}

impl PhysicalParams {
    pub fn diffusion_is_psd(&self) -> bool {
        self.dqq >= 0.0 && self.dpp >= 0.0 && self.dqq * self.dpp >= self.dpq * self.dpq
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return config_err(format!("epsilon = {} must be positive", self.epsilon));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return config_err(format!("gamma = {} must be non-negative", self.gamma));
        }
        if ![self.dpp, self.dqq, self.dpq].iter().all(|v| v.is_finite()) {
            return config_err("diffusion coefficients must be finite");
        }
        if !self.diffusion_is_psd() {
            let msg = format!(
                "diffusion matrix [[{}, {}], [{}, {}]] is not positive semidefinite",
                self.dqq, self.dpq, self.dpq, self.dpp
            );
            if !self.allow_indefinite_diffusion {
                return config_err(msg);
            }
            log::warn!("{msg}; continuing because the override is set, some modes will grow");
        }
        self.potential.validate()
    }
}

/// Substep generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    /// `-ξ ∂x`
    Convection,
    /// `-Θ[V]`
    Nonlocal,
    /// `Dqq ∂xx + 2 Dpq ∂xξ + Dpp ∂ξξ`
    Diffusion,
    /// `2γ ∂ξ(ξ ·)`
    Friction,
}

/// Ordered `(operator, fraction of Δt)` stages.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSchedule {
    stages: Vec<(Operator, f64)>,
}

impl SplitSchedule {
    /// `L1/2 L2/2 L3/2 L4 L3/2 L2/2 L1/2`.
    pub fn strang() -> Self {
        use Operator::*;
        Self {
            stages: vec![
                (Convection, 0.5),
                (Nonlocal, 0.5),
                (Diffusion, 0.5),
                (Friction, 1.0),
                (Diffusion, 0.5),
                (Nonlocal, 0.5),
                (Convection, 0.5),
            ],
        }
    }

    /// Custom schedule; must be palindromic with unit total fraction per operator.
    pub fn new(stages: Vec<(Operator, f64)>) -> Result<Self> {
        let n = stages.len();
        for i in 0..n / 2 {
            if stages[i] != stages[n - 1 - i] {
                return config_err(format!("schedule is not palindromic at stage {i}"));
            }
        }
        let mut sums: HashMap<Operator, f64> = HashMap::new();
        for &(op, f) in &stages {
            *sums.entry(op).or_default() += f;
        }
        for (op, s) in sums {
            if (s - 1.0).abs() > 1e-14 {
                return config_err(format!("fractions of {op:?} sum to {s}, expected 1"));
            }
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[(Operator, f64)] {
        &self.stages
    }
}

/// Friction discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrictionScheme {
    #[default]
    Collocation,
    Galerkin,
}

#[derive(Debug, Clone)]
enum FrictionKernel {
    Collocation(Arc<FrictionPropagator>),
    Galerkin(Arc<GalerkinPropagator>),
}

/// Everything a run needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: Arc<GridSpec>,
    pub params: PhysicalParams,
    pub ic: GaussianIC,
    pub dt: f64,
    pub t_final: f64,
    /// Record observables every this many steps (the final step is always recorded).
    pub record_every: usize,
    /// Emit snapshots every this many steps, if set.
    pub snapshot_every: Option<usize>,
    pub friction: FrictionScheme,
    /// Scale the initial field to unit discrete mass.
    pub renormalize: bool,
    /// Store `ρ`, `j`, `e` alongside each record.
    pub record_local: bool,
}

impl RunConfig {
    pub fn new(grid: Arc<GridSpec>, params: PhysicalParams, ic: GaussianIC, dt: f64, t_final: f64) -> Self {
        Self {
            grid,
            params,
            ic,
            dt,
            t_final,
            record_every: 1,
            snapshot_every: None,
            friction: FrictionScheme::Collocation,
            renormalize: false,
            record_local: false,
        }
    }

    /// Validates and returns the step count.
    pub fn validate(&self) -> Result<usize> {
        self.params.validate()?;
        self.ic.normalized()?;
        if self.record_every == 0 || self.snapshot_every == Some(0) {
            return config_err("output cadences must be positive");
        }
        step_count(self.t_final, self.dt)
    }

    pub fn initial_field(&self) -> Result<WignerField> {
        let mut w = gaussian_wavepacket(&self.ic, self.params.epsilon, &self.grid)?;
        if self.renormalize {
            let m = total_mass(&w);
            if m.is_nan() || m <= 0.0 {
                return Err(WpfpError::Numeric(format!("cannot renormalize a field of mass {m}")));
            }
            w.values /= m;
        }
        Ok(w)
    }
}

/// `P = round(T/dt)`, rejected unless `|P dt - T| ≤ 1e-9 T`.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return config_err(format!("dt = {dt} must be positive"));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return config_err(format!("T = {t_final} must be non-negative"));
    }
    let p = (t_final / dt).round();
    if (p * dt - t_final).abs() > 1e-9 * t_final {
        return config_err(format!("T = {t_final} is not an integer multiple of dt = {dt}"));
    }
    Ok(p as usize)
}

/// Potential samples `V(x_m)` used in the energy density at the field's time.
pub fn potential_samples(w: &WignerField, potential: &PotentialSpec) -> Vec<f64> {
    match potential {
        PotentialSpec::External(v) => w.grid.x.iter().map(|&x| v.value(x, w.time)).collect(),
        PotentialSpec::SelfConsistent { alpha } => solve_poisson(&density(w), *alpha, &w.grid).samples(),
    }
}

/// Global (and optionally local) observables of `w`.
pub fn observe(
    w: &WignerField,
    params: &PhysicalParams,
    residual: Option<f64>,
    with_local: bool,
) -> Result<ObservableRecord> {
    let v = potential_samples(w, &params.potential);
    let weight = params.potential.energy_weight();
    let local = if with_local { Some(local_moments(w, &v, weight)?) } else { None };
    Ok(ObservableRecord { t: w.time, moments: global_moments(w, &v, weight)?, residual, local })
}

/// Stage runner with cached friction propagators and external δV.
#[derive(Debug)]
pub struct Stepper {
    grid: Arc<GridSpec>,
    params: PhysicalParams,
    schedule: SplitSchedule,
    dt: f64,
    friction: HashMap<u64, FrictionKernel>,
    external_dv: Option<DeltaVTable>,
}

impl Stepper {
    pub fn new(grid: Arc<GridSpec>, params: PhysicalParams, dt: f64, scheme: FrictionScheme) -> Result<Self> {
        Self::with_schedule(grid, params, dt, scheme, SplitSchedule::strang())
    }

    pub fn with_schedule(
        grid: Arc<GridSpec>,
        params: PhysicalParams,
        dt: f64,
        scheme: FrictionScheme,
        schedule: SplitSchedule,
    ) -> Result<Self> {
        params.validate()?;
        if !dt.is_finite() || dt == 0.0 {
            return config_err(format!("dt = {dt} must be finite and non-zero"));
        }
        let external_dv = match &params.potential {
            PotentialSpec::External(_) => Some(build_delta_v_external(&params.potential, &grid, params.epsilon, 0.0)?),
            PotentialSpec::SelfConsistent { .. } => None,
        };
        let mut friction = HashMap::new();
        let mut cache = PropagatorCache::default();
        let galerkin = (scheme == FrictionScheme::Galerkin).then(|| build_galerkin_matrices(&grid));
        for &(op, frac) in schedule.stages() {
            if op != Operator::Friction || friction.contains_key(&frac.to_bits()) {
                continue;
            }
            let tau = frac * dt;
            let kernel = match &galerkin {
                None => FrictionKernel::Collocation(cache.get(&grid, params.gamma, tau)?),
                Some(m) => FrictionKernel::Galerkin(Arc::new(GalerkinPropagator::new(m, params.gamma, tau)?)),
            };
            friction.insert(frac.to_bits(), kernel);
        }
        Ok(Self { grid, params, schedule, dt, friction, external_dv })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Applies `exp(frac·dt·L_op)`; the WPFP δV is rebuilt from the stage input.
    pub fn apply_stage(&self, w: &WignerField, op: Operator, frac: f64) -> Result<WignerField> {
        let tau = frac * self.dt;
        let p = &self.params;
        match op {
            Operator::Convection => Ok(step_convection(w, tau)),
            Operator::Diffusion => Ok(step_diffusion(w, tau, p.dqq, p.dpq, p.dpp)),
            Operator::Nonlocal => match (&self.external_dv, &p.potential) {
                (Some(dv), _) => step_nonlocal(w, tau, dv),
                (None, PotentialSpec::SelfConsistent { alpha }) => {
                    step_nonlocal(w, tau, &self_consistent_delta_v(w, *alpha, p.epsilon))
                }
                (None, PotentialSpec::External(_)) => {
                    unreachable!("external δV is built at construction")
                }
            },
            Operator::Friction => match self.friction.get(&frac.to_bits()) {
                Some(FrictionKernel::Collocation(prop)) => step_friction_collocation(w, prop),
                Some(FrictionKernel::Galerkin(prop)) => prop.apply(w),
                None => config_err(format!("no friction propagator cached for fraction {frac}")),
            },
        }
    }

    /// One full step; the field time advances by `dt`.
    pub fn step(&self, w: &WignerField) -> Result<WignerField> {
        self.grid.ensure_same(&w.grid)?;
        let mut cur = w.clone();
        for &(op, frac) in self.schedule.stages() {
            cur = self.apply_stage(&cur, op, frac)?;
        }
        cur.time = w.time + self.dt;
        Ok(cur)
    }
}

/// Single Strang step through a prepared [`Stepper`].
pub fn strang_step(w: &WignerField, stepper: &Stepper) -> Result<WignerField> {
    stepper.step(w)
}

/// Receives progress from [`run_simulation`]. All hooks default to no-ops.
pub trait SimulationSink {
    fn on_step(&mut self, _step: usize, _w: &WignerField) -> Result<()> {
        Ok(())
    }
    fn on_snapshot(&mut self, _step: usize, _w: &WignerField) -> Result<()> {
        Ok(())
    }
    fn on_record(&mut self, _rec: &ObservableRecord) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl SimulationSink for NullSink {}

/// Final field plus the recorded observables.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub field: WignerField,
    pub series: ObservableSeries,
    pub steps: usize,
}

impl RunOutput {
    /// `(t, residual)` for every record that carries one.
    pub fn residual_history(&self) -> Vec<(f64, f64)> {
        self.series.records().iter().filter_map(|r| r.residual.map(|res| (r.t, res))).collect()
    }
}

/// Relative mass drift at which [`run_from`] logs a one-time warning.
pub const MASS_DRIFT_WARNING: f64 = 1e-3;

/// Runs the configured simulation from its Gaussian initial condition.
pub fn run_simulation(config: &RunConfig, sink: &mut dyn SimulationSink) -> Result<RunOutput> {
    config.validate()?;
    run_from(config, config.initial_field()?, sink)
}

/// Runs from an explicit initial field.
pub fn run_from(config: &RunConfig, initial: WignerField, sink: &mut dyn SimulationSink) -> Result<RunOutput> {
    let steps = config.validate()?;
    config.grid.ensure_same(&initial.grid)?;
    let stepper = Stepper::new(Arc::clone(&config.grid), config.params.clone(), config.dt, config.friction)?;
    let mut series = ObservableSeries::new(config.params.potential.energy_weight());
    let t0 = initial.time;
    let mut w = initial;
    let rec = observe(&w, &config.params, None, config.record_local)?;
    let n0 = rec.moments.n;
    let mut drift_warned = false;
    sink.on_record(&rec)?;
    series.push(rec)?;
    if config.snapshot_every.is_some() {
        sink.on_snapshot(0, &w)?;
    }
    for n in 1..=steps {
        let mut next = stepper.step(&w)?;
        next.time = t0 + n as f64 * config.dt;
        if !next.is_finite() {
            let bad = next.values.iter().filter(|v| !v.is_finite()).count();
            return Err(WpfpError::NonFinite {
                step: n,
                time: next.time,
                detail: format!("{bad} non-finite entries; last finite max |W| = {:.3e}", w.max_abs()),
            });
        }
        sink.on_step(n, &next)?;
        if n % config.record_every == 0 || n == steps {
            let residual = steady_state_residual(&w, &next, config.dt).ok();
            let rec = observe(&next, &config.params, residual, config.record_local)?;
            let drift = ((rec.moments.n - n0) / n0).abs();
            if !drift_warned && drift > MASS_DRIFT_WARNING {
                log::warn!(
                    "relative mass drift {drift:.2e} at t = {:.4}; the field likely reaches the ξ boundary, \
                     widen [c, d] or refine N",
                    rec.t
                );
                drift_warned = true;
            }
            sink.on_record(&rec)?;
            series.push(rec)?;
        }
        if let Some(k) = config.snapshot_every {
            if n % k == 0 || n == steps {
                sink.on_snapshot(n, &next)?;
            }
        }
        w = next;
    }
    Ok(RunOutput { field: w, series, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, error_norms};
    use crate::potential::ExternalPotential;

    fn ex1_params() -> PhysicalParams {
        PhysicalParams {
            epsilon: 0.1,
            dpp: 0.2,
            dqq: 0.2,
            dpq: 0.05,
            gamma: 1.0,
            potential: PotentialSpec::External(ExternalPotential::Harmonic { c2: 1.0, c1: 1.0 }),
            allow_indefinite_diffusion: false,
        }
    }

    fn free_params() -> PhysicalParams {
        PhysicalParams {
            epsilon: 0.1,
            dpp: 0.0,
            dqq: 0.0,
            dpq: 0.0,
            gamma: 0.0,
            potential: PotentialSpec::External(ExternalPotential::zero()),
            allow_indefinite_diffusion: false,
        }
    }

    #[test]
    fn strang_schedule_is_palindromic() {
        let s = SplitSchedule::strang();
        assert_eq!(s.stages().len(), 7);
        assert_eq!(SplitSchedule::new(s.stages().to_vec()).unwrap(), s);
        let mut bad = s.stages().to_vec();
        bad.swap(0, 1);
        assert!(SplitSchedule::new(bad).is_err());
        assert!(SplitSchedule::new(vec![(Operator::Friction, 0.5)]).is_err());
    }

    #[test]
    fn step_count_rules() {
        assert_eq!(step_count(0.5, 1.0 / 256.0).unwrap(), 128);
        assert_eq!(step_count(0.0, 0.1).unwrap(), 0);
        assert_eq!(step_count(0.3, 0.1).unwrap(), 3);
        assert!(step_count(0.35, 0.1).is_err());
        assert!(step_count(1.0, 0.0).is_err());
    }

    #[test]
    fn params_validation() {
        let mut p = ex1_params();
        p.validate().unwrap();
        p.dpq = 0.5;
        assert!(p.validate().is_err());
        p.allow_indefinite_diffusion = true;
        p.validate().unwrap();
        p.epsilon = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn x_independent_free_field_is_fixed() {
        let g = build_grid(-2.0, 2.0, -2.0, 2.0, 16, 16).unwrap();
        let w = WignerField::from_fn(g.clone(), |_, xi| (-(xi * xi)).exp());
        let s = Stepper::new(g, free_params(), 0.1, FrictionScheme::Collocation).unwrap();
        let out = strang_step(&w, &s).unwrap();
        let (_, linf) = error_norms(&out, &w).unwrap();
        assert!(linf < 1e-12);
        assert!((out.time - 0.1).abs() < 1e-15);
    }

    #[test]
    fn reversible_without_dissipation() {
        // resolved setup: the cosine Nyquist multipliers are only invertible when
        // the field carries no Nyquist content
        let g = build_grid(-4.0, 4.0, -4.0, 4.0, 128, 128).unwrap();
        let mut p = free_params();
        p.potential = PotentialSpec::External(ExternalPotential::HarmonicPlusSine { amplitude: 0.1 });
        let ic = GaussianIC { a11: 1.0, a22: 1.0, a12: 0.0, x0: 0.3, xi0: -0.2 };
        let w = gaussian_wavepacket(&ic, 0.1, &g).unwrap();
        let fwd = Stepper::new(g.clone(), p.clone(), 0.05, FrictionScheme::Collocation).unwrap();
        let back = Stepper::new(g, p, -0.05, FrictionScheme::Collocation).unwrap();
        let mut cur = w.clone();
        for _ in 0..5 {
            cur = fwd.step(&cur).unwrap();
        }
        for _ in 0..5 {
            cur = back.step(&cur).unwrap();
        }
        let (_, linf) = error_norms(&cur, &w).unwrap();
        assert!(linf < 1e-10 * w.max_abs(), "{linf:e}");
    }

    #[test]
    fn zero_time_run() {
        let g = build_grid(-2.0, 2.0, -2.0, 2.0, 16, 16).unwrap();
        let ic = GaussianIC { a11: 1.0, a22: 1.0, a12: 0.0, x0: 0.1, xi0: -0.2 };
        let cfg = RunConfig::new(g, ex1_params(), ic, 0.01, 0.0);
        let out = run_simulation(&cfg, &mut NullSink).unwrap();
        assert_eq!(out.series.len(), 1);
        assert_eq!(out.field.values, cfg.initial_field().unwrap().values);
    }

    #[test]
    fn galerkin_schedule_matches_collocation() {
        let g = build_grid(-2.0, 2.0, -2.0, 2.0, 64, 64).unwrap();
        let ic = GaussianIC { a11: 1.0, a22: 1.0, a12: 0.0, x0: 0.1, xi0: -0.2 };
        let w = gaussian_wavepacket(&ic, 0.1, &g).unwrap();
        let col = Stepper::new(g.clone(), ex1_params(), 1.0 / 64.0, FrictionScheme::Collocation).unwrap();
        let gal = Stepper::new(g, ex1_params(), 1.0 / 64.0, FrictionScheme::Galerkin).unwrap();
        let (_, linf) = error_norms(&col.step(&w).unwrap(), &gal.step(&w).unwrap()).unwrap();
        assert!(linf < 1e-8, "{linf:e}");
    }

    #[derive(Default)]
    struct Counter {
        steps: usize,
        snaps: Vec<usize>,
        records: usize,
    }

    impl SimulationSink for Counter {
        fn on_step(&mut self, _: usize, _: &WignerField) -> Result<()> {
            self.steps += 1;
            Ok(())
        }
        fn on_snapshot(&mut self, step: usize, _: &WignerField) -> Result<()> {
            self.snaps.push(step);
            Ok(())
        }
        fn on_record(&mut self, _: &ObservableRecord) -> Result<()> {
            self.records += 1;
            Ok(())
        }
    }

    #[test]
    fn cadence_and_sinks() {
        let g = build_grid(-2.0, 2.0, -2.0, 2.0, 16, 16).unwrap();
        let ic = GaussianIC { a11: 1.0, a22: 1.0, a12: 0.0, x0: 0.1, xi0: -0.2 };
        let mut cfg = RunConfig::new(g, ex1_params(), ic, 0.01, 0.1);
        cfg.record_every = 3;
        cfg.snapshot_every = Some(4);
        let mut sink = Counter::default();
        let out = run_simulation(&cfg, &mut sink).unwrap();
        assert_eq!(out.steps, 10);
        assert_eq!(sink.steps, 10);
        assert_eq!(sink.snaps, vec![0, 4, 8, 10]);
        // t = 0, 3, 6, 9, 10
        assert_eq!(sink.records, 5);
        assert!((out.field.time - 0.1).abs() < 1e-15);
        assert_eq!(out.residual_history().len(), 4);
    }

    #[test]
    fn renormalize_flag() {
        let g = build_grid(-1.0, 1.0, -1.0, 1.0, 16, 16).unwrap();
        let ic = GaussianIC { a11: 1.0, a22: 1.0, a12: 0.0, x0: 0.0, xi0: 0.0 };
        let mut p = ex1_params();
        p.epsilon = 1.0;
        let mut cfg = RunConfig::new(g, p, ic, 0.1, 0.1);
        assert!((total_mass(&cfg.initial_field().unwrap()) - 1.0).abs() > 1e-3);
        cfg.renormalize = true;
        assert!((total_mass(&cfg.initial_field().unwrap()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn divergence_is_reported() {
        let g = build_grid(-2.0, 2.0, -2.0, 2.0, 16, 16).unwrap();
        let ic = GaussianIC { a11: 1.0, a22: 1.0, a12: 0.0, x0: 0.1, xi0: -0.2 };
        let mut p = free_params();
        p.dqq = -1e4;
        p.allow_indefinite_diffusion = true;
        let cfg = RunConfig::new(g, p, ic, 1.0, 200.0);
        match run_simulation(&cfg, &mut NullSink) {
            Err(WpfpError::NonFinite { step, .. }) => assert!(step > 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
