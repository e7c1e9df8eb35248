//! Built-in experiment configurations.
//!
//! Every preset uses the reference example parameters verbatim, including the
//! Gaussian coefficients `a11 = a22 = -1` (mapped to a positive-definite form by
//! [`GaussianIC::normalized`]).

use std::fmt;
use std::str::FromStr;

use crate::error::{config_err, Result, WpfpError};
use crate::grid::{build_grid, GaussianIC};
use crate::potential::{ExternalPotential, PotentialSpec};
use crate::splitting::{PhysicalParams, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetId {
    Ex1,
    Ex2,
    Ex3,
    Ex4a,
    Ex4b,
    Ex5,
}

impl PresetId {
    pub const ALL: [PresetId; 6] =
        [PresetId::Ex1, PresetId::Ex2, PresetId::Ex3, PresetId::Ex4a, PresetId::Ex4b, PresetId::Ex5];

    pub fn name(self) -> &'static str {
        match self {
            PresetId::Ex1 => "ex1",
            PresetId::Ex2 => "ex2",
            PresetId::Ex3 => "ex3",
            PresetId::Ex4a => "ex4a",
            PresetId::Ex4b => "ex4b",
            PresetId::Ex5 => "ex5",
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetId {
    type Err = WpfpError;

    fn from_str(s: &str) -> Result<Self> {
        PresetId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| WpfpError::Config(format!("unknown preset '{s}'")))
    }
}

/// How errors are measured in a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceStrategy {
    /// Exact Gaussian moment dynamics (quadratic potentials only).
    AnalyticOracle,
    /// Same solver on a strictly finer discretization of the same domain.
    FineGrid { nx: usize, nxi: usize, dt: f64 },
}

/// Steady-state expectations for the long-time presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyTarget {
    pub t_max: f64,
    /// Interval by which the steady verdict is expected.
    pub window: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub id: PresetId,
    pub config: RunConfig,
    pub reference: ReferenceStrategy,
    /// Accepted range for the fitted temporal order.
    pub expected_order: (f64, f64),
    pub steady: Option<SteadyTarget>,
}

const ORDER_RANGE: (f64, f64) = (1.8, 2.2);

fn wavepacket(x0: f64, xi0: f64) -> GaussianIC {
    GaussianIC { a11: -1.0, a22: -1.0, a12: 0.0, x0, xi0 }
}

fn params(epsilon: f64, dpp: f64, dqq: f64, dpq: f64, gamma: f64, potential: PotentialSpec) -> PhysicalParams {
    PhysicalParams { epsilon, dpp, dqq, dpq, gamma, potential, allow_indefinite_diffusion: false }
}

fn square(half: f64, n: usize, p: PhysicalParams, ic: GaussianIC, dt: f64, t: f64) -> Result<RunConfig> {
    Ok(RunConfig::new(build_grid(-half, half, -half, half, n, n)?, p, ic, dt, t))
}

/// Self-consistent coupling used for the WPFP steady-state preset. The reference
/// example does not state α; the attractive sign confines the density.
pub const EX5_ALPHA: f64 = 1.0;

pub fn preset(id: PresetId) -> Result<ExperimentPreset> {
    let ex1_params = |v: PotentialSpec| params(0.1, 0.2, 0.2, 0.05, 1.0, v);
    let dt8 = 2f64.powi(-8);
    let fine = ReferenceStrategy::FineGrid { nx: 256, nxi: 256, dt: 2f64.powi(-10) };
    let steady_params = |v: ExternalPotential| params(0.1, 0.1, 0.1, 0.0, 1.0, PotentialSpec::External(v));
    let out = match id {
        PresetId::Ex1 => ExperimentPreset {
            id,
            config: square(
                2.0,
                128,
                ex1_params(PotentialSpec::External(ExternalPotential::Harmonic { c2: 1.0, c1: 1.0 })),
                wavepacket(0.1, -0.2),
                dt8,
                0.5,
            )?,
            reference: ReferenceStrategy::AnalyticOracle,
            expected_order: ORDER_RANGE,
            steady: None,
        },
        PresetId::Ex2 => ExperimentPreset {
            id,
            config: square(
                2.0,
                128,
                ex1_params(PotentialSpec::External(ExternalPotential::DoubleWell)),
                wavepacket(0.1, -0.2),
                dt8,
                0.5,
            )?,
            reference: fine,
            expected_order: ORDER_RANGE,
            steady: None,
        },
        PresetId::Ex3 => ExperimentPreset {
            id,
            config: square(
                4.0,
                128,
                ex1_params(PotentialSpec::self_consistent(-1.0)?),
                wavepacket(0.1, -0.2),
                dt8,
                0.25,
            )?,
            reference: fine,
            expected_order: ORDER_RANGE,
            steady: None,
        },
        PresetId::Ex4a => ExperimentPreset {
            id,
            config: square(
                4.0,
                128,
                steady_params(ExternalPotential::HarmonicPlusSine { amplitude: 0.1 }),
                wavepacket(0.1, -0.2),
                dt8,
                10.0,
            )?,
            reference: fine,
            expected_order: ORDER_RANGE,
            steady: Some(SteadyTarget { t_max: 10.0, window: (6.0, 10.0) }),
        },
        PresetId::Ex4b => ExperimentPreset {
            id,
            config: square(
                4.0,
                128,
                steady_params(ExternalPotential::ArctanStep { steepness: 10.0 }),
                wavepacket(0.1, -0.2),
                dt8,
                6.0,
            )?,
            reference: fine,
            expected_order: ORDER_RANGE,
            steady: Some(SteadyTarget { t_max: 6.0, window: (3.0, 6.0) }),
        },
        PresetId::Ex5 => ExperimentPreset {
            id,
            config: square(
                20.0,
                128,
                params(1.0, 0.3, 0.3, 0.0, 1.0, PotentialSpec::self_consistent(EX5_ALPHA)?),
                wavepacket(0.1, 0.1),
                dt8,
                6.0,
            )?,
            reference: fine,
            expected_order: ORDER_RANGE,
            steady: Some(SteadyTarget { t_max: 6.0, window: (3.0, 6.0) }),
        },
    };
    Ok(out)
}

/// Looks up a preset by name.
pub fn preset_by_name(name: &str) -> Result<ExperimentPreset> {
    preset(name.parse()?)
}

/// Steady-state presets only.
pub fn steady_preset(id: PresetId) -> Result<ExperimentPreset> {
    let p = preset(id)?;
    if p.steady.is_none() {
        return config_err(format!("{id} is not a steady-state preset"));
    }
    Ok(p)
}
