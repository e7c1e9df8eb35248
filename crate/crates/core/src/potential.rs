//! Potential specifications: closed-form external fields or a self-consistent Poisson potential.

use std::f64::consts::FRAC_PI_2;

use crate::error::{config_err, Result};

/// Whitelisted closed-form external potentials.
#[derive(Debug, Clone, PartialEq)]
pub enum ExternalPotential {
    /// `Σ_i coeffs[i] · x^i`
    Polynomial(Vec<f64>),
    /// `½ c2 x² + c1 x`
    Harmonic { c2: f64, c1: f64 },
    /// `(x² - 1)²`
    DoubleWell,
    /// `½ x² + x + amplitude · sin x`
    HarmonicPlusSine { amplitude: f64 },
    /// `arctan(steepness · x) + π/2`
    ArctanStep { steepness: f64 },
}

impl ExternalPotential {
    pub fn zero() -> Self {
        ExternalPotential::Polynomial(Vec::new())
    }

    /// Static potentials ignore `t`; it is threaded through for time-dependent extensions.
    pub fn value(&self, x: f64, _t: f64) -> f64 {
        match self {
            ExternalPotential::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci),
            ExternalPotential::Harmonic { c2, c1 } => 0.5 * c2 * x * x + c1 * x,
            ExternalPotential::DoubleWell => {
                let s = x * x - 1.0;
                s * s
            }
            ExternalPotential::HarmonicPlusSine { amplitude } => 0.5 * x * x + x + amplitude * x.sin(),
            ExternalPotential::ArctanStep { steepness } => (steepness * x).atan() + FRAC_PI_2,
        }
    }

    /// `(c2, c1)` when the potential is `½ c2 x² + c1 x + const`.
    pub fn quadratic_coefficients(&self) -> Option<(f64, f64)> {
        match self {
            ExternalPotential::Harmonic { c2, c1 } => Some((*c2, *c1)),
            ExternalPotential::Polynomial(c) => {
                if c.iter().skip(3).any(|&v| v != 0.0) {
                    None
                } else {
                    let get = |i: usize| c.get(i).copied().unwrap_or(0.0);
                    Some((2.0 * get(2), get(1)))
                }
            }
            ExternalPotential::HarmonicPlusSine { amplitude } if *amplitude == 0.0 => Some((1.0, 1.0)),
            _ => None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = match self {
            ExternalPotential::Polynomial(c) => c.iter().all(|v| v.is_finite()),
            ExternalPotential::Harmonic { c2, c1 } => c2.is_finite() && c1.is_finite(),
            ExternalPotential::DoubleWell => true,
            ExternalPotential::HarmonicPlusSine { amplitude } => amplitude.is_finite(),
            ExternalPotential::ArctanStep { steepness } => steepness.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            config_err(format!("non-finite potential coefficients in {self:?}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    External(ExternalPotential),
    /// `∂xx V = α ρ` with `α = +1` (attractive) or `α = -1` (repulsive).
    SelfConsistent {
        alpha: f64,
    },
}

impl PotentialSpec {
    pub fn self_consistent(alpha: f64) -> Result<Self> {
        if alpha == 1.0 || alpha == -1.0 {
            Ok(PotentialSpec::SelfConsistent { alpha })
        } else {
            config_err(format!("self-consistent alpha must be +1 or -1, got {alpha}"))
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::External(p) => p.validate(),
            PotentialSpec::SelfConsistent { alpha } => Self::self_consistent(*alpha).map(|_| ()),
        }
    }

    pub fn is_self_consistent(&self) -> bool {
        matches!(self, PotentialSpec::SelfConsistent { .. })
    }

    /// Energy-density weight: 1 for external fields, ½ for self-consistent ones.
    pub fn energy_weight(&self) -> f64 {
        if self.is_self_consistent() {
            0.5
        } else {
            1.0
        }
    }
}
