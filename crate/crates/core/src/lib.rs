//! Time-splitting Fourier pseudospectral (TSSP) solver for the one-dimensional
//! Wigner-Fokker-Planck and Wigner-Poisson-Fokker-Planck equations
//!
//! ```text
//! ∂t W = -ξ ∂x W - Θ[V] W + Dqq ∂xx W + 2 Dpq ∂xξ W + Dpp ∂ξξ W + 2γ ∂ξ(ξ W)
//! ```
//!
//! on a truncated periodic phase-space box. Each time step is a palindromic
//! seven-stage Strang composition of four exactly solvable subproblems:
//! convection, the nonlocal potential operator, phase-space diffusion and
//! friction. The first three are diagonal in Fourier space; friction is a
//! dense matrix exponential on the momentum nodes.
//!
//! Module map:
//!
//! * [`grid`]: phase-space grid, Wigner field container, Gaussian initial data
//! * [`transport`]: convection, nonlocal and diffusion substeps
//! * [`poisson`]: periodic Poisson solve and the self-consistent δV table
//! * [`friction`]: collocation and Galerkin friction substeps
//! * [`linalg`]: dense matrix exponential
//! * [`splitting`]: Strang step and the time loop
//! * [`observables`]: moments, global quantities, steady-state residual
//! * [`oracle`]: exact Gaussian moment dynamics for quadratic potentials
//! * [`presets`], [`config`], [`io`], [`experiments`]: batch harness

pub mod config;
pub mod error;
pub mod experiments;
pub mod friction;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod poisson;
pub mod potential;
pub mod presets;
pub mod spectral;
pub mod splitting;
pub mod transport;

pub use error::{Result, WpfpError};
pub use friction::{FrictionDiffMatrix, FrictionPropagator, GalerkinFrictionMatrices};
pub use grid::{GaussianIC, GridSpec, WignerField};
pub use observables::{GlobalMoments, LocalMoments, ObservableSeries};
pub use oracle::MomentState;
pub use poisson::PotentialField;
pub use potential::{ExternalPotential, PotentialSpec};
pub use splitting::{FrictionScheme, PhysicalParams, RunConfig, SplitSchedule, Stepper};
pub use transport::DeltaVTable;
