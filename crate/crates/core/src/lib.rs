//! Simulation toolkit for periodic optomechanical arrays.
//!
//! All quantities are expressed in units of the mechanical frequency, which is
//! fixed to one. The crate is organised bottom-up:
//!
//! - [`modes`]: coupling vectors of the transmissive optical modes, coupling
//!   matrices, the completed orthonormal basis and the good-cavity `Λ` matrix.
//! - [`interferometer`]: bad-cavity effective phonon dynamics, triangular mesh
//!   decomposition of unitaries and seeded randomized phonon walks.
//! - [`gaussian`]: exact first and second moment dynamics of the full
//!   linearized open system, steady states and heat-diffusion experiments.
//! - [`single_excitation`]: good-cavity single-excitation propagator,
//!   switching schedules and the shuttling protocols.

// `!(x < y)` is used on purpose so that NaN fails range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod interferometer;
pub mod linalg;
pub mod modes;
pub mod ode;
pub mod params;
pub mod rng;
pub mod single_excitation;

pub use error::{Error, Result};
pub use gaussian::{
    adiabatic_rates, build_drift_diffusion, elimination_crosscheck, evolve_covariance, heat_experiment,
    heat_experiment_with_basis, occupations, steady_state, AdiabaticRates, CouplingModel, CovarianceState,
    CrosscheckReport, DriftDiffusion, HeatConfig, HeatSeries, QuadratureLayout,
};
pub use interferometer::{
    beta_coefficient, effective_hamiltonian, propagator, reck_compose, reck_decompose, run_classical_walk, run_walk,
    BetaSpectrum, MeshElement, MeshNetwork, Randomization, WalkConfig, WalkResult,
};
pub use modes::{build_basis, coupling_matrix, coupling_vector, lambda_matrix, CouplingBasis, LambdaMatrix};
pub use params::SystemParams;
pub use single_excitation::{
    dissipative_check, evolution_matrix, generator_oracle, kappa_switch_amplitude, run_schedule, AmplitudeState,
    DissipativeParams, DissipativeReport, Schedule, Segment, Trajectory,
};

pub use num_complex::Complex64;
