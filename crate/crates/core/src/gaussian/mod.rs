//! First and second moment dynamics of the linearized array.
//!
//! Quadratures are `x = (b + b†)/√2` and `p = (b − b†)/(i√2)`, so the vacuum
//! variance is 1/2 and a thermal mode with occupation `n` has variance
//! `n + 1/2`. The phase-space vector lists the `N` mechanical modes first and
//! then the optical modes, each as an `(x, p)` pair. The covariance matrix
//! `V = ⟨{Δr, Δrᵀ}⟩/2` evolves as `dV/dt = A V + V Aᵀ + D`.
//!
//! Optical mode `l` contributes `−Δ_l a†a` to the Hamiltonian, so the red
//! sideband sits at `Δ_l = −ω`.

mod adiabatic;
mod evolve;
mod heat;
mod lyapunov;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::modes::CouplingBasis;
use crate::params::SystemParams;

pub use adiabatic::{adiabatic_rates, elimination_crosscheck, AdiabaticRates, CrosscheckReport};
pub use evolve::{evolve_covariance, evolve_covariance_with, EvolutionMethod, MomentPropagator};
pub use heat::{
    heat_experiment, heat_experiment_with_basis, log_grid, HeatConfig, HeatSeries, RiseTimeAnalysis, T_MAX_CAP,
};
pub use lyapunov::{lyapunov_residual, solve_continuous_lyapunov};

/// Most negative eigenvalue of `V + (i/2)Σ` accepted for a physical state.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Maximum relative Lyapunov residual accepted for a steady state.
pub const STEADY_STATE_RESIDUAL_TOL: f64 = 1e-9;

/// Real-part threshold below which every eigenvalue must lie for `A` to count as Hurwitz.
pub const HURWITZ_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureLayout {
    pub n_mech: usize,
    pub n_opt: usize,
}

impl QuadratureLayout {
    pub fn full(n: usize) -> Self {
        QuadratureLayout { n_mech: n, n_opt: n - 1 }
    }

    pub fn mechanical_only(n: usize) -> Self {
        QuadratureLayout { n_mech: n, n_opt: 0 }
    }

    pub fn modes(&self) -> usize {
        self.n_mech + self.n_opt
    }

    pub fn dim(&self) -> usize {
        2 * self.modes()
    }

    /// Index of `x` for mechanical element `j` (0-based).
    pub fn mech_x(&self, j: usize) -> usize {
        2 * j
    }

    pub fn mech_p(&self, j: usize) -> usize {
        2 * j + 1
    }

    /// Index of `x` for optical mode `l` (0-based).
    pub fn opt_x(&self, l: usize) -> usize {
        2 * (self.n_mech + l)
    }

    pub fn opt_p(&self, l: usize) -> usize {
        2 * (self.n_mech + l) + 1
    }

    /// Symplectic form, `[[0, 1], [−1, 0]]` per mode.
    pub fn symplectic_form(&self) -> RMatrix {
        let mut s = DMatrix::zeros(self.dim(), self.dim());
        for m in 0..self.modes() {
            s[(2 * m, 2 * m + 1)] = 1.0;
            s[(2 * m + 1, 2 * m)] = -1.0;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingModel {
    /// The full optomechanical Hamiltonian with all optical modes.
    Optical,
    /// Optical modes dropped; adjacent elements coupled by `strength · x_j x_{j+1}`.
    NearestNeighbor { strength: f64 },
}

impl CouplingModel {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingModel::Optical => "optical",
            CouplingModel::NearestNeighbor { .. } => "nearest_neighbor",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusion {
    pub layout: QuadratureLayout,
    pub a: RMatrix,
    pub d: RMatrix,
}

impl DriftDiffusion {
    /// Eigenvalues of the drift matrix.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }

    /// Largest real part among the drift eigenvalues.
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Slowest relaxation rate, `min |Re λ|`.
    pub fn slowest_rate(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Builds the drift and diffusion matrices of the linearized array.
///
/// Mechanical element `j` is damped at rate `γ` into a bath with occupation
/// `n̄_j`; optical modes are damped at rate `κ` into vacuum.
pub fn build_drift_diffusion(
    params: &SystemParams,
    basis: &CouplingBasis,
    model: CouplingModel,
) -> Result<DriftDiffusion> {
    params.validate()?;
    if params.n != basis.n() {
        return Err(Error::param(format!("parameter size {} does not match basis size {}", params.n, basis.n())));
    }
    let n = params.n;
    let layout = match model {
        CouplingModel::Optical => QuadratureLayout::full(n),
        CouplingModel::NearestNeighbor { strength } => {
            if !strength.is_finite() {
                return Err(Error::param("nearest-neighbour strength must be finite"));
            }
            QuadratureLayout::mechanical_only(n)
        }
    };
    let dim = layout.dim();
    let mut a = DMatrix::zeros(dim, dim);
    let mut d = DMatrix::zeros(dim, dim);
    let omega = params.omega;

    for j in 0..n {
        let (x, p) = (layout.mech_x(j), layout.mech_p(j));
        a[(x, p)] = omega;
        a[(p, x)] = -omega;
        a[(x, x)] = -params.gamma;
        a[(p, p)] = -params.gamma;
        let diff = params.gamma * (2.0 * params.nbar[j] + 1.0);
        d[(x, x)] = diff;
        d[(p, p)] = diff;
    }

    match model {
        CouplingModel::Optical => {
            let eps = basis.epsilon();
            for l in 0..n - 1 {
                let (xa, pa) = (layout.opt_x(l), layout.opt_p(l));
                let delta = params.delta[l];
                a[(xa, pa)] = -delta;
                a[(pa, xa)] = delta;
                a[(xa, xa)] = -params.kappa;
                a[(pa, pa)] = -params.kappa;
                d[(xa, xa)] = params.kappa;
                d[(pa, pa)] = params.kappa;
                let g = params.g[l];
                // H_int = 2 ε_{l,j} x_j (Re g · x_a + Im g · p_a)
                for j in 0..n {
                    let c = 2.0 * eps[(l, j)];
                    if c == 0.0 {
                        continue;
                    }
                    let (xb, pb) = (layout.mech_x(j), layout.mech_p(j));
                    a[(pb, xa)] -= c * g.re;
                    a[(pb, pa)] -= c * g.im;
                    a[(xa, xb)] += c * g.im;
                    a[(pa, xb)] -= c * g.re;
                }
            }
        }
        CouplingModel::NearestNeighbor { strength } => {
            for j in 0..n - 1 {
                let (xj, pj) = (layout.mech_x(j), layout.mech_p(j));
                let (xk, pk) = (layout.mech_x(j + 1), layout.mech_p(j + 1));
                a[(pj, xk)] -= strength;
                a[(pk, xj)] -= strength;
            }
        }
    }
    Ok(DriftDiffusion { layout, a, d })
}

/// Second moments and means of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub layout: QuadratureLayout,
    pub v: RMatrix,
    pub mean: DVector<f64>,
}

impl CovarianceState {
    pub fn vacuum(layout: QuadratureLayout) -> Self {
        let dim = layout.dim();
        CovarianceState { layout, v: DMatrix::identity(dim, dim) * 0.5, mean: DVector::zeros(dim) }
    }

    /// Mechanical elements thermal with the given occupations, optics in vacuum.
    pub fn thermal(layout: QuadratureLayout, nbar: &[f64]) -> Result<Self> {
        if nbar.len() != layout.n_mech {
            return Err(Error::param(format!("expected {} occupations, got {}", layout.n_mech, nbar.len())));
        }
        let mut s = Self::vacuum(layout);
        for (j, n) in nbar.iter().enumerate() {
            s.v[(layout.mech_x(j), layout.mech_x(j))] = n + 0.5;
            s.v[(layout.mech_p(j), layout.mech_p(j))] = n + 0.5;
        }
        Ok(s)
    }

    /// Moments of a single Fock excitation on mode `mode` (0-based over all
    /// modes, mechanics first), vacuum elsewhere.
    pub fn single_excitation(layout: QuadratureLayout, mode: usize) -> Result<Self> {
        if mode >= layout.modes() {
            return Err(Error::param(format!("mode {mode} out of range")));
        }
        let mut s = Self::vacuum(layout);
        s.v[(2 * mode, 2 * mode)] = 1.5;
        s.v[(2 * mode + 1, 2 * mode + 1)] = 1.5;
        Ok(s)
    }

    /// Smallest eigenvalue of the Hermitian matrix `V + (i/2)Σ`.
    pub fn uncertainty_margin(&self) -> f64 {
        let sigma = self.layout.symplectic_form();
        let m = DMatrix::from_fn(self.v.nrows(), self.v.ncols(), |i, j| {
            Complex64::new(self.v[(i, j)], 0.5 * sigma[(i, j)])
        });
        nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_physical(&self) -> bool {
        let asym = crate::linalg::max_abs(&(&self.v - self.v.transpose()));
        asym <= 1e-12 * crate::linalg::max_abs(&self.v).max(1.0) && self.uncertainty_margin() >= -PHYSICALITY_TOL
    }

    /// Mean excitation number of every mode, mechanics first.
    pub fn mode_occupations(&self) -> Vec<f64> {
        (0..self.layout.modes())
            .map(|m| {
                let (x, p) = (2 * m, 2 * m + 1);
                (self.v[(x, x)] + self.v[(p, p)] + self.mean[x].powi(2) + self.mean[p].powi(2)) / 2.0 - 0.5
            })
            .collect()
    }
}

/// Mean excitation number of each mechanical element.
pub fn occupations(state: &CovarianceState) -> Vec<f64> {
    let mut all = state.mode_occupations();
    all.truncate(state.layout.n_mech);
    all
}

/// Steady state of `dV/dt = A V + V Aᵀ + D`, zero mean.
pub fn steady_state(dd: &DriftDiffusion) -> Result<CovarianceState> {
    let v = solve_continuous_lyapunov(&dd.a, &dd.d, HURWITZ_MARGIN)?;
    let residual = lyapunov_residual(&dd.a, &v, &dd.d);
    let scale = crate::linalg::max_abs(&dd.d).max(f64::MIN_POSITIVE);
    if !(residual <= STEADY_STATE_RESIDUAL_TOL * scale) {
        return Err(Error::Integration(format!(
            "steady-state residual {residual:e} exceeds {:e}",
            STEADY_STATE_RESIDUAL_TOL * scale
        )));
    }
    Ok(CovarianceState { layout: dd.layout, v, mean: DVector::zeros(dd.layout.dim()) })
}
