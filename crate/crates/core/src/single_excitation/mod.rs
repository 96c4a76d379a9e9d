//! Good-cavity dynamics restricted to a single excitation.
//!
//! In the frame rotating at the mechanical frequency with every optical mode
//! on the red sideband, one excitation is shared between `N − 1` optical modes
//! and `N` mechanical elements. Amplitude vectors list the optical modes
//! first. Over a segment with constant couplings the evolution is
//! `exp(tG)` with `G = [[0, −Λ], [Λ†, 0]]`.

mod dissipative;
mod kappa;
mod schedule;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{sinc, CMatrix, CVector};
use crate::modes::LambdaMatrix;

pub use dissipative::{dissipative_check, DissipativeParams, DissipativeReport, COUNTER_ROTATING_THRESHOLD};
pub use kappa::{kappa_switch_amplitude, simulate_kappa_switch, KappaSwitchReport};
pub use schedule::{protocol, run_schedule, Protocol, Schedule, Segment, SwitchEvent, Trajectory, SWITCH_TOL};

/// Normalization tolerance for states handed to [`run_schedule`].
pub const NORM_TOL: f64 = 1e-10;

/// Eigenvalues of `Λ†Λ` below this are treated as an error rather than round-off.
const NEGATIVE_EIGENVALUE_TOL: f64 = -1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    /// Optical amplitudes `0..n-1`, then mechanical `n-1..2n-1`.
    pub amplitudes: CVector,
    n: usize,
}

impl AmplitudeState {
    pub fn from_amplitudes(n: usize, amplitudes: CVector) -> Result<Self> {
        if n < 2 || amplitudes.len() != 2 * n - 1 {
            return Err(Error::param(format!(
                "expected {} amplitudes for n = {n}, got {}",
                2 * n - 1,
                amplitudes.len()
            )));
        }
        Ok(AmplitudeState { amplitudes, n })
    }

    /// One phonon on element `j` (1-based).
    pub fn phonon(n: usize, j: usize) -> Result<Self> {
        if j == 0 || j > n {
            return Err(Error::param(format!("element {j} out of range 1..={n}")));
        }
        let mut a = CVector::zeros(2 * n - 1);
        a[n - 1 + j - 1] = Complex64::new(1.0, 0.0);
        Self::from_amplitudes(n, a)
    }

    /// Purely mechanical state with the given element amplitudes.
    pub fn mechanical(mech: &[Complex64]) -> Result<Self> {
        let n = mech.len();
        if n < 2 {
            return Err(Error::param("need at least two elements"));
        }
        let mut a = CVector::zeros(2 * n - 1);
        for (j, z) in mech.iter().enumerate() {
            a[n - 1 + j] = *z;
        }
        Self::from_amplitudes(n, a)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn optical_population(&self) -> f64 {
        self.amplitudes.rows(0, self.n - 1).norm_squared()
    }

    pub fn optical_populations(&self) -> Vec<f64> {
        self.amplitudes.rows(0, self.n - 1).iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn mechanical_populations(&self) -> Vec<f64> {
        self.amplitudes.rows(self.n - 1, self.n).iter().map(|z| z.norm_sqr()).collect()
    }

    /// All populations in amplitude order.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn evolved(&self, u: &CMatrix) -> Self {
        AmplitudeState { amplitudes: u * &self.amplitudes, n: self.n }
    }
}

/// Eigendecomposition of a Hermitian positive-semidefinite matrix with
/// round-off negatives clamped to zero.
fn psd_eigen(m: CMatrix) -> Result<(CMatrix, Vec<f64>)> {
    let eig = SymmetricEigen::new(m);
    let mut values = Vec::with_capacity(eig.eigenvalues.len());
    for &mu in eig.eigenvalues.iter() {
        if mu < NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::contract(format!("Gram matrix has negative eigenvalue {mu:e}")));
        }
        values.push(mu.max(0.0));
    }
    Ok((eig.eigenvectors, values))
}

fn spectral(w: &CMatrix, values: &[f64], f: impl Fn(f64) -> f64) -> CMatrix {
    let mut scaled = w.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        let fk = f(values[k]);
        col.iter_mut().for_each(|x| *x *= fk);
    }
    scaled * w.adjoint()
}

/// Block propagator over time `t` with constant `Λ`:
///
/// `u₁₁ = cos(t√(ΛΛ†))`, `u₂₂ = cos(t√(Λ†Λ))`, `u₁₂ = −Λ·t·sinc(t√(Λ†Λ))`,
/// lower-left block `−u₁₂†`. The sinc is evaluated on the spectrum, so a
/// singular `Λ†Λ` needs no pseudoinverse.
pub fn evolution_matrix(lambda: &LambdaMatrix, t: f64) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(Error::param("evolution time must be finite"));
    }
    let lam = &lambda.entries;
    let (m, n) = (lam.nrows(), lam.ncols());
    let (w_opt, mu_opt) = psd_eigen(lam * lam.adjoint())?;
    let (w_mech, mu_mech) = psd_eigen(lam.adjoint() * lam)?;
    let u11 = spectral(&w_opt, &mu_opt, |mu| (t * mu.sqrt()).cos());
    let u22 = spectral(&w_mech, &mu_mech, |mu| (t * mu.sqrt()).cos());
    let s = spectral(&w_mech, &mu_mech, |mu| t * sinc(t * mu.sqrt()));
    let u12 = -(lam * &s);
    let u21 = -u12.adjoint();

    let mut u = CMatrix::zeros(m + n, m + n);
    u.view_mut((0, 0), (m, m)).copy_from(&u11);
    u.view_mut((0, m), (m, n)).copy_from(&u12);
    u.view_mut((m, 0), (n, m)).copy_from(&u21);
    u.view_mut((m, m), (n, n)).copy_from(&u22);
    Ok(u)
}

/// The generator `G = [[0, −Λ], [Λ†, 0]]`.
pub fn generator(lambda: &LambdaMatrix) -> CMatrix {
    let lam = &lambda.entries;
    let (m, n) = (lam.nrows(), lam.ncols());
    let mut g = CMatrix::zeros(m + n, m + n);
    g.view_mut((0, m), (m, n)).copy_from(&(-lam));
    g.view_mut((m, 0), (n, m)).copy_from(&lam.adjoint());
    g
}

/// Dense `exp(tG)`, intended as an independent check of [`evolution_matrix`].
pub fn generator_oracle(lambda: &LambdaMatrix, t: f64) -> CMatrix {
    (generator(lambda) * Complex64::new(t, 0.0)).exp()
}
