//! Bad-cavity effective phonon dynamics.
//!
//! Eliminating the optical fields leaves the mechanical elements coupled by
//! `H_eff = Σ_l β_l E_l`, which is diagonalized by the similarity matrix `P`.

mod mesh;
mod walk;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modes::CouplingBasis;
use crate::params::SystemParams;

pub use mesh::{reck_compose, reck_decompose, MeshElement, MeshNetwork};
pub use walk::{run_classical_walk, run_walk, Randomization, WalkConfig, WalkResult};

/// Coupling above which the adiabatic elimination is flagged as doubtful.
pub const ADIABATIC_MAX_COUPLING: f64 = 0.3;
/// Linewidth below which the adiabatic elimination is flagged as doubtful.
pub const ADIABATIC_MIN_KAPPA: f64 = 3.0;

/// Effective phonon-phonon coupling `β_l` induced by optical mode `l`.
///
/// `β = 2|g|²Δ(Δ² − ω² + κ²) / [(Δ² − ω² − κ²)² + (2Δκ)²]` with `ω = 1`.
pub fn beta_coefficient(g: Complex64, delta: f64, kappa: f64) -> f64 {
    if g.norm() > ADIABATIC_MAX_COUPLING || kappa < ADIABATIC_MIN_KAPPA {
        log::warn!("beta_coefficient outside the adiabatic regime (|g| = {}, kappa = {kappa})", g.norm());
    }
    let omega2 = 1.0;
    let d2 = delta * delta;
    let k2 = kappa * kappa;
    let num = 2.0 * g.norm_sqr() * delta * (d2 - omega2 + k2);
    let den = (d2 - omega2 - k2).powi(2) + (2.0 * delta * kappa).powi(2);
    num / den
}

/// Diagonal of `β` in the `P` basis, stored at full length `n`.
///
/// Entries with index above `l0` are always zero: couplings of the partner
/// modes `l` and `n - l`, which share a coupling vector, are summed onto the
/// lower index.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSpectrum {
    beta: DVector<f64>,
    l0: usize,
}

impl BetaSpectrum {
    /// From per-mode couplings `β_1..β_{n-1}`.
    pub fn from_modes(basis: &CouplingBasis, per_mode: &[f64]) -> Result<Self> {
        let n = basis.n();
        if per_mode.len() != n - 1 {
            return Err(Error::param(format!("expected {} beta values, got {}", n - 1, per_mode.len())));
        }
        let l0 = basis.l0();
        let mut beta = DVector::zeros(n);
        for (idx, b) in per_mode.iter().enumerate() {
            let l = idx + 1;
            let target = if l <= l0 { l } else { n - l };
            beta[target - 1] += b;
        }
        Ok(BetaSpectrum { beta, l0 })
    }

    /// Single active mode `l` (1-based, `l <= l0`) with coupling `value`.
    pub fn single(basis: &CouplingBasis, l: usize, value: f64) -> Result<Self> {
        let n = basis.n();
        if l == 0 || l >= n {
            return Err(Error::param(format!("mode index {l} out of range 1..={}", n - 1)));
        }
        let mut per_mode = vec![0.0; n - 1];
        per_mode[l - 1] = value;
        Self::from_modes(basis, &per_mode)
    }

    pub fn from_params(params: &SystemParams, basis: &CouplingBasis) -> Result<Self> {
        if params.n != basis.n() {
            return Err(Error::param("parameter and basis sizes differ"));
        }
        let per_mode: Vec<f64> =
            params.g.iter().zip(&params.delta).map(|(g, d)| beta_coefficient(*g, *d, params.kappa)).collect();
        Self::from_modes(basis, &per_mode)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn l0(&self) -> usize {
        self.l0
    }
}

fn check_dims(basis: &CouplingBasis, beta: &BetaSpectrum) -> Result<()> {
    if beta.len() != basis.n() {
        return Err(Error::param(format!(
            "beta spectrum of length {} does not match basis size {}",
            beta.len(),
            basis.n()
        )));
    }
    Ok(())
}

/// `H_eff = Pᵀ diag(β) P`.
pub fn effective_hamiltonian(basis: &CouplingBasis, beta: &BetaSpectrum) -> Result<DMatrix<f64>> {
    check_dims(basis, beta)?;
    let p = basis.p();
    let scaled = DMatrix::from_diagonal(beta.values()) * p;
    Ok(p.transpose() * scaled)
}

/// Heisenberg propagator of the mean amplitudes, `Pᵀ e^{-iβt} P`.
pub fn propagator(basis: &CouplingBasis, beta: &BetaSpectrum, t: f64) -> Result<CMatrix> {
    check_dims(basis, beta)?;
    if !t.is_finite() {
        return Err(Error::param("evolution time must be finite"));
    }
    let p = basis.p();
    let n = basis.n();
    let phases = DVector::from_fn(n, |l, _| Complex64::from_polar(1.0, -beta.values()[l] * t));
    let pc = p.map(|x| Complex64::new(x, 0.0));
    let mut right = pc.clone();
    for (l, mut row) in right.row_iter_mut().enumerate() {
        row *= phases[l];
    }
    Ok(pc.transpose() * right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, max_abs_c, unitarity_defect};
    use crate::modes::build_basis;

    #[test]
    fn beta_examples() {
        assert_eq!(beta_coefficient(Complex64::new(0.0, 0.0), -1.0, 6.4), 0.0);
        let b = beta_coefficient(Complex64::new(0.3, 0.0), -1.0, 6.4);
        // -0.18 * 40.96 / (40.96^2 + 12.8^2)
        let expected = -0.18 * 40.96 / (40.96f64.powi(2) + 12.8f64.powi(2));
        assert!((b - expected).abs() < 1e-18);
        assert!((b - (-4.0036e-3)).abs() < 1e-7);
        assert!((b - (-2.0 * 0.09 / (6.4f64.powi(2) + 4.0))).abs() < 1e-15);
        assert_eq!(beta_coefficient(Complex64::new(0.2, 0.1), 0.0, 3.0), 0.0);
    }

    #[test]
    fn beta_depends_on_modulus_only() {
        let a = beta_coefficient(Complex64::new(0.3, 0.0), -0.7, 5.0);
        let b = beta_coefficient(Complex64::from_polar(0.3, 1.1), -0.7, 5.0);
        assert!((a - b).abs() < 1e-16);
    }

    #[test]
    fn partner_modes_are_absorbed() {
        let basis = build_basis(6).unwrap();
        let spec = BetaSpectrum::from_modes(&basis, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(spec.values().as_slice(), &[6.0, 6.0, 3.0, 0.0, 0.0, 0.0]);
        let basis = build_basis(5).unwrap();
        let spec = BetaSpectrum::from_modes(&basis, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(spec.values().as_slice(), &[5.0, 5.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn effective_hamiltonian_examples() {
        let basis = build_basis(2).unwrap();
        let b = 0.37;
        let spec = BetaSpectrum::single(&basis, 1, b).unwrap();
        let h = effective_hamiltonian(&basis, &spec).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[b / 2.0, -b / 2.0, -b / 2.0, b / 2.0]);
        assert!(max_abs(&(h - expected)) < 1e-15);

        let basis = build_basis(7).unwrap();
        let spec = BetaSpectrum::from_modes(&basis, &[0.0; 6]).unwrap();
        assert_eq!(max_abs(&effective_hamiltonian(&basis, &spec).unwrap()), 0.0);

        let spec = BetaSpectrum::from_modes(&basis, &[0.3, -0.2, 0.5, 0.0, 0.0, 0.0]).unwrap();
        let h = effective_hamiltonian(&basis, &spec).unwrap();
        let mut eig: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected = vec![0.3, -0.2, 0.5, 0.0, 0.0, 0.0, 0.0];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in eig.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn effective_hamiltonian_is_sum_of_projectors() {
        let basis = build_basis(6).unwrap();
        let per_mode = [0.1, 0.0, -0.4, 0.0, 0.0];
        let spec = BetaSpectrum::from_modes(&basis, &per_mode).unwrap();
        let h = effective_hamiltonian(&basis, &spec).unwrap();
        let mut sum = DMatrix::zeros(6, 6);
        for (l, b) in per_mode.iter().enumerate() {
            let e = basis.epsilon_row(l + 1);
            sum += *b * &e * e.transpose();
        }
        assert!(max_abs(&(h - sum)) < 1e-14);
    }

    #[test]
    fn propagator_basics() {
        let basis = build_basis(5).unwrap();
        let spec = BetaSpectrum::from_modes(&basis, &[0.3, 0.1, 0.0, 0.0]).unwrap();
        let u0 = propagator(&basis, &spec, 0.0).unwrap();
        assert!(max_abs_c(&(u0 - CMatrix::identity(5, 5))) < 1e-14);
        let u = propagator(&basis, &spec, 12.3).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
        let u1 = propagator(&basis, &spec, 2.0).unwrap();
        let u2 = propagator(&basis, &spec, 3.5).unwrap();
        let u12 = propagator(&basis, &spec, 5.5).unwrap();
        assert!(max_abs_c(&(u1 * u2 - u12)) < 1e-12);
        assert!(propagator(&basis, &spec, f64::NAN).is_err());
    }

    #[test]
    fn half_period_is_a_reflection() {
        let n = 20;
        let basis = build_basis(n).unwrap();
        let b1 = 1e-3;
        let spec = BetaSpectrum::single(&basis, 1, b1).unwrap();
        let u = propagator(&basis, &spec, std::f64::consts::PI / b1).unwrap();
        let e = basis.epsilon_row(1);
        let reflection = DMatrix::identity(n, n) - 2.0 * &e * e.transpose();
        let diff = u - reflection.map(|x| Complex64::new(x, 0.0));
        assert!(max_abs_c(&diff) < 1e-10);
    }

    #[test]
    fn dimension_mismatch() {
        let basis = build_basis(4).unwrap();
        let other = build_basis(5).unwrap();
        let spec = BetaSpectrum::single(&other, 1, 0.1).unwrap();
        assert!(matches!(effective_hamiltonian(&basis, &spec), Err(Error::Parameter(_))));
        assert!(matches!(propagator(&basis, &spec, 1.0), Err(Error::Parameter(_))));
    }
}
