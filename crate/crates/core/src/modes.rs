//! Mode structure of the array: coupling vectors, coupling matrices and the
//! completed orthonormal basis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::params::SystemParams;

/// Residual norm below which a candidate completion vector is discarded.
pub const COMPLETION_RANK_TOL: f64 = 1e-8;

/// Tolerance on the unit norm expected by [`coupling_matrix`].
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Coupling vector `ε_l` of optical mode `l` across an `n`-element array.
///
/// Entry `j` (1-based) is proportional to `sin(2π l (j - 1/2) / n)`. The
/// vector is normalized and its first nonzero entry is positive.
pub fn coupling_vector(n: usize, l: usize) -> Result<DVector<f64>> {
    if n < 2 {
        return Err(Error::param(format!("array size must be at least 2, got {n}")));
    }
    if l == 0 || l >= n {
        return Err(Error::param(format!("mode index {l} out of range 1..={}", n - 1)));
    }
    // modes l and n - l share one profile; evaluating the lower index makes
    // the pair bit-identical
    let l = l.min(n - l);
    let mut v = DVector::from_fn(n, |j, _| {
        let x = (2.0 * std::f64::consts::PI * l as f64 * (j as f64 + 0.5) / n as f64).sin();
        // sin at integer multiples of π
        if x.abs() < 1e-14 {
            0.0
        } else {
            x
        }
    });
    let norm = v.norm();
    v /= norm;
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    Ok(v)
}

/// `E_l = ε_l ε_lᵀ`.
pub fn coupling_matrix(epsilon: &DVector<f64>) -> Result<DMatrix<f64>> {
    let norm = epsilon.norm();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::contract(format!("coupling vector must have unit norm, got {norm}")));
    }
    Ok(epsilon * epsilon.transpose())
}

/// Coupling vectors together with the orthonormal similarity matrix `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBasis {
    n: usize,
    epsilon: DMatrix<f64>,
    l0: usize,
    p: DMatrix<f64>,
}

impl CouplingBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `(n - 1) × n` matrix whose row `l - 1` is `ε_l`.
    pub fn epsilon(&self) -> &DMatrix<f64> {
        &self.epsilon
    }

    /// `ε_l` as a column vector, for 1-based `l`.
    pub fn epsilon_row(&self, l: usize) -> DVector<f64> {
        self.epsilon.row(l - 1).transpose()
    }

    /// Number of linearly independent coupling vectors, `⌈(n - 1) / 2⌉`.
    pub fn l0(&self) -> usize {
        self.l0
    }

    /// Orthogonal `n × n` matrix whose first `l0` rows are `ε_1..ε_{l0}`.
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }
}

/// Builds all coupling vectors and completes `ε_1..ε_{l0}` to an orthonormal
/// basis by Gram–Schmidt over the standard basis vectors in index order.
pub fn build_basis(n: usize) -> Result<CouplingBasis> {
    if n < 2 {
        return Err(Error::param(format!("array size must be at least 2, got {n}")));
    }
    let mut epsilon = DMatrix::zeros(n - 1, n);
    for l in 1..n {
        let v = coupling_vector(n, l)?;
        epsilon.set_row(l - 1, &v.transpose());
    }
    let l0 = n / 2;

    let mut rows: Vec<DVector<f64>> = (0..l0).map(|l| epsilon.row(l).transpose()).collect();
    for k in 0..n {
        if rows.len() == n {
            break;
        }
        let mut r = DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 });
        // two passes of modified Gram-Schmidt keep orthogonality at round-off level
        for _ in 0..2 {
            for q in &rows {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        let norm = r.norm();
        if norm < COMPLETION_RANK_TOL {
            continue;
        }
        rows.push(r / norm);
    }
    debug_assert_eq!(rows.len(), n);

    let mut p = DMatrix::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        p.set_row(i, &r.transpose());
    }
    Ok(CouplingBasis { n, epsilon, l0, p })
}

/// `Λ_{l,j} = i conj(g_l) ε_{l,j}`, an `(n - 1) × n` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMatrix {
    pub entries: CMatrix,
}

impl LambdaMatrix {
    /// Builds `Λ` directly from a list of coupling amplitudes.
    pub fn from_couplings(basis: &CouplingBasis, g: &[Complex64]) -> Result<Self> {
        let n = basis.n();
        if g.len() != n - 1 {
            return Err(Error::param(format!("expected {} coupling amplitudes for n = {n}, got {}", n - 1, g.len())));
        }
        let eps = basis.epsilon();
        let entries = CMatrix::from_fn(n - 1, n, |l, j| Complex64::i() * g[l].conj() * eps[(l, j)]);
        Ok(LambdaMatrix { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.ncols()
    }
}

pub fn lambda_matrix(params: &SystemParams, basis: &CouplingBasis) -> Result<LambdaMatrix> {
    if params.n != basis.n() {
        return Err(Error::param(format!("parameter size {} does not match basis size {}", params.n, basis.n())));
    }
    LambdaMatrix::from_couplings(basis, &params.g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn assert_vec(v: &DVector<f64>, expected: &[f64], tol: f64) {
        assert_eq!(v.len(), expected.len());
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < tol, "{v} vs {expected:?}");
        }
    }

    #[test]
    fn coupling_vector_examples() {
        assert_vec(&coupling_vector(4, 1).unwrap(), &[0.5, 0.5, -0.5, -0.5], 1e-15);
        assert_vec(&coupling_vector(3, 1).unwrap(), &[FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2], 1e-15);
        assert_vec(&coupling_vector(2, 1).unwrap(), &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2], 1e-15);
        let a = coupling_vector(6, 2).unwrap();
        let b = coupling_vector(6, 4).unwrap();
        assert!((a - b).amax() < 1e-15);
    }

    #[test]
    fn coupling_vector_rejects_out_of_range() {
        assert!(matches!(coupling_vector(1, 1), Err(Error::Parameter(_))));
        assert!(matches!(coupling_vector(4, 0), Err(Error::Parameter(_))));
        assert!(matches!(coupling_vector(4, 4), Err(Error::Parameter(_))));
    }

    #[test]
    fn half_mode_is_normalized_like_the_rest() {
        let v = coupling_vector(6, 3).unwrap();
        let s = 1.0 / 6f64.sqrt();
        assert_vec(&v, &[s, -s, s, -s, s, -s], 1e-15);
    }

    #[test]
    fn coupling_matrix_examples() {
        let e = coupling_matrix(&coupling_vector(2, 1).unwrap()).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!(max_abs(&(&e - expected)) < 1e-15);
        assert!((e.trace() - 1.0).abs() < 1e-15);
        assert!(max_abs(&(&e * &e - &e)) < 1e-15);
    }

    #[test]
    fn coupling_matrix_rejects_non_unit() {
        let v = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(coupling_matrix(&v), Err(Error::Contract(_))));
    }

    #[test]
    fn basis_examples() {
        let b = build_basis(2).unwrap();
        assert_eq!(b.l0(), 1);
        let expected = DMatrix::from_row_slice(2, 2, &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        assert!(max_abs(&(b.p() - expected)) < 1e-15);
        assert_eq!(build_basis(6).unwrap().l0(), 3);
        for n in 2..=12 {
            let b = build_basis(n).unwrap();
            let p = b.p();
            assert!(max_abs(&(p * p.transpose() - DMatrix::identity(n, n))) < 1e-12);
            assert!(max_abs(&(p.transpose() * p - DMatrix::identity(n, n))) < 1e-12);
            for l in 0..b.l0() {
                assert_eq!(p.row(l), b.epsilon().row(l));
            }
        }
    }

    #[test]
    fn lambda_examples() {
        let basis = build_basis(2).unwrap();
        let omega = 0.7;
        let lam = LambdaMatrix::from_couplings(&basis, &[Complex64::new(omega, 0.0)]).unwrap();
        let i = Complex64::i();
        assert!((lam.entries[(0, 0)] - i * omega * FRAC_1_SQRT_2).norm() < 1e-15);
        assert!((lam.entries[(0, 1)] + i * omega * FRAC_1_SQRT_2).norm() < 1e-15);
        let gram = &lam.entries * lam.entries.adjoint();
        assert!((gram[(0, 0)].re - omega * omega).abs() < 1e-15);

        let zero = LambdaMatrix::from_couplings(&build_basis(5).unwrap(), &[Complex64::new(0.0, 0.0); 4]).unwrap();
        assert!(zero.entries.iter().all(|x| *x == Complex64::new(0.0, 0.0)));

        let basis = build_basis(4).unwrap();
        let g = [Complex64::new(omega, 0.0), Complex64::new(omega, 0.0), Complex64::new(0.0, 0.0)];
        let lam = LambdaMatrix::from_couplings(&basis, &g).unwrap();
        let sv = lam.entries.clone().singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((sv[0] - omega).abs() < 1e-12 && (sv[1] - omega).abs() < 1e-12 && sv[2].abs() < 1e-12);
    }

    #[test]
    fn lambda_checks_dimensions() {
        let params = SystemParams::uniform(3, 0.0, 1.0, -1.0, 0.0).unwrap();
        let basis = build_basis(4).unwrap();
        assert!(matches!(lambda_matrix(&params, &basis), Err(Error::Parameter(_))));
    }
}
