//! Continuous Lyapunov equation `A X + X Aᵀ + D = 0`.

use nalgebra::linalg::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, to_complex, CMatrix, RMatrix};

/// Deflation tolerances tried in turn; the tightest one that converges wins.
const SCHUR_TOLERANCES: [f64; 4] = [1e-15, 1e-14, 1e-13, 1e-12];
const SCHUR_MAX_ITER: usize = 10_000;

/// Solves `A X + X Aᵀ + D = 0` for real `A` and symmetric `D`.
///
/// Uses the complex Schur form `A = Q T Q*`, which turns the equation into
/// `T Y + Y T* = −Q* D Q` with `T` upper triangular; `Y` is then solved one
/// column at a time from the last. Every eigenvalue of `A` must have real part
/// below `-margin`, otherwise [`Error::Unstable`] names the offending one.
pub fn solve_continuous_lyapunov(a: &RMatrix, d: &RMatrix, margin: f64) -> Result<RMatrix> {
    let n = a.nrows();
    if a.ncols() != n || d.nrows() != n || d.ncols() != n {
        return Err(Error::param("Lyapunov operands must be square and of equal size"));
    }
    if n == 0 {
        return Ok(RMatrix::zeros(0, 0));
    }
    let ac = to_complex(a);
    let schur = SCHUR_TOLERANCES
        .iter()
        .find_map(|&eps| Schur::try_new(ac.clone(), eps, SCHUR_MAX_ITER))
        .ok_or_else(|| Error::Integration("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();

    let worst = (0..n).map(|k| t[(k, k)]).max_by(|x, y| x.re.total_cmp(&y.re)).unwrap();
    if !(worst.re < -margin) {
        return Err(Error::Unstable { re: worst.re, im: worst.im, margin: -margin });
    }

    let c = q.adjoint() * to_complex(d) * &q;
    let mut y = CMatrix::zeros(n, n);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..n).rev() {
        for i in 0..n {
            let mut r = -c[(i, k)];
            for m in k + 1..n {
                r -= t[(k, m)].conj() * y[(i, m)];
            }
            rhs[i] = r;
        }
        // back substitution with (T + conj(T_kk) I)
        let shift = t[(k, k)].conj();
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for m in i + 1..n {
                s -= t[(i, m)] * y[(m, k)];
            }
            y[(i, k)] = s / (t[(i, i)] + shift);
        }
    }
    let x = &q * y * q.adjoint();
    let x = x.map(|z| z.re);
    Ok((&x + x.transpose()) * 0.5)
}

/// `max |A X + X Aᵀ + D|`.
pub fn lyapunov_residual(a: &RMatrix, x: &RMatrix, d: &RMatrix) -> f64 {
    max_abs(&(a * x + x * a.transpose() + d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    /// Kronecker-product oracle: `(I ⊗ A + A ⊗ I) vec(X) = −vec(D)`.
    fn kronecker_solve(a: &RMatrix, d: &RMatrix) -> RMatrix {
        let n = a.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let big = id.kronecker(a) + a.kronecker(&id);
        let rhs = -DMatrix::from_column_slice(n * n, 1, d.as_slice());
        let sol = big.lu().solve(&rhs).unwrap();
        DMatrix::from_column_slice(n, n, sol.as_slice())
    }

    fn test_matrix(n: usize, seed: f64) -> RMatrix {
        let mut a = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) as f64 * seed).sin() * 0.8);
        for i in 0..n {
            a[(i, i)] -= 2.5;
        }
        a
    }

    #[test]
    fn matches_kronecker_oracle() {
        for (n, seed) in [(1, 0.3), (2, 0.9), (5, 1.7), (8, 0.41)] {
            let a = test_matrix(n, seed);
            let b = DMatrix::from_fn(n, n, |i, j| ((i + 2 * j) as f64 * seed).cos());
            let d = &b * b.transpose();
            let x = solve_continuous_lyapunov(&a, &d, 1e-12).unwrap();
            let oracle = kronecker_solve(&a, &d);
            assert!(max_abs(&(&x - &oracle)) < 1e-10 * max_abs(&oracle).max(1.0));
            assert!(lyapunov_residual(&a, &x, &d) < 1e-11);
        }
    }

    #[test]
    fn rotation_with_damping() {
        // damped oscillator: the steady state is isotropic
        let a = DMatrix::from_row_slice(2, 2, &[-0.1, 1.0, -1.0, -0.1]);
        let d = DMatrix::identity(2, 2) * 0.2 * 3.0;
        let x = solve_continuous_lyapunov(&a, &d, 1e-12).unwrap();
        assert!(max_abs(&(x - DMatrix::identity(2, 2) * 3.0)) < 1e-12);
    }

    #[test]
    fn rejects_unstable_and_marginal() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(solve_continuous_lyapunov(&a, &DMatrix::identity(2, 2), 1e-12), Err(Error::Unstable { .. })));
        let a = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, -1.0]);
        match solve_continuous_lyapunov(&a, &DMatrix::identity(2, 2), 1e-12) {
            Err(Error::Unstable { re, .. }) => assert!((re - 0.2).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
