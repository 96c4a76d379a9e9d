//! Small dense linear algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Largest absolute entry.
pub fn max_abs(m: &RMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

/// `max |U^dagger U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_c(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// Applies a scalar function to a Hermitian matrix through its eigendecomposition.
///
/// The function receives the (real) eigenvalue. Returns the eigenvalues too so
/// callers can inspect the spectrum.
pub fn hermitian_function<F>(m: &CMatrix, f: F) -> (CMatrix, DVector<f64>)
where
    F: Fn(f64) -> Complex64,
{
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let w = &eig.eigenvectors;
    let values = eig.eigenvalues.clone();
    let mut scaled = w.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        let fk = f(values[k]);
        col.iter_mut().for_each(|x| *x *= fk);
    }
    (scaled * w.adjoint(), values)
}

/// `sin(x) / x`, continuous at zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Haar-distributed `n × n` unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        q.column_mut(k).iter_mut().for_each(|x| *x *= phase);
    }
    q
}
