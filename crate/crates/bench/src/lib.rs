//! Benchmark fixtures shared by the criterion targets.

use optomech_core::{build_basis, Complex64, CouplingBasis, SystemParams};

/// Standard twenty-element heat-diffusion system.
pub fn heat_system() -> (SystemParams, CouplingBasis) {
    let params = SystemParams::uniform(20, 5e-5, 6.4, -1.0, 10.0)
        .and_then(|p| p.with_coupling(1, Complex64::new(0.3, 0.0)))
        .expect("valid parameters");
    let basis = build_basis(20).expect("valid size");
    (params, basis)
}

/// Deterministic dense test unitary of size `n` from a QR factorization.
pub fn test_unitary(n: usize) -> nalgebra::DMatrix<Complex64> {
    let z = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let k = (i * n + j) as f64;
        Complex64::new((k * 0.731).sin(), (k * 1.217).cos())
    });
    z.qr().q()
}
