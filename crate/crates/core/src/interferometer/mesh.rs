//! Triangular beamsplitter meshes.
//!
//! A unitary `U` is factored as `U = D · T_m ⋯ T_1`, where every `T_k` is a
//! beamsplitter on two adjacent modes and `D` is a layer of output phase
//! shifters. The mesh lists its elements in the order they act on an input
//! vector: `T_1` first, the phase shifters last.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{unitarity_defect, CMatrix};

/// Maximum `|U†U − I|` accepted by [`reck_decompose`].
pub const UNITARITY_TOL: f64 = 1e-8;

/// Magnitude below which an entry counts as already eliminated. Without it a
/// round-off sized pair would produce an arbitrary mixing angle.
const ZERO_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshElement {
    /// Acts on modes `(i, j = i + 1)` as `[[e^{iφ} cos θ, −sin θ], [e^{iφ} sin θ, cos θ]]`.
    BeamSplitter { i: usize, j: usize, theta: f64, phi: f64 },
    /// Multiplies mode `i` by `e^{i·phase}`.
    PhaseShifter { i: usize, phase: f64 },
}

impl MeshElement {
    fn beamsplitter_entries(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
        let (s, c) = theta.sin_cos();
        let e = Complex64::from_polar(1.0, phi);
        [[e * c, Complex64::new(-s, 0.0)], [e * s, Complex64::new(c, 0.0)]]
    }

    fn apply(&self, v: &mut DVector<Complex64>) {
        match *self {
            MeshElement::BeamSplitter { i, j, theta, phi } => {
                let m = Self::beamsplitter_entries(theta, phi);
                let (a, b) = (v[i], v[j]);
                v[i] = m[0][0] * a + m[0][1] * b;
                v[j] = m[1][0] * a + m[1][1] * b;
            }
            MeshElement::PhaseShifter { i, phase } => {
                v[i] *= Complex64::from_polar(1.0, phase);
            }
        }
    }

    fn apply_adjoint(&self, v: &mut DVector<Complex64>) {
        match *self {
            MeshElement::BeamSplitter { i, j, theta, phi } => {
                let m = Self::beamsplitter_entries(theta, phi);
                let (a, b) = (v[i], v[j]);
                v[i] = m[0][0].conj() * a + m[1][0].conj() * b;
                v[j] = m[0][1].conj() * a + m[1][1].conj() * b;
            }
            MeshElement::PhaseShifter { i, phase } => {
                v[i] *= Complex64::from_polar(1.0, -phase);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshNetwork {
    pub size: usize,
    pub elements: Vec<MeshElement>,
}

impl MeshNetwork {
    pub fn identity(size: usize) -> Self {
        MeshNetwork { size, elements: Vec::new() }
    }

    /// Applies the mesh to `v` in place.
    pub fn apply(&self, v: &mut DVector<Complex64>) {
        for el in &self.elements {
            el.apply(v);
        }
    }

    /// Applies the adjoint mesh (elements reversed and conjugated).
    pub fn apply_adjoint(&self, v: &mut DVector<Complex64>) {
        for el in self.elements.iter().rev() {
            el.apply_adjoint(v);
        }
    }

    pub fn beamsplitter_count(&self) -> usize {
        self.elements.iter().filter(|e| matches!(e, MeshElement::BeamSplitter { .. })).count()
    }

    /// Copy with every beamsplitter angle shifted by the next value of `offsets`.
    pub fn with_theta_offsets<I: IntoIterator<Item = f64>>(&self, offsets: I) -> Self {
        let mut offsets = offsets.into_iter();
        let elements = self
            .elements
            .iter()
            .map(|el| match *el {
                MeshElement::BeamSplitter { i, j, theta, phi } => {
                    MeshElement::BeamSplitter { i, j, theta: theta + offsets.next().unwrap_or(0.0), phi }
                }
                other => other,
            })
            .collect();
        MeshNetwork { size: self.size, elements }
    }
}

/// Factors a unitary into a triangular mesh of adjacent beamsplitters followed
/// by output phase shifters.
///
/// Rows are cleared from the bottom up by right-multiplying with inverse
/// beamsplitters on adjacent columns, which leaves a diagonal of phases.
pub fn reck_decompose(u: &CMatrix) -> Result<MeshNetwork> {
    let n = u.nrows();
    if n == 0 || u.ncols() != n {
        return Err(Error::contract("mesh decomposition needs a non-empty square matrix"));
    }
    let defect = unitarity_defect(u);
    if !(defect < UNITARITY_TOL) {
        return Err(Error::contract(format!("matrix is not unitary: max |U†U − I| = {defect:e}")));
    }

    let mut w = u.clone();
    let mut elements = Vec::with_capacity(n * (n - 1) / 2 + n);
    for r in (1..n).rev() {
        for k in 0..r {
            let a = w[(r, k)];
            let b = w[(r, k + 1)];
            let (theta, phi) =
                if a.norm() <= ZERO_TOL { (0.0, 0.0) } else { (a.norm().atan2(b.norm()), a.arg() - b.arg()) };
            // W ← W T†, with T† = [[e^{-iφ} c, e^{-iφ} s], [-s, c]] on columns (k, k+1)
            let (s, c) = theta.sin_cos();
            let e = Complex64::from_polar(1.0, -phi);
            for row in 0..n {
                let x = w[(row, k)];
                let y = w[(row, k + 1)];
                w[(row, k)] = e * c * x - s * y;
                w[(row, k + 1)] = e * s * x + c * y;
            }
            w[(r, k)] = Complex64::new(0.0, 0.0);
            elements.push(MeshElement::BeamSplitter { i: k, j: k + 1, theta, phi });
        }
    }
    for i in 0..n {
        let phase = w[(i, i)].arg();
        elements.push(MeshElement::PhaseShifter { i, phase });
    }
    Ok(MeshNetwork { size: n, elements })
}

/// Multiplies the element matrices in mesh order.
pub fn reck_compose(mesh: &MeshNetwork) -> CMatrix {
    let n = mesh.size;
    let mut out = CMatrix::identity(n, n);
    for mut col in out.column_iter_mut() {
        let mut v = DVector::from_iterator(n, col.iter().copied());
        mesh.apply(&mut v);
        col.copy_from(&v);
    }
    out
}
