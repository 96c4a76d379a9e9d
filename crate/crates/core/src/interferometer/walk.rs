//! Seeded phonon walks through the mesh form `Pᵀ · e^{-iβt} · P`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::mesh::{reck_compose, reck_decompose, MeshElement, MeshNetwork};
use super::BetaSpectrum;
use crate::error::{Error, Result};
use crate::modes::CouplingBasis;
use crate::rng;

/// Kind of disorder added to each realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Randomization {
    None,
    /// i.i.d. offsets on every diagonal phase `e^{-iβ_l t}`.
    Phase,
    /// i.i.d. offsets on every beamsplitter angle of the `P` mesh.
    Transmissivity,
}

impl Randomization {
    pub const ALL: [Randomization; 3] = [Randomization::None, Randomization::Phase, Randomization::Transmissivity];

    pub fn as_str(&self) -> &'static str {
        match self {
            Randomization::None => "none",
            Randomization::Phase => "phase",
            Randomization::Transmissivity => "transmissivity",
        }
    }
}

impl fmt::Display for Randomization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Randomization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Randomization::None),
            "phase" => Ok(Randomization::Phase),
            "transmissivity" => Ok(Randomization::Transmissivity),
            other => Err(Error::param(format!(
                "unknown randomization mode {other:?} (expected none, phase or transmissivity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub n: usize,
    /// 1-based element receiving the initial coherent amplitude.
    pub source: usize,
    /// 1-based optical mode driving the walk.
    pub active_mode: usize,
    pub time: f64,
    pub randomization: Randomization,
    /// Standard deviation of the Gaussian random angles, in radians.
    pub sigma: f64,
    pub realizations: usize,
    pub seed: u64,
}

impl WalkConfig {
    /// The walk experiment with a 20-element array, injection at element 6,
    /// mode 1 active and `t = π/β_1`.
    pub fn standard(beta1: f64, randomization: Randomization, seed: u64) -> Self {
        WalkConfig {
            n: 20,
            source: 6,
            active_mode: 1,
            time: std::f64::consts::PI / beta1.abs(),
            randomization,
            sigma: std::f64::consts::PI,
            realizations: 10_000,
            seed,
        }
    }

    pub fn validate(&self, basis: &CouplingBasis, beta: &BetaSpectrum) -> Result<()> {
        if self.n != basis.n() || beta.len() != self.n {
            return Err(Error::param(format!(
                "walk size {} does not match basis size {} / beta length {}",
                self.n,
                basis.n(),
                beta.len()
            )));
        }
        if self.source == 0 || self.source > self.n {
            return Err(Error::param(format!("source element {} out of range 1..={}", self.source, self.n)));
        }
        if self.active_mode == 0 || self.active_mode >= self.n {
            return Err(Error::param(format!("active mode {} out of range 1..={}", self.active_mode, self.n - 1)));
        }
        if self.realizations == 0 {
            return Err(Error::param("at least one realization is required"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if !self.time.is_finite() {
            return Err(Error::param("evolution time must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkResult {
    /// Population per element averaged over realizations.
    pub mean: Vec<f64>,
    /// Population per element for each realization, in realization order.
    pub realizations: Vec<Vec<f64>>,
}

struct WalkSetup {
    mesh: MeshNetwork,
    phases: Vec<Complex64>,
    source: usize,
}

impl WalkSetup {
    fn new(config: &WalkConfig, basis: &CouplingBasis, beta: &BetaSpectrum) -> Result<Self> {
        config.validate(basis, beta)?;
        let p = basis.p().map(|x| Complex64::new(x, 0.0));
        let mesh = reck_decompose(&p)?;
        let phases = beta.values().iter().map(|b| Complex64::from_polar(1.0, -b * config.time)).collect();
        Ok(WalkSetup { mesh, phases, source: config.source - 1 })
    }

    fn perturbed_mesh<R: Rng>(&self, sigma: f64, rng: &mut R) -> MeshNetwork {
        let count = self.mesh.beamsplitter_count();
        let offsets: Vec<f64> = (0..count).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        self.mesh.with_theta_offsets(offsets)
    }
}

fn average(rows: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut mean = vec![0.0; n];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    let count = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= count);
    mean
}

/// Coherent phonon walk from a unit amplitude on the source element.
///
/// Realizations run in parallel; each draws from its own counter-derived
/// random stream and the average is accumulated in realization order, so the
/// result is independent of the number of worker threads.
pub fn run_walk(config: &WalkConfig, basis: &CouplingBasis, beta: &BetaSpectrum) -> Result<WalkResult> {
    let setup = WalkSetup::new(config, basis, beta)?;
    let n = config.n;
    let realizations: Vec<Vec<f64>> = (0..config.realizations as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(config.seed, k);
            let mut v = DVector::from_element(n, Complex64::new(0.0, 0.0));
            v[setup.source] = Complex64::new(1.0, 0.0);
            match config.randomization {
                Randomization::None => {
                    setup.mesh.apply(&mut v);
                    v.iter_mut().zip(&setup.phases).for_each(|(x, ph)| *x *= ph);
                    setup.mesh.apply_adjoint(&mut v);
                }
                Randomization::Phase => {
                    setup.mesh.apply(&mut v);
                    for (x, ph) in v.iter_mut().zip(&setup.phases) {
                        let offset: f64 = config.sigma * rng.sample::<f64, _>(StandardNormal);
                        *x *= ph * Complex64::from_polar(1.0, offset);
                    }
                    setup.mesh.apply_adjoint(&mut v);
                }
                Randomization::Transmissivity => {
                    let mesh = setup.perturbed_mesh(config.sigma, &mut rng);
                    mesh.apply(&mut v);
                    v.iter_mut().zip(&setup.phases).for_each(|(x, ph)| *x *= ph);
                    mesh.apply_adjoint(&mut v);
                }
            }
            v.iter().map(|x| x.norm_sqr()).collect()
        })
        .collect();
    Ok(WalkResult { mean: average(&realizations, n), realizations })
}

fn classical_traverse(mesh: &MeshNetwork, pop: &mut [f64]) {
    for el in &mesh.elements {
        if let MeshElement::BeamSplitter { i, j, theta, .. } = *el {
            let (s, c) = theta.sin_cos();
            let (c2, s2) = (c * c, s * s);
            let (a, b) = (pop[i], pop[j]);
            pop[i] = c2 * a + s2 * b;
            pop[j] = s2 * a + c2 * b;
        }
    }
}

/// Walk with all inter-mode coherences discarded after every beamsplitter.
///
/// Each realization builds its walk unitary exactly as [`run_walk`] does,
/// factors it into a triangular mesh and pushes populations through the
/// squared magnitudes of every beamsplitter. Phase shifters leave populations
/// unchanged.
pub fn run_classical_walk(config: &WalkConfig, basis: &CouplingBasis, beta: &BetaSpectrum) -> Result<Vec<f64>> {
    let setup = WalkSetup::new(config, basis, beta)?;
    let n = config.n;
    let realizations: Vec<Result<Vec<f64>>> = (0..config.realizations as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(config.seed, k);
            let (mesh, phases) = match config.randomization {
                Randomization::None => (setup.mesh.clone(), setup.phases.clone()),
                Randomization::Phase => {
                    let phases = setup
                        .phases
                        .iter()
                        .map(|ph| {
                            let offset: f64 = config.sigma * rng.sample::<f64, _>(StandardNormal);
                            ph * Complex64::from_polar(1.0, offset)
                        })
                        .collect();
                    (setup.mesh.clone(), phases)
                }
                Randomization::Transmissivity => (setup.perturbed_mesh(config.sigma, &mut rng), setup.phases.clone()),
            };
            let p = reck_compose(&mesh);
            let mut right = p.clone();
            for (l, mut row) in right.row_iter_mut().enumerate() {
                row *= phases[l];
            }
            let u = p.adjoint() * right;
            let walk_mesh = reck_decompose(&u)?;
            let mut pop = vec![0.0; n];
            pop[setup.source] = 1.0;
            classical_traverse(&walk_mesh, &mut pop);
            Ok(pop)
        })
        .collect();
    let realizations = realizations.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(average(&realizations, n))
}
