//! Physical configuration of an array.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Physical configuration of an `n`-element array with `n - 1` optical modes.
///
/// Frequencies and rates are in units of the mechanical frequency `omega`,
/// which is always one. `delta[l]` is the detuning of optical mode `l + 1`
/// with the red mechanical sideband at `delta = -omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub n: usize,
    pub omega: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub delta: Vec<f64>,
    pub g: Vec<Complex64>,
    pub nbar: Vec<f64>,
}

impl SystemParams {
    pub fn new(n: usize, gamma: f64, kappa: f64, delta: Vec<f64>, g: Vec<Complex64>, nbar: Vec<f64>) -> Result<Self> {
        let params = SystemParams { n, omega: 1.0, gamma, kappa, delta, g, nbar };
        params.validate()?;
        Ok(params)
    }

    /// Uniform detunings and bath occupations, all couplings off.
    pub fn uniform(n: usize, gamma: f64, kappa: f64, delta: f64, nbar: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("array size must be at least 2, got {n}")));
        }
        Self::new(n, gamma, kappa, vec![delta; n - 1], vec![Complex64::new(0.0, 0.0); n - 1], vec![nbar; n])
    }

    pub fn with_coupling(mut self, l: usize, g: Complex64) -> Result<Self> {
        if l == 0 || l >= self.n {
            return Err(Error::param(format!("optical mode index {l} out of range 1..={}", self.n - 1)));
        }
        self.g[l - 1] = g;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param(format!("array size must be at least 2, got {}", self.n)));
        }
        if self.omega != 1.0 {
            return Err(Error::param("mechanical frequency is the unit and must equal 1"));
        }
        let modes = self.n - 1;
        if self.delta.len() != modes {
            return Err(Error::param(format!("expected {modes} detunings, got {}", self.delta.len())));
        }
        if self.g.len() != modes {
            return Err(Error::param(format!("expected {modes} coupling amplitudes, got {}", self.g.len())));
        }
        if self.nbar.len() != self.n {
            return Err(Error::param(format!("expected {} bath occupations, got {}", self.n, self.nbar.len())));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::param(format!("kappa must be finite and > 0, got {}", self.kappa)));
        }
        if let Some(x) = self.nbar.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::param(format!("bath occupations must be >= 0, got {x}")));
        }
        if self.delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::param("detunings must be finite"));
        }
        if self.g.iter().any(|g| !(g.re.is_finite() && g.im.is_finite())) {
            return Err(Error::param("coupling amplitudes must be finite"));
        }
        Ok(())
    }
}
