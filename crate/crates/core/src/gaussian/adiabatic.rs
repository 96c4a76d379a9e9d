//! Adiabatic elimination of fast optical modes and its cross-check against
//! the full linearized model.

use nalgebra::DVector;
use num_complex::Complex64;

use super::{build_drift_diffusion, CouplingModel, QuadratureLayout};
use crate::error::{Error, Result};
use crate::interferometer::beta_coefficient;
use crate::modes::CouplingBasis;
use crate::params::SystemParams;

/// Largest `|g|` accepted by [`elimination_crosscheck`].
pub const CROSSCHECK_MAX_COUPLING: f64 = 0.05;
/// Smallest `κ` accepted by [`elimination_crosscheck`].
pub const CROSSCHECK_MIN_KAPPA: f64 = 10.0;

/// Effective frequency shift and optical cooling/heating rates of the
/// collective mechanical mode attached to one optical mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticRates {
    pub freq_shift: f64,
    pub rate_cool: f64,
    pub rate_heat: f64,
}

impl AdiabaticRates {
    /// Net optical damping of the mean amplitude, `Γ_cool − Γ_heat`.
    pub fn net_damping(&self) -> f64 {
        self.rate_cool - self.rate_heat
    }
}

pub fn adiabatic_rates(g: Complex64, delta: f64, kappa: f64) -> AdiabaticRates {
    let g2 = g.norm_sqr();
    let omega = 1.0;
    AdiabaticRates {
        freq_shift: beta_coefficient(g, delta, kappa),
        rate_cool: g2 * kappa / ((delta + omega).powi(2) + kappa * kappa),
        rate_heat: g2 * kappa / ((delta - omega).powi(2) + kappa * kappa),
    }
}

/// Comparison of the eliminated dynamics with the full model.
///
/// Rates are energy decay rates of the bright collective mode, i.e. twice
/// the amplitude damping: the prediction is `2γ + 2(Γ_cool − Γ_heat)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosscheckReport {
    /// Optical mode whose bright mechanical mode was tracked (1-based).
    pub mode: usize,
    pub rates: AdiabaticRates,
    pub predicted_decay_rate: f64,
    /// Fitted from the stroboscopically sampled mean amplitude.
    pub fitted_decay_rate: f64,
    /// From the drift eigenvalue closest to the bare mechanical one.
    pub eigen_decay_rate: f64,
    pub decay_discrepancy: f64,
    pub predicted_frequency: f64,
    pub fitted_frequency: f64,
    pub frequency_discrepancy: f64,
    /// `fitted_decay_rate / 2 − γ`.
    pub fitted_net_damping: f64,
    pub samples: usize,
}

/// Fits decay rate and frequency of the bright mechanical mode's mean
/// amplitude in the full model and compares them with [`adiabatic_rates`].
///
/// At most one optical mode may be driven. The mean is sampled at multiples
/// of the mechanical period, which removes the counter-rotating ripple, over
/// a window long enough for the predicted energy to decay by about `e`.
pub fn elimination_crosscheck(params: &SystemParams, basis: &CouplingBasis) -> Result<CrosscheckReport> {
    params.validate()?;
    if params.kappa < CROSSCHECK_MIN_KAPPA {
        return Err(Error::param(format!(
            "elimination cross-check needs kappa >= {CROSSCHECK_MIN_KAPPA}, got {}",
            params.kappa
        )));
    }
    if let Some(g) = params.g.iter().find(|g| g.norm() > CROSSCHECK_MAX_COUPLING) {
        return Err(Error::param(format!(
            "elimination cross-check needs |g| <= {CROSSCHECK_MAX_COUPLING}, got {}",
            g.norm()
        )));
    }
    let active: Vec<usize> = (0..params.n - 1).filter(|&l| params.g[l].norm() > 0.0).collect();
    if active.len() > 1 {
        return Err(Error::param("elimination cross-check supports a single driven optical mode"));
    }
    let l = active.first().copied().unwrap_or(0);
    let rates = adiabatic_rates(params.g[l], params.delta[l], params.kappa);
    let predicted_decay_rate = 2.0 * params.gamma + 2.0 * rates.net_damping();
    let predicted_frequency = params.omega + rates.freq_shift;

    let dd = build_drift_diffusion(params, basis, CouplingModel::Optical)?;
    let layout = dd.layout;
    let eps = basis.epsilon_row(l + 1);
    let mut mean = DVector::zeros(layout.dim());
    for j in 0..params.n {
        mean[layout.mech_x(j)] = std::f64::consts::SQRT_2 * eps[j];
    }
    let bright = |m: &DVector<f64>| bright_amplitude(m, &eps, &layout);

    let period = 2.0 * std::f64::consts::PI / params.omega;
    let window = if predicted_decay_rate > 0.0 { 1.0 / predicted_decay_rate } else { 1e4 };
    let samples = ((window / period).ceil() as usize).clamp(200, 4_000_000);
    let settle = ((10.0 / params.kappa) / period).ceil() as usize;
    let step = (&dd.a * period).exp();

    let mut ts = Vec::with_capacity(samples);
    let mut log_energy = Vec::with_capacity(samples);
    let mut phase = Vec::with_capacity(samples);
    let mut last_phase = 0.0;
    let mut offset = 0.0;
    for k in 0..settle + samples {
        if k >= settle {
            let c = bright(&mean);
            let raw = c.arg();
            if k > settle {
                let mut jump = raw - last_phase;
                while jump > std::f64::consts::PI {
                    jump -= 2.0 * std::f64::consts::PI;
                    offset -= 2.0 * std::f64::consts::PI;
                }
                while jump < -std::f64::consts::PI {
                    jump += 2.0 * std::f64::consts::PI;
                    offset += 2.0 * std::f64::consts::PI;
                }
            }
            last_phase = raw;
            ts.push(k as f64 * period);
            log_energy.push(c.norm_sqr().ln());
            phase.push(raw + offset);
        }
        mean = &step * mean;
    }
    if log_energy.iter().any(|x| !x.is_finite()) {
        return Err(Error::Fit("bright-mode amplitude vanished during the fit window".into()));
    }
    let fitted_decay_rate = -linear_slope(&ts, &log_energy)?;
    // b ~ exp(−iω't) sampled at multiples of 2π/ω
    let fitted_frequency = params.omega - linear_slope(&ts, &phase)?;

    // dark mechanical modes keep the bare damping exactly; the bright one is
    // the near-mechanical eigenvalue that moved furthest from it
    let eigen_decay_rate = dd
        .eigenvalues()
        .into_iter()
        .filter(|z| (z.im.abs() - params.omega).abs() < 0.5 * params.omega && z.re > -0.5 * params.kappa)
        .max_by(|a, b| (a.re + params.gamma).abs().total_cmp(&(b.re + params.gamma).abs()))
        .map(|z| -2.0 * z.re)
        .unwrap_or(f64::NAN);

    let decay_discrepancy = relative(fitted_decay_rate, predicted_decay_rate);
    let frequency_discrepancy = if rates.freq_shift == 0.0 {
        (fitted_frequency - predicted_frequency).abs()
    } else {
        ((fitted_frequency - params.omega) - rates.freq_shift).abs() / rates.freq_shift.abs()
    };
    Ok(CrosscheckReport {
        mode: l + 1,
        rates,
        predicted_decay_rate,
        fitted_decay_rate,
        eigen_decay_rate,
        decay_discrepancy,
        predicted_frequency,
        fitted_frequency,
        frequency_discrepancy,
        fitted_net_damping: fitted_decay_rate / 2.0 - params.gamma,
        samples,
    })
}

fn bright_amplitude(mean: &DVector<f64>, eps: &DVector<f64>, layout: &QuadratureLayout) -> Complex64 {
    let mut c = Complex64::new(0.0, 0.0);
    for j in 0..layout.n_mech {
        c += eps[j] * Complex64::new(mean[layout.mech_x(j)], mean[layout.mech_p(j)]);
    }
    c / std::f64::consts::SQRT_2
}

fn relative(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs()
    }
}

/// Least-squares slope of `y` against `x`.
fn linear_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return Err(Error::Fit("need at least two samples".into()));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("degenerate sample times".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::build_basis;

    #[test]
    fn rate_examples() {
        let r = adiabatic_rates(Complex64::new(0.0, 0.0), -1.0, 2.0);
        assert_eq!((r.freq_shift, r.rate_cool, r.rate_heat), (0.0, 0.0, 0.0));
        for kappa in [0.5, 3.0, 17.0] {
            let r = adiabatic_rates(Complex64::new(0.2, 0.1), -1.0, kappa);
            assert!((r.rate_cool - 0.05 / kappa).abs() < 1e-15);
        }
        let r = adiabatic_rates(Complex64::new(0.3, 0.0), -1.0, 6.4);
        assert!((r.rate_heat - 1.2811e-2).abs() < 5e-7);
        assert_eq!(r.freq_shift, beta_coefficient(Complex64::new(0.3, 0.0), -1.0, 6.4));
        assert!(r.net_damping() > 0.0);
    }

    #[test]
    fn uncoupled_crosscheck_is_exact() {
        let params = SystemParams::uniform(2, 1e-3, 20.0, -1.0, 0.0).unwrap();
        let basis = build_basis(2).unwrap();
        let rep = elimination_crosscheck(&params, &basis).unwrap();
        assert!(rep.decay_discrepancy < 1e-9);
        assert!(rep.frequency_discrepancy < 1e-9);
    }

    #[test]
    fn red_detuning_cools() {
        let params = SystemParams::uniform(2, 0.0, 20.0, -1.0, 0.0)
            .unwrap()
            .with_coupling(1, Complex64::new(0.02, 0.0))
            .unwrap();
        let basis = build_basis(2).unwrap();
        let rep = elimination_crosscheck(&params, &basis).unwrap();
        assert!(rep.fitted_net_damping > 0.0);
        assert!(rep.decay_discrepancy < 0.1, "{rep:?}");
        assert!((rep.eigen_decay_rate - rep.fitted_decay_rate).abs() < 0.01 * rep.fitted_decay_rate);
    }

    #[test]
    fn rejects_out_of_regime() {
        let basis = build_basis(2).unwrap();
        let strong =
            SystemParams::uniform(2, 0.0, 20.0, -1.0, 0.0).unwrap().with_coupling(1, Complex64::new(0.2, 0.0)).unwrap();
        assert!(matches!(elimination_crosscheck(&strong, &basis), Err(Error::Parameter(_))));
        let narrow = SystemParams::uniform(2, 0.0, 2.0, -1.0, 0.0).unwrap();
        assert!(matches!(elimination_crosscheck(&narrow, &basis), Err(Error::Parameter(_))));
    }
}
