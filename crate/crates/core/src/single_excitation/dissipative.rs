//! Comparison of the unitary single-excitation picture with the full damped
//! linearized model.

use num_complex::Complex64;

use super::{run_schedule, AmplitudeState, Schedule};
use crate::error::{Error, Result};
use crate::gaussian::{build_drift_diffusion, CouplingModel, CovarianceState, MomentPropagator};
use crate::modes::CouplingBasis;
use crate::params::SystemParams;

/// Spectral weight at twice the mechanical frequency above which the report
/// flags counter-rotating content.
pub const COUNTER_ROTATING_THRESHOLD: f64 = 5e-3;

/// Linewidth from which on the rotating-wave comparison is flagged as doubtful.
const GOOD_CAVITY_KAPPA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativeParams {
    pub kappa: f64,
    pub gamma: f64,
    /// Bath occupation of every mechanical element.
    pub nbar: f64,
    /// Target sampling step; each segment is split into equal steps no longer than this.
    pub dt: f64,
}

impl Default for DissipativeParams {
    fn default() -> Self {
        DissipativeParams { kappa: 1e-3, gamma: 1e-6, nbar: 0.0, dt: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeReport {
    pub times: Vec<f64>,
    /// Occupations from the moment equations, in amplitude order (optics first).
    pub moment_populations: Vec<Vec<f64>>,
    /// `|amplitude|²` from the unitary trajectory, same layout.
    pub unitary_populations: Vec<Vec<f64>>,
    /// Per sample, the largest absolute difference over all modes.
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
    /// Largest DFT amplitude of any mode's deviation at twice the mechanical frequency.
    pub counter_rotating_amplitude: f64,
    pub counter_rotating: bool,
    pub good_cavity_warning: bool,
}

/// Runs `schedule` from a phonon on element `phonon` (1-based) both through
/// [`run_schedule`] and through the damped moment equations with every
/// optical mode on the red sideband.
///
/// The moment model uses `conj(g_l)` so that its rotating-wave part matches
/// `Λ = i conj(g) ε`.
pub fn dissipative_check(
    basis: &CouplingBasis,
    schedule: &Schedule,
    phonon: usize,
    params: &DissipativeParams,
) -> Result<DissipativeReport> {
    let n = basis.n();
    schedule.validate(n)?;
    if !(params.dt > 0.0 && params.dt.is_finite()) {
        return Err(Error::param("sampling step must be positive"));
    }
    let good_cavity_warning = params.kappa >= GOOD_CAVITY_KAPPA;
    if good_cavity_warning {
        log::warn!("dissipative check with kappa = {} is outside the good-cavity regime", params.kappa);
    }
    let initial = AmplitudeState::phonon(n, phonon)?;

    let mut times = vec![0.0];
    let mut moment_populations = Vec::new();
    let base = SystemParams::uniform(n, params.gamma, params.kappa, -1.0, params.nbar)?;
    let layout = crate::gaussian::QuadratureLayout::full(n);
    let mut state = CovarianceState::single_excitation(layout, phonon - 1)?;
    moment_populations.push(reorder(&state.mode_occupations(), n));

    let mut start = 0.0;
    for seg in &schedule.segments {
        if seg.duration == 0.0 {
            continue;
        }
        let mut p = base.clone();
        p.g = seg.g.iter().map(Complex64::conj).collect();
        let dd = build_drift_diffusion(&p, basis, CouplingModel::Optical)?;
        let steps = (seg.duration / params.dt).ceil().max(1.0) as usize;
        let prop = MomentPropagator::new(&dd, seg.duration / steps as f64)?;
        for k in 1..=steps {
            state = prop.step(&state);
            times.push(if k == steps { start + seg.duration } else { start + seg.duration * k as f64 / steps as f64 });
            moment_populations.push(reorder(&state.mode_occupations(), n));
        }
        start += seg.duration;
    }

    let traj = run_schedule(basis, schedule, &initial, &times)?;
    let unitary_populations: Vec<Vec<f64>> = traj.states.iter().map(AmplitudeState::populations).collect();
    let deviation: Vec<f64> = moment_populations
        .iter()
        .zip(&unitary_populations)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .collect();
    let max_deviation = deviation.iter().copied().fold(0.0, f64::max);

    let counter_rotating_amplitude = (0..2 * n - 1)
        .map(|m| {
            let signal: Vec<f64> =
                moment_populations.iter().zip(&unitary_populations).map(|(a, b)| a[m] - b[m]).collect();
            dft_amplitude(&times, &signal, 2.0)
        })
        .fold(0.0, f64::max);

    Ok(DissipativeReport {
        times,
        moment_populations,
        unitary_populations,
        deviation,
        max_deviation,
        counter_rotating_amplitude,
        counter_rotating: counter_rotating_amplitude > COUNTER_ROTATING_THRESHOLD,
        good_cavity_warning,
    })
}

/// Mechanics-first occupations to optics-first amplitude order.
fn reorder(occ: &[f64], n: usize) -> Vec<f64> {
    occ[n..].iter().chain(&occ[..n]).copied().collect()
}

/// `|(2/T) ∫ s(t) e^{−iωt} dt|` by the trapezoidal rule.
fn dft_amplitude(times: &[f64], signal: &[f64], omega: f64) -> f64 {
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    if span <= 0.0 {
        return 0.0;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..times.len() {
        let h = times[k] - times[k - 1];
        let f0 = signal[k - 1] * Complex64::from_polar(1.0, -omega * times[k - 1]);
        let f1 = signal[k] * Complex64::from_polar(1.0, -omega * times[k]);
        acc += (f0 + f1) * (0.5 * h);
    }
    2.0 * acc.norm() / span
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::build_basis;
    use crate::single_excitation::Segment;
    use std::f64::consts::PI;

    fn rabi_schedule(omega: f64) -> Schedule {
        Schedule::new(vec![Segment {
            g: vec![Complex64::new(omega, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
            duration: 2.0 * PI / omega,
        }])
    }

    #[test]
    fn good_cavity_agrees_and_bad_cavity_does_not() {
        let basis = build_basis(4).unwrap();
        let sched = rabi_schedule(0.1);
        let good = dissipative_check(&basis, &sched, 1, &DissipativeParams::default()).unwrap();
        assert!(good.max_deviation < 0.05, "{}", good.max_deviation);
        assert!(!good.good_cavity_warning);
        let bad = DissipativeParams { kappa: 0.5, ..DissipativeParams::default() };
        let bad = dissipative_check(&basis, &sched, 1, &bad).unwrap();
        assert!(bad.max_deviation > 0.05);
        assert!(bad.good_cavity_warning);
    }

    #[test]
    fn dft_picks_out_frequency() {
        let times: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.01).collect();
        let s: Vec<f64> = times.iter().map(|t| 0.3 * (2.0 * t).cos()).collect();
        assert!((dft_amplitude(&times, &s, 2.0) - 0.3).abs() < 5e-3);
    }
}
