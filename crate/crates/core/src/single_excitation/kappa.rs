//! Matching the input drive across a step in the optical linewidth.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{integrate, Tolerance};

/// Input amplitude after the linewidth changes from `kappa0` to `kappa1` that
/// keeps the steady intracavity amplitude `√(2κ)α/(iΔ − κ)` unchanged.
pub fn kappa_switch_amplitude(alpha0: Complex64, kappa0: f64, kappa1: f64, delta: f64) -> Result<Complex64> {
    check_rates(kappa0, kappa1)?;
    let i = Complex64::i();
    Ok(alpha0 * (kappa0 / kappa1).sqrt() * (i * delta - kappa1) / (i * delta - kappa0))
}

fn check_rates(kappa0: f64, kappa1: f64) -> Result<()> {
    if !(kappa0 > 0.0 && kappa1 > 0.0) || !kappa0.is_finite() || !kappa1.is_finite() {
        return Err(Error::param(format!("linewidths must be positive, got {kappa0} and {kappa1}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaSwitchReport {
    pub switch_time: f64,
    pub end_time: f64,
    /// Intracavity amplitude magnitude reached before the switch.
    pub reference: f64,
    /// `max ||α(t)| − reference|` over samples after the initial transient.
    pub max_deviation: f64,
    pub times: Vec<f64>,
    pub amplitude: Vec<Complex64>,
}

/// Integrates `dα/dt = (iΔ − κ)α − √(2κ) α_in` from an empty cavity with
/// `(κ₀, α₀)` up to the switch time `30/κ₀` and `(κ₁, α₁)` for a further
/// `30/κ₁`, then measures how far `|α|` strays from its pre-switch value once
/// the initial transient has decayed.
pub fn simulate_kappa_switch(
    alpha0: Complex64,
    alpha1: Complex64,
    kappa0: f64,
    kappa1: f64,
    delta: f64,
    samples_per_phase: usize,
) -> Result<KappaSwitchReport> {
    check_rates(kappa0, kappa1)?;
    let samples = samples_per_phase.max(2);
    let switch_time = 30.0 / kappa0;
    let end_time = switch_time + 30.0 / kappa1;
    let tol = Tolerance { rtol: 1e-11, atol: 1e-14, ..Tolerance::default() };

    let piece = |kappa: f64, drive: Complex64| {
        let c = (2.0 * kappa).sqrt() * drive;
        move |_t: f64, y: &[f64], dy: &mut [f64]| {
            let a = Complex64::new(y[0], y[1]);
            let d = (Complex64::new(-kappa, delta)) * a - c;
            dy[0] = d.re;
            dy[1] = d.im;
        }
    };

    let first: Vec<f64> = (0..=samples).map(|k| switch_time * k as f64 / samples as f64).collect();
    let ys0 = integrate(piece(kappa0, alpha0), 0.0, &[0.0, 0.0], &first, tol)?;
    let at_switch = ys0.last().expect("non-empty grid").clone();
    let second: Vec<f64> =
        (1..=samples).map(|k| switch_time + (end_time - switch_time) * k as f64 / samples as f64).collect();
    let ys1 = integrate(piece(kappa1, alpha1), switch_time, &at_switch, &second, tol)?;

    let times: Vec<f64> = first.iter().chain(&second).copied().collect();
    let amplitude: Vec<Complex64> = ys0.iter().chain(&ys1).map(|y| Complex64::new(y[0], y[1])).collect();
    let reference = Complex64::new(at_switch[0], at_switch[1]).norm();
    let settle = 20.0 / kappa0;
    let max_deviation = times
        .iter()
        .zip(&amplitude)
        .filter(|(t, _)| **t >= settle)
        .map(|(_, a)| (a.norm() - reference).abs())
        .fold(0.0, f64::max);
    Ok(KappaSwitchReport { switch_time, end_time, reference, max_deviation, times, amplitude })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let a0 = Complex64::new(0.3, -0.4);
        assert!((kappa_switch_amplitude(a0, 0.7, 0.7, 1.3).unwrap() - a0).norm() < 1e-15);
        let a1 = kappa_switch_amplitude(a0, 0.5, 2.0, 0.0).unwrap();
        assert!((a1 - a0 * 2.0).norm() < 1e-15);
        assert!(kappa_switch_amplitude(a0, 0.0, 1.0, 0.0).is_err());
        assert!(kappa_switch_amplitude(a0, 1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn matched_drive_keeps_field_constant() {
        let a0 = Complex64::new(1.0, 0.0);
        let (k0, k1, delta) = (0.2, 1.5, 0.4);
        let a1 = kappa_switch_amplitude(a0, k0, k1, delta).unwrap();
        let rep = simulate_kappa_switch(a0, a1, k0, k1, delta, 400).unwrap();
        assert!(rep.max_deviation < 1e-6 * rep.reference.max(1.0), "{}", rep.max_deviation);
        let wrong = simulate_kappa_switch(a0, a0, k0, k1, delta, 400).unwrap();
        assert!(wrong.max_deviation > 1e-2);
    }
}
