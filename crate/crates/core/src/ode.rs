//! Adaptive Dormand–Prince 5(4) integration for real-valued systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-9, atol: 1e-12, max_steps: 5_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

fn combine(y: &[f64], k: &[Vec<f64>], coeffs: &[f64], h: f64, out: &mut [f64]) {
    out.copy_from_slice(y);
    for (kk, c) in k.iter().zip(coeffs) {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(kk) {
                *o += h * c * v;
            }
        }
    }
}

/// Integrates `dy/dt = f(t, y)` from `t0` and returns the state at every time
/// in `outputs` (non-decreasing, all `>= t0`). Steps are clipped so each
/// output time is hit exactly.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], outputs: &[f64], tol: Tolerance) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().is_some_and(|t| *t < t0) {
        return Err(Error::Integration("output times must be non-decreasing and >= t0".into()));
    }
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut stage = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];
    let mut y4 = vec![0.0; dim];
    let mut out = Vec::with_capacity(outputs.len());

    let span = outputs.last().map_or(0.0, |t1| t1 - t0);
    let mut h = if span > 0.0 { (span * 1e-3).min(1e-2) } else { 1e-2 };
    let mut steps = 0usize;
    f(t, &y, &mut k[0]);

    for &target in outputs {
        while t < target {
            steps += 1;
            if steps > tol.max_steps {
                return Err(Error::Integration(format!("exceeded {} steps at t = {t}", tol.max_steps)));
            }
            let step = h.min(target - t);
            for s in 1..7 {
                combine(&y, &k[..s], &A[s][..s], step, &mut stage);
                f(t + C[s] * step, &stage, &mut k[s]);
            }
            combine(&y, &k, &B5, step, &mut y5);
            combine(&y, &k, &B4, step, &mut y4);
            let mut err = 0.0f64;
            for i in 0..dim {
                let scale = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
                let e = (y5[i] - y4[i]) / scale;
                err += e * e;
            }
            let err = if dim > 0 { (err / dim as f64).sqrt() } else { 0.0 };
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite error estimate at t = {t}")));
            }
            if err <= 1.0 {
                t = if step == target - t { target } else { t + step };
                y.copy_from_slice(&y5);
                // FSAL: the last stage is the derivative at the new point
                let last = k[6].clone();
                k[0] = last;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if step == h || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).max(0.1);
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let ys = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            &times,
            Tolerance::default(),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t = {t}");
            assert!((y[1] + t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn exponential_decay_with_repeated_outputs() {
        let ys = integrate(|_, y, dy| dy[0] = -3.0 * y[0], 0.0, &[2.0], &[0.0, 1.0, 1.0, 2.0], Tolerance::default())
            .unwrap();
        assert_eq!(ys[0][0], 2.0);
        assert!((ys[1][0] - 2.0 * (-3.0f64).exp()).abs() < 1e-10);
        assert_eq!(ys[1], ys[2]);
        assert!((ys[3][0] - 2.0 * (-6.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn rejects_unsorted_outputs() {
        assert!(integrate(|_, _, dy| dy[0] = 0.0, 0.0, &[0.0], &[1.0, 0.5], Tolerance::default()).is_err());
    }
}
