//! Time evolution of Gaussian moments.

use nalgebra::{DMatrix, DVector};

use super::{steady_state, CovarianceState, DriftDiffusion};
use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::ode::{integrate, Tolerance};

/// Spectral abscissa below which the closed-form route is taken.
const EXPONENTIAL_ROUTE_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvolutionMethod {
    /// Closed form when `A` is safely Hurwitz, otherwise adaptive integration.
    #[default]
    Auto,
    /// `V(t) = e^{At}(V₀ − V_ss)e^{Aᵀt} + V_ss`; requires Hurwitz `A`.
    Exponential,
    /// Dormand–Prince integration of the moment equations.
    Integrate,
}

/// Evolves `v0` to every time in `times` (strictly increasing, `>= 0`).
pub fn evolve_covariance(dd: &DriftDiffusion, v0: &CovarianceState, times: &[f64]) -> Result<Vec<CovarianceState>> {
    evolve_covariance_with(dd, v0, times, EvolutionMethod::Auto)
}

pub fn evolve_covariance_with(
    dd: &DriftDiffusion,
    v0: &CovarianceState,
    times: &[f64],
    method: EvolutionMethod,
) -> Result<Vec<CovarianceState>> {
    if v0.layout != dd.layout {
        return Err(Error::param("initial state layout does not match the drift matrix"));
    }
    if times.first().is_some_and(|t| !(*t >= 0.0)) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("sample times must be strictly increasing and start at t >= 0"));
    }
    let method = match method {
        EvolutionMethod::Auto if dd.spectral_abscissa() < -EXPONENTIAL_ROUTE_MARGIN => EvolutionMethod::Exponential,
        EvolutionMethod::Auto => EvolutionMethod::Integrate,
        m => m,
    };
    match method {
        EvolutionMethod::Exponential => evolve_exponential(dd, v0, times),
        _ => evolve_integrate(dd, v0, times),
    }
}

fn evolve_exponential(dd: &DriftDiffusion, v0: &CovarianceState, times: &[f64]) -> Result<Vec<CovarianceState>> {
    let vss = steady_state(dd)?.v;
    let dv = &v0.v - &vss;
    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(v0.clone());
            }
            let e = (&dd.a * t).exp();
            let v = &e * &dv * e.transpose() + &vss;
            let v = (&v + v.transpose()) * 0.5;
            let mean = &e * &v0.mean;
            check_finite(&v, t)?;
            Ok(CovarianceState { layout: v0.layout, v, mean })
        })
        .collect()
}

fn evolve_integrate(dd: &DriftDiffusion, v0: &CovarianceState, times: &[f64]) -> Result<Vec<CovarianceState>> {
    let dim = dd.layout.dim();
    let mut y0 = v0.v.as_slice().to_vec();
    y0.extend(v0.mean.iter());
    let a = &dd.a;
    let d = &dd.d;
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let v = DMatrix::from_column_slice(dim, dim, &y[..dim * dim]);
        let m = DVector::from_column_slice(&y[dim * dim..]);
        let av = a * &v;
        let dv = &av + av.transpose() + d;
        dy[..dim * dim].copy_from_slice(dv.as_slice());
        dy[dim * dim..].copy_from_slice((a * m).as_slice());
    };
    let ys = integrate(rhs, 0.0, &y0, times, Tolerance::default())?;
    ys.into_iter()
        .zip(times)
        .map(|(y, &t)| {
            let v = DMatrix::from_column_slice(dim, dim, &y[..dim * dim]);
            let v = (&v + v.transpose()) * 0.5;
            check_finite(&v, t)?;
            Ok(CovarianceState { layout: v0.layout, v, mean: DVector::from_column_slice(&y[dim * dim..]) })
        })
        .collect()
}

fn check_finite(v: &RMatrix, t: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration(format!("covariance became non-finite at t = {t}")))
    }
}

/// Exact one-step map of the moment equations over a fixed interval `dt`.
///
/// `V ↦ E V Eᵀ + Q` and `m ↦ E m` with `E = e^{A dt}` and the noise integral
/// `Q = ∫₀^dt e^{As} D e^{Aᵀs} ds` obtained from one block exponential. No
/// stability assumption on `A`.
#[derive(Debug, Clone)]
pub struct MomentPropagator {
    pub dt: f64,
    e: RMatrix,
    q: RMatrix,
}

impl MomentPropagator {
    pub fn new(dd: &DriftDiffusion, dt: f64) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::param(format!("propagation step must be finite and >= 0, got {dt}")));
        }
        let n = dd.layout.dim();
        let mut big = DMatrix::zeros(2 * n, 2 * n);
        big.view_mut((0, 0), (n, n)).copy_from(&(-&dd.a * dt));
        big.view_mut((0, n), (n, n)).copy_from(&(&dd.d * dt));
        big.view_mut((n, n), (n, n)).copy_from(&(dd.a.transpose() * dt));
        let f = big.exp();
        let f12 = f.view((0, n), (n, n)).into_owned();
        let f22 = f.view((n, n), (n, n)).into_owned();
        let q = f22.transpose() * f12;
        let q = (&q + q.transpose()) * 0.5;
        Ok(MomentPropagator { dt, e: f22.transpose(), q })
    }

    pub fn step(&self, state: &CovarianceState) -> CovarianceState {
        let v = &self.e * &state.v * self.e.transpose() + &self.q;
        CovarianceState { layout: state.layout, v: (&v + v.transpose()) * 0.5, mean: &self.e * &state.mean }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::tests::fig5_params;
    use crate::gaussian::{build_drift_diffusion, occupations, CouplingModel};
    use crate::linalg::max_abs;
    use crate::modes::build_basis;
    use crate::params::SystemParams;

    #[test]
    fn zero_time_returns_initial_state() {
        let params = fig5_params(20.0, 6);
        let basis = build_basis(20).unwrap();
        let dd = build_drift_diffusion(&params, &basis, CouplingModel::Optical).unwrap();
        let v0 = CovarianceState::thermal(dd.layout, &params.nbar).unwrap();
        let out = evolve_covariance(&dd, &v0, &[0.0, 1.0]).unwrap();
        assert_eq!(out[0], v0);
    }

    #[test]
    fn decoupled_relaxation_matches_exponential() {
        let mut params = SystemParams::uniform(3, 0.05, 1.0, -1.0, 4.0).unwrap();
        params.nbar = vec![4.0, 1.0, 0.0];
        let basis = build_basis(3).unwrap();
        let dd = build_drift_diffusion(&params, &basis, CouplingModel::Optical).unwrap();
        let v0 = CovarianceState::thermal(dd.layout, &[0.0, 3.0, 2.0]).unwrap();
        let times = [0.5, 2.0, 10.0, 40.0];
        for method in [EvolutionMethod::Exponential, EvolutionMethod::Integrate] {
            let out = evolve_covariance_with(&dd, &v0, &times, method).unwrap();
            for (s, t) in out.iter().zip(times) {
                let n = occupations(s);
                for j in 0..3 {
                    let start = [0.0, 3.0, 2.0][j];
                    let expected = params.nbar[j] + (start - params.nbar[j]) * (-2.0 * 0.05 * t).exp();
                    assert!((n[j] - expected).abs() < 1e-8, "{method:?} t={t} j={j}");
                }
            }
        }
    }

    #[test]
    fn exponential_and_integration_agree_on_fig5_system() {
        let params = fig5_params(20.0, 6);
        let basis = build_basis(20).unwrap();
        let dd = build_drift_diffusion(&params, &basis, CouplingModel::Optical).unwrap();
        let v0 = CovarianceState::thermal(dd.layout, &params.nbar).unwrap();
        let times: Vec<f64> = (1..=10).map(|k| k as f64 * 2.0).collect();
        let a = evolve_covariance_with(&dd, &v0, &times, EvolutionMethod::Exponential).unwrap();
        let b = evolve_covariance_with(&dd, &v0, &times, EvolutionMethod::Integrate).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(max_abs(&(&x.v - &y.v)) < 1e-6);
        }
    }

    #[test]
    fn long_time_limit_is_steady_state() {
        let mut params = SystemParams::uniform(4, 0.02, 2.0, -1.0, 3.0)
            .unwrap()
            .with_coupling(1, num_complex::Complex64::new(0.2, 0.1))
            .unwrap();
        params.nbar[1] = 8.0;
        let basis = build_basis(4).unwrap();
        let dd = build_drift_diffusion(&params, &basis, CouplingModel::Optical).unwrap();
        let vss = steady_state(&dd).unwrap();
        let v0 = CovarianceState::thermal(dd.layout, &[0.0; 4]).unwrap();
        let t = 10.0 / dd.slowest_rate();
        let out = evolve_covariance(&dd, &v0, &[t]).unwrap();
        assert!(max_abs(&(&out[0].v - &vss.v)) < 1e-6);
    }

    #[test]
    fn propagator_steps_match_closed_form() {
        let params = SystemParams::uniform(3, 0.01, 0.3, -1.0, 2.0)
            .unwrap()
            .with_coupling(1, num_complex::Complex64::new(0.1, 0.0))
            .unwrap();
        let basis = build_basis(3).unwrap();
        let dd = build_drift_diffusion(&params, &basis, CouplingModel::Optical).unwrap();
        let mut s = CovarianceState::single_excitation(dd.layout, 0).unwrap();
        s.mean[0] = 0.7;
        let exact = evolve_covariance(&dd, &s, &[5.0]).unwrap();
        let prop = MomentPropagator::new(&dd, 0.5).unwrap();
        let mut x = s.clone();
        for _ in 0..10 {
            x = prop.step(&x);
        }
        assert!(max_abs(&(&x.v - &exact[0].v)) < 1e-10);
        assert!((&x.mean - &exact[0].mean).amax() < 1e-10);
    }

    #[test]
    fn rejects_bad_grids() {
        let params = SystemParams::uniform(2, 0.01, 1.0, -1.0, 0.0).unwrap();
        let basis = build_basis(2).unwrap();
        let dd = build_drift_diffusion(&params, &basis, CouplingModel::Optical).unwrap();
        let v0 = CovarianceState::vacuum(dd.layout);
        assert!(evolve_covariance(&dd, &v0, &[1.0, 1.0]).is_err());
        assert!(evolve_covariance(&dd, &v0, &[-1.0]).is_err());
    }
}
