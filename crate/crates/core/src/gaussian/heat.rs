//! Heat injected at one element and its spread through the array.

use num_complex::Complex64;

use super::{build_drift_diffusion, evolve_covariance, steady_state, CouplingModel, CovarianceState, DriftDiffusion};
use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::modes::{build_basis, CouplingBasis};
use crate::params::SystemParams;

/// Upper bound on the default final sample time.
pub const T_MAX_CAP: f64 = 1e6;

/// Relative tolerance used when comparing occupation changes for ties.
const TIE_TOL: f64 = 1e-6;

/// Bisection steps used to refine a threshold crossing between samples.
const BISECTION_STEPS: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatConfig {
    /// Array and bath parameters; `nbar` holds the occupations before the
    /// excess is added.
    pub params: SystemParams,
    /// Hot element, 1-based.
    pub hot: usize,
    /// Excess bath and initial occupation of the hot element.
    pub dn: f64,
    pub model: CouplingModel,
    pub samples: usize,
    pub t_min: f64,
    /// Final sample time; `None` picks `10 / min |Re λ(A)|`, capped at [`T_MAX_CAP`].
    pub t_max: Option<f64>,
    /// Occupation increase that defines the rise time of an element.
    pub rise_threshold: f64,
    /// Elements with `|ε_{1,j}|` at or below this are excluded from the spread ratio.
    pub epsilon_cutoff: f64,
}

impl HeatConfig {
    /// Twenty elements, `γ = 5e-5`, `κ = 6.4`, `Δ = −1`, `g₁ = 0.3`, `n̄ = 10`,
    /// 20 extra quanta on element 6.
    pub fn standard(model: CouplingModel) -> Self {
        let params = SystemParams::uniform(20, 5e-5, 6.4, -1.0, 10.0)
            .and_then(|p| p.with_coupling(1, Complex64::new(0.3, 0.0)))
            .expect("standard heat parameters are valid");
        HeatConfig {
            params,
            hot: 6,
            dn: 20.0,
            model,
            samples: 200,
            t_min: 1.0,
            t_max: None,
            rise_threshold: 0.05,
            epsilon_cutoff: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let n = self.params.n;
        if self.hot == 0 || self.hot > n {
            return Err(Error::param(format!("hot element {} out of range 1..={n}", self.hot)));
        }
        if !(self.dn >= 0.0 && self.dn.is_finite()) {
            return Err(Error::param("excess occupation must be finite and >= 0"));
        }
        if self.samples < 2 {
            return Err(Error::param("need at least two samples"));
        }
        if !(self.t_min > 0.0 && self.t_min.is_finite()) {
            return Err(Error::param("t_min must be positive"));
        }
        if let Some(t) = self.t_max {
            if !(t > self.t_min && t.is_finite()) {
                return Err(Error::param("t_max must exceed t_min"));
            }
        }
        if !(self.rise_threshold > 0.0) {
            return Err(Error::param("rise threshold must be positive"));
        }
        Ok(())
    }
}

/// Rise times and spatial statistics of one heat run.
#[derive(Debug, Clone, PartialEq)]
pub struct RiseTimeAnalysis {
    /// Per element: first time its excess occupation reaches the threshold;
    /// `None` for the hot element or if never reached.
    pub rise_times: Vec<Option<f64>>,
    /// Elements (1-based) entering the spread ratio.
    pub eligible: Vec<usize>,
    /// `max t_j / min t_j` over `eligible`; infinite if any of them never rises.
    pub spread_ratio: f64,
    /// Rise times increase strictly with distance on each side of the hot element.
    pub monotone_in_distance: bool,
    /// Occupation change `n_j(t_max) − n_j(0)` per element.
    pub final_change: Vec<f64>,
    /// Elements (1-based, hot one excluded) tied for the smallest final change.
    pub least_affected: Vec<usize>,
    /// For even `N`, both central elements are among [`Self::least_affected`].
    pub central_least_affected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatSeries {
    pub model: CouplingModel,
    pub times: Vec<f64>,
    /// `occupations[k][j]` is the mean occupation of element `j` at `times[k]`.
    pub occupations: Vec<Vec<f64>>,
    /// Occupation in excess of an identical run without the hot bath, same layout.
    pub excess: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    pub steady: Vec<f64>,
    pub t_max: f64,
    pub steady_residual: f64,
    pub analysis: RiseTimeAnalysis,
}

pub fn heat_experiment(config: &HeatConfig) -> Result<HeatSeries> {
    config.validate()?;
    let basis = build_basis(config.params.n)?;
    heat_experiment_with_basis(config, &basis)
}

pub fn heat_experiment_with_basis(config: &HeatConfig, basis: &CouplingBasis) -> Result<HeatSeries> {
    config.validate()?;
    let mut params = config.params.clone();
    params.nbar[config.hot - 1] += config.dn;
    let dd = build_drift_diffusion(&params, basis, config.model)?;
    let v0 = CovarianceState::thermal(dd.layout, &params.nbar)?;
    let ss = steady_state(&dd)?;
    let steady_residual = super::lyapunov_residual(&dd.a, &ss.v, &dd.d) / crate::linalg::max_abs(&dd.d);

    let t_max = config.t_max.unwrap_or_else(|| (10.0 / dd.slowest_rate()).min(T_MAX_CAP));
    if !(t_max > config.t_min) {
        return Err(Error::param(format!("t_max {t_max} does not exceed t_min {}", config.t_min)));
    }
    let times = log_grid(config.t_min, t_max, config.samples);
    let states = evolve_covariance(&dd, &v0, &times)?;
    let occupations: Vec<Vec<f64>> = states.iter().map(super::occupations).collect();
    let initial = super::occupations(&v0);
    let steady = super::occupations(&ss);

    // The moment equations are linear, so the difference from a run with
    // Δn = 0 evolves under the same drift with only the hot bath as source.
    let mut dv0 = RMatrix::zeros(dd.layout.dim(), dd.layout.dim());
    let mut dd_excess =
        DriftDiffusion { layout: dd.layout, a: dd.a.clone(), d: RMatrix::zeros(dv0.nrows(), dv0.ncols()) };
    let (hx, hp) = (dd.layout.mech_x(config.hot - 1), dd.layout.mech_p(config.hot - 1));
    for idx in [hx, hp] {
        dv0[(idx, idx)] = config.dn;
        dd_excess.d[(idx, idx)] = 2.0 * params.gamma * config.dn;
    }
    let excess_ss = if config.dn > 0.0 && params.gamma > 0.0 {
        steady_state(&dd_excess)?.v
    } else {
        RMatrix::zeros(dv0.nrows(), dv0.ncols())
    };
    let probe = Probe { dd: &dd, dv: &dv0 - &excess_ss, vss: &excess_ss };
    let excess: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| {
            let e = (&dd.a * t).exp();
            let v = &e * &probe.dv * e.transpose() + &excess_ss;
            (0..params.n)
                .map(|j| {
                    (v[(dd.layout.mech_x(j), dd.layout.mech_x(j))] + v[(dd.layout.mech_p(j), dd.layout.mech_p(j))])
                        / 2.0
                })
                .collect()
        })
        .collect();
    let analysis = analyse(config, basis, &times, &occupations, &excess, &initial, &probe);
    Ok(HeatSeries {
        model: config.model,
        times,
        occupations,
        excess,
        initial,
        steady,
        t_max,
        steady_residual,
        analysis,
    })
}

/// `count` log-spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    let mut out: Vec<f64> = (0..count).map(|k| (la + (lb - la) * k as f64 / (count - 1) as f64).exp()).collect();
    out[0] = a;
    out[count - 1] = b;
    out
}

/// Evaluates the excess occupation of one element at arbitrary times.
struct Probe<'a> {
    dd: &'a DriftDiffusion,
    dv: RMatrix,
    vss: &'a RMatrix,
}

impl Probe<'_> {
    fn occupation(&self, j: usize, t: f64) -> f64 {
        let e = (&self.dd.a * t).exp();
        let layout = self.dd.layout;
        let mut total = 0.0;
        for idx in [layout.mech_x(j), layout.mech_p(j)] {
            let row = e.row(idx);
            total += (row * &self.dv * row.transpose())[(0, 0)] + self.vss[(idx, idx)];
        }
        total / 2.0
    }
}

fn analyse(
    config: &HeatConfig,
    basis: &CouplingBasis,
    times: &[f64],
    occupations: &[Vec<f64>],
    excess: &[Vec<f64>],
    initial: &[f64],
    probe: &Probe<'_>,
) -> RiseTimeAnalysis {
    let n = config.params.n;
    let hot = config.hot - 1;
    let threshold = config.rise_threshold;
    let rise_times: Vec<Option<f64>> = (0..n)
        .map(|j| {
            if j == hot {
                return None;
            }
            let target = threshold;
            let k = excess.iter().position(|occ| occ[j] >= target)?;
            let (mut lo, mut hi) = (if k == 0 { 0.0 } else { times[k - 1] }, times[k]);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if probe.occupation(j, mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        })
        .collect();

    let eps = basis.epsilon_row(1);
    let eligible: Vec<usize> =
        (0..n).filter(|&j| j != hot && eps[j].abs() > config.epsilon_cutoff).map(|j| j + 1).collect();
    let spread_ratio = if eligible.iter().any(|&j| rise_times[j - 1].is_none()) || eligible.is_empty() {
        f64::INFINITY
    } else {
        let ts: Vec<f64> = eligible.iter().filter_map(|&j| rise_times[j - 1]).collect();
        let max = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ts.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    };

    let side_monotone = |range: Vec<usize>| {
        let ts: Vec<Option<f64>> = range.into_iter().map(|j| rise_times[j]).collect();
        ts.iter().all(|t| t.is_some()) && ts.windows(2).all(|w| w[1].unwrap() > w[0].unwrap())
    };
    let monotone_in_distance = side_monotone((0..hot).rev().collect()) && side_monotone((hot + 1..n).collect());

    let last = occupations.last().expect("at least two samples");
    let final_change: Vec<f64> = (0..n).map(|j| last[j] - initial[j]).collect();
    let min_change = (0..n).filter(|&j| j != hot).map(|j| final_change[j]).fold(f64::INFINITY, f64::min);
    let tie = TIE_TOL * min_change.abs().max(1e-12);
    let least_affected: Vec<usize> =
        (0..n).filter(|&j| j != hot && final_change[j] <= min_change + tie).map(|j| j + 1).collect();
    let central_least_affected =
        n.is_multiple_of(2) && least_affected.contains(&(n / 2)) && least_affected.contains(&(n / 2 + 1));

    RiseTimeAnalysis {
        rise_times,
        eligible,
        spread_ratio,
        monotone_in_distance,
        final_change,
        least_affected,
        central_least_affected,
    }
}
