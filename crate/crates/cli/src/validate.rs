//! Self-validation: invariants and oracles of every module, each reported
//! as a measured value against its threshold.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write;

use num_complex::Complex64;
use optomech_core::gaussian::{build_drift_diffusion, occupations, steady_state, CouplingModel};
use optomech_core::linalg::{max_abs, max_abs_c, random_unitary, to_complex, unitarity_defect, RMatrix};
use optomech_core::single_excitation::{protocol, simulate_kappa_switch, Protocol};
use optomech_core::{
    beta_coefficient, build_basis, dissipative_check, effective_hamiltonian, elimination_crosscheck, evolution_matrix,
    generator_oracle, heat_experiment, kappa_switch_amplitude, propagator, reck_compose, reck_decompose, rng,
    run_classical_walk, run_schedule, run_walk, AmplitudeState, BetaSpectrum, DissipativeParams, HeatConfig,
    LambdaMatrix, Randomization, Schedule, Segment, SystemParams, WalkConfig,
};
use rand::Rng;

use crate::config::Level;
use crate::output::{fmt_f64, Table};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    Below(f64),
    Above(f64),
    /// The measured value is a flag that must be 1.
    Holds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
}

impl Check {
    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost(t) => self.measured <= t,
            Bound::Below(t) => self.measured < t,
            Bound::Above(t) => self.measured > t,
            Bound::Holds => self.measured == 1.0,
        }
    }

    fn threshold(&self) -> String {
        match self.bound {
            Bound::AtMost(t) => format!("<= {t:e}"),
            Bound::Below(t) => format!("< {t:e}"),
            Bound::Above(t) => format!("> {t:e}"),
            Bound::Holds => "holds".into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    fn add(&mut self, name: &str, measured: f64, bound: Bound) {
        self.checks.push(Check { name: name.into(), measured, bound });
    }

    fn flag(&mut self, name: &str, ok: bool) {
        self.add(name, f64::from(u8::from(ok)), Bound::Holds);
    }

    /// Records a failed computation as a failing check.
    fn attempt(&mut self, name: &str, f: impl FnOnce(&mut Report) -> optomech_core::Result<()>) {
        if let Err(e) = f(self) {
            log::error!("{name}: {e}");
            self.add(name, f64::NAN, Bound::Holds);
        }
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{status} {:<36} {:>14.6e}  {}", c.name, c.measured, c.threshold());
        }
        let _ = writeln!(s, "{} of {} checks passed", self.checks.len() - self.failures().len(), self.checks.len());
        s
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(["check", "measured", "threshold", "passed"]);
        for c in &self.checks {
            t.push(vec![c.name.clone(), fmt_f64(c.measured), c.threshold(), u8::from(c.passed()).to_string()]);
        }
        t
    }
}

/// `|g|² Im[S(ω) + S(−ω)]` with the cavity response `S(ν) = 1/(κ − i(Δ + ν))`.
pub fn beta_from_response(g: Complex64, delta: f64, kappa: f64) -> f64 {
    let s = |nu: f64| Complex64::new(1.0, 0.0) / Complex64::new(kappa, -(delta + nu));
    g.norm_sqr() * (s(1.0) + s(-1.0)).im
}

pub fn run(level: Level, seed: u64) -> Report {
    let full = level == Level::Full;
    let mut r = Report::default();
    let mut rng = rng::stream(seed, u64::MAX);

    r.attempt("modes_n4_magnitude", |r| {
        let b = build_basis(4)?;
        r.add(
            "modes_n4_magnitude",
            b.epsilon().iter().map(|x| (x.abs() - 0.5).abs()).fold(0.0, f64::max),
            Bound::AtMost(1e-12),
        );
        Ok(())
    });
    r.attempt("modes_n6_symmetry", |r| {
        let b = build_basis(6)?;
        let d = (&b.epsilon_row(2) - b.epsilon_row(4)).amax().max((&b.epsilon_row(1) - b.epsilon_row(5)).amax());
        r.add("modes_n6_symmetry", d, Bound::AtMost(1e-12));
        Ok(())
    });
    r.attempt("basis_orthogonality", |r| {
        let mut worst: f64 = 0.0;
        for n in 2..=20 {
            let p = build_basis(n)?.p().clone();
            worst = worst.max(max_abs(&(&p * p.transpose() - RMatrix::identity(n, n))));
        }
        r.add("basis_orthogonality", worst, Bound::Below(1e-10));
        Ok(())
    });

    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        // inside the adiabatic regime, where the closed form is meant to be used
        let g = Complex64::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
        let delta = rng.random_range(-3.0..3.0);
        let kappa = rng.random_range(3.0..20.0);
        let oracle = beta_from_response(g, delta, kappa);
        let err = (beta_coefficient(g, delta, kappa) - oracle).abs() / oracle.abs().max(1e-300);
        worst = worst.max(err);
    }
    r.add("beta_response_oracle", worst, Bound::AtMost(1e-10));
    r.add(
        "beta_reference_value",
        (beta_coefficient(Complex64::new(0.3, 0.0), -1.0, 6.4) + 4.0036e-3).abs(),
        Bound::AtMost(5e-8),
    );

    r.attempt("propagator_oracle", |r| {
        let mut worst: f64 = 0.0;
        for _ in 0..if full { 100 } else { 20 } {
            let n = rng.random_range(2..=12);
            let basis = build_basis(n)?;
            let per_mode: Vec<f64> = (1..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let beta = BetaSpectrum::from_modes(&basis, &per_mode)?;
            let t = rng.random_range(0.0..20.0);
            let h = effective_hamiltonian(&basis, &beta)?.map(|x| Complex64::new(0.0, -t * x));
            worst = worst.max(max_abs_c(&(propagator(&basis, &beta, t)? - h.exp())));
        }
        r.add("propagator_oracle", worst, Bound::Below(1e-10));
        Ok(())
    });
    r.attempt("propagator_reflection", |r| {
        let basis = build_basis(20)?;
        let beta = BetaSpectrum::single(&basis, 1, 0.37)?;
        let e = basis.epsilon_row(1);
        let refl = to_complex(&(RMatrix::identity(20, 20) - &e * e.transpose() * 2.0));
        r.add("propagator_reflection", max_abs_c(&(propagator(&basis, &beta, PI / 0.37)? - refl)), Bound::Below(1e-10));
        Ok(())
    });
    r.attempt("reck_round_trip", |r| {
        let mut worst: f64 = 0.0;
        for _ in 0..if full { 1000 } else { 100 } {
            let n = rng.random_range(2..=8);
            let u = random_unitary(&mut rng, n);
            worst = worst.max(max_abs_c(&(reck_compose(&reck_decompose(&u)?) - &u)));
        }
        r.add("reck_round_trip", worst, Bound::Below(1e-10));
        Ok(())
    });

    r.attempt("evolution_matrix_oracle", |r| {
        let (mut oracle, mut unitary, mut blocks): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for k in 0..if full { 100 } else { 20 } {
            let n = rng.random_range(2..=8);
            let basis = build_basis(n)?;
            let g: Vec<Complex64> = (0..n - 1)
                .map(|l| {
                    // every third draw switches couplings off to make Λ rank-deficient
                    if k % 3 == 0 && l % 2 == 1 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))
                    }
                })
                .collect();
            let lam = LambdaMatrix::from_couplings(&basis, &g)?;
            let t = rng.random_range(0.0..50.0);
            let u = evolution_matrix(&lam, t)?;
            oracle = oracle.max(max_abs_c(&(&u - generator_oracle(&lam, t))));
            unitary = unitary.max(unitarity_defect(&u));
            let m = n - 1;
            let upper_right = u.view((0, m), (m, n)).clone_owned();
            let lower_left = u.view((m, 0), (n, m)).clone_owned();
            blocks = blocks.max(max_abs_c(&(lower_left + upper_right.adjoint())));
        }
        r.add("evolution_matrix_oracle", oracle, Bound::Below(1e-8));
        r.add("evolution_matrix_unitarity", unitary, Bound::Below(1e-10));
        r.add("evolution_matrix_block_relation", blocks, Bound::Below(1e-10));
        Ok(())
    });

    r.attempt("swap_n2", |r| {
        let basis = build_basis(2)?;
        let omega = 0.1;
        let u = evolution_matrix(&LambdaMatrix::from_couplings(&basis, &[Complex64::new(omega, 0.0)])?, PI / omega)?;
        let out = AmplitudeState::phonon(2, 1)?.evolved(&u);
        r.add("swap_n2", (out.mechanical_populations()[1] - 1.0).abs(), Bound::Below(1e-10));
        Ok(())
    });
    r.attempt("transfer_1_to_4", |r| {
        let basis = build_basis(4)?;
        let (sched, init) = protocol(Protocol::JointTransfer, 0.1)?;
        let traj = run_schedule(&basis, &sched, &init, &[0.0, sched.total_duration()])?;
        r.add("transfer_1_to_4_population", traj.final_state.mechanical_populations()[3], Bound::Above(0.99));
        r.add("transfer_1_to_4_optics", traj.final_state.optical_population(), Bound::Below(1e-10));
        Ok(())
    });
    r.attempt("dark_state", |r| {
        let basis = build_basis(4)?;
        let z = Complex64::new(0.0, 0.0);
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let dark = AmplitudeState::mechanical(&[s, z, z, s])?;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let segs = (0..rng.random_range(1..=5))
                .map(|_| Segment {
                    g: (0..3)
                        .map(|_| Complex64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)))
                        .collect(),
                    duration: rng.random_range(0.0..100.0),
                })
                .collect();
            let sched = Schedule::new(segs);
            let traj = run_schedule(&basis, &sched, &dark, &sched.sample_grid(4))?;
            for st in &traj.states {
                worst = worst.max((&st.amplitudes - &dark.amplitudes).camax());
            }
        }
        r.add("dark_state_stationary", worst, Bound::Below(1e-10));
        Ok(())
    });
    r.attempt("kappa_switch", |r| {
        let a0 = Complex64::new(1.0, 0.0);
        let (k0, k1, delta) = (0.2, 1.5, 0.4);
        let a1 = kappa_switch_amplitude(a0, k0, k1, delta)?;
        let matched = simulate_kappa_switch(a0, a1, k0, k1, delta, 400)?;
        let unmatched = simulate_kappa_switch(a0, a0, k0, k1, delta, 400)?;
        r.add("kappa_switch_matched", matched.max_deviation, Bound::Below(1e-6));
        r.add("kappa_switch_unmatched", unmatched.max_deviation, Bound::Above(1e-6));
        Ok(())
    });
    r.attempt("walk_reflection_profile", |r| {
        let basis = build_basis(20)?;
        let b1 = beta_coefficient(Complex64::new(0.3, 0.0), -1.0, 6.4);
        let beta = BetaSpectrum::single(&basis, 1, b1)?;
        let cfg = WalkConfig { realizations: 1, ..WalkConfig::standard(b1, Randomization::None, seed) };
        let p = run_walk(&cfg, &basis, &beta)?.mean;
        let e = basis.epsilon_row(1);
        let s = cfg.source - 1;
        let worst = (0..20)
            .map(|j| {
                let expected = if j == s { (1.0 - 2.0 * e[s] * e[s]).powi(2) } else { 4.0 * e[s] * e[s] * e[j] * e[j] };
                (p[j] - expected).abs()
            })
            .fold(0.0, f64::max);
        r.add("walk_reflection_profile", worst, Bound::Below(1e-9));
        Ok(())
    });
    r.attempt("steady_state_small", |r| {
        let params = SystemParams::uniform(4, 1e-2, 2.0, -1.0, 3.0)?.with_coupling(1, Complex64::new(0.2, 0.0))?;
        let dd = build_drift_diffusion(&params, &build_basis(4)?, CouplingModel::Optical)?;
        let v = steady_state(&dd)?;
        let res = max_abs(&(&dd.a * &v.v + &v.v * dd.a.transpose() + &dd.d));
        r.add("lyapunov_residual_small", res, Bound::Below(1e-9));
        Ok(())
    });

    if full {
        full_checks(&mut r, seed);
    }
    r
}

fn full_checks(r: &mut Report, seed: u64) {
    r.attempt("heat_steady_state", |r| {
        let cfg = HeatConfig::standard(CouplingModel::Optical);
        let dd = build_drift_diffusion(&cfg.params, &build_basis(20)?, CouplingModel::Optical)?;
        let v = steady_state(&dd)?;
        let dev = occupations(&v).iter().map(|n| (n - 10.0).abs() / 10.0).fold(0.0, f64::max);
        r.add("heat_steady_state_deviation", dev, Bound::Below(0.05));
        r.add("heat_lyapunov_residual", max_abs(&(&dd.a * &v.v + &v.v * dd.a.transpose() + &dd.d)), Bound::Below(1e-9));
        Ok(())
    });
    r.attempt("heat_simultaneity", |r| {
        let opt = heat_experiment(&HeatConfig::standard(CouplingModel::Optical))?;
        let nn = heat_experiment(&HeatConfig::standard(CouplingModel::NearestNeighbor { strength: 0.3 }))?;
        r.add("heat_optical_spread_ratio", opt.analysis.spread_ratio, Bound::Below(3.0));
        r.flag("heat_nearest_neighbor_monotone", nn.analysis.monotone_in_distance);
        r.flag("heat_central_least_affected", opt.analysis.central_least_affected);
        Ok(())
    });
    r.attempt("walk_randomized", |r| {
        let basis = build_basis(20)?;
        let b1 = beta_coefficient(Complex64::new(0.3, 0.0), -1.0, 6.4);
        let beta = BetaSpectrum::single(&basis, 1, b1)?;
        let mut dist = Vec::new();
        for mode in Randomization::ALL {
            let cfg = WalkConfig::standard(b1, mode, seed);
            let cfg = if mode == Randomization::None { WalkConfig { realizations: 1, ..cfg } } else { cfg };
            dist.push(run_walk(&cfg, &basis, &beta)?.mean);
        }
        let classical = run_classical_walk(&WalkConfig::standard(b1, Randomization::None, seed), &basis, &beta)?;
        let s = 5;
        r.add("walk_phase_std_ratio", off_source_std(&dist[1], s) / off_source_std(&dist[0], s), Bound::Below(0.25));
        let t = &dist[2];
        r.flag("walk_transmissivity_source_maximum", (0..20).all(|j| j == s || t[j] < t[s]));
        let h: Vec<f64> = dist.iter().map(|p| entropy(p)).collect();
        r.flag("walk_entropy_ordering", h[1] > h[0] && h[0] > h[2]);
        let e = basis.epsilon_row(1);
        let profile: Vec<f64> = e.iter().map(|x| x * x).collect();
        let ratio =
            off_source_l1(&classical, &profile, s) / off_source_l1(&dist[0], &profile, s).max(f64::MIN_POSITIVE);
        r.add("walk_classical_l1_factor", ratio, Bound::Above(2.0));
        Ok(())
    });
    r.attempt("dissipative_agreement", |r| {
        let basis = build_basis(4)?;
        let omega = 0.1;
        let z = Complex64::new(0.0, 0.0);
        let sched =
            Schedule::new(vec![Segment { g: vec![Complex64::new(omega, 0.0), z, z], duration: 2.0 * PI / omega }]);
        let good = dissipative_check(&basis, &sched, 1, &DissipativeParams::default())?;
        let bad =
            dissipative_check(&basis, &sched, 1, &DissipativeParams { kappa: 0.5, ..DissipativeParams::default() })?;
        r.add("dissipative_deviation", good.max_deviation, Bound::Below(0.05));
        r.add("dissipative_bad_cavity_deviation", bad.max_deviation, Bound::Above(0.05));
        Ok(())
    });
    r.attempt("adiabatic_elimination", |r| {
        let params = SystemParams::uniform(2, 0.0, 20.0, -1.0, 0.0)?.with_coupling(1, Complex64::new(0.02, 0.0))?;
        let rep = elimination_crosscheck(&params, &build_basis(2)?)?;
        r.add("adiabatic_decay_rate", rep.decay_discrepancy, Bound::Below(0.1));
        Ok(())
    });
}

/// Natural-log Shannon entropy of a distribution.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|x| -x * x.ln()).sum()
}

/// Sample standard deviation over all elements except `source`.
pub fn off_source_std(p: &[f64], source: usize) -> f64 {
    let v: Vec<f64> = p.iter().enumerate().filter(|&(j, _)| j != source).map(|(_, &x)| x).collect();
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// L1 distance between `p` and `profile`, both renormalized over the
/// elements other than `source`.
pub fn off_source_l1(p: &[f64], profile: &[f64], source: usize) -> f64 {
    let idx: Vec<usize> = (0..p.len()).filter(|&j| j != source).collect();
    let sp: f64 = idx.iter().map(|&j| p[j]).sum();
    let sq: f64 = idx.iter().map(|&j| profile[j]).sum();
    idx.iter().map(|&j| (p[j] / sp - profile[j] / sq).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_form_matches_closed_form() {
        let g = Complex64::new(0.3, 0.0);
        assert!((beta_from_response(g, -1.0, 6.4) + 4.0036e-3).abs() < 5e-8);
        assert_eq!(beta_from_response(g, 0.0, 2.0), 0.0);
    }

    #[test]
    fn sign_flip_is_caught() {
        // a β with the wrong sign fails the response oracle by a relative error of 2
        let g = Complex64::new(0.2, 0.1);
        let flipped = -beta_coefficient(g, -0.7, 3.0);
        let oracle = beta_from_response(g, -0.7, 3.0);
        assert!(((flipped - oracle) / oracle).abs() > 1.9);
    }

    #[test]
    fn fast_level_passes() {
        let report = run(Level::Fast, 11);
        assert!(report.failures().is_empty(), "{}", report.render());
    }

    #[test]
    fn metrics() {
        assert!((entropy(&[0.5, 0.5]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(off_source_std(&[9.0, 1.0, 1.0, 1.0], 0), 0.0);
        assert!((off_source_l1(&[0.0, 1.0, 3.0], &[5.0, 1.0, 1.0], 0) - 0.5).abs() < 1e-15);
    }
}
