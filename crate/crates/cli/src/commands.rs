//! Experiment drivers: each writes its CSVs into an [`OutputDir`] and returns
//! summary values for the manifest.

use std::path::Path;
use std::time::Instant;

use optomech_core::{
    build_basis, coupling_matrix, dissipative_check, heat_experiment_with_basis, run_classical_walk, run_schedule,
    run_walk, BetaSpectrum, DissipativeParams, HeatSeries, Randomization, WalkConfig,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{HeatSettings, RunConfig, Settings, ShuttleSettings, WalkSettings};
use crate::error::{CliError, Result};
use crate::output::{fmt_f64, Manifest, OutputDir, Table};
use crate::validate;

/// Runs the configured experiment on a pool of `cfg.threads` workers and
/// writes its files followed by the manifest.
pub fn run(cfg: &RunConfig) -> Result<Manifest> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))?;
    let dir = cfg.output_dir_or_default();
    let validate_to_disk = cfg.output_dir.is_some();
    let manifest = |results, files| Manifest {
        experiment: cfg.experiment.to_string(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        threads: cfg.threads,
        config_file: cfg.file.clone(),
        resolved: json!(cfg.settings),
        overrides: cfg.overrides.clone(),
        results,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        files,
    };
    // without an explicit output directory validation only reports to stdout
    if let (Settings::Validate { level }, false) = (&cfg.settings, validate_to_disk) {
        let report = pool.install(|| validate::run(*level, cfg.seed));
        print!("{}", report.render());
        let failures = report.failures();
        return if failures.is_empty() {
            Ok(manifest(json!({ "checks": report.checks.len() }), vec![]))
        } else {
            Err(CliError::ChecksFailed(failures))
        };
    }

    let mut out = OutputDir::create(&dir)?;
    let mut failed = None;
    let results = pool.install(|| -> Result<serde_json::Value> {
        match &cfg.settings {
            Settings::Modes { n } => modes(&mut out, *n),
            Settings::Walk(w) => walk(&mut out, w, cfg.seed),
            Settings::Heat(h) => heat(&mut out, h),
            Settings::Shuttle(s) => shuttle(&mut out, s),
            Settings::Validate { level } => {
                let report = validate::run(*level, cfg.seed);
                print!("{}", report.render());
                out.write_table("validate.csv", &report.table())?;
                let failures = report.failures();
                if !failures.is_empty() {
                    failed = Some(failures);
                }
                Ok(json!({ "checks": report.checks.len() }))
            }
        }
    })?;
    let manifest = manifest(results, out.files().to_vec());
    manifest.write(out.root())?;
    match failed {
        Some(f) => Err(CliError::ChecksFailed(f)),
        None => Ok(manifest),
    }
}

fn modes(out: &mut OutputDir, n: usize) -> Result<serde_json::Value> {
    let basis = build_basis(n)?;
    let mut table = Table::new(["l", "j", "epsilon"]);
    for l in 1..n {
        let eps = basis.epsilon_row(l);
        for j in 0..n {
            table.push(vec![l.to_string(), (j + 1).to_string(), fmt_f64(eps[j])]);
        }
        let e = coupling_matrix(&eps)?;
        let mut m = Table::new(std::iter::once("j".to_string()).chain((1..=n).map(|k| k.to_string())));
        for j in 0..n {
            m.push(std::iter::once((j + 1).to_string()).chain((0..n).map(|k| fmt_f64(e[(j, k)]))).collect());
        }
        out.write_table(&format!("coupling_matrix_{l}.csv"), &m)?;
    }
    out.write_table("modes.csv", &table)?;
    let mut p = Table::new(std::iter::once("l".to_string()).chain((1..=n).map(|k| k.to_string())));
    for l in 0..n {
        p.push(std::iter::once((l + 1).to_string()).chain((0..n).map(|k| fmt_f64(basis.p()[(l, k)]))).collect());
    }
    out.write_table("basis.csv", &p)?;
    Ok(json!({ "l0": basis.l0() }))
}

fn walk(out: &mut OutputDir, w: &WalkSettings, seed: u64) -> Result<serde_json::Value> {
    let params = w.system_params()?;
    let basis = build_basis(params.n)?;
    let beta = BetaSpectrum::from_params(&params, &basis)?;
    let beta_active = beta.values()[w.active_mode - 1];
    let time = match w.time {
        Some(t) => t,
        None if beta_active != 0.0 => std::f64::consts::PI / beta_active.abs(),
        None => return Err(CliError::config("active mode has zero beta; set walk.time")),
    };
    let config = |randomization, realizations| WalkConfig {
        n: params.n,
        source: w.source,
        active_mode: w.active_mode,
        time,
        randomization,
        sigma: w.sigma,
        realizations,
        seed,
    };
    let mut columns = Vec::new();
    for mode in Randomization::ALL {
        let realizations = if mode == Randomization::None { 1 } else { w.realizations };
        columns.push(run_walk(&config(mode, realizations), &basis, &beta)?.mean);
    }
    columns.push(run_classical_walk(&config(Randomization::None, 1), &basis, &beta)?);
    let eps = basis.epsilon_row(w.active_mode);

    let mut table = Table::new(["j", "epsilon_sq", "none", "phase", "transmissivity", "classical"]);
    for j in 0..params.n {
        let mut row = vec![(j + 1).to_string(), fmt_f64(eps[j] * eps[j])];
        row.extend(columns.iter().map(|c| fmt_f64(c[j])));
        table.push(row);
    }
    out.write_table("walk.csv", &table)?;
    Ok(json!({ "time": time, "beta": beta.values().as_slice() }))
}

fn heat(out: &mut OutputDir, h: &HeatSettings) -> Result<serde_json::Value> {
    let params = h.system_params()?;
    let basis = build_basis(params.n)?;
    let models = h.coupling_models();
    let series: Vec<HeatSeries> = models
        .par_iter()
        .map(|&m| heat_experiment_with_basis(&h.core_config(m)?, &basis).map_err(CliError::from))
        .collect::<Result<_>>()?;
    let eps = basis.epsilon_row(1);
    let mut summary = serde_json::Map::new();
    for s in &series {
        let name = s.model.name();
        let mut table = Table::new(["t", "j", "occupation", "excess"]);
        for (k, &t) in s.times.iter().enumerate() {
            for j in 0..params.n {
                table.push(vec![
                    fmt_f64(t),
                    (j + 1).to_string(),
                    fmt_f64(s.occupations[k][j]),
                    fmt_f64(s.excess[k][j]),
                ]);
            }
        }
        out.write_table(&format!("heat_{name}.csv"), &table)?;

        let a = &s.analysis;
        let mut table = Table::new(["j", "epsilon_1", "rise_time", "final_change", "steady", "least_affected"]);
        for j in 0..params.n {
            table.push(vec![
                (j + 1).to_string(),
                fmt_f64(eps[j]),
                a.rise_times[j].map(fmt_f64).unwrap_or_default(),
                fmt_f64(a.final_change[j]),
                fmt_f64(s.steady[j]),
                u8::from(a.least_affected.contains(&(j + 1))).to_string(),
            ]);
        }
        out.write_table(&format!("heat_{name}_summary.csv"), &table)?;
        summary.insert(
            name.into(),
            json!({
                "t_max": s.t_max,
                "steady_residual": s.steady_residual,
                "spread_ratio": finite_or_null(a.spread_ratio),
                "monotone_in_distance": a.monotone_in_distance,
                "least_affected": a.least_affected,
                "central_least_affected": a.central_least_affected,
            }),
        );
    }
    Ok(serde_json::Value::Object(summary))
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn shuttle(out: &mut OutputDir, s: &ShuttleSettings) -> Result<serde_json::Value> {
    let basis = build_basis(s.n)?;
    let schedule = s.schedule();
    let initial = s.initial_state()?;
    let grid = schedule.sample_grid(s.samples);
    let traj = run_schedule(&basis, &schedule, &initial, &grid)?;
    let labels = population_labels(s.n);

    let mut header = vec!["t".to_string(), "segment".to_string()];
    header.extend(labels.iter().cloned());
    let mut table = Table::new(header);
    for (k, st) in traj.states.iter().enumerate() {
        let mut row = vec![fmt_f64(traj.times[k]), (traj.segment_index[k] + 1).to_string()];
        row.extend(st.populations().into_iter().map(fmt_f64));
        table.push(row);
    }
    out.write_table("trajectory.csv", &table)?;

    let mut switches = Table::new(["time", "segment", "optical_population", "valid"]);
    for e in &traj.switch_events {
        switches.push(vec![
            fmt_f64(e.time),
            (e.segment + 1).to_string(),
            fmt_f64(e.optical_population),
            u8::from(e.valid).to_string(),
        ]);
    }
    out.write_table("switches.csv", &switches)?;

    let mut results = json!({
        "final_populations": traj.final_state.populations(),
        "all_switches_valid": traj.all_switches_valid(),
    });
    if let (Some(d), Some(phonon)) = (&s.dissipative, s.initial_element) {
        let params = DissipativeParams { kappa: d.kappa, gamma: d.gamma, nbar: d.nbar, dt: d.dt };
        let rep = dissipative_check(&basis, &schedule, phonon, &params)?;
        let mut header = vec!["t".to_string(), "deviation".to_string()];
        header.extend(labels.iter().map(|l| format!("moment_{l}")));
        let mut table = Table::new(header);
        for (k, &t) in rep.times.iter().enumerate() {
            let mut row = vec![fmt_f64(t), fmt_f64(rep.deviation[k])];
            row.extend(rep.moment_populations[k].iter().copied().map(fmt_f64));
            table.push(row);
        }
        out.write_table("dissipative.csv", &table)?;
        results["dissipative"] = json!({
            "max_deviation": rep.max_deviation,
            "counter_rotating_amplitude": rep.counter_rotating_amplitude,
            "counter_rotating": rep.counter_rotating,
            "good_cavity_warning": rep.good_cavity_warning,
        });
    }
    Ok(results)
}

/// Column names of a population vector in amplitude order, optics first.
fn population_labels(n: usize) -> Vec<String> {
    (1..n).map(|l| format!("a{l}")).chain((1..=n).map(|j| format!("b{j}"))).collect()
}

/// Reads a CSV written by this crate back into rows of fields.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    let header =
        r.headers().map_err(|e| CliError::io(path, std::io::Error::other(e)))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(Table { header, rows })
}
