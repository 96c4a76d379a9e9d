//! Run configuration: a JSON file per experiment, overridden by flags.
//!
//! Every key is optional; missing keys take the experiment's defaults and
//! unknown keys are rejected. Precedence is flag > file > default.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use optomech_core::single_excitation::Protocol;
use optomech_core::{CouplingModel, DissipativeParams, Segment, SystemParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "OPTOMECH_THREADS";
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Modes,
    Walk,
    Heat,
    Shuttle,
    Validate,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Modes => "modes",
            Experiment::Walk => "walk",
            Experiment::Heat => "heat",
            Experiment::Shuttle => "shuttle",
            Experiment::Validate => "validate",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        [Experiment::Modes, Experiment::Walk, Experiment::Heat, Experiment::Shuttle, Experiment::Validate]
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| CliError::config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

impl FromStr for Level {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(CliError::config(format!("unknown level '{other}' (expected fast or full)"))),
        }
    }
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub params: Option<ParamsBlock>,
    pub walk: Option<WalkBlock>,
    pub heat: Option<HeatBlock>,
    pub shuttle: Option<ShuttleBlock>,
    pub level: Option<Level>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

/// A real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ComplexIn {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexIn {
    fn value(self) -> Complex64 {
        match self {
            ComplexIn::Real(x) => Complex64::new(x, 0.0),
            ComplexIn::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub n: Option<usize>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    /// One detuning for every optical mode, or one per mode.
    pub delta: Option<OneOrMany>,
    /// Couplings of modes 1, 2, …; missing trailing entries are zero.
    pub g: Option<Vec<ComplexIn>>,
    pub nbar: Option<OneOrMany>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkBlock {
    pub source: Option<usize>,
    pub active_mode: Option<usize>,
    pub time: Option<f64>,
    pub sigma: Option<f64>,
    pub realizations: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatBlock {
    pub hot: Option<usize>,
    pub dn: Option<f64>,
    pub models: Option<Vec<String>>,
    pub nn_strength: Option<f64>,
    pub samples: Option<usize>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub rise_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentIn {
    pub g: Vec<ComplexIn>,
    pub duration: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipativeBlock {
    pub enabled: Option<bool>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub nbar: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShuttleBlock {
    pub n: Option<usize>,
    pub protocol: Option<String>,
    pub omega: Option<f64>,
    pub segments: Option<Vec<SegmentIn>>,
    /// Element holding the initial phonon of a custom schedule, 1-based.
    pub initial_element: Option<usize>,
    /// Samples per segment.
    pub samples: Option<usize>,
    pub dissipative: Option<DissipativeBlock>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, serde_json::Value)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg = Self::parse(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let raw = serde_json::from_str(&text).map_err(|e| CliError::config(e.to_string()))?;
        Ok((cfg, raw))
    }
}

// ---------------------------------------------------------------------------
// Flags

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub level: Option<Level>,
}

// ---------------------------------------------------------------------------
// Resolved configuration

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsOut {
    pub n: usize,
    pub omega: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub delta: Vec<f64>,
    /// `[re, im]` per optical mode.
    pub g: Vec<[f64; 2]>,
    pub nbar: Vec<f64>,
}

impl From<&SystemParams> for ParamsOut {
    fn from(p: &SystemParams) -> Self {
        ParamsOut {
            n: p.n,
            omega: p.omega,
            gamma: p.gamma,
            kappa: p.kappa,
            delta: p.delta.clone(),
            g: p.g.iter().map(|z| [z.re, z.im]).collect(),
            nbar: p.nbar.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkSettings {
    pub params: ParamsOut,
    pub source: usize,
    pub active_mode: usize,
    /// `None` means `π / |β_active|`.
    pub time: Option<f64>,
    pub sigma: f64,
    pub realizations: usize,
    pub angle_distribution: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatSettings {
    pub params: ParamsOut,
    pub hot: usize,
    pub dn: f64,
    pub models: Vec<String>,
    pub nn_strength: f64,
    pub samples: usize,
    pub t_min: f64,
    pub t_max: Option<f64>,
    pub rise_threshold: f64,
    pub epsilon_cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentOut {
    pub g: Vec<[f64; 2]>,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipativeOut {
    pub kappa: f64,
    pub gamma: f64,
    pub nbar: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShuttleSettings {
    pub n: usize,
    /// Shipped protocol name, or `None` for a custom schedule.
    pub protocol: Option<String>,
    pub omega: Option<f64>,
    pub segments: Vec<SegmentOut>,
    pub initial_element: Option<usize>,
    pub samples: usize,
    pub dissipative: Option<DissipativeOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Settings {
    Modes { n: usize },
    Walk(WalkSettings),
    Heat(HeatSettings),
    Shuttle(ShuttleSettings),
    Validate { level: Level },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub threads: usize,
    pub settings: Settings,
    /// File contents as read, for the manifest.
    pub file: Option<serde_json::Value>,
    /// Human-readable record of every flag or environment override.
    pub overrides: Vec<String>,
}

impl RunConfig {
    /// Output directory, defaulting to `out/<experiment>`.
    pub fn output_dir_or_default(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(self.experiment.as_str()))
    }
}

/// Loads the file named by `flags.config` (if any) and resolves the run.
pub fn load(experiment: Experiment, flags: &Flags) -> Result<RunConfig> {
    let (file, raw) = match &flags.config {
        Some(path) => {
            let (f, raw) = FileConfig::load(path)?;
            (f, Some(raw))
        }
        None => (FileConfig::default(), None),
    };
    let env_cap = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?,
        ),
        Err(_) => None,
    };
    let mut cfg = resolve(experiment, file, flags, env_cap)?;
    cfg.file = raw;
    Ok(cfg)
}

/// Resolves a parsed file and flags; `env_cap` is the thread cap from the environment.
pub fn resolve(experiment: Experiment, file: FileConfig, flags: &Flags, env_cap: Option<usize>) -> Result<RunConfig> {
    if let Some(name) = &file.experiment {
        let e: Experiment = name.parse()?;
        if e != experiment {
            return Err(CliError::config(format!("config file is for '{e}' but the '{experiment}' command was run")));
        }
    }
    let mut overrides = Vec::new();
    let seed = pick("seed", flags.seed, file.seed, DEFAULT_SEED, &mut overrides);
    let output_dir = match (&flags.out, &file.output_dir) {
        (Some(flag), file_value) => {
            if let Some(f) = file_value {
                overrides.push(format!("output_dir: flag {} over file {}", flag.display(), f.display()));
            }
            Some(flag.clone())
        }
        (None, f) => f.clone(),
    };
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut threads = pick("threads", flags.threads, file.threads, available, &mut overrides);
    if threads == 0 {
        return Err(CliError::config("threads must be at least 1"));
    }
    if let Some(cap) = env_cap {
        if threads > cap {
            overrides.push(format!("threads: capped from {threads} to {cap} by {THREADS_ENV}"));
            threads = cap;
        }
    }

    let forbid = |present: bool, key: &str| -> Result<()> {
        if present {
            Err(CliError::config(format!("key '{key}' is not used by the '{experiment}' experiment")))
        } else {
            Ok(())
        }
    };
    forbid(file.walk.is_some() && experiment != Experiment::Walk, "walk")?;
    forbid(file.heat.is_some() && experiment != Experiment::Heat, "heat")?;
    forbid(file.shuttle.is_some() && experiment != Experiment::Shuttle, "shuttle")?;
    forbid(file.params.is_some() && matches!(experiment, Experiment::Shuttle | Experiment::Validate), "params")?;
    forbid((file.level.is_some() || flags.level.is_some()) && experiment != Experiment::Validate, "level")?;

    let settings = match experiment {
        Experiment::Modes => {
            let p = file.params.unwrap_or_default();
            if p.gamma.is_some() || p.kappa.is_some() || p.delta.is_some() || p.g.is_some() || p.nbar.is_some() {
                return Err(CliError::config("the modes experiment only reads params.n"));
            }
            let n = p.n.unwrap_or(6);
            optomech_core::build_basis(n).map_err(CliError::from_config)?;
            Settings::Modes { n }
        }
        Experiment::Walk => {
            Settings::Walk(resolve_walk(file.params.unwrap_or_default(), file.walk.unwrap_or_default())?)
        }
        Experiment::Heat => {
            Settings::Heat(resolve_heat(file.params.unwrap_or_default(), file.heat.unwrap_or_default())?)
        }
        Experiment::Shuttle => Settings::Shuttle(resolve_shuttle(file.shuttle.unwrap_or_default())?),
        Experiment::Validate => {
            let level = pick("level", flags.level, file.level, Level::Fast, &mut overrides);
            Settings::Validate { level }
        }
    };
    for o in &overrides {
        log::info!("override {o}");
    }
    Ok(RunConfig { experiment, seed, output_dir, threads, settings, file: None, overrides })
}

fn pick<T: Copy + fmt::Debug>(key: &str, flag: Option<T>, file: Option<T>, default: T, log: &mut Vec<String>) -> T {
    match (flag, file) {
        (Some(f), Some(v)) => {
            log.push(format!("{key}: flag {f:?} over file {v:?}"));
            f
        }
        (Some(f), None) => {
            log.push(format!("{key}: flag {f:?} over default {default:?}"));
            f
        }
        (None, Some(v)) => v,
        (None, None) => default,
    }
}

/// Builds system parameters over the given defaults.
fn build_params(
    block: ParamsBlock,
    n0: usize,
    gamma0: f64,
    kappa0: f64,
    g0: &[f64],
    nbar0: f64,
) -> Result<SystemParams> {
    let n = block.n.unwrap_or(n0);
    if n < 2 {
        return Err(CliError::config(format!("params.n must be at least 2, got {n}")));
    }
    let modes = n - 1;
    let expand = |v: Option<OneOrMany>, len: usize, default: f64, key: &str| -> Result<Vec<f64>> {
        match v {
            None => Ok(vec![default; len]),
            Some(OneOrMany::One(x)) => Ok(vec![x; len]),
            Some(OneOrMany::Many(v)) if v.len() == len => Ok(v),
            Some(OneOrMany::Many(v)) => {
                Err(CliError::config(format!("params.{key} has {} entries, expected {len}", v.len())))
            }
        }
    };
    let delta = expand(block.delta, modes, -1.0, "delta")?;
    let nbar = expand(block.nbar, n, nbar0, "nbar")?;
    let given: Vec<Complex64> = match block.g {
        Some(g) => g.into_iter().map(ComplexIn::value).collect(),
        None => g0.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
    };
    if given.len() > modes {
        return Err(CliError::config(format!(
            "params.g has {} entries but there are {modes} optical modes",
            given.len()
        )));
    }
    let mut g = vec![Complex64::new(0.0, 0.0); modes];
    g[..given.len()].copy_from_slice(&given);
    SystemParams::new(n, block.gamma.unwrap_or(gamma0), block.kappa.unwrap_or(kappa0), delta, g, nbar)
        .map_err(CliError::from_config)
}

fn resolve_walk(params: ParamsBlock, walk: WalkBlock) -> Result<WalkSettings> {
    let params = build_params(params, 20, 5e-5, 6.4, &[0.3], 0.0)?;
    let n = params.n;
    let source = walk.source.unwrap_or(6.min(n));
    let active_mode = walk.active_mode.unwrap_or(1);
    if source == 0 || source > n {
        return Err(CliError::config(format!("walk.source {source} out of range 1..={n}")));
    }
    if active_mode == 0 || active_mode >= n {
        return Err(CliError::config(format!("walk.active_mode {active_mode} out of range 1..={}", n - 1)));
    }
    let sigma = walk.sigma.unwrap_or(PI);
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(CliError::config("walk.sigma must be finite and >= 0"));
    }
    let realizations = walk.realizations.unwrap_or(10_000);
    if realizations == 0 {
        return Err(CliError::config("walk.realizations must be at least 1"));
    }
    if let Some(t) = walk.time {
        if !t.is_finite() {
            return Err(CliError::config("walk.time must be finite"));
        }
    } else {
        let g = params.g[active_mode - 1];
        if optomech_core::beta_coefficient(g, params.delta[active_mode - 1], params.kappa) == 0.0 {
            return Err(CliError::config("walk.time is required when the active mode has zero beta"));
        }
    }
    Ok(WalkSettings {
        params: (&params).into(),
        source,
        active_mode,
        time: walk.time,
        sigma,
        realizations,
        angle_distribution: "gaussian(mean=0, sd=sigma)",
    })
}

fn resolve_heat(params: ParamsBlock, heat: HeatBlock) -> Result<HeatSettings> {
    let params = build_params(params, 20, 5e-5, 6.4, &[0.3], 10.0)?;
    let models = heat.models.unwrap_or_else(|| vec!["optical".into(), "nearest_neighbor".into()]);
    if models.is_empty() {
        return Err(CliError::config("heat.models must not be empty"));
    }
    for m in &models {
        if m != "optical" && m != "nearest_neighbor" {
            return Err(CliError::config(format!("unknown heat model '{m}' (expected optical or nearest_neighbor)")));
        }
    }
    let s = HeatSettings {
        params: (&params).into(),
        hot: heat.hot.unwrap_or(6.min(params.n)),
        dn: heat.dn.unwrap_or(20.0),
        models,
        nn_strength: heat.nn_strength.unwrap_or(0.3),
        samples: heat.samples.unwrap_or(200),
        t_min: heat.t_min.unwrap_or(1.0),
        t_max: heat.t_max,
        rise_threshold: heat.rise_threshold.unwrap_or(0.05),
        epsilon_cutoff: 0.1,
    };
    if !s.nn_strength.is_finite() {
        return Err(CliError::config("heat.nn_strength must be finite"));
    }
    for model in s.coupling_models() {
        s.core_config(model)?.validate().map_err(CliError::from_config)?;
    }
    Ok(s)
}

impl HeatSettings {
    pub fn coupling_models(&self) -> Vec<CouplingModel> {
        self.models
            .iter()
            .map(|m| match m.as_str() {
                "optical" => CouplingModel::Optical,
                _ => CouplingModel::NearestNeighbor { strength: self.nn_strength },
            })
            .collect()
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        params_from_out(&self.params)
    }

    pub fn core_config(&self, model: CouplingModel) -> Result<optomech_core::HeatConfig> {
        Ok(optomech_core::HeatConfig {
            params: self.system_params()?,
            hot: self.hot,
            dn: self.dn,
            model,
            samples: self.samples,
            t_min: self.t_min,
            t_max: self.t_max,
            rise_threshold: self.rise_threshold,
            epsilon_cutoff: self.epsilon_cutoff,
        })
    }
}

impl WalkSettings {
    pub fn system_params(&self) -> Result<SystemParams> {
        params_from_out(&self.params)
    }
}

fn params_from_out(p: &ParamsOut) -> Result<SystemParams> {
    SystemParams::new(
        p.n,
        p.gamma,
        p.kappa,
        p.delta.clone(),
        p.g.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
        p.nbar.clone(),
    )
    .map_err(CliError::from_config)
}

fn resolve_shuttle(block: ShuttleBlock) -> Result<ShuttleSettings> {
    let samples = block.samples.unwrap_or(200);
    if samples == 0 {
        return Err(CliError::config("shuttle.samples must be at least 1"));
    }
    let (n, protocol, omega, segments, initial_element) = match block.segments {
        Some(segs) => {
            if block.protocol.is_some() || block.omega.is_some() {
                return Err(CliError::config("shuttle.segments cannot be combined with protocol or omega"));
            }
            let n = block.n.unwrap_or(4);
            let initial = block.initial_element.unwrap_or(1);
            let segments: Vec<Segment> = segs
                .into_iter()
                .map(|s| Segment { g: s.g.into_iter().map(ComplexIn::value).collect(), duration: s.duration })
                .collect();
            let sched = optomech_core::Schedule::new(segments.clone());
            sched.validate(n).map_err(CliError::from_config)?;
            optomech_core::AmplitudeState::phonon(n, initial).map_err(CliError::from_config)?;
            (n, None, None, segments, Some(initial))
        }
        None => {
            if block.initial_element.is_some() {
                return Err(CliError::config("shuttle.initial_element applies to custom segments only"));
            }
            if block.n.is_some_and(|n| n != 4) {
                return Err(CliError::config("shipped protocols are defined for n = 4"));
            }
            let name = block.protocol.unwrap_or_else(|| Protocol::TransferOneToFour.as_str().into());
            let p: Protocol = name.parse().map_err(CliError::from_config)?;
            let omega = block.omega.unwrap_or(0.1);
            let (sched, init) = optomech_core::single_excitation::protocol(p, omega).map_err(CliError::from_config)?;
            let initial = (0..4).find(|&j| (init.mechanical_populations()[j] - 1.0).abs() < 1e-15).map(|j| j + 1);
            (4, Some(name), Some(omega), sched.segments, initial)
        }
    };
    let explicit = block.dissipative.as_ref().is_some_and(|d| d.enabled != Some(false));
    let dissipative = match block.dissipative {
        Some(d) if d.enabled == Some(false) => {
            if d.kappa.is_some() || d.gamma.is_some() || d.nbar.is_some() || d.dt.is_some() {
                return Err(CliError::config("shuttle.dissipative is disabled but sets parameters"));
            }
            None
        }
        d => {
            let d = d.unwrap_or_default();
            let base = DissipativeParams::default();
            let out = DissipativeOut {
                kappa: d.kappa.unwrap_or(base.kappa),
                gamma: d.gamma.unwrap_or(base.gamma),
                nbar: d.nbar.unwrap_or(base.nbar),
                dt: d.dt.unwrap_or(base.dt),
            };
            if !(out.kappa > 0.0 && out.gamma >= 0.0 && out.nbar >= 0.0 && out.dt > 0.0)
                || ![out.kappa, out.gamma, out.nbar, out.dt].iter().all(|x| x.is_finite())
            {
                return Err(CliError::config("shuttle.dissipative needs kappa > 0, gamma >= 0, nbar >= 0, dt > 0"));
            }
            Some(out)
        }
    };
    // the moment comparison starts from a single phonon
    let dissipative = match (dissipative, initial_element) {
        (Some(_), None) if explicit => {
            return Err(CliError::config("shuttle.dissipative needs an initial state with a single phonon"));
        }
        (_, None) => None,
        (d, Some(_)) => d,
    };
    Ok(ShuttleSettings {
        n,
        protocol,
        omega,
        segments: segments
            .iter()
            .map(|s| SegmentOut { g: s.g.iter().map(|z| [z.re, z.im]).collect(), duration: s.duration })
            .collect(),
        initial_element,
        samples,
        dissipative,
    })
}

impl ShuttleSettings {
    pub fn schedule(&self) -> optomech_core::Schedule {
        optomech_core::Schedule::new(
            self.segments
                .iter()
                .map(|s| Segment {
                    g: s.g.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
                    duration: s.duration,
                })
                .collect(),
        )
    }

    pub fn initial_state(&self) -> Result<optomech_core::AmplitudeState> {
        match (&self.protocol, self.omega) {
            (Some(name), Some(omega)) => {
                let p: Protocol = name.parse().map_err(CliError::from_config)?;
                Ok(optomech_core::single_excitation::protocol(p, omega)?.1)
            }
            _ => Ok(optomech_core::AmplitudeState::phonon(self.n, self.initial_element.unwrap_or(1))?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_text(e: Experiment, text: &str, flags: &Flags) -> Result<RunConfig> {
        resolve(e, FileConfig::parse(text)?, flags, None)
    }

    #[test]
    fn defaults_match_experiments() {
        let heat = resolve_text(Experiment::Heat, "{}", &Flags::default()).unwrap();
        let Settings::Heat(h) = heat.settings else { panic!() };
        assert_eq!((h.params.n, h.params.gamma, h.params.kappa, h.hot, h.dn), (20, 5e-5, 6.4, 6, 20.0));
        assert_eq!(h.params.g[0], [0.3, 0.0]);
        assert!(h.params.g[1..].iter().all(|g| *g == [0.0, 0.0]));
        assert!(h.params.nbar.iter().all(|&x| x == 10.0));
        assert_eq!(h.nn_strength, 0.3);
        let walk = resolve_text(Experiment::Walk, "{}", &Flags::default()).unwrap();
        let Settings::Walk(w) = walk.settings else { panic!() };
        assert_eq!((w.source, w.active_mode, w.sigma, w.realizations), (6, 1, PI, 10_000));
        assert_eq!(walk.seed, DEFAULT_SEED);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            r#"{"sed": 1}"#,
            r#"{"params": {"n": 4, "kapa": 1.0}}"#,
            r#"{"walk": {"source": 2, "mode": "phase"}}"#,
            r#"{"shuttle": {"dissipative": {"kappa": 1e-3, "foo": 0}}}"#,
        ] {
            let e = if text.contains("walk") {
                Experiment::Walk
            } else if text.contains("shuttle") {
                Experiment::Shuttle
            } else {
                Experiment::Heat
            };
            let err = resolve_text(e, text, &Flags::default()).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let cases = [
            (Experiment::Heat, r#"{"params": {"kappa": -1}}"#),
            (Experiment::Heat, r#"{"heat": {"hot": 21}}"#),
            (Experiment::Heat, r#"{"heat": {"models": ["ballistic"]}}"#),
            (Experiment::Walk, r#"{"walk": {"sigma": -0.1}}"#),
            (Experiment::Walk, r#"{"walk": {"realizations": 0}}"#),
            (Experiment::Walk, r#"{"params": {"g": [0, 0]}}"#),
            (Experiment::Walk, r#"{"params": {"n": 3, "g": [0.1, 0.1, 0.1]}}"#),
            (Experiment::Modes, r#"{"params": {"n": 1}}"#),
            (Experiment::Modes, r#"{"heat": {}}"#),
            (Experiment::Shuttle, r#"{"shuttle": {"protocol": "teleport"}}"#),
            (Experiment::Shuttle, r#"{"shuttle": {"n": 5}}"#),
            (Experiment::Walk, r#"{"experiment": "heat"}"#),
            (Experiment::Heat, r#"{"level": "full"}"#),
        ];
        for (e, text) in cases {
            let err = resolve_text(e, text, &Flags::default()).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn precedence_flag_file_default() {
        let text = r#"{"seed": 7, "threads": 3}"#;
        let cfg = resolve_text(Experiment::Modes, text, &Flags::default()).unwrap();
        assert_eq!((cfg.seed, cfg.threads), (7, 3));
        assert!(cfg.overrides.is_empty());
        let flags = Flags { seed: Some(9), threads: Some(2), ..Flags::default() };
        let cfg = resolve_text(Experiment::Modes, text, &flags).unwrap();
        assert_eq!((cfg.seed, cfg.threads), (9, 2));
        assert_eq!(cfg.overrides.len(), 2);
        let cfg = resolve(Experiment::Modes, FileConfig::parse(text).unwrap(), &flags, Some(1)).unwrap();
        assert_eq!(cfg.threads, 1);
        assert!(cfg.overrides.iter().any(|o| o.contains(THREADS_ENV)));
    }

    #[test]
    fn complex_couplings_and_custom_segments() {
        let text = r#"{"params": {"n": 4, "g": [[0.1, 0.2], 0.05], "delta": [-1, -1.1, -0.9]}}"#;
        let cfg = resolve_text(Experiment::Walk, text, &Flags::default()).unwrap();
        let Settings::Walk(w) = cfg.settings else { panic!() };
        assert_eq!(w.params.g, vec![[0.1, 0.2], [0.05, 0.0], [0.0, 0.0]]);
        assert_eq!(w.source, 4);
        let text = r#"{"shuttle": {"n": 2, "segments": [{"g": [0.1], "duration": 31.4}], "initial_element": 2}}"#;
        let cfg = resolve_text(Experiment::Shuttle, text, &Flags::default()).unwrap();
        let Settings::Shuttle(s) = cfg.settings else { panic!() };
        assert_eq!((s.n, s.initial_element, s.protocol.as_deref()), (2, Some(2), None));
        assert!(s.dissipative.is_some());
    }
}
