use std::path::{Path, PathBuf};

use btc_topology::dynamics::EvolutionMethod;
use btc_topology::localizer::{default_kappa_list, Adjacency};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

/// Regular grid `min, min + step, …` up to `max` (default `2j`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: Option<f64>,
    pub step: f64,
}

/// Rectangle of reference frequencies. Missing bounds come from the
/// spectrum's bounding box padded by 10%.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    pub re_min: Option<f64>,
    pub re_max: Option<f64>,
    pub im_min: Option<f64>,
    pub im_max: Option<f64>,
    pub re_count: usize,
    pub im_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Position,
    Plane,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdjacencySpec {
    Four,
    Eight,
}

impl From<AdjacencySpec> for Adjacency {
    fn from(a: AdjacencySpec) -> Self {
        match a {
            AdjacencySpec::Four => Adjacency::Four,
            AdjacencySpec::Eight => Adjacency::Eight,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSpec {
    /// Spin count for the localizer, steady-state and evolution checks.
    pub n_spins: u32,
    /// Tensor-algebra checks run for `2j = 1..=max_two_j`.
    pub max_two_j: u32,
    pub generator_sizes: Vec<u32>,
    /// Random `(Ω, Γ)` pairs per generator size.
    pub generator_pairs: usize,
    pub samples: usize,
    pub hn_instances: usize,
    pub hn_sites: usize,
    pub hn_kappa: f64,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        Self {
            n_spins: 10,
            max_two_j: 20,
            generator_sizes: vec![4, 10, 20],
            generator_pairs: 20,
            samples: 100, hn_instances: 20, hn_sites: 40, hn_kappa: 0.1 }
    }
}

/// Everything a run depends on. Serialized into every sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n_spins: u32,
    pub omega: f64,
    pub gamma: f64,
    /// One value, or the list for `kappa-sweep` (defaults to the standard list there).
    pub kappa: Option<Vec<f64>>,
    pub lambda0: Complex,
    pub x0: f64,
    pub x_grid: AxisSpec,
    pub plane: PlaneSpec,
    pub kappa_axis: SweepKind,
    pub adjacency: AdjacencySpec,
    pub zero_tol_rel: f64,
    pub t_max: f64,
    pub dt: f64,
    pub initial_states: Vec<InitialState>,
    pub method: EvolutionMethod,
    pub dump_coefficients: bool,
    pub validate: ValidateSpec,
    pub seed: u64,
    /// Not part of the physics; dropped from sidecars.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_spins: 10,
            omega: 1.0,
            gamma: 1.0,
            kappa: None,
            lambda0: Complex { re: 0.0, im: 0.0 },
            x0: 1.0,
            x_grid: AxisSpec { min: 0.0, max: None, step: 0.1 },
            plane: PlaneSpec { re_min: None, re_max: None, im_min: None, im_max: None, re_count: 101, im_count: 101 },
            kappa_axis: SweepKind::Position,
            adjacency: AdjacencySpec::Four,
            zero_tol_rel: btc_topology::localizer::DEFAULT_ZERO_TOL_REL,
            t_max: 30.0,
            dt: 0.01,
            initial_states: vec![InitialState { theta: 0.0, phi: 0.0 }],
            method: EvolutionMethod::Auto,
            dump_coefficients: false,
            validate: ValidateSpec::default(),
            seed: 0,
            out_dir: None,
            threads: None,
        }
    }
}

/// Command-line overrides; every field wins over the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// JSON config file (a run config, or a sidecar carrying one under "config")
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true)]
    pub n_spins: Option<u32>,
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Comma-separated for kappa-sweep
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub kappa: Option<Vec<f64>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda0_re: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda0_im: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long, global = true)]
    pub zero_tol_rel: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    #[arg(long, global = true)]
    pub x_step: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub re_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub re_max: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub im_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub im_max: Option<f64>,
    /// Points per axis of the frequency plane
    #[arg(long, global = true)]
    pub grid_count: Option<usize>,
    #[arg(long, global = true, value_parser = parse_sweep_kind)]
    pub kappa_axis: Option<SweepKind>,
    #[arg(long, global = true, value_parser = parse_adjacency)]
    pub adjacency: Option<AdjacencySpec>,

    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Initial coherent state as THETA,PHI or up/down/equator; repeat for several states
    #[arg(long = "state", global = true, value_parser = parse_state, allow_negative_numbers = true)]
    pub states: Vec<InitialState>,
    #[arg(long, global = true, value_parser = parse_method)]
    pub method: Option<EvolutionMethod>,
    /// Also write every coefficient a_kq(t)
    #[arg(long, global = true)]
    pub dump_coefficients: bool,

    /// Test hook: corrupt a named component (`alt-sign`)
    #[arg(long, global = true, hide = true)]
    pub inject_fault: Option<String>,
}

fn parse_sweep_kind(s: &str) -> Result<SweepKind, String> {
    match s {
        "position" => Ok(SweepKind::Position),
        "plane" => Ok(SweepKind::Plane),
        _ => Err(format!("expected position or plane, got {s}")),
    }
}

fn parse_adjacency(s: &str) -> Result<AdjacencySpec, String> {
    match s {
        "four" | "4" => Ok(AdjacencySpec::Four),
        "eight" | "8" => Ok(AdjacencySpec::Eight),
        _ => Err(format!("expected four or eight, got {s}")),
    }
}

fn parse_method(s: &str) -> Result<EvolutionMethod, String> {
    match s {
        "auto" => Ok(EvolutionMethod::Auto),
        "spectral" => Ok(EvolutionMethod::Spectral),
        "integrate" => Ok(EvolutionMethod::Integrate),
        _ => Err(format!("expected auto, spectral or integrate, got {s}")),
    }
}

/// `THETA,PHI` or one of the presets `up`, `down`, `equator`.
fn parse_state(s: &str) -> Result<InitialState, String> {
    match s {
        "up" => return Ok(InitialState { theta: 0.0, phi: 0.0 }),
        "down" => return Ok(InitialState { theta: std::f64::consts::PI, phi: 0.0 }),
        "equator" => return Ok(InitialState { theta: std::f64::consts::FRAC_PI_2, phi: 0.0 }),
        _ => {}
    }
    let (theta, phi) = s.split_once(',').ok_or_else(|| format!("expected THETA,PHI, got {s}"))?;
    let theta = theta.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let phi = phi.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(InitialState { theta, phi })
}

/// Reads a config file. A sidecar is accepted too: its `config` member is used.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value = match value.get("config") {
        Some(inner) if value.get("artifact").is_some() => inner.clone(),
        _ => value,
    };
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match &overrides.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        let o = overrides;
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(cfg.n_spins, o.n_spins);
        set!(cfg.omega, o.omega);
        set!(cfg.gamma, o.gamma);
        if let Some(k) = &o.kappa {
            cfg.kappa = Some(k.clone());
        }
        set!(cfg.lambda0.re, o.lambda0_re);
        set!(cfg.lambda0.im, o.lambda0_im);
        set!(cfg.x0, o.x0);
        set!(cfg.zero_tol_rel, o.zero_tol_rel);
        set!(cfg.x_grid.min, o.x_min);
        if o.x_max.is_some() {
            cfg.x_grid.max = o.x_max;
        }
        set!(cfg.x_grid.step, o.x_step);
        for (field, value) in [
            (&mut cfg.plane.re_min, o.re_min),
            (&mut cfg.plane.re_max, o.re_max),
            (&mut cfg.plane.im_min, o.im_min),
            (&mut cfg.plane.im_max, o.im_max),
        ] {
            if value.is_some() {
                *field = value;
            }
        }
        if let Some(n) = o.grid_count {
            cfg.plane.re_count = n;
            cfg.plane.im_count = n;
        }
        set!(cfg.kappa_axis, o.kappa_axis);
        set!(cfg.adjacency, o.adjacency);
        set!(cfg.t_max, o.t_max);
        set!(cfg.dt, o.dt);
        if !o.states.is_empty() {
            cfg.initial_states = o.states.clone();
        }
        set!(cfg.method, o.method);
        if o.dump_coefficients {
            cfg.dump_coefficients = true;
        }
        set!(cfg.seed, o.seed);
        if o.out_dir.is_some() {
            cfg.out_dir = o.out_dir.clone();
        }
        if o.threads.is_some() {
            cfg.threads = o.threads;
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n_spins == 0 || self.n_spins > 80 {
            return bad(format!("n_spins must be in 1..=80, got {}", self.n_spins));
        }
        for (name, v) in [
            ("omega", self.omega),
            ("gamma", self.gamma),
            ("lambda0.re", self.lambda0.re),
            ("lambda0.im", self.lambda0.im),
            ("x0", self.x0),
            ("x_grid.min", self.x_grid.min),
            ("x_grid.step", self.x_grid.step),
            ("zero_tol_rel", self.zero_tol_rel),
            ("t_max", self.t_max),
            ("dt", self.dt),
            ("validate.hn_kappa", self.validate.hn_kappa),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if self.omega < 0.0 || self.gamma < 0.0 {
            return bad("omega and gamma must be non-negative".into());
        }
        if let Some(k) = &self.kappa {
            if k.is_empty() || k.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return bad("kappa values must be positive and finite".into());
            }
        }
        if !(self.x_grid.step > 0.0) {
            return bad("x_grid.step must be positive".into());
        }
        if let Some(max) = self.x_grid.max {
            if !(max.is_finite() && max > self.x_grid.min) {
                return bad("x_grid.max must exceed x_grid.min".into());
            }
        }
        let p = &self.plane;
        if p.re_count < 2 || p.im_count < 2 {
            return bad("plane grid needs at least 2 points per axis".into());
        }
        for (lo, hi, axis) in [(p.re_min, p.re_max, "re"), (p.im_min, p.im_max, "im")] {
            if lo.is_some_and(|v| !v.is_finite()) || hi.is_some_and(|v| !v.is_finite()) {
                return bad(format!("plane {axis} bounds must be finite"));
            }
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if !(hi > lo) {
                    return bad(format!("plane {axis}_max must exceed {axis}_min"));
                }
            }
        }
        if !(self.zero_tol_rel > 0.0) {
            return bad("zero_tol_rel must be positive".into());
        }
        if !(self.dt > 0.0) || !(self.t_max > 0.0) {
            return bad("t_max and dt must be positive".into());
        }
        if self.t_max / self.dt > 1e7 {
            return bad("time grid too long".into());
        }
        if self.initial_states.is_empty() {
            return bad("at least one initial state is required".into());
        }
        for s in &self.initial_states {
            if !(0.0..=std::f64::consts::PI).contains(&s.theta) || !(0.0..2.0 * std::f64::consts::PI).contains(&s.phi) {
                return bad(format!("initial state ({}, {}) needs theta in [0, pi] and phi in [0, 2pi)", s.theta, s.phi));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        let v = &self.validate;
        if v.n_spins == 0
            || v.n_spins > 40
            || v.max_two_j == 0
            || v.max_two_j > 60
            || v.generator_sizes.iter().any(|&n| n == 0 || n > 60)
            || v.hn_sites < 8
            || !(v.hn_kappa > 0.0)
        {
            return bad("validate settings out of range".into());
        }
        Ok(())
    }

    /// The single κ of a non-sweep command.
    pub fn single_kappa(&self) -> Result<f64, CliError> {
        match self.kappa.as_deref() {
            None => Ok(btc_topology::localizer::DEFAULT_KAPPA),
            Some([k]) => Ok(*k),
            Some(list) => Err(CliError::Config(format!("expected one kappa, got {}", list.len()))),
        }
    }

    pub fn kappa_list(&self) -> Vec<f64> {
        self.kappa.clone().unwrap_or_else(default_kappa_list)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Copy without the execution-only fields, as written to sidecars.
    pub fn for_sidecar(&self) -> RunConfig {
        RunConfig { out_dir: None, threads: None, ..self.clone() }
    }

    /// Uniform time grid `0, dt, …` up to `t_max`.
    pub fn time_grid(&self) -> Vec<f64> {
        let steps = (self.t_max / self.dt + 1e-9).floor() as usize;
        (0..=steps).map(|i| i as f64 * self.dt).collect()
    }

    pub fn x_grid(&self) -> Vec<f64> {
        let max = self.x_grid.max.unwrap_or(self.n_spins as f64);
        let count = ((max - self.x_grid.min) / self.x_grid.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.x_grid.min + i as f64 * self.x_grid.step).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let mut cfg = RunConfig { kappa: Some(vec![0.1, 1.0 / 3.0]), ..Default::default() };
        cfg.lambda0 = Complex { re: -0.1234567890123, im: 1e-17 };
        cfg.plane.re_min = Some(-2.5);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"n_spin": 4}"#).is_err());
        let partial: RunConfig = serde_json::from_str(r#"{"n_spins": 4}"#).unwrap();
        assert_eq!(partial.n_spins, 4);
        assert_eq!(partial.omega, 1.0);
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"n_spins": 4, "gamma": 0.5}"#).unwrap();
        let o = Overrides { config: Some(path), gamma: Some(2.0), ..Default::default() };
        let cfg = RunConfig::resolve(&o).unwrap();
        assert_eq!((cfg.n_spins, cfg.gamma), (4, 2.0));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for o in [
            Overrides { n_spins: Some(0), ..Default::default() },
            Overrides { gamma: Some(-1.0), ..Default::default() },
            Overrides { kappa: Some(vec![0.0]), ..Default::default() },
            Overrides { x_step: Some(0.0), ..Default::default() },
            Overrides { omega: Some(f64::NAN), ..Default::default() },
        ] {
            assert!(matches!(RunConfig::resolve(&o), Err(CliError::Config(_))));
        }
    }

    #[test]
    fn grids() {
        let cfg = RunConfig { n_spins: 20, ..Default::default() };
        let x = cfg.x_grid();
        assert_eq!(x.len(), 201);
        assert_eq!(x[200], 20.0);
        let t = RunConfig { t_max: 1.0, dt: 0.1, ..Default::default() }.time_grid();
        assert_eq!(t.len(), 11);
    }
}
