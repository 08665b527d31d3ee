//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;
use tresca_core::contact::{ActiveSetMode, SolverConfig};
use tresca_core::elasticity::Material;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("`cells_per_side` and `mesh_file` are mutually exclusive")]
    TwoMeshSources,
    #[error("override `{0}` is missing its value")]
    MissingValue(String),
    #[error("unexpected argument `{0}`, overrides look like `--key value`")]
    StrayArgument(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Grid(usize),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub gap: f64,
    pub friction_bound: f64,
    pub alpha: f64,
    pub order: usize,
    pub mesh: MeshSource,
    pub levels: usize,
    pub n_threshold: usize,
    pub theta: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub active_set_mode: ActiveSetMode,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            youngs_modulus: 1.0,
            poisson_ratio: 0.3,
            gap: -0.1,
            friction_bound: 0.2,
            alpha: 1e-3,
            order: 2,
            mesh: MeshSource::Grid(4),
            levels: 4,
            n_threshold: 8000,
            theta: 0.5,
            tolerance: 1e-8,
            max_iterations: 100,
            active_set_mode: ActiveSetMode::PerQuadraturePoint,
            out: PathBuf::from("out"),
        }
    }
}

pub const KEYS: [&str; 15] = [
    "youngs_modulus",
    "poisson_ratio",
    "gap",
    "friction_bound",
    "alpha",
    "order",
    "cells_per_side",
    "mesh_file",
    "levels",
    "n_threshold",
    "theta",
    "tolerance",
    "max_iterations",
    "active_set_mode",
    "out",
];

/// Canonical key: lowercase with `-` read as `_`.
pub fn normalize_key(key: &str) -> Result<String, ConfigError> {
    let k = key.trim().to_ascii_lowercase().replace('-', "_");
    if KEYS.contains(&k.as_str()) {
        Ok(k)
    } else {
        Err(ConfigError::UnknownKey(key.trim().to_string()))
    }
}

pub fn mode_name(mode: ActiveSetMode) -> &'static str {
    match mode {
        ActiveSetMode::PerQuadraturePoint => "per_point",
        ActiveSetMode::FacetMean => "facet_mean",
    }
}

fn parse_mode(s: &str) -> Option<ActiveSetMode> {
    match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "per_point" | "per_quadrature_point" => Some(ActiveSetMode::PerQuadraturePoint),
        "facet_mean" => Some(ActiveSetMode::FacetMean),
        _ => None,
    }
}

/// Raw settings in file order; later assignments win.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut out = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: i + 1, text: raw.trim().to_string() });
            };
            out.set(k, v.trim())?;
        }
        Ok(out)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.values.insert(normalize_key(key)?, value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Applies `--key value` pairs.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<(), ConfigError> {
        let mut it = args.iter();
        while let Some(a) = it.next() {
            let Some(key) = a.strip_prefix("--") else {
                return Err(ConfigError::StrayArgument(a.clone()));
            };
            if let Some((k, v)) = key.split_once('=') {
                self.set(k, v)?;
                continue;
            }
            let value = it.next().ok_or_else(|| ConfigError::MissingValue(key.to_string()))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut c = RunConfig::default();
        fn num<T: FromStr>(s: &Settings, key: &str, into: &mut T) -> Result<(), ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            if let Some(v) = s.get(key) {
                *into = v.parse().map_err(|e: T::Err| ConfigError::Value {
                    key: key.into(),
                    value: v.into(),
                    reason: e.to_string(),
                })?;
            }
            Ok(())
        }
        num(self, "youngs_modulus", &mut c.youngs_modulus)?;
        num(self, "poisson_ratio", &mut c.poisson_ratio)?;
        num(self, "gap", &mut c.gap)?;
        num(self, "friction_bound", &mut c.friction_bound)?;
        num(self, "alpha", &mut c.alpha)?;
        num(self, "order", &mut c.order)?;
        num(self, "levels", &mut c.levels)?;
        num(self, "n_threshold", &mut c.n_threshold)?;
        num(self, "theta", &mut c.theta)?;
        num(self, "tolerance", &mut c.tolerance)?;
        num(self, "max_iterations", &mut c.max_iterations)?;
        c.mesh = match (self.get("cells_per_side"), self.get("mesh_file")) {
            (Some(_), Some(_)) => return Err(ConfigError::TwoMeshSources),
            (_, Some(path)) => MeshSource::File(PathBuf::from(path)),
            (Some(_), None) => {
                let mut n = 0usize;
                num(self, "cells_per_side", &mut n)?;
                MeshSource::Grid(n)
            }
            (None, None) => c.mesh,
        };
        if let Some(m) = self.get("active_set_mode") {
            c.active_set_mode = parse_mode(m).ok_or_else(|| ConfigError::Value {
                key: "active_set_mode".into(),
                value: m.into(),
                reason: "expected `per_point` or `facet_mean`".into(),
            })?;
        }
        if let Some(o) = self.get("out") {
            c.out = PathBuf::from(o);
        }
        c.validate()?;
        Ok(c)
    }
}

fn bad(key: &str, value: impl ToString, reason: &str) -> ConfigError {
    ConfigError::Value { key: key.into(), value: value.to_string(), reason: reason.into() }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        Material::new(self.youngs_modulus, self.poisson_ratio).map_err(|e| {
            let key = if self.youngs_modulus > 0.0 && self.youngs_modulus.is_finite() {
                ("poisson_ratio", self.poisson_ratio)
            } else {
                ("youngs_modulus", self.youngs_modulus)
            };
            bad(key.0, key.1, &e.to_string())
        })?;
        if !self.gap.is_finite() {
            return Err(bad("gap", self.gap, "must be finite"));
        }
        if !(self.friction_bound >= 0.0 && self.friction_bound.is_finite()) {
            return Err(bad("friction_bound", self.friction_bound, "must be finite and nonnegative"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(bad("alpha", self.alpha, "must be positive"));
        }
        if !matches!(self.order, 1 | 2) {
            return Err(bad("order", self.order, "must be 1 or 2"));
        }
        if self.mesh == MeshSource::Grid(0) {
            return Err(bad("cells_per_side", 0, "must be at least 1"));
        }
        if self.levels == 0 {
            return Err(bad("levels", 0, "must be at least 1"));
        }
        if self.n_threshold == 0 {
            return Err(bad("n_threshold", 0, "must be positive"));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(bad("theta", self.theta, "must lie in (0, 1]"));
        }
        let solver = self.solver();
        solver.validate().map_err(|e| {
            if self.max_iterations == 0 {
                bad("max_iterations", 0, &e.to_string())
            } else {
                bad("tolerance", self.tolerance, &e.to_string())
            }
        })?;
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tolerance: self.tolerance, max_iterations: self.max_iterations, mode: self.active_set_mode }
    }

    /// Re-emits the configuration in the file format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("youngs_modulus", self.youngs_modulus.to_string());
        kv("poisson_ratio", self.poisson_ratio.to_string());
        kv("gap", self.gap.to_string());
        kv("friction_bound", self.friction_bound.to_string());
        kv("alpha", self.alpha.to_string());
        kv("order", self.order.to_string());
        match &self.mesh {
            MeshSource::Grid(n) => kv("cells_per_side", n.to_string()),
            MeshSource::File(p) => kv("mesh_file", p.display().to_string()),
        }
        kv("levels", self.levels.to_string());
        kv("n_threshold", self.n_threshold.to_string());
        kv("theta", self.theta.to_string());
        kv("tolerance", self.tolerance.to_string());
        kv("max_iterations", self.max_iterations.to_string());
        kv("active_set_mode", mode_name(self.active_set_mode).to_string());
        kv("out", self.out.display().to_string());
        s
    }
}
