//! Flat `key = value` experiment configs.
//!
//! One experiment per file, `#` starts a comment, lists are comma separated and
//! `k` also accepts an inclusive range `a..b`. Keys an experiment does not use
//! are rejected, as are duplicates.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hyperadams_core::{PdeMode, RadialFamily, RadialGrid};

use crate::error::{RunError, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Constants,
    ConformalIdentity,
    Inequalities,
    Blowup,
    SobolevAsymptotics,
    SolvePde,
    Isometry2d,
}

impl ExperimentKind {
    pub const ALL: [Self; 7] = [
        Self::Constants,
        Self::ConformalIdentity,
        Self::Inequalities,
        Self::Blowup,
        Self::SobolevAsymptotics,
        Self::SolvePde,
        Self::Isometry2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Constants => "constants",
            Self::ConformalIdentity => "conformal-identity",
            Self::Inequalities => "inequalities",
            Self::Blowup => "blowup",
            Self::SobolevAsymptotics => "sobolev-asymptotics",
            Self::SolvePde => "solve-pde",
            Self::Isometry2d => "isometry-2d",
        }
    }

    /// Keys accepted besides `experiment`, `k` and `output`.
    fn keys(self) -> &'static [&'static str] {
        const GRID: [&str; 3] = ["n_nodes", "r_max", "grading"];
        match self {
            Self::Constants => &[],
            Self::ConformalIdentity => &GRID,
            Self::Inequalities => &["n_nodes", "r_max", "grading", "samples", "seed", "delta"],
            Self::Blowup => &["n_nodes", "r_max", "grading", "m_list", "beta_list", "beta_factors"],
            Self::SobolevAsymptotics => &["n_nodes", "r_max", "grading", "m_list"],
            Self::SolvePde => &["n_nodes", "r_max", "grading", "q1", "q2", "mode", "tol", "max_iter"],
            Self::Isometry2d => &["translations", "resolution", "seed"],
        }
    }

    fn default_grid(self) -> GridSpec {
        let (n_nodes, r_max, grading) = match self {
            Self::ConformalIdentity => (400, 2.0, 0.0),
            Self::Inequalities => (800, 4.0, 0.0),
            Self::Blowup | Self::SobolevAsymptotics => (4000, 25.0, 6.0),
            Self::SolvePde => (120, 16.0, 0.0),
            Self::Constants | Self::Isometry2d => (0, 0.0, 0.0),
        };
        GridSpec { n_nodes, r_max, grading }
    }

    pub fn uses_grid(self) -> bool {
        !matches!(self, Self::Constants | Self::Isometry2d)
    }

    pub fn supports_refinement(self) -> bool {
        matches!(self, Self::ConformalIdentity | Self::Inequalities | Self::SolvePde)
    }
}

impl FromStr for ExperimentKind {
    type Err = RunError;

    fn from_str(s: &str) -> RunResult<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            RunError::Validation(format!("unknown experiment `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_nodes: usize,
    pub r_max: f64,
    pub grading: f64,
}

impl GridSpec {
    pub fn build(&self) -> RunResult<RadialGrid> {
        RadialGrid::new(self.n_nodes, self.r_max, self.grading).map_err(|e| RunError::Validation(e.to_string()))
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { n_nodes: self.n_nodes * factor, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub k: Vec<u32>,
    pub grid: GridSpec,
    pub m_list: Vec<f64>,
    /// absolute exponents; when empty, `beta_factors` multiples of β₀ are used
    pub beta_list: Vec<f64>,
    pub beta_factors: Vec<f64>,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub q1: RadialFamily,
    pub q2: RadialFamily,
    pub mode: PdeMode,
    pub tol: f64,
    pub max_iter: usize,
    pub translations: usize,
    pub resolution: usize,
    pub output: PathBuf,
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::Validation(msg.into())
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> RunResult<T>
where
    T::Err: fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| invalid(format!("`{key}`: cannot parse `{v}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> RunResult<Vec<T>>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = v.split(',').map(|s| parse_num(key, s)).collect::<RunResult<_>>()?;
    if items.is_empty() {
        return Err(invalid(format!("`{key}` is empty")));
    }
    Ok(items)
}

fn parse_k(v: &str) -> RunResult<Vec<u32>> {
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u32, u32) = (parse_num("k", a)?, parse_num("k", b)?);
        if a > b {
            return Err(invalid(format!("`k` range {a}..{b} is empty")));
        }
        Ok((a..=b).collect())
    } else {
        parse_list("k", v)
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn mode_name(m: PdeMode) -> &'static str {
    match m {
        PdeMode::Convex => "convex",
        PdeMode::LogConstrained => "log-constrained",
    }
}

impl ExperimentConfig {
    /// Parses the text of a config file.
    pub fn parse(text: &str) -> RunResult<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if map.insert(key.clone(), value).is_some() {
                return Err(invalid(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Self::from_map(&map)
    }

    /// Builds and validates a config from its key/value map.
    pub fn from_map(map: &BTreeMap<String, String>) -> RunResult<Self> {
        let experiment: ExperimentKind =
            map.get("experiment").ok_or_else(|| invalid("missing key `experiment`"))?.parse()?;
        let allowed = experiment.keys();
        for key in map.keys() {
            if !matches!(key.as_str(), "experiment" | "k" | "output") && !allowed.contains(&key.as_str()) {
                return Err(invalid(format!("unknown key `{key}` for experiment {}", experiment.name())));
            }
        }
        let k = parse_k(map.get("k").ok_or_else(|| invalid("missing key `k`"))?)?;
        let get = |key: &str| map.get(key).map(String::as_str);
        let mut grid = experiment.default_grid();
        if let Some(v) = get("n_nodes") {
            grid.n_nodes = parse_num("n_nodes", v)?;
        }
        if let Some(v) = get("r_max") {
            grid.r_max = parse_num("r_max", v)?;
        }
        if let Some(v) = get("grading") {
            grid.grading = parse_num("grading", v)?;
        }
        let m_default: &[f64] = match experiment {
            ExperimentKind::SobolevAsymptotics => &[1e2, 1e3, 1e4, 1e5, 1e6],
            _ => &[1e3, 1e4, 1e5, 1e6],
        };
        let family = |key: &str, default: &str| -> RunResult<RadialFamily> {
            get(key).unwrap_or(default).parse::<RadialFamily>().map_err(|e| invalid(format!("`{key}`: {e}")))
        };
        let mode = match get("mode").unwrap_or("convex") {
            "convex" => PdeMode::Convex,
            "log-constrained" => PdeMode::LogConstrained,
            other => return Err(invalid(format!("`mode` must be convex or log-constrained, got `{other}`"))),
        };
        let beta_list = get("beta_list").map(|v| parse_list("beta_list", v)).transpose()?.unwrap_or_default();
        let beta_factors = match (get("beta_factors"), beta_list.is_empty()) {
            (Some(_), false) => return Err(invalid("give either `beta_list` or `beta_factors`, not both")),
            (Some(v), true) => parse_list("beta_factors", v)?,
            (None, true) if experiment == ExperimentKind::Blowup => vec![0.9, 1.0, 1.1],
            (None, _) => Vec::new(),
        };
        let cfg = Self {
            experiment,
            k,
            grid,
            m_list: get("m_list").map(|v| parse_list("m_list", v)).transpose()?.unwrap_or_else(|| m_default.to_vec()),
            beta_list,
            beta_factors,
            delta: get("delta").map(|v| parse_num("delta", v)).transpose()?.unwrap_or(0.5),
            samples: get("samples").map(|v| parse_num("samples", v)).transpose()?.unwrap_or(100),
            seed: get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(0),
            q1: family("q1", "gaussian:0.5:1")?,
            q2: family("q2", "gaussian:-1.5:1.5")?,
            mode,
            tol: get("tol").map(|v| parse_num("tol", v)).transpose()?.unwrap_or(1e-8),
            max_iter: get("max_iter").map(|v| parse_num("max_iter", v)).transpose()?.unwrap_or(50),
            translations: get("translations").map(|v| parse_num("translations", v)).transpose()?.unwrap_or(10),
            resolution: get("resolution").map(|v| parse_num("resolution", v)).transpose()?.unwrap_or(16),
            output: PathBuf::from(get("output").unwrap_or("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> RunResult<()> {
        use ExperimentKind::*;
        let max_k = match self.experiment {
            Constants => 8,
            ConformalIdentity | Inequalities => 4,
            Blowup | SobolevAsymptotics | SolvePde => 3,
            Isometry2d => 1,
        };
        if let Some(&bad) = self.k.iter().find(|&&k| k == 0 || k > max_k) {
            return Err(invalid(format!("k = {bad} outside 1..={max_k} for {}", self.experiment.name())));
        }
        if self.experiment.uses_grid() {
            let grid = self.grid.build()?;
            if matches!(self.experiment, Blowup | SobolevAsymptotics) {
                if self.m_list.iter().any(|&m| !(m >= 2.0) || !m.is_finite()) {
                    return Err(invalid("every m in `m_list` must be a finite number ≥ 2"));
                }
                if self.experiment == SobolevAsymptotics && self.m_list.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("`m_list` must be increasing"));
                }
                let m_max = self.m_list.iter().cloned().fold(0.0, f64::max);
                let needed = 1.0 / (4.0 * m_max.sqrt());
                if grid.origin_spacing() >= needed {
                    return Err(invalid(format!(
                        "grid spacing {:.3e} near the origin does not resolve m = {m_max:e} (needs < {needed:.3e})",
                        grid.origin_spacing()
                    )));
                }
            }
            if self.experiment == ConformalIdentity && self.grid.r_max < 1.8 {
                return Err(invalid("conformal-identity bumps reach r = 1.74; `r_max` must be at least 1.8"));
            }
            if self.experiment == Inequalities && self.grid.r_max < 3.0 {
                return Err(invalid("inequalities profiles reach r = 2.52 and need zero tail nodes; `r_max` ≥ 3"));
            }
        }
        if self.beta_list.iter().chain(&self.beta_factors).any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(invalid("β values must be finite and positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("`delta` must lie in (0, 1)"));
        }
        if self.experiment == Inequalities && self.samples == 0 {
            return Err(invalid("`samples` must be at least 1"));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(invalid("`tol` must be positive and `max_iter` at least 1"));
        }
        if self.experiment == SolvePde && self.mode == PdeMode::Convex {
            let positive = match self.q2 {
                RadialFamily::Zero => false,
                RadialFamily::Gaussian { amplitude, .. }
                | RadialFamily::Bump { amplitude, .. }
                | RadialFamily::RationalDecay { amplitude, .. } => amplitude > 0.0,
            };
            if positive {
                return Err(invalid("convex mode needs Q₂ ≤ 0; `q2` has a positive amplitude"));
            }
        }
        if self.experiment == Isometry2d && (self.translations == 0 || self.resolution < 2) {
            return Err(invalid("isometry-2d needs `translations` ≥ 1 and `resolution` ≥ 2"));
        }
        Ok(())
    }

    /// Every effective setting of this experiment, defaults included.
    pub fn canonical(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("experiment".into(), self.experiment.name().into());
        m.insert("k".into(), join(&self.k));
        m.insert("output".into(), self.output.display().to_string());
        for &key in self.experiment.keys() {
            let v = match key {
                "n_nodes" => self.grid.n_nodes.to_string(),
                "r_max" => self.grid.r_max.to_string(),
                "grading" => self.grid.grading.to_string(),
                "m_list" => join(&self.m_list),
                "beta_list" if self.beta_list.is_empty() => continue,
                "beta_list" => join(&self.beta_list),
                "beta_factors" if self.beta_factors.is_empty() => continue,
                "beta_factors" => join(&self.beta_factors),
                "delta" => self.delta.to_string(),
                "samples" => self.samples.to_string(),
                "seed" => self.seed.to_string(),
                "q1" => self.q1.to_string(),
                "q2" => self.q2.to_string(),
                "mode" => mode_name(self.mode).into(),
                "tol" => self.tol.to_string(),
                "max_iter" => self.max_iter.to_string(),
                "translations" => self.translations.to_string(),
                "resolution" => self.resolution.to_string(),
                other => unreachable!("key {other} has no canonical form"),
            };
            m.insert(key.into(), v);
        }
        m
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.canonical() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
