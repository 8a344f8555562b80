//! Run configuration: one TOML file per run, with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run: RunSection,
    pub candidate: Option<CandidateSection>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub surgery: Vec<SurgerySection>,
    pub spread: Option<SpreadSection>,
    pub certify: Option<CertifySection>,
    pub homology: Option<HomologySection>,
    pub flow: Option<FlowSection>,
    pub bubble: Option<BubbleSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub quad_level: Option<usize>,
    pub cache_dir: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelScheme {
    /// p0, p1, ... in the order of the critical search.
    #[default]
    Index,
    /// x0, x1, x2_1, x2_2, x3_1, x3_2 on a six-point critical set of S³.
    Heart,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSection {
    pub file: Option<String>,
    pub expression: Option<String>,
    pub dim: Option<usize>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub labels: LabelScheme,
}

fn default_resolution() -> usize {
    6
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub gradient: f64,
    pub merge: f64,
    pub degeneracy: f64,
    pub max_iterations: usize,
    pub max_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = bubbletower_core::func_core::SearchTolerances::default();
        Tolerances {
            gradient: d.gradient,
            merge: d.merge,
            degeneracy: d.degeneracy,
            max_iterations: d.max_iterations,
            max_step: d.max_step,
        }
    }
}

/// A critical point named by its position in the search output or its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRef {
    Index(usize),
    Label(String),
}

impl std::fmt::Display for PointRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointRef::Index(i) => write!(f, "#{i}"),
            PointRef::Label(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgerySection {
    pub point: PointRef,
    pub epsilon: f64,
    pub delta: f64,
    /// Target Hessian coefficients; otherwise every bᵢ is shifted by ε|bᵢ|.
    pub coefficients: Option<Vec<f64>>,
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpreadSection {
    pub file: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub kappa_lo: Option<f64>,
    pub kappa_hi: Option<f64>,
    #[serde(default)]
    pub comparison: Vec<ComparisonSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSection {
    pub upper: String,
    pub lower: String,
    pub sigma: usize,
    pub sigma_lower: usize,
    pub kappa_prev: f64,
    pub kappa: f64,
    pub cap: Option<f64>,
    pub tau_margin: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomologySection {
    pub complex: Option<String>,
    #[serde(default)]
    pub theorem2: bool,
    pub scheme: Option<SchemeSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    #[serde(default, rename = "event")]
    pub events: Vec<EventEntry>,
    /// Chain complex file of the sublevel set.
    pub sublevel: Option<String>,
    /// Attaching chain as a bitstring over the generators one degree down.
    pub attaching: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventEntry {
    pub label: String,
    pub level: f64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartRef {
    Coordinates(Vec<f64>),
    Point(PointRef),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub start: StartRef,
    /// Geodesic offset from a critical start point along its stable direction.
    #[serde(default = "default_offset")]
    pub offset: f64,
    /// Size of a seeded random tangent perturbation of the start.
    #[serde(default)]
    pub jitter: f64,
    pub lambda0: f64,
    #[serde(default)]
    pub v0: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    pub horizon: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
    #[serde(default = "one")]
    pub c3: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(default)]
    pub coupling: f64,
    pub tol: Option<f64>,
    pub lambda_cap: Option<f64>,
    pub lambda_floor: Option<f64>,
    #[serde(default = "default_c_v_limit")]
    pub c_v_limit: f64,
}

fn default_offset() -> f64 {
    1e-4
}

fn one() -> f64 {
    1.0
}

fn default_samples() -> usize {
    200
}

fn default_c_v_limit() -> f64 {
    10.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleSection {
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Bubble centres; every critical point when absent.
    pub centers: Option<Vec<PointRef>>,
}

fn default_lambdas() -> Vec<f64> {
    vec![8.0, 16.0, 32.0, 64.0]
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quad_level: Option<usize>,
}

/// A parsed configuration together with the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub base: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub quad_level: usize,
}

pub const DEFAULT_QUAD_LEVEL: usize = 6;

impl LoadedConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let mut config: Config = toml::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if let Some(s) = overrides.seed {
            config.run.seed = Some(s);
        }
        if let Some(q) = overrides.quad_level {
            config.run.quad_level = Some(q);
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let out = match (&overrides.out, &config.run.out) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => base.join(o),
            (None, None) => PathBuf::from("out"),
        };
        let loaded = LoadedConfig {
            seed: config.run.seed.unwrap_or(0),
            quad_level: config.run.quad_level.unwrap_or(DEFAULT_QUAD_LEVEL),
            config,
            base,
            out,
        };
        loaded.validate().map_err(|e| match e {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok(loaded)
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base.join(rel)
    }

    /// Reads a file referenced by the config.
    pub fn read(&self, rel: &str) -> Result<String, CliError> {
        let p = self.resolve(rel);
        std::fs::read_to_string(&p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))
    }

    /// Every file the config refers to, as written.
    pub fn referenced_files(&self) -> Vec<String> {
        let c = &self.config;
        let mut files = Vec::new();
        if let Some(f) = c.candidate.as_ref().and_then(|s| s.file.clone()) {
            files.push(f);
        }
        if let Some(s) = &c.spread {
            files.push(s.file.clone());
        }
        if let Some(h) = &c.homology {
            files.extend(h.complex.clone());
            files.extend(h.scheme.as_ref().and_then(|s| s.sublevel.clone()));
        }
        files
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        for f in self.referenced_files() {
            if !self.resolve(&f).is_file() {
                return Err(CliError::input(format!(
                    "referenced file '{f}' does not exist"
                )));
            }
        }
        if self.quad_level == 0 {
            return Err(CliError::input("quad_level must be at least 1"));
        }
        if let Some(cand) = &c.candidate {
            match (&cand.file, &cand.expression, cand.dim) {
                (Some(_), None, None) | (None, Some(_), Some(_)) => {}
                _ => {
                    return Err(CliError::input(
                        "[candidate] needs either `file` or both `expression` and `dim`",
                    ))
                }
            }
            if cand.resolution == 0 {
                return Err(CliError::input("[candidate] resolution must be positive"));
            }
        }
        let t = &c.tolerances;
        if !([t.gradient, t.merge, t.degeneracy, t.max_step]
            .iter()
            .all(|v| *v > 0.0)
            && t.max_iterations > 0)
        {
            return Err(CliError::input("[tolerances] must all be positive"));
        }
        for s in &c.surgery {
            if !(s.epsilon > 0.0 && s.delta > 0.0) {
                return Err(CliError::input(
                    "[[surgery]] epsilon and delta must be positive",
                ));
            }
            if s.coefficients.is_some() == s.direction.is_some() {
                return Err(CliError::input(
                    "[[surgery]] needs exactly one of `coefficients` and `direction`",
                ));
            }
        }
        if let Some(f) = &c.flow {
            let positive = [f.lambda0, f.horizon, f.c_v_limit, f.offset, f.alpha]
                .iter()
                .all(|v| *v > 0.0);
            if !positive || f.samples == 0 || f.v0 < 0.0 || f.jitter < 0.0 {
                return Err(CliError::input("[flow] parameters must be positive"));
            }
            if f.tol.is_some_and(|t| t <= 0.0) {
                return Err(CliError::input("[flow] tol must be positive"));
            }
        }
        if let Some(b) = &c.bubble {
            if b.lambdas.is_empty() || b.lambdas.iter().any(|l| l.is_nan() || *l < 1.0) {
                return Err(CliError::input("[bubble] lambdas must be ≥ 1"));
            }
        }
        Ok(())
    }

    /// The effective configuration with output locations removed, so the hash
    /// depends only on what was computed.
    pub fn canonical(&self) -> serde_json::Value {
        let mut c = self.config.clone();
        c.run.out = None;
        c.run.cache_dir = None;
        c.run.seed = Some(self.seed);
        c.run.quad_level = Some(self.quad_level);
        serde_json::to_value(&c).expect("config serializes")
    }
}
