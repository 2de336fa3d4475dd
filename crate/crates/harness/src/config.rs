//! Experiment configuration, read from `key = value` lines or JSON.
//!
//! The line format repeats a key to build a list:
//!
//! ```text
//! mu = 1
//! n = 16
//! n = 32
//! function = x_lnmu
//! check = converge
//! ```
//!
//! A key given with an empty value (`check =`) sets an explicitly empty
//! list. `crates/harness/schema/config.schema.json` documents both forms.

use crate::json;
use logkant::analysis::Grid;
use logkant::funcexpr::resolve;
use logkant::{Execution, Family, FuncExpr, LogWeight, QuadratureRule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    Converge,
    Lp,
    Voronovskaja,
    Saturation,
    ModulusBound,
    KfuncBound,
    BasisInequality,
    Constants,
}

impl CheckId {
    pub const ALL: [CheckId; 8] = [
        CheckId::Converge,
        CheckId::Lp,
        CheckId::Voronovskaja,
        CheckId::Saturation,
        CheckId::ModulusBound,
        CheckId::KfuncBound,
        CheckId::BasisInequality,
        CheckId::Constants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckId::Converge => "converge",
            CheckId::Lp => "lp",
            CheckId::Voronovskaja => "voronovskaja",
            CheckId::Saturation => "saturation",
            CheckId::ModulusBound => "modulus-bound",
            CheckId::KfuncBound => "kfunc-bound",
            CheckId::BasisInequality => "basis-inequality",
            CheckId::Constants => "constants",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckId::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let known: Vec<_> = CheckId::ALL.iter().map(|c| c.name()).collect();
            ConfigError(format!("unknown check `{s}`; known checks: {}", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            _ => err(format!("unknown format `{s}`; expected csv, json or svg")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKindName {
    Uniform,
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub kind: GridKindName,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { kind: GridKindName::Uniform, points: 257 }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, ConfigError> {
        let g = match self.kind {
            GridKindName::Uniform => Grid::uniform(self.points),
            GridKindName::Chebyshev => Grid::chebyshev(self.points),
        };
        g.map_err(|e| ConfigError(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSpec {
    pub order: usize,
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for QuadSpec {
    fn default() -> Self {
        let r = QuadratureRule::default();
        QuadSpec { order: r.order, tol: r.tol, max_depth: r.max_depth }
    }
}

impl QuadSpec {
    pub fn rule(&self) -> QuadratureRule {
        QuadratureRule { order: self.order, tol: self.tol, max_depth: self.max_depth, kink_points: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: None, formats: vec![Format::Json] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub families: Vec<Family>,
    pub n_schedule: Vec<u64>,
    pub mu: f64,
    /// Registry names or expressions in `x`.
    pub functions: Vec<String>,
    pub grid: GridSpec,
    pub quadrature: QuadSpec,
    pub checks: Vec<CheckId>,
    pub seed: u64,
    pub output: OutputSpec,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    /// The default suite: every check over the whole registry at `mu = 1`.
    fn default() -> Self {
        ExperimentConfig {
            families: vec![Family::LogKantorovich],
            n_schedule: vec![16, 32, 64, 128, 256, 512, 1024],
            mu: 1.0,
            functions: logkant::funcexpr::registry().iter().map(|e| e.name.to_string()).collect(),
            grid: GridSpec::default(),
            quadrature: QuadSpec::default(),
            checks: CheckId::ALL.to_vec(),
            seed: 0,
            output: OutputSpec::default(),
            execution: Execution::default(),
        }
    }
}

/// The part of the configuration that determines the results. Output
/// location and execution mode are left out, so they do not change the hash.
#[derive(Serialize)]
struct Canonical<'a> {
    families: &'a [Family],
    n_schedule: &'a [u64],
    mu: f64,
    functions: &'a [String],
    grid: &'a GridSpec,
    quadrature: &'a QuadSpec,
    checks: &'a [CheckId],
    seed: u64,
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError(format!("`{key}`: cannot parse `{v}`")))
}

/// Parses a comma-separated list of degrees.
pub fn parse_n_list(v: &str) -> Result<Vec<u64>, ConfigError> {
    split_list(v).map(|s| parse_num("n", s)).collect()
}

pub fn parse_check_list(v: &str) -> Result<Vec<CheckId>, ConfigError> {
    split_list(v).map(CheckId::from_str).collect()
}

pub fn parse_format_list(v: &str) -> Result<Vec<Format>, ConfigError> {
    split_list(v).map(Format::from_str).collect()
}

impl ExperimentConfig {
    /// Reads a config file. JSON is recognised by a leading `{`.
    pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        ExperimentConfig::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid JSON config: {e}")))
        } else {
            ExperimentConfig::parse_lines(text)
        }
    }

    pub fn parse_lines(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut c = ExperimentConfig::default();
        // A list key replaces the default on its first occurrence.
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`, got `{line}`", i + 1));
            };
            let (key, value) = (key.trim(), value.trim());
            let first = seen.insert(key.to_string());
            let at = |e: ConfigError| ConfigError(format!("line {}: {e}", i + 1));
            match key {
                "family" => {
                    if first {
                        c.families.clear();
                    }
                    for s in split_list(value) {
                        c.families.push(s.parse().map_err(|e| at(ConfigError(format!("{e}"))))?);
                    }
                }
                "n" | "n_schedule" => {
                    if first {
                        c.n_schedule.clear();
                    }
                    c.n_schedule.extend(parse_n_list(value).map_err(at)?);
                }
                "function" => {
                    if first {
                        c.functions.clear();
                    }
                    if !value.is_empty() {
                        c.functions.push(value.to_string());
                    }
                }
                "check" => {
                    if first {
                        c.checks.clear();
                    }
                    c.checks.extend(parse_check_list(value).map_err(at)?);
                }
                "format" => {
                    if first {
                        c.output.formats.clear();
                    }
                    c.output.formats.extend(parse_format_list(value).map_err(at)?);
                }
                "mu" => c.mu = parse_num(key, value).map_err(at)?,
                "seed" => c.seed = parse_num(key, value).map_err(at)?,
                "grid" => {
                    c.grid.kind = match value {
                        "uniform" => GridKindName::Uniform,
                        "chebyshev" => GridKindName::Chebyshev,
                        _ => return Err(at(ConfigError(format!("unknown grid `{value}`")))),
                    }
                }
                "grid_points" => c.grid.points = parse_num(key, value).map_err(at)?,
                "quad_order" => c.quadrature.order = parse_num(key, value).map_err(at)?,
                "quad_tol" => c.quadrature.tol = parse_num(key, value).map_err(at)?,
                "quad_max_depth" => c.quadrature.max_depth = parse_num(key, value).map_err(at)?,
                "out" => c.output.dir = (!value.is_empty()).then(|| PathBuf::from(value)),
                "execution" => {
                    c.execution = match value {
                        "parallel" => Execution::Parallel,
                        "sequential" => Execution::Sequential,
                        _ => return Err(at(ConfigError(format!("unknown execution mode `{value}`")))),
                    }
                }
                _ => return Err(at(ConfigError(format!("unknown key `{key}`")))),
            }
        }
        Ok(c)
    }

    pub fn weight(&self) -> Result<LogWeight, ConfigError> {
        LogWeight::new(self.mu).map_err(|e| ConfigError(format!("mu: {e}")))
    }

    /// Resolves every function against `ln_mu`.
    pub fn resolved_functions(&self) -> Result<Vec<(String, FuncExpr)>, ConfigError> {
        let w = self.weight()?;
        self.functions
            .iter()
            .map(|name| {
                resolve(name, &w)
                    .map(|f| (name.clone(), f))
                    .map_err(|e| ConfigError(format!("function `{name}`: {e}")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.weight()?;
        if self.families.is_empty() {
            return err("at least one operator family is required");
        }
        if self.n_schedule.is_empty() {
            return err("the n schedule is empty");
        }
        if self.n_schedule[0] == 0 {
            return err("degrees must be at least 1");
        }
        if self.n_schedule.windows(2).any(|p| p[0] >= p[1]) {
            return err(format!("the n schedule {:?} is not strictly increasing", self.n_schedule));
        }
        if self.functions.is_empty() {
            return err("at least one function is required");
        }
        self.resolved_functions()?;
        self.grid.build()?;
        self.quadrature.rule().validate().map_err(|e| ConfigError(format!("quadrature: {e}")))?;
        if self.checks.contains(&CheckId::Voronovskaja) && self.n_schedule.len() < 4 {
            return err("the voronovskaja check extrapolates over the four largest n and needs at least 4 entries");
        }
        Ok(())
    }

    /// SHA-256 of the result-determining fields, in the same 17-digit JSON
    /// encoding used for reports.
    pub fn hash(&self) -> String {
        let canonical = Canonical {
            families: &self.families,
            n_schedule: &self.n_schedule,
            mu: self.mu,
            functions: &self.functions,
            grid: &self.grid,
            quadrature: &self.quadrature,
            checks: &self.checks,
            seed: self.seed,
        };
        let text = json::to_compact(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format_builds_lists() {
        let c = ExperimentConfig::parse(
            "# comment\nmu = 2\nn = 8\nn = 16, 32\nfunction = x2\nfunction = max(0, x - 0.5)\ncheck = converge\n",
        )
        .unwrap();
        assert_eq!(c.mu, 2.0);
        assert_eq!(c.n_schedule, vec![8, 16, 32]);
        assert_eq!(c.functions, vec!["x2", "max(0, x - 0.5)"]);
        assert_eq!(c.checks, vec![CheckId::Converge]);
        c.validate().unwrap();
    }

    #[test]
    fn empty_value_gives_empty_list() {
        let c = ExperimentConfig::parse("check =\n").unwrap();
        assert!(c.checks.is_empty());
        assert_eq!(ExperimentConfig::parse("").unwrap().checks.len(), 8);
    }

    #[test]
    fn json_and_lines_agree() {
        let a = ExperimentConfig::parse("mu = 0.5\nn = 4\nn = 8\nn = 16\nn = 32\nfunction = sin_pi\nseed = 3\n").unwrap();
        let b = ExperimentConfig::parse(
            r#"{"mu": 0.5, "n_schedule": [4, 8, 16, 32], "functions": ["sin_pi"], "seed": 3}"#,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn hash_ignores_output_settings() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output.dir = Some("elsewhere".into());
        b.execution = Execution::Sequential;
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn validation_errors() {
        let bad = [
            "check = nonsense\n",
            "n = 4\nn = 4\n",
            "mu = -1\n",
            "function = \n",
            "function = sin(\n",
            "n = 8\nn = 16\ncheck = voronovskaja\n",
            "colour = red\n",
            "no equals sign\n",
        ];
        for text in bad {
            let r = ExperimentConfig::parse(text).and_then(|c| c.validate());
            assert!(r.is_err(), "{text:?} was accepted");
        }
        let r = ExperimentConfig::parse(r#"{"checks": ["converge", "bogus"]}"#);
        assert!(r.is_err());
    }
}
