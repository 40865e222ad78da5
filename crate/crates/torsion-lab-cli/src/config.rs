//! Experiment configuration.
//!
//! A config file is TOML with a flat, namespaced key scheme:
//!
//! ```toml
//! experiment = "birth-death"
//! output_dir = "out/bd"
//! seed = 1
//! birth-death.A = 2000
//! birth-death.y = 0.0
//! ```
//!
//! Command-line flags use the same keys (`--birth-death.A 2000`) or the
//! short form without the experiment prefix (`--A 2000`). Flags override
//! the file. Unknown keys are rejected.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;
use toml::Value;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("malformed config file: {0}")]
    Syntax(String),
    #[error("unknown experiment `{0}` (expected one of: {names})", names = Experiment::names())]
    UnknownExperiment(String),
    #[error("no experiment given")]
    MissingExperiment,
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("malformed flag `{0}`: expected `--key value` or `--key=value`")]
    MalformedFlag(String),
    #[error("parameter `{key}` expects {expected}, got `{got}`")]
    Type { key: String, expected: &'static str, got: String },
    #[error("precondition violated for `{key}`: {reason}")]
    Precondition { key: String, reason: String },
}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    Torsion,
    Anomaly,
    BirthDeath,
    WittenGlue,
    SmallEig,
    Agmon,
    Cubic,
    CheegerMuller,
    Suspension,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Torsion,
        Experiment::Anomaly,
        Experiment::BirthDeath,
        Experiment::WittenGlue,
        Experiment::SmallEig,
        Experiment::Agmon,
        Experiment::Cubic,
        Experiment::CheegerMuller,
        Experiment::Suspension,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Torsion => "torsion",
            Experiment::Anomaly => "anomaly",
            Experiment::BirthDeath => "birth-death",
            Experiment::WittenGlue => "witten-glue",
            Experiment::SmallEig => "small-eig",
            Experiment::Agmon => "agmon",
            Experiment::Cubic => "cubic",
            Experiment::CheegerMuller => "cheeger-muller",
            Experiment::Suspension => "suspension",
        }
    }

    fn names() -> String {
        Experiment::ALL.iter().map(|e| e.name()).collect::<Vec<_>>().join(", ")
    }

    /// Parameter names with their default values.
    pub fn defaults(self) -> Vec<(&'static str, Value)> {
        use std::f64::consts::PI;
        let f = Value::Float;
        let i = Value::Integer;
        let list = |v: &[f64]| Value::Array(v.iter().map(|&x| Value::Float(x)).collect());
        match self {
            Experiment::Torsion => vec![
                ("complexes", i(10)),
                ("min_degrees", i(2)),
                ("max_degrees", i(4)),
                ("max_rank", i(4)),
                ("random_metrics", Value::Boolean(true)),
            ],
            Experiment::Anomaly => vec![
                ("m", i(64)),
                ("nodes", i(200)),
                ("tau", f(1e-3)),
                ("t_max", f(400.0)),
                ("a", f(1.3)),
                ("b", f(0.8)),
                ("alpha", f(0.7)),
                ("beta", f(1.9)),
                ("gamma", f(-1.1)),
                ("amplitude", f(0.3)),
                ("gauge", Value::Boolean(true)),
            ],
            Experiment::BirthDeath => vec![
                ("n", i(6)),
                ("i", i(3)),
                ("r1", f(0.04)),
                ("r2", f(0.06)),
                ("delta", f(0.0015)),
                ("y", f(0.0)),
                ("A", f(1000.0)),
                ("separation", Value::Boolean(false)),
            ],
            Experiment::WittenGlue => vec![
                ("t", f(40.0)),
                ("r", f(0.2)),
                ("y_a", f(PI / 4.0)),
                ("y_b", f(5.0 * PI / 4.0)),
                ("k", i(7)),
                ("wave", f(2.0)),
                ("amplitudes", list(&[1.0, 4.0, 16.0, 64.0])),
            ],
            Experiment::SmallEig => vec![
                ("wave", f(2.0)),
                ("t_min", f(20.0)),
                ("t_max", f(80.0)),
                ("t_step", f(10.0)),
                ("branch", i(1)),
            ],
            Experiment::Agmon => vec![
                ("wave", f(2.0)),
                ("ts", list(&[10.0, 20.0, 40.0, 80.0])),
                ("b", f(0.5)),
                ("radius", f(2.0)),
            ],
            Experiment::Cubic => vec![("ts", list(&[1.0, 8.0, 64.0])), ("k", i(6)), ("n", i(1500))],
            Experiment::CheegerMuller => vec![
                ("theta", list(&[PI / 3.0, PI / 2.0, PI, 4.0 * PI / 3.0])),
                ("n_grid", i(2000)),
            ],
            Experiment::Suspension => vec![
                ("n", i(4)),
                ("m", i(1)),
                ("c", f(0.8)),
                ("t", f(1.0)),
                ("t_prime", f(2.0)),
            ],
        }
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ConfigError::UnknownExperiment(s.to_string()))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Every parameter of the experiment, defaults filled in.
    pub params: BTreeMap<String, Value>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

/// Raw settings gathered from one source before merging.
#[derive(Debug, Default)]
struct Layer {
    experiment: Option<String>,
    output_dir: Option<String>,
    seed: Option<Value>,
    /// `(key as written, optional experiment prefix, parameter, value)`.
    params: Vec<(String, Option<String>, String, Value)>,
}

impl Layer {
    fn set(&mut self, key: &str, value: Value) -> Result<()> {
        match key {
            "experiment" => self.experiment = Some(as_string(key, &value)?),
            "output_dir" | "output-dir" => self.output_dir = Some(as_string(key, &value)?),
            "seed" => self.seed = Some(value),
            _ => {
                let (prefix, name) = match key.split_once('.') {
                    Some((p, n)) => (Some(p.to_string()), n.to_string()),
                    None => (None, key.to_string()),
                };
                if name.is_empty() || name.contains('.') {
                    return Err(ConfigError::UnknownKey(key.to_string()));
                }
                self.params.push((key.to_string(), prefix, name, value));
            }
        }
        Ok(())
    }
}

fn as_string(key: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        other => Err(ConfigError::Type { key: key.into(), expected: "a string", got: other.to_string() }),
    }
}

fn parse_file(text: &str) -> Result<Layer> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    let mut layer = Layer::default();
    for (key, value) in table {
        match value {
            Value::Table(inner) if !matches!(key.as_str(), "experiment" | "output_dir" | "seed") => {
                for (name, v) in inner {
                    if matches!(v, Value::Table(_)) {
                        return Err(ConfigError::UnknownKey(format!("{key}.{name}")));
                    }
                    layer.set(&format!("{key}.{name}"), v)?;
                }
            }
            v => layer.set(&key, v)?,
        }
    }
    Ok(layer)
}

/// Reads a flag value as a TOML literal, falling back to a bare string.
fn flag_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn parse_flags(flags: &[String]) -> Result<Layer> {
    let mut layer = Layer::default();
    let mut it = flags.iter();
    while let Some(tok) = it.next() {
        let body = tok.strip_prefix("--").ok_or_else(|| ConfigError::MalformedFlag(tok.clone()))?;
        let (key, raw) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => (body.to_string(), it.next().ok_or_else(|| ConfigError::MalformedFlag(tok.clone()))?.clone()),
        };
        if key.is_empty() {
            return Err(ConfigError::MalformedFlag(tok.clone()));
        }
        let value = if matches!(key.as_str(), "experiment" | "output_dir" | "output-dir") {
            Value::String(raw)
        } else {
            flag_value(&raw)
        };
        layer.set(&key, value)?;
    }
    Ok(layer)
}

/// Coerces `v` to the type of `default`. Integers are accepted where floats
/// are expected, a scalar where a list is expected, and comma-separated
/// strings (from flags) for lists.
fn coerce(key: &str, default: &Value, v: Value) -> Result<Value> {
    let bad = |expected: &'static str, got: &Value| ConfigError::Type { key: key.into(), expected, got: got.to_string() };
    match (default, &v) {
        (Value::Float(_), Value::Float(_)) => Ok(v),
        (Value::Float(_), Value::Integer(n)) => Ok(Value::Float(*n as f64)),
        (Value::Float(_), _) => Err(bad("a number", &v)),
        (Value::Integer(_), Value::Integer(_)) => Ok(v),
        (Value::Integer(_), _) => Err(bad("an integer", &v)),
        (Value::Boolean(_), Value::Boolean(_)) => Ok(v),
        (Value::Boolean(_), _) => Err(bad("true or false", &v)),
        (Value::Array(_), Value::Array(items)) => {
            let xs: Result<Vec<Value>> = items.iter().map(|x| coerce(key, &Value::Float(0.0), x.clone())).collect();
            Ok(Value::Array(xs?))
        }
        (Value::Array(_), Value::String(s)) => {
            let xs: Result<Vec<Value>> = s
                .split(',')
                .map(|p| p.trim().parse::<f64>().map(Value::Float).map_err(|_| bad("a list of numbers", &v)))
                .collect();
            Ok(Value::Array(xs?))
        }
        (Value::Array(_), Value::Float(_) | Value::Integer(_)) => {
            Ok(Value::Array(vec![coerce(key, &Value::Float(0.0), v.clone())?]))
        }
        (Value::Array(_), _) => Err(bad("a list of numbers", &v)),
        _ => Err(bad("a supported value", &v)),
    }
}

impl ExperimentConfig {
    /// Builds the configuration from an optional experiment name given on
    /// the command line, an optional file, and `--key value` flags.
    pub fn load(experiment: Option<&str>, file: Option<&Path>, flags: &[String]) -> Result<Self> {
        let file_layer = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::Read { path: path.display().to_string(), reason: e.to_string() })?;
                parse_file(&text)?
            }
            None => Layer::default(),
        };
        let flag_layer = parse_flags(flags)?;
        let name = experiment
            .map(str::to_string)
            .or(flag_layer.experiment.clone())
            .or(file_layer.experiment.clone())
            .ok_or(ConfigError::MissingExperiment)?;
        let experiment: Experiment = name.parse()?;
        let defaults: BTreeMap<&str, Value> = experiment.defaults().into_iter().collect();
        let mut params: BTreeMap<String, Value> = defaults.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        for layer in [&file_layer, &flag_layer] {
            for (key, prefix, name, value) in &layer.params {
                if prefix.as_deref().is_some_and(|p| p != experiment.name()) {
                    return Err(ConfigError::UnknownKey(key.clone()));
                }
                let default = defaults.get(name.as_str()).ok_or_else(|| ConfigError::UnknownKey(key.clone()))?;
                params.insert(name.clone(), coerce(key, default, value.clone())?);
            }
        }
        let seed = match flag_layer.seed.as_ref().or(file_layer.seed.as_ref()) {
            None => 0,
            Some(Value::Integer(n)) if *n >= 0 => *n as u64,
            Some(other) => {
                return Err(ConfigError::Type { key: "seed".into(), expected: "a non-negative integer", got: other.to_string() })
            }
        };
        let output_dir = flag_layer
            .output_dir
            .or(file_layer.output_dir)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("results").join(experiment.name()));
        Ok(ExperimentConfig { experiment, params, output_dir, seed })
    }

    /// Sorted `key = value` lines; the input to the config hash.
    pub fn canonical(&self) -> String {
        let mut out = format!("experiment = \"{}\"\nseed = {}\n", self.experiment, self.seed);
        for (k, v) in &self.params {
            out.push_str(&format!("{}.{} = {}\n", self.experiment, k, v));
        }
        out
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical). The output directory
    /// is excluded so that moving results does not change the hash.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn get(&self, key: &str) -> &Value {
        &self.params[key]
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        match self.get(key) {
            Value::Float(x) if x.is_finite() => Ok(*x),
            other => Err(ConfigError::Type { key: key.into(), expected: "a finite number", got: other.to_string() }),
        }
    }

    pub fn int(&self, key: &str) -> Result<i64> {
        match self.get(key) {
            Value::Integer(n) => Ok(*n),
            other => Err(ConfigError::Type { key: key.into(), expected: "an integer", got: other.to_string() }),
        }
    }

    pub fn boolean(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            Value::Boolean(b) => Ok(*b),
            other => Err(ConfigError::Type { key: key.into(), expected: "true or false", got: other.to_string() }),
        }
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key) {
            Value::Array(xs) if !xs.is_empty() => xs
                .iter()
                .map(|x| match x {
                    Value::Float(v) if v.is_finite() => Ok(*v),
                    other => Err(ConfigError::Type { key: key.into(), expected: "finite numbers", got: other.to_string() }),
                })
                .collect(),
            other => Err(ConfigError::Type { key: key.into(), expected: "a non-empty list of numbers", got: other.to_string() }),
        }
    }

    /// Integer in `lo..=hi`, as `usize`.
    pub fn count(&self, key: &str, lo: usize, hi: usize) -> Result<usize> {
        let n = self.int(key)?;
        if n < lo as i64 || n > hi as i64 {
            return Err(precondition(key, format!("must lie in {lo}..={hi}, got {n}")));
        }
        Ok(n as usize)
    }
}

pub fn precondition(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Precondition { key: key.into(), reason: reason.into() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn short_and_namespaced_flags() {
        let cfg = ExperimentConfig::load(Some("birth-death"), None, &flags(&["--A", "2000", "--birth-death.y=1e-7"])).unwrap();
        assert_eq!(cfg.float("A").unwrap(), 2000.0);
        assert_eq!(cfg.float("y").unwrap(), 1e-7);
        assert_eq!(cfg.float("r1").unwrap(), 0.04);
    }

    #[test]
    fn file_then_flags() {
        let layer = parse_file("experiment = \"cubic\"\nseed = 4\ncubic.n = 900\ncubic.k = 3\n").unwrap();
        assert_eq!(layer.experiment.as_deref(), Some("cubic"));
        assert_eq!(layer.params.len(), 2);
        let lists = ExperimentConfig::load(Some("cubic"), None, &flags(&["--ts", "1,8"])).unwrap();
        assert_eq!(lists.floats("ts").unwrap(), vec![1.0, 8.0]);
    }

    #[test]
    fn rejections() {
        let err = |e: Option<&str>, f: &[&str]| ExperimentConfig::load(e, None, &flags(f)).unwrap_err();
        assert!(matches!(err(Some("cubic"), &["--bogus", "1"]), ConfigError::UnknownKey(_)));
        assert!(matches!(err(Some("cubic"), &["--agmon.b", "1"]), ConfigError::UnknownKey(_)));
        assert!(matches!(err(Some("cubic"), &["--k", "x"]), ConfigError::Type { .. }));
        assert!(matches!(err(Some("cubic"), &["--k"]), ConfigError::MalformedFlag(_)));
        assert!(matches!(err(Some("nope"), &[]), ConfigError::UnknownExperiment(_)));
        assert!(matches!(err(None, &[]), ConfigError::MissingExperiment));
        assert!(matches!(parse_file("experiment = "), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::load(Some("agmon"), None, &flags(&["--output-dir", "x"])).unwrap();
        let b = ExperimentConfig::load(Some("agmon"), None, &flags(&["--output_dir", "y"])).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
