//! Run configuration: a JSON document, overlaid by `QMLE_SEED` and then by
//! command-line flags. The resolved form, with every default filled in, is
//! embedded in each output.

use std::path::{Path, PathBuf};

use qmle_core::dist::{make_uniform, make_zipf, Distribution};
use qmle_core::entropy::Target;
use qmle_core::multilevel::{Backend, PipelineOptions};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

pub const SEED_ENV: &str = "QMLE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum DistSource {
    Uniform { n: usize },
    Zipf { n: usize, s: f64 },
    /// One probability per line.
    File { path: PathBuf },
    Explicit { probs: Vec<f64> },
}

impl DistSource {
    pub fn load(&self) -> Result<Distribution, CliError> {
        let d = match self {
            DistSource::Uniform { n } => make_uniform(*n),
            DistSource::Zipf { n, s } => make_zipf(*n, *s),
            DistSource::File { path } => Distribution::from_file(path),
            DistSource::Explicit { probs } => Distribution::new(probs.clone()),
        };
        d.map_err(|e| CliError::Config(format!("distribution: {e}")))
    }

    /// The same generator on `n` points.
    pub fn with_n(&self, n: usize) -> Result<Self, CliError> {
        match self {
            DistSource::Uniform { .. } => Ok(DistSource::Uniform { n }),
            DistSource::Zipf { s, .. } => Ok(DistSource::Zipf { n, s: *s }),
            _ => Err(CliError::Config("an n axis needs a uniform or zipf distribution".into())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            DistSource::Uniform { n } => format!("uniform(n={n})"),
            DistSource::Zipf { n, s } => format!("zipf(n={n},s={s})"),
            DistSource::File { path } => format!("file({})", path.display()),
            DistSource::Explicit { probs } => format!("explicit(n={})", probs.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
    pub n: Vec<usize>,
    /// Seeds per grid point, counted up from the run seed.
    pub seeds: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { eps: Vec::new(), n: Vec::new(), seeds: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub q: Vec<f64>,
    pub eps: Vec<f64>,
    pub n: Vec<usize>,
    pub shannon: bool,
    pub adversarial_seeds: u64,
    /// Distributions drawn for the backend comparison.
    pub backend_cases: usize,
    /// Halve every `B_j` before checking; a negative control.
    pub sabotage_bounds: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            q: vec![0.25, 0.4, 0.5, 0.75, 1.25, 1.5, 2.0, 2.5, 3.3],
            eps: vec![0.2, 0.1, 0.05],
            n: vec![16, 256],
            shannon: true,
            adversarial_seeds: 20,
            backend_cases: 20,
            sabotage_bounds: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub distribution: DistSource,
    pub functional: Target,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    pub backend: Backend,
    pub pipeline: PipelineOptions,
    pub sweep: SweepConfig,
    pub verify: VerifyConfig,
}

/// Every default except `eps`, which has none.
pub fn defaults() -> Value {
    serde_json::json!({
        "distribution": DistSource::Uniform { n: 4 },
        "functional": Target::Tsallis { q: 2.0 },
        "trials": 50,
        "seed": 0,
        "backend": Backend::Block,
        "pipeline": PipelineOptions::default(),
        "sweep": SweepConfig::default(),
        "verify": VerifyConfig::default(),
    })
}

/// Recursive object merge; non-object values in `top` replace `base`.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    // Tagged enums are replaced whole when the tag changes.
                    Some(slot) if !tag_changes(slot, &v) => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

fn tag_changes(old: &Value, new: &Value) -> bool {
    match (old.get("kind"), new.get("kind")) {
        (Some(a), Some(b)) => a != b,
        _ => false,
    }
}

/// `a.b.c=value` as a nested object; `value` is JSON when it parses, else a string.
pub fn assignment(spec: &str) -> Result<Value, CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {spec:?}")))?;
    let mut v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
    for key in path.rsplit('.') {
        if key.is_empty() {
            return Err(CliError::Config(format!("empty key in {path:?}")));
        }
        let mut m = Map::new();
        m.insert(key.into(), v);
        v = Value::Object(m);
    }
    Ok(v)
}

pub fn read_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
    if !v.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    Ok(v)
}

/// Layers: defaults, file, `QMLE_SEED`, then flag overrides in order.
pub fn resolve(file: Option<Value>, env_seed: Option<&str>, overrides: Vec<Value>) -> Result<Config, CliError> {
    let mut v = defaults();
    if let Some(f) = file {
        merge(&mut v, f);
    }
    if let Some(s) = env_seed {
        let seed: u64 = s.trim().parse().map_err(|_| CliError::Config(format!("{SEED_ENV}={s:?} is not a u64")))?;
        merge(&mut v, serde_json::json!({ "seed": seed }));
    }
    for o in overrides {
        merge(&mut v, o);
    }
    if v.get("eps").is_none_or(Value::is_null) {
        return Err(CliError::Config("missing eps".into()));
    }
    let cfg: Config = serde_json::from_value(v).map_err(|e| CliError::Config(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

impl Config {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(CliError::Config(format!("eps {} outside (0, 1)", self.eps)));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be positive".into()));
        }
        if self.sweep.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(CliError::Config("sweep.eps entries must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering() {
        let file = serde_json::json!({ "eps": 0.2, "seed": 4, "distribution": { "kind": "zipf", "n": 8, "s": 1.0 } });
        let cfg = resolve(Some(file), Some("9"), vec![assignment("functional.q=0.5").unwrap()]).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.functional, Target::Tsallis { q: 0.5 });
        assert_eq!(cfg.distribution, DistSource::Zipf { n: 8, s: 1.0 });
        assert_eq!(cfg.trials, 50);
    }

    #[test]
    fn tag_switch_replaces_variant() {
        let cfg = resolve(None, None, vec![assignment("eps=0.1").unwrap(), assignment("functional={\"kind\":\"shannon\"}").unwrap()])
            .unwrap();
        assert_eq!(cfg.functional, Target::Shannon);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(resolve(None, None, vec![]), Err(CliError::Config(_))));
        assert!(resolve(None, None, vec![assignment("eps=0.1").unwrap(), assignment("bogus=1").unwrap()]).is_err());
        assert!(resolve(None, Some("x"), vec![assignment("eps=0.1").unwrap()]).is_err());
    }
}
