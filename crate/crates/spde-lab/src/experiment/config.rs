//! Flat human-readable key-value experiment configuration.
//!
//! ```text
//! kind = regularity
//! model = riesz
//! alpha = 1.2
//! d = 2
//! n = 64
//! len = 2.0
//! dt = 0.0005
//! n_steps = 256
//! replicas = 8
//! seed = 1
//! out = out/regularity
//! ```
//!
//! `#` starts a comment; keys are validated per experiment kind before any
//! computation starts.

use crate::correlation::CorrelationModel;
use crate::error::Error;
use crate::grid::Grid;
use crate::Result;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    AdmissibilityTable,
    NoiseValidation,
    Solve,
    Equivalence,
    Regularity,
}

impl ExperimentKind {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "admissibility_table" => ExperimentKind::AdmissibilityTable,
            "noise_validation" => ExperimentKind::NoiseValidation,
            "solve" => ExperimentKind::Solve,
            "equivalence" => ExperimentKind::Equivalence,
            "regularity" => ExperimentKind::Regularity,
            other => return Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::AdmissibilityTable => "admissibility_table",
            ExperimentKind::NoiseValidation => "noise_validation",
            ExperimentKind::Solve => "solve",
            ExperimentKind::Equivalence => "equivalence",
            ExperimentKind::Regularity => "regularity",
        }
    }
}

/// Parsed and validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    keys: BTreeMap<String, String>,
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = k.trim().to_string();
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let keys = parse_kv(text)?;
        let kind = ExperimentKind::parse(
            keys.get("kind").ok_or_else(|| Error::Config("missing `kind`".into()))?,
        )?;
        let cfg = ExperimentConfig { kind, keys };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.keys.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.keys.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Error::Config(format!("key `{key}`: {e}"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Error::Config(format!("key `{key}`: {e}"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Error::Config(format!("key `{key}`: {e}"))),
        }
    }

    pub fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => {
                let parsed: std::result::Result<Vec<f64>, _> =
                    v.split(',').map(|t| t.trim().parse()).collect();
                Ok(Some(parsed.map_err(|e| Error::Config(format!("key `{key}`: {e}")))?))
            }
        }
    }

    pub fn list_usize(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => {
                let parsed: std::result::Result<Vec<usize>, _> =
                    v.split(',').map(|t| t.trim().parse()).collect();
                Ok(Some(parsed.map_err(|e| Error::Config(format!("key `{key}`: {e}")))?))
            }
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_or("seed", 1)
    }

    pub fn replicas(&self) -> Result<usize> {
        self.usize_or("replicas", 1)
    }

    pub fn out_dir(&self) -> std::path::PathBuf {
        std::path::PathBuf::from(self.get("out").unwrap_or("out"))
    }

    /// Correlation model from the `model`/parameter/`d` keys.
    pub fn model(&self) -> Result<CorrelationModel> {
        let d = self.usize_or("d", 1)?;
        match self.require("model")? {
            "riesz" => CorrelationModel::riesz(self.f64_or("alpha", 0.5)?, d),
            "gaussian" => CorrelationModel::gaussian(self.f64_or("sigma", 1.0)?, d),
            "exponential" => CorrelationModel::exponential(self.f64_or("lambda", 1.0)?, d),
            "white_noise" => CorrelationModel::white_noise(d),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }

    /// Lattice/time mesh from `d, n, len, dt, n_steps`.
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(
            self.usize_or("d", 1)?,
            self.usize_or("n", 64)?,
            self.f64_or("len", 16.0)?,
            self.f64_or("dt", 1e-3)?,
            self.usize_or("n_steps", 100)?,
        )
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            ExperimentKind::AdmissibilityTable => {
                // optional sweep lists; defaults cover the standard grid
                self.list_f64("alphas")?;
                self.list_f64("etas")?;
            }
            ExperimentKind::NoiseValidation => {
                self.model()?;
                self.grid()?;
                self.list_usize("lags")?;
            }
            ExperimentKind::Solve => {
                self.model()?;
                self.grid()?;
                let solver = self.get("solver").unwrap_or("both");
                if !["mild", "weak", "both"].contains(&solver) {
                    return Err(Error::Config(format!("unknown solver `{solver}`")));
                }
            }
            ExperimentKind::Equivalence => {
                self.model()?;
                self.grid()?;
                let levels = self.usize_or("levels", 3)?;
                if levels < 2 || levels > 6 {
                    return Err(Error::Config(format!("levels must lie in 2..=6, got {levels}")));
                }
            }
            ExperimentKind::Regularity => {
                self.model()?;
                self.grid()?;
                self.list_usize("lags")?;
            }
        }
        Ok(())
    }

    /// Canonical serialization (sorted keys) used for hashing and echo.
    /// The output directory is where artifacts land, not part of the
    /// experiment identity, so it is excluded.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.keys {
            if k == "out" {
                continue;
            }
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    /// SHA-256 of the canonical form; recorded in every output.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_hashes_canonically() {
        let a = ExperimentConfig::parse("kind = solve\nmodel = gaussian\nsigma = 1.0\nd = 1\nn = 16\nlen = 8\ndt = 0.01\nn_steps = 4\n").unwrap();
        let b = ExperimentConfig::parse("n = 16\nkind = solve\nd = 1\nsigma = 1.0\nmodel = gaussian\nlen = 8\nn_steps = 4\ndt = 0.01\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.kind, ExperimentKind::Solve);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::parse("model = gaussian\n").is_err()); // no kind
        assert!(ExperimentConfig::parse("kind = frobnicate\n").is_err());
        assert!(ExperimentConfig::parse("kind = solve\nmodel = nope\nn = 16\n").is_err());
        assert!(ExperimentConfig::parse("kind = solve\nmodel = gaussian\nsolver = magic\n").is_err());
        assert!(ExperimentConfig::parse("kind = solve\nkind = solve\nmodel = gaussian\n").is_err());
        // grid invariant surfaces through validation
        assert!(ExperimentConfig::parse("kind = solve\nmodel = gaussian\nn = 100\n").is_err());
    }
}
