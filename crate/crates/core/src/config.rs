//! Run configuration file (TOML) covering learner, world and evaluation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AtgError, Result};
use crate::eval::SweepResolution;
use crate::learner::LearnerConfig;
use crate::sim::SimConfig;

/// Sorted, distinct action counts at which models are scored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Checkpoints(Vec<usize>);

impl Checkpoints {
    pub fn new(mut steps: Vec<usize>) -> Result<Self> {
        steps.sort_unstable();
        steps.dedup();
        if steps.is_empty() {
            return Err(AtgError::config("checkpoints", "at least one checkpoint required"));
        }
        if steps[0] == 0 {
            return Err(AtgError::config("checkpoints", "checkpoints must be positive"));
        }
        Ok(Self(steps))
    }

    pub fn steps(&self) -> &[usize] {
        &self.0
    }

    pub fn last(&self) -> usize {
        *self.0.last().expect("nonempty")
    }
}

impl FromStr for Checkpoints {
    type Err = AtgError;

    /// Accepts `start..end:step` (end inclusive) or a comma list.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| AtgError::config("checkpoints", format!("`{s}`: {msg}"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad("expected integers"));
        if let Some((range, step)) = s.split_once(':') {
            let (start, end) = range.split_once("..").ok_or_else(|| bad("expected start..end:step"))?;
            let (start, end, step) = (num(start)?, num(end)?, num(step)?);
            if step == 0 || start > end {
                return Err(bad("need step ≥ 1 and start ≤ end"));
            }
            Self::new((start..=end).step_by(step).collect())
        } else {
            Self::new(s.split(',').map(num).collect::<Result<_>>()?)
        }
    }
}

impl TryFrom<String> for Checkpoints {
    type Error = AtgError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Checkpoints> for String {
    fn from(c: Checkpoints) -> String {
        c.to_string()
    }
}

impl fmt::Display for Checkpoints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.0;
        if s.len() >= 2 {
            let step = s[1] - s[0];
            if s.windows(2).all(|w| w[1] - w[0] == step) {
                return write!(f, "{}..{}:{}", s[0], s[s.len() - 1], step);
            }
        }
        let parts: Vec<String> = s.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub trials: usize,
    pub checkpoints: Checkpoints,
    /// Orbit angle samples in the ground-truth sweep.
    pub orbit_resolution: usize,
    /// Grasp offset samples per dimension in the ground-truth sweep.
    pub grasp_resolution: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            trials: 5,
            checkpoints: Checkpoints((50..=500).step_by(50).collect()),
            orbit_resolution: 720,
            grasp_resolution: 8,
        }
    }
}

impl EvalConfig {
    pub fn resolution(&self) -> SweepResolution {
        SweepResolution {
            orbit: self.orbit_resolution,
            grasp: self.grasp_resolution,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub learner: LearnerConfig,
    pub sim: SimConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| AtgError::config("<document>", e.to_string()))?;
        let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            AtgError::config(path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.learner.validate()?;
        self.sim.validate()?;
        if self.eval.trials == 0 {
            return Err(AtgError::config("eval.trials", "must be at least 1"));
        }
        if self.eval.orbit_resolution == 0 {
            return Err(AtgError::config("eval.orbit_resolution", "must be at least 1"));
        }
        if self.eval.grasp_resolution == 0 {
            return Err(AtgError::config("eval.grasp_resolution", "must be at least 1"));
        }
        Ok(())
    }

    /// Seeds both the world and the learner.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.learner.seed = seed;
        self.sim.seed = seed;
        self
    }

    /// SHA-256 of the canonical TOML rendering, hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Header lines recording how an artifact was produced.
    pub fn provenance(&self) -> Vec<String> {
        vec![
            format!("seed: {}", self.learner.seed),
            format!("config_hash: {}", self.hash()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::ActionSet;

    #[test]
    fn checkpoint_range() {
        let c: Checkpoints = "50..500:50".parse().unwrap();
        assert_eq!(c.steps().len(), 10);
        assert_eq!(c.steps()[9], 500);
        assert_eq!(c.to_string(), "50..500:50");
        assert_eq!("100,50".parse::<Checkpoints>().unwrap().steps(), &[50, 100]);
        assert!("50..10:5".parse::<Checkpoints>().is_err());
        assert!("0..10:5".parse::<Checkpoints>().is_err());
        assert!("a..b:c".parse::<Checkpoints>().is_err());
    }

    #[test]
    fn parse_partial_file() {
        let c = RunConfig::from_toml_str(
            "[learner]\nactions = \"orbit+grasp\"\nmax_actions = 600\n[eval]\ncheckpoints = \"100..600:100\"\n",
        )
        .unwrap();
        assert_eq!(c.learner.actions, ActionSet::OrbitGrasp);
        assert_eq!(c.eval.checkpoints.last(), 600);
        assert_eq!(c.sim, SimConfig::default());
    }

    #[test]
    fn type_error_names_field() {
        match RunConfig::from_toml_str("[learner]\nalpha = \"fast\"\n") {
            Err(AtgError::Config { field, .. }) => assert_eq!(field, "learner.alpha"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml_str("[sim]\nwobble = 1.0\n") {
            Err(AtgError::Config { field, .. }) => assert!(field.starts_with("sim"), "{field}"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml_str("[learner]\nalpha = 0.0\n") {
            Err(AtgError::Config { field, .. }) => assert_eq!(field, "learner.alpha"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn toml_round_trip_and_hash() {
        let c = RunConfig::default().with_seed(7);
        let back = RunConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_ne!(c.hash(), RunConfig::default().hash());
        assert_eq!(c.hash().len(), 64);
    }
}
