//! Run configuration: one TOML file plus command-line overrides.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use relog_core::abstraction::ScoreMode;
use relog_core::envs::{builtin_language, EnvConfig, EnvKind, EvaluatorSet, Variant};
use relog_core::logic::Language;
use relog_core::reasoner::ReasonerParams;
use relog_core::training::{LogicTrainConfig, PpoConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Perception {
    /// Sigmoid slope per world unit.
    pub alpha: f64,
    /// Distance below which `closeby` holds.
    pub closeby: f64,
}

impl Default for Perception {
    fn default() -> Self {
        Self { alpha: 5.0, closeby: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Abstraction {
    pub beam_width: usize,
    pub depth: usize,
    pub max_body_len: usize,
    /// States collected from the oracle.
    pub samples: usize,
    /// Probability of a uniform action while collecting.
    pub epsilon: f64,
    pub score_mode: ScoreMode,
}

impl Default for Abstraction {
    fn default() -> Self {
        Self {
            beam_width: 3,
            depth: 3,
            max_body_len: 6,
            samples: 2000,
            epsilon: 0.1,
            score_mode: ScoreMode::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub env: EnvConfig,
    /// Language file; the shipped language of `env` when absent.
    pub language: Option<PathBuf>,
    pub modes: Option<PathBuf>,
    pub initial_rules: Option<PathBuf>,
    /// Weight rows of the logic policy; one per action predicate by default.
    pub slots: Option<usize>,
    pub perception: Perception,
    pub reasoner: ReasonerParams,
    pub ppo: PpoConfig,
    pub logic: LogicTrainConfig,
    pub abstraction: Abstraction,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: PathBuf::from("runs"),
            env: EnvConfig::new(EnvKind::GetOut, Variant::Base),
            language: None,
            modes: None,
            initial_rules: None,
            slots: None,
            perception: Perception::default(),
            reasoner: ReasonerParams::default(),
            ppo: PpoConfig::default(),
            logic: LogicTrainConfig::default(),
            abstraction: Abstraction::default(),
        }
    }
}

/// Fails with "file not found" when `path` does not exist.
pub fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("file not found: {}", path.display());
    }
    Ok(())
}

pub fn read_file(path: &Path) -> Result<String> {
    require_file(path)?;
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = read_file(path)?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Checks that every referenced file exists and every section is valid.
    pub fn validate(&self) -> Result<()> {
        for p in [&self.language, &self.modes, &self.initial_rules].into_iter().flatten() {
            require_file(p)?;
        }
        self.env.validate()?;
        self.reasoner.validate()?;
        self.ppo.validate()?;
        self.logic.validate()?;
        if self.slots == Some(0) {
            bail!("slots must be at least 1");
        }
        Ok(())
    }

    pub fn evaluators(&self) -> EvaluatorSet {
        EvaluatorSet::standard(self.perception.alpha, self.perception.closeby)
    }

    /// The configured language, with `obj1..objN` object constants when the
    /// file leaves them out.
    pub fn language(&self) -> Result<Language> {
        match &self.language {
            None => Ok(builtin_language(self.env.env, self.env.variant)?),
            Some(path) => {
                let lang = Language::from_toml_str(&read_file(path)?)?;
                if lang.datatype("object").is_some() && lang.constants("object").is_empty() {
                    let objects = (1..=self.env.num_objects()).map(|i| format!("obj{i}")).collect();
                    Ok(lang.with_constants("object", objects)?)
                } else {
                    Ok(lang)
                }
            }
        }
    }

    /// Stable fingerprint of the effective configuration; where results are
    /// written does not count.
    pub fn hash(&self) -> String {
        let key = Self { out_dir: PathBuf::new(), ..self.clone() };
        let text = toml::to_string(&key).unwrap_or_default();
        let mut h = DefaultHasher::new();
        text.hash(&mut h);
        format!("{:016x}", h.finish())
    }

    /// Comment line written at the top of every CSV.
    pub fn metadata(&self, command: &str) -> String {
        format!(
            "command={command} env={} variant={} config_hash={} seed={}",
            self.env.env,
            self.env.variant,
            self.hash(),
            self.seed
        )
    }
}
