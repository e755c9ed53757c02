//! Per-language hyperparameter profiles.
//!
//! Built-in profiles `en`, `es` and `pt` carry the tuned simplification
//! settings; `stub` is a small profile for fixture worlds. Switching a profile
//! to the substitution task zeroes the frequency weight and doubles the
//! candidate pools to 30/50.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Simplification,
    Substitution,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplification" => Ok(Task::Simplification),
            "substitution" => Ok(Task::Substitution),
            other => Err(Error::InvalidInput(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub language: String,
    pub task: Task,
    /// Weight of the static-embedding term for multi-token targets.
    pub alpha: f64,
    /// Fusion weights for embedding similarity, LM score, frequency and the
    /// augmented-context score, in that order.
    pub weights: [f64; 4],
    pub m1: usize,
    pub m2: usize,
    pub k: usize,
    pub beam: usize,
    pub vocab_size: usize,
    pub sample_n: usize,
    pub seed: u64,
    /// Also fill from the swapped article when the mask follows "a"/"an".
    pub article_variant: bool,
    pub edit_threshold: f64,
    pub max_sentence_tokens: usize,
}

/// The knobs the generation and ranking stages read.
pub type GenerationConfig = Profile;

impl Profile {
    fn base(language: &str, alpha: f64, weights: [f64; 4]) -> Self {
        Profile {
            language: language.to_string(),
            task: Task::Simplification,
            alpha,
            weights,
            m1: 15,
            m2: 25,
            k: 4,
            beam: 20,
            vocab_size: 20_000,
            sample_n: 300,
            seed: 0,
            article_variant: language == "en",
            edit_threshold: 0.8,
            max_sentence_tokens: crate::corpus::DEFAULT_MAX_TOKENS,
        }
    }

    pub fn english() -> Self {
        Self::base("en", 0.2, [5.0, 1.0, 1.0, 1.0])
    }

    pub fn spanish() -> Self {
        Self::base("es", 0.7, [3.0, 1.0, 0.0, 3.0])
    }

    pub fn portuguese() -> Self {
        Self::base("pt", 0.6, [3.0, 1.0, 0.0, 2.0])
    }

    /// English settings at fixture scale.
    pub fn stub() -> Self {
        Profile {
            vocab_size: 200,
            seed: 13,
            ..Self::english()
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "en" => Ok(Self::english()),
            "es" => Ok(Self::spanish()),
            "pt" => Ok(Self::portuguese()),
            "stub" => Ok(Self::stub()),
            other => Err(Error::InvalidInput(format!("unknown profile {other:?}"))),
        }
    }

    pub fn builtin_names() -> [&'static str; 4] {
        ["en", "es", "pt", "stub"]
    }

    /// Apply the task's defaults. Substitution drops the frequency signal and
    /// doubles the pools; later explicit overrides still win.
    pub fn with_task(mut self, task: Task) -> Self {
        if task == Task::Substitution && self.task != Task::Substitution {
            self.weights[2] = 0.0;
            self.m1 = 30;
            self.m2 = 50;
            self.vocab_size = self.vocab_size * 3 / 2;
        }
        self.task = task;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("profile {}: {m}", self.language)));
        if self.m1 == 0 || self.m2 == 0 || self.k == 0 || self.beam == 0 {
            return bad("m1, m2, k and beam must be at least 1");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha must be a non-negative number");
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("weights must be non-negative numbers");
        }
        if !(self.edit_threshold > 0.0 && self.edit_threshold <= 1.0) {
            return bad("edit_threshold must be in (0, 1]");
        }
        if self.sample_n < self.k {
            return bad("sample_n must be at least k");
        }
        // TOML integers are signed 64-bit
        if self.seed > i64::MAX as u64 {
            return bad("seed must fit in a signed 64-bit integer");
        }
        Ok(())
    }
}

/// A named collection of profiles, stored as TOML under `[profiles.<name>]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    pub profiles: BTreeMap<String, Profile>,
}

impl ProfileSet {
    pub fn builtin() -> Self {
        ProfileSet {
            profiles: Profile::builtin_names()
                .into_iter()
                .map(|n| (n.to_string(), Profile::builtin(n).expect("builtin")))
                .collect(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let set: ProfileSet = toml::from_str(text)?;
        for p in set.profiles.values() {
            p.validate()?;
        }
        Ok(set)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, name: &str) -> Result<Profile> {
        self.profiles
            .get(name)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("no profile named {name:?}")))
    }
}
