//! Linear text classifiers over hashed n-gram features.
//!
//! One model family serves both the MSA/dialect filter and country-level
//! dialect identification: a text is represented by the mean of the
//! embeddings of its hashed n-gram features, and a linear head `W h` is
//! trained with either a softmax (cross-entropy) or a multiclass hinge
//! loss by plain SGD.

mod features;
mod format;
mod model;
pub mod objective;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use features::{
    extract_features, fnv1a64, ngram_hash, FeatureConfig, NgramKind, DEFAULT_HASH_BUCKETS,
    MIN_HASH_BUCKETS,
};
pub use format::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};
pub use model::{LinearTextModel, Prediction};
pub use objective::Loss;
pub use train::{train, TrainReport, Trainer};

#[derive(Debug, thiserror::Error)]
pub enum LintextError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("training corpus has a single label `{0}`; at least two are required")]
    SingleLabel(String),
    #[error("confidence thresholds need a softmax model; this model uses the hinge loss")]
    NotProbabilistic,
    #[error("min_confidence must be in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("not a model file (bad magic {0:02x?})")]
    BadMagic([u8; 4]),
    #[error("unsupported model format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("model file is truncated")]
    Truncated,
    #[error("model file is corrupt: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f32,
    pub epochs: u32,
    pub seed: u64,
    pub loss: Loss,
    /// L2 penalty strength; 0 disables it.
    pub l2: f32,
    /// Linear decay of the learning rate to zero over all updates.
    pub lr_decay: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 50,
            seed: 0,
            loss: Loss::Softmax,
            l2: 0.0,
            lr_decay: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LintextError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(LintextError::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(LintextError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(LintextError::InvalidConfig(format!("l2 must be >= 0, got {}", self.l2)));
        }
        Ok(())
    }
}

/// Named feature/training settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// MSA vs. dialect filter: char 3-6 grams, dim 100, lr 0.05, 50 epochs, softmax.
    MsaDa,
    /// Dialect ID on char 3-7 grams with a hinge head.
    C37,
    /// Dialect ID on char 3-7 plus word 2-6 grams with a hinge head.
    Cw26,
}

impl Preset {
    pub fn feature_config(self) -> FeatureConfig {
        match self {
            Preset::MsaDa => FeatureConfig::default(),
            Preset::C37 => FeatureConfig {
                char_ngram_min: 3,
                char_ngram_max: 7,
                ..FeatureConfig::default()
            },
            Preset::Cw26 => FeatureConfig {
                char_ngram_min: 3,
                char_ngram_max: 7,
                word_ngram_min: 2,
                word_ngram_max: 6,
                use_word: true,
                ..FeatureConfig::default()
            },
        }
    }

    pub fn train_config(self) -> TrainConfig {
        match self {
            Preset::MsaDa => TrainConfig::default(),
            Preset::C37 | Preset::Cw26 => TrainConfig {
                learning_rate: 0.05,
                epochs: 20,
                loss: Loss::Hinge,
                l2: 1e-4,
                ..TrainConfig::default()
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::MsaDa => "msa-da",
            Preset::C37 => "c37",
            Preset::Cw26 => "cw26",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = LintextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "msa-da" => Ok(Preset::MsaDa),
            "c37" => Ok(Preset::C37),
            "cw26" => Ok(Preset::Cw26),
            other => Err(LintextError::InvalidConfig(format!(
                "unknown preset `{other}` (expected msa-da, c37 or cw26)"
            ))),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Softmax => "softmax",
            Loss::Hinge => "hinge",
        })
    }
}

impl FromStr for Loss {
    type Err = LintextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "softmax" => Ok(Loss::Softmax),
            "hinge" => Ok(Loss::Hinge),
            other => Err(LintextError::InvalidConfig(format!("unknown loss `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_published_settings() {
        let p = Preset::MsaDa;
        let (fc, tc) = (p.feature_config(), p.train_config());
        assert_eq!((fc.char_ngram_min, fc.char_ngram_max, fc.use_word), (3, 6, false));
        assert_eq!(fc.embed_dim, 100);
        assert_eq!((tc.learning_rate, tc.epochs, tc.loss), (0.05, 50, Loss::Softmax));
        let fc = Preset::Cw26.feature_config();
        assert_eq!((fc.char_ngram_min, fc.char_ngram_max, fc.word_ngram_min, fc.word_ngram_max), (3, 7, 2, 6));
        assert!(fc.use_char && fc.use_word);
        assert!(!Preset::C37.feature_config().use_word);
        for p in [Preset::MsaDa, Preset::C37, Preset::Cw26] {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            p.feature_config().validate().unwrap();
            p.train_config().validate().unwrap();
        }
        assert!("svm".parse::<Preset>().is_err());
    }

    #[test]
    fn train_config_validation() {
        assert!(TrainConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { l2: -1.0, ..Default::default() }.validate().is_err());
    }
}
