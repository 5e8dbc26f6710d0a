//! Distant supervision for the MSA/dialect training corpus.
//!
//! A tweet is MSA when it contains an MSA relative pronoun and no
//! dialectal one, dialectal when the reverse holds, and unlabeled
//! otherwise. The trigger pronouns are masked as `RELATIVE` in the emitted
//! text so a classifier cannot learn them back.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::records::{write_tsv_row, TweetRecord};
use crate::textnorm::{
    normalize_tweet, tokenize, NormalizationConfig, DA_RELATIVE_PRONOUNS, MSA_RELATIVE_PRONOUNS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantLabel {
    #[serde(rename = "MSA")]
    Msa,
    #[serde(rename = "DA")]
    Da,
}

impl VariantLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            VariantLabel::Msa => "MSA",
            VariantLabel::Da => "DA",
        }
    }
}

impl fmt::Display for VariantLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantLabel {
    type Err = WeakLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "MSA" => Ok(VariantLabel::Msa),
            "DA" => Ok(VariantLabel::Da),
            other => Err(WeakLabelError::UnknownLabel(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakLabeledRecord {
    pub label: VariantLabel,
    pub text: String,
}

#[derive(Debug, thiserror::Error)]
pub enum WeakLabelError {
    #[error("weak labeling requires replace_relative_pronouns to be enabled")]
    PronounMaskingDisabled,
    #[error("unknown variant label `{0}`")]
    UnknownLabel(String),
}

/// Labels a text by its relative pronouns, matched as whole tokens.
pub fn label_by_pronoun(text: &str) -> Option<VariantLabel> {
    let mut msa = false;
    let mut da = false;
    for tok in &tokenize(text) {
        msa |= MSA_RELATIVE_PRONOUNS.contains(&tok.as_str());
        da |= DA_RELATIVE_PRONOUNS.contains(&tok.as_str());
    }
    match (msa, da) {
        (true, false) => Some(VariantLabel::Msa),
        (false, true) => Some(VariantLabel::Da),
        _ => None,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WeakLabelStats {
    pub read: usize,
    pub malformed: usize,
    pub msa: usize,
    pub da: usize,
    pub no_trigger: usize,
    pub mixed_triggers: usize,
}

/// Streaming labeler; keeps a tally of what it has seen.
#[derive(Debug)]
pub struct WeakLabeler {
    cfg: NormalizationConfig,
    detect: NormalizationConfig,
    stats: WeakLabelStats,
}

impl WeakLabeler {
    pub fn new(cfg: NormalizationConfig) -> Result<Self, WeakLabelError> {
        if !cfg.replace_relative_pronouns {
            return Err(WeakLabelError::PronounMaskingDisabled);
        }
        Ok(WeakLabeler {
            cfg,
            detect: NormalizationConfig {
                replace_relative_pronouns: false,
                ..cfg
            },
            stats: WeakLabelStats::default(),
        })
    }

    /// Labels one tweet. Triggers are detected on the text normalized
    /// without pronoun masking; the emitted text is masked.
    pub fn label(&mut self, tweet: &TweetRecord) -> Option<WeakLabeledRecord> {
        self.stats.read += 1;
        let visible = normalize_tweet(&tweet.text, &self.detect);
        let label = label_by_pronoun(&visible);
        match label {
            Some(VariantLabel::Msa) => self.stats.msa += 1,
            Some(VariantLabel::Da) => self.stats.da += 1,
            None => {
                let toks = tokenize(&visible);
                if toks.iter().any(|t| MSA_RELATIVE_PRONOUNS.contains(&t.as_str())) {
                    self.stats.mixed_triggers += 1;
                } else {
                    self.stats.no_trigger += 1;
                }
            }
        }
        let label = label?;
        Some(WeakLabeledRecord {
            label,
            text: normalize_tweet(&tweet.text, &self.cfg),
        })
    }

    pub fn record_malformed(&mut self) {
        self.stats.read += 1;
        self.stats.malformed += 1;
    }

    pub fn stats(&self) -> &WeakLabelStats {
        &self.stats
    }
}

/// Labels a stream of tweets, skipping (and counting) malformed rows.
/// Output order follows input order.
pub fn build_weak_corpus<I, E>(
    tweets: I,
    cfg: NormalizationConfig,
) -> Result<(Vec<WeakLabeledRecord>, WeakLabelStats), WeakLabelError>
where
    I: IntoIterator<Item = Result<TweetRecord, E>>,
{
    let mut labeler = WeakLabeler::new(cfg)?;
    let mut out = Vec::new();
    for row in tweets {
        match row {
            Ok(t) => out.extend(labeler.label(&t)),
            Err(_) => labeler.record_malformed(),
        }
    }
    Ok((out, labeler.stats))
}

/// Downsamples the majority class to the size of the minority class.
/// Survivors keep their input order.
pub fn balance_classes(records: Vec<WeakLabeledRecord>, seed: u64) -> Vec<WeakLabeledRecord> {
    let msa: Vec<usize> = positions(&records, VariantLabel::Msa);
    let da: Vec<usize> = positions(&records, VariantLabel::Da);
    let (mut major, minor) = if msa.len() >= da.len() { (msa, da) } else { (da, msa) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    major.shuffle(&mut rng);
    major.truncate(minor.len());
    let mut keep = vec![false; records.len()];
    for i in major.into_iter().chain(minor) {
        keep[i] = true;
    }
    records
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect()
}

fn positions(records: &[WeakLabeledRecord], label: VariantLabel) -> Vec<usize> {
    records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label == label)
        .map(|(i, _)| i)
        .collect()
}

/// Reserves up to `per_class` records of each label for testing, chosen
/// by a seeded shuffle. Both halves keep input order.
pub fn holdout_split(
    records: Vec<WeakLabeledRecord>,
    per_class: usize,
    seed: u64,
) -> (Vec<WeakLabeledRecord>, Vec<WeakLabeledRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = vec![false; records.len()];
    for label in [VariantLabel::Msa, VariantLabel::Da] {
        let mut idx = positions(&records, label);
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(per_class) {
            test[i] = true;
        }
    }
    let mut train_part = Vec::new();
    let mut test_part = Vec::new();
    for (r, t) in records.into_iter().zip(test) {
        if t {
            test_part.push(r);
        } else {
            train_part.push(r);
        }
    }
    (train_part, test_part)
}

/// Writes `label<TAB>text` lines.
pub fn write_weak_tsv<W: Write>(w: &mut W, records: &[WeakLabeledRecord]) -> std::io::Result<()> {
    for r in records {
        write_tsv_row(w, &[r.label.as_str(), &r.text])?;
    }
    Ok(())
}
