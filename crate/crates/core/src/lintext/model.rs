use serde::Serialize;

use super::objective::{self, argmax, softmax, Loss, Params};
use super::{extract_features, FeatureConfig, LintextError, TrainConfig};

/// A trained classifier.
///
/// Only embedding rows of buckets seen during training are stored
/// (`rows` is sorted); every other bucket acts as a zero vector that
/// still counts towards the averaging denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearTextModel {
    pub(super) features: FeatureConfig,
    pub(super) train: TrainConfig,
    pub(super) labels: Vec<String>,
    pub(super) rows: Vec<u32>,
    pub(super) embeddings: Vec<f32>,
    pub(super) output: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub label: String,
    /// Probabilities under the softmax head, raw margins under the hinge head,
    /// in label-vocabulary order.
    pub scores: Vec<f64>,
}

impl Prediction {
    /// Score of the predicted label.
    pub fn confidence(&self) -> f64 {
        self.scores[argmax(&self.scores)]
    }
}

impl LinearTextModel {
    /// Assembles a model from raw parts. `rows` must be strictly
    /// increasing and the weight arrays must match the declared shapes.
    pub fn from_parts(
        features: FeatureConfig,
        train: TrainConfig,
        labels: Vec<String>,
        rows: Vec<u32>,
        embeddings: Vec<f32>,
        output: Vec<f32>,
    ) -> Result<Self, LintextError> {
        let dim = features.embed_dim as usize;
        let corrupt = |m: &str| Err(LintextError::Corrupt(m.to_string()));
        if dim == 0 || labels.is_empty() {
            return corrupt("empty label vocabulary or zero embedding dimension");
        }
        if !rows.windows(2).all(|w| w[0] < w[1]) {
            return corrupt("embedding rows are not strictly increasing");
        }
        if rows.last().is_some_and(|&r| r >= features.hash_buckets) {
            return corrupt("embedding row outside the hash space");
        }
        if embeddings.len() != rows.len() * dim || output.len() != labels.len() * dim {
            return corrupt("weight array sizes do not match the declared shapes");
        }
        Ok(LinearTextModel {
            features,
            train,
            labels,
            rows,
            embeddings,
            output,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn feature_config(&self) -> &FeatureConfig {
        &self.features
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train
    }

    pub fn loss(&self) -> Loss {
        self.train.loss
    }

    pub fn dim(&self) -> usize {
        self.features.embed_dim as usize
    }

    /// Buckets with a stored embedding row.
    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn embeddings(&self) -> &[f32] {
        &self.embeddings
    }

    pub fn output_weights(&self) -> &[f32] {
        &self.output
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub(super) fn params(&self) -> Params<'_> {
        Params {
            dim: self.dim(),
            num_labels: self.labels.len(),
            embeddings: &self.embeddings,
            output: &self.output,
        }
    }

    /// Hidden vector for a list of feature ids.
    fn hidden_for_ids(&self, ids: &[u32]) -> Vec<f64> {
        let dim = self.dim();
        let mut h = vec![0.0; dim];
        if ids.is_empty() {
            return h;
        }
        for id in ids {
            if let Ok(slot) = self.rows.binary_search(id) {
                let row = &self.embeddings[slot * dim..(slot + 1) * dim];
                for (acc, &v) in h.iter_mut().zip(row) {
                    *acc += f64::from(v);
                }
            }
        }
        let inv = 1.0 / ids.len() as f64;
        h.iter_mut().for_each(|v| *v *= inv);
        h
    }

    /// Raw scores `W h`.
    pub fn raw_scores(&self, text: &str) -> Vec<f64> {
        let ids = extract_features(text, &self.features);
        let h = self.hidden_for_ids(&ids);
        let mut s = Vec::new();
        objective::scores(&self.params(), &h, &mut s);
        s
    }

    /// Scores every label and returns the arg-max (first label wins ties).
    pub fn predict(&self, text: &str) -> Prediction {
        let raw = self.raw_scores(text);
        let scores = match self.train.loss {
            Loss::Softmax => softmax(&raw),
            Loss::Hinge => raw,
        };
        Prediction {
            label: self.labels[argmax(&scores)].clone(),
            scores,
        }
    }

    /// Returns the prediction only when its probability reaches
    /// `min_confidence`. A threshold of 1 is never met because softmax
    /// probabilities of finite scores are strictly below 1.
    pub fn predict_with_threshold(
        &self,
        text: &str,
        min_confidence: f64,
    ) -> Result<Option<Prediction>, LintextError> {
        if self.train.loss != Loss::Softmax {
            return Err(LintextError::NotProbabilistic);
        }
        if !(min_confidence > 0.0 && min_confidence <= 1.0) {
            return Err(LintextError::InvalidThreshold(min_confidence));
        }
        if min_confidence >= 1.0 {
            return Ok(None);
        }
        let p = self.predict(text);
        Ok((p.confidence() >= min_confidence).then_some(p))
    }

    /// Mean objective (without the L2 term) over labeled texts.
    pub fn mean_loss<'a, I>(&self, examples: I) -> f64
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut total = 0.0;
        let mut n = 0usize;
        for (text, label) in examples {
            let Some(y) = self.label_index(label) else { continue };
            let s = self.raw_scores(text);
            total += objective::score_loss(self.train.loss, &s, y).0;
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            total / n as f64
        }
    }
}
