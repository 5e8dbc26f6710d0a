use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::objective::{loss_and_gradient, Params};
use super::{extract_features, FeatureConfig, LinearTextModel, LintextError, TrainConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainReport {
    pub documents: usize,
    /// Documents without any feature; they never produce a gradient.
    pub empty_documents: usize,
    pub distinct_features: usize,
    /// Mean per-example objective seen during each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Epoch-by-epoch SGD trainer.
///
/// Embedding rows are initialised uniformly in `±1/dim` in bucket order,
/// the output matrix starts at zero, and the corpus is reshuffled with a
/// ChaCha8 stream seeded from `TrainConfig::seed` before every epoch.
/// Identical inputs give bit-identical models.
pub struct Trainer {
    features: FeatureConfig,
    config: TrainConfig,
    labels: Vec<String>,
    rows: Vec<u32>,
    embeddings: Vec<f32>,
    output: Vec<f32>,
    docs: Vec<(Vec<usize>, usize)>,
    order: Vec<usize>,
    rng: ChaCha8Rng,
    step: u64,
    total_steps: u64,
    report: TrainReport,
}

impl Trainer {
    pub fn new<I, T, L>(corpus: I, features: FeatureConfig, config: TrainConfig) -> Result<Self, LintextError>
    where
        I: IntoIterator<Item = (T, L)>,
        T: AsRef<str>,
        L: AsRef<str>,
    {
        features.validate()?;
        config.validate()?;
        let mut texts = Vec::new();
        let mut raw_labels = Vec::new();
        for (t, l) in corpus {
            texts.push(extract_features(t.as_ref(), &features));
            raw_labels.push(l.as_ref().to_string());
        }
        if texts.is_empty() {
            return Err(LintextError::EmptyCorpus);
        }
        let labels: Vec<String> = raw_labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        if labels.len() < 2 {
            return Err(LintextError::SingleLabel(labels[0].clone()));
        }

        let rows: Vec<u32> = texts
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let docs: Vec<(Vec<usize>, usize)> = texts
            .iter()
            .zip(&raw_labels)
            .map(|(ids, l)| {
                let mut slots: Vec<usize> = ids
                    .iter()
                    .map(|id| rows.binary_search(id).expect("id collected above"))
                    .collect();
                slots.sort_unstable();
                (slots, labels.binary_search(l).expect("label collected above"))
            })
            .collect();

        let dim = features.embed_dim as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let bound = 1.0 / dim as f32;
        let embeddings: Vec<f32> = (0..rows.len() * dim).map(|_| rng.gen_range(-bound..bound)).collect();
        let output = vec![0.0; labels.len() * dim];

        let report = TrainReport {
            documents: docs.len(),
            empty_documents: docs.iter().filter(|(s, _)| s.is_empty()).count(),
            distinct_features: rows.len(),
            epoch_losses: Vec::new(),
        };
        let total_steps = u64::from(config.epochs) * docs.len() as u64;
        Ok(Trainer {
            features,
            config,
            labels,
            rows,
            embeddings,
            output,
            order: (0..docs.len()).collect(),
            docs,
            rng,
            step: 0,
            total_steps,
            report,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn epochs_done(&self) -> usize {
        self.report.epoch_losses.len()
    }

    /// Runs one pass over the shuffled corpus and returns its mean objective.
    pub fn run_epoch(&mut self) -> f64 {
        self.order.shuffle(&mut self.rng);
        let dim = self.features.embed_dim as usize;
        let l2 = f64::from(self.config.l2);
        let mut total = 0.0;
        let mut counted = 0usize;
        for idx in 0..self.order.len() {
            let (slots, label) = &self.docs[self.order[idx]];
            let lr = if self.config.lr_decay {
                let progress = self.step as f64 / self.total_steps.max(1) as f64;
                f64::from(self.config.learning_rate) * (1.0 - progress).max(0.0)
            } else {
                f64::from(self.config.learning_rate)
            };
            self.step += 1;
            if slots.is_empty() {
                continue;
            }
            let params = Params {
                dim,
                num_labels: self.labels.len(),
                embeddings: &self.embeddings,
                output: &self.output,
            };
            let (value, grad) = loss_and_gradient(&params, slots, *label, self.config.loss, l2);
            total += value;
            counted += 1;

            for (w, g) in self.output.iter_mut().zip(&grad.output) {
                *w = (f64::from(*w) - lr * g) as f32;
            }
            for &(slot, weight) in &grad.slots {
                let row = &mut self.embeddings[slot * dim..(slot + 1) * dim];
                for (e, &gh) in row.iter_mut().zip(&grad.hidden) {
                    let cur = f64::from(*e);
                    *e = (cur - lr * (weight * gh + l2 * cur)) as f32;
                }
            }
        }
        let mean = if counted == 0 { 0.0 } else { total / counted as f64 };
        self.report.epoch_losses.push(mean);
        mean
    }

    /// Snapshot of the current parameters.
    pub fn model(&self) -> LinearTextModel {
        LinearTextModel {
            features: self.features,
            train: self.config,
            labels: self.labels.clone(),
            rows: self.rows.clone(),
            embeddings: self.embeddings.clone(),
            output: self.output.clone(),
        }
    }

    pub fn finish(self) -> (LinearTextModel, TrainReport) {
        (
            LinearTextModel {
                features: self.features,
                train: self.config,
                labels: self.labels,
                rows: self.rows,
                embeddings: self.embeddings,
                output: self.output,
            },
            self.report,
        )
    }
}

/// Trains a model for `config.epochs` epochs.
pub fn train<I, T, L>(
    corpus: I,
    features: FeatureConfig,
    config: TrainConfig,
) -> Result<(LinearTextModel, TrainReport), LintextError>
where
    I: IntoIterator<Item = (T, L)>,
    T: AsRef<str>,
    L: AsRef<str>,
{
    let mut trainer = Trainer::new(corpus, features, config)?;
    for _ in 0..config.epochs {
        trainer.run_epoch();
    }
    Ok(trainer.finish())
}
