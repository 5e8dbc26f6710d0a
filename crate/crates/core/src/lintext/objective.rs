//! Per-example loss and gradient of the averaged-embedding classifier.
//!
//! For an example with feature slots `f_1..f_n` (repeats allowed) the
//! hidden vector is `h = (1/n) Σ E[f_k]` and the scores are `s = W h`.
//! The softmax head minimizes `-log softmax(s)[y]`; the hinge head
//! minimizes the multiclass margin `max(0, 1 + max_{j≠y} s_j - s_y)`.
//! The L2 term is `l2/2 (|W|² + Σ_{distinct f} |E[f]|²)`.
//!
//! All arithmetic runs in f64 over f32 parameters.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Softmax,
    Hinge,
}

/// Borrowed view of the trainable parameters.
#[derive(Clone, Copy, Debug)]
pub struct Params<'a> {
    pub dim: usize,
    pub num_labels: usize,
    /// Row-major `rows × dim` embedding table.
    pub embeddings: &'a [f32],
    /// Row-major `num_labels × dim` output matrix.
    pub output: &'a [f32],
}

/// Gradient of one example's objective.
#[derive(Clone, Debug, Default)]
pub struct Gradient {
    /// d(objective)/dW, `num_labels × dim`, L2 included.
    pub output: Vec<f64>,
    /// d(data loss)/dh.
    pub hidden: Vec<f64>,
    /// Distinct slots with their weight `count / n`.
    pub slots: Vec<(usize, f64)>,
    pub l2: f64,
}

impl Gradient {
    /// Full gradient of the objective with respect to embedding row `slot`.
    pub fn embedding_row(&self, params: &Params<'_>, slot: usize) -> Vec<f64> {
        let dim = params.dim;
        match self.slots.iter().find(|(s, _)| *s == slot) {
            None => vec![0.0; dim],
            Some(&(_, w)) => (0..dim)
                .map(|k| w * self.hidden[k] + self.l2 * f64::from(params.embeddings[slot * dim + k]))
                .collect(),
        }
    }
}

pub fn hidden(params: &Params<'_>, slots: &[usize], out: &mut Vec<f64>) {
    out.clear();
    out.resize(params.dim, 0.0);
    if slots.is_empty() {
        return;
    }
    let dim = params.dim;
    for &s in slots {
        let row = &params.embeddings[s * dim..(s + 1) * dim];
        for (acc, &v) in out.iter_mut().zip(row) {
            *acc += f64::from(v);
        }
    }
    let inv = 1.0 / slots.len() as f64;
    for v in out.iter_mut() {
        *v *= inv;
    }
}

pub fn scores(params: &Params<'_>, h: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let dim = params.dim;
    for l in 0..params.num_labels {
        let row = &params.output[l * dim..(l + 1) * dim];
        out.push(row.iter().zip(h).map(|(&w, &x)| f64::from(w) * x).sum());
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Data loss and its gradient with respect to the scores.
pub fn score_loss(loss: Loss, scores: &[f64], label: usize) -> (f64, Vec<f64>) {
    match loss {
        Loss::Softmax => {
            let mut p = softmax(scores);
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_z = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
            let value = log_z - scores[label];
            p[label] -= 1.0;
            (value, p)
        }
        Loss::Hinge => {
            let mut g = vec![0.0; scores.len()];
            let mut rival: Option<usize> = None;
            for (j, &s) in scores.iter().enumerate() {
                if j != label && rival.is_none_or(|r| s > scores[r]) {
                    rival = Some(j);
                }
            }
            let Some(r) = rival else { return (0.0, g) };
            let margin = 1.0 + scores[r] - scores[label];
            if margin > 0.0 {
                g[r] = 1.0;
                g[label] = -1.0;
                (margin, g)
            } else {
                (0.0, g)
            }
        }
    }
}

/// Objective value and gradient for one example.
pub fn loss_and_gradient(
    params: &Params<'_>,
    slots: &[usize],
    label: usize,
    loss: Loss,
    l2: f64,
) -> (f64, Gradient) {
    let dim = params.dim;
    let mut h = Vec::new();
    hidden(params, slots, &mut h);
    let mut s = Vec::new();
    scores(params, &h, &mut s);
    let (mut value, g) = score_loss(loss, &s, label);

    let mut output = vec![0.0; params.num_labels * dim];
    let mut hidden_grad = vec![0.0; dim];
    for l in 0..params.num_labels {
        let row = &params.output[l * dim..(l + 1) * dim];
        for k in 0..dim {
            output[l * dim + k] = g[l] * h[k] + l2 * f64::from(row[k]);
            hidden_grad[k] += g[l] * f64::from(row[k]);
        }
    }

    let mut weights: Vec<(usize, f64)> = Vec::new();
    if !slots.is_empty() {
        let inv = 1.0 / slots.len() as f64;
        let mut sorted = slots.to_vec();
        sorted.sort_unstable();
        for s in sorted {
            match weights.last_mut() {
                Some((last, w)) if *last == s => *w += inv,
                _ => weights.push((s, inv)),
            }
        }
    }

    if l2 > 0.0 {
        let mut reg: f64 = params.output.iter().map(|&w| f64::from(w) * f64::from(w)).sum();
        for &(slot, _) in &weights {
            reg += params.embeddings[slot * dim..(slot + 1) * dim]
                .iter()
                .map(|&e| f64::from(e) * f64::from(e))
                .sum::<f64>();
        }
        value += 0.5 * l2 * reg;
    }

    (
        value,
        Gradient {
            output,
            hidden: hidden_grad,
            slots: weights,
            l2,
        },
    )
}
