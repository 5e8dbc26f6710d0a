//! Confusion matrices, F1 scores and region-level error analysis.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::country::Country;
use crate::textnorm::tokenize;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("gold has {gold} labels but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("label `{0}` is not in the declared label set")]
    UnknownLabel(String),
    #[error("label set is empty or has duplicates")]
    BadLabels,
    #[error("label `{0}` has no region")]
    MissingRegion(String),
    #[error("predictions line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rows are gold labels, columns predicted labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

pub fn confusion<S: AsRef<str>>(labels: &[String], gold: &[S], pred: &[S]) -> Result<ConfusionMatrix, EvalError> {
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    if labels.is_empty() || index.len() != labels.len() {
        return Err(EvalError::BadLabels);
    }
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let idx = |l: &str| index.get(l).copied().ok_or_else(|| EvalError::UnknownLabel(l.to_string()));
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for (g, p) in gold.iter().zip(pred) {
        counts[idx(g.as_ref())?][idx(p.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.correct() as f64 / t as f64,
        }
    }

    pub fn gold_count(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn predicted_count(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    /// Precision, recall and F1 per label; undefined ratios are 0.
    pub fn per_class(&self) -> Vec<ClassScores> {
        (0..self.labels.len())
            .map(|i| {
                let tp = self.counts[i][i] as f64;
                let gold = self.gold_count(i);
                let pred = self.predicted_count(i);
                let precision = if pred == 0 { 0.0 } else { tp / pred as f64 };
                let recall = if gold == 0 { 0.0 } else { tp / gold as f64 };
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassScores {
                    label: self.labels[i].clone(),
                    precision,
                    recall,
                    f1,
                    support: gold,
                }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let header: Vec<&str> = std::iter::once("gold\\pred").chain(self.labels.iter().map(String::as_str)).collect();
        out.write_record(&header)?;
        for (l, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![l.clone()];
            rec.extend(row.iter().map(u64::to_string));
            out.write_record(&rec)?;
        }
        out.flush()
    }
}

/// Unweighted mean of per-class F1 over the declared labels. Classes with
/// no gold and no predicted examples count as 0.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    let scores = cm.per_class();
    scores.iter().map(|s| s.f1).sum::<f64>() / scores.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthBin {
    /// 1-based bin number; bin `b` covers lengths `(b-1)*w+1 ..= b*w`.
    pub bin: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub macro_f1: f64,
    pub support: usize,
}

/// Bin of a token count; texts with no token fall into the first bin.
pub fn length_bin(len: usize, bin_width: usize) -> usize {
    len.max(1).div_ceil(bin_width)
}

/// Macro-F1 per token-length bin, computed over the labels present (gold
/// or predicted) inside each bin. Empty bins are omitted.
pub fn f1_by_length<S: AsRef<str>, T: AsRef<str>>(
    gold: &[S],
    pred: &[S],
    texts: &[T],
    bin_width: usize,
) -> Result<Vec<LengthBin>, EvalError> {
    if gold.len() != pred.len() || gold.len() != texts.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len().min(texts.len()),
        });
    }
    let w = bin_width.max(1);
    let mut bins: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, t) in texts.iter().enumerate() {
        bins.entry(length_bin(tokenize(t.as_ref()).len(), w)).or_default().push(i);
    }
    let mut out = Vec::new();
    for (bin, idx) in bins {
        let g: Vec<&str> = idx.iter().map(|&i| gold[i].as_ref()).collect();
        let p: Vec<&str> = idx.iter().map(|&i| pred[i].as_ref()).collect();
        let mut labels: Vec<String> = g.iter().chain(&p).map(|s| s.to_string()).collect();
        labels.sort();
        labels.dedup();
        let cm = confusion(&labels, &g, &p)?;
        out.push(LengthBin {
            bin,
            min_len: (bin - 1) * w + 1,
            max_len: bin * w,
            macro_f1: macro_f1(&cm),
            support: idx.len(),
        });
    }
    Ok(out)
}

/// Assignment of labels to regions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMap(pub BTreeMap<String, String>);

impl Default for RegionMap {
    /// Gulf, Levant, Maghreb and Nile groupings; IQ and YE stand alone.
    fn default() -> Self {
        use Country::*;
        let mut m = BTreeMap::new();
        let regions: [(&str, &[Country]); 6] = [
            ("Gulf", &[OM, BH, KW, SA, AE, QA]),
            ("Levant", &[JO, PL, LB, SY]),
            ("Maghreb", &[MA, DZ, LY, TN]),
            ("Nile", &[EG, SD]),
            ("Iraq", &[IQ]),
            ("Yemen", &[YE]),
        ];
        for (r, cs) in regions {
            for c in cs {
                m.insert(c.code().to_string(), r.to_string());
            }
        }
        RegionMap(m)
    }
}

impl RegionMap {
    pub fn region(&self, label: &str) -> Option<&str> {
        self.0.get(label).map(String::as_str)
    }

    pub fn covers(&self, labels: &[String]) -> bool {
        labels.iter().all(|l| self.0.contains_key(l))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionShares {
    pub misclassified: u64,
    /// Share of misclassifications that stay inside the gold label's region.
    pub within_region_share: f64,
    /// Cross-region misclassifications over all misclassifications.
    pub outlier_share_of_misclassified: f64,
    /// Cross-region misclassifications over all evaluated examples.
    pub outlier_share_of_total: f64,
}

pub fn region_confusion(cm: &ConfusionMatrix, regions: &RegionMap) -> Result<RegionShares, EvalError> {
    let region_of = |l: &String| regions.region(l).ok_or_else(|| EvalError::MissingRegion(l.clone()));
    let rs: Vec<&str> = cm.labels.iter().map(region_of).collect::<Result<_, _>>()?;
    let (mut within, mut cross) = (0u64, 0u64);
    for i in 0..cm.labels.len() {
        for j in 0..cm.labels.len() {
            if i == j {
                continue;
            }
            if rs[i] == rs[j] {
                within += cm.counts[i][j];
            } else {
                cross += cm.counts[i][j];
            }
        }
    }
    let wrong = within + cross;
    if wrong == 0 {
        return Ok(RegionShares::default());
    }
    Ok(RegionShares {
        misclassified: wrong,
        within_region_share: within as f64 / wrong as f64,
        outlier_share_of_misclassified: cross as f64 / wrong as f64,
        outlier_share_of_total: cross as f64 / cm.total() as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub examples: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScores>,
    pub confusion: ConfusionMatrix,
    pub f1_by_length: Vec<LengthBin>,
    /// Absent when the region map does not cover every label.
    pub regions: Option<RegionShares>,
}

/// Full report over `(gold, predicted, text)` rows. Labels are the given
/// set, or the sorted union of gold and predicted labels when `None`.
pub fn evaluate(
    rows: &[PredictionRow],
    labels: Option<&[String]>,
    regions: &RegionMap,
    bin_width: usize,
) -> Result<EvalReport, EvalError> {
    let gold: Vec<&str> = rows.iter().map(|r| r.gold.as_str()).collect();
    let pred: Vec<&str> = rows.iter().map(|r| r.predicted.as_str()).collect();
    let texts: Vec<&str> = rows.iter().map(|r| r.text.as_str()).collect();
    let labels: Vec<String> = match labels {
        Some(l) => l.to_vec(),
        None => {
            let mut l: Vec<String> = gold.iter().chain(&pred).map(|s| s.to_string()).collect();
            l.sort();
            l.dedup();
            l
        }
    };
    let cm = confusion(&labels, &gold, &pred)?;
    let regions = if regions.covers(&labels) {
        Some(region_confusion(&cm, regions)?)
    } else {
        None
    };
    Ok(EvalReport {
        examples: cm.total(),
        accuracy: cm.accuracy(),
        macro_f1: macro_f1(&cm),
        per_class: cm.per_class(),
        f1_by_length: f1_by_length(&gold, &pred, &texts, bin_width)?,
        confusion: cm,
        regions,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionRow {
    pub gold: String,
    pub predicted: String,
    pub text: String,
}

/// Reads `gold<TAB>predicted<TAB>text` rows; the text may itself contain tabs.
pub fn read_predictions<R: BufRead>(r: R) -> Result<Vec<PredictionRow>, EvalError> {
    let mut rows = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let (Some(g), Some(p)) = (parts.next(), parts.next()) else {
            return Err(EvalError::Parse {
                line: n + 1,
                msg: "expected gold<TAB>predicted<TAB>text".into(),
            });
        };
        rows.push(PredictionRow {
            gold: g.to_string(),
            predicted: p.to_string(),
            text: parts.next().unwrap_or("").to_string(),
        });
    }
    Ok(rows)
}
