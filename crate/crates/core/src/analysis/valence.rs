use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use super::AnalysisError;
use crate::country::Country;
use crate::textnorm::{is_placeholder, is_punctuation, tokenize};

pub const MSA_GROUP: &str = "MSA";

/// The 18 country codes in corpus order followed by `MSA`.
pub fn default_groups() -> Vec<String> {
    Country::ALL
        .iter()
        .map(|c| c.code().to_string())
        .chain(std::iter::once(MSA_GROUP.to_string()))
        .collect()
}

/// Term frequencies per group.
///
/// Placeholder tokens and punctuation-only tokens are never counted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermCounts {
    groups: Vec<String>,
    index: HashMap<String, usize>,
    counts: BTreeMap<String, Vec<u64>>,
    totals: Vec<u64>,
}

fn countable(token: &str) -> bool {
    !is_placeholder(token) && !token.chars().all(is_punctuation)
}

impl TermCounts {
    pub fn new(groups: Vec<String>) -> Result<Self, AnalysisError> {
        let index: HashMap<String, usize> = groups.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
        if groups.is_empty() || index.len() != groups.len() {
            return Err(AnalysisError::BadGroups);
        }
        Ok(TermCounts {
            totals: vec![0; groups.len()],
            groups,
            index,
            counts: BTreeMap::new(),
        })
    }

    pub fn with_default_groups() -> Self {
        Self::new(default_groups()).expect("default groups are distinct")
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn group_index(&self, group: &str) -> Result<usize, AnalysisError> {
        self.index
            .get(group)
            .copied()
            .ok_or_else(|| AnalysisError::UnknownGroup(group.to_string()))
    }

    /// Counts the countable tokens of one group.
    pub fn add_tokens<I, S>(&mut self, group: &str, tokens: I) -> Result<(), AnalysisError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let g = self.group_index(group)?;
        let n = self.groups.len();
        for t in tokens {
            let t = t.as_ref();
            if !countable(t) {
                continue;
            }
            match self.counts.get_mut(t) {
                Some(row) => row[g] += 1,
                None => {
                    let mut row = vec![0; n];
                    row[g] = 1;
                    self.counts.insert(t.to_string(), row);
                }
            }
            self.totals[g] += 1;
        }
        Ok(())
    }

    /// Tokenizes a normalized text and counts it.
    pub fn add_text(&mut self, group: &str, text: &str) -> Result<(), AnalysisError> {
        self.add_tokens(group, tokenize(text).iter())
    }

    /// Adds another partial count over the same groups.
    pub fn merge(&mut self, other: &TermCounts) -> Result<(), AnalysisError> {
        if other.groups != self.groups {
            return Err(AnalysisError::GroupMismatch);
        }
        for (t, row) in &other.counts {
            let mine = self.counts.entry(t.clone()).or_insert_with(|| vec![0; row.len()]);
            for (a, b) in mine.iter_mut().zip(row) {
                *a += b;
            }
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        Ok(())
    }

    /// N(t, D_i).
    pub fn count(&self, term: &str, group: usize) -> u64 {
        self.counts.get(term).map_or(0, |r| r[group])
    }

    /// Per-group counts of a term, if it occurs anywhere.
    pub fn row(&self, term: &str) -> Option<&[u64]> {
        self.counts.get(term).map(Vec::as_slice)
    }

    /// N(D_i).
    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    /// Total frequency of a term over all groups.
    pub fn term_total(&self, term: &str) -> u64 {
        self.row(term).map_or(0, |r| r.iter().sum())
    }

    /// Distinct terms in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }
}

/// Counts `(group, normalized text)` pairs over the given group list.
pub fn count_terms<I, G, T>(groups: Vec<String>, corpus: I) -> Result<TermCounts, AnalysisError>
where
    I: IntoIterator<Item = (G, T)>,
    G: AsRef<str>,
    T: AsRef<str>,
{
    let mut counts = TermCounts::new(groups)?;
    for (g, t) in corpus {
        counts.add_text(g.as_ref(), t.as_ref())?;
    }
    Ok(counts)
}

fn valence_of_row(row: &[u64], totals: &[u64], i: usize) -> f64 {
    let rel = |n: usize| row[n] as f64 / totals[n] as f64;
    let denom: f64 = (0..row.len()).filter(|&n| totals[n] > 0).map(rel).sum();
    let own = if totals[i] > 0 { rel(i) } else { 0.0 };
    2.0 * own / denom - 1.0
}

/// Valence of `term` for group `i`:
/// `2 * (N(t,D_i)/N(D_i)) / Σ_n N(t,D_n)/N(D_n) - 1`, skipping empty groups.
pub fn valence(term: &str, counts: &TermCounts, i: usize) -> Result<f64, AnalysisError> {
    if i >= counts.groups.len() {
        return Err(AnalysisError::GroupIndex(i));
    }
    let row = counts
        .row(term)
        .filter(|r| r.iter().any(|&c| c > 0))
        .ok_or_else(|| AnalysisError::AbsentTerm(term.to_string()))?;
    Ok(valence_of_row(row, &counts.totals, i))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedTerm {
    pub term: String,
    pub valence: f64,
    /// N(t, D_i) in the ranked group.
    pub count: u64,
    pub total: u64,
}

fn rank_order(a: (f64, u64, &str), b: (f64, u64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then_with(|| a.2.cmp(b.2))
}

/// The `k` terms with the highest valence for `group` among terms seen at
/// least `min_count` times in it. Ties go to the more frequent term
/// overall, then to the lexicographically smaller one.
pub fn top_valence_words(
    counts: &TermCounts,
    group: &str,
    k: usize,
    min_count: u64,
) -> Result<Vec<RankedTerm>, AnalysisError> {
    let i = counts.group_index(group)?;
    let mut ranked: Vec<RankedTerm> = counts
        .counts
        .iter()
        .filter(|(_, row)| row[i] >= min_count.max(1))
        .map(|(t, row)| RankedTerm {
            term: t.clone(),
            valence: valence_of_row(row, &counts.totals, i),
            count: row[i],
            total: row.iter().sum(),
        })
        .collect();
    ranked.sort_by(|a, b| rank_order((a.valence, a.total, &a.term), (b.valence, b.total, &b.term)));
    ranked.truncate(k);
    Ok(ranked)
}

/// Term-by-group valence matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ValenceMatrix {
    pub terms: Vec<String>,
    pub groups: Vec<String>,
    pub values: Vec<f32>,
}

impl ValenceMatrix {
    pub fn row(&self, t: usize) -> &[f32] {
        let g = self.groups.len();
        &self.values[t * g..(t + 1) * g]
    }

    pub fn get(&self, t: usize, g: usize) -> f32 {
        self.values[t * self.groups.len() + g]
    }

    /// Column of one group across all terms.
    pub fn column(&self, g: usize) -> Vec<f64> {
        (0..self.terms.len()).map(|t| f64::from(self.get(t, g))).collect()
    }
}

/// Valence vectors of the `top_k` terms with the highest maximum valence
/// over all groups (ties: total frequency descending, then term).
pub fn valence_vectors(counts: &TermCounts, top_k: usize) -> ValenceMatrix {
    let n = counts.groups.len();
    let mut scored: Vec<(f64, u64, &str, Vec<f64>)> = counts
        .counts
        .iter()
        .map(|(t, row)| {
            let v: Vec<f64> = (0..n).map(|i| valence_of_row(row, &counts.totals, i)).collect();
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (max, row.iter().sum(), t.as_str(), v)
        })
        .collect();
    scored.sort_by(|a, b| rank_order((a.0, a.1, a.2), (b.0, b.1, b.2)));
    scored.truncate(top_k);
    ValenceMatrix {
        terms: scored.iter().map(|s| s.2.to_string()).collect(),
        groups: counts.groups.clone(),
        values: scored.iter().flat_map(|s| s.3.iter().map(|&v| v as f32)).collect(),
    }
}

/// Writes `term,<group>...` CSV; floats use the shortest representation
/// that parses back to the same `f32`.
pub fn write_valence_csv<W: Write>(vm: &ValenceMatrix, w: W) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(std::iter::once("term").chain(vm.groups.iter().map(String::as_str)))?;
    for (t, term) in vm.terms.iter().enumerate() {
        let mut rec = vec![term.clone()];
        rec.extend(vm.row(t).iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_valence_csv<R: Read>(r: R) -> Result<ValenceMatrix, AnalysisError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("term") || header.len() < 2 {
        return Err(AnalysisError::BadTable("header must be `term` followed by group names".into()));
    }
    let groups: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut terms = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(AnalysisError::BadTable(format!("row {} has {} fields", terms.len() + 1, rec.len())));
        }
        terms.push(rec[0].to_string());
        for cell in rec.iter().skip(1) {
            let v: f32 = cell
                .parse()
                .map_err(|_| AnalysisError::BadTable(format!("not a number: `{cell}`")))?;
            values.push(v);
        }
    }
    Ok(ValenceMatrix { terms, groups, values })
}

/// Writes the matrix consumed by external 2-D projection tools.
pub fn export_projection_matrix(vm: &ValenceMatrix, path: impl AsRef<Path>) -> Result<(), AnalysisError> {
    let path = path.as_ref();
    let io = |source| AnalysisError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    write_valence_csv(vm, std::io::BufWriter::new(file)).map_err(|e| match e {
        AnalysisError::Csv(c) if c.is_io_error() => match c.into_kind() {
            csv::ErrorKind::Io(source) => io(source),
            _ => unreachable!(),
        },
        other => other,
    })
}
