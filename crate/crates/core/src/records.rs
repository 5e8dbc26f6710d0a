//! Corpus rows and the JSONL / TSV readers shared by the pipeline stages.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub user_id: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub description: String,
    pub followers_count: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: empty `{field}`")]
    EmptyField { line: usize, field: &'static str },
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

/// Rows that can reject themselves after deserialization.
pub trait Validate {
    fn invalid_field(&self) -> Option<&'static str>;
}

impl Validate for TweetRecord {
    fn invalid_field(&self) -> Option<&'static str> {
        if self.id.is_empty() {
            Some("id")
        } else if self.user_id.is_empty() {
            Some("user_id")
        } else {
            None
        }
    }
}

impl Validate for UserProfile {
    fn invalid_field(&self) -> Option<&'static str> {
        self.user_id.is_empty().then_some("user_id")
    }
}

/// Iterates over a JSONL stream, yielding one result per non-blank line.
pub struct JsonlReader<R, T> {
    lines: std::io::Lines<R>,
    line: usize,
    _row: std::marker::PhantomData<T>,
}

impl<R: BufRead, T> JsonlReader<R, T> {
    pub fn new(reader: R) -> Self {
        JsonlReader {
            lines: reader.lines(),
            line: 0,
            _row: std::marker::PhantomData,
        }
    }
}

impl<R: BufRead, T: DeserializeOwned + Validate> Iterator for JsonlReader<R, T> {
    type Item = Result<T, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let raw = self.lines.next()?;
            self.line += 1;
            let line = self.line;
            let raw = match raw {
                Ok(r) => r,
                Err(source) => return Some(Err(RecordError::Io { line, source })),
            };
            if raw.trim().is_empty() {
                continue;
            }
            let row: T = match serde_json::from_str(&raw) {
                Ok(r) => r,
                Err(source) => return Some(Err(RecordError::Json { line, source })),
            };
            if let Some(field) = row.invalid_field() {
                return Some(Err(RecordError::EmptyField { line, field }));
            }
            return Some(Ok(row));
        }
    }
}

pub fn read_jsonl<R: BufRead, T: DeserializeOwned + Validate>(reader: R) -> JsonlReader<R, T> {
    JsonlReader::new(reader)
}

/// Replaces tabs and line breaks so a value fits in one TSV cell.
pub fn tsv_cell(s: &str) -> String {
    s.chars()
        .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
        .collect()
}

pub fn write_tsv_row<W: Write>(w: &mut W, cells: &[&str]) -> std::io::Result<()> {
    let row: Vec<String> = cells.iter().map(|c| tsv_cell(c)).collect();
    writeln!(w, "{}", row.join("\t"))
}

/// A labeled example read from a TSV corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledText {
    pub label: String,
    pub text: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TsvError {
    #[error("line {line}: expected at least 2 tab-separated columns")]
    Columns { line: usize },
    #[error("line {line}: empty label")]
    EmptyLabel { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads a labeled TSV corpus: the label is the first column and the text
/// the last, so both `label<TAB>text` and `country<TAB>user<TAB>text`
/// files are accepted.
pub fn read_labeled_tsv<R: BufRead>(reader: R) -> Result<Vec<LabeledText>, TsvError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 {
            return Err(TsvError::Columns { line: i + 1 });
        }
        if cols[0].is_empty() {
            return Err(TsvError::EmptyLabel { line: i + 1 });
        }
        out.push(LabeledText {
            label: cols[0].to_string(),
            text: cols[cols.len() - 1].to_string(),
        });
    }
    Ok(out)
}
