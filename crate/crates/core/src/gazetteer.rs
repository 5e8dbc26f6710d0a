//! Country gazetteer and profile-description matching.
//!
//! Terms are matched as exact token sequences (after [`tokenize`] and
//! lowercasing), longest term first. A profile that mentions terms from
//! two different countries is reported as ambiguous.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::country::Country;
use crate::textnorm::tokenize;

const SHIPPED_TSV: &str = include_str!("../data/gazetteer.tsv");

const DEFINITE_ARTICLE: &str = "ال";
const FEMININE_SUFFIX: &str = "ة";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    CountryName,
    City,
    NationalityAdj,
}

impl FromStr for Category {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "country_name" => Ok(Category::CountryName),
            "city" => Ok(Category::City),
            "nationality_adj" => Ok(Category::NationalityAdj),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    Ar,
    En,
    Fr,
}

impl FromStr for Lang {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "ar" => Ok(Lang::Ar),
            "en" => Ok(Lang::En),
            "fr" => Ok(Lang::Fr),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub term: String,
    pub country: Country,
    pub category: Category,
    pub lang: Lang,
}

impl GazetteerEntry {
    pub fn new(term: impl Into<String>, country: Country, category: Category, lang: Lang) -> Self {
        GazetteerEntry {
            term: term.into(),
            country,
            category,
            lang,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GazetteerError {
    #[error("gazetteer has no entries")]
    Empty,
    #[error("term `{0}` is empty or has surrounding whitespace")]
    BadTerm(String),
    #[error("line {line}: term `{term}` has unsupported country code `{code}`")]
    UnsupportedCountry { line: usize, term: String, code: String },
    #[error("line {line}: term `{term}` has unknown category `{value}`")]
    UnknownCategory { line: usize, term: String, value: String },
    #[error("line {line}: term `{term}` has unknown language `{value}`")]
    UnknownLang { line: usize, term: String, value: String },
    #[error("line {line}: expected 4 tab-separated columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("reading gazetteer {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Parses the 4-column gazetteer TSV (`term, country, category, lang`).
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_tsv(text: &str) -> Result<Vec<GazetteerEntry>, GazetteerError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 4 {
            return Err(GazetteerError::Columns { line, found: cols.len() });
        }
        let term = cols[0].to_string();
        let country = Country::from_code(cols[1]).ok_or_else(|| GazetteerError::UnsupportedCountry {
            line,
            term: term.clone(),
            code: cols[1].to_string(),
        })?;
        let category = cols[2].parse().map_err(|_| GazetteerError::UnknownCategory {
            line,
            term: term.clone(),
            value: cols[2].to_string(),
        })?;
        let lang = cols[3].parse().map_err(|_| GazetteerError::UnknownLang {
            line,
            term: term.clone(),
            value: cols[3].to_string(),
        })?;
        entries.push(GazetteerEntry {
            term,
            country,
            category,
            lang,
        });
    }
    Ok(entries)
}

/// An immutable term lookup built by [`build_gazetteer`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    index: HashMap<Vec<String>, Vec<usize>>,
    max_len: usize,
    collisions: Vec<String>,
}

fn match_key(term: &str) -> Vec<String> {
    tokenize(term).iter().map(|t| t.to_lowercase()).collect()
}

fn variants(entry: &GazetteerEntry) -> Vec<String> {
    let base = entry.term.as_str();
    let mut out = vec![base.to_string()];
    if entry.category != Category::NationalityAdj || entry.lang != Lang::Ar {
        return out;
    }
    let add_fem = !base.ends_with(FEMININE_SUFFIX);
    let add_def = !base.starts_with(DEFINITE_ARTICLE);
    if add_fem {
        out.push(format!("{base}{FEMININE_SUFFIX}"));
    }
    if add_def {
        out.push(format!("{DEFINITE_ARTICLE}{base}"));
    }
    if add_fem && add_def {
        out.push(format!("{DEFINITE_ARTICLE}{base}{FEMININE_SUFFIX}"));
    }
    out
}

/// Builds the lookup, expanding Arabic nationality adjectives into their
/// feminine and definite-article forms.
///
/// Same term and country twice collapses to one entry. Same term with
/// different countries is kept and reported by [`Gazetteer::collisions`].
pub fn build_gazetteer(base: Vec<GazetteerEntry>) -> Result<Gazetteer, GazetteerError> {
    if base.is_empty() {
        return Err(GazetteerError::Empty);
    }
    let mut entries: Vec<GazetteerEntry> = Vec::new();
    let mut index: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
    let mut max_len = 0;
    for entry in &base {
        if entry.term.is_empty() || entry.term.trim() != entry.term {
            return Err(GazetteerError::BadTerm(entry.term.clone()));
        }
        for term in variants(entry) {
            let key = match_key(&term);
            if key.is_empty() {
                return Err(GazetteerError::BadTerm(term));
            }
            let slot = index.entry(key).or_default();
            if slot.iter().any(|&i| entries[i].country == entry.country) {
                continue;
            }
            max_len = max_len.max(term.split_whitespace().count().max(1));
            slot.push(entries.len());
            entries.push(GazetteerEntry {
                term,
                ..entry.clone()
            });
        }
    }
    // token count can exceed the whitespace count when terms carry punctuation
    max_len = max_len.max(index.keys().map(Vec::len).max().unwrap_or(0));
    let mut collisions: Vec<String> = index
        .values()
        .filter(|ids| {
            let countries: HashSet<Country> = ids.iter().map(|&i| entries[i].country).collect();
            countries.len() > 1
        })
        .map(|ids| entries[ids[0]].term.clone())
        .collect();
    collisions.sort();
    Ok(Gazetteer {
        entries,
        index,
        max_len,
        collisions,
    })
}

impl Gazetteer {
    /// The gazetteer bundled with the toolkit.
    pub fn shipped() -> Gazetteer {
        let entries = parse_tsv(SHIPPED_TSV).expect("bundled gazetteer parses");
        build_gazetteer(entries).expect("bundled gazetteer builds")
    }

    /// Raw text of the bundled gazetteer file.
    pub fn shipped_tsv() -> &'static str {
        SHIPPED_TSV
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Gazetteer, GazetteerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| GazetteerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        build_gazetteer(parse_tsv(&text)?)
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Terms that map to more than one country.
    pub fn collisions(&self) -> &[String] {
        &self.collisions
    }

    /// Countries a term maps to, in insertion order.
    pub fn lookup(&self, term: &str) -> Vec<Country> {
        self.index
            .get(&match_key(term))
            .map(|ids| ids.iter().map(|&i| self.entries[i].country).collect())
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountryMatch {
    /// First country matched; only meaningful when `ambiguous` is false.
    pub country: Country,
    pub matched_terms: Vec<String>,
    pub ambiguous: bool,
}

/// Matches a normalized profile description against the gazetteer.
pub fn match_country(description: &str, gz: &Gazetteer) -> Option<CountryMatch> {
    let tokens: Vec<String> = tokenize(description).iter().map(|t| t.to_lowercase()).collect();
    let mut countries: Vec<Country> = Vec::new();
    let mut matched_terms = Vec::new();
    let mut i = 0;
    'outer: while i < tokens.len() {
        let longest = gz.max_len.min(tokens.len() - i);
        for len in (1..=longest).rev() {
            if let Some(ids) = gz.index.get(&tokens[i..i + len]) {
                matched_terms.push(gz.entries[ids[0]].term.clone());
                for &id in ids {
                    let c = gz.entries[id].country;
                    if !countries.contains(&c) {
                        countries.push(c);
                    }
                }
                i += len;
                continue 'outer;
            }
        }
        i += 1;
    }
    let country = *countries.first()?;
    Some(CountryMatch {
        country,
        matched_terms,
        ambiguous: countries.len() > 1,
    })
}
