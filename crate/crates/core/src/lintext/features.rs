//! Hashed character and word n-gram features.
//!
//! Every n-gram is hashed with 64-bit FNV-1a over a one-byte family tag
//! (`c` for character n-grams, `w` for word n-grams), a `0x1F` separator
//! and the UTF-8 bytes of the n-gram. Word n-grams join their tokens with
//! a single space. The feature id is `hash % hash_buckets`.

use serde::{Deserialize, Serialize};

use super::LintextError;
use crate::textnorm::tokenize;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Smallest allowed bucket count for models that are trained.
pub const MIN_HASH_BUCKETS: u32 = 1 << 16;
pub const DEFAULT_HASH_BUCKETS: u32 = 1 << 21;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NgramKind {
    Char,
    Word,
}

impl NgramKind {
    fn tag(self) -> u8 {
        match self {
            NgramKind::Char => b'c',
            NgramKind::Word => b'w',
        }
    }
}

/// The 64-bit hash of one n-gram.
pub fn ngram_hash(kind: NgramKind, ngram: &str) -> u64 {
    let mut buf = Vec::with_capacity(ngram.len() + 2);
    buf.push(kind.tag());
    buf.push(0x1F);
    buf.extend_from_slice(ngram.as_bytes());
    fnv1a64(&buf)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub char_ngram_min: u32,
    pub char_ngram_max: u32,
    pub word_ngram_min: u32,
    pub word_ngram_max: u32,
    pub use_char: bool,
    pub use_word: bool,
    pub hash_buckets: u32,
    pub embed_dim: u32,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            char_ngram_min: 3,
            char_ngram_max: 6,
            word_ngram_min: 1,
            word_ngram_max: 1,
            use_char: true,
            use_word: false,
            hash_buckets: DEFAULT_HASH_BUCKETS,
            embed_dim: 100,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), LintextError> {
        let bad = |msg: String| Err(LintextError::InvalidConfig(msg));
        if !self.use_char && !self.use_word {
            return bad("at least one of use_char / use_word must be set".into());
        }
        if self.use_char && (self.char_ngram_min == 0 || self.char_ngram_min > self.char_ngram_max) {
            return bad(format!(
                "char n-gram range {}..={} is invalid",
                self.char_ngram_min, self.char_ngram_max
            ));
        }
        if self.use_word && (self.word_ngram_min == 0 || self.word_ngram_min > self.word_ngram_max) {
            return bad(format!(
                "word n-gram range {}..={} is invalid",
                self.word_ngram_min, self.word_ngram_max
            ));
        }
        if self.hash_buckets < MIN_HASH_BUCKETS || !self.hash_buckets.is_power_of_two() {
            return bad(format!(
                "hash_buckets must be a power of two >= {MIN_HASH_BUCKETS}, got {}",
                self.hash_buckets
            ));
        }
        if self.embed_dim == 0 {
            return bad("embed_dim must be at least 1".into());
        }
        Ok(())
    }
}

/// Feature ids of a normalized text: character n-grams over the whole
/// string (spaces included), then word n-grams over its tokens. Repeated
/// n-grams yield repeated ids.
pub fn extract_features(text: &str, fc: &FeatureConfig) -> Vec<u32> {
    let buckets = u64::from(fc.hash_buckets.max(1));
    let mut ids = Vec::new();
    if fc.use_char {
        let bounds: Vec<usize> = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(text.len()))
            .collect();
        let n_chars = bounds.len() - 1;
        for n in fc.char_ngram_min as usize..=fc.char_ngram_max as usize {
            if n == 0 || n > n_chars {
                continue;
            }
            for start in 0..=n_chars - n {
                let gram = &text[bounds[start]..bounds[start + n]];
                ids.push((ngram_hash(NgramKind::Char, gram) % buckets) as u32);
            }
        }
    }
    if fc.use_word {
        let tokens = tokenize(text).into_vec();
        for n in fc.word_ngram_min as usize..=fc.word_ngram_max as usize {
            if n == 0 || n > tokens.len() {
                continue;
            }
            for window in tokens.windows(n) {
                let gram = window.join(" ");
                ids.push((ngram_hash(NgramKind::Word, &gram) % buckets) as u32);
            }
        }
    }
    ids
}
