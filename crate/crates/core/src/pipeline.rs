//! User-level filter cascade and per-country corpus assembly.
//!
//! Stage order is fixed: country tagging, top-N selection by followers,
//! dialectal-ratio filter, vulgarity filter, then tweet-level confidence
//! filtering during assembly. Every profile ends up with exactly one
//! verdict: retained, or rejected with the reason of the first stage that
//! dropped it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::country::Country;
use crate::gazetteer::{match_country, Gazetteer};
use crate::lintext::{LinearTextModel, Loss};
use crate::records::{write_tsv_row, TweetRecord, UserProfile};
use crate::textnorm::{extract_hashtags, normalize_tweet, tokenize, NormalizationConfig};
use crate::weaklabel::VariantLabel;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("obscene term list is empty")]
    EmptyObsceneList,
    #[error("the MSA/DA model must have exactly the labels {{DA, MSA}}, found {0:?}")]
    BadVariantLabels(Vec<String>),
    #[error("the MSA/DA model must use the softmax head")]
    NotProbabilistic,
    #[error("{name} must be in [0, 1], got {value}")]
    BadRatio { name: &'static str, value: f64 },
    #[error("min_confidence must be in (0, 1], got {0}")]
    BadConfidence(f64),
    #[error("n_per_country must be at least 1")]
    ZeroTopN,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    NoCountry,
    AmbiguousCountry,
    BelowRankCutoff,
    MostlyMsa,
    Vulgar,
}

impl RejectionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectionReason::NoCountry => "no_country",
            RejectionReason::AmbiguousCountry => "ambiguous_country",
            RejectionReason::BelowRankCutoff => "below_rank_cutoff",
            RejectionReason::MostlyMsa => "mostly_msa",
            RejectionReason::Vulgar => "vulgar",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserVerdict {
    pub user_id: String,
    pub country: Option<Country>,
    /// Share of the user's tweets predicted DA; 0 until the dialectal stage runs.
    pub dialectal_ratio: f64,
    /// Share of the user's tweets with a vulgar token; 0 until the vulgarity stage runs.
    pub vulgar_ratio: f64,
    pub retained: bool,
    pub rejection_reason: Option<RejectionReason>,
}

impl UserVerdict {
    fn pending(user_id: &str, country: Option<Country>) -> Self {
        UserVerdict {
            user_id: user_id.to_string(),
            country,
            dialectal_ratio: 0.0,
            vulgar_ratio: 0.0,
            retained: false,
            rejection_reason: None,
        }
    }

    fn reject(&mut self, reason: RejectionReason) {
        self.retained = false;
        self.rejection_reason = Some(reason);
    }
}

/// An MSA-vs-dialect tweet classifier.
pub trait VariantClassifier {
    /// Arg-max label and its confidence in `[0, 1]`.
    fn classify(&self, text: &str) -> (VariantLabel, f64);
}

/// Adapter for a trained softmax model with labels `{DA, MSA}`.
pub struct ModelClassifier<'a> {
    model: &'a LinearTextModel,
    da: usize,
}

impl<'a> ModelClassifier<'a> {
    pub fn new(model: &'a LinearTextModel) -> Result<Self, PipelineError> {
        let mut labels = model.labels().to_vec();
        labels.sort();
        if labels != ["DA", "MSA"] {
            return Err(PipelineError::BadVariantLabels(model.labels().to_vec()));
        }
        if model.loss() != Loss::Softmax {
            return Err(PipelineError::NotProbabilistic);
        }
        let da = model.label_index("DA").expect("checked above");
        Ok(ModelClassifier { model, da })
    }
}

impl VariantClassifier for ModelClassifier<'_> {
    fn classify(&self, text: &str) -> (VariantLabel, f64) {
        let p = self.model.predict(text);
        let label = if p.label == self.model.labels()[self.da] {
            VariantLabel::Da
        } else {
            VariantLabel::Msa
        };
        (label, p.confidence())
    }
}

impl<F: Fn(&str) -> (VariantLabel, f64)> VariantClassifier for F {
    fn classify(&self, text: &str) -> (VariantLabel, f64) {
        self(text)
    }
}

/// Obscene word list. Plain lines match tokens of the normalized tweet;
/// lines starting with `#` match raw hashtags before segmentation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObsceneLexicon {
    terms: HashSet<String>,
    hashtags: HashSet<String>,
}

impl ObsceneLexicon {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut lex = ObsceneLexicon::default();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            match line.strip_prefix('#') {
                Some("") => {}
                Some(tag) => {
                    lex.hashtags.insert(tag.to_lowercase());
                }
                None => {
                    lex.terms.insert(line.to_lowercase());
                }
            }
        }
        if lex.is_empty() {
            return Err(PipelineError::EmptyObsceneList);
        }
        Ok(lex)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn from_terms<I: IntoIterator<Item = S>, S: AsRef<str>>(terms: I) -> Result<Self, PipelineError> {
        let text: Vec<String> = terms.into_iter().map(|t| t.as_ref().to_string()).collect();
        Self::parse(&text.join("\n"))
    }

    pub fn len(&self) -> usize {
        self.terms.len() + self.hashtags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether a raw tweet contains a listed token or hashtag.
    pub fn is_vulgar(&self, raw_text: &str, cfg: &NormalizationConfig) -> bool {
        if !self.hashtags.is_empty()
            && extract_hashtags(raw_text)
                .iter()
                .any(|t| self.hashtags.contains(&t[1..].to_lowercase()))
        {
            return true;
        }
        !self.terms.is_empty()
            && tokenize(&normalize_tweet(raw_text, cfg))
                .iter()
                .any(|t| self.terms.contains(&t.to_lowercase()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CascadeConfig {
    pub n_per_country: usize,
    /// Users are kept when at least this share of tweets is dialectal.
    pub dialectal_threshold: f64,
    /// Users are removed when more than this share of tweets is vulgar.
    pub vulgar_threshold: f64,
    pub min_confidence: f64,
    /// Applied to profiles and to emitted corpus text.
    pub normalization: NormalizationConfig,
    /// Applied to tweets before MSA/DA classification.
    pub classifier_normalization: NormalizationConfig,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            n_per_country: 200,
            dialectal_threshold: 0.5,
            vulgar_threshold: 0.5,
            min_confidence: 0.98,
            normalization: NormalizationConfig::default(),
            classifier_normalization: NormalizationConfig::weak_labeling(),
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        for (name, value) in [
            ("dialectal_threshold", self.dialectal_threshold),
            ("vulgar_threshold", self.vulgar_threshold),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PipelineError::BadRatio { name, value });
            }
        }
        if !(self.min_confidence > 0.0 && self.min_confidence <= 1.0) {
            return Err(PipelineError::BadConfidence(self.min_confidence));
        }
        if self.n_per_country == 0 {
            return Err(PipelineError::ZeroTopN);
        }
        Ok(())
    }
}

/// Result of country tagging.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tagging {
    /// One verdict per distinct user id, sorted by user id; tagged users are
    /// still pending (not retained, no reason).
    pub verdicts: Vec<UserVerdict>,
    pub duplicate_profiles: usize,
}

/// Tags each distinct profile with a country. Duplicate user ids keep the
/// last profile.
pub fn tag_users(profiles: &[UserProfile], gz: &Gazetteer, cfg: &NormalizationConfig) -> Tagging {
    let latest = dedup_profiles(profiles);
    let duplicate_profiles = profiles.len() - latest.len();
    let verdicts = latest
        .values()
        .map(|p| {
            let m = match_country(&normalize_tweet(&p.description, cfg), gz);
            match m {
                None => {
                    let mut v = UserVerdict::pending(&p.user_id, None);
                    v.reject(RejectionReason::NoCountry);
                    v
                }
                Some(m) if m.ambiguous => {
                    let mut v = UserVerdict::pending(&p.user_id, None);
                    v.reject(RejectionReason::AmbiguousCountry);
                    v
                }
                Some(m) => UserVerdict::pending(&p.user_id, Some(m.country)),
            }
        })
        .collect();
    Tagging {
        verdicts,
        duplicate_profiles,
    }
}

fn dedup_profiles(profiles: &[UserProfile]) -> BTreeMap<&str, &UserProfile> {
    let mut latest = BTreeMap::new();
    for p in profiles {
        latest.insert(p.user_id.as_str(), p);
    }
    latest
}

/// Candidates ordered by followers (descending, ties by user id) and cut
/// to `n` per country. Returns the selected user ids.
pub fn select_top_users<'a>(
    candidates: impl IntoIterator<Item = (&'a str, Country, u64)>,
    n_per_country: usize,
) -> HashSet<String> {
    let mut by_country: BTreeMap<Country, Vec<(&str, u64)>> = BTreeMap::new();
    for (user, country, followers) in candidates {
        by_country.entry(country).or_default().push((user, followers));
    }
    let mut keep = HashSet::new();
    for users in by_country.values_mut() {
        users.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        keep.extend(users.iter().take(n_per_country).map(|(u, _)| u.to_string()));
    }
    keep
}

/// Share of tweets classified DA; `None` for a user without tweets.
pub fn dialectal_ratio<C: VariantClassifier + ?Sized>(
    tweets: &[&str],
    classifier: &C,
    cfg: &NormalizationConfig,
) -> Option<f64> {
    if tweets.is_empty() {
        return None;
    }
    let da = tweets
        .iter()
        .filter(|t| classifier.classify(&normalize_tweet(t, cfg)).0 == VariantLabel::Da)
        .count();
    Some(da as f64 / tweets.len() as f64)
}

/// Applies the dialectal filter: kept iff the ratio reaches the threshold.
pub fn dialectal_filter<C: VariantClassifier + ?Sized>(
    verdict: &mut UserVerdict,
    tweets: &[&str],
    classifier: &C,
    threshold: f64,
    cfg: &NormalizationConfig,
) -> bool {
    match dialectal_ratio(tweets, classifier, cfg) {
        Some(r) => {
            verdict.dialectal_ratio = r;
            if r >= threshold {
                true
            } else {
                verdict.reject(RejectionReason::MostlyMsa);
                false
            }
        }
        None => {
            verdict.reject(RejectionReason::MostlyMsa);
            false
        }
    }
}

pub fn vulgar_ratio(tweets: &[&str], lexicon: &ObsceneLexicon, cfg: &NormalizationConfig) -> f64 {
    if tweets.is_empty() {
        return 0.0;
    }
    let bad = tweets.iter().filter(|t| lexicon.is_vulgar(t, cfg)).count();
    bad as f64 / tweets.len() as f64
}

/// Applies the vulgarity filter: removed iff the ratio exceeds the threshold.
pub fn vulgar_filter(
    verdict: &mut UserVerdict,
    tweets: &[&str],
    lexicon: &ObsceneLexicon,
    threshold: f64,
    cfg: &NormalizationConfig,
) -> bool {
    let r = vulgar_ratio(tweets, lexicon, cfg);
    verdict.vulgar_ratio = r;
    if r > threshold {
        verdict.reject(RejectionReason::Vulgar);
        false
    } else {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusLine {
    pub country: Country,
    pub user_id: String,
    pub text: String,
}

/// Whether a classified tweet passes the assembly confidence rule. As with
/// probabilistic thresholds elsewhere, a threshold of 1 is never met.
pub fn passes_confidence(label: VariantLabel, confidence: f64, min_confidence: f64) -> bool {
    label == VariantLabel::Da && min_confidence < 1.0 && confidence >= min_confidence
}

/// Emits the confidently dialectal tweets of the retained users, labeled
/// with each user's country. Users are visited in the given order and
/// tweets in input order.
pub fn assemble_corpus<C: VariantClassifier + ?Sized>(
    retained: &[(String, Country)],
    tweets_by_user: &HashMap<&str, Vec<&str>>,
    classifier: &C,
    config: &CascadeConfig,
) -> Vec<CorpusLine> {
    let mut out = Vec::new();
    for (user, country) in retained {
        let Some(tweets) = tweets_by_user.get(user.as_str()) else { continue };
        for t in tweets {
            let (label, conf) = classifier.classify(&normalize_tweet(t, &config.classifier_normalization));
            if passes_confidence(label, conf, config.min_confidence) {
                out.push(CorpusLine {
                    country: *country,
                    user_id: user.clone(),
                    text: normalize_tweet(t, &config.normalization),
                });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryStats {
    pub users: usize,
    pub tweets: usize,
    pub words: usize,
}

impl std::ops::AddAssign for CountryStats {
    fn add_assign(&mut self, o: Self) {
        self.users += o.users;
        self.tweets += o.tweets;
        self.words += o.words;
    }
}

/// Per-country corpus size; serialized as
/// `{"countries": {"IQ": {...}, ...}, "total": {...}}` in country order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub countries: BTreeMap<Country, CountryStats>,
}

impl CorpusStats {
    pub fn total(&self) -> CountryStats {
        let mut t = CountryStats::default();
        for s in self.countries.values() {
            t += *s;
        }
        t
    }

    pub fn get(&self, c: Country) -> CountryStats {
        self.countries.get(&c).copied().unwrap_or_default()
    }
}

impl Serialize for CorpusStats {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Countries<'a>(&'a BTreeMap<Country, CountryStats>);
        impl Serialize for Countries<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (c, st) in self.0 {
                    m.serialize_entry(c.code(), st)?;
                }
                m.end()
            }
        }
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("countries", &Countries(&self.countries))?;
        m.serialize_entry("total", &self.total())?;
        m.end()
    }
}

/// Users with at least one line, lines, and whitespace-separated words.
pub fn corpus_stats(corpus: &[CorpusLine]) -> CorpusStats {
    let mut users: BTreeMap<Country, HashSet<&str>> = BTreeMap::new();
    let mut stats = CorpusStats::default();
    for line in corpus {
        users.entry(line.country).or_default().insert(&line.user_id);
        let s = stats.countries.entry(line.country).or_default();
        s.tweets += 1;
        s.words += line.text.split_whitespace().count();
    }
    for (c, u) in users {
        stats.countries.get_mut(&c).expect("same keys").users = u.len();
    }
    stats
}

/// Writes the corpus as `country<TAB>user_id<TAB>text` rows.
pub fn write_corpus_tsv<W: Write>(w: &mut W, corpus: &[CorpusLine]) -> std::io::Result<()> {
    for line in corpus {
        write_tsv_row(w, &[line.country.code(), &line.user_id, &line.text])?;
    }
    Ok(())
}

/// Users and tweets remaining after each stage.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub profiles_read: usize,
    pub duplicate_profiles: usize,
    pub users: usize,
    pub no_country: usize,
    pub ambiguous_country: usize,
    pub country_tagged: usize,
    pub below_rank_cutoff: usize,
    pub top_n_selected: usize,
    /// Selected users without any tweet; rejected as mostly MSA.
    pub zero_tweet_users: usize,
    pub mostly_msa: usize,
    pub dialectal_kept: usize,
    pub vulgar: usize,
    pub retained: usize,
    pub tweets_read: usize,
    /// Tweets whose author has no profile.
    pub orphan_tweets: usize,
    pub candidate_tweets: usize,
    pub tweets_emitted: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CascadeOutput {
    /// One verdict per distinct profile, sorted by user id.
    pub verdicts: Vec<UserVerdict>,
    pub corpus: Vec<CorpusLine>,
    pub stats: CorpusStats,
    pub counts: StageCounts,
}

/// Runs the whole cascade.
pub fn run_cascade<C: VariantClassifier + ?Sized>(
    profiles: &[UserProfile],
    tweets: &[TweetRecord],
    gz: &Gazetteer,
    classifier: &C,
    lexicon: &ObsceneLexicon,
    config: &CascadeConfig,
) -> Result<CascadeOutput, PipelineError> {
    config.validate()?;
    if lexicon.is_empty() {
        return Err(PipelineError::EmptyObsceneList);
    }
    let mut counts = StageCounts {
        profiles_read: profiles.len(),
        tweets_read: tweets.len(),
        ..Default::default()
    };

    let Tagging {
        mut verdicts,
        duplicate_profiles,
    } = tag_users(profiles, gz, &config.normalization);
    counts.duplicate_profiles = duplicate_profiles;
    counts.users = verdicts.len();
    counts.no_country = count_reason(&verdicts, RejectionReason::NoCountry);
    counts.ambiguous_country = count_reason(&verdicts, RejectionReason::AmbiguousCountry);
    counts.country_tagged = counts.users - counts.no_country - counts.ambiguous_country;

    let latest = dedup_profiles(profiles);
    let selected = select_top_users(
        verdicts.iter().filter_map(|v| {
            let c = v.country.filter(|_| v.rejection_reason.is_none())?;
            Some((v.user_id.as_str(), c, latest[v.user_id.as_str()].followers_count))
        }),
        config.n_per_country,
    );
    for v in verdicts.iter_mut().filter(|v| v.rejection_reason.is_none()) {
        if !selected.contains(&v.user_id) {
            v.reject(RejectionReason::BelowRankCutoff);
        }
    }
    counts.below_rank_cutoff = count_reason(&verdicts, RejectionReason::BelowRankCutoff);
    counts.top_n_selected = selected.len();

    let mut by_user: HashMap<&str, Vec<&str>> = HashMap::new();
    for t in tweets {
        if latest.contains_key(t.user_id.as_str()) {
            by_user.entry(t.user_id.as_str()).or_default().push(t.text.as_str());
        } else {
            counts.orphan_tweets += 1;
        }
    }
    let empty: Vec<&str> = Vec::new();

    for v in verdicts.iter_mut().filter(|v| v.rejection_reason.is_none()) {
        let ts = by_user.get(v.user_id.as_str()).unwrap_or(&empty);
        if ts.is_empty() {
            counts.zero_tweet_users += 1;
        }
        if !dialectal_filter(v, ts, classifier, config.dialectal_threshold, &config.classifier_normalization) {
            continue;
        }
        counts.dialectal_kept += 1;
        if vulgar_filter(v, ts, lexicon, config.vulgar_threshold, &config.normalization) {
            v.retained = true;
        }
    }
    counts.mostly_msa = count_reason(&verdicts, RejectionReason::MostlyMsa);
    counts.vulgar = count_reason(&verdicts, RejectionReason::Vulgar);

    let mut retained: Vec<(String, Country)> = verdicts
        .iter()
        .filter(|v| v.retained)
        .map(|v| (v.user_id.clone(), v.country.expect("retained users are tagged")))
        .collect();
    retained.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    counts.retained = retained.len();
    counts.candidate_tweets = retained
        .iter()
        .map(|(u, _)| by_user.get(u.as_str()).map_or(0, Vec::len))
        .sum();

    let corpus = assemble_corpus(&retained, &by_user, classifier, config);
    counts.tweets_emitted = corpus.len();
    let stats = corpus_stats(&corpus);
    Ok(CascadeOutput {
        verdicts,
        corpus,
        stats,
        counts,
    })
}

fn count_reason(verdicts: &[UserVerdict], reason: RejectionReason) -> usize {
    verdicts.iter().filter(|v| v.rejection_reason == Some(reason)).count()
}
