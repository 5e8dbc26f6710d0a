#![allow(dead_code)]

pub mod oracles;

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use dialectkit::country::Country;
use dialectkit::fixture::{cascade_fixture, CascadeFixture, CascadeFixtureConfig};
use dialectkit::gazetteer::Gazetteer;
use dialectkit::records::{read_jsonl, TweetRecord, UserProfile};
use dialectkit::lintext::{self, LinearTextModel, Preset, TrainConfig};
use dialectkit::textnorm::{normalize_tweet, NormalizationConfig};
use dialectkit::weaklabel::{build_weak_corpus, VariantLabel};
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

/// Top-N cut used with the shipped cascade fixture (also in its run.toml).
pub const FIXTURE_TOP_N: usize = 40;

pub fn cascade_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/cascade")
}

pub fn regenerate() -> bool {
    std::env::var("DIALECTKIT_REGEN_GOLDEN").is_ok_and(|v| v == "1")
}

pub fn load_cascade_fixture() -> CascadeFixture {
    let dir = cascade_dir();
    if regenerate() {
        cascade_fixture(&CascadeFixtureConfig::default()).write_to_dir(&dir).unwrap();
    }
    let open = |name: &str| std::io::BufReader::new(std::fs::File::open(dir.join(name)).unwrap());
    let profiles: Vec<UserProfile> = read_jsonl(open("profiles.jsonl")).map(Result::unwrap).collect();
    let tweets: Vec<TweetRecord> = read_jsonl(open("tweets.jsonl")).map(Result::unwrap).collect();
    let obscene_terms = std::fs::read_to_string(dir.join("obscene.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect();
    CascadeFixture { profiles, tweets, obscene_terms }
}

const MSA_ONLY: &str = "ذضظثصةأإعق";
const DA_ONLY: &str = "شچگڤهجزحسى";

/// Labels a tweet by which register's private letters it uses more;
/// confidence is that register's share of the private letters.
pub fn register_oracle(text: &str) -> (VariantLabel, f64) {
    let msa = text.chars().filter(|c| MSA_ONLY.contains(*c)).count();
    let da = text.chars().filter(|c| DA_ONLY.contains(*c)).count();
    if da + msa == 0 {
        return (VariantLabel::Msa, 0.5);
    }
    if da > msa {
        (VariantLabel::Da, da as f64 / (da + msa) as f64)
    } else {
        (VariantLabel::Msa, msa as f64 / (da + msa) as f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RefCounts {
    pub profiles_read: usize,
    pub duplicate_profiles: usize,
    pub users: usize,
    pub no_country: usize,
    pub ambiguous_country: usize,
    pub country_tagged: usize,
    pub below_rank_cutoff: usize,
    pub top_n_selected: usize,
    pub zero_tweet_users: usize,
    pub mostly_msa: usize,
    pub dialectal_kept: usize,
    pub vulgar: usize,
    pub retained: usize,
    pub tweets_read: usize,
    pub orphan_tweets: usize,
    pub candidate_tweets: usize,
    pub tweets_emitted: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RefCountry {
    pub users: usize,
    pub tweets: usize,
    pub words: usize,
}

/// Per-country stats in country-code order of `Country::ALL`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefStats(pub Vec<(&'static str, RefCountry)>);

impl Serialize for RefStats {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut total = RefCountry::default();
        for (_, c) in &self.0 {
            total.users += c.users;
            total.tweets += c.tweets;
            total.words += c.words;
        }
        struct Rows<'a>(&'a [(&'static str, RefCountry)]);
        impl Serialize for Rows<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_map(self.0.iter().map(|(k, v)| (*k, v)))
            }
        }
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("countries", &Rows(&self.0))?;
        m.serialize_entry("total", &total)?;
        m.end()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefOutcome {
    pub counts: RefCounts,
    pub stats: RefStats,
    /// user id -> rejection reason, `None` when retained.
    pub verdicts: HashMap<String, Option<&'static str>>,
    pub emitted: Vec<(String, String)>,
}

/// The MSA/DA model the command-line chain trains on the fixture: weak
/// labels from the fixture tweets, preset msa-da, seed 1.
pub fn fixture_msa_da_model(fx: &CascadeFixture) -> LinearTextModel {
    let rows = fx.tweets.iter().cloned().map(Ok::<_, ()>);
    let (records, _) = build_weak_corpus(rows, NormalizationConfig::weak_labeling()).unwrap();
    let tc = TrainConfig { seed: 1, ..Preset::MsaDa.train_config() };
    let pairs = records.iter().map(|r| (r.text.as_str(), r.label.as_str()));
    lintext::train(pairs, Preset::MsaDa.feature_config(), tc).unwrap().0
}

/// A trained model as a raw-text classifier: the tweet is normalized the
/// way the weak corpus was, then the arg-max label and its probability are read off.
pub fn model_oracle(model: &LinearTextModel) -> impl Fn(&str) -> (VariantLabel, f64) + '_ {
    move |text| {
        let p = model.predict(&normalize_tweet(text, &NormalizationConfig::weak_labeling()));
        (p.label.parse().unwrap(), p.confidence())
    }
}

pub fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap();
    s.push('\n');
    s
}

/// Gazetteer base terms as token sequences, read straight from the shipped table.
fn base_terms() -> Vec<(Vec<String>, Country)> {
    Gazetteer::shipped_tsv()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            let toks = cols[0].split_whitespace().map(|t| t.to_lowercase()).collect();
            (toks, Country::from_code(cols[1]).unwrap())
        })
        .collect()
}

fn contains_seq(hay: &[String], needle: &[String]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

/// Straight-line re-statement of the cascade for fixtures whose
/// descriptions use base gazetteer spellings separated by spaces, whose
/// hashtags stand alone, and whose classifier does not depend on
/// normalization.
pub fn reference_cascade(
    fx: &CascadeFixture,
    classify: impl Fn(&str) -> (VariantLabel, f64),
    top_n: usize,
    dialectal_threshold: f64,
    vulgar_threshold: f64,
    min_confidence: f64,
) -> RefOutcome {
    let mut c = RefCounts { profiles_read: fx.profiles.len(), tweets_read: fx.tweets.len(), ..Default::default() };
    let mut latest: HashMap<&str, &UserProfile> = HashMap::new();
    for p in &fx.profiles {
        latest.insert(&p.user_id, p);
    }
    c.users = latest.len();
    c.duplicate_profiles = fx.profiles.len() - latest.len();

    let terms = base_terms();
    let mut verdicts: HashMap<String, Option<&'static str>> = HashMap::new();
    let mut tagged: Vec<(&str, Country, u64)> = Vec::new();
    for (user, p) in &latest {
        let toks: Vec<String> = p
            .description
            .split_whitespace()
            .map(|t| t.to_lowercase())
            .collect();
        let found: BTreeSet<Country> = terms
            .iter()
            .filter(|(t, _)| contains_seq(&toks, t))
            .map(|(_, c)| *c)
            .collect();
        match found.len() {
            0 => {
                verdicts.insert(user.to_string(), Some("no_country"));
                c.no_country += 1;
            }
            1 => tagged.push((user, *found.iter().next().unwrap(), p.followers_count)),
            _ => {
                verdicts.insert(user.to_string(), Some("ambiguous_country"));
                c.ambiguous_country += 1;
            }
        }
    }
    c.country_tagged = tagged.len();

    let mut selected: Vec<(&str, Country)> = Vec::new();
    for country in Country::ALL {
        let mut pool: Vec<&(&str, Country, u64)> = tagged.iter().filter(|t| t.1 == country).collect();
        // selection sort: repeatedly take the best remaining candidate
        for taken in 0..pool.len() {
            let mut best = taken;
            for j in taken + 1..pool.len() {
                let (a, b) = (pool[j], pool[best]);
                if a.2 > b.2 || (a.2 == b.2 && a.0 < b.0) {
                    best = j;
                }
            }
            pool.swap(taken, best);
            if taken < top_n {
                selected.push((pool[taken].0, country));
            } else {
                verdicts.insert(pool[taken].0.to_string(), Some("below_rank_cutoff"));
                c.below_rank_cutoff += 1;
            }
        }
    }
    c.top_n_selected = selected.len();

    let mut timeline: HashMap<&str, Vec<&str>> = HashMap::new();
    for t in &fx.tweets {
        if latest.contains_key(t.user_id.as_str()) {
            timeline.entry(&t.user_id).or_default().push(&t.text);
        } else {
            c.orphan_tweets += 1;
        }
    }
    let plain: Vec<String> = fx.obscene_terms.iter().filter(|t| !t.starts_with('#')).map(|t| t.to_lowercase()).collect();
    let tags: Vec<String> = fx.obscene_terms.iter().filter(|t| t.starts_with('#')).map(|t| t.to_lowercase()).collect();
    let is_vulgar = |text: &str| {
        text.split_whitespace().map(|t| t.to_lowercase()).any(|t| plain.contains(&t) || tags.contains(&t))
    };

    let mut retained: Vec<(Country, &str)> = Vec::new();
    for (user, country) in &selected {
        let ts = timeline.get(user).cloned().unwrap_or_default();
        if ts.is_empty() {
            c.zero_tweet_users += 1;
            c.mostly_msa += 1;
            verdicts.insert(user.to_string(), Some("mostly_msa"));
            continue;
        }
        let da = ts.iter().filter(|t| classify(t).0 == VariantLabel::Da).count();
        if (da as f64) < dialectal_threshold * ts.len() as f64 {
            c.mostly_msa += 1;
            verdicts.insert(user.to_string(), Some("mostly_msa"));
            continue;
        }
        c.dialectal_kept += 1;
        let bad = ts.iter().filter(|t| is_vulgar(t)).count();
        if bad as f64 > vulgar_threshold * ts.len() as f64 {
            c.vulgar += 1;
            verdicts.insert(user.to_string(), Some("vulgar"));
            continue;
        }
        verdicts.insert(user.to_string(), None);
        retained.push((*country, user));
    }
    retained.sort();
    c.retained = retained.len();

    let mut per: HashMap<Country, (BTreeSet<&str>, usize, usize)> = HashMap::new();
    let mut emitted = Vec::new();
    for (country, user) in &retained {
        let ts = timeline.get(user).cloned().unwrap_or_default();
        c.candidate_tweets += ts.len();
        for t in ts {
            let (label, conf) = classify(t);
            if label == VariantLabel::Da && min_confidence < 1.0 && conf >= min_confidence {
                let e = per.entry(*country).or_default();
                e.0.insert(user);
                e.1 += 1;
                e.2 += t.split_whitespace().count();
                emitted.push((user.to_string(), t.to_string()));
                c.tweets_emitted += 1;
            }
        }
    }
    let stats = RefStats(
        Country::ALL
            .iter()
            .filter_map(|k| per.get(k).map(|(u, t, w)| (k.code(), RefCountry { users: u.len(), tweets: *t, words: *w })))
            .collect(),
    );
    RefOutcome { counts: c, stats, verdicts, emitted }
}
