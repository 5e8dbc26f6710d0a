//! Synthetic desk-scale corpora.
//!
//! Two generators stand in for platform data: a two-register MSA/dialect
//! corpus whose classes differ in their letter distributions, and a
//! multi-class dialect corpus with planted word-pair markers that are
//! invisible to character n-grams.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::country::Country;
use crate::records::LabeledText;

/// Letters shared by both registers.
const COMMON_LETTERS: &[char] = &['ا', 'ل', 'م', 'ن', 'ر', 'ب', 'ي', 'و', 'ت', 'ك'];
const MSA_LETTERS: &[char] = &['ذ', 'ض', 'ظ', 'ث', 'ص', 'ة', 'أ', 'إ', 'ع', 'ق'];
const DA_LETTERS: &[char] = &['ش', 'چ', 'گ', 'ڤ', 'ه', 'ج', 'ز', 'ح', 'س', 'ى'];

/// Draws words whose letters come mostly from one letter set.
#[derive(Clone, Debug)]
pub struct Register {
    own: &'static [char],
    own_share: f64,
}

impl Register {
    pub fn msa() -> Self {
        Register { own: MSA_LETTERS, own_share: 0.5 }
    }

    pub fn dialect() -> Self {
        Register { own: DA_LETTERS, own_share: 0.5 }
    }

    /// A word of `len` letters.
    pub fn word<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> String {
        (0..len)
            .map(|_| {
                if rng.gen_bool(self.own_share) {
                    *self.own.choose(rng).expect("non-empty")
                } else {
                    *COMMON_LETTERS.choose(rng).expect("non-empty")
                }
            })
            .collect()
    }

    pub fn vocabulary(&self, rng: &mut impl Rng, size: usize) -> Vec<String> {
        unique_words(rng, size, |r| {
            let len = r.gen_range(2..=6);
            self.word(r, len)
        })
    }
}

fn unique_words(rng: &mut impl Rng, size: usize, mut make: impl FnMut(&mut dyn rand::RngCore) -> String) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(size);
    let mut guard = 0usize;
    while out.len() < size {
        let w = make(rng as &mut dyn rand::RngCore);
        if seen.insert(w.clone()) {
            out.push(w);
        }
        guard += 1;
        assert!(guard < size * 1000 + 1000, "vocabulary space exhausted");
    }
    out
}

fn shared_word(rng: &mut dyn rand::RngCore) -> String {
    let len = rng.gen_range(2..=6);
    (0..len).map(|_| *COMMON_LETTERS.choose(rng).expect("non-empty")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantCorpusConfig {
    pub docs: usize,
    /// Probability that a token is drawn from the vocabulary both classes share.
    pub shared_vocab_fraction: f64,
    pub vocab_per_class: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub seed: u64,
}

impl Default for VariantCorpusConfig {
    fn default() -> Self {
        VariantCorpusConfig {
            docs: 20_000,
            shared_vocab_fraction: 0.1,
            vocab_per_class: 500,
            min_tokens: 4,
            max_tokens: 14,
            seed: 1,
        }
    }
}

/// Per-register vocabularies used by [`variant_corpus`].
pub struct VariantVocab {
    pub msa: Vec<String>,
    pub dialect: Vec<String>,
    pub shared: Vec<String>,
}

impl VariantVocab {
    pub fn generate(rng: &mut impl Rng, per_class: usize) -> Self {
        VariantVocab {
            msa: Register::msa().vocabulary(rng, per_class),
            dialect: Register::dialect().vocabulary(rng, per_class),
            shared: unique_words(rng, per_class / 2, shared_word),
        }
    }

    /// A sentence of `len` tokens in one register.
    pub fn sentence(&self, rng: &mut impl Rng, dialect: bool, len: usize, shared_fraction: f64) -> Vec<String> {
        let own = if dialect { &self.dialect } else { &self.msa };
        (0..len)
            .map(|_| {
                let pool = if rng.gen_bool(shared_fraction) { &self.shared } else { own };
                pool.choose(rng).expect("non-empty").clone()
            })
            .collect()
    }
}

/// Balanced two-class corpus labeled `MSA` / `DA`, classes alternating.
pub fn variant_corpus(cfg: &VariantCorpusConfig) -> Vec<LabeledText> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = VariantVocab::generate(&mut rng, cfg.vocab_per_class);
    (0..cfg.docs)
        .map(|i| {
            let dialect = i % 2 == 1;
            let len = rng.gen_range(cfg.min_tokens..=cfg.max_tokens);
            LabeledText {
                label: if dialect { "DA" } else { "MSA" }.to_string(),
                text: vocab.sentence(&mut rng, dialect, len, cfg.shared_vocab_fraction).join(" "),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DialectCorpusConfig {
    pub classes: usize,
    pub docs_per_class: usize,
    pub tokens_per_doc: usize,
    /// Share of tokens that belong to planted marker pairs.
    pub marker_rate: f64,
    pub background_vocab: usize,
    /// Class `k` gets `docs_per_class * (1 - skew)^k` documents.
    pub skew: f64,
    pub seed: u64,
}

impl Default for DialectCorpusConfig {
    fn default() -> Self {
        DialectCorpusConfig {
            classes: 6,
            docs_per_class: 1000,
            tokens_per_doc: 40,
            marker_rate: 0.05,
            background_vocab: 300,
            skew: 0.0,
            seed: 1,
        }
    }
}

/// Marker words start and end with these five letters, so no character
/// 7-gram spanning the boundary between two markers can tell their order.
const WORD_PREFIX: &str = "مستقب";
const WORD_SUFFIX: &str = "لونها";

fn marker_word(rng: &mut dyn rand::RngCore) -> String {
    let core: String = (0..3)
        .map(|_| {
            let set = if rng.gen_bool(0.5) { COMMON_LETTERS } else { DA_LETTERS };
            *set.choose(rng).expect("non-empty")
        })
        .collect();
    format!("{WORD_PREFIX}{core}{WORD_SUFFIX}")
}

/// Ordered pairs over `m` marker words, enumerated so that every word
/// appears equally often in first and second position when all pairs are used.
fn marker_pairs(classes: usize) -> (usize, Vec<(usize, usize)>) {
    let mut m = 2;
    while m * (m - 1) < classes {
        m += 1;
    }
    let mut pairs = Vec::new();
    for shift in 1..m {
        for a in 0..m {
            pairs.push((a, (a + shift) % m));
        }
    }
    pairs.truncate(classes);
    (m, pairs)
}

/// Labels used by [`dialect_corpus`]: the first `classes` country codes.
pub fn dialect_labels(classes: usize) -> Vec<String> {
    Country::ALL.iter().take(classes).map(|c| c.code().to_string()).collect()
}

/// Multi-class corpus whose only class signal is one ordered word pair
/// per class. Marker words are shared by all classes, so their unigram
/// statistics carry no label information.
pub fn dialect_corpus(cfg: &DialectCorpusConfig) -> Vec<LabeledText> {
    assert!(cfg.classes >= 2 && cfg.classes <= Country::ALL.len(), "2..=18 classes");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (m, pairs) = marker_pairs(cfg.classes);
    let markers = unique_words(&mut rng, m, marker_word);
    let background = Register::dialect().vocabulary(&mut rng, cfg.background_vocab);
    let labels = dialect_labels(cfg.classes);
    let n_pairs = ((cfg.tokens_per_doc as f64 * cfg.marker_rate / 2.0).round() as usize).max(1);

    let mut out = Vec::new();
    for (k, label) in labels.iter().enumerate() {
        let docs = (cfg.docs_per_class as f64 * (1.0 - cfg.skew).powi(k as i32)).round().max(1.0) as usize;
        let (a, b) = pairs[k];
        for _ in 0..docs {
            let filler = cfg.tokens_per_doc.saturating_sub(2 * n_pairs);
            let mut tokens: Vec<&str> = (0..filler)
                .map(|_| background.choose(&mut rng).expect("non-empty").as_str())
                .collect();
            for _ in 0..n_pairs {
                let at = rng.gen_range(0..=tokens.len());
                tokens.insert(at, &markers[b]);
                tokens.insert(at, &markers[a]);
            }
            out.push(LabeledText {
                label: label.clone(),
                text: tokens.join(" "),
            });
        }
    }
    out
}

/// Deterministic interleaved train/test split: every `every`-th document
/// of each class goes to the test side.
pub fn split_every(docs: Vec<LabeledText>, every: usize) -> (Vec<LabeledText>, Vec<LabeledText>) {
    let mut seen: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for d in docs {
        let n = seen.entry(d.label.clone()).or_default();
        *n += 1;
        if (*n).is_multiple_of(every) {
            test.push(d);
        } else {
            train.push(d);
        }
    }
    (train, test)
}

/// Countries used by [`cascade_fixture`], with the gazetteer terms that
/// appear in their users' profile descriptions.
const CASCADE_COUNTRIES: &[(Country, &[&str])] = &[
    (Country::SA, &["السعودية", "الرياض", "جدة", "سعودي"]),
    (Country::EG, &["مصر", "القاهرة", "مصري"]),
    (Country::JO, &["الاردن", "الزرقاء", "اردني"]),
    (Country::MA, &["المغرب", "الرباط", "مغربي", "الدار البيضاء"]),
];

/// Descriptions that name no place.
const PLACELESS_BIOS: &[&str] = &[
    "",
    "احب القراءة والسفر",
    "مهندس برمجيات",
    "طالب جامعي",
    "كاتب ومدون",
    "لاعب كرة قدم",
    "مصور هاوي",
    "اب لثلاثة اطفال",
    "ممرضة",
    "رسام",
];

/// Eight placeholder entries: six plain tokens and two hashtags.
pub const PLACEHOLDER_OBSCENE_TERMS: &[&str] = &[
    "بلتنك", "نمروك", "تلبان", "ونكار", "ركبول", "لمتور", "#ربنكو", "#تلمنو",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CascadeFixtureConfig {
    /// Tagged users per country; the cascade's top-N cut is meant to sit below this.
    pub users_per_country: usize,
    pub placeless_users: usize,
    pub ambiguous_users: usize,
    pub orphan_tweets: usize,
    pub seed: u64,
}

impl Default for CascadeFixtureConfig {
    fn default() -> Self {
        CascadeFixtureConfig {
            users_per_country: 45,
            placeless_users: 10,
            ambiguous_users: 10,
            orphan_tweets: 15,
            seed: 7,
        }
    }
}

/// Profiles, tweets and an obscene-term list for exercising the filter cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeFixture {
    pub profiles: Vec<crate::records::UserProfile>,
    pub tweets: Vec<crate::records::TweetRecord>,
    pub obscene_terms: Vec<String>,
}

impl CascadeFixture {
    /// Writes `profiles.jsonl`, `tweets.jsonl` and `obscene.txt` into `dir`.
    pub fn write_to_dir(&self, dir: &std::path::Path) -> std::io::Result<()> {
        use std::io::Write;
        std::fs::create_dir_all(dir)?;
        let mut p = std::io::BufWriter::new(std::fs::File::create(dir.join("profiles.jsonl"))?);
        for r in &self.profiles {
            serde_json::to_writer(&mut p, r)?;
            p.write_all(b"\n")?;
        }
        p.flush()?;
        let mut t = std::io::BufWriter::new(std::fs::File::create(dir.join("tweets.jsonl"))?);
        for r in &self.tweets {
            serde_json::to_writer(&mut t, r)?;
            t.write_all(b"\n")?;
        }
        t.flush()?;
        let mut o = self.obscene_terms.join("\n");
        o.push('\n');
        std::fs::write(dir.join("obscene.txt"), o)
    }
}

/// What a tagged user's timeline looks like.
#[derive(Clone, Copy, Debug)]
enum Timeline {
    Silent,
    /// `da` of `n` tweets dialectal, `vulgar` of the dialectal ones carrying an obscene term.
    Mixed { n: usize, da: usize, vulgar: usize },
}

fn timeline_for_rank(rank: usize, rng: &mut impl Rng) -> Timeline {
    match rank {
        3 => Timeline::Mixed { n: 10, da: 5, vulgar: 0 },
        4 => Timeline::Mixed { n: 10, da: 4, vulgar: 0 },
        5 => Timeline::Mixed { n: 10, da: 8, vulgar: 6 },
        6 => Timeline::Mixed { n: 10, da: 10, vulgar: 5 },
        7 => Timeline::Silent,
        r if r % 6 == 2 => {
            let n = rng.gen_range(4..=10);
            Timeline::Mixed { n, da: rng.gen_range(0..n / 2), vulgar: 0 }
        }
        _ => {
            let n: usize = rng.gen_range(3..=12);
            let da = rng.gen_range(n.div_ceil(2) + 1..=n).min(n);
            Timeline::Mixed { n, da, vulgar: rng.gen_range(0..=1).min(da) }
        }
    }
}

/// A 200-user desk-scale stand-in for platform data.
///
/// Tagged users of each country get distinct follower counts by rank
/// (with one tie per country), and their timelines are laid out by rank
/// so that the boundary cases of the cascade occur in every country:
/// exactly half dialectal, just under half, six and exactly five of ten
/// tweets vulgar, and no tweets at all. Dialectal tweets use the dialect
/// register plus a few country-specific words; MSA tweets use the MSA
/// register. About half of all tweets carry a relative pronoun of their
/// register, and some carry mentions, links and digits.
pub fn cascade_fixture(cfg: &CascadeFixtureConfig) -> CascadeFixture {
    use crate::records::{TweetRecord, UserProfile};
    use crate::textnorm::is_relative_pronoun;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let reserved = |w: &str| is_relative_pronoun(w) || PLACEHOLDER_OBSCENE_TERMS.contains(&w);
    let mut vocab = VariantVocab::generate(&mut rng, 150);
    vocab.msa.retain(|w| !reserved(w));
    vocab.dialect.retain(|w| !reserved(w));
    vocab.shared.retain(|w| !reserved(w));
    let local: Vec<Vec<String>> = CASCADE_COUNTRIES
        .iter()
        .map(|_| {
            let mut v = Register::dialect().vocabulary(&mut rng, 12);
            v.retain(|w| !reserved(w) && !vocab.dialect.contains(w));
            v
        })
        .collect();

    let mut profiles = Vec::new();
    let mut timelines: Vec<(String, Option<usize>, Timeline)> = Vec::new();
    let mut next_user = 0usize;
    let mut new_user = || {
        next_user += 1;
        format!("u{next_user:04}")
    };

    for (ci, (_, terms)) in CASCADE_COUNTRIES.iter().enumerate() {
        for rank in 0..cfg.users_per_country {
            let user = new_user();
            let term = terms[rank % terms.len()];
            let description = match rank % 4 {
                0 => format!("{term} وافتخر"),
                1 => format!("من {term} @fan{rank} https://example.com/{rank}"),
                2 => format!("احب {term} كثيرا"),
                _ => term.to_string(),
            };
            // ranks 8 and 9 share a follower count
            let followers = 50_000 - 1_000 * rank.min(8) as u64 - 1_000 * rank.saturating_sub(9) as u64;
            profiles.push(UserProfile { user_id: user.clone(), description, followers_count: followers });
            timelines.push((user, Some(ci), timeline_for_rank(rank, &mut rng)));
        }
    }
    for i in 0..cfg.placeless_users {
        let user = new_user();
        profiles.push(UserProfile {
            user_id: user.clone(),
            description: PLACELESS_BIOS[i % PLACELESS_BIOS.len()].to_string(),
            followers_count: rng.gen_range(0..100_000),
        });
        timelines.push((user, None, Timeline::Mixed { n: 6, da: 6, vulgar: 0 }));
    }
    for i in 0..cfg.ambiguous_users {
        let user = new_user();
        let (_, a) = CASCADE_COUNTRIES[i % CASCADE_COUNTRIES.len()];
        let (_, b) = CASCADE_COUNTRIES[(i + 1) % CASCADE_COUNTRIES.len()];
        profiles.push(UserProfile {
            user_id: user.clone(),
            description: format!("{} مقيم في {}", a[0], b[1]),
            followers_count: rng.gen_range(0..100_000),
        });
        timelines.push((user, None, Timeline::Mixed { n: 6, da: 6, vulgar: 0 }));
    }
    // A stale copy of the first profile precedes the real one.
    let mut stale = profiles[0].clone();
    stale.description = PLACELESS_BIOS[1].to_string();
    profiles.insert(0, stale);

    let mut tweets = Vec::new();
    for (user, country, timeline) in &timelines {
        let Timeline::Mixed { n, da, vulgar } = *timeline else { continue };
        let mut kinds: Vec<(bool, bool)> = (0..n).map(|i| (i < da, i < vulgar)).collect();
        kinds.shuffle(&mut rng);
        for (dialect, vulgar) in kinds {
            let local_words = country.map(|c| &local[c]);
            let text = fixture_tweet(&mut rng, &vocab, dialect, vulgar, local_words);
            tweets.push((user.clone(), text));
        }
    }
    for i in 0..cfg.orphan_tweets {
        let text = fixture_tweet(&mut rng, &vocab, i % 2 == 0, false, None);
        tweets.push((format!("ghost{:02}", i % 4), text));
    }
    tweets.shuffle(&mut rng);
    let tweets = tweets
        .into_iter()
        .enumerate()
        .map(|(i, (user_id, text))| TweetRecord { id: format!("t{i:05}"), user_id, text })
        .collect();

    CascadeFixture {
        profiles,
        tweets,
        obscene_terms: PLACEHOLDER_OBSCENE_TERMS.iter().map(|s| s.to_string()).collect(),
    }
}

fn fixture_tweet(
    rng: &mut impl Rng,
    vocab: &VariantVocab,
    dialect: bool,
    vulgar: bool,
    local: Option<&Vec<String>>,
) -> String {
    let len = rng.gen_range(6..=12);
    let mut words = vocab.sentence(rng, dialect, len, 0.1);
    if let (true, Some(local)) = (dialect, local) {
        for w in words.iter_mut() {
            if rng.gen_bool(0.3) {
                *w = local.choose(rng).expect("non-empty").clone();
            }
        }
    }
    if rng.gen_bool(0.5) {
        let pronoun = if dialect {
            "اللي"
        } else {
            *["الذي", "التي", "الذين"].choose(rng).expect("non-empty")
        };
        let at = rng.gen_range(1..words.len());
        words.insert(at, pronoun.to_string());
    }
    if vulgar {
        let term = PLACEHOLDER_OBSCENE_TERMS.choose(rng).expect("non-empty");
        let at = rng.gen_range(0..=words.len());
        words.insert(at, term.to_string());
    }
    match rng.gen_range(0..8) {
        0 => words.insert(0, format!("@friend{}", rng.gen_range(1..50))),
        1 => words.push(format!("https://t.co/{}", rng.gen_range(1000..9999))),
        2 => words.push(rng.gen_range(1990..2021).to_string()),
        _ => {}
    }
    words.join(" ")
}
