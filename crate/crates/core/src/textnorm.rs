//! Tweet normalization, tokenization and hashtag segmentation.
//!
//! Every downstream stage (country tagging, weak labeling, feature
//! extraction, term counting) sees text that went through
//! [`normalize_tweet`] first. Platform artifacts are replaced by fixed
//! placeholder tokens, and every placeholder is emitted as its own
//! whitespace-separated token so that the normalizer is idempotent.
//!
//! Emoji detection is table driven, see [`is_emoji`] for the ranges.

use serde::{Deserialize, Serialize};

pub const USER: &str = "@USER";
pub const URL: &str = "URL";
pub const NUM: &str = "NUM";
pub const EMOJI: &str = "EMOJI";
pub const NEWLINE: &str = "NEWLINE";
pub const RELATIVE: &str = "RELATIVE";

/// All placeholder tokens the normalizer can emit.
pub const PLACEHOLDERS: [&str; 6] = [USER, URL, NUM, EMOJI, NEWLINE, RELATIVE];

/// MSA relative pronouns (masculine, feminine and plural spellings).
pub const MSA_RELATIVE_PRONOUNS: [&str; 5] = ["الذي", "الذى", "التي", "التى", "الذين"];

/// The dialectal relative pronoun in its two common spellings.
pub const DA_RELATIVE_PRONOUNS: [&str; 2] = ["اللي", "اللى"];

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

/// Switches for the individual normalization rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    pub replace_mentions: bool,
    pub replace_urls: bool,
    pub replace_digits: bool,
    pub replace_emoji: bool,
    pub replace_newlines: bool,
    /// Only enabled while building the weakly labeled MSA/DA corpus.
    pub replace_relative_pronouns: bool,
    pub segment_hashtags: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            replace_mentions: true,
            replace_urls: true,
            replace_digits: true,
            replace_emoji: true,
            replace_newlines: true,
            replace_relative_pronouns: false,
            segment_hashtags: true,
        }
    }
}

impl NormalizationConfig {
    /// Default rules plus relative-pronoun masking.
    pub fn weak_labeling() -> Self {
        NormalizationConfig {
            replace_relative_pronouns: true,
            ..Default::default()
        }
    }
}

/// An ordered list of non-empty, whitespace-free tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenStream {
    tokens: Vec<String>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.tokens.iter()
    }

    pub fn into_vec(self) -> Vec<String> {
        self.tokens
    }

    /// Joins the tokens with single spaces.
    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

pub fn is_placeholder(token: &str) -> bool {
    PLACEHOLDERS.contains(&token)
}

pub fn is_relative_pronoun(token: &str) -> bool {
    MSA_RELATIVE_PRONOUNS.contains(&token) || DA_RELATIVE_PRONOUNS.contains(&token)
}

/// Emoji presentation and pictograph codepoints.
///
/// Covers U+1F000..U+1FAFF (pictographs, emoticons, transport, flags via
/// regional indicators, skin tone modifiers), U+2600..U+27BF (misc symbols
/// and dingbats) and the scattered emoji-presentation symbols from the
/// technical, arrows and CJK symbol blocks.
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x231A..=0x231B
        | 0x2328
        | 0x23CF
        | 0x23E9..=0x23F3
        | 0x23F8..=0x23FA
        | 0x2B05..=0x2B07
        | 0x2B1B..=0x2B1C
        | 0x2B50
        | 0x2B55
        | 0x2934..=0x2935
        | 0x3030
        | 0x303D
        | 0x3297
        | 0x3299)
}

/// Codepoints that only extend an emoji run (joiners, variation
/// selectors, keycap, tag characters).
fn is_emoji_continuation(c: char) -> bool {
    matches!(c as u32, 0x200D | 0xFE0E | 0xFE0F | 0x20E3 | 0xE0020..=0xE007F)
}

fn is_digit(c: char) -> bool {
    c.is_ascii_digit() || ('\u{0660}'..='\u{0669}').contains(&c)
}

fn is_line_break(c: char) -> bool {
    matches!(c, '\n' | '\r' | '\u{0B}' | '\u{0C}' | '\u{85}' | '\u{2028}' | '\u{2029}')
}

fn is_mention_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_mark(c: char) -> bool {
    matches!(c as u32,
        0x0300..=0x036F | 0x0610..=0x061A | 0x064B..=0x065F | 0x0670 | 0x06D6..=0x06ED)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || is_mark(c)
}

/// Punctuation codepoints split into standalone tokens by [`tokenize`].
pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation();
    }
    matches!(c as u32,
        0xA1 | 0xA7 | 0xAB | 0xB6 | 0xB7 | 0xBB | 0xBF
        | 0x060C | 0x060D | 0x061B | 0x061E | 0x061F | 0x066A..=0x066D | 0x06D4
        | 0x2010..=0x2027
        | 0x2030..=0x205E
        | 0x3001..=0x3003
        | 0x3008..=0x3011
        | 0xFD3E | 0xFD3F
        | 0xFF01..=0xFF0F
        | 0xFF1A..=0xFF20
        | 0xFF3B..=0xFF40
        | 0xFF5B..=0xFF65)
}

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic() || ('\u{00C0}'..='\u{024F}').contains(&c)
}

/// Splits a hashtag into its constituents.
///
/// The leading `#` is dropped, the body is split on underscores (and any
/// further `#`), and Latin runs are split again at lower-to-upper case
/// transitions. Input without a leading `#`, or a tag with no
/// constituents at all, comes back as a single unchanged token.
pub fn segment_hashtag(tag: &str) -> Vec<String> {
    let Some(body) = tag.strip_prefix('#') else {
        return vec![tag.to_string()];
    };
    let mut parts = Vec::new();
    for piece in body.split(['_', '#']) {
        let mut current = String::new();
        let mut prev: Option<char> = None;
        for c in piece.chars() {
            if let Some(p) = prev {
                if is_latin_letter(p)
                    && is_latin_letter(c)
                    && p.is_lowercase()
                    && c.is_uppercase()
                    && !current.is_empty()
                {
                    parts.push(std::mem::take(&mut current));
                }
            }
            current.push(c);
            prev = Some(c);
        }
        if !current.is_empty() {
            parts.push(current);
        }
    }
    // Whitespace never appears in hashtags produced by the normalizer, but
    // callers may hand us arbitrary strings.
    let parts: Vec<String> = parts
        .iter()
        .flat_map(|p| p.split_whitespace())
        .map(str::to_string)
        .collect();
    if parts.is_empty() {
        vec![tag.to_string()]
    } else {
        parts
    }
}

/// Splits on whitespace, then separates punctuation codepoints into
/// standalone tokens. Placeholder tokens survive intact.
pub fn tokenize(text: &str) -> TokenStream {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        let mut rest = chunk;
        while let Some(c) = rest.chars().next() {
            if c == '@' && placeholder_mention_at(rest) {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(USER.to_string());
                rest = &rest[USER.len()..];
                continue;
            }
            if is_punctuation(c) {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(c.to_string());
            } else {
                word.push(c);
            }
            rest = &rest[c.len_utf8()..];
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    TokenStream { tokens }
}

fn placeholder_mention_at(s: &str) -> bool {
    s.starts_with(USER)
        && s[USER.len()..]
            .chars()
            .next()
            .is_none_or(|c| !is_mention_char(c))
}

#[derive(Debug)]
enum Segment {
    Text(String),
    Placeholder(&'static str),
}

enum Item {
    Word(String),
    Break,
}

/// Normalizes a tweet according to `cfg`.
///
/// Mentions, URLs, digit runs, emoji runs, line breaks and (optionally)
/// relative pronouns become placeholder tokens; hashtags are replaced by
/// their constituents. Horizontal whitespace is collapsed to single
/// spaces. The function is idempotent for every configuration.
pub fn normalize_tweet(text: &str, cfg: &NormalizationConfig) -> String {
    let mut items = Vec::new();
    let mut chunk = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_whitespace() {
            if !chunk.is_empty() {
                process_chunk(&std::mem::take(&mut chunk), cfg, &mut items);
            }
            if is_line_break(c) {
                if c == '\r' && chars.peek() == Some(&'\n') {
                    chars.next();
                }
                if cfg.replace_newlines {
                    items.push(Item::Word(NEWLINE.to_string()));
                } else {
                    items.push(Item::Break);
                }
            }
        } else {
            chunk.push(c);
        }
    }
    if !chunk.is_empty() {
        process_chunk(&chunk, cfg, &mut items);
    }

    let mut out = String::with_capacity(text.len());
    let mut prev_word = false;
    for item in items {
        match item {
            Item::Word(w) => {
                if prev_word {
                    out.push(' ');
                }
                out.push_str(&w);
                prev_word = true;
            }
            Item::Break => {
                out.push('\n');
                prev_word = false;
            }
        }
    }
    out
}

fn process_chunk(chunk: &str, cfg: &NormalizationConfig, items: &mut Vec<Item>) {
    let (head, has_url) = if cfg.replace_urls {
        match find_url(chunk) {
            Some(pos) => (&chunk[..pos], true),
            None => (chunk, false),
        }
    } else {
        (chunk, false)
    };

    let mut segments = vec![Segment::Text(head.to_string())];
    if cfg.replace_mentions {
        segments = split_segments(segments, split_mentions);
    }
    if cfg.segment_hashtags {
        segments = split_segments(segments, split_hashtags);
    }
    if cfg.replace_emoji {
        segments = split_segments(segments, split_emoji);
    }
    if cfg.replace_digits {
        segments = split_segments(segments, split_digits);
    }
    if cfg.replace_relative_pronouns {
        segments = split_segments(segments, split_pronouns);
    }
    if has_url {
        segments.push(Segment::Placeholder(URL));
    }

    for seg in segments {
        match seg {
            Segment::Text(t) if !t.is_empty() => items.push(Item::Word(t)),
            Segment::Text(_) => {}
            Segment::Placeholder(p) => items.push(Item::Word(p.to_string())),
        }
    }
}

fn split_segments(segments: Vec<Segment>, f: fn(&str, &mut Vec<Segment>)) -> Vec<Segment> {
    let mut out = Vec::with_capacity(segments.len());
    for seg in segments {
        match seg {
            Segment::Text(t) => f(&t, &mut out),
            p => out.push(p),
        }
    }
    out
}

fn find_url(chunk: &str) -> Option<usize> {
    let lower = chunk.to_ascii_lowercase();
    URL_PREFIXES.iter().filter_map(|p| lower.find(p)).min()
}

fn push_text(out: &mut Vec<Segment>, s: &str) {
    if !s.is_empty() {
        out.push(Segment::Text(s.to_string()));
    }
}

fn split_mentions(text: &str, out: &mut Vec<Segment>) {
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if c != '@' {
            continue;
        }
        let mut end = i + 1;
        while let Some(&(j, d)) = iter.peek() {
            if is_mention_char(d) {
                end = j + d.len_utf8();
                iter.next();
            } else {
                break;
            }
        }
        if end > i + 1 {
            push_text(out, &text[start..i]);
            out.push(Segment::Placeholder(USER));
            start = end;
        }
    }
    push_text(out, &text[start..]);
}

/// Hashtags of a raw text, `#` included, in order of appearance.
pub fn extract_hashtags(text: &str) -> Vec<&str> {
    let mut tags = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if c != '#' {
            continue;
        }
        let mut end = i + 1;
        while let Some(&(j, d)) = iter.peek() {
            if !is_word_char(d) {
                break;
            }
            end = j + d.len_utf8();
            iter.next();
        }
        if end > i + 1 {
            tags.push(&text[i..end]);
        }
    }
    tags
}

fn split_hashtags(text: &str, out: &mut Vec<Segment>) {
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if c != '#' {
            continue;
        }
        let mut end = i + 1;
        while let Some(&(j, d)) = iter.peek() {
            if is_word_char(d) {
                end = j + d.len_utf8();
                iter.next();
            } else {
                break;
            }
        }
        if end > i + 1 {
            push_text(out, &text[start..i]);
            for part in segment_hashtag(&text[i..end]) {
                push_text(out, &part);
            }
            start = end;
        }
    }
    push_text(out, &text[start..]);
}

fn split_runs(
    text: &str,
    out: &mut Vec<Segment>,
    starts: fn(char) -> bool,
    continues: fn(char) -> bool,
    placeholder: &'static str,
) {
    let mut start = 0;
    let mut run_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match run_start {
            Some(_) if starts(c) || continues(c) => {}
            Some(rs) => {
                push_text(out, &text[start..rs]);
                out.push(Segment::Placeholder(placeholder));
                start = i;
                run_start = None;
            }
            None if starts(c) => run_start = Some(i),
            None => {}
        }
    }
    if let Some(rs) = run_start {
        push_text(out, &text[start..rs]);
        out.push(Segment::Placeholder(placeholder));
    } else {
        push_text(out, &text[start..]);
    }
}

fn split_emoji(text: &str, out: &mut Vec<Segment>) {
    split_runs(text, out, is_emoji, is_emoji_continuation, EMOJI);
}

fn split_digits(text: &str, out: &mut Vec<Segment>) {
    split_runs(text, out, is_digit, |_| false, NUM);
}

/// Replaces maximal non-punctuation runs that spell a relative pronoun.
/// Those runs are exactly the word tokens [`tokenize`] would produce.
fn split_pronouns(text: &str, out: &mut Vec<Segment>) {
    let mut start = 0;
    let mut run_start = 0;
    let flush = |out: &mut Vec<Segment>, start: &mut usize, rs: usize, re: usize| {
        if re > rs && is_relative_pronoun(&text[rs..re]) {
            push_text(out, &text[*start..rs]);
            out.push(Segment::Placeholder(RELATIVE));
            *start = re;
        }
    };
    for (i, c) in text.char_indices() {
        if is_punctuation(c) {
            flush(out, &mut start, run_start, i);
            run_start = i + c.len_utf8();
        }
    }
    flush(out, &mut start, run_start, text.len());
    push_text(out, &text[start..]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm(s: &str) -> String {
        normalize_tweet(s, &NormalizationConfig::default())
    }

    fn toks(s: &str) -> Vec<String> {
        tokenize(s).into_vec()
    }

    #[test]
    fn replaces_platform_artifacts() {
        assert_eq!(norm("@ali شاهد http://t.co/x 123"), "@USER شاهد URL NUM");
        assert_eq!(norm(""), "");
        assert_eq!(norm("www.example.com/a?b=1"), "URL");
        assert_eq!(norm("see:HTTPS://x.y"), "see: URL");
        assert_eq!(norm("abc123def"), "abc NUM def");
        assert_eq!(norm("٢٠٢٠ عام"), "NUM عام");
        assert_eq!(norm("حلو 😂😂👍🏽 جدا"), "حلو EMOJI جدا");
        assert_eq!(norm("👨\u{200D}👩\u{200D}👧"), "EMOJI");
    }

    #[test]
    fn newlines_become_tokens() {
        assert_eq!(norm("a\nb"), "a NEWLINE b");
        assert_eq!(norm("a\r\n\r\nb"), "a NEWLINE NEWLINE b");
        let keep = NormalizationConfig {
            replace_newlines: false,
            ..Default::default()
        };
        assert_eq!(normalize_tweet("a  \n  b", &keep), "a\nb");
    }

    #[test]
    fn mentions_follow_username_grammar() {
        assert_eq!(norm("hi @a_b9, ok"), "hi @USER , ok");
        assert_eq!(norm("@ alone"), "@ alone");
        assert_eq!(norm("@USER"), "@USER");
        // over-long handles are still consumed entirely
        assert_eq!(norm("@abcdefghijklmnopqrst"), "@USER");
    }

    #[test]
    fn hashtags_are_segmented() {
        assert_eq!(norm("#Arab_World يا"), "Arab World يا");
        assert_eq!(norm("(#ArabLeague)"), "( Arab League )");
        assert_eq!(norm("#مصر_2020"), "مصر NUM");
        let off = NormalizationConfig {
            segment_hashtags: false,
            ..Default::default()
        };
        assert_eq!(normalize_tweet("#Arab_World", &off), "#Arab_World");
    }

    #[test]
    fn relative_pronouns_only_when_enabled() {
        let s = "الولد الذي، جاء اللي";
        assert_eq!(norm(s), s);
        let cfg = NormalizationConfig::weak_labeling();
        assert_eq!(normalize_tweet(s, &cfg), "الولد RELATIVE ، جاء RELATIVE");
        assert_eq!(normalize_tweet("الذي5", &cfg), "RELATIVE NUM");
        // longer words containing a pronoun are left alone
        assert_eq!(normalize_tweet("واللي", &cfg), "واللي");
    }

    #[test]
    fn hashtags_are_extracted_raw() {
        assert_eq!(extract_hashtags("a #Arab_World, #مصر_2020 # x#y"), vec!["#Arab_World", "#مصر_2020", "#y"]);
        assert!(extract_hashtags("no tags #").is_empty());
    }

    #[test]
    fn hashtag_segmentation_rules() {
        assert_eq!(segment_hashtag("#Arab_World"), vec!["Arab", "World"]);
        assert_eq!(segment_hashtag("#ArabLeague"), vec!["Arab", "League"]);
        assert_eq!(segment_hashtag("#x"), vec!["x"]);
        assert_eq!(segment_hashtag("#NASA"), vec!["NASA"]);
        assert_eq!(segment_hashtag("#iPhone_مصر"), vec!["i", "Phone", "مصر"]);
        assert_eq!(segment_hashtag("#العالم_العربي"), vec!["العالم", "العربي"]);
        assert_eq!(segment_hashtag("plain"), vec!["plain"]);
        assert_eq!(segment_hashtag("#__"), vec!["#__"]);
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(toks("مرحبا، أهلا"), vec!["مرحبا", "،", "أهلا"]);
        assert_eq!(toks("@USER hi!"), vec!["@USER", "hi", "!"]);
        assert!(toks("").is_empty());
        assert_eq!(toks("URL NUM EMOJI NEWLINE RELATIVE"), vec!["URL", "NUM", "EMOJI", "NEWLINE", "RELATIVE"]);
        assert_eq!(toks("@USER,@USERx"), vec!["@USER", ",", "@", "USERx"]);
        assert_eq!(toks("؟؟ok"), vec!["؟", "؟", "ok"]);
    }

    fn tweet_strategy() -> impl Strategy<Value = String> {
        let atoms = prop::sample::select(vec![
            "@", "#", "_", "a", "B", "c", "Z", "1", "٣", "0", " ", "  ", "\n", "\r\n", "\t",
            "http://", "https://", "www.", "WWW.", "😀", "👍🏽", "\u{200D}", "\u{FE0F}", "الذي",
            "اللي", "التى", "ب", "ت", "،", ".", "!", ":", "/", "@USER", "URL", "NUM", "EMOJI",
            "ة", "\u{064E}", "x_y", "Ab",
        ]);
        prop::collection::vec(atoms, 0..24).prop_map(|v| v.concat())
    }

    fn config_strategy() -> impl Strategy<Value = NormalizationConfig> {
        prop::array::uniform7(any::<bool>()).prop_map(|f| NormalizationConfig {
            replace_mentions: f[0],
            replace_urls: f[1],
            replace_digits: f[2],
            replace_emoji: f[3],
            replace_newlines: f[4],
            replace_relative_pronouns: f[5],
            segment_hashtags: f[6],
        })
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in tweet_strategy(), cfg in config_strategy()) {
            let once = normalize_tweet(&s, &cfg);
            prop_assert_eq!(normalize_tweet(&once, &cfg), once);
        }

        #[test]
        fn normalize_is_idempotent_on_arbitrary_text(s in "\\PC{0,40}", cfg in config_strategy()) {
            let once = normalize_tweet(&s, &cfg);
            prop_assert_eq!(normalize_tweet(&once, &cfg), once);
        }

        #[test]
        fn no_emoji_or_url_survives(s in tweet_strategy()) {
            let out = norm(&s);
            prop_assert!(!out.chars().any(is_emoji));
            prop_assert!(find_url(&out).is_none());
        }

        #[test]
        fn tokenize_is_stable(s in tweet_strategy()) {
            let t = tokenize(&s);
            prop_assert!(t.iter().all(|w| !w.is_empty() && !w.chars().any(char::is_whitespace)));
            prop_assert_eq!(tokenize(&t.join()), t);
        }

        #[test]
        fn hashtag_segments_are_clean(body in "[a-zA-Z_ب-ي]{0,12}[a-zA-Zب-ي][a-zA-Z_ب-ي]{0,12}") {
            let parts = segment_hashtag(&format!("#{body}"));
            prop_assert!(!parts.is_empty());
            prop_assert!(parts.iter().all(|p| !p.is_empty() && !p.contains('_') && !p.contains('#')));
        }
    }
}
