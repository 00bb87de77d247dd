//! Text cleaning, normalization, tokenization, stop-word removal and stemming.
//!
//! Data files (bundled, UTF-8):
//!
//! * `stopwords.txt`: one lowercase entry per line, `#` starts a comment line.
//! * `contractions.tsv`: `contraction<TAB>expansion`; a leading `-` marks a
//!   suffix rule (`-n't<TAB> not`), other rows match whole words.

pub mod porter;

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use porter::stem;

pub const STOPWORDS_TXT: &str = include_str!("../../data/stopwords.txt");
pub const CONTRACTIONS_TSV: &str = include_str!("../../data/contractions.tsv");

/// Upper bound on re-stemming passes; the original algorithm reaches a fixed
/// point after at most two passes on every word seen so far.
const MAX_STEM_PASSES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedText {
    pub raw: String,
    pub tokens: Vec<String>,
    /// Alphanumeric words before stop-word removal.
    pub word_count: usize,
    /// Words that contained a run of three or more identical characters.
    pub elongated: usize,
}

impl TokenizedText {
    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        TokenizedText {
            raw: tokens.join(" "),
            word_count: tokens.len(),
            elongated: 0,
            tokens,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

struct Patterns {
    html_tag: Regex,
    html_entity: Regex,
    url: Regex,
    handle: Regex,
    numeral: Regex,
    whitespace: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        html_tag: Regex::new(r"<[^<>]*>").unwrap(),
        html_entity: Regex::new(r"&(?:[A-Za-z]+|#[0-9]+);").unwrap(),
        url: Regex::new(r"(?i)\b(?:https?://|www\.)\S*").unwrap(),
        handle: Regex::new(r"@\w+").unwrap(),
        numeral: Regex::new(r"\b[0-9]+(?:[.,:/][0-9]+)*\b").unwrap(),
        whitespace: Regex::new(r"\s+").unwrap(),
    })
}

pub fn stopwords() -> &'static HashSet<String> {
    static S: OnceLock<HashSet<String>> = OnceLock::new();
    S.get_or_init(|| parse_word_list(STOPWORDS_TXT).into_iter().collect())
}

/// Parses a one-entry-per-line list, skipping blanks and `#` comments.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

struct Contractions {
    rules: Vec<(Regex, String)>,
}

fn contractions() -> &'static Contractions {
    static C: OnceLock<Contractions> = OnceLock::new();
    C.get_or_init(|| {
        let mut whole = Vec::new();
        let mut suffix = Vec::new();
        for line in CONTRACTIONS_TSV.lines() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (from, to) = line.split_once('\t').unwrap_or((line, ""));
            if let Some(suf) = from.strip_prefix('-') {
                let re = Regex::new(&format!(r"{}\b", regex::escape(suf))).unwrap();
                suffix.push((re, to.to_string()));
            } else {
                let re = Regex::new(&format!(r"\b{}\b", regex::escape(from))).unwrap();
                whole.push((re, to.to_string()));
            }
        }
        whole.extend(suffix);
        Contractions { rules: whole }
    })
}

/// Strips HTML tags and entities, URLs, user handles, standalone numerals and
/// control characters, then collapses whitespace.
pub fn clean(text: &str) -> String {
    let p = patterns();
    let s = p.html_tag.replace_all(text, " ");
    let s = p.html_entity.replace_all(&s, " ");
    let s = p.url.replace_all(&s, " ");
    let s = p.handle.replace_all(&s, " ");
    let s = p.numeral.replace_all(&s, " ");
    let s: String = s
        .chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    p.whitespace.replace_all(&s, " ").trim().to_string()
}

/// Collapses runs of three or more identical characters to two.
/// Returns the collapsed word and whether anything changed.
pub fn collapse_elongation(word: &str) -> (String, bool) {
    let mut out = String::with_capacity(word.len());
    let mut prev = None;
    let mut run = 0;
    let mut changed = false;
    for c in word.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= 2 {
            out.push(c);
        } else {
            changed = true;
        }
    }
    (out, changed)
}

fn stem_to_fixpoint(word: &str) -> String {
    let mut current = stem(word);
    for _ in 0..MAX_STEM_PASSES {
        let next = stem(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Lowercases, expands contractions and splits on anything outside `[a-z0-9]`.
/// Pure numerals are dropped.
pub fn words(text: &str) -> Vec<String> {
    let mut s = text.to_lowercase().replace(['\u{2019}', '\u{2018}', '`'], "'");
    for (re, to) in &contractions().rules {
        if re.is_match(&s) {
            s = re.replace_all(&s, to.as_str()).into_owned();
        }
    }
    s.split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
        .filter(|w| !w.is_empty() && !w.bytes().all(|b| b.is_ascii_digit()))
        .map(str::to_string)
        .collect()
}

/// clean → lowercase → split → collapse elongation → drop stop words → stem.
///
/// Stemming is repeated until the token is stable so that the output is a
/// fixed point of the whole chain; tokens that stem onto a stop word are dropped.
pub fn preprocess(text: &str) -> TokenizedText {
    let stop = stopwords();
    let raw_words = words(&clean(text));
    let mut elongated = 0;
    let mut tokens = Vec::with_capacity(raw_words.len());
    for w in &raw_words {
        let (w, changed) = collapse_elongation(w);
        if changed {
            elongated += 1;
        }
        if stop.contains(&w) {
            continue;
        }
        let s = stem_to_fixpoint(&w);
        if !s.is_empty() && !stop.contains(&s) && !s.bytes().all(|b| b.is_ascii_digit()) {
            tokens.push(s);
        }
    }
    TokenizedText {
        raw: text.to_string(),
        tokens,
        word_count: raw_words.len(),
        elongated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clean_examples() {
        let c = clean("lmao how tf is this a costume for $30 u can b a dumbass bitch https://t.co/42jCKs1q7m");
        assert!(!c.contains("http") && !c.contains("t.co"));
        assert!(c.ends_with("dumbass bitch"));
        assert!(!c.contains("30"));
        assert_eq!(clean(""), "");
        assert_eq!(clean("<b>hi</b>  123"), "hi");
        assert_eq!(clean("hey @mino\tlook &amp; see\u{7}"), "hey look see");
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(preprocess("TF???? EAT SOMETHING!!!!!!!!!!!!!!!").tokens, ["tf", "eat", "someth"]);
        assert!(preprocess("the is and").tokens.is_empty());
        assert_eq!(preprocess("running runner").tokens, ["run", "runner"]);
    }

    #[test]
    fn contractions_and_elongation() {
        let t = preprocess("I don't care, sooooo boring");
        assert_eq!(t.tokens, ["care", "soo", "bore"]);
        assert_eq!(t.elongated, 1);
        assert_eq!(t.word_count, 6);
        assert_eq!(collapse_elongation("soooo"), ("soo".to_string(), true));
        assert_eq!(collapse_elongation("see"), ("see".to_string(), false));
    }

    #[test]
    fn unicode_and_curly_apostrophes() {
        let t = preprocess("äöñNot all men-äöñ BITCH shut up !! I\u{2019}m fine");
        assert_eq!(t.tokens, ["men", "bitch", "shut", "fine"]);
    }

    #[test]
    fn stopword_list_loaded() {
        let s = stopwords();
        assert_eq!(s.len(), 179);
        for w in ["the", "is", "and"] {
            assert!(s.contains(w));
        }
    }

    fn word_strategy() -> impl Strategy<Value = String> {
        prop::sample::select(vec![
            "agreed", "running", "THE", "soooo", "cats", "abilities", "generalizations",
            "conflated", "ands", "http://x.io/a", "@handle", "123", "x2", "don't", "Bitch!!",
            "<i>", "über", "happy", "hopping", "ties", "yeah", "skinny", "ooo", "e",
        ])
        .prop_map(str::to_string)
    }

    proptest! {
        #[test]
        fn idempotent_on_joined_output(words in prop::collection::vec(word_strategy(), 0..12),
                                       junk in "[a-zA-Z0-9 !?.,'<>@]{0,40}") {
            let text = format!("{} {}", words.join(" "), junk);
            let once = preprocess(&text);
            let twice = preprocess(&once.tokens.join(" "));
            prop_assert_eq!(&once.tokens, &twice.tokens);
        }

        #[test]
        fn tokens_are_clean(text in "\\PC{0,80}") {
            let re = Regex::new(r"^[a-z0-9']+$").unwrap();
            for t in preprocess(&text).tokens {
                prop_assert!(re.is_match(&t), "{t:?}");
                prop_assert!(!stopwords().contains(&t));
                prop_assert!(!t.bytes().all(|b| b.is_ascii_digit()));
            }
        }
    }
}
