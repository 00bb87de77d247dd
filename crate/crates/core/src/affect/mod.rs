//! Rule-based valence scoring, the polarity score, and emotion features.
//!
//! Lexicon files use one `token<TAB>valence` entry per line (UTF-8, `#`
//! comment lines). Word lists (`swear.txt`, `anger.txt`) hold one term per
//! line and are matched on the lowercase surface form or its stem.

mod emotion;

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::textprep::{parse_word_list, stem};
use crate::{Error, Result};

pub use emotion::{emotion_features, EmotionFeatures, EMOTION_NAMES};

pub const VALENCE_TSV: &str = include_str!("../../data/valence.tsv");
pub const SWEAR_TXT: &str = include_str!("../../data/swear.txt");
pub const ANGER_TXT: &str = include_str!("../../data/anger.txt");

/// Normalization constant of the compound score.
pub const ALPHA: f64 = 15.0;
pub const BOOSTER_INCREMENT: f64 = 0.293;
pub const CAPS_INCREMENT: f64 = 0.733;
pub const NEGATION_SCALAR: f64 = -0.74;
pub const EXCLAMATION_INCREMENT: f64 = 0.292;
pub const MAX_EXCLAMATIONS: usize = 3;

const NEGATIONS: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "ain't",
    "aren't", "can't", "couldn't", "daren't", "didn't", "doesn't", "dont", "hadnt", "hasnt",
    "havent", "isnt", "mightnt", "mustnt", "neither", "don't", "hadn't", "hasn't", "haven't",
    "isn't", "mightn't", "mustn't", "neednt", "needn't", "never", "none", "nope", "nor", "not",
    "nothing", "nowhere", "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent", "oughtn't",
    "shan't", "shouldn't", "uh-uh", "wasn't", "weren't", "without", "wont", "wouldnt", "won't",
    "wouldn't", "rarely", "seldom", "despite",
];

const BOOSTERS_UP: &[&str] = &[
    "absolutely", "amazingly", "awfully", "completely", "considerable", "considerably",
    "decidedly", "deeply", "effing", "enormous", "enormously", "entirely", "especially",
    "exceptional", "exceptionally", "extreme", "extremely", "fabulously", "flipping", "flippin",
    "frackin", "fracking", "fricking", "frickin", "frigging", "friggin", "fully", "fuckin",
    "fucking", "fuggin", "fugging", "greatly", "hella", "highly", "hugely", "incredible",
    "incredibly", "intensely", "major", "majorly", "more", "most", "particularly", "purely",
    "quite", "really", "remarkably", "so", "substantially", "thoroughly", "total", "totally",
    "tremendous", "tremendously", "uber", "unbelievably", "unusually", "utter", "utterly",
    "very",
];

const BOOSTERS_DOWN: &[&str] = &[
    "almost", "barely", "hardly", "kinda", "kindof", "kind-of", "less", "little", "marginal",
    "marginally", "occasional", "occasionally", "partly", "scarce", "scarcely", "slight",
    "slightly", "somewhat", "sorta", "sortof", "sort-of",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores {
    pub neg: f64,
    pub neu: f64,
    pub pos: f64,
    pub compound: f64,
}

impl SentimentScores {
    pub const NEUTRAL: SentimentScores = SentimentScores {
        neg: 0.0,
        neu: 1.0,
        pos: 0.0,
        compound: 0.0,
    };
}

/// Immutable lexicon bundle shared by the scorer and the emotion features.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub valence: HashMap<String, f64>,
    pub swear: HashSet<String>,
    pub anger: HashSet<String>,
    negations: HashSet<&'static str>,
    boosters: HashMap<&'static str, f64>,
}

/// Parses the `token<TAB>valence` format.
pub fn parse_valence(text: &str) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (token, value) = line
            .split_once('\t')
            .ok_or_else(|| Error::InvalidInput(format!("valence line {}: missing tab", i + 1)))?;
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::InvalidInput(format!("valence line {}: bad number {value:?}", i + 1))
        })?;
        out.insert(token.to_string(), value);
    }
    Ok(out)
}

/// A word list plus the stems of its entries.
fn with_stems(list: Vec<String>) -> HashSet<String> {
    let stems: Vec<String> = list.iter().map(|w| stem(w)).collect();
    list.into_iter().chain(stems).collect()
}

impl Lexicons {
    pub fn bundled() -> &'static Lexicons {
        static L: OnceLock<Lexicons> = OnceLock::new();
        L.get_or_init(|| {
            Lexicons::from_sources(VALENCE_TSV, SWEAR_TXT, ANGER_TXT)
                .expect("bundled lexicons are well-formed")
        })
    }

    pub fn from_sources(valence: &str, swear: &str, anger: &str) -> Result<Lexicons> {
        let boosters = BOOSTERS_UP
            .iter()
            .map(|w| (*w, BOOSTER_INCREMENT))
            .chain(BOOSTERS_DOWN.iter().map(|w| (*w, -BOOSTER_INCREMENT)))
            .collect();
        Ok(Lexicons {
            valence: parse_valence(valence)?,
            swear: with_stems(parse_word_list(swear)),
            anger: with_stems(parse_word_list(anger)),
            negations: NEGATIONS.iter().copied().collect(),
            boosters,
        })
    }

    pub fn is_negation(&self, lower: &str) -> bool {
        self.negations.contains(lower) || lower.contains("n't")
    }

    pub fn booster(&self, lower: &str) -> Option<f64> {
        self.boosters.get(lower).copied()
    }

    pub fn is_swear(&self, lower: &str) -> bool {
        self.swear.contains(lower) || self.swear.contains(&stem(lower))
    }

    pub fn is_anger(&self, lower: &str) -> bool {
        self.anger.contains(lower) || self.anger.contains(&stem(lower))
    }
}

fn is_all_caps(word: &str) -> bool {
    word.chars().any(char::is_alphabetic) && !word.chars().any(char::is_lowercase)
}

/// Whitespace-separated words with leading/trailing punctuation removed.
/// Punctuation-only tokens (emoticons) are kept verbatim.
pub fn surface_words(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(|w| {
            let stripped = w.trim_matches(|c: char| c.is_ascii_punctuation());
            if stripped.chars().count() <= 2 {
                w
            } else {
                stripped
            }
        })
        .collect()
}

pub fn normalize_compound(sum: f64) -> f64 {
    (sum / (sum * sum + ALPHA).sqrt()).clamp(-1.0, 1.0)
}

/// Per-word valences after the negation, booster and capitalization rules.
fn word_valences(lex: &Lexicons, words: &[&str]) -> Vec<f64> {
    let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let caps = words.iter().filter(|w| is_all_caps(w)).count();
    let cap_differential = caps > 0 && caps < words.len();

    let mut out = Vec::with_capacity(words.len());
    for i in 0..words.len() {
        if lex.booster(&lower[i]).is_some() {
            out.push(0.0);
            continue;
        }
        let Some(&base) = lex.valence.get(&lower[i]) else {
            out.push(0.0);
            continue;
        };
        let mut v = base;
        if cap_differential && is_all_caps(words[i]) {
            v += CAPS_INCREMENT * v.signum();
        }
        for distance in 1..=3usize {
            if distance > i {
                break;
            }
            let j = i - distance;
            if let Some(b) = lex.booster(&lower[j]) {
                let mut s = if v < 0.0 { -b } else { b };
                if cap_differential && is_all_caps(words[j]) {
                    s += if v > 0.0 { CAPS_INCREMENT } else { -CAPS_INCREMENT };
                }
                s *= match distance {
                    1 => 1.0,
                    2 => 0.95,
                    _ => 0.9,
                };
                v += s;
            }
            if lex.is_negation(&lower[j]) {
                v *= NEGATION_SCALAR;
            }
        }
        out.push(v);
    }
    out
}

/// Valence-lexicon sentiment with negation, booster, exclamation and
/// capitalization rules. Empty or lexicon-free text is neutral.
pub fn score_sentiment_with(lex: &Lexicons, text: &str) -> SentimentScores {
    let words = surface_words(text);
    let valences = word_valences(lex, &words);
    if valences.is_empty() {
        return SentimentScores::NEUTRAL;
    }

    let emphasis =
        text.matches('!').count().min(MAX_EXCLAMATIONS) as f64 * EXCLAMATION_INCREMENT;
    let mut sum: f64 = valences.iter().sum();
    if sum > 0.0 {
        sum += emphasis;
    } else if sum < 0.0 {
        sum -= emphasis;
    }
    let compound = normalize_compound(sum);

    let mut pos_mass = 0.0;
    let mut neg_mass = 0.0;
    let mut neutral = 0.0;
    for &v in &valences {
        if v > 0.0 {
            pos_mass += v + 1.0;
        } else if v < 0.0 {
            neg_mass += 1.0 - v;
        } else {
            neutral += 1.0;
        }
    }
    if pos_mass > neg_mass {
        pos_mass += emphasis;
    } else if pos_mass < neg_mass {
        neg_mass += emphasis;
    }
    let total = pos_mass + neg_mass + neutral;
    SentimentScores {
        neg: neg_mass / total,
        neu: neutral / total,
        pos: pos_mass / total,
        compound,
    }
}

pub fn score_sentiment(text: &str) -> SentimentScores {
    score_sentiment_with(Lexicons::bundled(), text)
}

/// PS = (1 - compound) / 2, so more negative text scores higher.
pub fn polarity_score(s: &SentimentScores) -> f64 {
    polarity_from_compound(s.compound)
}

pub fn polarity_from_compound(compound: f64) -> f64 {
    ((1.0 - compound) / 2.0).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_is_neutral() {
        assert_eq!(score_sentiment(""), SentimentScores::NEUTRAL);
        assert_eq!(score_sentiment("   "), SentimentScores::NEUTRAL);
    }

    #[test]
    fn single_love() {
        assert_eq!(Lexicons::bundled().valence["love"], 3.2);
        let s = score_sentiment("love");
        let expected = 3.2 / (3.2f64 * 3.2 + 15.0).sqrt();
        assert!((s.compound - expected).abs() < 1e-12);
        assert!((s.compound - 0.637).abs() < 1e-3);
    }

    #[test]
    fn negation_flips() {
        let s = score_sentiment("not love");
        assert!(s.compound < 0.0);
        let expected = normalize_compound(3.2 * NEGATION_SCALAR);
        assert!((s.compound - expected).abs() < 1e-12);
        // negator three words back still applies
        assert!(score_sentiment("never did i love").compound < 0.0);
    }

    #[test]
    fn booster_and_exclamation_and_caps() {
        let plain = score_sentiment("i love it").compound;
        let boosted = score_sentiment("i really love it").compound;
        assert!((boosted - normalize_compound(3.2 + BOOSTER_INCREMENT)).abs() < 1e-12);
        let excl = score_sentiment("i love it!!!!!!").compound;
        assert!(
            (excl - normalize_compound(3.2 + 3.0 * EXCLAMATION_INCREMENT)).abs() < 1e-12,
            "exclamations cap at three"
        );
        let caps = score_sentiment("i LOVE it").compound;
        assert!((caps - normalize_compound(3.2 + CAPS_INCREMENT)).abs() < 1e-12);
        // all-caps text has no differential
        assert!((score_sentiment("I LOVE IT").compound - plain).abs() < 1e-12);
        assert!(boosted > plain);
    }

    #[test]
    fn proportions_follow_mass() {
        let s = score_sentiment("love the day");
        // love: 3.2 + 1 positive mass, "the" and "day" neutral
        assert!((s.pos - 4.2 / 6.2).abs() < 1e-12);
        assert!((s.neu - 2.0 / 6.2).abs() < 1e-12);
        assert_eq!(s.neg, 0.0);
    }

    #[test]
    fn polarity_endpoints() {
        assert_eq!(polarity_from_compound(-1.0), 1.0);
        assert_eq!(polarity_from_compound(0.0), 0.5);
        assert_eq!(polarity_from_compound(1.0), 0.0);
    }

    #[test]
    fn valence_parser_errors() {
        assert!(parse_valence("good 1.0").is_err());
        assert!(parse_valence("good\tx").is_err());
        assert_eq!(parse_valence("# c\ngood\t1.5\n").unwrap()["good"], 1.5);
    }

    fn negative_words() -> Vec<String> {
        let mut v: Vec<String> = Lexicons::bundled()
            .valence
            .iter()
            .filter(|(w, v)| {
                **v < 0.0
                    && w.chars().all(|c| c.is_ascii_lowercase())
                    && w.len() > 2
                    && !Lexicons::bundled().is_negation(w)
                    && Lexicons::bundled().booster(w).is_none()
            })
            .map(|(w, _)| w.clone())
            .collect();
        v.sort();
        v
    }

    fn plain_words() -> Vec<String> {
        let lex = Lexicons::bundled();
        let mut v: Vec<String> = lex
            .valence
            .keys()
            .filter(|w| w.chars().all(|c| c.is_ascii_lowercase()) && w.len() > 2)
            .filter(|w| !lex.is_negation(w) && lex.booster(w).is_none())
            .cloned()
            .collect();
        v.extend(["day", "table", "walk", "blue"].map(String::from));
        v.sort();
        v
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn proportions_sum_to_one(text in "\\PC{0,60}") {
            let s = score_sentiment(&text);
            prop_assert!((s.neg + s.neu + s.pos - 1.0).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&s.compound));
            prop_assert!(s.neg >= 0.0 && s.neu >= 0.0 && s.pos >= 0.0);
        }
    }

    proptest! {
        #[test]
        fn adding_negative_word_never_raises_compound(
            base in prop::collection::vec(prop::sample::select(plain_words()), 0..8),
            neg in prop::sample::select(negative_words()),
            at in 0usize..9,
            bangs in 0usize..5,
        ) {
            let mut words = base.clone();
            let pos = at.min(words.len());
            let before = format!("{}{}", words.join(" "), "!".repeat(bangs));
            words.insert(pos, neg);
            let after = format!("{}{}", words.join(" "), "!".repeat(bangs));
            prop_assert!(score_sentiment(&after).compound <= score_sentiment(&before).compound + 1e-12);
        }

        #[test]
        fn polarity_affine_symmetry(c in -1.0f64..=1.0) {
            prop_assert!((polarity_from_compound(c) + polarity_from_compound(-c) - 1.0).abs() < 1e-12);
        }
    }
}
