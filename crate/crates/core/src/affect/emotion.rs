use serde::{Deserialize, Serialize};

use super::{score_sentiment_with, Lexicons};
use crate::textprep::{clean, words, TokenizedText};

pub const EMOTION_NAMES: [&str; 12] = [
    "sent_neg",
    "sent_neu",
    "sent_pos",
    "sent_compound",
    "frac_negative_lex",
    "frac_positive_lex",
    "frac_swear",
    "frac_anger",
    "neg_word_density",
    "exclamation_density",
    "uppercase_ratio",
    "elongation_ratio",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionFeatures {
    pub sent_neg: f64,
    pub sent_neu: f64,
    pub sent_pos: f64,
    pub sent_compound: f64,
    pub frac_negative_lex: f64,
    pub frac_positive_lex: f64,
    pub frac_swear: f64,
    pub frac_anger: f64,
    pub neg_word_density: f64,
    pub exclamation_density: f64,
    pub uppercase_ratio: f64,
    pub elongation_ratio: f64,
}

impl EmotionFeatures {
    pub const NEUTRAL: EmotionFeatures = EmotionFeatures {
        sent_neg: 0.0,
        sent_neu: 1.0,
        sent_pos: 0.0,
        sent_compound: 0.0,
        frac_negative_lex: 0.0,
        frac_positive_lex: 0.0,
        frac_swear: 0.0,
        frac_anger: 0.0,
        neg_word_density: 0.0,
        exclamation_density: 0.0,
        uppercase_ratio: 0.0,
        elongation_ratio: 0.0,
    };

    pub fn to_array(&self) -> [f64; 12] {
        [
            self.sent_neg,
            self.sent_neu,
            self.sent_pos,
            self.sent_compound,
            self.frac_negative_lex,
            self.frac_positive_lex,
            self.frac_swear,
            self.frac_anger,
            self.neg_word_density,
            self.exclamation_density,
            self.uppercase_ratio,
            self.elongation_ratio,
        ]
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Sentence-level scores, word-level lexicon fractions and surface counts.
/// Word-level fractions are taken over the lowercase words before stop-word
/// removal; `tokens` supplies the elongation count.
pub fn emotion_features(text: &str, tokens: &TokenizedText) -> EmotionFeatures {
    if text.trim().is_empty() {
        return EmotionFeatures::NEUTRAL;
    }
    let lex = Lexicons::bundled();
    let s = score_sentiment_with(lex, text);
    let ws = words(&clean(text));
    let n = ws.len();
    let count = |f: &dyn Fn(&str) -> bool| ws.iter().filter(|w| f(w)).count();

    let non_space = text.chars().filter(|c| !c.is_whitespace()).count();
    let letters = text.chars().filter(|c| c.is_alphabetic()).count();
    let upper = text.chars().filter(|c| c.is_uppercase()).count();

    EmotionFeatures {
        sent_neg: s.neg,
        sent_neu: s.neu,
        sent_pos: s.pos,
        sent_compound: s.compound,
        frac_negative_lex: ratio(count(&|w| lex.valence.get(w).is_some_and(|v| *v < 0.0)), n),
        frac_positive_lex: ratio(count(&|w| lex.valence.get(w).is_some_and(|v| *v > 0.0)), n),
        frac_swear: ratio(count(&|w| lex.is_swear(w)), n),
        frac_anger: ratio(count(&|w| lex.is_anger(w)), n),
        neg_word_density: ratio(count(&|w| lex.is_negation(w)), n),
        exclamation_density: ratio(text.matches('!').count(), non_space),
        uppercase_ratio: ratio(upper, letters).min(1.0),
        elongation_ratio: ratio(tokens.elongated, tokens.word_count).min(1.0),
    }
}
