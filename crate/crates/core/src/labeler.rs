//! Total bullying score, min-max intensity and three-way severity labels.
//!
//! `S_total = PS + SS + VF`; `BI = (S_total − min) / (max − min)` over the
//! calibration corpus; BI falls into half-open thirds:
//! `[0, 1/3)` not bullying, `[1/3, 2/3)` mild, `[2/3, 1]` severe.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::affect::{polarity_score, score_sentiment};
use crate::corpus::{UserProfile, UserRecord};
use crate::semantics::{
    build_lsi, corpus_max, expand_keywords, semantic_score, KeywordSet, DEFAULT_RANK, DEFAULT_TAU,
};
use crate::textprep::{preprocess, TokenizedText};
use crate::vulnerability::{vf, VulnerabilityWeights};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityLabel {
    NotBullying,
    MildBullying,
    SevereBullying,
}

impl SeverityLabel {
    pub const ALL: [SeverityLabel; 3] = [
        SeverityLabel::NotBullying,
        SeverityLabel::MildBullying,
        SeverityLabel::SevereBullying,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<SeverityLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeverityLabel::NotBullying => "not_bullying",
            SeverityLabel::MildBullying => "mild_bullying",
            SeverityLabel::SevereBullying => "severe_bullying",
        }
    }

    pub fn parse(s: &str) -> Option<SeverityLabel> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }

    /// Mild and severe merge into one "bullying" class.
    pub fn is_bullying(self) -> bool {
        self != SeverityLabel::NotBullying
    }
}

impl fmt::Display for SeverityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub ps: f64,
    pub ss: f64,
    pub vf: f64,
    pub s_total: f64,
    pub bi: f64,
    pub label: SeverityLabel,
}

impl ScoreBreakdown {
    /// The 0–100 bullying rank shown in reports.
    pub fn rank(&self) -> u32 {
        (self.bi * 100.0).round() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: f64,
    pub max: f64,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {v} outside [0, 1]")))
    }
}

pub fn total_score(ps: f64, ss: f64, vf: f64) -> Result<f64> {
    check_unit("PS", ps)?;
    check_unit("SS", ss)?;
    check_unit("VF", vf)?;
    Ok(ps + ss + vf)
}

pub fn fit_norm(scores: &[f64]) -> Result<NormStats> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("cannot fit normalization on no scores".into()));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(NormStats { min, max })
}

/// Min-max intensity, clipped to [0, 1]; 0 when the range is empty.
pub fn intensity(s_total: f64, stats: &NormStats) -> f64 {
    if stats.max <= stats.min {
        return 0.0;
    }
    ((s_total - stats.min) / (stats.max - stats.min)).clamp(0.0, 1.0)
}

pub fn classify(bi: f64) -> Result<SeverityLabel> {
    check_unit("BI", bi)?;
    Ok(if bi < 1.0 / 3.0 {
        SeverityLabel::NotBullying
    } else if bi < 2.0 / 3.0 {
        SeverityLabel::MildBullying
    } else {
        SeverityLabel::SevereBullying
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelerConfig {
    pub weights: VulnerabilityWeights,
    pub lsi_rank: usize,
    pub tau: f64,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        LabelerConfig {
            weights: VulnerabilityWeights::default(),
            lsi_rank: DEFAULT_RANK,
            tau: DEFAULT_TAU,
        }
    }
}

/// Everything needed to score new messages the way the calibration corpus was scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeler {
    pub weights: VulnerabilityWeights,
    pub keywords: KeywordSet,
    pub corpus_max: f64,
    pub norm: NormStats,
}

impl Labeler {
    pub fn score(&self, profile: &UserProfile, text: &str, tokens: &TokenizedText) -> Result<ScoreBreakdown> {
        let ps = polarity_score(&score_sentiment(text));
        let ss = semantic_score(tokens, &self.keywords, self.corpus_max);
        let vf = vf(profile, &self.weights)?;
        let s_total = total_score(ps, ss, vf)?;
        let bi = intensity(s_total, &self.norm);
        Ok(ScoreBreakdown {
            ps,
            ss,
            vf,
            s_total,
            bi,
            label: classify(bi)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMessage {
    pub message_id: String,
    pub user_id: String,
    /// Position in the user's message list.
    pub index: usize,
    pub ps: f64,
    pub ss: f64,
    pub vf: f64,
    pub s_total: f64,
    pub bi: f64,
    pub label: SeverityLabel,
    pub rank: u32,
}

impl LabeledMessage {
    pub fn breakdown(&self) -> ScoreBreakdown {
        ScoreBreakdown {
            ps: self.ps,
            ss: self.ss,
            vf: self.vf,
            s_total: self.s_total,
            bi: self.bi,
            label: self.label,
        }
    }
}

pub fn message_id(user_id: &str, index: usize) -> String {
    format!("{user_id}/{index}")
}

/// Calibrates keywords, the hit-density maximum and the score range on
/// `records`, then labels every message. Each message is one LSI document.
pub fn label_corpus(
    records: &[UserRecord],
    seeds: &[String],
    cfg: &LabelerConfig,
) -> Result<(Labeler, Vec<LabeledMessage>)> {
    cfg.weights.validate()?;
    let tokens: Vec<Vec<TokenizedText>> = records
        .iter()
        .map(|r| r.messages.iter().map(|m| preprocess(&m.text)).collect())
        .collect();
    let docs: Vec<TokenizedText> = tokens.iter().flatten().cloned().collect();
    let lsi = build_lsi(&docs, cfg.lsi_rank)?;
    let keywords = expand_keywords(&lsi, seeds, cfg.tau)?;
    let cmax = corpus_max(tokens.iter().flatten(), &keywords);

    let mut partial = Vec::new();
    for (r, ts) in records.iter().zip(&tokens) {
        let vf = vf(&r.profile, &cfg.weights)?;
        for (i, (m, t)) in r.messages.iter().zip(ts).enumerate() {
            let ps = polarity_score(&score_sentiment(&m.text));
            let ss = semantic_score(t, &keywords, cmax);
            partial.push((r.profile.user_id.as_str(), i, ps, ss, vf, total_score(ps, ss, vf)?));
        }
    }
    let totals: Vec<f64> = partial.iter().map(|p| p.5).collect();
    let norm = fit_norm(&totals)?;

    let mut out = Vec::with_capacity(partial.len());
    for (user, i, ps, ss, vf, s_total) in partial {
        let bi = intensity(s_total, &norm);
        let label = classify(bi)?;
        out.push(LabeledMessage {
            message_id: message_id(user, i),
            user_id: user.to_string(),
            index: i,
            ps,
            ss,
            vf,
            s_total,
            bi,
            label,
            rank: (bi * 100.0).round() as u32,
        });
    }
    let labeler = Labeler {
        weights: cfg.weights,
        keywords,
        corpus_max: cmax,
        norm,
    };
    Ok((labeler, out))
}

pub fn label_counts(labels: &[LabeledMessage]) -> BTreeMap<SeverityLabel, usize> {
    let mut out: BTreeMap<SeverityLabel, usize> = SeverityLabel::ALL.iter().map(|l| (*l, 0)).collect();
    for l in labels {
        *out.entry(l.label).or_default() += 1;
    }
    out
}

pub fn to_json_lines(labels: &[LabeledMessage]) -> Result<String> {
    let mut out = String::new();
    for l in labels {
        out.push_str(&serde_json::to_string(l)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_json_lines(text: &str) -> Result<Vec<LabeledMessage>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
