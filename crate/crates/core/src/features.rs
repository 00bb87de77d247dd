//! Model inputs: the 46-value tabular vector and the 100-slot token sequence.
//!
//! Tabular layout: emotion `[0, 12)`, topic `[12, 37)`, user `[37, 46)`.
//!
//! Feature CSV header: `message_id,label`, then the 46 tabular names, then
//! `seq_000` … `seq_099`. Labels are written by name.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::affect::EMOTION_NAMES;
use crate::corpus::{BullyingHistory, Ethnicity, Gender, InternetUse, Race, UserProfile};
use crate::embeddings::{EmbeddingMatrix, PAD};
use crate::labeler::SeverityLabel;
use crate::textprep::TokenizedText;
use crate::{Error, Result};

pub const EMOTION_DIM: usize = 12;
pub const TOPIC_DIM: usize = 25;
pub const USER_DIM: usize = 9;
pub const TABULAR_DIM: usize = EMOTION_DIM + TOPIC_DIM + USER_DIM;
pub const SEQ_LEN: usize = 100;

pub const USER_NAMES: [&str; USER_DIM] = [
    "age_norm",
    "gender_female",
    "race_nonwhite",
    "ethnicity_hispanic",
    "bullying_history_recency",
    "internet_use_level",
    "internalizing",
    "disciplinary",
    "substance",
];

pub fn tabular_names() -> Vec<String> {
    EMOTION_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain((0..TOPIC_DIM).map(|i| format!("topic_{i:02}")))
        .chain(USER_NAMES.iter().map(|s| s.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub tabular: Vec<f64>,
    pub sequence: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub label: SeverityLabel,
    pub features: FeatureVector,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn encode_user(p: &UserProfile) -> [f64; USER_DIM] {
    let recency = match p.bullying_history {
        BullyingHistory::None => 0.0,
        BullyingHistory::MoreThanTwoMonths => 1.0 / 3.0,
        BullyingHistory::OneToTwoMonths => 2.0 / 3.0,
        BullyingHistory::Within1Month => 1.0,
    };
    let internet = match p.internet_use {
        InternetUse::Lt1hWeekly => 0.0,
        InternetUse::Lt4hDaily => 1.0 / 3.0,
        InternetUse::FourToSixHDaily => 2.0 / 3.0,
        InternetUse::Gt6hDaily => 1.0,
    };
    let internalizing = [p.depression, p.anxiety, p.self_esteem_issues]
        .iter()
        .filter(|b| **b)
        .count() as f64
        / 3.0;
    [
        (f64::from(p.age) / 18.0).clamp(0.0, 1.0),
        flag(p.gender == Gender::Female),
        flag(p.race == Race::Nonwhite),
        flag(p.ethnicity == Ethnicity::HispanicLatino),
        recency,
        internet,
        internalizing,
        flag(p.disciplinary_issues),
        flag(p.substance_abuse),
    ]
}

/// Token ids, post-truncated to the first 100 and post-padded with PAD.
pub fn encode_sequence(tokens: &TokenizedText, emb: &EmbeddingMatrix) -> Vec<u32> {
    let mut ids: Vec<u32> = tokens
        .tokens
        .iter()
        .take(SEQ_LEN)
        .map(|t| emb.id(t) as u32)
        .collect();
    ids.resize(SEQ_LEN, PAD as u32);
    ids
}

fn check(block: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { block, expected, got })
    }
}

pub fn assemble(emotion: &[f64], topic: &[f64], user: &[f64], seq: &[u32]) -> Result<FeatureVector> {
    check("emotion", EMOTION_DIM, emotion.len())?;
    check("topic", TOPIC_DIM, topic.len())?;
    check("user", USER_DIM, user.len())?;
    check("sequence", SEQ_LEN, seq.len())?;
    Ok(FeatureVector {
        tabular: [emotion, topic, user].concat(),
        sequence: seq.to_vec(),
    })
}

impl FeatureVector {
    pub fn emotion(&self) -> &[f64] {
        &self.tabular[..EMOTION_DIM]
    }

    pub fn topic(&self) -> &[f64] {
        &self.tabular[EMOTION_DIM..EMOTION_DIM + TOPIC_DIM]
    }

    pub fn user(&self) -> &[f64] {
        &self.tabular[EMOTION_DIM + TOPIC_DIM..]
    }
}

pub fn write_csv<W: Write>(out: W, examples: &[LabeledExample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["message_id".to_string(), "label".to_string()];
    header.extend(tabular_names());
    header.extend((0..SEQ_LEN).map(|i| format!("seq_{i:03}")));
    w.write_record(&header)?;
    for e in examples {
        let mut row = vec![e.id.clone(), e.label.as_str().to_string()];
        row.extend(e.features.tabular.iter().map(|x| x.to_string()));
        row.extend(e.features.sequence.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R, source: &std::path::Path) -> Result<Vec<LabeledExample>> {
    let mut r = csv::Reader::from_reader(input);
    let width = 2 + TABULAR_DIM + SEQ_LEN;
    if r.headers()?.len() != width {
        return Err(Error::Parse {
            path: source.into(),
            line: 1,
            message: format!("expected {width} columns"),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| Error::Parse {
            path: source.into(),
            line,
            message,
        };
        if rec.len() != width {
            return Err(bad(format!("expected {width} columns, found {}", rec.len())));
        }
        let label = SeverityLabel::parse(&rec[1]).ok_or_else(|| bad(format!("unknown label {:?}", &rec[1])))?;
        let tabular = (2..2 + TABULAR_DIM)
            .map(|j| rec[j].parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let sequence = (2 + TABULAR_DIM..width)
            .map(|j| rec[j].parse::<u32>().map_err(|e| bad(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        out.push(LabeledExample {
            id: rec[0].to_string(),
            label,
            features: FeatureVector { tabular, sequence },
        });
    }
    Ok(out)
}
