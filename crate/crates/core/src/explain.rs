//! Local token attributions (LIME-style) and exact grouped Shapley values
//! over the tabular block.
//!
//! Shapley players: the emotion block, the topic block, and each of the nine
//! user fields (11 players, 2048 coalitions). The token sequence is held at
//! the explained instance's value throughout.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingMatrix, PAD};
use crate::features::{encode_sequence, FeatureVector, EMOTION_DIM, TOPIC_DIM, USER_NAMES};
use crate::labeler::SeverityLabel;
use crate::net::Predictor;
use crate::textprep::TokenizedText;
use crate::{Error, Result};

pub const N_PLAYERS: usize = 2 + USER_NAMES.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lime,
    Shapley,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: Method,
    pub target: String,
    /// Model output for the target class on the unperturbed instance.
    pub prediction: f64,
    /// Sorted by |weight| descending.
    pub attributions: Vec<Attribution>,
    /// Weighted R² of the local surrogate (LIME).
    pub fidelity: Option<f64>,
    /// f(background) for the target class (Shapley).
    pub baseline_value: Option<f64>,
    /// f(background tabular, x's tokens) − f(background tabular, no tokens) (Shapley).
    pub comment_block: Option<f64>,
}

/// Display name of a class index for a model with `n_classes` outputs.
pub fn class_name(n_classes: usize, idx: usize) -> String {
    if n_classes == 2 {
        ["not_bullying", "bullying"][idx.min(1)].to_string()
    } else {
        SeverityLabel::from_index(idx).map_or_else(|| format!("class_{idx}"), |l| l.as_str().to_string())
    }
}

fn sort_attributions(a: &mut [Attribution]) {
    a.sort_by(|x, y| y.weight.abs().total_cmp(&x.weight.abs()).then_with(|| x.name.cmp(&y.name)));
}

impl Explanation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("explanations serialize")
    }

    pub fn to_text(&self) -> String {
        let method = match self.method {
            Method::Lime => "lime",
            Method::Shapley => "shapley",
        };
        let mut s = format!("method: {method}\ntarget: {}\nprediction: {:.6}\n", self.target, self.prediction);
        if let Some(r2) = self.fidelity {
            s.push_str(&format!("fidelity_r2: {r2:.6}\n"));
        }
        if let Some(b) = self.baseline_value {
            s.push_str(&format!("baseline: {b:.6}\n"));
        }
        if let Some(c) = self.comment_block {
            s.push_str(&format!("comment block: {c:+.6}\n"));
        }
        let width = self.attributions.iter().map(|a| a.name.chars().count()).max().unwrap_or(0).max(7);
        s.push_str(&format!("  {:<width$}  {:>12}\n", "feature", "weight"));
        for a in &self.attributions {
            s.push_str(&format!("  {:<width$}  {:>+12.6}\n", a.name, a.weight));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub ridge: f64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig { n_samples: 500, kernel_width: 0.25, ridge: 1.0 }
    }
}

/// LIME over distinct tokens with an arbitrary scoring function that maps a
/// kept-token list to the target-class probability.
///
/// The first sample keeps every token; the rest keep each distinct token
/// with probability 0.5. Samples are weighted by
/// `exp(−d²/width²)` with `d` the cosine distance to the all-ones mask, and a
/// weighted ridge regression on centered data gives the token weights.
pub fn lime_with<F>(text: &TokenizedText, target: &str, cfg: &LimeConfig, seed: u64, mut score: F) -> Result<Explanation>
where
    F: FnMut(&[String]) -> Result<f64>,
{
    if text.tokens.is_empty() {
        return Err(Error::InvalidInput("cannot explain an empty text".into()));
    }
    if cfg.n_samples < 2 {
        return Err(Error::Config("LIME needs at least two samples".into()));
    }
    let names: Vec<String> = text.tokens.iter().collect::<BTreeSet<_>>().into_iter().cloned().collect();
    let d = names.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n_samples;
    let mut x = DMatrix::<f64>::zeros(n, d);
    let mut y = DVector::<f64>::zeros(n);
    let mut w = DVector::<f64>::zeros(n);
    for s in 0..n {
        let mask: Vec<bool> = if s == 0 { vec![true; d] } else { (0..d).map(|_| rng.gen_bool(0.5)).collect() };
        let kept: Vec<String> = text
            .tokens
            .iter()
            .filter(|t| mask[names.binary_search(t).expect("token is in its own vocabulary")])
            .cloned()
            .collect();
        let on = mask.iter().filter(|b| **b).count();
        let dist = if on == 0 { 1.0 } else { 1.0 - (on as f64 / d as f64).sqrt() };
        for (j, m) in mask.iter().enumerate() {
            x[(s, j)] = f64::from(u8::from(*m));
        }
        y[s] = score(&kept)?;
        w[s] = (-(dist * dist) / (cfg.kernel_width * cfg.kernel_width)).exp();
    }
    let prediction = y[0];

    let wsum = w.sum();
    let xm: DVector<f64> = DVector::from_fn(d, |j, _| (0..n).map(|s| w[s] * x[(s, j)]).sum::<f64>() / wsum);
    let ym = w.dot(&y) / wsum;
    let xc = DMatrix::from_fn(n, d, |s, j| x[(s, j)] - xm[j]);
    let yc = y.map(|v| v - ym);
    let xw = DMatrix::from_fn(n, d, |s, j| xc[(s, j)] * w[s]);
    let gram = xw.transpose() * &xc + DMatrix::<f64>::identity(d, d) * cfg.ridge;
    let rhs = xw.transpose() * &yc;
    let beta = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("ridge system is not positive definite".into()))?
        .solve(&rhs);

    let fitted = &xc * &beta;
    let ss_res: f64 = (0..n).map(|s| w[s] * (yc[s] - fitted[s]).powi(2)).sum();
    let ss_tot: f64 = (0..n).map(|s| w[s] * yc[s] * yc[s]).sum();
    let fidelity = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        log::warn!("predictor is constant over all LIME samples; attributions are zero");
        1.0
    };
    let mut attributions: Vec<Attribution> = names
        .into_iter()
        .zip(beta.iter())
        .map(|(name, &weight)| Attribution { name, weight })
        .collect();
    sort_attributions(&mut attributions);
    Ok(Explanation {
        method: Method::Lime,
        target: target.to_string(),
        prediction,
        attributions,
        fidelity: Some(fidelity),
        baseline_value: None,
        comment_block: None,
    })
}

/// LIME for a model: masked texts are re-encoded with `emb` while the
/// tabular block stays at `tabular`.
pub fn lime_explain<P: Predictor + ?Sized>(
    model: &P,
    emb: &EmbeddingMatrix,
    text: &TokenizedText,
    tabular: &[f64],
    target: usize,
    cfg: &LimeConfig,
    seed: u64,
) -> Result<Explanation> {
    let name = class_name(model.n_classes(), target);
    lime_with(text, &name, cfg, seed, |kept| {
        let x = FeatureVector {
            tabular: tabular.to_vec(),
            sequence: encode_sequence(&TokenizedText::from_tokens(kept.iter().cloned()), emb),
        };
        Ok(model.predict(&x)?[target])
    })
}

pub fn player_names() -> Vec<String> {
    ["emotion", "topic"]
        .iter()
        .chain(USER_NAMES.iter())
        .map(|s| s.to_string())
        .collect()
}

/// Tabular index range owned by each player.
fn player_ranges() -> Vec<std::ops::Range<usize>> {
    let mut r = vec![0..EMOTION_DIM, EMOTION_DIM..EMOTION_DIM + TOPIC_DIM];
    let base = EMOTION_DIM + TOPIC_DIM;
    r.extend((0..USER_NAMES.len()).map(|i| base + i..base + i + 1));
    r
}

pub fn mean_tabular(xs: &[FeatureVector]) -> Vec<f64> {
    let Some(first) = xs.first() else {
        return Vec::new();
    };
    let mut m = vec![0.0; first.tabular.len()];
    for x in xs {
        for (a, b) in m.iter_mut().zip(&x.tabular) {
            *a += b;
        }
    }
    m.iter_mut().for_each(|v| *v /= xs.len() as f64);
    m
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Exact Shapley values of the 11 tabular players for class `target`.
pub fn shapley_tabular<P: Predictor + ?Sized>(
    model: &P,
    x: &FeatureVector,
    background: &[f64],
    target: usize,
) -> Result<Explanation> {
    if background.len() != x.tabular.len() {
        return Err(Error::Dimension { block: "background", expected: x.tabular.len(), got: background.len() });
    }
    let ranges = player_ranges();
    let n = ranges.len();
    let mut probe = FeatureVector { tabular: background.to_vec(), sequence: x.sequence.clone() };
    let mut value = vec![0.0; 1 << n];
    for (mask, v) in value.iter_mut().enumerate() {
        for (p, r) in ranges.iter().enumerate() {
            let src = if mask >> p & 1 == 1 { &x.tabular } else { background };
            probe.tabular[r.clone()].copy_from_slice(&src[r.clone()]);
        }
        *v = model.predict(&probe)?[target];
    }
    let weights: Vec<f64> = (0..n).map(|s| factorial(s) * factorial(n - s - 1) / factorial(n)).collect();
    let mut attributions = Vec::with_capacity(n);
    for (p, name) in player_names().into_iter().enumerate() {
        let bit = 1usize << p;
        let mut terms: Vec<f64> = (0..1usize << n)
            .filter(|m| m & bit == 0)
            .map(|m| weights[m.count_ones() as usize] * (value[m | bit] - value[m]))
            .collect();
        // Summing in sorted order makes players with equal contributions
        // receive bit-identical values.
        terms.sort_by(f64::total_cmp);
        attributions.push(Attribution { name, weight: terms.iter().fold(0.0, |a, t| a + t) });
    }
    sort_attributions(&mut attributions);

    let empty = FeatureVector { tabular: background.to_vec(), sequence: vec![PAD as u32; x.sequence.len()] };
    let comment = value[0] - model.predict(&empty)?[target];
    Ok(Explanation {
        method: Method::Shapley,
        target: class_name(model.n_classes(), target),
        prediction: value[(1 << n) - 1],
        attributions,
        fidelity: None,
        baseline_value: Some(value[0]),
        comment_block: Some(comment),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleySummary {
    pub players: Vec<String>,
    /// Dataset index of each explained instance.
    pub instances: Vec<usize>,
    /// instances × players, columns in `players` order.
    pub values: Vec<Vec<f64>>,
    /// (player, mean |φ|), most impactful first.
    pub ranking: Vec<(String, f64)>,
}

impl ShapleySummary {
    pub fn ranking_csv(&self) -> String {
        let mut s = String::from("rank,player,mean_abs_phi\n");
        for (i, (p, m)) in self.ranking.iter().enumerate() {
            s.push_str(&format!("{},{p},{m}\n", i + 1));
        }
        s
    }

    pub fn values_csv(&self) -> String {
        let mut s = String::from("instance,player,phi\n");
        for (inst, row) in self.instances.iter().zip(&self.values) {
            for (p, v) in self.players.iter().zip(row) {
                s.push_str(&format!("{inst},{p},{v}\n"));
            }
        }
        s
    }
}

/// Shapley values for a seeded sample of `sample_size` instances, ranked by
/// mean absolute value.
pub fn shapley_summary<P: Predictor + ?Sized>(
    model: &P,
    data: &[FeatureVector],
    sample_size: usize,
    target: usize,
    seed: u64,
) -> Result<ShapleySummary> {
    if sample_size < 10 || data.len() < sample_size {
        return Err(Error::InvalidInput(format!(
            "Shapley summary needs at least 10 instances (requested {sample_size}, available {})",
            data.len()
        )));
    }
    let background = mean_tabular(data);
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(sample_size);
    idx.sort_unstable();
    let players = player_names();
    let mut values = Vec::with_capacity(idx.len());
    for &i in &idx {
        let e = shapley_tabular(model, &data[i], &background, target)?;
        values.push(
            players
                .iter()
                .map(|p| e.attributions.iter().find(|a| &a.name == p).map_or(0.0, |a| a.weight))
                .collect::<Vec<f64>>(),
        );
    }
    let mut ranking: Vec<(String, f64)> = players
        .iter()
        .enumerate()
        .map(|(p, name)| (name.clone(), values.iter().map(|r| r[p].abs()).sum::<f64>() / idx.len() as f64))
        .collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ShapleySummary { players, instances: idx, values, ranking })
}
