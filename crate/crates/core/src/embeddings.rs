//! word2vec CBoW with negative sampling.
//!
//! Row 0 of the matrix is PAD (all zeros), row 1 is OOV (the mean of the
//! trained word vectors), words start at row 2 in sorted order.
//!
//! Binary format (`binio`, magic `CBSVEMB\0`, version 1): `dim`, `window`,
//! the word list as a counted list of strings, then all rows (PAD and OOV
//! included) row-major as a counted `f64` array.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::{Reader, Writer};
use crate::textprep::TokenizedText;
use crate::{Error, Result};

pub const PAD: usize = 0;
pub const OOV: usize = 1;
const RESERVED: usize = 2;

const MAGIC: &[u8; 8] = b"CBSVEMB\0";
const VERSION: u32 = 1;
const MIN_LR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbowConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub dim: usize,
    pub window: usize,
    /// Word → row index (≥ 2).
    pub vocabulary: BTreeMap<String, usize>,
    /// (|V| + 2) × dim, row-major.
    pub vectors: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub value: f64,
    /// Either term was missing and the OOV row stood in for it.
    pub used_oov: bool,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cumulative unigram^0.75 table for drawing negatives.
struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|c| {
                acc += (*c as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeTable { cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|c| *c <= u).min(self.cumulative.len() - 1)
    }
}

/// Trains CBoW vectors; returns the matrix and the mean loss of each epoch.
pub fn train_cbow(docs: &[TokenizedText], cfg: &CbowConfig, seed: u64) -> Result<(EmbeddingMatrix, Vec<f64>)> {
    if cfg.dim == 0 || cfg.window == 0 || cfg.epochs == 0 || cfg.lr < 0.0 {
        return Err(Error::Config("cbow needs positive dim, window and epochs".into()));
    }
    let words: Vec<String> = docs
        .iter()
        .flat_map(|d| d.tokens.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if words.is_empty() {
        return Err(Error::DegenerateCorpus("no tokens to train embeddings on".into()));
    }
    let index: BTreeMap<String, usize> = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let sentences: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.tokens.iter().map(|t| index[t]).collect())
        .collect();
    let mut counts = vec![0u64; words.len()];
    for s in &sentences {
        for &w in s {
            counts[w] += 1;
        }
    }
    let table = NegativeTable::new(&counts);

    let (n, d) = (words.len(), cfg.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w_in: Vec<f64> = (0..n * d).map(|_| (rng.gen::<f64>() - 0.5) / d as f64).collect();
    let mut w_out = vec![0.0; n * d];

    let total_steps = (cfg.epochs as u64 * counts.iter().sum::<u64>()).max(1) as f64;
    let mut step = 0u64;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut h = vec![0.0; d];
    let mut grad_h = vec![0.0; d];

    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut loss_n = 0usize;
        for s in &sentences {
            for (pos, &target) in s.iter().enumerate() {
                let lr = cfg.lr * (1.0 - step as f64 / total_steps).max(MIN_LR_FRACTION);
                step += 1;
                let lo = pos.saturating_sub(cfg.window);
                let hi = (pos + cfg.window + 1).min(s.len());
                let context: Vec<usize> = (lo..hi).filter(|&j| j != pos).map(|j| s[j]).collect();
                if context.is_empty() {
                    continue;
                }
                h.iter_mut().for_each(|x| *x = 0.0);
                for &c in &context {
                    for (hx, wx) in h.iter_mut().zip(&w_in[c * d..(c + 1) * d]) {
                        *hx += wx;
                    }
                }
                let inv = 1.0 / context.len() as f64;
                h.iter_mut().for_each(|x| *x *= inv);
                grad_h.iter_mut().for_each(|x| *x = 0.0);

                let mut loss = 0.0;
                for k in 0..=cfg.negatives {
                    let (out, label) = if k == 0 {
                        (target, 1.0)
                    } else {
                        let neg = table.draw(&mut rng);
                        if neg == target {
                            continue;
                        }
                        (neg, 0.0)
                    };
                    let row = &mut w_out[out * d..(out + 1) * d];
                    let score: f64 = row.iter().zip(&h).map(|(a, b)| a * b).sum();
                    let p = sigmoid(score);
                    loss -= if label == 1.0 { p.max(1e-300).ln() } else { (1.0 - p).max(1e-300).ln() };
                    let g = p - label;
                    for ((gh, r), hx) in grad_h.iter_mut().zip(row.iter_mut()).zip(&h) {
                        *gh += g * *r;
                        *r -= lr * g * hx;
                    }
                }
                for &c in &context {
                    for (wx, gh) in w_in[c * d..(c + 1) * d].iter_mut().zip(&grad_h) {
                        *wx -= lr * gh * inv;
                    }
                }
                loss_sum += loss;
                loss_n += 1;
            }
        }
        history.push(if loss_n == 0 { 0.0 } else { loss_sum / loss_n as f64 });
    }
    if w_in.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("embeddings"));
    }

    let mut vectors = vec![0.0; (n + RESERVED) * d];
    for i in 0..n {
        for j in 0..d {
            vectors[(OOV) * d + j] += w_in[i * d + j] / n as f64;
        }
    }
    vectors[RESERVED * d..].copy_from_slice(&w_in);
    let vocabulary = words.into_iter().enumerate().map(|(i, w)| (w, i + RESERVED)).collect();
    Ok((
        EmbeddingMatrix {
            dim: d,
            window: cfg.window,
            vocabulary,
            vectors,
        },
        history,
    ))
}

impl EmbeddingMatrix {
    pub fn rows(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn id(&self, term: &str) -> usize {
        self.vocabulary.get(term).copied().unwrap_or(OOV)
    }

    /// Words in row order (index 2 onward).
    pub fn words(&self) -> Vec<&str> {
        let mut w: Vec<(&str, usize)> = self.vocabulary.iter().map(|(t, i)| (t.as_str(), *i)).collect();
        w.sort_by_key(|(_, i)| *i);
        w.into_iter().map(|(t, _)| t).collect()
    }

    pub fn similarity(&self, a: &str, b: &str) -> Similarity {
        let (ia, ib) = (self.id(a), self.id(b));
        Similarity {
            value: crate::semantics::cosine(self.row(ia), self.row(ib)),
            used_oov: ia == OOV || ib == OOV,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.usize(self.dim);
        w.usize(self.window);
        let words = self.words();
        w.usize(words.len());
        for t in words {
            w.str(t);
        }
        w.f64s(&self.vectors);
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<EmbeddingMatrix> {
        let (mut r, version) = Reader::open(data, MAGIC)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported embedding version {version}")));
        }
        let dim = r.usize()?;
        let window = r.usize()?;
        let n = r.usize()?;
        let words = (0..n).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let vectors = r.f64s()?;
        r.expect_end()?;
        if dim == 0 || vectors.len() != (n + RESERVED) * dim {
            return Err(Error::Format("embedding matrix has the wrong size".into()));
        }
        if vectors[..dim].iter().any(|x| *x != 0.0) {
            return Err(Error::Format("PAD row is not zero".into()));
        }
        let vocabulary = words.into_iter().enumerate().map(|(i, w)| (w, i + RESERVED)).collect();
        Ok(EmbeddingMatrix {
            dim,
            window,
            vocabulary,
            vectors,
        })
    }

    /// One row per line: name followed by `dim` space-separated values.
    /// PAD and OOV appear as `<pad>` and `<oov>`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows(), self.dim);
        let names = ["<pad>", "<oov>"].into_iter().chain(self.words());
        for (i, name) in names.enumerate() {
            out.push_str(name);
            for x in self.row(i) {
                out.push_str(&format!(" {x:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn similarity(m: &EmbeddingMatrix, a: &str, b: &str) -> Similarity {
    m.similarity(a, b)
}
