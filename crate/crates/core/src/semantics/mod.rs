//! LSI keyword expansion from a seed lexicon and the per-message semantic score.

pub mod svd;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::textprep::{preprocess, TokenizedText};
use crate::{Error, Result};
use svd::{truncated_svd, Matrix};

pub const SEED_KEYWORDS_TXT: &str = include_str!("../../data/seed_keywords.txt");

pub const DEFAULT_RANK: usize = 50;
pub const DEFAULT_TAU: f64 = 0.4;

/// Stemmed keyword → weight in (0, 1]; seeds carry weight 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KeywordSet {
    pub entries: BTreeMap<String, f64>,
}

impl KeywordSet {
    pub fn weight(&self, term: &str) -> Option<f64> {
        self.entries.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsiModel {
    pub terms: Vec<String>,
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub singular_values: Vec<f64>,
    /// |V|×k, left singular vectors scaled by the singular values.
    pub term_vectors: Vec<Vec<f64>>,
    /// n_docs×k, right singular vectors scaled by the singular values.
    pub doc_vectors: Vec<Vec<f64>>,
    pub k: usize,
}

/// Stems the seed lexicon; entries that do not reduce to exactly one token
/// are skipped. Output is sorted and deduplicated.
pub fn parse_seed_keywords(text: &str) -> Vec<String> {
    let mut out = BTreeSet::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let t = preprocess(line);
        if t.tokens.len() == 1 {
            out.insert(t.tokens[0].clone());
        }
    }
    out.into_iter().collect()
}

pub fn bundled_seeds() -> Vec<String> {
    parse_seed_keywords(SEED_KEYWORDS_TXT)
}

fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Builds a TF-IDF term-document matrix and factors it to rank `min(k, rank)`.
/// Term vectors are the left singular vectors scaled by the singular values;
/// document vectors are the fold-in projections `Uᵀ d`.
pub fn build_lsi(docs: &[TokenizedText], k: usize) -> Result<LsiModel> {
    let terms: Vec<String> = docs
        .iter()
        .flat_map(|d| d.tokens.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if docs.len() < 2 || terms.len() < 2 {
        return Err(Error::DegenerateCorpus(format!(
            "LSI needs at least 2 documents and 2 distinct terms, got {} and {}",
            docs.len(),
            terms.len()
        )));
    }
    let vocabulary: BTreeMap<String, usize> =
        terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();

    let mut df = vec![0usize; terms.len()];
    let counts: Vec<BTreeMap<usize, f64>> = docs
        .iter()
        .map(|d| {
            let mut c = BTreeMap::new();
            for t in &d.tokens {
                *c.entry(vocabulary[t]).or_insert(0.0) += 1.0;
            }
            for i in c.keys() {
                df[*i] += 1;
            }
            c
        })
        .collect();
    let idf: Vec<f64> = df.iter().map(|&d| smoothed_idf(docs.len(), d)).collect();
    let weighted: Vec<BTreeMap<usize, f64>> = counts
        .into_iter()
        .map(|c| c.into_iter().map(|(i, n)| (i, n * idf[i])).collect())
        .collect();

    let (singular_values, term_vectors) = if docs.len() <= terms.len() {
        let mut a = Matrix::zeros(terms.len(), docs.len());
        for (j, col) in weighted.iter().enumerate() {
            for (&i, &x) in col {
                a.set(i, j, x);
            }
        }
        let s = truncated_svd(&a, k);
        let tv = (0..terms.len())
            .map(|i| (0..s.s.len()).map(|j| s.u[j][i] * s.s[j]).collect())
            .collect();
        (s.s, tv)
    } else {
        // many short documents: factor the term Gram matrix A·Aᵀ = U·Σ²·Uᵀ
        let mut gram = Matrix::zeros(terms.len(), terms.len());
        for col in &weighted {
            for (&i, &x) in col {
                for (&j, &y) in col {
                    gram.set(i, j, gram.get(i, j) + x * y);
                }
            }
        }
        let s = truncated_svd(&gram, k);
        let sigma: Vec<f64> = s.s.iter().map(|l| l.sqrt()).collect();
        let tv = (0..terms.len())
            .map(|i| (0..sigma.len()).map(|j| s.u[j][i] * sigma[j]).collect())
            .collect();
        (sigma, tv)
    };
    let k = singular_values.len();
    if k == 0 {
        return Err(Error::DegenerateCorpus("term-document matrix is zero".into()));
    }
    let mut model = LsiModel {
        terms,
        vocabulary,
        idf,
        singular_values,
        term_vectors,
        doc_vectors: Vec::new(),
        k,
    };
    model.doc_vectors = docs.iter().map(|d| model.fold_in(d)).collect();
    Ok(model)
}

impl LsiModel {
    pub fn term_vector(&self, term: &str) -> Option<&[f64]> {
        self.vocabulary.get(term).map(|&i| self.term_vectors[i].as_slice())
    }

    /// Projects a new document as `Uᵀ d`, comparable with `doc_vectors`.
    pub fn fold_in(&self, doc: &TokenizedText) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for t in &doc.tokens {
            if let Some(&i) = self.vocabulary.get(t) {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += self.idf[i] * self.term_vectors[i][j] / self.singular_values[j];
                }
            }
        }
        out
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Adds every term whose cosine to the seed centroid is at least `tau`.
pub fn expand_keywords(model: &LsiModel, seeds: &[String], tau: f64) -> Result<KeywordSet> {
    let present: Vec<&[f64]> = seeds.iter().filter_map(|s| model.term_vector(s)).collect();
    if present.is_empty() {
        return Err(Error::NoSeedInVocabulary {
            missing: seeds.to_vec(),
        });
    }
    let mut centroid = vec![0.0; model.k];
    for v in &present {
        for (c, x) in centroid.iter_mut().zip(v.iter()) {
            *c += x / present.len() as f64;
        }
    }

    let mut entries = BTreeMap::new();
    for (term, vec) in model.terms.iter().zip(&model.term_vectors) {
        let c = cosine(vec, &centroid);
        if c >= tau && c > 0.0 {
            entries.insert(term.clone(), c.min(1.0));
        }
    }
    for s in seeds {
        entries.insert(s.clone(), 1.0);
    }
    Ok(KeywordSet { entries })
}

/// Raw weighted hit density H = Σ w_t·count(t) / |tokens|.
pub fn hit_density(tokens: &TokenizedText, keys: &KeywordSet) -> f64 {
    if tokens.tokens.is_empty() {
        return 0.0;
    }
    let hits = tokens.tokens.iter().filter_map(|t| keys.weight(t)).fold(0.0, |a, w| a + w);
    hits / tokens.tokens.len() as f64
}

/// SS = min(1, H / corpus_max); 0 when `corpus_max` is 0.
pub fn semantic_score(tokens: &TokenizedText, keys: &KeywordSet, corpus_max: f64) -> f64 {
    if corpus_max <= 0.0 {
        return 0.0;
    }
    (hit_density(tokens, keys) / corpus_max).min(1.0)
}

/// Calibration pass: the largest raw hit density over a corpus.
pub fn corpus_max<'a>(docs: impl IntoIterator<Item = &'a TokenizedText>, keys: &KeywordSet) -> f64 {
    docs.into_iter().map(|d| hit_density(d, keys)).fold(0.0, f64::max)
}
