//! LDA topic model fit by collapsed Gibbs sampling.
//!
//! Binary format (`binio`, magic `CBSVLDA\0`, version 1): `n_topics`,
//! `alpha`, `beta`, `iterations`, `min_df`, `infer_sweeps`, `seed`, the
//! vocabulary as a counted list of strings, then the K×|V| topic-word counts
//! row-major as `u32`.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::{Reader, Writer};
use crate::seeding::{fnv1a64, splitmix64};
use crate::textprep::TokenizedText;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"CBSVLDA\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub n_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    /// Minimum number of documents a term must occur in.
    pub min_df: usize,
    pub infer_sweeps: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            n_topics: 25,
            alpha: 2.0,
            beta: 0.01,
            iterations: 500,
            min_df: 10,
            infer_sweeps: 50,
        }
    }
}

impl LdaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_topics == 0 || self.alpha <= 0.0 || self.beta <= 0.0 || self.min_df == 0 {
            return Err(Error::Config(
                "lda needs n_topics, alpha, beta and min_df above zero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub seed: u64,
    pub terms: Vec<String>,
    pub vocabulary: BTreeMap<String, usize>,
    /// K×|V| row-major.
    pub topic_word: Vec<u32>,
    pub topic_totals: Vec<u64>,
}

fn sample(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Terms that occur in at least `min_df` documents, sorted.
pub fn filtered_vocabulary(docs: &[TokenizedText], min_df: usize) -> Vec<String> {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        let distinct: BTreeSet<&str> = d.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    df.into_iter()
        .filter(|(_, n)| *n >= min_df)
        .map(|(t, _)| t.to_string())
        .collect()
}

pub fn fit_lda(docs: &[TokenizedText], cfg: &LdaConfig, seed: u64) -> Result<LdaModel> {
    cfg.validate()?;
    if docs.len() < 2 {
        return Err(Error::DegenerateCorpus("lda needs at least 2 documents".into()));
    }
    let terms = filtered_vocabulary(docs, cfg.min_df);
    if terms.is_empty() {
        return Err(Error::DegenerateCorpus(format!(
            "no term appears in at least {} posts",
            cfg.min_df
        )));
    }
    let vocabulary: BTreeMap<String, usize> =
        terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let (k, v) = (cfg.n_topics, terms.len());

    let words: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| vocabulary.get(t).copied()).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut topic_word = vec![0u32; k * v];
    let mut topic_totals = vec![0u64; k];
    let mut doc_topic = vec![vec![0u32; k]; docs.len()];
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for (d, ws) in words.iter().enumerate() {
        let zs: Vec<usize> = ws.iter().map(|_| rng.gen_range(0..k)).collect();
        for (&w, &t) in ws.iter().zip(&zs) {
            topic_word[t * v + w] += 1;
            topic_totals[t] += 1;
            doc_topic[d][t] += 1;
        }
        z.push(zs);
    }

    let vbeta = v as f64 * cfg.beta;
    let mut p = vec![0.0; k];
    for _ in 0..cfg.iterations {
        for (d, ws) in words.iter().enumerate() {
            for (i, &w) in ws.iter().enumerate() {
                let old = z[d][i];
                topic_word[old * v + w] -= 1;
                topic_totals[old] -= 1;
                doc_topic[d][old] -= 1;
                for t in 0..k {
                    p[t] = (f64::from(doc_topic[d][t]) + cfg.alpha)
                        * (f64::from(topic_word[t * v + w]) + cfg.beta)
                        / (topic_totals[t] as f64 + vbeta);
                }
                let new = sample(&p, &mut rng);
                z[d][i] = new;
                topic_word[new * v + w] += 1;
                topic_totals[new] += 1;
                doc_topic[d][new] += 1;
            }
        }
    }

    Ok(LdaModel {
        config: *cfg,
        seed,
        terms,
        vocabulary,
        topic_word,
        topic_totals,
    })
}

impl LdaModel {
    pub fn n_topics(&self) -> usize {
        self.config.n_topics
    }

    pub fn total_tokens(&self) -> u64 {
        self.topic_totals.iter().sum()
    }

    /// Per-document generator seed: depends on the model seed and the tokens only.
    fn doc_seed(&self, doc: &TokenizedText) -> u64 {
        splitmix64(self.seed ^ fnv1a64(doc.tokens.join(" ").as_bytes()))
    }

    /// Topic distribution of `doc` by fold-in Gibbs sampling with the
    /// trained counts held fixed. Empty or out-of-vocabulary docs give the
    /// uniform vector.
    pub fn infer(&self, doc: &TokenizedText) -> Vec<f64> {
        let k = self.n_topics();
        let v = self.terms.len();
        let ws: Vec<usize> = doc
            .tokens
            .iter()
            .filter_map(|t| self.vocabulary.get(t).copied())
            .collect();
        if ws.is_empty() {
            return vec![1.0 / k as f64; k];
        }
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let vbeta = v as f64 * beta;
        let mut rng = ChaCha8Rng::seed_from_u64(self.doc_seed(doc));
        let mut counts = vec![0u32; k];
        let mut z: Vec<usize> = ws.iter().map(|_| rng.gen_range(0..k)).collect();
        for &t in &z {
            counts[t] += 1;
        }
        let mut p = vec![0.0; k];
        for _ in 0..self.config.infer_sweeps {
            for (i, &w) in ws.iter().enumerate() {
                counts[z[i]] -= 1;
                for t in 0..k {
                    p[t] = (f64::from(counts[t]) + alpha)
                        * (f64::from(self.topic_word[t * v + w]) + beta)
                        / (self.topic_totals[t] as f64 + vbeta);
                }
                z[i] = sample(&p, &mut rng);
                counts[z[i]] += 1;
            }
        }
        let raw: Vec<f64> = counts.iter().map(|c| f64::from(*c) + alpha).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|x| x / total).collect()
    }

    /// The `n` most frequent terms of each topic (ties by term order).
    pub fn top_words(&self, n: usize) -> Vec<Vec<(String, u32)>> {
        let v = self.terms.len();
        (0..self.n_topics())
            .map(|t| {
                let row = &self.topic_word[t * v..(t + 1) * v];
                let mut idx: Vec<usize> = (0..v).collect();
                idx.sort_by(|&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
                idx.into_iter()
                    .take(n)
                    .map(|i| (self.terms[i].clone(), row[i]))
                    .collect()
            })
            .collect()
    }

    pub fn top_words_text(&self, n: usize) -> String {
        let mut out = String::new();
        for (t, words) in self.top_words(n).iter().enumerate() {
            let ws: Vec<&str> = words.iter().map(|(w, _)| w.as_str()).collect();
            out.push_str(&format!("topic {t:02}: {}\n", ws.join(" ")));
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut w = Writer::new(MAGIC, VERSION);
        w.usize(c.n_topics);
        w.f64(c.alpha);
        w.f64(c.beta);
        w.usize(c.iterations);
        w.usize(c.min_df);
        w.usize(c.infer_sweeps);
        w.u64(self.seed);
        w.usize(self.terms.len());
        for t in &self.terms {
            w.str(t);
        }
        w.u32s(&self.topic_word);
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<LdaModel> {
        let (mut r, version) = Reader::open(data, MAGIC)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported lda version {version}")));
        }
        let config = LdaConfig {
            n_topics: r.usize()?,
            alpha: r.f64()?,
            beta: r.f64()?,
            iterations: r.usize()?,
            min_df: r.usize()?,
            infer_sweeps: r.usize()?,
        };
        let seed = r.u64()?;
        let n_terms = r.usize()?;
        let terms = (0..n_terms).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let topic_word = r.u32s()?;
        r.expect_end()?;
        if topic_word.len() != config.n_topics * n_terms {
            return Err(Error::Format("lda count matrix has the wrong size".into()));
        }
        let topic_totals = (0..config.n_topics)
            .map(|t| {
                topic_word[t * n_terms..(t + 1) * n_terms]
                    .iter()
                    .map(|c| u64::from(*c))
                    .sum()
            })
            .collect();
        let vocabulary = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(LdaModel {
            config,
            seed,
            terms,
            vocabulary,
            topic_word,
            topic_totals,
        })
    }
}

pub fn infer_topics(model: &LdaModel, doc: &TokenizedText) -> Vec<f64> {
    model.infer(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn doc(tokens: &[&str]) -> TokenizedText {
        TokenizedText::from_tokens(tokens.iter().copied())
    }

    const A: [&str; 5] = ["apple", "banana", "cherry", "grape", "melon"];
    const B: [&str; 5] = ["engine", "wheel", "brake", "piston", "clutch"];

    fn cliques(seed: u64) -> Vec<TokenizedText> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..40)
            .map(|i| {
                let pool = if i % 2 == 0 { &A } else { &B };
                let toks: Vec<&str> = (0..8).map(|_| pool[rng.gen_range(0..5)]).collect();
                doc(&toks)
            })
            .collect()
    }

    fn small_cfg() -> LdaConfig {
        LdaConfig {
            n_topics: 2,
            alpha: 0.5,
            iterations: 100,
            min_df: 2,
            infer_sweeps: 30,
            ..LdaConfig::default()
        }
    }

    fn argmax(v: &[f64]) -> usize {
        (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
    }

    #[test]
    fn disjoint_cliques_separate() {
        let mut separated = 0;
        for seed in 0..20 {
            let docs = cliques(seed);
            let m = fit_lda(&docs, &small_cfg(), seed).unwrap();
            let ta: BTreeSet<usize> = docs.iter().step_by(2).map(|d| argmax(&m.infer(d))).collect();
            let tb: BTreeSet<usize> = docs.iter().skip(1).step_by(2).map(|d| argmax(&m.infer(d))).collect();
            if ta.len() == 1 && tb.len() == 1 && ta != tb {
                separated += 1;
                let only_a = m.infer(&doc(&["apple", "melon", "grape"]));
                assert_eq!(argmax(&only_a), *ta.iter().next().unwrap());
            }
        }
        assert!(separated >= 19, "separated in {separated}/20 seeds");
    }

    #[test]
    fn deterministic_and_count_preserving() {
        let docs = cliques(3);
        let a = fit_lda(&docs, &small_cfg(), 11).unwrap();
        let b = fit_lda(&docs, &small_cfg(), 11).unwrap();
        assert_eq!(a, b);
        let retained: usize = docs
            .iter()
            .map(|d| d.tokens.iter().filter(|t| a.vocabulary.contains_key(*t)).count())
            .sum();
        assert_eq!(a.total_tokens(), retained as u64);
        assert_eq!(a.topic_word.iter().map(|c| u64::from(*c)).sum::<u64>(), retained as u64);
    }

    #[test]
    fn document_frequency_floor() {
        let mut docs: Vec<TokenizedText> = (0..10).map(|_| doc(&["common", "x"])).collect();
        for d in docs.iter_mut().take(9) {
            d.tokens.push("rare".into());
        }
        // "rare" appears in 9 posts, twice in none
        let m = fit_lda(&docs, &LdaConfig { iterations: 5, ..LdaConfig::default() }, 1).unwrap();
        assert!(m.vocabulary.contains_key("common"));
        assert!(!m.vocabulary.contains_key("rare"));
        docs[9].tokens.push("rare".into());
        let m = fit_lda(&docs, &LdaConfig { iterations: 5, ..LdaConfig::default() }, 1).unwrap();
        assert!(m.vocabulary.contains_key("rare"));
    }

    #[test]
    fn empty_vocabulary_names_threshold() {
        let docs = vec![doc(&["a"]), doc(&["b"])];
        let err = fit_lda(&docs, &LdaConfig::default(), 1).unwrap_err();
        assert!(err.to_string().contains("10 posts"), "{err}");
    }

    #[test]
    fn empty_and_oov_docs_are_uniform() {
        let m = fit_lda(&cliques(1), &LdaConfig { n_topics: 25, iterations: 10, min_df: 2, ..LdaConfig::default() }, 2).unwrap();
        for d in [doc(&[]), doc(&["zzz"])] {
            let v = m.infer(&d);
            assert_eq!(v.len(), 25);
            assert!(v.iter().all(|x| (x - 0.04).abs() < 1e-15));
        }
    }

    #[test]
    fn binary_roundtrip_and_top_words() {
        let m = fit_lda(&cliques(2), &small_cfg(), 5).unwrap();
        let back = LdaModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        let d = doc(&["apple", "wheel"]);
        assert_eq!(back.infer(&d), m.infer(&d));
        let text = m.top_words_text(10);
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("topic 00: "));
        assert!(LdaModel::from_bytes(b"garbage!!!!!!!").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn inferred_vectors_are_distributions(picks in prop::collection::vec(0usize..12, 0..30)) {
            use std::sync::OnceLock;
            static M: OnceLock<LdaModel> = OnceLock::new();
            let m = M.get_or_init(|| fit_lda(&cliques(4), &LdaConfig { n_topics: 5, iterations: 30, min_df: 2, ..LdaConfig::default() }, 9).unwrap());
            let all: Vec<&str> = A.iter().chain(B.iter()).copied().chain(["oov1", "oov2"]).collect();
            let toks: Vec<&str> = picks.iter().map(|i| all[*i]).collect();
            let v = m.infer(&doc(&toks));
            prop_assert!(v.iter().all(|x| *x >= 0.0));
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
