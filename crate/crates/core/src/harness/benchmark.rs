use serde::Serialize;

use super::config::PipelineConfig;
use super::metrics::MetricsReport;
use super::pipeline::{corpus_docs, featurize, score};
use crate::corpus::generate_synthetic_with_pools;
use crate::embeddings::{train_cbow, EmbeddingMatrix};
use crate::features::LabeledExample;
use crate::labeler::SeverityLabel;
use crate::net::{self, train_logreg, EpochRecord, NetDims, Params};
use crate::seeding::derive_seed;
use crate::topics::fit_lda;
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkResult {
    pub examples: usize,
    pub lstm: MetricsReport,
    pub logreg: MetricsReport,
    pub history: Vec<EpochRecord>,
}

/// Synthetic corpus whose labels are the template pool each message was
/// drawn from (benign, mild or severe), so the classes are separable by
/// construction. Features follow the pipeline exactly; no time window.
pub fn separable_examples(cfg: &PipelineConfig, n_users: usize) -> Result<(Vec<LabeledExample>, EmbeddingMatrix)> {
    let (records, pools) = generate_synthetic_with_pools(n_users, derive_seed(cfg.seed, "generate"))?;
    let docs = corpus_docs(&records);
    let (emb, _) = train_cbow(&docs, &cfg.cbow, derive_seed(cfg.seed, "embeddings"))?;
    let lda = fit_lda(&docs, &cfg.lda, derive_seed(cfg.seed, "topics"))?;
    let mut out = Vec::new();
    for (r, ps) in records.iter().zip(&pools) {
        for (i, (m, pool)) in r.messages.iter().zip(ps).enumerate() {
            out.push(LabeledExample {
                id: format!("{}/{i}", r.profile.user_id),
                label: SeverityLabel::from_index(pool.index()).expect("three pools"),
                features: featurize(&r.profile, &m.text, &emb, &lda)?,
            });
        }
    }
    Ok((out, emb))
}

/// Trains the LSTM and the logistic baseline on [`separable_examples`] and
/// scores both on the same stratified validation split.
pub fn separable_benchmark(cfg: &PipelineConfig, n_users: usize) -> Result<BenchmarkResult> {
    let (data, emb) = separable_examples(cfg, n_users)?;
    let dims = NetDims::standard(emb.rows(), emb.dim, cfg.head);
    let init = Params::init(dims, Some(&emb), derive_seed(cfg.seed, "init"))?;
    let out = net::train(init, &data, &cfg.train, derive_seed(cfg.seed, "train"))?;
    let lr = train_logreg(&data, &out.train_indices, cfg.head, &cfg.logreg)?;
    let val: Vec<&LabeledExample> = out.val_indices.iter().map(|&i| &data[i]).collect();
    Ok(BenchmarkResult {
        examples: data.len(),
        lstm: score(&out.params, &val, cfg.head)?,
        logreg: score(&lr, &val, cfg.head)?,
        history: out.history,
    })
}
