use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{ModelKind, PipelineConfig};
use super::metrics::{compute_metrics, MetricsReport};
use crate::affect::emotion_features;
use crate::corpus::{self, apply_window, generate_synthetic, latest_timestamp, DatasetFormat, UserProfile, UserRecord};
use crate::embeddings::{train_cbow, EmbeddingMatrix};
use crate::explain::{self, lime_explain, shapley_summary, shapley_tabular, Explanation};
use crate::features::{self, assemble, encode_sequence, encode_user, FeatureVector, LabeledExample};
use crate::labeler::{self, label_corpus, label_counts, LabeledMessage};
use crate::net::{self, argmax, train_logreg, LogReg, NetDims, Params, Predictor};
use crate::seeding::derive_seed;
use crate::semantics::bundled_seeds;
use crate::textprep::{preprocess, TokenizedText};
use crate::topics::{fit_lda, LdaModel};
use crate::{Error, Result};

pub const CORPUS: &str = "corpus.jsonl";
pub const WINDOWED: &str = "windowed_corpus.jsonl";
pub const LABELS: &str = "labels.jsonl";
pub const LABELER: &str = "labeler.json";
pub const EMBEDDINGS: &str = "embeddings.bin";
pub const EMBEDDINGS_TXT: &str = "embeddings.txt";
pub const EMBEDDING_LOSS: &str = "embedding_loss.csv";
pub const TOPICS: &str = "topics.bin";
pub const TOPIC_WORDS: &str = "topics.txt";
pub const FEATURES: &str = "features.csv";
pub const SPLIT: &str = "split.json";
pub const LSTM_MODEL: &str = "model_lstm.bin";
pub const LOGREG_MODEL: &str = "model_logreg.bin";
pub const HISTORY: &str = "train_history.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_TXT: &str = "metrics.txt";
pub const EXPLANATIONS_JSON: &str = "explanations.json";
pub const EXPLANATIONS_TXT: &str = "explanations.txt";
pub const SHAPLEY_RANKING: &str = "shapley_ranking.csv";
pub const SHAPLEY_VALUES: &str = "shapley_values.csv";
pub const REPORT: &str = "report.md";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Generate,
    Label,
    TrainEmbeddings,
    TrainTopics,
    Features,
    Train,
    Evaluate,
    Explain,
    Report,
}

impl Stage {
    /// Execution order of a full run.
    pub const ALL: [Stage; 9] = [
        Stage::Generate,
        Stage::Label,
        Stage::TrainEmbeddings,
        Stage::TrainTopics,
        Stage::Features,
        Stage::Train,
        Stage::Evaluate,
        Stage::Explain,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Label => "label",
            Stage::TrainEmbeddings => "train-embeddings",
            Stage::TrainTopics => "train-topics",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Explain => "explain",
            Stage::Report => "report",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }
}

/// What a stage wrote, for display.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    pub written: Vec<String>,
    pub summary: Value,
    #[serde(skip)]
    pub text: String,
}

pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Result<Workspace> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Workspace { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn require(&self, name: &str, producer: &'static str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact { path: p, producer })
        }
    }

    fn read(&self, name: &str, producer: &'static str) -> Result<Vec<u8>> {
        Ok(fs::read(self.require(name, producer)?)?)
    }

    fn read_text(&self, name: &str, producer: &'static str) -> Result<String> {
        Ok(fs::read_to_string(self.require(name, producer)?)?)
    }

    fn write(&self, name: &str, data: impl AsRef<[u8]>, written: &mut Vec<String>) -> Result<()> {
        fs::write(self.path(name), data)?;
        written.push(name.to_string());
        Ok(())
    }
}

pub fn run_stage(stage: Stage, ws: &Workspace, cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.validate()?;
    let mut written = Vec::new();
    let summary = match stage {
        Stage::Generate => generate(ws, cfg, &mut written)?,
        Stage::Label => label(ws, cfg, &mut written)?,
        Stage::TrainEmbeddings => train_embeddings(ws, cfg, &mut written)?,
        Stage::TrainTopics => train_topics(ws, cfg, &mut written)?,
        Stage::Features => build_features(ws, cfg, &mut written)?,
        Stage::Train => train_models(ws, cfg, &mut written)?,
        Stage::Evaluate => evaluate(ws, &mut written)?,
        Stage::Explain => explain_stage(ws, cfg, &mut written)?,
        Stage::Report => report(ws, cfg, &mut written)?,
    };
    let mut text = format!("{}: wrote {}\n", stage.name(), written.join(", "));
    if stage == Stage::Evaluate {
        text.push_str(&ws.read_text(METRICS_TXT, "evaluate")?);
    } else if let Value::Object(m) = &summary {
        for (k, v) in m {
            text.push_str(&format!("  {k}: {v}\n"));
        }
    }
    Ok(StageReport { stage: stage.name(), written, summary, text })
}

/// Runs every stage in order.
pub fn run_all(ws: &Workspace, cfg: &PipelineConfig) -> Result<Vec<StageReport>> {
    Stage::ALL.iter().map(|s| run_stage(*s, ws, cfg)).collect()
}

fn generate(ws: &Workspace, cfg: &PipelineConfig, written: &mut Vec<String>) -> Result<Value> {
    let records = generate_synthetic(cfg.n_users, derive_seed(cfg.seed, "generate"))?;
    ws.write(CORPUS, corpus::to_json_lines(&records)?, written)?;
    let messages: usize = records.iter().map(|r| r.messages.len()).sum();
    Ok(json!({ "users": records.len(), "messages": messages }))
}

fn load_windowed(ws: &Workspace) -> Result<Vec<UserRecord>> {
    let path = ws.require(WINDOWED, "label")?;
    corpus::load_dataset(&path, DatasetFormat::JsonLines)
}

fn label(ws: &Workspace, cfg: &PipelineConfig, written: &mut Vec<String>) -> Result<Value> {
    let path = ws.require(CORPUS, "generate")?;
    let records = corpus::load_dataset(&path, DatasetFormat::JsonLines)?;
    let now = latest_timestamp(&records)
        .ok_or_else(|| Error::DegenerateCorpus("the corpus holds no messages".into()))?;
    let windowed: Vec<UserRecord> = records.iter().map(|r| apply_window(r, &cfg.window, now)).collect();
    let (lab, labels) = label_corpus(&windowed, &bundled_seeds(), &cfg.labeler)?;
    ws.write(WINDOWED, corpus::to_json_lines(&windowed)?, written)?;
    ws.write(LABELS, labeler::to_json_lines(&labels)?, written)?;
    ws.write(LABELER, serde_json::to_string_pretty(&lab)?, written)?;
    let counts: BTreeMap<&str, usize> = label_counts(&labels).into_iter().map(|(l, n)| (l.as_str(), n)).collect();
    Ok(json!({ "messages": labels.len(), "keywords": lab.keywords.len(), "labels": counts }))
}

pub(super) fn corpus_docs(records: &[UserRecord]) -> Vec<TokenizedText> {
    records.iter().flat_map(|r| r.messages.iter().map(|m| preprocess(&m.text))).collect()
}

fn train_embeddings(ws: &Workspace, cfg: &PipelineConfig, written: &mut Vec<String>) -> Result<Value> {
    let docs = corpus_docs(&load_windowed(ws)?);
    let (emb, losses) = train_cbow(&docs, &cfg.cbow, derive_seed(cfg.seed, "embeddings"))?;
    ws.write(EMBEDDINGS, emb.to_bytes(), written)?;
    ws.write(EMBEDDINGS_TXT, emb.to_text(), written)?;
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        csv.push_str(&format!("{},{l}\n", i + 1));
    }
    ws.write(EMBEDDING_LOSS, csv, written)?;
    Ok(json!({ "vocabulary": emb.vocabulary.len(), "dim": emb.dim, "final_loss": losses.last() }))
}

fn train_topics(ws: &Workspace, cfg: &PipelineConfig, written: &mut Vec<String>) -> Result<Value> {
    let docs = corpus_docs(&load_windowed(ws)?);
    let lda = fit_lda(&docs, &cfg.lda, derive_seed(cfg.seed, "topics"))?;
    ws.write(TOPICS, lda.to_bytes(), written)?;
    ws.write(TOPIC_WORDS, lda.top_words_text(10), written)?;
    Ok(json!({ "vocabulary": lda.terms.len(), "topics": lda.n_topics(), "tokens": lda.total_tokens() }))
}

fn load_embeddings(ws: &Workspace) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::from_bytes(&ws.read(EMBEDDINGS, "train-embeddings")?)
}

fn build_features(ws: &Workspace, cfg: &PipelineConfig, written: &mut Vec<String>) -> Result<Value> {
    let labels = labeler::read_json_lines(&ws.read_text(LABELS, "label")?)?;
    let records = load_windowed(ws)?;
    // Missing upstream models are built here so that
    // generate → label → features works on its own.
    if !ws.path(EMBEDDINGS).is_file() {
        train_embeddings(ws, cfg, written)?;
    }
    if !ws.path(TOPICS).is_file() {
        train_topics(ws, cfg, written)?;
    }
    let emb = load_embeddings(ws)?;
    let lda = LdaModel::from_bytes(&ws.read(TOPICS, "train-topics")?)?;
    let users: HashMap<&str, &UserRecord> = records.iter().map(|r| (r.profile.user_id.as_str(), r)).collect();
    let mut examples = Vec::with_capacity(labels.len());
    for l in &labels {
        let (r, text) = lookup(&users, l)?;
        examples.push(LabeledExample {
            id: l.message_id.clone(),
            label: l.label,
            features: featurize(&r.profile, text, &emb, &lda)?,
        });
    }
    let mut buf = Vec::new();
    features::write_csv(&mut buf, &examples)?;
    ws.write(FEATURES, buf, written)?;
    Ok(json!({ "examples": examples.len(), "tabular": features::TABULAR_DIM, "sequence": features::SEQ_LEN }))
}

pub(super) fn featurize(profile: &UserProfile, text: &str, emb: &EmbeddingMatrix, lda: &LdaModel) -> Result<FeatureVector> {
    let tokens = preprocess(text);
    assemble(
        &emotion_features(text, &tokens).to_array(),
        &lda.infer(&tokens),
        &encode_user(profile),
        &encode_sequence(&tokens, emb),
    )
}

fn lookup<'a>(users: &HashMap<&str, &'a UserRecord>, l: &LabeledMessage) -> Result<(&'a UserRecord, &'a str)> {
    let r = users
        .get(l.user_id.as_str())
        .ok_or_else(|| Error::InvalidInput(format!("label for unknown user {}", l.user_id)))?;
    let m = r
        .messages
        .get(l.index)
        .ok_or_else(|| Error::InvalidInput(format!("label for unknown message {}", l.message_id)))?;
    Ok((r, m.text.as_str()))
}

fn load_features(ws: &Workspace) -> Result<Vec<LabeledExample>> {
    let path = ws.require(FEATURES, "features")?;
    features::read_csv(fs::File::open(&path)?, &path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Split {
    head: net::HeadMode,
    train: Vec<String>,
    validation: Vec<String>,
}

fn train_models(ws: &Workspace, cfg: &PipelineConfig, written: &mut Vec<String>) -> Result<Value> {
    let data = load_features(ws)?;
    let emb = load_embeddings(ws)?;
    let dims = NetDims::standard(emb.rows(), emb.dim, cfg.head);
    let init = Params::init(dims, Some(&emb), derive_seed(cfg.seed, "init"))?;
    let out = net::train(init, &data, &cfg.train, derive_seed(cfg.seed, "train"))?;
    let lr = train_logreg(&data, &out.train_indices, cfg.head, &cfg.logreg)?;
    let ids = |idx: &[usize]| idx.iter().map(|&i| data[i].id.clone()).collect::<Vec<_>>();
    let split = Split { head: cfg.head, train: ids(&out.train_indices), validation: ids(&out.val_indices) };
    ws.write(LSTM_MODEL, out.params.to_bytes(), written)?;
    ws.write(LOGREG_MODEL, lr.to_bytes(), written)?;
    ws.write(HISTORY, net::history_csv(&out.history), written)?;
    ws.write(SPLIT, serde_json::to_string_pretty(&split)?, written)?;
    let best = &out.history[out.best_epoch.max(1) - 1];
    Ok(json!({
        "epochs": out.history.len(),
        "best_epoch": out.best_epoch,
        "best_val_loss": best.val_loss,
        "best_val_accuracy": best.val_accuracy,
    }))
}

struct Models {
    split: Split,
    lstm: Params,
    logreg: LogReg,
}

fn load_models(ws: &Workspace) -> Result<Models> {
    let split: Split = serde_json::from_str(&ws.read_text(SPLIT, "train")?)?;
    let lstm = Params::from_bytes(&ws.read(LSTM_MODEL, "train")?)?;
    let logreg = LogReg::from_bytes(&ws.read(LOGREG_MODEL, "train")?)?;
    Ok(Models { split, lstm, logreg })
}

fn validation_rows<'a>(data: &'a [LabeledExample], split: &Split) -> Result<Vec<&'a LabeledExample>> {
    let by_id: HashMap<&str, &LabeledExample> = data.iter().map(|e| (e.id.as_str(), e)).collect();
    split
        .validation
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("split names unknown example {id}")))
        })
        .collect()
}

pub(super) fn score<P: Predictor + ?Sized>(model: &P, rows: &[&LabeledExample], head: net::HeadMode) -> Result<MetricsReport> {
    let mut pred = Vec::with_capacity(rows.len());
    for e in rows {
        pred.push(argmax(&model.predict(&e.features)?));
    }
    let truth: Vec<usize> = rows.iter().map(|e| head.target(e.label)).collect();
    let k = head.n_classes();
    let names: Vec<String> = (0..k).map(|i| explain::class_name(k, i)).collect();
    compute_metrics(&pred, &truth, &names)
}

fn evaluate(ws: &Workspace, written: &mut Vec<String>) -> Result<Value> {
    let m = load_models(ws)?;
    let data = load_features(ws)?;
    let rows = validation_rows(&data, &m.split)?;
    let lstm = score(&m.lstm, &rows, m.split.head)?;
    let logreg = score(&m.logreg, &rows, m.split.head)?;
    let doc = json!({ "split": "validation", "examples": rows.len(), "lstm": lstm, "logreg": logreg });
    ws.write(METRICS_JSON, serde_json::to_string_pretty(&doc)?, written)?;
    let text = format!("== lstm ==\n{}\n== logreg ==\n{}", lstm.to_text(), logreg.to_text());
    ws.write(METRICS_TXT, text, written)?;
    Ok(json!({
        "lstm_accuracy": lstm.accuracy,
        "lstm_macro_f1": lstm.macro_f1,
        "logreg_accuracy": logreg.accuracy,
        "logreg_macro_f1": logreg.macro_f1,
    }))
}

#[derive(Serialize)]
struct InstanceExplanation {
    message_id: String,
    text: String,
    label: String,
    lime: Explanation,
    shapley: Explanation,
}

fn explain_stage(ws: &Workspace, cfg: &PipelineConfig, written: &mut Vec<String>) -> Result<Value> {
    let m = load_models(ws)?;
    let data = load_features(ws)?;
    let emb = load_embeddings(ws)?;
    let records = load_windowed(ws)?;
    let labels = labeler::read_json_lines(&ws.read_text(LABELS, "label")?)?;
    let users: HashMap<&str, &UserRecord> = records.iter().map(|r| (r.profile.user_id.as_str(), r)).collect();
    let label_by_id: HashMap<&str, &LabeledMessage> = labels.iter().map(|l| (l.message_id.as_str(), l)).collect();
    let model: &dyn Predictor = match cfg.explain_model {
        ModelKind::Lstm => &m.lstm,
        ModelKind::Logreg => &m.logreg,
    };
    let fvs: Vec<FeatureVector> = data.iter().map(|e| e.features.clone()).collect();
    let background = explain::mean_tabular(&fvs);

    let mut rows = validation_rows(&data, &m.split)?;
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "explain")));
    let mut out = Vec::new();
    let mut text = String::new();
    for (n, e) in rows.iter().filter(|e| !e.features.sequence.iter().all(|t| *t == 0)).take(cfg.explain_instances).enumerate() {
        let l = label_by_id
            .get(e.id.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("no label for {}", e.id)))?;
        let (_, raw) = lookup(&users, l)?;
        let tokens = preprocess(raw);
        let target = argmax(&model.predict(&e.features)?);
        let seed = derive_seed(cfg.seed, &format!("lime/{}", e.id));
        let lime = lime_explain(model, &emb, &tokens, &e.features.tabular, target, &cfg.lime, seed)?;
        let shapley = shapley_tabular(model, &e.features, &background, target)?;
        text.push_str(&format!(
            "## {} ({})\n{raw}\n\n{}\n{}\n",
            e.id,
            e.label.as_str(),
            lime.to_text(),
            shapley.to_text()
        ));
        log::info!("explained instance {} of {}", n + 1, cfg.explain_instances);
        out.push(InstanceExplanation {
            message_id: e.id.clone(),
            text: raw.to_string(),
            label: e.label.as_str().to_string(),
            lime,
            shapley,
        });
    }
    ws.write(EXPLANATIONS_JSON, serde_json::to_string_pretty(&out)?, written)?;
    ws.write(EXPLANATIONS_TXT, text, written)?;

    let target = model.n_classes() - 1;
    let sample = cfg.shapley_sample.min(fvs.len());
    let summary = shapley_summary(model, &fvs, sample, target, derive_seed(cfg.seed, "shapley"))?;
    ws.write(SHAPLEY_RANKING, summary.ranking_csv(), written)?;
    ws.write(SHAPLEY_VALUES, summary.values_csv(), written)?;
    Ok(json!({
        "instances": out.len(),
        "shapley_target": explain::class_name(model.n_classes(), target),
        "top_player": summary.ranking[0].0,
    }))
}

fn report(ws: &Workspace, cfg: &PipelineConfig, written: &mut Vec<String>) -> Result<Value> {
    let metrics = ws.read_text(METRICS_TXT, "evaluate")?;
    let labels = labeler::read_json_lines(&ws.read_text(LABELS, "label")?)?;
    let history = ws.read_text(HISTORY, "train")?;
    let mut s = String::from("# Run report\n\n## Configuration\n\n```\n");
    for (k, v, _) in cfg.entries() {
        s.push_str(&format!("{k} = {v}\n"));
    }
    s.push_str("```\n\n## Labels\n\n| label | messages |\n|---|---|\n");
    for (l, n) in label_counts(&labels) {
        s.push_str(&format!("| {} | {n} |\n", l.as_str()));
    }
    s.push_str(&format!("\n## Training history\n\n```\n{history}```\n\n## Validation metrics\n\n```\n{metrics}```\n"));
    for (title, name) in [("Topics", TOPIC_WORDS), ("Shapley ranking", SHAPLEY_RANKING)] {
        if let Ok(body) = fs::read_to_string(ws.path(name)) {
            s.push_str(&format!("\n## {title}\n\n```\n{body}```\n"));
        }
    }
    ws.write(REPORT, s, written)?;
    Ok(json!({ "sections": ["configuration", "labels", "training history", "validation metrics"] }))
}

/// Files a completed run leaves in the workspace, in stage order.
pub fn artifact_names() -> Vec<&'static str> {
    vec![
        CORPUS, WINDOWED, LABELS, LABELER, EMBEDDINGS, EMBEDDINGS_TXT, EMBEDDING_LOSS, TOPICS, TOPIC_WORDS,
        FEATURES, SPLIT, LSTM_MODEL, LOGREG_MODEL, HISTORY, METRICS_JSON, METRICS_TXT, EXPLANATIONS_JSON,
        EXPLANATIONS_TXT, SHAPLEY_RANKING, SHAPLEY_VALUES, REPORT,
    ]
}
