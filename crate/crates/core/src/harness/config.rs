use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::WindowConfig;
use crate::embeddings::CbowConfig;
use crate::explain::LimeConfig;
use crate::features::TOPIC_DIM;
use crate::labeler::LabelerConfig;
use crate::net::{HeadMode, LogRegConfig, TrainConfig};
use crate::topics::LdaConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lstm,
    Logreg,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Logreg => "logreg",
        }
    }
}

/// Every tunable of the pipeline. Text form: one `key = value` per line,
/// `#` starts a comment, unknown keys are rejected, omitted keys keep their
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub n_users: usize,
    pub window: WindowConfig,
    pub labeler: LabelerConfig,
    pub lda: LdaConfig,
    pub cbow: CbowConfig,
    pub head: HeadMode,
    pub train: TrainConfig,
    pub logreg: LogRegConfig,
    pub lime: LimeConfig,
    pub explain_model: ModelKind,
    pub explain_instances: usize,
    pub shapley_sample: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            n_users: 400,
            window: WindowConfig::default(),
            labeler: LabelerConfig::default(),
            lda: LdaConfig::default(),
            cbow: CbowConfig::default(),
            head: HeadMode::ThreeClass,
            train: TrainConfig::default(),
            logreg: LogRegConfig::default(),
            lime: LimeConfig::default(),
            explain_model: ModelKind::Lstm,
            explain_instances: 3,
            shapley_sample: 50,
        }
    }
}

fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("cannot parse {v:?}"))
}

impl PipelineConfig {
    /// (key, current value, description) for every key, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String, &'static str)> {
        let w = &self.labeler.weights;
        vec![
            ("seed", self.seed.to_string(), "root seed; every stage derives its own"),
            ("n_users", self.n_users.to_string(), "synthetic users written by generate"),
            ("days_limit", self.window.days_limit.to_string(), "window length in days before the latest message"),
            ("message_cap", self.window.message_cap.to_string(), "most recent messages kept per user"),
            ("weight_age", w.age.to_string(), "vulnerability weight: age"),
            ("weight_gender", w.gender.to_string(), "vulnerability weight: gender"),
            ("weight_race_ethnicity", w.race_ethnicity.to_string(), "vulnerability weight: race or ethnicity"),
            ("weight_past_bullying", w.past_bullying.to_string(), "vulnerability weight: past bullying"),
            ("weight_internet_use", w.internet_use.to_string(), "vulnerability weight: internet use"),
            ("weight_internal_issues", w.internal_issues.to_string(), "vulnerability weight: internalizing issues"),
            ("weight_external_issues", w.external_issues.to_string(), "vulnerability weight: externalizing issues"),
            ("lsi_rank", self.labeler.lsi_rank.to_string(), "LSI rank k"),
            ("tau", self.labeler.tau.to_string(), "keyword expansion cosine threshold"),
            ("lda_topics", self.lda.n_topics.to_string(), "topic count (the feature layout needs 25)"),
            ("lda_alpha", self.lda.alpha.to_string(), "document-topic prior"),
            ("lda_beta", self.lda.beta.to_string(), "topic-word prior"),
            ("lda_iterations", self.lda.iterations.to_string(), "Gibbs sweeps"),
            ("lda_min_df", self.lda.min_df.to_string(), "minimum posts per vocabulary term"),
            ("lda_infer_sweeps", self.lda.infer_sweeps.to_string(), "Gibbs sweeps when inferring a new post"),
            ("cbow_dim", self.cbow.dim.to_string(), "embedding dimension"),
            ("cbow_window", self.cbow.window.to_string(), "context window on each side"),
            ("cbow_negatives", self.cbow.negatives.to_string(), "negative samples per target"),
            ("cbow_epochs", self.cbow.epochs.to_string(), "passes over the corpus"),
            ("cbow_lr", self.cbow.lr.to_string(), "initial learning rate"),
            ("head", self.head.as_str().to_string(), "three_class or binary"),
            ("lr", self.train.lr.to_string(), "Adam learning rate"),
            ("batch_size", self.train.batch_size.to_string(), "minibatch size"),
            ("max_epochs", self.train.max_epochs.to_string(), "epoch limit"),
            ("patience", self.train.patience.to_string(), "epochs without validation improvement before stopping"),
            ("clip_norm", self.train.clip_norm.to_string(), "global gradient norm limit"),
            ("val_fraction", self.train.val_fraction.to_string(), "stratified validation share"),
            ("logreg_lr", self.logreg.lr.to_string(), "baseline gradient-descent step"),
            ("logreg_iterations", self.logreg.iterations.to_string(), "baseline full-batch iterations"),
            ("logreg_l2", self.logreg.l2.to_string(), "baseline L2 penalty"),
            ("lime_samples", self.lime.n_samples.to_string(), "perturbations per LIME explanation"),
            ("lime_kernel_width", self.lime.kernel_width.to_string(), "LIME proximity kernel width"),
            ("lime_ridge", self.lime.ridge.to_string(), "LIME ridge penalty"),
            ("explain_model", self.explain_model.as_str().to_string(), "lstm or logreg"),
            ("explain_instances", self.explain_instances.to_string(), "validation messages explained individually"),
            ("shapley_sample", self.shapley_sample.to_string(), "instances in the Shapley summary"),
        ]
    }

    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let w = &mut self.labeler.weights;
        match key {
            "seed" => self.seed = num(v)?,
            "n_users" => self.n_users = num(v)?,
            "days_limit" => self.window.days_limit = num(v)?,
            "message_cap" => self.window.message_cap = num(v)?,
            "weight_age" => w.age = num(v)?,
            "weight_gender" => w.gender = num(v)?,
            "weight_race_ethnicity" => w.race_ethnicity = num(v)?,
            "weight_past_bullying" => w.past_bullying = num(v)?,
            "weight_internet_use" => w.internet_use = num(v)?,
            "weight_internal_issues" => w.internal_issues = num(v)?,
            "weight_external_issues" => w.external_issues = num(v)?,
            "lsi_rank" => self.labeler.lsi_rank = num(v)?,
            "tau" => self.labeler.tau = num(v)?,
            "lda_topics" => self.lda.n_topics = num(v)?,
            "lda_alpha" => self.lda.alpha = num(v)?,
            "lda_beta" => self.lda.beta = num(v)?,
            "lda_iterations" => self.lda.iterations = num(v)?,
            "lda_min_df" => self.lda.min_df = num(v)?,
            "lda_infer_sweeps" => self.lda.infer_sweeps = num(v)?,
            "cbow_dim" => self.cbow.dim = num(v)?,
            "cbow_window" => self.cbow.window = num(v)?,
            "cbow_negatives" => self.cbow.negatives = num(v)?,
            "cbow_epochs" => self.cbow.epochs = num(v)?,
            "cbow_lr" => self.cbow.lr = num(v)?,
            "head" => self.head = HeadMode::parse(v).ok_or_else(|| format!("unknown head {v:?}"))?,
            "lr" => self.train.lr = num(v)?,
            "batch_size" => self.train.batch_size = num(v)?,
            "max_epochs" => self.train.max_epochs = num(v)?,
            "patience" => self.train.patience = num(v)?,
            "clip_norm" => self.train.clip_norm = num(v)?,
            "val_fraction" => self.train.val_fraction = num(v)?,
            "logreg_lr" => self.logreg.lr = num(v)?,
            "logreg_iterations" => self.logreg.iterations = num(v)?,
            "logreg_l2" => self.logreg.l2 = num(v)?,
            "lime_samples" => self.lime.n_samples = num(v)?,
            "lime_kernel_width" => self.lime.kernel_width = num(v)?,
            "lime_ridge" => self.lime.ridge = num(v)?,
            "explain_model" => {
                self.explain_model = match v {
                    "lstm" => ModelKind::Lstm,
                    "logreg" => ModelKind::Logreg,
                    _ => return Err(format!("unknown model {v:?}")),
                }
            }
            "explain_instances" => self.explain_instances = num(v)?,
            "shapley_sample" => self.shapley_sample = num(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn parse(text: &str, source: &Path) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse { path: source.into(), line: i + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected `key = value`".into()))?;
            cfg.set(k.trim(), v.trim()).map_err(bad)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        PipelineConfig::parse(&std::fs::read_to_string(path)?, path)
    }

    /// The config file with every key at its current value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v, doc) in self.entries() {
            s.push_str(&format!("# {doc}\n{k} = {v}\n"));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.labeler.weights.validate()?;
        self.lda.validate()?;
        self.train.validate()?;
        if self.lda.n_topics != TOPIC_DIM {
            return Err(Error::Config(format!("lda_topics must be {TOPIC_DIM} to fill the topic block")));
        }
        if self.labeler.lsi_rank == 0 || !(self.labeler.tau.is_finite()) {
            return Err(Error::Config("lsi_rank must be positive and tau finite".into()));
        }
        if self.cbow.dim == 0 || self.cbow.window == 0 || self.cbow.epochs == 0 || !(self.cbow.lr > 0.0) {
            return Err(Error::Config("cbow settings must be positive".into()));
        }
        if self.n_users == 0 {
            return Err(Error::Config("n_users must be positive".into()));
        }
        Ok(())
    }
}
