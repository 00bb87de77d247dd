use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{forward, loss_and_gradients, Example};
use super::{argmax, Params};
use crate::features::LabeledExample;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_norm: f64,
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch_size: 32,
            max_epochs: 20,
            patience: 3,
            clip_norm: 5.0,
            val_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr must be a finite non-negative number");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip_norm must be positive");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad("val_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub params: Params,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,val_accuracy\n");
    for r in history {
        s.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, r.val_loss, r.val_accuracy));
    }
    s
}

/// Per-class shuffled split. Every class with at least two members
/// contributes at least one example to each side.
pub fn stratified_split(targets: &[usize], val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = targets.iter().max().map_or(0, |m| m + 1);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..targets.len()).filter(|&i| targets[i] == c).collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        let mut k = (n as f64 * val_fraction).round() as usize;
        if n >= 2 {
            k = k.clamp(1, n - 1);
        } else {
            k = 0;
        }
        val.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Params,
    v: Params,
    t: i32,
}

impl Adam {
    pub fn new(like: &Params) -> Adam {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Params::zeros(like.dims),
            v: Params::zeros(like.dims),
            t: 0,
        }
    }

    pub fn step(&mut self, p: &mut Params, g: &Params, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((w, gr), m), v) in p.tensors_mut().into_iter().zip(g.tensors()).zip(ms).zip(vs) {
            for i in 0..w.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * gr[i];
                v[i] = b2 * v[i] + (1.0 - b2) * gr[i] * gr[i];
                w[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
            }
        }
    }
}

fn clip(g: &mut Params, max_norm: f64) {
    let norm = g
        .tensors()
        .iter()
        .flat_map(|t| t.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for t in g.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= s);
        }
    }
}

fn to_examples<'a>(p: &Params, data: &'a [LabeledExample], idx: &[usize]) -> Vec<Example<'a>> {
    idx.iter()
        .map(|&i| Example {
            sequence: &data[i].features.sequence,
            tabular: &data[i].features.tabular,
            target: p.dims.head.target(data[i].label),
        })
        .collect()
}

fn evaluate(p: &Params, ex: &[Example]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for e in ex {
        let probs = forward(p, e.sequence, e.tabular)?;
        loss -= probs[e.target].max(1e-300).ln();
        correct += usize::from(argmax(&probs) == e.target);
    }
    let n = ex.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Minibatch Adam with gradient clipping and early stopping on validation
/// loss. Fails when the data holds fewer than two target classes.
pub fn train(init: Params, data: &[LabeledExample], cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    let head = init.dims.head;
    let targets: Vec<usize> = data.iter().map(|e| head.target(e.label)).collect();
    let mut present = targets.clone();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::DegenerateCorpus(format!(
            "training data holds {} class(es); at least two are required",
            present.len()
        )));
    }
    let (train_idx, val_idx) = stratified_split(&targets, cfg.val_fraction, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut params = init;
    let mut adam = Adam::new(&params);
    let val_ex = to_examples(&params, data, &val_idx);
    let mut order = train_idx.clone();

    let mut best = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut history = Vec::new();
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = to_examples(&params, data, chunk);
            let (loss, mut g) = loss_and_gradients(&params, &batch)?;
            total += loss * chunk.len() as f64;
            clip(&mut g, cfg.clip_norm);
            adam.step(&mut params, &g, cfg.lr);
        }
        let train_loss = total / order.len().max(1) as f64;
        let (val_loss, val_accuracy) = evaluate(&params, &val_ex)?;
        log::info!("epoch {epoch}: train_loss {train_loss:.4} val_loss {val_loss:.4} val_acc {val_accuracy:.4}");
        history.push(EpochRecord { epoch, train_loss, val_loss, val_accuracy });
        if val_loss < best_loss {
            best_loss = val_loss;
            best = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params: best,
        history,
        best_epoch,
        train_indices: train_idx,
        val_indices: val_idx,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{HeadMode, NetDims};
    use super::*;
    use crate::features::FeatureVector;
    use crate::labeler::SeverityLabel;

    fn dims() -> NetDims {
        NetDims {
            vocab_rows: 6,
            emb_dim: 4,
            hidden: 4,
            tabular: 2,
            dense1: 6,
            dense2: 4,
            seq_len: 4,
            head: HeadMode::ThreeClass,
        }
    }

    /// The first token decides the class.
    fn toy(n: usize) -> Vec<LabeledExample> {
        (0..n)
            .map(|i| {
                let c = i % 3;
                LabeledExample {
                    id: format!("u/{i}"),
                    label: SeverityLabel::from_index(c).unwrap(),
                    features: FeatureVector {
                        tabular: vec![0.5, (i % 7) as f64 / 7.0],
                        sequence: vec![2 + c as u32, 5, 0, 0],
                    },
                }
            })
            .collect()
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let t: Vec<usize> = (0..103).map(|i| if i < 60 { 0 } else if i < 90 { 1 } else { 2 }).collect();
        let (tr, va) = stratified_split(&t, 0.2, 5);
        assert_eq!(tr.len() + va.len(), 103);
        assert!(tr.iter().all(|i| !va.contains(i)));
        let count = |set: &[usize], c| set.iter().filter(|&&i| t[i] == c).count();
        assert_eq!((count(&va, 0), count(&va, 1), count(&va, 2)), (12, 6, 3));
        assert_eq!(stratified_split(&t, 0.2, 5), (tr, va));
    }

    #[test]
    fn learns_a_trivial_rule() {
        let data = toy(150);
        let p0 = Params::init(dims(), None, 1).unwrap();
        let cfg = TrainConfig { lr: 0.02, max_epochs: 30, patience: 5, ..Default::default() };
        let out = train(p0, &data, &cfg, 3).unwrap();
        let last = out.history[out.best_epoch - 1];
        assert!(last.val_accuracy > 0.99, "{:?}", out.history);
        assert!(out.history.len() <= 30);
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let data = toy(30);
        let p0 = Params::init(dims(), None, 1).unwrap();
        let cfg = TrainConfig { lr: 0.0, max_epochs: 2, ..Default::default() };
        let out = train(p0.clone(), &data, &cfg, 3).unwrap();
        assert_eq!(out.params, p0);
    }

    #[test]
    fn single_class_is_rejected() {
        let data: Vec<_> = toy(30).into_iter().filter(|e| e.label == SeverityLabel::MildBullying).collect();
        let p0 = Params::init(dims(), None, 1).unwrap();
        assert!(matches!(train(p0, &data, &TrainConfig::default(), 1), Err(Error::DegenerateCorpus(_))));
    }

    #[test]
    fn early_stopping_respects_patience() {
        let data = toy(60);
        let p0 = Params::init(dims(), None, 2).unwrap();
        let cfg = TrainConfig { lr: 0.5, max_epochs: 40, patience: 1, ..Default::default() };
        let out = train(p0, &data, &cfg, 9).unwrap();
        let n = out.history.len();
        if n < 40 {
            assert_eq!(n, out.best_epoch + 1);
        }
    }

    #[test]
    fn history_format() {
        let h = [EpochRecord { epoch: 1, train_loss: 1.0, val_loss: 0.5, val_accuracy: 0.75 }];
        assert_eq!(history_csv(&h), "epoch,train_loss,val_loss,val_accuracy\n1,1,0.5,0.75\n");
    }
}
