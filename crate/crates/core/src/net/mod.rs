//! Two-input LSTM classifier with hand-written backpropagation, and a
//! multinomial logistic-regression baseline over the tabular block.
//!
//! Architecture: embedding → LSTM (gate order i, f, o, g; PAD positions
//! skipped) → final hidden state ‖ tabular → dense ReLU → dense ReLU →
//! softmax over three classes, or a single sigmoid unit in binary mode.
//!
//! LSTM model file (`binio`, magic `CBSVLSTM`, version 1): the eight
//! dimension fields of [`NetDims`] in declaration order (head mode as 0 =
//! three-class, 1 = binary), then every tensor of [`Params::NAMES`] as a
//! counted `f64` array.

mod logreg;
mod lstm;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::{Reader, Writer};
use crate::embeddings::EmbeddingMatrix;
use crate::features::{FeatureVector, TABULAR_DIM};
use crate::labeler::SeverityLabel;
use crate::{Error, Result};

pub use logreg::{train_logreg, LogReg, LogRegConfig};
pub use lstm::{forward, loss_and_gradients, Example};
pub use train::{
    history_csv, stratified_split, train, Adam, EpochRecord, TrainConfig, TrainOutcome,
};

const MAGIC: &[u8; 8] = b"CBSVLSTM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadMode {
    ThreeClass,
    Binary,
}

impl HeadMode {
    pub fn parse(s: &str) -> Option<HeadMode> {
        match s {
            "three_class" => Some(HeadMode::ThreeClass),
            "binary" => Some(HeadMode::Binary),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HeadMode::ThreeClass => "three_class",
            HeadMode::Binary => "binary",
        }
    }

    /// Width of the output layer.
    pub fn units(self) -> usize {
        match self {
            HeadMode::ThreeClass => 3,
            HeadMode::Binary => 1,
        }
    }

    /// Number of predicted classes.
    pub fn n_classes(self) -> usize {
        match self {
            HeadMode::ThreeClass => 3,
            HeadMode::Binary => 2,
        }
    }

    /// Class index of a severity label under this head.
    pub fn target(self, label: SeverityLabel) -> usize {
        match self {
            HeadMode::ThreeClass => label.index(),
            HeadMode::Binary => usize::from(label.is_bullying()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDims {
    pub vocab_rows: usize,
    pub emb_dim: usize,
    pub hidden: usize,
    pub tabular: usize,
    pub dense1: usize,
    pub dense2: usize,
    pub seq_len: usize,
    pub head: HeadMode,
}

impl NetDims {
    pub fn standard(vocab_rows: usize, emb_dim: usize, head: HeadMode) -> NetDims {
        NetDims {
            vocab_rows,
            emb_dim,
            hidden: 64,
            tabular: TABULAR_DIM,
            dense1: 32,
            dense2: 16,
            seq_len: crate::features::SEQ_LEN,
            head,
        }
    }

    fn shapes(&self) -> [usize; 10] {
        let (h, e, t) = (self.hidden, self.emb_dim, self.tabular);
        let c = self.head.units();
        [
            self.vocab_rows * e,
            4 * h * e,
            4 * h * h,
            4 * h,
            self.dense1 * (h + t),
            self.dense1,
            self.dense2 * self.dense1,
            self.dense2,
            c * self.dense2,
            c,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub dims: NetDims,
    /// (vocab_rows) × emb_dim
    pub embedding: Vec<f64>,
    /// 4H × E, gate blocks in order i, f, o, g
    pub lstm_wx: Vec<f64>,
    /// 4H × H
    pub lstm_wh: Vec<f64>,
    pub lstm_b: Vec<f64>,
    /// dense1 × (H + tabular)
    pub dense1_w: Vec<f64>,
    pub dense1_b: Vec<f64>,
    pub dense2_w: Vec<f64>,
    pub dense2_b: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

fn xavier(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
}

impl Params {
    pub const NAMES: [&'static str; 10] = [
        "embedding", "lstm_wx", "lstm_wh", "lstm_b", "dense1_w", "dense1_b", "dense2_w",
        "dense2_b", "head_w", "head_b",
    ];

    pub fn zeros(dims: NetDims) -> Params {
        let s = dims.shapes();
        Params {
            dims,
            embedding: vec![0.0; s[0]],
            lstm_wx: vec![0.0; s[1]],
            lstm_wh: vec![0.0; s[2]],
            lstm_b: vec![0.0; s[3]],
            dense1_w: vec![0.0; s[4]],
            dense1_b: vec![0.0; s[5]],
            dense2_w: vec![0.0; s[6]],
            dense2_b: vec![0.0; s[7]],
            head_w: vec![0.0; s[8]],
            head_b: vec![0.0; s[9]],
        }
    }

    /// Seeded initialization: Xavier-uniform weights, zero biases except a
    /// forget-gate bias of 1. The embedding is copied from `pretrained` when
    /// given (its row count must match), otherwise drawn uniform ±0.05 with
    /// a zero PAD row.
    pub fn init(dims: NetDims, pretrained: Option<&EmbeddingMatrix>, seed: u64) -> Result<Params> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Params::zeros(dims);
        let (h, e, t) = (dims.hidden, dims.emb_dim, dims.tabular);
        let c = dims.head.units();
        match pretrained {
            Some(m) => {
                if m.rows() != dims.vocab_rows || m.dim != e {
                    return Err(Error::Dimension {
                        block: "embedding",
                        expected: dims.vocab_rows * e,
                        got: m.vectors.len(),
                    });
                }
                p.embedding.copy_from_slice(&m.vectors);
            }
            None => {
                for x in p.embedding.iter_mut().skip(e) {
                    *x = rng.gen_range(-0.05..0.05);
                }
            }
        }
        p.lstm_wx = xavier(&mut rng, e, 4 * h, 4 * h * e);
        p.lstm_wh = xavier(&mut rng, h, 4 * h, 4 * h * h);
        for b in &mut p.lstm_b[h..2 * h] {
            *b = 1.0;
        }
        p.dense1_w = xavier(&mut rng, h + t, dims.dense1, dims.dense1 * (h + t));
        p.dense2_w = xavier(&mut rng, dims.dense1, dims.dense2, dims.dense2 * dims.dense1);
        p.head_w = xavier(&mut rng, dims.dense2, c, c * dims.dense2);
        Ok(p)
    }

    pub fn tensors(&self) -> [&Vec<f64>; 10] {
        [
            &self.embedding,
            &self.lstm_wx,
            &self.lstm_wh,
            &self.lstm_b,
            &self.dense1_w,
            &self.dense1_b,
            &self.dense2_w,
            &self.dense2_b,
            &self.head_w,
            &self.head_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 10] {
        [
            &mut self.embedding,
            &mut self.lstm_wx,
            &mut self.lstm_wh,
            &mut self.lstm_b,
            &mut self.dense1_w,
            &mut self.dense1_b,
            &mut self.dense2_w,
            &mut self.dense2_b,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = &self.dims;
        let mut w = Writer::new(MAGIC, VERSION);
        for v in [d.vocab_rows, d.emb_dim, d.hidden, d.tabular, d.dense1, d.dense2, d.seq_len] {
            w.usize(v);
        }
        w.u32(match d.head {
            HeadMode::ThreeClass => 0,
            HeadMode::Binary => 1,
        });
        for t in self.tensors() {
            w.f64s(t);
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Params> {
        let (mut r, version) = Reader::open(data, MAGIC)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let mut v = [0usize; 7];
        for x in &mut v {
            *x = r.usize()?;
        }
        let head = match r.u32()? {
            0 => HeadMode::ThreeClass,
            1 => HeadMode::Binary,
            other => return Err(Error::Format(format!("unknown head mode {other}"))),
        };
        let dims = NetDims {
            vocab_rows: v[0],
            emb_dim: v[1],
            hidden: v[2],
            tabular: v[3],
            dense1: v[4],
            dense2: v[5],
            seq_len: v[6],
            head,
        };
        let mut p = Params::zeros(dims);
        for (name, t) in Params::NAMES.iter().zip(p.tensors_mut()) {
            let data = r.f64s()?;
            if data.len() != t.len() {
                return Err(Error::Format(format!("tensor {name} has {} values, expected {}", data.len(), t.len())));
            }
            *t = data;
        }
        r.expect_end()?;
        Ok(p)
    }
}

/// Anything that maps a feature vector to class probabilities.
pub trait Predictor {
    fn n_classes(&self) -> usize;
    fn predict(&self, x: &FeatureVector) -> Result<Vec<f64>>;
}

impl Predictor for Params {
    fn n_classes(&self) -> usize {
        self.dims.head.n_classes()
    }

    fn predict(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        forward(self, &x.sequence, &x.tabular)
    }
}

pub fn argmax(p: &[f64]) -> usize {
    (0..p.len()).fold(0, |best, i| if p[i] > p[best] { i } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_dims(head: HeadMode) -> NetDims {
        NetDims {
            vocab_rows: 5,
            emb_dim: 3,
            hidden: 2,
            tabular: 4,
            dense1: 5,
            dense2: 4,
            seq_len: 6,
            head,
        }
    }

    #[test]
    fn standard_shapes() {
        let d = NetDims::standard(102, 100, HeadMode::ThreeClass);
        let p = Params::zeros(d);
        assert_eq!(p.lstm_wx.len(), 256 * 100);
        assert_eq!(p.lstm_wh.len(), 256 * 64);
        assert_eq!(p.dense1_w.len(), 32 * (64 + 46));
        assert_eq!(p.dense2_w.len(), 16 * 32);
        assert_eq!(p.head_w.len(), 3 * 16);
        let b = Params::zeros(NetDims::standard(102, 100, HeadMode::Binary));
        assert_eq!(b.head_w.len(), 16);
    }

    #[test]
    fn init_is_seeded_and_sets_forget_bias() {
        let d = tiny_dims(HeadMode::ThreeClass);
        let a = Params::init(d, None, 3).unwrap();
        assert_eq!(a, Params::init(d, None, 3).unwrap());
        assert_ne!(a, Params::init(d, None, 4).unwrap());
        assert_eq!(&a.lstm_b[2..4], &[1.0, 1.0]);
        assert!(a.lstm_b[..2].iter().chain(&a.lstm_b[4..]).all(|b| *b == 0.0));
        assert!(a.embedding[..3].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn binary_roundtrip() {
        for head in [HeadMode::ThreeClass, HeadMode::Binary] {
            let p = Params::init(tiny_dims(head), None, 1).unwrap();
            assert_eq!(Params::from_bytes(&p.to_bytes()).unwrap(), p);
        }
        assert!(Params::from_bytes(b"CBSVLSTM\x02\0\0\0").is_err());
    }

    #[test]
    fn head_targets() {
        use SeverityLabel::*;
        assert_eq!(HeadMode::Binary.target(NotBullying), 0);
        assert_eq!(HeadMode::Binary.target(MildBullying), 1);
        assert_eq!(HeadMode::Binary.target(SevereBullying), 1);
        assert_eq!(HeadMode::ThreeClass.target(SevereBullying), 2);
    }
}
