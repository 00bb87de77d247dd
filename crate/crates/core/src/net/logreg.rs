use serde::{Deserialize, Serialize};

use super::{HeadMode, Predictor};
use crate::binio::{Reader, Writer};
use crate::features::{FeatureVector, LabeledExample};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"CBSVLOGR";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub lr: f64,
    pub iterations: usize,
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig { lr: 0.5, iterations: 1000, l2: 0.0 }
    }
}

/// Multinomial logistic regression over the tabular block.
#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    pub n_classes: usize,
    pub n_features: usize,
    /// n_classes × n_features, row-major
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LogReg {
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let f = self.n_features;
        let z: Vec<f64> = (0..self.n_classes)
            .map(|c| self.bias[c] + self.weights[c * f..(c + 1) * f].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.usize(self.n_classes);
        w.usize(self.n_features);
        w.f64s(&self.weights);
        w.f64s(&self.bias);
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<LogReg> {
        let (mut r, version) = Reader::open(data, MAGIC)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let n_classes = r.usize()?;
        let n_features = r.usize()?;
        let weights = r.f64s()?;
        let bias = r.f64s()?;
        r.expect_end()?;
        if weights.len() != n_classes * n_features || bias.len() != n_classes {
            return Err(Error::Format("logistic regression shape mismatch".into()));
        }
        Ok(LogReg { n_classes, n_features, weights, bias })
    }
}

impl Predictor for LogReg {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        if x.tabular.len() != self.n_features {
            return Err(Error::Dimension { block: "tabular", expected: self.n_features, got: x.tabular.len() });
        }
        Ok(self.probabilities(&x.tabular))
    }
}

/// Full-batch gradient descent from zero weights on the rows `idx`.
pub fn train_logreg(data: &[LabeledExample], idx: &[usize], head: HeadMode, cfg: &LogRegConfig) -> Result<LogReg> {
    let Some(&first) = idx.first() else {
        return Err(Error::DegenerateCorpus("no training rows for logistic regression".into()));
    };
    let f = data[first].features.tabular.len();
    let c = head.n_classes();
    let mut m = LogReg { n_classes: c, n_features: f, weights: vec![0.0; c * f], bias: vec![0.0; c] };
    let n = idx.len() as f64;
    for _ in 0..cfg.iterations {
        let mut gw = vec![0.0; c * f];
        let mut gb = vec![0.0; c];
        for &i in idx {
            let x = &data[i].features.tabular;
            let mut p = m.probabilities(x);
            p[head.target(data[i].label)] -= 1.0;
            for k in 0..c {
                gb[k] += p[k];
                for (g, v) in gw[k * f..(k + 1) * f].iter_mut().zip(x) {
                    *g += p[k] * v;
                }
            }
        }
        for (w, g) in m.weights.iter_mut().zip(&gw) {
            *w -= cfg.lr * (g / n + cfg.l2 * *w);
        }
        for (b, g) in m.bias.iter_mut().zip(&gb) {
            *b -= cfg.lr * g / n;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeler::SeverityLabel;

    fn ex(label: SeverityLabel, tab: Vec<f64>) -> LabeledExample {
        LabeledExample {
            id: String::new(),
            label,
            features: FeatureVector { tabular: tab, sequence: vec![] },
        }
    }

    #[test]
    fn uninformative_feature_keeps_zero_weight() {
        use SeverityLabel::*;
        let mut data = Vec::new();
        for noise in [-1.0, 1.0, -0.5, 0.5] {
            data.push(ex(NotBullying, vec![-1.0, noise]));
            data.push(ex(SevereBullying, vec![1.0, noise]));
        }
        let idx: Vec<usize> = (0..data.len()).collect();
        let m = train_logreg(&data, &idx, HeadMode::Binary, &LogRegConfig::default()).unwrap();
        assert!(m.weights[1].abs() < 1e-9 && m.weights[3].abs() < 1e-9);
        assert!(m.weights[2] > 1.0);
        let p = m.predict(&data[1].features).unwrap();
        assert!(p[1] > 0.9);
    }

    #[test]
    fn roundtrip() {
        let m = LogReg { n_classes: 3, n_features: 2, weights: vec![0.5, -1.0, 2.0, 0.0, 1e-17, 3.0], bias: vec![1.0, 2.0, 3.0] };
        assert_eq!(LogReg::from_bytes(&m.to_bytes()).unwrap(), m);
    }
}
