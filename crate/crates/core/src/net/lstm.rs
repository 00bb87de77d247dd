use super::{HeadMode, Params};
use crate::embeddings::PAD;
use crate::{Error, Result};

/// One training instance in model space.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub sequence: &'a [u32],
    pub tabular: &'a [f64],
    pub target: usize,
}

struct Step {
    id: usize,
    /// Activated gates i, f, o, g.
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    h_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

struct Trace {
    steps: Vec<Step>,
    u: Vec<f64>,
    a1: Vec<f64>,
    r1: Vec<f64>,
    a2: Vec<f64>,
    r2: Vec<f64>,
    logits: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `out += W·x` for row-major `W` with `x.len()` columns.
fn matvec_add(w: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += Wᵀ·d`.
fn matvec_t_add(w: &[f64], d: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (r, dr) in d.iter().enumerate() {
        if *dr == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * dr;
        }
    }
}

/// `G += d ⊗ x`.
fn outer_add(g: &mut [f64], d: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, dr) in d.iter().enumerate() {
        if *dr == 0.0 {
            continue;
        }
        let row = &mut g[r * cols..(r + 1) * cols];
        for (o, a) in row.iter_mut().zip(x) {
            *o += dr * a;
        }
    }
}

fn finite(layer: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(layer))
    }
}

fn run(p: &Params, seq: &[u32], tab: &[f64]) -> Result<Trace> {
    let d = &p.dims;
    if tab.len() != d.tabular {
        return Err(Error::Dimension { block: "tabular", expected: d.tabular, got: tab.len() });
    }
    let (h, e) = (d.hidden, d.emb_dim);
    let mut hs = vec![0.0; h];
    let mut cs = vec![0.0; h];
    let mut steps = Vec::new();
    for &id in seq {
        let id = id as usize;
        if id == PAD {
            continue;
        }
        if id >= d.vocab_rows {
            return Err(Error::InvalidInput(format!("token id {id} outside the {}-row embedding", d.vocab_rows)));
        }
        let x = &p.embedding[id * e..(id + 1) * e];
        let mut z = p.lstm_b.clone();
        matvec_add(&p.lstm_wx, x, &mut z);
        matvec_add(&p.lstm_wh, &hs, &mut z);
        for (k, v) in z.iter_mut().enumerate() {
            *v = if k < 3 * h { sigmoid(*v) } else { v.tanh() };
        }
        let mut c = vec![0.0; h];
        let mut hn = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        for j in 0..h {
            c[j] = z[h + j] * cs[j] + z[j] * z[3 * h + j];
            tanh_c[j] = c[j].tanh();
            hn[j] = z[2 * h + j] * tanh_c[j];
        }
        steps.push(Step {
            id,
            gates: z,
            c_prev: std::mem::replace(&mut cs, c),
            h_prev: std::mem::replace(&mut hs, hn),
            tanh_c,
        });
    }
    finite("lstm", &hs)?;
    let mut u = hs;
    u.extend_from_slice(tab);
    let mut a1 = p.dense1_b.clone();
    matvec_add(&p.dense1_w, &u, &mut a1);
    let r1: Vec<f64> = a1.iter().map(|v| v.max(0.0)).collect();
    finite("dense1", &a1)?;
    let mut a2 = p.dense2_b.clone();
    matvec_add(&p.dense2_w, &r1, &mut a2);
    let r2: Vec<f64> = a2.iter().map(|v| v.max(0.0)).collect();
    finite("dense2", &a2)?;
    let mut logits = p.head_b.clone();
    matvec_add(&p.head_w, &r2, &mut logits);
    finite("head", &logits)?;
    Ok(Trace { steps, u, a1, r1, a2, r2, logits })
}

fn probabilities(head: HeadMode, logits: &[f64]) -> Vec<f64> {
    match head {
        HeadMode::Binary => {
            let p = sigmoid(logits[0]);
            vec![1.0 - p, p]
        }
        HeadMode::ThreeClass => {
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let ex: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
            let s: f64 = ex.iter().sum();
            ex.iter().map(|v| v / s).collect()
        }
    }
}

/// Class probabilities for one input.
pub fn forward(p: &Params, seq: &[u32], tab: &[f64]) -> Result<Vec<f64>> {
    let t = run(p, seq, tab)?;
    Ok(probabilities(p.dims.head, &t.logits))
}

/// Cross-entropy of one trace, and its gradient with respect to the logits.
fn loss_head(head: HeadMode, logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    match head {
        HeadMode::Binary => {
            let z = logits[0];
            let y = target as f64;
            (softplus(z) - y * z, vec![sigmoid(z) - y])
        }
        HeadMode::ThreeClass => {
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
            let mut g = probabilities(head, logits);
            g[target] -= 1.0;
            (lse - logits[target], g)
        }
    }
}

/// Mean cross-entropy over `batch` and its gradient for every tensor.
pub fn loss_and_gradients(p: &Params, batch: &[Example]) -> Result<(f64, Params)> {
    let d = p.dims;
    let (h, e) = (d.hidden, d.emb_dim);
    let mut g = Params::zeros(d);
    let mut total = 0.0;
    let scale = 1.0 / batch.len().max(1) as f64;
    for ex in batch {
        if ex.target >= d.head.n_classes() {
            return Err(Error::InvalidInput(format!("target {} outside the head", ex.target)));
        }
        let t = run(p, ex.sequence, ex.tabular)?;
        let (loss, mut dz) = loss_head(d.head, &t.logits, ex.target);
        total += loss;
        dz.iter_mut().for_each(|v| *v *= scale);

        outer_add(&mut g.head_w, &dz, &t.r2);
        add(&mut g.head_b, &dz);
        let mut da2 = vec![0.0; d.dense2];
        matvec_t_add(&p.head_w, &dz, &mut da2);
        relu_mask(&mut da2, &t.a2);

        outer_add(&mut g.dense2_w, &da2, &t.r1);
        add(&mut g.dense2_b, &da2);
        let mut da1 = vec![0.0; d.dense1];
        matvec_t_add(&p.dense2_w, &da2, &mut da1);
        relu_mask(&mut da1, &t.a1);

        outer_add(&mut g.dense1_w, &da1, &t.u);
        add(&mut g.dense1_b, &da1);
        let mut du = vec![0.0; h + d.tabular];
        matvec_t_add(&p.dense1_w, &da1, &mut du);

        let mut dh = du[..h].to_vec();
        let mut dc = vec![0.0; h];
        for s in t.steps.iter().rev() {
            let gt = &s.gates;
            let mut dzg = vec![0.0; 4 * h];
            for j in 0..h {
                let (i, f, o, gg) = (gt[j], gt[h + j], gt[2 * h + j], gt[3 * h + j]);
                let tc = s.tanh_c[j];
                dc[j] += dh[j] * o * (1.0 - tc * tc);
                dzg[j] = dc[j] * gg * i * (1.0 - i);
                dzg[h + j] = dc[j] * s.c_prev[j] * f * (1.0 - f);
                dzg[2 * h + j] = dh[j] * tc * o * (1.0 - o);
                dzg[3 * h + j] = dc[j] * i * (1.0 - gg * gg);
                dc[j] *= f;
            }
            let x = &p.embedding[s.id * e..(s.id + 1) * e];
            outer_add(&mut g.lstm_wx, &dzg, x);
            outer_add(&mut g.lstm_wh, &dzg, &s.h_prev);
            add(&mut g.lstm_b, &dzg);
            matvec_t_add(&p.lstm_wx, &dzg, &mut g.embedding[s.id * e..(s.id + 1) * e]);
            dh.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_add(&p.lstm_wh, &dzg, &mut dh);
        }
    }
    Ok((total * scale, g))
}

fn add(acc: &mut [f64], d: &[f64]) {
    for (a, b) in acc.iter_mut().zip(d) {
        *a += b;
    }
}

fn relu_mask(d: &mut [f64], pre: &[f64]) {
    for (v, a) in d.iter_mut().zip(pre) {
        if *a <= 0.0 {
            *v = 0.0;
        }
    }
}
