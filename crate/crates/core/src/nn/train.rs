//! Training: datasets, Adam, early stopping, and the two-stage protocol.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::bits::{BitMatrix, BitVec};
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::syndrome::{DefectTensor, SoftDefectTensor};

use super::{backward, evaluate, forward, Batch, batch_loss, DropoutMasks, Gradients, Model, Scalar};

/// Fixed sub-batch width: gradients are accumulated chunk by chunk in index
/// order, so results do not depend on the worker count.
const SUB_BATCH: usize = 32;

/// Training inputs: packed defects (bits or quantized probabilities) plus
/// labels. Sequence rounds are 1..N-1; round N is the final-defect vector.
#[derive(Clone, Debug)]
pub struct DefectDataset {
    pub rounds: usize,
    pub n_ancillas: usize,
    pub shots: usize,
    data: Data,
    labels: BitVec,
}

#[derive(Clone, Debug)]
enum Data {
    Hard(BitMatrix),
    /// Probabilities quantized to u16 (p * 65535), detector-major.
    Soft(Vec<u16>),
}

impl DefectDataset {
    pub fn from_defects(t: &DefectTensor) -> DefectDataset {
        DefectDataset {
            rounds: t.rounds,
            n_ancillas: t.n_ancillas,
            shots: t.shots,
            data: Data::Hard(t.defects.clone()),
            labels: t.p_true.clone(),
        }
    }

    pub fn from_soft(t: &SoftDefectTensor) -> DefectDataset {
        let quantized: Vec<u16> =
            t.probs.iter().map(|&p| (p.clamp(0.0, 1.0) * 65535.0).round() as u16).collect();
        DefectDataset {
            rounds: t.rounds,
            n_ancillas: t.n_ancillas,
            shots: t.shots,
            data: Data::Soft(quantized),
            labels: t.p_true.clone(),
        }
    }

    #[inline]
    fn value<F: Scalar>(&self, det: usize, shot: usize) -> F {
        match &self.data {
            Data::Hard(bits) => {
                if bits.get(det, shot) {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Data::Soft(q) => F::from_f64(q[det * self.shots + shot] as f64 / 65535.0),
        }
    }

    /// Assemble a minibatch for shots [start, start + len).
    pub fn batch<F: Scalar>(&self, start: usize, len: usize) -> Batch<F> {
        let a = self.n_ancillas;
        let t_len = self.rounds - 1;
        let sequence: Vec<Array2<F>> = (0..t_len)
            .map(|t| {
                Array2::from_shape_fn((len, a), |(s, col)| self.value(t * a + col, start + s))
            })
            .collect();
        let final_defects =
            Array2::from_shape_fn((len, a), |(s, col)| self.value(t_len * a + col, start + s));
        let labels = Array1::from_shape_fn(len, |s| {
            if self.labels.get(start + s) {
                F::one()
            } else {
                F::zero()
            }
        });
        Batch { sequence, final_defects, labels }
    }

    pub fn label(&self, shot: usize) -> bool {
        self.labels.get(shot)
    }
}

/// Hyper-parameters; defaults follow the uniform-noise d=3 row.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Dropout rate for the head hidden layers (always applied in training).
    pub dropout: f64,
    /// Also apply dropout to the second LSTM layer's output.
    pub lstm_dropout: bool,
    pub w_aux: f64,
    /// Early stopping: epochs without validation improvement.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Optional second stage resuming from the best checkpoint.
    pub second_stage_lr: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 256,
            dropout: 0.2,
            lstm_dropout: false,
            w_aux: 0.5,
            patience: 20,
            max_epochs: 200,
            seed: 0,
            second_stage_lr: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub learning_rate: f64,
}

#[derive(Clone, Debug, Default)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    pub best_val_loss: f64,
    pub best_epoch: usize,
}

struct Adam<F> {
    m: Model<F>,
    v: Model<F>,
    step: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl<F: Scalar> Adam<F> {
    fn new(meta: super::ModelMeta) -> Adam<F> {
        Adam { m: Model::zeros(meta), v: Model::zeros(meta), step: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    fn update(&mut self, model: &mut Model<F>, grads: &Model<F>, lr: f64) {
        self.step += 1;
        let b1 = F::from_f64(self.beta1);
        let b2 = F::from_f64(self.beta2);
        let one = F::one();
        let bc1 = F::from_f64(1.0 - self.beta1.powi(self.step as i32));
        let bc2 = F::from_f64(1.0 - self.beta2.powi(self.step as i32));
        let lr = F::from_f64(lr);
        let eps = F::from_f64(self.eps);
        let (mut ps, gs, mut ms, mut vs) = (
            tensors_mut(model),
            tensors(grads),
            tensors_mut(&mut self.m),
            tensors_mut(&mut self.v),
        );
        for t in 0..ps.len() {
            let p = &mut ps[t];
            let g = gs[t];
            let m = &mut ms[t];
            let v = &mut vs[t];
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

fn tensors<F>(m: &Model<F>) -> Vec<&[F]> {
    vec![
        m.lstm1.w_x.as_slice().unwrap(),
        m.lstm1.w_h.as_slice().unwrap(),
        m.lstm1.b.as_slice().unwrap(),
        m.lstm2.w_x.as_slice().unwrap(),
        m.lstm2.w_h.as_slice().unwrap(),
        m.lstm2.b.as_slice().unwrap(),
        m.head_main.w1.as_slice().unwrap(),
        m.head_main.b1.as_slice().unwrap(),
        m.head_main.w2.as_slice().unwrap(),
        std::slice::from_ref(&m.head_main.b2),
        m.head_aux.w1.as_slice().unwrap(),
        m.head_aux.b1.as_slice().unwrap(),
        m.head_aux.w2.as_slice().unwrap(),
        std::slice::from_ref(&m.head_aux.b2),
    ]
}

fn tensors_mut<F>(m: &mut Model<F>) -> Vec<&mut [F]> {
    vec![
        m.lstm1.w_x.as_slice_mut().unwrap(),
        m.lstm1.w_h.as_slice_mut().unwrap(),
        m.lstm1.b.as_slice_mut().unwrap(),
        m.lstm2.w_x.as_slice_mut().unwrap(),
        m.lstm2.w_h.as_slice_mut().unwrap(),
        m.lstm2.b.as_slice_mut().unwrap(),
        m.head_main.w1.as_slice_mut().unwrap(),
        m.head_main.b1.as_slice_mut().unwrap(),
        m.head_main.w2.as_slice_mut().unwrap(),
        std::slice::from_mut(&mut m.head_main.b2),
        m.head_aux.w1.as_slice_mut().unwrap(),
        m.head_aux.b1.as_slice_mut().unwrap(),
        m.head_aux.w2.as_slice_mut().unwrap(),
        std::slice::from_mut(&mut m.head_aux.b2),
    ]
}

fn add_scaled<F: Scalar>(into: &mut Model<F>, from: &Model<F>, scale: F) {
    let mut dst = tensors_mut(into);
    let src = tensors(from);
    for t in 0..dst.len() {
        for i in 0..dst[t].len() {
            dst[t][i] += src[t][i] * scale;
        }
    }
}

fn masks_for<F: Scalar>(
    cfg: &TrainConfig,
    n: usize,
    b: usize,
    rng: &mut CounterRng,
) -> DropoutMasks<F> {
    let rate = cfg.dropout;
    let mut mask = |active: bool| -> Array2<F> {
        if !active || rate <= 0.0 {
            return Array2::from_elem((b, n), F::one());
        }
        let keep = 1.0 - rate;
        Array2::from_shape_fn((b, n), |_| {
            if rng.below(keep) {
                F::from_f64(1.0 / keep)
            } else {
                F::zero()
            }
        })
    };
    // Draws happen in a fixed order: lstm, main, aux.
    let lstm = if cfg.lstm_dropout { Some(mask(true)) } else { None };
    let main = mask(true);
    let aux = mask(true);
    DropoutMasks { lstm, main, aux }
}

/// Mean loss over whole datasets (no dropout).
pub fn validation_loss<F: Scalar>(
    model: &Model<F>,
    datasets: &[DefectDataset],
    w_aux: f64,
) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for ds in datasets {
        let chunks: Vec<(usize, usize)> = chunk_ranges(ds.shots, 512);
        let losses: Vec<Result<(f64, usize)>> = chunks
            .par_iter()
            .map(|&(start, len)| {
                let batch = ds.batch::<F>(start, len);
                let (pm, pa) = forward(model, &batch)?;
                Ok((batch_loss(&pm, &pa, &batch.labels, w_aux) * len as f64, len))
            })
            .collect();
        for r in losses {
            let (l, n) = r?;
            total += l;
            count += n;
        }
    }
    if count == 0 {
        return Err(Error::invalid("empty validation set"));
    }
    Ok(total / count as f64)
}

fn chunk_ranges(total: usize, size: usize) -> Vec<(usize, usize)> {
    (0..total.div_ceil(size)).map(|i| (i * size, size.min(total - i * size))).collect()
}

/// Train with minibatch Adam, early stopping on validation loss, optional
/// second stage at a reduced learning rate. Returns the history; the model
/// is left at the best checkpoint.
pub fn train<F: Scalar>(
    model: &mut Model<F>,
    train_sets: &[DefectDataset],
    val_sets: &[DefectDataset],
    cfg: &TrainConfig,
) -> Result<History> {
    if train_sets.iter().map(|d| d.shots).sum::<usize>() == 0 {
        return Err(Error::invalid("empty training set"));
    }
    for ds in train_sets.iter().chain(val_sets) {
        if ds.n_ancillas != model.meta.input_width {
            return Err(Error::Mismatch(format!(
                "dataset width {} vs model input {}",
                ds.n_ancillas, model.meta.input_width
            )));
        }
    }
    let mut batches: Vec<(usize, usize, usize)> = Vec::new(); // (dataset, start, len)
    for (di, ds) in train_sets.iter().enumerate() {
        for (start, len) in chunk_ranges(ds.shots, cfg.batch_size) {
            batches.push((di, start, len));
        }
    }
    let mut history = History { epochs: Vec::new(), best_val_loss: f64::INFINITY, best_epoch: 0 };
    let mut best_model = model.clone();
    let mut stages = vec![cfg.learning_rate];
    if let Some(lr2) = cfg.second_stage_lr {
        stages.push(lr2);
    }
    let mut epoch = 0usize;
    for (stage, &lr) in stages.iter().enumerate() {
        if stage > 0 {
            // Resume from the best checkpoint with fresh optimizer state.
            *model = best_model.clone();
        }
        let mut adam = Adam::new(model.meta);
        let mut stale = 0usize;
        while epoch < cfg.max_epochs {
            let mut order: Vec<usize> = (0..batches.len()).collect();
            let mut shuffle_rng = CounterRng::new(cfg.seed ^ 0x5u64, epoch as u64);
            shuffle_rng.shuffle(&mut order);
            let mut train_loss = 0.0;
            let mut seen = 0usize;
            for (bi, &b_idx) in order.iter().enumerate() {
                let (di, start, len) = batches[b_idx];
                let ds = &train_sets[di];
                let mut mask_rng =
                    CounterRng::new(cfg.seed ^ 0xD80u64, (epoch as u64) << 32 | bi as u64);
                let masks = masks_for::<F>(cfg, model.meta.n_l, len, &mut mask_rng);
                // Chunked, order-fixed gradient accumulation.
                let chunks = chunk_ranges(len, SUB_BATCH);
                let results: Vec<Result<(f64, Gradients<F>)>> = chunks
                    .par_iter()
                    .map(|&(cstart, clen)| {
                        let batch = ds.batch::<F>(start + cstart, clen);
                        let sub_masks = DropoutMasks {
                            lstm: masks
                                .lstm
                                .as_ref()
                                .map(|m| m.slice(ndarray::s![cstart..cstart + clen, ..]).to_owned()),
                            main: masks.main.slice(ndarray::s![cstart..cstart + clen, ..]).to_owned(),
                            aux: masks.aux.slice(ndarray::s![cstart..cstart + clen, ..]).to_owned(),
                        };
                        backward(model, &batch, cfg.w_aux, &sub_masks)
                    })
                    .collect();
                let mut grad_total = Model::zeros(model.meta);
                let mut loss_total = 0.0;
                for (r, &(_, clen)) in results.into_iter().zip(&chunks) {
                    let (l, g) = r?;
                    let frac = clen as f64 / len as f64;
                    loss_total += l * frac;
                    add_scaled(&mut grad_total, &g.model, F::from_f64(frac));
                }
                if !loss_total.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite training loss at epoch {epoch}"
                    )));
                }
                adam.update(model, &grad_total, lr);
                train_loss += loss_total * len as f64;
                seen += len;
            }
            train_loss /= seen as f64;
            let val_loss = if val_sets.is_empty() {
                train_loss
            } else {
                validation_loss(model, val_sets, cfg.w_aux)?
            };
            if !val_loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite validation loss at epoch {epoch}")));
            }
            history.epochs.push(EpochStats { epoch, train_loss, val_loss, learning_rate: lr });
            if val_loss < history.best_val_loss {
                history.best_val_loss = val_loss;
                history.best_epoch = epoch;
                best_model = model.clone();
                stale = 0;
            } else {
                stale += 1;
            }
            epoch += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    *model = best_model;
    Ok(history)
}

/// Per-shot corrections over a whole dataset.
pub fn evaluate_dataset<F: Scalar>(model: &Model<F>, ds: &DefectDataset) -> Result<BitVec> {
    let chunks = chunk_ranges(ds.shots, 1024);
    let results: Vec<Result<Vec<bool>>> = chunks
        .par_iter()
        .map(|&(start, len)| evaluate(model, &ds.batch::<F>(start, len)))
        .collect();
    let mut out = BitVec::zeros(ds.shots);
    let mut s = 0usize;
    for r in results {
        for bit in r? {
            out.set(s, bit);
            s += 1;
        }
    }
    Ok(out)
}
