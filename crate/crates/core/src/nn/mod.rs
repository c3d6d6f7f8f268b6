//! Two-headed recurrent decoder: two stacked LSTM layers feeding a pair of
//! feed-forward evaluation heads.
//!
//! The recurrent part consumes one defect vector per QEC round (all
//! ancillas, bits or probabilities). The first layer emits a hidden state
//! per round; the second keeps only its final hidden state, which passes
//! through a ReLU to both heads. Each head is a single hidden layer of size
//! N_L with ReLU and a sigmoid output unit. The main head additionally
//! receives the final-round defects inferred from the data readout; only its
//! output is used when decoding. Training minimizes
//! `H(p_true, p_main) + w_a H(p_true, p_aux)` (natural-log cross entropy,
//! arguments clamped away from 0 and 1).
//!
//! Everything is generic over f32/f64: training runs in f32, the
//! finite-difference gradient oracle in f64.

pub mod io;
pub mod train;

use ndarray::{Array1, Array2, Axis, NdFloat};

use crate::error::{Error, Result};

/// Scalar constraint for model arithmetic.
pub trait Scalar: NdFloat + std::iter::Sum + From<f32> {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Clamp applied inside the cross entropy.
pub const LOG_CLAMP: f64 = 1e-7;

/// Gate order in the fused weight matrices: input, forget, cell, output.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayer<F> {
    /// (input_dim, 4 * n)
    pub w_x: Array2<F>,
    /// (n, 4 * n)
    pub w_h: Array2<F>,
    /// (4 * n,)
    pub b: Array1<F>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Head<F> {
    /// (input_dim, n)
    pub w1: Array2<F>,
    pub b1: Array1<F>,
    /// (n,)
    pub w2: Array1<F>,
    pub b2: F,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelMeta {
    pub distance: usize,
    /// Recurrent input width (number of ancillas).
    pub input_width: usize,
    /// Final-defect vector width.
    pub final_width: usize,
    /// Hidden/cell state size of both LSTM layers.
    pub n_l: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model<F> {
    pub meta: ModelMeta,
    pub lstm1: LstmLayer<F>,
    pub lstm2: LstmLayer<F>,
    pub head_main: Head<F>,
    pub head_aux: Head<F>,
}

fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

impl<F: Scalar> Model<F> {
    /// Uniform init in [-k, k] with k = fan_in^{-1/2}; forget-gate bias 1.
    pub fn init(meta: ModelMeta, seed: u64) -> Model<F> {
        let mut rng = crate::rng::CounterRng::new(seed, 0xA11);
        let mut uniform = |rows: usize, cols: usize| -> Array2<F> {
            let k = 1.0 / (rows as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| F::from_f64((rng.next_f64() * 2.0 - 1.0) * k))
        };
        let n = meta.n_l;
        let lstm = |rng_w: &mut dyn FnMut(usize, usize) -> Array2<F>, input: usize| {
            let w_x = rng_w(input, 4 * n);
            let w_h = rng_w(n, 4 * n);
            let mut b = Array1::zeros(4 * n);
            for j in n..2 * n {
                b[j] = F::one(); // forget gate bias
            }
            LstmLayer { w_x, w_h, b }
        };
        let lstm1 = lstm(&mut uniform, meta.input_width);
        let lstm2 = lstm(&mut uniform, n);
        let mut head = |input: usize| -> Head<F> {
            let w1 = uniform(input, n);
            let b1 = Array1::zeros(n);
            let w2 = uniform(n, 1).index_axis(Axis(1), 0).to_owned();
            Head { w1, b1, w2, b2: F::zero() }
        };
        let head_main = head(n + meta.final_width);
        let head_aux = head(n);
        Model { meta, lstm1, lstm2, head_main, head_aux }
    }

    pub fn zeros(meta: ModelMeta) -> Model<F> {
        let n = meta.n_l;
        let layer = |input: usize| LstmLayer {
            w_x: Array2::zeros((input, 4 * n)),
            w_h: Array2::zeros((n, 4 * n)),
            b: Array1::zeros(4 * n),
        };
        let head = |input: usize| Head {
            w1: Array2::zeros((input, n)),
            b1: Array1::zeros(n),
            w2: Array1::zeros(n),
            b2: F::zero(),
        };
        Model {
            meta,
            lstm1: layer(meta.input_width),
            lstm2: layer(n),
            head_main: head(n + meta.final_width),
            head_aux: head(n),
        }
    }

    pub fn n_params(&self) -> usize {
        let l = |layer: &LstmLayer<F>| layer.w_x.len() + layer.w_h.len() + layer.b.len();
        let h = |head: &Head<F>| head.w1.len() + head.b1.len() + head.w2.len() + 1;
        l(&self.lstm1) + l(&self.lstm2) + h(&self.head_main) + h(&self.head_aux)
    }
}

/// One minibatch of inputs: `sequence[t]` is (B, input_width), the final
/// defects are (B, final_width), labels are 0/1.
pub struct Batch<F> {
    pub sequence: Vec<Array2<F>>,
    pub final_defects: Array2<F>,
    pub labels: Array1<F>,
}

impl<F: Scalar> Batch<F> {
    pub fn len(&self) -> usize {
        self.final_defects.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-timestep activations cached for backprop.
struct LayerTrace<F> {
    i: Array2<F>,
    f: Array2<F>,
    g: Array2<F>,
    o: Array2<F>,
    tanh_c: Array2<F>,
    c_prev: Array2<F>,
    h_prev: Array2<F>,
}

struct LstmState<F> {
    h: Array2<F>,
    c: Array2<F>,
}

fn lstm_step<F: Scalar>(
    layer: &LstmLayer<F>,
    x: &Array2<F>,
    state: &mut LstmState<F>,
    trace: Option<&mut Vec<LayerTrace<F>>>,
) {
    let n = layer.w_h.nrows();
    let mut z = x.dot(&layer.w_x) + state.h.dot(&layer.w_h);
    z += &layer.b;
    let b = z.nrows();
    let mut i = Array2::zeros((b, n));
    let mut f = Array2::zeros((b, n));
    let mut g = Array2::zeros((b, n));
    let mut o = Array2::zeros((b, n));
    let mut c_new = Array2::zeros((b, n));
    let mut tanh_c = Array2::zeros((b, n));
    let mut h_new = Array2::zeros((b, n));
    {
        let zs = z.as_slice().unwrap();
        let cp = state.c.as_slice().unwrap();
        let (is, fs) = (i.as_slice_mut().unwrap(), f.as_slice_mut().unwrap());
        let (gs, os) = (g.as_slice_mut().unwrap(), o.as_slice_mut().unwrap());
        let cn = c_new.as_slice_mut().unwrap();
        let tc = tanh_c.as_slice_mut().unwrap();
        let hn = h_new.as_slice_mut().unwrap();
        for r in 0..b {
            let zrow = &zs[r * 4 * n..(r + 1) * 4 * n];
            let base = r * n;
            for c in 0..n {
                let iv = sigmoid(zrow[c]);
                let fv = sigmoid(zrow[n + c]);
                let gv = zrow[2 * n + c].tanh();
                let ov = sigmoid(zrow[3 * n + c]);
                let cv = fv * cp[base + c] + iv * gv;
                let tv = cv.tanh();
                is[base + c] = iv;
                fs[base + c] = fv;
                gs[base + c] = gv;
                os[base + c] = ov;
                cn[base + c] = cv;
                tc[base + c] = tv;
                hn[base + c] = ov * tv;
            }
        }
    }
    if let Some(traces) = trace {
        traces.push(LayerTrace {
            i,
            f,
            g,
            o,
            tanh_c: tanh_c.clone(),
            c_prev: std::mem::replace(&mut state.c, c_new),
            h_prev: std::mem::replace(&mut state.h, h_new),
        });
    } else {
        state.c = c_new;
        state.h = h_new;
    }
}

/// Forward pass; returns (p_main, p_aux) per shot.
pub fn forward<F: Scalar>(model: &Model<F>, batch: &Batch<F>) -> Result<(Array1<F>, Array1<F>)> {
    let (out, _) = forward_inner(model, batch, None)?;
    Ok(out)
}

/// Dropout masks for one training step (inverted dropout, already scaled).
pub struct DropoutMasks<F> {
    pub lstm: Option<Array2<F>>,
    pub main: Array2<F>,
    pub aux: Array2<F>,
}

struct ForwardTrace<F> {
    traces1: Vec<LayerTrace<F>>,
    traces2: Vec<LayerTrace<F>>,
    h1_seq: Vec<Array2<F>>,
    relu_out: Array2<F>,
    relu_in: Array2<F>,
    main_hidden_pre: Array2<F>,
    main_hidden: Array2<F>,
    aux_hidden_pre: Array2<F>,
    aux_hidden: Array2<F>,
}

fn forward_inner<F: Scalar>(
    model: &Model<F>,
    batch: &Batch<F>,
    dropout: Option<&DropoutMasks<F>>,
) -> Result<((Array1<F>, Array1<F>), Option<ForwardTrace<F>>)> {
    let b = batch.len();
    let n = model.meta.n_l;
    let a = model.meta.input_width;
    for (t, x) in batch.sequence.iter().enumerate() {
        if x.dim() != (b, a) {
            return Err(Error::invalid(format!(
                "round {t} input is {:?}, expected ({b}, {a})",
                x.dim()
            )));
        }
    }
    if batch.final_defects.dim() != (b, model.meta.final_width) {
        return Err(Error::invalid(format!(
            "final defects are {:?}, expected ({b}, {})",
            batch.final_defects.dim(),
            model.meta.final_width
        )));
    }
    let want_trace = dropout.is_some();
    let mut traces1 = Vec::new();
    let mut traces2 = Vec::new();
    let mut h1_seq = Vec::new();
    let mut s1 = LstmState { h: Array2::zeros((b, n)), c: Array2::zeros((b, n)) };
    let mut s2 = LstmState { h: Array2::zeros((b, n)), c: Array2::zeros((b, n)) };
    for x in &batch.sequence {
        lstm_step(&model.lstm1, x, &mut s1, want_trace.then_some(&mut traces1));
        if want_trace {
            h1_seq.push(s1.h.clone());
        }
        lstm_step(&model.lstm2, &s1.h, &mut s2, want_trace.then_some(&mut traces2));
    }
    let relu_in = s2.h.clone();
    let mut relu_out = relu_in.mapv(|v| if v > F::zero() { v } else { F::zero() });
    if let Some(masks) = dropout {
        if let Some(m) = &masks.lstm {
            relu_out = &relu_out * m;
        }
    }

    // Heads.
    let main_in = {
        let mut m = Array2::zeros((b, n + model.meta.final_width));
        m.slice_mut(ndarray::s![.., ..n]).assign(&relu_out);
        m.slice_mut(ndarray::s![.., n..]).assign(&batch.final_defects);
        m
    };
    let head = |head: &Head<F>, input: &Array2<F>, mask: Option<&Array2<F>>| {
        let mut pre = input.dot(&head.w1);
        pre += &head.b1;
        let mut hidden = pre.mapv(|v| if v > F::zero() { v } else { F::zero() });
        if let Some(m) = mask {
            hidden = &hidden * m;
        }
        let logits = hidden.dot(&head.w2) + head.b2;
        let p = logits.mapv(sigmoid);
        (pre, hidden, p)
    };
    let (main_pre, main_hidden, p_main) =
        head(&model.head_main, &main_in, dropout.map(|d| &d.main));
    let (aux_pre, aux_hidden, p_aux) = head(&model.head_aux, &relu_out, dropout.map(|d| &d.aux));

    let trace = want_trace.then(|| ForwardTrace {
        traces1,
        traces2,
        h1_seq,
        relu_out,
        relu_in,
        main_hidden_pre: main_pre,
        main_hidden,
        aux_hidden_pre: aux_pre,
        aux_hidden,
    });
    Ok(((p_main, p_aux), trace))
}

/// The training objective for one prediction pair.
pub fn loss(p_main: f64, p_aux: f64, p_true: bool, w_aux: f64) -> f64 {
    cross_entropy(p_true, p_main) + w_aux * cross_entropy(p_true, p_aux)
}

fn cross_entropy(label: bool, p: f64) -> f64 {
    let p = p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Mean batch loss.
pub fn batch_loss<F: Scalar>(p_main: &Array1<F>, p_aux: &Array1<F>, labels: &Array1<F>, w_aux: f64) -> f64 {
    let b = labels.len();
    let mut total = 0.0;
    for s in 0..b {
        total += loss(
            p_main[s].to_f64(),
            p_aux[s].to_f64(),
            labels[s].to_f64() > 0.5,
            w_aux,
        );
    }
    total / b as f64
}

/// Gradients with the same shapes as the model parameters.
pub struct Gradients<F> {
    pub model: Model<F>,
}

/// Forward + backward for one batch; returns (loss, gradients).
pub fn backward<F: Scalar>(
    model: &Model<F>,
    batch: &Batch<F>,
    w_aux: f64,
    dropout: &DropoutMasks<F>,
) -> Result<(f64, Gradients<F>)> {
    let b = batch.len();
    let n = model.meta.n_l;
    let ((p_main, p_aux), trace) = forward_inner(model, batch, Some(dropout))?;
    let trace = trace.unwrap();
    let loss_value = batch_loss(&p_main, &p_aux, &batch.labels, w_aux);
    let mut grads = Gradients { model: Model::zeros(model.meta) };
    let scale = F::from_f64(1.0 / b as f64);
    let wa = F::from_f64(w_aux);

    // Clamped-CE + sigmoid gradient: dL/dlogit = p - y (zero where clamped).
    let dlogit = |p: &Array1<F>, weight: F| -> Array1<F> {
        let mut d = Array1::zeros(b);
        for s in 0..b {
            let pv = p[s].to_f64();
            if !(LOG_CLAMP..=1.0 - LOG_CLAMP).contains(&pv) {
                continue; // clamped region has zero gradient
            }
            d[s] = (p[s] - batch.labels[s]) * weight * scale;
        }
        d
    };
    let d_main_logit = dlogit(&p_main, F::one());
    let d_aux_logit = dlogit(&p_aux, wa);

    // Head backward: logits = hidden . w2 + b2; hidden = relu(pre) * mask.
    let head_backward = |head: &Head<F>,
                         ghead: &mut Head<F>,
                         input: &Array2<F>,
                         pre: &Array2<F>,
                         hidden: &Array2<F>,
                         mask: &Array2<F>,
                         dlogit: &Array1<F>|
     -> Array2<F> {
        for s in 0..b {
            let d = dlogit[s];
            if d != F::zero() {
                ghead.b2 += d;
            }
        }
        // dw2 = hidden^T . dlogit
        ghead.w2 += &hidden.t().dot(dlogit);
        // dhidden = outer(dlogit, w2), through dropout mask and relu.
        let mut dpre = Array2::zeros(pre.dim());
        for s in 0..b {
            let d = dlogit[s];
            if d == F::zero() {
                continue;
            }
            for c in 0..n {
                if pre[[s, c]] > F::zero() {
                    dpre[[s, c]] = d * head.w2[c] * mask[[s, c]];
                }
            }
        }
        ghead.w1 += &input.t().dot(&dpre);
        ghead.b1 += &dpre.sum_axis(Axis(0));
        dpre.dot(&head.w1.t())
    };

    let main_in = {
        let mut m = Array2::zeros((b, n + model.meta.final_width));
        m.slice_mut(ndarray::s![.., ..n]).assign(&trace.relu_out);
        m.slice_mut(ndarray::s![.., n..]).assign(&batch.final_defects);
        m
    };
    let ones = Array2::from_elem((b, n), F::one());
    let d_main_in = head_backward(
        &model.head_main,
        &mut grads.model.head_main,
        &main_in,
        &trace.main_hidden_pre,
        &trace.main_hidden,
        &dropout.main,
        &d_main_logit,
    );
    let d_aux_in = head_backward(
        &model.head_aux,
        &mut grads.model.head_aux,
        &trace.relu_out,
        &trace.aux_hidden_pre,
        &trace.aux_hidden,
        &dropout.aux,
        &d_aux_logit,
    );

    // Gradient into the (possibly dropped) relu output.
    let mut d_relu_out = d_aux_in;
    d_relu_out += &d_main_in.slice(ndarray::s![.., ..n]);
    // Through the lstm-output dropout mask.
    let lstm_mask = dropout.lstm.as_ref().unwrap_or(&ones);
    let mut dh2 = &d_relu_out * lstm_mask;
    // Through the ReLU on h2_T.
    ndarray::Zip::from(&mut dh2).and(&trace.relu_in).for_each(|d, &x| {
        if x <= F::zero() {
            *d = F::zero();
        }
    });

    // BPTT through layer 2 (input h1_t), collecting d(h1_t).
    let t_len = batch.sequence.len();
    let mut d_h1: Vec<Array2<F>> = vec![Array2::zeros((b, n)); t_len];
    let mut dc2: Array2<F> = Array2::zeros((b, n));
    let mut dh_next = dh2;
    for t in (0..t_len).rev() {
        let tr = &trace.traces2[t];
        let (dx, dh_prev, dc_prev) =
            lstm_backward(&model.lstm2, &mut grads.model.lstm2, tr, &trace.h1_seq[t], &dh_next, &mut dc2);
        d_h1[t] = dx;
        dh_next = dh_prev;
        dc2 = dc_prev;
    }
    // BPTT through layer 1.
    let mut dc1: Array2<F> = Array2::zeros((b, n));
    let mut dh1_next: Array2<F> = Array2::zeros((b, n));
    for t in (0..t_len).rev() {
        let tr = &trace.traces1[t];
        let mut dh = d_h1[t].clone();
        dh += &dh1_next;
        let (_dx, dh_prev, dc_prev) =
            lstm_backward(&model.lstm1, &mut grads.model.lstm1, tr, &batch.sequence[t], &dh, &mut dc1);
        dh1_next = dh_prev;
        dc1 = dc_prev;
    }
    Ok((loss_value, grads))
}

/// One LSTM step backward. Returns (d_input, d_h_prev, d_c_prev); dc is the
/// incoming cell gradient (modified in place conceptually, passed by value).
fn lstm_backward<F: Scalar>(
    layer: &LstmLayer<F>,
    grad: &mut LstmLayer<F>,
    tr: &LayerTrace<F>,
    x: &Array2<F>,
    dh: &Array2<F>,
    dc_in: &mut Array2<F>,
) -> (Array2<F>, Array2<F>, Array2<F>) {
    let (b, n) = (dh.nrows(), dh.ncols());
    let mut dz = Array2::zeros((b, 4 * n));
    let mut dc_prev = Array2::zeros((b, n));
    {
        let dzs = dz.as_slice_mut().unwrap();
        let dcp = dc_prev.as_slice_mut().unwrap();
        let dhs = dh.as_slice().unwrap();
        let dci = dc_in.as_slice().unwrap();
        let (is, fs) = (tr.i.as_slice().unwrap(), tr.f.as_slice().unwrap());
        let (gs, os) = (tr.g.as_slice().unwrap(), tr.o.as_slice().unwrap());
        let tcs = tr.tanh_c.as_slice().unwrap();
        let cps = tr.c_prev.as_slice().unwrap();
        for s in 0..b {
            let base = s * n;
            let dzrow = &mut dzs[s * 4 * n..(s + 1) * 4 * n];
            for c in 0..n {
                let o = os[base + c];
                let tanh_c = tcs[base + c];
                let dho = dhs[base + c];
                let mut dc = dci[base + c] + dho * o * (F::one() - tanh_c * tanh_c);
                let i = is[base + c];
                let f = fs[base + c];
                let g = gs[base + c];
                let do_ = dho * tanh_c;
                let di = dc * g;
                let dg = dc * i;
                let df = dc * cps[base + c];
                dc *= f;
                dzrow[c] = di * i * (F::one() - i);
                dzrow[n + c] = df * f * (F::one() - f);
                dzrow[2 * n + c] = dg * (F::one() - g * g);
                dzrow[3 * n + c] = do_ * o * (F::one() - o);
                dcp[base + c] = dc;
            }
        }
    }
    grad.w_x += &x.t().dot(&dz);
    grad.w_h += &tr.h_prev.t().dot(&dz);
    grad.b += &dz.sum_axis(Axis(0));
    let dx = dz.dot(&layer.w_x.t());
    let dh_prev = dz.dot(&layer.w_h.t());
    (dx, dh_prev, dc_prev)
}

/// Corrections: threshold p_main at 1/2, ties toward 0.
pub fn evaluate<F: Scalar>(model: &Model<F>, batch: &Batch<F>) -> Result<Vec<bool>> {
    let (p_main, _) = forward(model, batch)?;
    Ok(p_main.iter().map(|&p| p.to_f64() > 0.5).collect())
}

/// Finite-difference gradient oracle, shared by tests, `oracle-check`, and
/// the acceptance suite.
pub mod gradcheck {
    use super::*;
    use ndarray::Array2 as A2;

    /// Flat parameter access: (tensor count, per-tensor lengths).
    pub fn tensor_lens<F: Scalar>(m: &Model<F>) -> Vec<usize> {
        vec![
            m.lstm1.w_x.len(),
            m.lstm1.w_h.len(),
            m.lstm1.b.len(),
            m.lstm2.w_x.len(),
            m.lstm2.w_h.len(),
            m.lstm2.b.len(),
            m.head_main.w1.len(),
            m.head_main.b1.len(),
            m.head_main.w2.len(),
            1,
            m.head_aux.w1.len(),
            m.head_aux.b1.len(),
            m.head_aux.w2.len(),
            1,
        ]
    }

    pub fn param_get<F: Scalar>(m: &Model<F>, tensor: usize, idx: usize) -> F {
        match tensor {
            0 => m.lstm1.w_x.as_slice().unwrap()[idx],
            1 => m.lstm1.w_h.as_slice().unwrap()[idx],
            2 => m.lstm1.b.as_slice().unwrap()[idx],
            3 => m.lstm2.w_x.as_slice().unwrap()[idx],
            4 => m.lstm2.w_h.as_slice().unwrap()[idx],
            5 => m.lstm2.b.as_slice().unwrap()[idx],
            6 => m.head_main.w1.as_slice().unwrap()[idx],
            7 => m.head_main.b1.as_slice().unwrap()[idx],
            8 => m.head_main.w2.as_slice().unwrap()[idx],
            9 => m.head_main.b2,
            10 => m.head_aux.w1.as_slice().unwrap()[idx],
            11 => m.head_aux.b1.as_slice().unwrap()[idx],
            12 => m.head_aux.w2.as_slice().unwrap()[idx],
            13 => m.head_aux.b2,
            _ => unreachable!(),
        }
    }

    pub fn param_add<F: Scalar>(m: &mut Model<F>, tensor: usize, idx: usize, dv: F) {
        match tensor {
            0 => m.lstm1.w_x.as_slice_mut().unwrap()[idx] += dv,
            1 => m.lstm1.w_h.as_slice_mut().unwrap()[idx] += dv,
            2 => m.lstm1.b.as_slice_mut().unwrap()[idx] += dv,
            3 => m.lstm2.w_x.as_slice_mut().unwrap()[idx] += dv,
            4 => m.lstm2.w_h.as_slice_mut().unwrap()[idx] += dv,
            5 => m.lstm2.b.as_slice_mut().unwrap()[idx] += dv,
            6 => m.head_main.w1.as_slice_mut().unwrap()[idx] += dv,
            7 => m.head_main.b1.as_slice_mut().unwrap()[idx] += dv,
            8 => m.head_main.w2.as_slice_mut().unwrap()[idx] += dv,
            9 => m.head_main.b2 += dv,
            10 => m.head_aux.w1.as_slice_mut().unwrap()[idx] += dv,
            11 => m.head_aux.b1.as_slice_mut().unwrap()[idx] += dv,
            12 => m.head_aux.w2.as_slice_mut().unwrap()[idx] += dv,
            13 => m.head_aux.b2 += dv,
            _ => unreachable!(),
        }
    }

    /// Compare the analytic gradient against central finite differences on
    /// `n_points` random (model, batch) draws of an N_L = 4 model at 64-bit
    /// precision. Returns the worst relative error observed.
    pub fn run(n_points: u64, _tolerance: f64) -> Result<f64> {
        let meta = ModelMeta { distance: 3, input_width: 8, final_width: 8, n_l: 4 };
        let mut worst = 0.0f64;
        for point in 0..n_points {
            let mut model: Model<f64> = Model::init(meta, 0xF00D + point);
            let mut rng = crate::rng::CounterRng::new(0x6AD, point);
            // A generic parameter point: randomize the biases too, so no
            // ReLU pre-activation sits on its kink (where the loss is not
            // differentiable and finite differences are meaningless).
            let lens = tensor_lens(&model);
            for (tensor, &len) in lens.iter().enumerate() {
                if matches!(tensor, 2 | 5 | 7 | 9 | 11 | 13) {
                    for idx in 0..len {
                        param_add(&mut model, tensor, idx, rng.next_f64() * 0.5 - 0.25);
                    }
                }
            }
            let b = 3;
            let t = 1 + (point % 5) as usize;
            let mut bit = |p: f64| if rng.below(p) { 1.0 } else { 0.0 };
            let batch = Batch {
                sequence: (0..t).map(|_| A2::from_shape_fn((b, 8), |_| bit(0.25))).collect(),
                final_defects: A2::from_shape_fn((b, 8), |_| bit(0.25)),
                labels: ndarray::Array1::from_shape_fn(b, |_| bit(0.5)),
            };
            let masks = DropoutMasks {
                lstm: None,
                main: A2::from_elem((b, meta.n_l), 1.0),
                aux: A2::from_elem((b, meta.n_l), 1.0),
            };
            let (_, grads) = backward(&model, &batch, 0.5, &masks)?;
            let h = 1e-5;
            let lens = tensor_lens(&model);
            for (tensor, &len) in lens.iter().enumerate() {
                for idx in 0..len {
                    param_add(&mut model, tensor, idx, h);
                    let (pm, pa) = forward(&model, &batch)?;
                    let lp = batch_loss(&pm, &pa, &batch.labels, 0.5);
                    param_add(&mut model, tensor, idx, -2.0 * h);
                    let (pm, pa) = forward(&model, &batch)?;
                    let lm = batch_loss(&pm, &pa, &batch.labels, 0.5);
                    param_add(&mut model, tensor, idx, h);
                    let fd = (lp - lm) / (2.0 * h);
                    let an = param_get(&grads.model, tensor, idx);
                    let denom = an.abs().max(fd.abs()).max(1e-6);
                    worst = worst.max((an - fd).abs() / denom);
                }
            }
        }
        Ok(worst)
    }
}
