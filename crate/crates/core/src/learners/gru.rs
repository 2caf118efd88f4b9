//! Gated recurrent units and the bidirectional GRU classifier.
//!
//! A row of `d` features is read as a length-`d` sequence of scalars. The
//! forward GRU reads it left to right, the backward GRU right to left, and the
//! two final states feed a sigmoid head.
//!
//! Gate equations, with `[a, b]` denoting concatenation:
//!
//! ```text
//! z_t  = sigmoid(W_z [h_{t-1}, x_t] + b_z)
//! r_t  = sigmoid(W_r [h_{t-1}, x_t] + b_r)
//! h~_t = tanh(W_c [r_t * h_{t-1}, x_t] + b_c)
//! h_t  = (1 - z_t) * h_{t-1} + z_t * h~_t
//! ```

#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use super::nn::{bce_with_logit, full_objective, glorot, minibatch_descent, sigmoid, Differentiable, SampleLoss, SgdSettings};
use super::Scorer;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_for;

/// Weights of one GRU. Each `w_*` is row-major `hidden x (hidden + input)`,
/// acting on `[h_{t-1}, x_t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub hidden: usize,
    pub input: usize,
    pub w_z: Vec<f64>,
    pub b_z: Vec<f64>,
    pub w_r: Vec<f64>,
    pub b_r: Vec<f64>,
    pub w_c: Vec<f64>,
    pub b_c: Vec<f64>,
}

impl GruParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        let w = hidden * (hidden + input);
        GruParams {
            hidden,
            input,
            w_z: vec![0.0; w],
            b_z: vec![0.0; hidden],
            w_r: vec![0.0; w],
            b_r: vec![0.0; hidden],
            w_c: vec![0.0; w],
            b_c: vec![0.0; hidden],
        }
    }

    pub fn n_params(hidden: usize, input: usize) -> usize {
        3 * hidden * (hidden + input + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.hidden * (self.hidden + self.input);
        let ok = [&self.w_z, &self.w_r, &self.w_c].iter().all(|m| m.len() == w)
            && [&self.b_z, &self.b_r, &self.b_c].iter().all(|b| b.len() == self.hidden);
        if !ok {
            return Err(Error::Shape(format!(
                "GRU weights do not match hidden={} input={}",
                self.hidden, self.input
            )));
        }
        Ok(())
    }

    /// Flat layout `[w_z, b_z, w_r, b_r, w_c, b_c]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::n_params(self.hidden, self.input));
        for part in [&self.w_z, &self.b_z, &self.w_r, &self.b_r, &self.w_c, &self.b_c] {
            out.extend_from_slice(part);
        }
        out
    }

    pub fn from_flat(hidden: usize, input: usize, flat: &[f64]) -> Self {
        let v = GruView::new(hidden, input, flat);
        GruParams {
            hidden,
            input,
            w_z: v.w_z.to_vec(),
            b_z: v.b_z.to_vec(),
            w_r: v.w_r.to_vec(),
            b_r: v.b_r.to_vec(),
            w_c: v.w_c.to_vec(),
            b_c: v.b_c.to_vec(),
        }
    }
}

/// One GRU update from `h_prev` on input `x_t`.
pub fn gru_step(params: &GruParams, h_prev: &[f64], x_t: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    if h_prev.len() != params.hidden || x_t.len() != params.input {
        return Err(Error::Shape(format!(
            "gru_step expects h of length {} and x of length {}, got {} and {}",
            params.hidden,
            params.input,
            h_prev.len(),
            x_t.len()
        )));
    }
    let view = GruView::of(params);
    let mut cache = StepCache::new(params.hidden, params.input);
    view.step(h_prev, x_t, &mut cache);
    Ok(cache.h)
}

/// Borrowed parameter blocks over a flat slice.
struct GruView<'a> {
    hidden: usize,
    input: usize,
    w_z: &'a [f64],
    b_z: &'a [f64],
    w_r: &'a [f64],
    b_r: &'a [f64],
    w_c: &'a [f64],
    b_c: &'a [f64],
}

/// Offsets of the blocks inside the flat layout.
struct Offsets {
    w_z: usize,
    b_z: usize,
    w_r: usize,
    b_r: usize,
    w_c: usize,
    b_c: usize,
}

fn offsets(hidden: usize, input: usize) -> Offsets {
    let w = hidden * (hidden + input);
    let h = hidden;
    Offsets {
        w_z: 0,
        b_z: w,
        w_r: w + h,
        b_r: 2 * w + h,
        w_c: 2 * w + 2 * h,
        b_c: 3 * w + 2 * h,
    }
}

impl<'a> GruView<'a> {
    fn new(hidden: usize, input: usize, flat: &'a [f64]) -> Self {
        let o = offsets(hidden, input);
        let w = hidden * (hidden + input);
        GruView {
            hidden,
            input,
            w_z: &flat[o.w_z..o.w_z + w],
            b_z: &flat[o.b_z..o.b_z + hidden],
            w_r: &flat[o.w_r..o.w_r + w],
            b_r: &flat[o.b_r..o.b_r + hidden],
            w_c: &flat[o.w_c..o.w_c + w],
            b_c: &flat[o.b_c..o.b_c + hidden],
        }
    }

    fn of(p: &'a GruParams) -> Self {
        GruView {
            hidden: p.hidden,
            input: p.input,
            w_z: &p.w_z,
            b_z: &p.b_z,
            w_r: &p.w_r,
            b_r: &p.b_r,
            w_c: &p.w_c,
            b_c: &p.b_c,
        }
    }

    fn step(&self, h_prev: &[f64], x: &[f64], c: &mut StepCache) {
        let (hn, cols) = (self.hidden, self.hidden + self.input);
        c.h_prev.copy_from_slice(h_prev);
        c.x.copy_from_slice(x);
        for i in 0..hn {
            let wz = &self.w_z[i * cols..(i + 1) * cols];
            let wr = &self.w_r[i * cols..(i + 1) * cols];
            let mut az = self.b_z[i];
            let mut ar = self.b_r[i];
            for j in 0..hn {
                az += wz[j] * h_prev[j];
                ar += wr[j] * h_prev[j];
            }
            for j in 0..self.input {
                az += wz[hn + j] * x[j];
                ar += wr[hn + j] * x[j];
            }
            c.z[i] = sigmoid(az);
            c.r[i] = sigmoid(ar);
        }
        for j in 0..hn {
            c.rh[j] = c.r[j] * h_prev[j];
        }
        for i in 0..hn {
            let wc = &self.w_c[i * cols..(i + 1) * cols];
            let mut ac = self.b_c[i];
            for j in 0..hn {
                ac += wc[j] * c.rh[j];
            }
            for j in 0..self.input {
                ac += wc[hn + j] * x[j];
            }
            c.cand[i] = ac.tanh();
            c.h[i] = (1.0 - c.z[i]) * h_prev[i] + c.z[i] * c.cand[i];
        }
    }

    /// Backpropagates `dh` through one step, accumulating parameter gradients
    /// into `grad` (flat layout) and writing the gradient w.r.t. `h_prev`.
    fn step_backward(&self, c: &StepCache, dh: &[f64], grad: &mut [f64], dh_prev: &mut [f64], tmp: &mut StepGrad) {
        let (hn, ni) = (self.hidden, self.input);
        let cols = hn + ni;
        let o = offsets(hn, ni);
        for i in 0..hn {
            let dz = dh[i] * (c.cand[i] - c.h_prev[i]);
            let dcand = dh[i] * c.z[i];
            dh_prev[i] = dh[i] * (1.0 - c.z[i]);
            tmp.dac[i] = dcand * (1.0 - c.cand[i] * c.cand[i]);
            tmp.daz[i] = dz * c.z[i] * (1.0 - c.z[i]);
        }
        tmp.drh.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..hn {
            let dac = tmp.dac[i];
            let daz = tmp.daz[i];
            let wc = &self.w_c[i * cols..(i + 1) * cols];
            let wz = &self.w_z[i * cols..(i + 1) * cols];
            let gwc = o.w_c + i * cols;
            let gwz = o.w_z + i * cols;
            for j in 0..hn {
                grad[gwc + j] += dac * c.rh[j];
                tmp.drh[j] += wc[j] * dac;
                grad[gwz + j] += daz * c.h_prev[j];
                dh_prev[j] += wz[j] * daz;
            }
            for j in 0..ni {
                grad[gwc + hn + j] += dac * c.x[j];
                grad[gwz + hn + j] += daz * c.x[j];
            }
            grad[o.b_c + i] += dac;
            grad[o.b_z + i] += daz;
        }
        for j in 0..hn {
            dh_prev[j] += tmp.drh[j] * c.r[j];
            let dr = tmp.drh[j] * c.h_prev[j];
            tmp.dar[j] = dr * c.r[j] * (1.0 - c.r[j]);
        }
        for i in 0..hn {
            let dar = tmp.dar[i];
            let wr = &self.w_r[i * cols..(i + 1) * cols];
            let gwr = o.w_r + i * cols;
            for j in 0..hn {
                grad[gwr + j] += dar * c.h_prev[j];
                dh_prev[j] += wr[j] * dar;
            }
            for j in 0..ni {
                grad[gwr + hn + j] += dar * c.x[j];
            }
            grad[o.b_r + i] += dar;
        }
    }
}

#[derive(Clone)]
struct StepCache {
    h_prev: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    cand: Vec<f64>,
    h: Vec<f64>,
}

impl StepCache {
    fn new(hidden: usize, input: usize) -> Self {
        StepCache {
            h_prev: vec![0.0; hidden],
            x: vec![0.0; input],
            z: vec![0.0; hidden],
            r: vec![0.0; hidden],
            rh: vec![0.0; hidden],
            cand: vec![0.0; hidden],
            h: vec![0.0; hidden],
        }
    }
}

struct StepGrad {
    dac: Vec<f64>,
    daz: Vec<f64>,
    dar: Vec<f64>,
    drh: Vec<f64>,
}

impl StepGrad {
    fn new(hidden: usize) -> Self {
        StepGrad {
            dac: vec![0.0; hidden],
            daz: vec![0.0; hidden],
            dar: vec![0.0; hidden],
            drh: vec![0.0; hidden],
        }
    }
}

thread_local! {
    /// Per-thread step caches for the forward and backward passes.
    static SCRATCH: std::cell::RefCell<(Vec<StepCache>, Vec<StepCache>)> = const { std::cell::RefCell::new((Vec::new(), Vec::new())) };
}

fn ensure_caches(caches: &mut Vec<StepCache>, hidden: usize, len: usize) {
    if caches.len() != len || caches.first().is_some_and(|c| c.h.len() != hidden || c.x.len() != 1) {
        *caches = vec![StepCache::new(hidden, 1); len];
    }
}

/// Final state of a GRU run over `seq` (scalars) from a zero state.
fn final_state<I: Iterator<Item = f64>>(view: &GruView<'_>, seq: I) -> Vec<f64> {
    let mut h = vec![0.0; view.hidden];
    let mut c = StepCache::new(view.hidden, 1);
    for x in seq {
        view.step(&h, &[x], &mut c);
        h.copy_from_slice(&c.h);
    }
    h
}

/// Runs a GRU over `seq` (scalars) from a zero state, filling `caches`.
fn run_sequence<I: Iterator<Item = f64>>(view: &GruView<'_>, seq: I, caches: &mut [StepCache]) -> Vec<f64> {
    let mut h = vec![0.0; view.hidden];
    for (c, x) in caches.iter_mut().zip(seq) {
        view.step(&h, &[x], c);
        h.copy_from_slice(&c.h);
    }
    h
}

fn backprop_sequence(view: &GruView<'_>, caches: &[StepCache], dh_last: &[f64], grad: &mut [f64]) {
    let hn = view.hidden;
    let mut dh = dh_last.to_vec();
    let mut dh_prev = vec![0.0; hn];
    let mut tmp = StepGrad::new(hn);
    for c in caches.iter().rev() {
        view.step_backward(c, &dh, grad, &mut dh_prev, &mut tmp);
        std::mem::swap(&mut dh, &mut dh_prev);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiGruParams {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for BiGruParams {
    fn default() -> Self {
        BiGruParams {
            hidden: 16,
            epochs: 10,
            lr: 0.1,
            batch_size: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiGru {
    pub params: BiGruParams,
    pub seq_len: usize,
    pub forward: GruParams,
    pub backward: GruParams,
    /// Acts on `[h_forward, h_backward]`.
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

/// Flat layout `[forward GRU, backward GRU, head_w, head_b]`.
struct BiGruLoss {
    hidden: usize,
    seq_len: usize,
}

impl BiGruLoss {
    fn gru_len(&self) -> usize {
        GruParams::n_params(self.hidden, 1)
    }

    fn logit_and_states(&self, p: &[f64], x: &[f64], fc: &mut [StepCache], bc: &mut [StepCache]) -> (f64, Vec<f64>, Vec<f64>) {
        let g = self.gru_len();
        let fwd = GruView::new(self.hidden, 1, &p[..g]);
        let bwd = GruView::new(self.hidden, 1, &p[g..2 * g]);
        let hf = run_sequence(&fwd, x.iter().copied(), fc);
        let hb = run_sequence(&bwd, x.iter().rev().copied(), bc);
        let head = &p[2 * g..];
        let h = self.hidden;
        let logit = head[2 * h] + head[..h].iter().zip(&hf).map(|(a, b)| a * b).sum::<f64>()
            + head[h..2 * h].iter().zip(&hb).map(|(a, b)| a * b).sum::<f64>();
        (logit, hf, hb)
    }
}

impl SampleLoss for BiGruLoss {
    fn n_params(&self) -> usize {
        2 * self.gru_len() + 2 * self.hidden + 1
    }

    fn sample_loss_grad(&self, p: &[f64], x: &[f64], y: u8, grad: &mut [f64]) -> f64 {
        SCRATCH.with(|cell| {
            let (fc, bc) = &mut *cell.borrow_mut();
            ensure_caches(fc, self.hidden, self.seq_len);
            ensure_caches(bc, self.hidden, self.seq_len);
            self.sample_loss_grad_with(p, x, y, grad, fc, bc)
        })
    }
}

impl BiGruLoss {
    fn sample_loss_grad_with(
        &self,
        p: &[f64],
        x: &[f64],
        y: u8,
        grad: &mut [f64],
        fc: &mut [StepCache],
        bc: &mut [StepCache],
    ) -> f64 {
        let (logit, hf, hb) = self.logit_and_states(p, x, fc, bc);
        let y = f64::from(y);
        let dlogit = sigmoid(logit) - y;
        let g = self.gru_len();
        let h = self.hidden;
        let head = &p[2 * g..];
        let dhf: Vec<f64> = head[..h].iter().map(|w| dlogit * w).collect();
        let dhb: Vec<f64> = head[h..2 * h].iter().map(|w| dlogit * w).collect();
        {
            let ghead = &mut grad[2 * g..];
            for j in 0..h {
                ghead[j] += dlogit * hf[j];
                ghead[h + j] += dlogit * hb[j];
            }
            ghead[2 * h] += dlogit;
        }
        let (gf, rest) = grad.split_at_mut(g);
        let gb = &mut rest[..g];
        backprop_sequence(&GruView::new(h, 1, &p[..g]), fc, &dhf, gf);
        backprop_sequence(&GruView::new(h, 1, &p[g..2 * g]), bc, &dhb, gb);
        bce_with_logit(logit, y)
    }
}

impl BiGru {
    fn loss(&self) -> BiGruLoss {
        BiGruLoss {
            hidden: self.params.hidden,
            seq_len: self.seq_len,
        }
    }

    /// Final forward and backward hidden states for one row.
    pub fn final_states(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hf = final_state(&GruView::of(&self.forward), x.iter().copied());
        let hb = final_state(&GruView::of(&self.backward), x.iter().rev().copied());
        (hf, hb)
    }

    /// Random Glorot-initialized network with zero biases.
    pub fn init(params: &BiGruParams, seq_len: usize, seed: u64) -> BiGru {
        let h = params.hidden;
        let mut rng = rng_for(seed, "bigru_init", 0);
        let gru = |rng: &mut crate::rng::Rng| {
            let mut g = GruParams::zeros(h, 1);
            g.w_z = glorot(rng, h * (h + 1), h + 1, h);
            g.w_r = glorot(rng, h * (h + 1), h + 1, h);
            g.w_c = glorot(rng, h * (h + 1), h + 1, h);
            g
        };
        let forward = gru(&mut rng);
        let backward = gru(&mut rng);
        let head_w = glorot(&mut rng, 2 * h, 2 * h, 1);
        BiGru {
            params: params.clone(),
            seq_len,
            forward,
            backward,
            head_w,
            head_b: 0.0,
        }
    }
}

impl Scorer for BiGru {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        let (hf, hb) = self.final_states(x);
        let h = self.params.hidden;
        let logit = self.head_b
            + self.head_w[..h].iter().zip(&hf).map(|(a, b)| a * b).sum::<f64>()
            + self.head_w[h..].iter().zip(&hb).map(|(a, b)| a * b).sum::<f64>();
        sigmoid(logit)
    }
}

impl Differentiable for BiGru {
    fn parameters(&self) -> Vec<f64> {
        let mut p = self.forward.flatten();
        p.extend(self.backward.flatten());
        p.extend_from_slice(&self.head_w);
        p.push(self.head_b);
        p
    }

    fn set_parameters(&mut self, p: &[f64]) {
        let h = self.params.hidden;
        let g = GruParams::n_params(h, 1);
        self.forward = GruParams::from_flat(h, 1, &p[..g]);
        self.backward = GruParams::from_flat(h, 1, &p[g..2 * g]);
        self.head_w.copy_from_slice(&p[2 * g..2 * g + 2 * h]);
        self.head_b = p[2 * g + 2 * h];
    }

    fn objective_and_gradient(&self, ds: &Dataset) -> (f64, Vec<f64>) {
        full_objective(&self.loss(), &self.parameters(), ds)
    }
}

pub fn train_bigru(ds: &Dataset, params: &BiGruParams, seed: u64) -> Result<BiGru> {
    ds.ensure_trainable()?;
    if params.hidden == 0 {
        return Err(Error::Config("bigru hidden size must be positive".into()));
    }
    let mut model = BiGru::init(params, ds.n_cols(), seed);
    let mut p = model.parameters();
    minibatch_descent(
        &model.loss(),
        &mut p,
        ds,
        SgdSettings {
            epochs: params.epochs,
            lr: params.lr,
            batch_size: params.batch_size,
            seed,
        },
    )?;
    model.set_parameters(&p);
    Ok(model)
}
