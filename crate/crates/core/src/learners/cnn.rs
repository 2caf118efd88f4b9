//! One-dimensional convolutional classifier over the feature vector:
//! convolution, ReLU, width-2 max-pooling, then a dense sigmoid head.

use serde::{Deserialize, Serialize};

use super::nn::{bce_with_logit, full_objective, glorot, minibatch_descent, sigmoid, Differentiable, SampleLoss, SgdSettings};
use super::Scorer;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnParams {
    pub filters: usize,
    pub kernel: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for CnnParams {
    fn default() -> Self {
        CnnParams {
            filters: 8,
            kernel: 3,
            epochs: 10,
            lr: 0.05,
            batch_size: 64,
        }
    }
}

/// Length of the convolution output before pooling.
pub fn conv_len(d: usize, kernel: usize) -> usize {
    (d + 1).saturating_sub(kernel)
}

/// Length after width-2, stride-2 max-pooling.
pub fn pooled_len(d: usize, kernel: usize) -> usize {
    conv_len(d, kernel) / 2
}

/// Valid cross-correlation of `x` with each filter (row-major `filters x kernel`).
pub fn conv1d(x: &[f64], kernels: &[f64], bias: &[f64], kernel: usize) -> Vec<f64> {
    let l = conv_len(x.len(), kernel);
    let mut out = Vec::with_capacity(bias.len() * l);
    for (f, b) in bias.iter().enumerate() {
        let w = &kernels[f * kernel..(f + 1) * kernel];
        for j in 0..l {
            out.push(b + w.iter().zip(&x[j..j + kernel]).map(|(a, v)| a * v).sum::<f64>());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cnn1d {
    pub params: CnnParams,
    pub input_len: usize,
    pub kernels: Vec<f64>,
    pub conv_bias: Vec<f64>,
    /// Acts on the pooled maps flattened filter-major.
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

/// Flat layout `[kernels, conv_bias, head_w, head_b]`.
struct CnnLoss {
    filters: usize,
    kernel: usize,
    input_len: usize,
}

impl CnnLoss {
    fn pooled(&self) -> usize {
        pooled_len(self.input_len, self.kernel)
    }

    /// Pooled activations and the conv position each one came from.
    fn forward(&self, p: &[f64], x: &[f64]) -> (f64, Vec<f64>, Vec<usize>) {
        let (nf, k) = (self.filters, self.kernel);
        let kernels = &p[..nf * k];
        let bias = &p[nf * k..nf * k + nf];
        let head = &p[nf * k + nf..];
        let conv = conv1d(x, kernels, bias, k);
        let l = conv_len(self.input_len, k);
        let pl = self.pooled();
        let mut pooled = Vec::with_capacity(nf * pl);
        let mut argmax = Vec::with_capacity(nf * pl);
        for f in 0..nf {
            for q in 0..pl {
                let a = f * l + 2 * q;
                let (va, vb) = (conv[a].max(0.0), conv[a + 1].max(0.0));
                if vb > va {
                    pooled.push(vb);
                    argmax.push(a + 1);
                } else {
                    pooled.push(va);
                    argmax.push(a);
                }
            }
        }
        let logit = head[nf * pl] + head[..nf * pl].iter().zip(&pooled).map(|(w, v)| w * v).sum::<f64>();
        (logit, pooled, argmax)
    }
}

impl SampleLoss for CnnLoss {
    fn n_params(&self) -> usize {
        self.filters * self.kernel + self.filters + self.filters * self.pooled() + 1
    }

    fn sample_loss_grad(&self, p: &[f64], x: &[f64], y: u8, grad: &mut [f64]) -> f64 {
        let (nf, k) = (self.filters, self.kernel);
        let l = conv_len(self.input_len, k);
        let pl = self.pooled();
        let (logit, pooled, argmax) = self.forward(p, x);
        let y = f64::from(y);
        let dlogit = sigmoid(logit) - y;
        let head_off = nf * k + nf;
        for (idx, &v) in pooled.iter().enumerate() {
            grad[head_off + idx] += dlogit * v;
        }
        grad[head_off + nf * pl] += dlogit;
        for (idx, &v) in pooled.iter().enumerate() {
            // ReLU passes gradient only where the pooled activation is positive.
            if v <= 0.0 {
                continue;
            }
            let dconv = dlogit * p[head_off + idx];
            let pos = argmax[idx];
            let (f, j) = (pos / l, pos % l);
            for t in 0..k {
                grad[f * k + t] += dconv * x[j + t];
            }
            grad[nf * k + f] += dconv;
        }
        bce_with_logit(logit, y)
    }
}

impl Cnn1d {
    fn loss(&self) -> CnnLoss {
        CnnLoss {
            filters: self.params.filters,
            kernel: self.params.kernel,
            input_len: self.input_len,
        }
    }

    pub fn init(params: &CnnParams, input_len: usize, seed: u64) -> Result<Cnn1d> {
        if params.filters == 0 || params.kernel == 0 {
            return Err(Error::Config("cnn1d needs at least one filter of width >= 1".into()));
        }
        if input_len < params.kernel {
            return Err(Error::Shape(format!(
                "cnn1d kernel {} is wider than the {} input features",
                params.kernel, input_len
            )));
        }
        let pl = pooled_len(input_len, params.kernel);
        if pl == 0 {
            return Err(Error::Shape(format!(
                "cnn1d with kernel {} on {} features leaves nothing to pool",
                params.kernel, input_len
            )));
        }
        let mut rng = rng_for(seed, "cnn_init", 0);
        let (nf, k) = (params.filters, params.kernel);
        Ok(Cnn1d {
            params: params.clone(),
            input_len,
            kernels: glorot(&mut rng, nf * k, k, nf),
            conv_bias: vec![0.0; nf],
            head_w: glorot(&mut rng, nf * pl, nf * pl, 1),
            head_b: 0.0,
        })
    }
}

impl Scorer for Cnn1d {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        let (logit, _, _) = self.loss().forward(&self.parameters(), x);
        sigmoid(logit)
    }
}

impl Differentiable for Cnn1d {
    fn parameters(&self) -> Vec<f64> {
        let mut p = self.kernels.clone();
        p.extend_from_slice(&self.conv_bias);
        p.extend_from_slice(&self.head_w);
        p.push(self.head_b);
        p
    }

    fn set_parameters(&mut self, p: &[f64]) {
        let (a, b, c) = (self.kernels.len(), self.conv_bias.len(), self.head_w.len());
        self.kernels.copy_from_slice(&p[..a]);
        self.conv_bias.copy_from_slice(&p[a..a + b]);
        self.head_w.copy_from_slice(&p[a + b..a + b + c]);
        self.head_b = p[a + b + c];
    }

    fn objective_and_gradient(&self, ds: &Dataset) -> (f64, Vec<f64>) {
        full_objective(&self.loss(), &self.parameters(), ds)
    }
}

pub fn train_cnn1d(ds: &Dataset, params: &CnnParams, seed: u64) -> Result<Cnn1d> {
    ds.ensure_trainable()?;
    let mut model = Cnn1d::init(params, ds.n_cols(), seed)?;
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
