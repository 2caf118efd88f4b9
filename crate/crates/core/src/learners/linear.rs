//! L2-regularized logistic regression and a hinge-loss linear SVM with a
//! fitted logistic link on its margins.

use serde::{Deserialize, Serialize};

use super::nn::{bce_with_logit, full_objective, minibatch_descent, sigmoid, Differentiable, SampleLoss, SgdSettings};
use super::Scorer;
use crate::data::Dataset;
use crate::error::{Error, Result};

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
    pub batch_size: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            epochs: 50,
            lr: 0.1,
            l2: 1e-4,
            batch_size: 64,
        }
    }
}

/// Parameters are `[w_1 .. w_d, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub params: LogisticParams,
    pub weights: Vec<f64>,
    pub bias: f64,
}

struct LogisticLoss {
    d: usize,
    l2: f64,
}

impl SampleLoss for LogisticLoss {
    fn n_params(&self) -> usize {
        self.d + 1
    }

    fn sample_loss_grad(&self, p: &[f64], x: &[f64], y: u8, grad: &mut [f64]) -> f64 {
        let z = dot(&p[..self.d], x) + p[self.d];
        let y = f64::from(y);
        let dz = sigmoid(z) - y;
        for (g, xi) in grad[..self.d].iter_mut().zip(x) {
            *g += dz * xi;
        }
        grad[self.d] += dz;
        bce_with_logit(z, y)
    }

    fn regularize(&self, p: &[f64], grad: &mut [f64]) -> f64 {
        for (g, w) in grad[..self.d].iter_mut().zip(&p[..self.d]) {
            *g += self.l2 * w;
        }
        0.5 * self.l2 * p[..self.d].iter().map(|w| w * w).sum::<f64>()
    }
}

impl LogisticModel {
    fn loss(&self) -> LogisticLoss {
        LogisticLoss {
            d: self.weights.len(),
            l2: self.params.l2,
        }
    }
}

impl Scorer for LogisticModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }
}

impl Differentiable for LogisticModel {
    fn parameters(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    fn set_parameters(&mut self, p: &[f64]) {
        let d = self.weights.len();
        self.weights.copy_from_slice(&p[..d]);
        self.bias = p[d];
    }

    fn objective_and_gradient(&self, ds: &Dataset) -> (f64, Vec<f64>) {
        full_objective(&self.loss(), &self.parameters(), ds)
    }
}

/// Mini-batch gradient descent from zero weights.
pub fn train_logistic(ds: &Dataset, params: &LogisticParams, seed: u64) -> Result<LogisticModel> {
    ds.ensure_trainable()?;
    let mut model = LogisticModel {
        params: params.clone(),
        weights: vec![0.0; ds.n_cols()],
        bias: 0.0,
    };
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub epochs: usize,
    pub lr: f64,
    /// Weight of the `reg/2 * |w|^2` term.
    pub reg: f64,
    pub batch_size: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            epochs: 50,
            lr: 0.01,
            reg: 1e-3,
            batch_size: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub params: SvmParams,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Score is `sigmoid(link_scale * margin + link_offset)`.
    pub link_scale: f64,
    pub link_offset: f64,
}

struct HingeLoss {
    d: usize,
    reg: f64,
}

impl SampleLoss for HingeLoss {
    fn n_params(&self) -> usize {
        self.d + 1
    }

    fn sample_loss_grad(&self, p: &[f64], x: &[f64], y: u8, grad: &mut [f64]) -> f64 {
        let s = if y == 1 { 1.0 } else { -1.0 };
        let m = s * (dot(&p[..self.d], x) + p[self.d]);
        if m < 1.0 {
            for (g, xi) in grad[..self.d].iter_mut().zip(x) {
                *g -= s * xi;
            }
            grad[self.d] -= s;
            1.0 - m
        } else {
            0.0
        }
    }

    fn regularize(&self, p: &[f64], grad: &mut [f64]) -> f64 {
        for (g, w) in grad[..self.d].iter_mut().zip(&p[..self.d]) {
            *g += self.reg * w;
        }
        0.5 * self.reg * p[..self.d].iter().map(|w| w * w).sum::<f64>()
    }
}

impl LinearSvm {
    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

impl Scorer for LinearSvm {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.link_scale * self.margin(x) + self.link_offset)
    }
}

/// Fits `sigmoid(a m + c)` to labels by Newton's method with a small ridge on
/// `a` so separable margins still give a finite link.
pub fn fit_logistic_link(margins: &[f64], labels: &[u8]) -> (f64, f64) {
    const RIDGE: f64 = 1e-3;
    let n = margins.len().max(1) as f64;
    let (mut a, mut c) = (1.0, 0.0);
    for _ in 0..100 {
        let (mut ga, mut gc, mut haa, mut hac, mut hcc) = (RIDGE * a, 0.0, RIDGE, 0.0, 0.0);
        for (&m, &y) in margins.iter().zip(labels) {
            let p = sigmoid(a * m + c);
            let r = (p - f64::from(y)) / n;
            let w = p * (1.0 - p) / n;
            ga += r * m;
            gc += r;
            haa += w * m * m;
            hac += w * m;
            hcc += w;
        }
        let det = haa * hcc - hac * hac;
        if det.abs() < 1e-300 {
            break;
        }
        let da = (hcc * ga - hac * gc) / det;
        let dc = (haa * gc - hac * ga) / det;
        a -= da;
        c -= dc;
        if da.abs() + dc.abs() < 1e-12 {
            break;
        }
    }
    (a, c)
}

pub fn train_linear_svm(ds: &Dataset, params: &SvmParams, seed: u64) -> Result<LinearSvm> {
    ds.ensure_trainable()?;
    let d = ds.n_cols();
    let loss = HingeLoss { d, reg: params.reg };
    let mut p = vec![0.0; d + 1];
    minibatch_descent(
        &loss,
        &mut p,
        ds,
        SgdSettings {
            epochs: params.epochs,
            lr: params.lr,
            batch_size: params.batch_size,
            seed,
        },
    )?;
    let mut model = LinearSvm {
        params: params.clone(),
        weights: p[..d].to_vec(),
        bias: p[d],
        link_scale: 1.0,
        link_offset: 0.0,
    };
    let margins: Vec<f64> = ds.rows().map(|x| model.margin(x)).collect();
    let (a, c) = fit_logistic_link(&margins, ds.labels());
    if !a.is_finite() || !c.is_finite() {
        return Err(Error::Divergence { epoch: params.epochs });
    }
    model.link_scale = a;
    model.link_offset = c;
    Ok(model)
}
