//! Dense distributional-regression network with hand-written backpropagation.

use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scaler::Scaler;
use super::{FeatureVector, N_FEATURES};
use crate::dist::{Bounds, CensoredNormal, SCALE_FLOOR};

pub const EMBEDDING_DIM: usize = 2;
pub const HOURS: usize = 24;

/// Activation producing the scale parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleHead {
    /// `softplus(x)`
    Softplus,
    /// `relu(x) + 1e-3`
    ReluOffset,
}

impl ScaleHead {
    fn apply(self, x: f64) -> f64 {
        match self {
            ScaleHead::Softplus => softplus(x),
            ScaleHead::ReluOffset => x.max(0.0) + SCALE_FLOOR,
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            ScaleHead::Softplus => sigmoid(x),
            ScaleHead::ReluOffset => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Trainable weights. Dense layers store `(fan_in, fan_out)` matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
    /// `24 x 2` hour-of-day embedding table.
    pub embedding: Option<Array2<f64>>,
}

impl Params {
    pub fn input_dim(with_embedding: bool) -> usize {
        N_FEATURES + if with_embedding { EMBEDDING_DIM } else { 0 }
    }

    pub fn zeros(hidden: usize, with_embedding: bool) -> Self {
        let d = Self::input_dim(with_embedding);
        Params {
            w1: Array2::zeros((d, hidden)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((hidden, hidden)),
            b2: Array1::zeros(hidden),
            w3: Array2::zeros((hidden, 2)),
            b3: Array1::zeros(2),
            embedding: with_embedding.then(|| Array2::zeros((HOURS, EMBEDDING_DIM))),
        }
    }

    /// He-uniform hidden layers, Glorot-uniform output layer, small uniform embedding.
    pub fn init<R: Rng>(hidden: usize, with_embedding: bool, rng: &mut R) -> Self {
        let mut p = Self::zeros(hidden, with_embedding);
        let d = p.w1.nrows();
        let he1 = (6.0 / d as f64).sqrt();
        let he2 = (6.0 / hidden as f64).sqrt();
        let glorot = (6.0 / (hidden + 2) as f64).sqrt();
        p.w1.mapv_inplace(|_| rng.random_range(-he1..he1));
        p.w2.mapv_inplace(|_| rng.random_range(-he2..he2));
        p.w3.mapv_inplace(|_| rng.random_range(-glorot..glorot));
        if let Some(e) = p.embedding.as_mut() {
            e.mapv_inplace(|_| rng.random_range(-0.05..0.05));
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.hidden(), self.embedding.is_some())
    }

    /// All parameter tensors as flat slices, in a fixed order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![
            self.w1.as_slice().unwrap(),
            self.b1.as_slice().unwrap(),
            self.w2.as_slice().unwrap(),
            self.b2.as_slice().unwrap(),
            self.w3.as_slice().unwrap(),
            self.b3.as_slice().unwrap(),
        ];
        if let Some(e) = &self.embedding {
            v.push(e.as_slice().unwrap());
        }
        v
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![
            self.w1.as_slice_mut().unwrap(),
            self.b1.as_slice_mut().unwrap(),
            self.w2.as_slice_mut().unwrap(),
            self.b2.as_slice_mut().unwrap(),
            self.w3.as_slice_mut().unwrap(),
            self.b3.as_slice_mut().unwrap(),
        ];
        if let Some(e) = self.embedding.as_mut() {
            v.push(e.as_slice_mut().unwrap());
        }
        v
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Standardized inputs for a batch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub x: Array2<f64>,
    pub hours: Vec<u8>,
}

impl Batch {
    pub fn new(scaler: &Scaler, rows: &[&FeatureVector]) -> Self {
        let mut x = Array2::zeros((rows.len(), N_FEATURES));
        for (i, r) in rows.iter().enumerate() {
            let z = scaler.transform(r);
            for k in 0..N_FEATURES {
                x[[i, k]] = z[k];
            }
        }
        Batch {
            x,
            hours: rows.iter().map(|r| r.hour).collect(),
        }
    }

    pub fn select(&self, idx: &[usize]) -> Batch {
        Batch {
            x: self.x.select(Axis(0), idx),
            hours: idx.iter().map(|&i| self.hours[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }
}

/// Intermediate activations kept for the backward pass.
struct Activations {
    input: Array2<f64>,
    h1: Array2<f64>,
    h2: Array2<f64>,
    out: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub params: Params,
    pub scaler: Scaler,
    pub head: ScaleHead,
    pub bounds: Bounds,
}

impl Network {
    fn activations(&self, batch: &Batch) -> Activations {
        let p = &self.params;
        let input = match &p.embedding {
            None => batch.x.clone(),
            Some(table) => {
                let n = batch.len();
                let mut input = Array2::zeros((n, N_FEATURES + EMBEDDING_DIM));
                input.slice_mut(s![.., ..N_FEATURES]).assign(&batch.x);
                for (i, &h) in batch.hours.iter().enumerate() {
                    input
                        .slice_mut(s![i, N_FEATURES..])
                        .assign(&table.row(usize::from(h % 24)));
                }
                input
            }
        };
        let mut h1 = input.dot(&p.w1) + &p.b1;
        h1.mapv_inplace(|v| v.max(0.0));
        let mut h2 = h1.dot(&p.w2) + &p.b2;
        h2.mapv_inplace(|v| v.max(0.0));
        let out = h2.dot(&p.w3) + &p.b3;
        Activations { input, h1, h2, out }
    }

    /// Raw `(mu, sigma)` per row, before the distribution's scale floor.
    pub fn parameters(&self, batch: &Batch) -> Vec<(f64, f64)> {
        let a = self.activations(batch);
        a.out
            .rows()
            .into_iter()
            .map(|r| (r[0], self.head.apply(r[1])))
            .collect()
    }

    pub fn predict_batch(&self, batch: &Batch) -> Vec<CensoredNormal> {
        self.parameters(batch)
            .into_iter()
            .map(|(mu, sigma)| CensoredNormal::new(mu, sigma, self.bounds))
            .collect()
    }

    pub fn forward(&self, x: &FeatureVector) -> CensoredNormal {
        let batch = Batch::new(&self.scaler, &[x]);
        self.predict_batch(&batch)[0]
    }

    pub fn mean_crps(&self, batch: &Batch, y: &[f64]) -> f64 {
        let d = self.predict_batch(batch);
        d.iter().zip(y).map(|(d, &y)| d.crps(y)).sum::<f64>() / y.len() as f64
    }

    /// Mean CRPS over the batch and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, batch: &Batch, y: &[f64]) -> (f64, Params) {
        let p = &self.params;
        let a = self.activations(batch);
        let n = batch.len() as f64;
        let mut d_out = Array2::zeros((batch.len(), 2));
        let mut loss = 0.0;
        for (i, row) in a.out.rows().into_iter().enumerate() {
            let sigma = self.head.apply(row[1]);
            let dist = CensoredNormal::new(row[0], sigma, self.bounds);
            let (crps, d_mu, d_sigma) = dist.crps_with_gradient(y[i]);
            loss += crps;
            d_out[[i, 0]] = d_mu / n;
            // the distribution floors its scale; below the floor the loss is flat in sigma
            if sigma >= SCALE_FLOOR {
                d_out[[i, 1]] = d_sigma * self.head.derivative(row[1]) / n;
            }
        }

        let mut g = p.zeros_like();
        g.w3 = a.h2.t().dot(&d_out);
        g.b3 = d_out.sum_axis(Axis(0));
        let mut d_h2 = d_out.dot(&p.w3.t());
        d_h2.zip_mut_with(&a.h2, |d, &h| {
            if h <= 0.0 {
                *d = 0.0
            }
        });
        g.w2 = a.h1.t().dot(&d_h2);
        g.b2 = d_h2.sum_axis(Axis(0));
        let mut d_h1 = d_h2.dot(&p.w2.t());
        d_h1.zip_mut_with(&a.h1, |d, &h| {
            if h <= 0.0 {
                *d = 0.0
            }
        });
        g.w1 = a.input.t().dot(&d_h1);
        g.b1 = d_h1.sum_axis(Axis(0));
        if let Some(ge) = g.embedding.as_mut() {
            let d_in = d_h1.dot(&p.w1.t());
            for (i, &h) in batch.hours.iter().enumerate() {
                let mut row = ge.row_mut(usize::from(h % 24));
                row += &d_in.slice(s![i, N_FEATURES..]);
            }
        }
        (loss / n, g)
    }

    /// Pre-activations of both hidden layers; used to steer clear of ReLU kinks in tests.
    pub fn min_abs_preactivation(&self, batch: &Batch) -> f64 {
        let p = &self.params;
        let a = self.activations(batch);
        let z1 = a.input.dot(&p.w1) + &p.b1;
        let z2 = a.h1.dot(&p.w2) + &p.b2;
        z1.iter()
            .chain(z2.iter())
            .chain(a.out.column(1).iter())
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}
