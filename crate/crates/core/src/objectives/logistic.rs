use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, ZoqError};
use crate::objective::{check_dim, Objective};
use crate::rng::SeededRng;

/// `log(1 + exp(t))` without overflow; exact branches beyond |t| > 30.
pub fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t + (-t).exp()
    } else if t < -30.0 {
        t.exp()
    } else {
        t.exp().ln_1p()
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Synthetic features with labels `sign(a^T w_true)`, ties mapped to +1.
pub fn synthetic_classification(
    rows: usize,
    dim: usize,
    w_true: &DVector<f64>,
    rng: &mut SeededRng,
) -> (DMatrix<f64>, Vec<f64>) {
    let mut feats = DMatrix::zeros(rows, dim);
    let mut row = vec![0.0; dim];
    for i in 0..rows {
        rng.fill_normal(&mut row);
        for (j, v) in row.iter().enumerate() {
            feats[(i, j)] = *v;
        }
    }
    let scores = &feats * w_true;
    let labels = scores.iter().map(|s| if *s >= 0.0 { 1.0 } else { -1.0 }).collect();
    (feats, labels)
}

/// Mean logistic loss `1/m sum log(1 + exp(-y_i a_i^T x))`.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    features: DMatrix<f64>,
    labels: Vec<f64>,
    l: f64,
}

impl LogisticObjective {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        let m = features.nrows();
        if m < 1 {
            return Err(ZoqError::InvalidArgument("logistic needs m >= 1 examples".into()));
        }
        if labels.len() != m {
            return Err(ZoqError::InvalidArgument(format!(
                "{} labels for {m} feature rows",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(ZoqError::InvalidArgument(format!("label {bad} is not +1 or -1")));
        }
        let l = gram_lambda_max(&features)? / (4.0 * m as f64);
        Ok(Self {
            features,
            labels,
            l,
        })
    }

    /// `m` standard normal examples in dimension `dim` labelled by a
    /// freshly drawn ground-truth weight vector.
    pub fn random(dim: usize, m: usize, rng: &mut SeededRng) -> Result<Self> {
        if dim < 1 || m < 1 {
            return Err(ZoqError::InvalidArgument(format!(
                "logistic needs dim >= 1 and m >= 1, got dim={dim}, m={m}"
            )));
        }
        let mut w = vec![0.0; dim];
        rng.fill_normal(&mut w);
        let (feats, labels) = synthetic_classification(m, dim, &DVector::from_vec(w), rng);
        Self::new(feats, labels)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Low-loss comparison point from `iterations` steps of exact gradient
    /// descent with step `1/L` started at the origin.
    ///
    /// Separable data has no finite minimizer, so convergence bounds are
    /// stated against this point instead of `x*`.
    pub fn reference_point(&self, iterations: usize) -> Result<(DVector<f64>, f64)> {
        let mut x = DVector::zeros(self.dim());
        let step = 1.0 / self.l;
        for _ in 0..iterations {
            let g = self.gradient(&x)?;
            x.axpy(-step, &g, 1.0);
        }
        let f = self.value(&x)?;
        Ok((x, f))
    }
}

pub(crate) fn gram_lambda_max(features: &DMatrix<f64>) -> Result<f64> {
    let gram = features.transpose() * features;
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 10_000)
        .ok_or_else(|| ZoqError::Numerical("eigensolver failed on feature Gram matrix".into()))?;
    Ok(eig.eigenvalues.max())
}

impl Objective for LogisticObjective {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(x, self.dim())?;
        let z = &self.features * x;
        let total: f64 = z
            .iter()
            .zip(&self.labels)
            .map(|(zi, y)| softplus(-y * zi))
            .sum();
        Ok(total / self.labels.len() as f64)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(x, self.dim())?;
        let z = &self.features * x;
        let m = self.labels.len() as f64;
        let weights = DVector::from_iterator(
            z.len(),
            z.iter()
                .zip(&self.labels)
                .map(|(zi, y)| -y * sigmoid(-y * zi) / m),
        );
        Ok(self.features.tr_mul(&weights))
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}
