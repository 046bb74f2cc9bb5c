use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ZoqError};
use crate::objective::{check_dim, Objective, StochasticObjective};
use crate::objectives::logistic::{gram_lambda_max, sigmoid, softplus, synthetic_classification};
use crate::rng::SeededRng;

/// Pool size per dimension for the training distribution.
pub const POOL_PER_DIM: usize = 10;
/// Held-out evaluation set size per unit of batch size.
pub const EVAL_PER_BATCH: usize = 50;

const BATCH_STREAM: u64 = 0xba7c;

/// `f(x) = E[log(1 + exp(-y w^T x))] + rho/2 |x|^2` where the expectation
/// is the uniform distribution over a fixed synthetic pool.
///
/// A realization `F(x, xi)` is the regularized mean loss over a mini-batch
/// of `batch_size` pool indices drawn with replacement from the generator
/// seeded by the sample key.
#[derive(Debug, Clone)]
pub struct StochasticLogisticObjective {
    pool: DMatrix<f64>,
    pool_labels: Vec<f64>,
    eval: DMatrix<f64>,
    eval_labels: Vec<f64>,
    batch_size: usize,
    rho: f64,
    l: f64,
    x_star: DVector<f64>,
    f_star: f64,
    sigma2: f64,
}

impl StochasticLogisticObjective {
    pub fn random(dim: usize, batch_size: usize, rho: f64, rng: &mut SeededRng) -> Result<Self> {
        if dim < 1 || batch_size < 1 {
            return Err(ZoqError::InvalidArgument(format!(
                "stochastic logistic needs dim >= 1 and batch_size >= 1, got {dim}, {batch_size}"
            )));
        }
        let mut w = vec![0.0; dim];
        rng.fill_normal(&mut w);
        let w_true = DVector::from_vec(w);
        let (pool, pool_labels) = synthetic_classification(POOL_PER_DIM * dim, dim, &w_true, rng);
        let (eval, eval_labels) =
            synthetic_classification(EVAL_PER_BATCH * batch_size, dim, &w_true, rng);
        Self::from_data(pool, pool_labels, eval, eval_labels, batch_size, rho)
    }

    pub fn from_data(
        pool: DMatrix<f64>,
        pool_labels: Vec<f64>,
        eval: DMatrix<f64>,
        eval_labels: Vec<f64>,
        batch_size: usize,
        rho: f64,
    ) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(ZoqError::InvalidArgument(format!("rho must be > 0, got {rho}")));
        }
        if batch_size < 1 {
            return Err(ZoqError::InvalidArgument("batch_size must be >= 1".into()));
        }
        for (x, y, what) in [(&pool, &pool_labels, "pool"), (&eval, &eval_labels, "eval")] {
            if x.nrows() < 1 || x.nrows() != y.len() {
                return Err(ZoqError::InvalidArgument(format!(
                    "{what} set has {} rows and {} labels",
                    x.nrows(),
                    y.len()
                )));
            }
            if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
                return Err(ZoqError::InvalidArgument(format!("{what} labels must be +1 or -1")));
            }
        }
        if pool.ncols() != eval.ncols() {
            return Err(ZoqError::InvalidArgument("pool and eval dimensions differ".into()));
        }
        // Any batch drawn with replacement has Gram/(4b) bounded by the
        // largest single-row norm.
        let max_row = pool
            .row_iter()
            .map(|r| r.norm_squared())
            .fold(0.0f64, f64::max);
        let l = max_row / 4.0 + rho;
        let mut obj = Self {
            pool,
            pool_labels,
            eval,
            eval_labels,
            batch_size,
            rho,
            l,
            x_star: DVector::zeros(0),
            f_star: 0.0,
            sigma2: 0.0,
        };
        obj.solve_optimum(1e-8, 1_000_000)?;
        Ok(obj)
    }

    /// Gradient descent on the full-pool objective with step `1/L_pool`
    /// until the gradient norm drops below `tol`.
    fn solve_optimum(&mut self, tol: f64, max_iter: usize) -> Result<()> {
        let l_pool = gram_lambda_max(&self.pool)? / (4.0 * self.pool.nrows() as f64) + self.rho;
        let step = 1.0 / l_pool;
        let mut x = DVector::zeros(self.dim());
        let mut converged = false;
        for _ in 0..max_iter {
            let g = self.value_and_gradient_rows(&x, RowSet::Pool)?.1;
            if g.norm() < tol {
                converged = true;
                break;
            }
            x.axpy(-step, &g, 1.0);
        }
        if !converged {
            return Err(ZoqError::Numerical(format!(
                "optimum solve did not reach gradient norm {tol:e} in {max_iter} iterations"
            )));
        }
        self.f_star = self.value(&x)?;
        // sigma^2 = E_xi |grad F(x*, xi)|^2 = (1/b) * mean_i |grad l_i(x*) + rho x*|^2
        let z = &self.pool * &x;
        let n = self.pool.nrows() as f64;
        let mut acc = 0.0;
        for (i, (zi, y)) in z.iter().zip(&self.pool_labels).enumerate() {
            let c = -y * sigmoid(-y * zi);
            let gi = self.pool.row(i).transpose() * c + &x * self.rho;
            acc += gi.norm_squared();
        }
        self.sigma2 = acc / n / self.batch_size as f64;
        self.x_star = x;
        Ok(())
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn pool(&self) -> (&DMatrix<f64>, &[f64]) {
        (&self.pool, &self.pool_labels)
    }

    pub fn eval_set(&self) -> (&DMatrix<f64>, &[f64]) {
        (&self.eval, &self.eval_labels)
    }

    /// Pool indices of the mini-batch selected by `sample_key`.
    pub fn batch_indices(&self, sample_key: u64) -> Vec<usize> {
        let mut rng = SeededRng::new(sample_key, BATCH_STREAM);
        (0..self.batch_size)
            .map(|_| rng.index(self.pool.nrows()))
            .collect()
    }

    fn value_and_gradient_rows(&self, x: &DVector<f64>, rows: RowSet<'_>) -> Result<(f64, DVector<f64>)> {
        check_dim(x, self.dim())?;
        let (feats, labels) = match rows {
            RowSet::Pool => (&self.pool, &self.pool_labels),
            RowSet::Eval => (&self.eval, &self.eval_labels),
            RowSet::Batch(_) => (&self.pool, &self.pool_labels),
        };
        let mut loss = 0.0;
        let mut g = x * self.rho;
        match rows {
            RowSet::Batch(idx) => {
                let inv = 1.0 / idx.len() as f64;
                for &i in idx {
                    let row = feats.row(i);
                    let z = row.dot(&x.transpose());
                    let y = labels[i];
                    loss += softplus(-y * z);
                    g.axpy(-y * sigmoid(-y * z) * inv, &row.transpose(), 1.0);
                }
                loss *= inv;
            }
            _ => {
                let z = feats * x;
                let inv = 1.0 / labels.len() as f64;
                let w = DVector::from_iterator(
                    z.len(),
                    z.iter().zip(labels).map(|(zi, y)| {
                        loss += softplus(-y * zi);
                        -y * sigmoid(-y * zi) * inv
                    }),
                );
                loss *= inv;
                g += feats.tr_mul(&w);
            }
        }
        Ok((loss + 0.5 * self.rho * x.norm_squared(), g))
    }
}

enum RowSet<'a> {
    Pool,
    Eval,
    Batch(&'a [usize]),
}

impl Objective for StochasticLogisticObjective {
    fn dim(&self) -> usize {
        self.pool.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.value_and_gradient_rows(x, RowSet::Pool)?.0)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.value_and_gradient_rows(x, RowSet::Pool)?.1)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    /// Valid for every mini-batch realization, not just the mean.
    fn smoothness(&self) -> f64 {
        self.l
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(self.rho)
    }

    fn optimum(&self) -> Option<(DVector<f64>, f64)> {
        Some((self.x_star.clone(), self.f_star))
    }
}

impl StochasticObjective for StochasticLogisticObjective {
    fn sample_value(&self, x: &DVector<f64>, sample_key: u64) -> Result<f64> {
        let idx = self.batch_indices(sample_key);
        Ok(self.value_and_gradient_rows(x, RowSet::Batch(&idx))?.0)
    }

    fn sample_gradient(&self, x: &DVector<f64>, sample_key: u64) -> Result<DVector<f64>> {
        let idx = self.batch_indices(sample_key);
        Ok(self.value_and_gradient_rows(x, RowSet::Batch(&idx))?.1)
    }

    fn sigma2(&self) -> Option<f64> {
        Some(self.sigma2)
    }

    fn reported_value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.value_and_gradient_rows(x, RowSet::Eval)?.0)
    }
}
