use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, ZoqError};
use crate::objective::{check_dim, Objective};
use crate::rng::SeededRng;

/// Half-width of the box `[-2, 2]^d` over which the smoothness constant is
/// estimated. It contains the standard start `(-1.2, 1, -1.2, ...)` and the
/// optimum.
pub const INIT_BOX: f64 = 2.0;

const L_PROBE_POINTS: usize = 256;

/// `sum_{i<d-1} 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
#[derive(Debug, Clone)]
pub struct RosenbrockObjective {
    dim: usize,
    l: f64,
}

impl RosenbrockObjective {
    /// The smoothness constant is twice the largest Hessian spectral norm
    /// seen over the initialization box.
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(ZoqError::InvalidArgument(format!(
                "Rosenbrock needs dim >= 2, got {dim}"
            )));
        }
        let l = 2.0 * box_hessian_norm(dim)?;
        Ok(Self { dim, l })
    }

    /// Standard start `(-1.2, 1, -1.2, 1, ...)`.
    pub fn standard_start(dim: usize) -> DVector<f64> {
        DVector::from_iterator(dim, (0..dim).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 }))
    }

    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(x, self.dim)?;
        Ok(hessian(x))
    }
}

fn hessian(x: &DVector<f64>) -> DMatrix<f64> {
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d - 1 {
        h[(i, i)] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
        h[(i + 1, i + 1)] += 200.0;
        h[(i, i + 1)] = -400.0 * x[i];
        h[(i + 1, i)] = -400.0 * x[i];
    }
    h
}

fn spectral_norm(h: DMatrix<f64>) -> Result<f64> {
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 10_000)
        .ok_or_else(|| ZoqError::Numerical("Hessian eigensolver failed".into()))?;
    Ok(eig.eigenvalues.amax())
}

fn box_hessian_norm(dim: usize) -> Result<f64> {
    let mut probes: Vec<DVector<f64>> = vec![
        RosenbrockObjective::standard_start(dim),
        DVector::from_element(dim, 1.0),
        // sign pattern maximizing the diagonal 1200 x_i^2 - 400 x_{i+1}
        DVector::from_iterator(dim, (0..dim).map(|i| if i % 2 == 0 { INIT_BOX } else { -INIT_BOX })),
        DVector::from_element(dim, INIT_BOX),
        DVector::from_element(dim, -INIT_BOX),
    ];
    // lambda_max(H(x)) is convex in x, so small boxes are covered exactly by
    // their vertices
    if dim <= 10 {
        for mask in 0u32..(1 << dim) {
            probes.push(DVector::from_iterator(
                dim,
                (0..dim).map(|i| if mask >> i & 1 == 1 { INIT_BOX } else { -INIT_BOX }),
            ));
        }
    }
    // fixed stream so L is a pure function of dim
    let mut rng = SeededRng::new(0x726f_7365, dim as u64);
    for _ in 0..L_PROBE_POINTS {
        probes.push(DVector::from_iterator(
            dim,
            (0..dim).map(|_| INIT_BOX * (2.0 * rng.uniform() - 1.0)),
        ));
    }
    let mut best = 0.0f64;
    for p in &probes {
        best = best.max(spectral_norm(hessian(p))?);
    }
    Ok(best)
}

impl Objective for RosenbrockObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(x, self.dim)?;
        Ok((0..self.dim - 1)
            .map(|i| {
                let a = x[i + 1] - x[i] * x[i];
                let b = 1.0 - x[i];
                100.0 * a * a + b * b
            })
            .sum())
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(x, self.dim)?;
        let mut g = DVector::zeros(self.dim);
        for i in 0..self.dim - 1 {
            let a = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * a;
        }
        Ok(g)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn optimum(&self) -> Option<(DVector<f64>, f64)> {
        Some((DVector::from_element(self.dim, 1.0), 0.0))
    }
}
