use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, ZoqError};
use crate::objective::{check_dim, Objective};
use crate::rng::SeededRng;

/// `f(x) = 1/2 x^T A x + b^T x` with symmetric positive-definite `A`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    a: DMatrix<f64>,
    b: DVector<f64>,
    l: f64,
    mu_sc: f64,
    x_star: DVector<f64>,
    f_star: f64,
}

impl QuadraticObjective {
    /// Builds the objective and caches `L = lambda_max(A)`,
    /// `mu_sc = lambda_min(A)` and the minimizer `-A^{-1} b`.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || a.ncols() != d || b.len() != d {
            return Err(ZoqError::InvalidArgument(format!(
                "quadratic needs square A and matching b, got A {}x{}, b {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(ZoqError::InvalidArgument(format!(
                "A is not symmetric (max |A - A^T| = {asym:.3e})"
            )));
        }
        let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 10_000).ok_or_else(|| {
            ZoqError::Numerical(format!("symmetric eigensolver did not converge for d={d}"))
        })?;
        let l = eig.eigenvalues.max();
        let mu_sc = eig.eigenvalues.min();
        if !(mu_sc > 0.0) {
            return Err(ZoqError::Numerical(format!(
                "A is not positive definite: lambda_min = {mu_sc:.3e}, lambda_max = {l:.3e}"
            )));
        }
        let chol = a.clone().cholesky().ok_or_else(|| {
            ZoqError::Numerical(format!(
                "Cholesky factorization failed (lambda_min = {mu_sc:.3e})"
            ))
        })?;
        let x_star = -chol.solve(&b);
        let f_star = 0.5 * b.dot(&x_star);
        Ok(Self {
            a,
            b,
            l,
            mu_sc,
            x_star,
            f_star,
        })
    }

    /// `A = M^T M + eps I` with standard normal `M` and `b`.
    pub fn random(dim: usize, eps: f64, rng: &mut SeededRng) -> Result<Self> {
        if dim < 1 {
            return Err(ZoqError::InvalidArgument("dim must be >= 1".into()));
        }
        if !(eps > 0.0) {
            return Err(ZoqError::InvalidArgument(format!("eps must be > 0, got {eps}")));
        }
        let mut m = vec![0.0; dim * dim];
        rng.fill_normal(&mut m);
        let m = DMatrix::from_vec(dim, dim, m);
        let mut b = vec![0.0; dim];
        rng.fill_normal(&mut b);
        Self::from_factor(&m, eps, DVector::from_vec(b))
    }

    pub fn from_factor(m: &DMatrix<f64>, eps: f64, b: DVector<f64>) -> Result<Self> {
        let d = m.ncols();
        let mut a = m.transpose() * m + DMatrix::identity(d, d) * eps;
        // exact symmetry; the product can differ in the last bit
        let sym = (&a + a.transpose()) * 0.5;
        a.copy_from(&sym);
        Self::new(a, b)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear_term(&self) -> &DVector<f64> {
        &self.b
    }
}

/// Random strongly convex quadratic, see [`QuadraticObjective::random`].
pub fn make_quadratic(dim: usize, eps: f64, rng: &mut SeededRng) -> Result<QuadraticObjective> {
    QuadraticObjective::random(dim, eps, rng)
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(x, self.dim())?;
        Ok(0.5 * x.dot(&(&self.a * x)) + self.b.dot(x))
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(x, self.dim())?;
        Ok(&self.a * x + &self.b)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(self.mu_sc)
    }

    fn optimum(&self) -> Option<(DVector<f64>, f64)> {
        Some((self.x_star.clone(), self.f_star))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_closed_form() {
        let m = DMatrix::from_element(1, 1, 2.0);
        let q = QuadraticObjective::from_factor(&m, 1.0, DVector::zeros(1)).unwrap();
        assert_eq!(q.matrix()[(0, 0)], 5.0);
        let (x, f) = q.optimum().unwrap();
        assert_eq!(x[0], 0.0);
        assert_eq!(f, 0.0);
        assert!((q.smoothness() - 5.0).abs() < 1e-12);
        assert!((q.strong_convexity().unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn identity_quadratic() {
        let q = QuadraticObjective::new(DMatrix::identity(2, 2), DVector::from_vec(vec![-1.0, -1.0]))
            .unwrap();
        let (x, f) = q.optimum().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!((f + 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_optimum_has_vanishing_gradient() {
        let q = make_quadratic(20, 1.0, &mut SeededRng::new(3, 0)).unwrap();
        let (x, _) = q.optimum().unwrap();
        assert!(q.gradient(&x).unwrap().norm() < 1e-8);
        assert!(q.strong_convexity().unwrap() <= q.smoothness());
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut rng = SeededRng::new(0, 0);
        assert!(make_quadratic(3, 0.0, &mut rng).is_err());
        assert!(make_quadratic(0, 1.0, &mut rng).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(QuadraticObjective::new(asym, DVector::zeros(2)).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            QuadraticObjective::new(indefinite, DVector::zeros(2)),
            Err(ZoqError::Numerical(_))
        ));
        let q = make_quadratic(3, 1.0, &mut rng).unwrap();
        assert!(q.value(&DVector::zeros(2)).is_err());
    }
}
