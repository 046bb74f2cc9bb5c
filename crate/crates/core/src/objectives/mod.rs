//! Benchmark objectives: strongly convex quadratic, logistic regression,
//! Rosenbrock and regularized stochastic logistic regression.

mod dataset;
mod logistic;
mod quadratic;
mod rosenbrock;
mod stochastic_logistic;

pub use dataset::{read_dataset, write_dataset, Dataset};
pub use logistic::{sigmoid, softplus, synthetic_classification, LogisticObjective};
pub use quadratic::{make_quadratic, QuadraticObjective};
pub use rosenbrock::{RosenbrockObjective, INIT_BOX};
pub use stochastic_logistic::{StochasticLogisticObjective, EVAL_PER_BATCH, POOL_PER_DIM};

#[cfg(test)]
mod tests {
    //! Shared property checks over all objectives.
    use super::*;
    use crate::objective::Objective;
    use crate::rng::SeededRng;
    use nalgebra::DVector;

    fn random_point(d: usize, scale: f64, rng: &mut SeededRng) -> DVector<f64> {
        DVector::from_iterator(d, (0..d).map(|_| scale * rng.normal()))
    }

    fn central_diff(obj: &dyn Objective, x: &DVector<f64>, h: f64) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        for j in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            g[j] = (obj.value(&xp).unwrap() - obj.value(&xm).unwrap()) / (2.0 * h);
        }
        g
    }

    fn objectives() -> Vec<(&'static str, Box<dyn Objective>, f64)> {
        let mut rng = SeededRng::new(404, 0);
        vec![
            ("quadratic", Box::new(make_quadratic(8, 1.0, &mut rng).unwrap()), 1.0),
            ("logistic", Box::new(LogisticObjective::random(8, 80, &mut rng).unwrap()), 1.0),
            ("rosenbrock", Box::new(RosenbrockObjective::new(8).unwrap()), 0.5),
            (
                "stochastic-logistic",
                Box::new(StochasticLogisticObjective::random(8, 5, 0.1, &mut rng).unwrap()),
                1.0,
            ),
        ]
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = SeededRng::new(1, 1);
        for (name, obj, scale) in objectives() {
            for _ in 0..100 {
                let x = random_point(obj.dim(), scale, &mut rng);
                let g = obj.gradient(&x).unwrap();
                let fd = central_diff(obj.as_ref(), &x, 1e-5);
                let rel = (&g - &fd).norm() / g.norm().max(1e-3);
                assert!(rel < 1e-4, "{name}: relative error {rel:e}");
            }
        }
    }

    #[test]
    fn cached_smoothness_certifies_gradient_lipschitz() {
        let mut rng = SeededRng::new(2, 2);
        for (name, obj, _) in objectives() {
            if name == "rosenbrock" {
                continue;
            }
            let l = obj.smoothness();
            for _ in 0..1000 {
                let x = random_point(obj.dim(), 2.0, &mut rng);
                let y = random_point(obj.dim(), 2.0, &mut rng);
                let lhs = (obj.gradient(&x).unwrap() - obj.gradient(&y).unwrap()).norm();
                assert!(lhs <= l * (&x - &y).norm() * (1.0 + 1e-12), "{name}");
            }
        }
    }

    #[test]
    fn rosenbrock_box_smoothness_holds_inside_box() {
        let obj = RosenbrockObjective::new(8).unwrap();
        let mut rng = SeededRng::new(3, 3);
        let l = obj.smoothness();
        let in_box = |rng: &mut SeededRng| {
            DVector::from_iterator(8, (0..8).map(|_| INIT_BOX * (2.0 * rng.uniform() - 1.0)))
        };
        for _ in 0..1000 {
            let x = in_box(&mut rng);
            let y = in_box(&mut rng);
            let lhs = (obj.gradient(&x).unwrap() - obj.gradient(&y).unwrap()).norm();
            assert!(lhs <= l * (&x - &y).norm());
        }
    }

    #[test]
    fn strong_convexity_certificate() {
        let mut rng = SeededRng::new(4, 4);
        for (name, obj, _) in objectives() {
            let Some(mu) = obj.strong_convexity() else { continue };
            for _ in 0..1000 {
                let x = random_point(obj.dim(), 2.0, &mut rng);
                let y = random_point(obj.dim(), 2.0, &mut rng);
                let fx = obj.value(&x).unwrap();
                let fy = obj.value(&y).unwrap();
                let gx = obj.gradient(&x).unwrap();
                let diff = &y - &x;
                let lower = fx + gx.dot(&diff) + 0.5 * mu * diff.norm_squared();
                assert!(fy >= lower - 1e-9 * fy.abs().max(1.0), "{name}");
            }
        }
    }

    #[test]
    fn rosenbrock_is_nonnegative() {
        let obj = RosenbrockObjective::new(5).unwrap();
        let mut rng = SeededRng::new(5, 5);
        for _ in 0..1000 {
            assert!(obj.value(&random_point(5, 3.0, &mut rng)).unwrap() >= 0.0);
        }
    }
}
