//! Flat ℝⁿ with closed-form functionals.

use crate::error::{Error, Result};
use crate::functional::{check_lambda, Functional};
use crate::geodesic::{check_extension_parameter, check_unit_parameter, GeodesicSpace};

use super::{AnalyticAnswers, AnalyticDirection};

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Euclidean {
    dim: usize,
}

impl Euclidean {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("Euclidean dimension must be positive"));
        }
        Ok(Euclidean { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl GeodesicSpace for Euclidean {
    type Point = Vec<f64>;

    fn name(&self) -> String {
        format!("R^{}", self.dim)
    }

    fn check(&self, p: &Vec<f64>) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::input(format!(
                "point has {} coordinates, space has dimension {}",
                p.len(),
                self.dim
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("point has non-finite coordinates"));
        }
        Ok(())
    }

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<f64> {
        if a.len() != self.dim || b.len() != self.dim {
            return Err(Error::input("payload shape does not match R^n"));
        }
        Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
    }

    fn interpolate(&self, a: &Vec<f64>, b: &Vec<f64>, s: f64) -> Result<Vec<f64>> {
        check_unit_parameter(s)?;
        if s == 1.0 {
            return Ok(b.clone());
        }
        Ok(a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect())
    }

    fn extend(&self, a: &Vec<f64>, b: &Vec<f64>, s: f64) -> Result<Vec<f64>> {
        check_extension_parameter(s)?;
        Ok(a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect())
    }

    fn payload(&self, p: &Vec<f64>) -> Vec<f64> {
        p.clone()
    }
}

/// Closed-form convex functionals on ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub enum EuclideanFunctional {
    /// G(x) = a·x
    Linear(Vec<f64>),
    /// G(x) = ½|x|²
    Quadratic,
    /// G(x) = |x|
    Abs,
    /// G(x) = −x + w·e^{−x} on ℝ
    ExpLinear { weight: f64 },
    /// G(x) = max(|x| − 1, 0)
    Valley,
}

impl EuclideanFunctional {
    /// Analytic inf of the slope and the optimal escape direction.
    pub fn analytic_answers(&self) -> AnalyticAnswers {
        match self {
            EuclideanFunctional::Linear(a) => {
                let n = norm(a);
                if n == 0.0 {
                    AnalyticAnswers::stable()
                } else {
                    AnalyticAnswers::unstable(n, AnalyticDirection::Vector(a.iter().map(|x| -x / n).collect()))
                }
            }
            EuclideanFunctional::ExpLinear { .. } => {
                AnalyticAnswers::unstable(1.0, AnalyticDirection::Vector(vec![1.0]))
            }
            EuclideanFunctional::Quadratic | EuclideanFunctional::Abs | EuclideanFunctional::Valley => {
                AnalyticAnswers::stable()
            }
        }
    }

    fn dim_check(&self, x: &[f64]) -> Result<()> {
        match self {
            EuclideanFunctional::Linear(a) if a.len() != x.len() => {
                Err(Error::input("linear coefficient and point dimensions differ"))
            }
            EuclideanFunctional::ExpLinear { .. } if x.len() != 1 => {
                Err(Error::input("exp_linear functional lives on R"))
            }
            _ => Ok(()),
        }
    }
}

fn exp_linear_prox(x: f64, lambda: f64, w: f64) -> Result<f64> {
    // Root of v − x − λ − λ w e^{−v}; increasing and concave, so Newton from the
    // left converges monotonically.
    let mut v = x + lambda;
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let e = (-v).exp();
        residual = v - x - lambda - lambda * w * e;
        let step = residual / (1.0 + lambda * w * e);
        v -= step;
        if residual.abs() <= NEWTON_TOL && step.abs() <= 1e-15 * (1.0 + v.abs()) {
            return Ok(v);
        }
    }
    if residual.abs() <= NEWTON_TOL {
        return Ok(v);
    }
    Err(Error::numerical("exp_linear prox Newton did not converge", residual))
}

impl Functional<Euclidean> for EuclideanFunctional {
    fn name(&self) -> String {
        match self {
            EuclideanFunctional::Linear(a) => format!("linear{a:?}"),
            EuclideanFunctional::Quadratic => "quadratic".into(),
            EuclideanFunctional::Abs => "abs".into(),
            EuclideanFunctional::ExpLinear { weight } => format!("exp_linear(w={weight})"),
            EuclideanFunctional::Valley => "valley".into(),
        }
    }

    fn value(&self, space: &Euclidean, x: &Vec<f64>) -> Result<f64> {
        space.check(x)?;
        self.dim_check(x)?;
        Ok(match self {
            EuclideanFunctional::Linear(a) => a.iter().zip(x).map(|(p, q)| p * q).sum(),
            EuclideanFunctional::Quadratic => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            EuclideanFunctional::Abs => norm(x),
            EuclideanFunctional::ExpLinear { weight } => -x[0] + weight * (-x[0]).exp(),
            EuclideanFunctional::Valley => (norm(x) - 1.0).max(0.0),
        })
    }

    fn prox(&self, space: &Euclidean, x: &Vec<f64>, lambda: f64) -> Result<Vec<f64>> {
        check_lambda(lambda)?;
        space.check(x)?;
        self.dim_check(x)?;
        Ok(match self {
            EuclideanFunctional::Linear(a) => x.iter().zip(a).map(|(p, q)| p - lambda * q).collect(),
            EuclideanFunctional::Quadratic => x.iter().map(|p| p / (1.0 + lambda)).collect(),
            EuclideanFunctional::Abs => {
                let n = norm(x);
                if n <= lambda {
                    vec![0.0; x.len()]
                } else {
                    let k = 1.0 - lambda / n;
                    x.iter().map(|p| p * k).collect()
                }
            }
            EuclideanFunctional::ExpLinear { weight } => vec![exp_linear_prox(x[0], lambda, *weight)?],
            EuclideanFunctional::Valley => {
                let n = norm(x);
                if n <= 1.0 {
                    x.clone()
                } else if n <= 1.0 + lambda {
                    x.iter().map(|p| p / n).collect()
                } else {
                    let k = 1.0 - lambda / n;
                    x.iter().map(|p| p * k).collect()
                }
            }
        })
    }

    fn analytic_slope(&self, _space: &Euclidean, x: &Vec<f64>) -> Option<f64> {
        Some(match self {
            EuclideanFunctional::Linear(a) => norm(a),
            EuclideanFunctional::Quadratic => norm(x),
            EuclideanFunctional::Abs => {
                if norm(x) > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            EuclideanFunctional::ExpLinear { weight } => 1.0 + weight * (-x[0]).exp(),
            EuclideanFunctional::Valley => {
                if norm(x) > 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagoras_and_midpoint() {
        let r2 = Euclidean::new(2).unwrap();
        assert_eq!(r2.distance(&vec![0.0, 0.0], &vec![3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(
            r2.interpolate(&vec![0.0, 0.0], &vec![2.0, 2.0], 0.5).unwrap(),
            vec![1.0, 1.0]
        );
        assert!(crate::geodesic::distance(&r2, &vec![0.0], &vec![1.0, 1.0]).is_err());
        assert!(crate::geodesic::interpolate(&r2, &vec![0.0, 0.0], &vec![1.0, 1.0], 1.5).is_err());
    }

    #[test]
    fn closed_form_proxes() {
        let r2 = Euclidean::new(2).unwrap();
        let r1 = Euclidean::new(1).unwrap();
        assert_eq!(
            EuclideanFunctional::Quadratic.prox(&r2, &vec![2.0, 0.0], 1.0).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(EuclideanFunctional::Abs.prox(&r1, &vec![2.0], 0.5).unwrap(), vec![1.5]);
        let lin = EuclideanFunctional::Linear(vec![3.0, 4.0]);
        assert_eq!(lin.prox(&r2, &vec![1.0, 1.0], 0.5).unwrap(), vec![-0.5, -1.0]);
        assert_eq!(
            EuclideanFunctional::Quadratic.value(&r2, &vec![3.0, 4.0]).unwrap(),
            12.5
        );
        assert!(EuclideanFunctional::Quadratic.prox(&r2, &vec![1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn exp_linear_prox_solves_optimality() {
        let r1 = Euclidean::new(1).unwrap();
        let g = EuclideanFunctional::ExpLinear { weight: 1.0 };
        for &(x, l) in &[(0.0, 0.1), (-3.0, 2.0), (5.0, 1e-3), (-20.0, 0.5)] {
            let v = g.prox(&r1, &vec![x], l).unwrap()[0];
            let res = v - x - l - l * (-v).exp();
            assert!(res.abs() < 1e-10, "x={x} λ={l} residual {res}");
        }
    }

    #[test]
    fn valley_prox_projects_onto_unit_ball_boundary() {
        let r2 = Euclidean::new(2).unwrap();
        let p = EuclideanFunctional::Valley.prox(&r2, &vec![1.2, 0.0], 0.5).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        let p = EuclideanFunctional::Valley.prox(&r2, &vec![0.3, 0.1], 0.5).unwrap();
        assert_eq!(p, vec![0.3, 0.1]);
    }
}
