//! The tripod: three half-lines glued at a common vertex.
//!
//! A metric tree is CAT(0) but not a manifold, so geodesics through the vertex
//! and branch-linear functionals exercise the flow away from Riemannian
//! geometry.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{check_lambda, Functional};
use crate::geodesic::{check_extension_parameter, check_unit_parameter, GeodesicSpace, POINT_EQ_TOL};

use super::{AnalyticAnswers, AnalyticDirection};

/// A point at distance `r` from the vertex along branch `branch` (1, 2 or 3).
/// Any point with r = 0 is the vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripodPoint {
    pub branch: usize,
    pub r: f64,
}

impl TripodPoint {
    pub fn new(branch: usize, r: f64) -> Self {
        TripodPoint { branch, r }
    }

    pub fn origin() -> Self {
        TripodPoint { branch: 1, r: 0.0 }
    }

    pub fn is_origin(&self) -> bool {
        self.r == 0.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tripod;

impl Tripod {
    /// Whether a and b lie on a common closed branch (the vertex lies on all three).
    fn shared_branch(a: &TripodPoint, b: &TripodPoint) -> Option<usize> {
        if a.is_origin() {
            Some(b.branch)
        } else if b.is_origin() || a.branch == b.branch {
            Some(a.branch)
        } else {
            None
        }
    }
}

impl GeodesicSpace for Tripod {
    type Point = TripodPoint;

    fn name(&self) -> String {
        "tripod".into()
    }

    fn check(&self, p: &TripodPoint) -> Result<()> {
        if !(1..=3).contains(&p.branch) {
            return Err(Error::input(format!("tripod branch {} not in 1..=3", p.branch)));
        }
        if !p.r.is_finite() || p.r < 0.0 {
            return Err(Error::input(format!("tripod radius {} must be finite and >= 0", p.r)));
        }
        Ok(())
    }

    fn distance(&self, a: &TripodPoint, b: &TripodPoint) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(match Tripod::shared_branch(a, b) {
            Some(_) => (a.r - b.r).abs(),
            None => a.r + b.r,
        })
    }

    fn interpolate(&self, a: &TripodPoint, b: &TripodPoint, s: f64) -> Result<TripodPoint> {
        check_unit_parameter(s)?;
        if s == 0.0 {
            return Ok(*a);
        }
        if s == 1.0 {
            return Ok(*b);
        }
        Ok(match Tripod::shared_branch(a, b) {
            Some(branch) => TripodPoint::new(branch, a.r + s * (b.r - a.r)),
            None => {
                let pos = s * (a.r + b.r);
                if pos <= a.r {
                    TripodPoint::new(a.branch, a.r - pos)
                } else {
                    TripodPoint::new(b.branch, pos - a.r)
                }
            }
        })
    }

    fn extend(&self, a: &TripodPoint, b: &TripodPoint, s: f64) -> Result<TripodPoint> {
        check_extension_parameter(s)?;
        if s <= 1.0 {
            return self.interpolate(a, b, s);
        }
        match Tripod::shared_branch(a, b) {
            Some(branch) => {
                let r = a.r + s * (b.r - a.r);
                if b.r == a.r {
                    Ok(*b)
                } else if r >= 0.0 {
                    Ok(TripodPoint::new(branch, r))
                } else {
                    Err(Error::input(
                        "geodesic extension through the tripod vertex is not unique",
                    ))
                }
            }
            None => Ok(TripodPoint::new(b.branch, s * (a.r + b.r) - a.r)),
        }
    }

    fn payload(&self, p: &TripodPoint) -> Vec<f64> {
        vec![p.branch as f64, p.r]
    }

    fn approx_eq(&self, a: &TripodPoint, b: &TripodPoint) -> bool {
        if a.r <= POINT_EQ_TOL && b.r <= POINT_EQ_TOL {
            return true;
        }
        a.branch == b.branch && (a.r - b.r).abs() <= POINT_EQ_TOL
    }
}

/// G((i, r)) = α_i · r.
#[derive(Debug, Clone, PartialEq)]
pub struct TripodLinear {
    alpha: [f64; 3],
    tie: bool,
}

impl TripodLinear {
    /// Builds the functional, rejecting nonconvex slopes. With `allow_tie = false`
    /// a minimal slope shared by two branches is also rejected.
    pub fn new(alpha: [f64; 3], allow_tie: bool) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::input("tripod slopes must be finite"));
        }
        for i in 0..3 {
            for j in i + 1..3 {
                if alpha[i] + alpha[j] < 0.0 {
                    return Err(Error::input(format!(
                        "tripod slopes {alpha:?}: α{} + α{} < 0 makes G nonconvex across the vertex",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let min = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
        // Only a shared nonpositive minimum leaves the escape direction ambiguous.
        let tie = min <= 0.0 && alpha.iter().filter(|&&a| a == min).count() > 1;
        if tie && !allow_tie {
            return Err(Error::input(format!(
                "tripod slopes {alpha:?}: most negative slope is shared by two branches"
            )));
        }
        Ok(TripodLinear { alpha, tie })
    }

    pub fn alpha(&self) -> [f64; 3] {
        self.alpha
    }

    pub fn has_tie(&self) -> bool {
        self.tie
    }

    fn slope_on(&self, branch: usize) -> f64 {
        self.alpha[branch - 1]
    }

    pub fn analytic_answers(&self) -> AnalyticAnswers {
        let (imin, min) = self
            .alpha
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &a)| if a < acc.1 { (i, a) } else { acc });
        let mut answers = if min < 0.0 {
            AnalyticAnswers::unstable(-min, AnalyticDirection::Branch(imin + 1))
        } else {
            AnalyticAnswers::stable()
        };
        answers.tie = self.tie;
        answers
    }
}

impl Functional<Tripod> for TripodLinear {
    fn name(&self) -> String {
        format!("tripod_linear{:?}", self.alpha)
    }

    fn value(&self, space: &Tripod, x: &TripodPoint) -> Result<f64> {
        space.check(x)?;
        Ok(self.slope_on(x.branch) * x.r)
    }

    fn prox(&self, space: &Tripod, x: &TripodPoint, lambda: f64) -> Result<TripodPoint> {
        check_lambda(lambda)?;
        space.check(x)?;
        let r = x.r;
        // Candidates: same branch, the vertex, then the other branches.
        let mut best = TripodPoint::origin();
        let mut best_obj = 0.5 * r * r;
        let own = r - lambda * self.slope_on(x.branch);
        if own > 0.0 {
            let obj = 0.5 * (r - own).powi(2) + lambda * self.slope_on(x.branch) * own;
            if obj < best_obj {
                best = TripodPoint::new(x.branch, own);
                best_obj = obj;
            }
        }
        for j in (1..=3).filter(|&j| j != x.branch) {
            let rho = -lambda * self.slope_on(j) - r;
            if rho > 0.0 {
                let obj = 0.5 * (r + rho).powi(2) + lambda * self.slope_on(j) * rho;
                if obj < best_obj {
                    best = TripodPoint::new(j, rho);
                    best_obj = obj;
                }
            }
        }
        Ok(best)
    }

    fn analytic_slope(&self, _space: &Tripod, x: &TripodPoint) -> Option<f64> {
        if x.is_origin() {
            let min = self.alpha.iter().cloned().fold(f64::INFINITY, f64::min);
            Some((-min).max(0.0))
        } else {
            Some(self.slope_on(x.branch).abs())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(b: usize, r: f64) -> TripodPoint {
        TripodPoint::new(b, r)
    }

    #[test]
    fn distances() {
        let t = Tripod;
        assert_eq!(t.distance(&p(1, 2.0), &p(2, 3.0)).unwrap(), 5.0);
        assert_eq!(t.distance(&p(1, 2.0), &p(1, 3.0)).unwrap(), 1.0);
        assert_eq!(t.distance(&TripodPoint::origin(), &p(3, 3.0)).unwrap(), 3.0);
        assert!(t.distance(&p(4, 1.0), &p(1, 1.0)).is_err());
    }

    #[test]
    fn interpolation_through_vertex() {
        let t = Tripod;
        assert!(t.interpolate(&p(1, 2.0), &p(2, 2.0), 0.5).unwrap().is_origin());
        assert_eq!(t.interpolate(&p(1, 3.0), &p(2, 1.0), 0.25).unwrap(), p(1, 2.0));
        assert_eq!(t.interpolate(&p(1, 3.0), &p(2, 1.0), 0.875).unwrap(), p(2, 0.5));
    }

    #[test]
    fn extension() {
        let t = Tripod;
        assert_eq!(t.extend(&p(1, 1.0), &p(2, 1.0), 2.0).unwrap(), p(2, 3.0));
        assert_eq!(t.extend(&p(1, 1.0), &p(1, 2.0), 3.0).unwrap(), p(1, 4.0));
        assert!(t.extend(&p(1, 2.0), &p(1, 1.0), 3.0).is_err());
    }

    #[test]
    fn convexity_is_enforced() {
        assert!(TripodLinear::new([-1.0, 0.5, 2.0], false).is_err());
        assert!(TripodLinear::new([0.0, 0.0, 2.0], false).is_err());
        assert!(TripodLinear::new([0.0, 0.0, 2.0], true).unwrap().has_tie());
    }

    #[test]
    fn values_and_answers() {
        let g = TripodLinear::new([-1.0, 2.0, 2.0], false).unwrap();
        assert_eq!(g.value(&Tripod, &p(1, 3.0)).unwrap(), -3.0);
        let a = g.analytic_answers();
        assert_eq!(a.b, 1.0);
        assert_eq!(a.direction, AnalyticDirection::Branch(1));
        let stable = TripodLinear::new([1.0, 1.0, 1.0], false).unwrap().analytic_answers();
        assert_eq!(stable.b, 0.0);
    }

    #[test]
    fn prox_crosses_the_vertex() {
        let g = TripodLinear::new([-1.0, 2.0, 2.0], false).unwrap();
        // From (2, 0.5) with λ = 1 the minimizer sits at (1, 0.5).
        assert_eq!(g.prox(&Tripod, &p(2, 0.5), 1.0).unwrap(), p(1, 0.5));
        assert_eq!(g.prox(&Tripod, &p(2, 3.0), 1.0).unwrap(), p(2, 1.0));
        assert_eq!(g.prox(&Tripod, &TripodPoint::origin(), 0.25).unwrap(), p(1, 0.25));
    }
}
