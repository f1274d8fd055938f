//! Convex lower-semicontinuous functionals: values, proximal maps and slopes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::GeodesicSpace;

/// Default resolvent step schedule for slope estimation.
pub const DEFAULT_SLOPE_SCHEDULE: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// Values at or above this are treated as +∞ (outside the domain).
pub const INFINITY_SENTINEL: f64 = 1e300;

/// Relative slack when checking that resolvent quotients are monotone in λ.
const QUOTIENT_MONOTONE_TOL: f64 = 1e-9;

pub fn is_infinite_value(v: f64) -> bool {
    v.is_nan() || v >= INFINITY_SENTINEL * (1.0 - 1e-12)
}

/// A convex, lower-semicontinuous functional on a geodesic space.
pub trait Functional<S: GeodesicSpace>: Send + Sync {
    fn name(&self) -> String;

    /// Value at `x`, `f64::INFINITY` outside the domain.
    fn value(&self, space: &S, x: &S::Point) -> Result<f64>;

    /// argmin_v ½ d(v, x)² + λ G(v).
    fn prox(&self, space: &S, x: &S::Point, lambda: f64) -> Result<S::Point>;

    /// Closed-form slope, when one is known.
    fn analytic_slope(&self, _space: &S, _x: &S::Point) -> Option<f64> {
        None
    }

    /// Column label used when exporting the analytic slope.
    fn analytic_slope_label(&self) -> &'static str {
        "analytic_slope"
    }

    /// Resolvent steps used by [`slope`] unless the caller overrides them.
    fn slope_schedule(&self) -> Vec<f64> {
        DEFAULT_SLOPE_SCHEDULE.to_vec()
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::input(format!("prox step λ = {lambda} must be positive")));
    }
    Ok(())
}

/// The proximal objective ½ d(v, x)² + λ G(v).
pub fn prox_objective<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    x: &S::Point,
    v: &S::Point,
    lambda: f64,
) -> Result<f64> {
    let d = space.distance(v, x)?;
    Ok(0.5 * d * d + lambda * g.value(space, v)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEstimate {
    /// Extrapolated λ → 0 limit of d(x, prox(x, λ)) / λ.
    pub value: f64,
    /// (λ, quotient) pairs behind the extrapolation.
    pub quotients: Vec<(f64, f64)>,
    /// Lower bound sup_z (G(x) − G(z))⁺ / d(x, z) over the probe set, if probes were given.
    pub probe_bound: Option<f64>,
    pub warning: Option<String>,
}

/// Slope |∂G|(x) from resolvent quotients, extrapolated to λ = 0.
///
/// `schedule` must be strictly decreasing; when empty the functional's own
/// schedule is used. The quotient d(x, J_λ x)/λ is nonincreasing in λ, so a
/// violation is reported as a warning and the smallest-λ quotient is returned.
pub fn slope<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    x: &S::Point,
    schedule: &[f64],
    probes: Option<&[S::Point]>,
) -> Result<SlopeEstimate> {
    space.check(x)?;
    let own;
    let schedule = if schedule.is_empty() {
        own = g.slope_schedule();
        &own[..]
    } else {
        schedule
    };
    if schedule.windows(2).any(|w| !(w[1] < w[0])) || schedule.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::input("slope schedule must be positive and strictly decreasing"));
    }
    let gx = g.value(space, x)?;
    if is_infinite_value(gx) {
        return Ok(SlopeEstimate {
            value: f64::INFINITY,
            quotients: Vec::new(),
            probe_bound: None,
            warning: Some("point outside the domain".into()),
        });
    }

    let mut quotients = Vec::with_capacity(schedule.len());
    for &lambda in schedule {
        let p = g.prox(space, x, lambda)?;
        quotients.push((lambda, space.distance(x, &p)? / lambda));
    }

    let mut warning = None;
    // Larger λ first, so quotients must be nondecreasing along the list.
    let monotone = quotients
        .windows(2)
        .all(|w| w[1].1 >= w[0].1 - QUOTIENT_MONOTONE_TOL * (1.0 + w[0].1.abs()));
    let last = quotients.last().map(|q| q.1).unwrap_or(0.0);
    let value = if !monotone {
        warning = Some("resolvent quotients not monotone in λ; using smallest-λ quotient".into());
        last
    } else {
        let extrapolated = neville_at_zero(&quotients);
        // The limit dominates every quotient; a smaller extrapolation means the
        // quotients are not in their asymptotic regime.
        if extrapolated < last {
            last
        } else {
            extrapolated
        }
    };

    let probe_bound = match probes {
        Some(ps) if !ps.is_empty() => {
            let mut best = 0.0f64;
            for z in ps {
                let d = space.distance(x, z)?;
                if d <= 0.0 {
                    continue;
                }
                let gz = g.value(space, z)?;
                if is_infinite_value(gz) {
                    continue;
                }
                best = best.max((gx - gz).max(0.0) / d);
            }
            if best > value * (1.0 + 1e-6) + 1e-9 && warning.is_none() {
                warning = Some(format!(
                    "probe lower bound {best:.6e} exceeds resolvent estimate {value:.6e}"
                ));
            }
            Some(best)
        }
        _ => None,
    };

    Ok(SlopeEstimate {
        value: value.max(0.0),
        quotients,
        probe_bound,
        warning,
    })
}

/// Polynomial extrapolation of (λ_i, q_i) to λ = 0 (Neville's scheme).
pub(crate) fn neville_at_zero(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    if n == 0 {
        return 0.0;
    }
    let mut p: Vec<f64> = points.iter().map(|&(_, q)| q).collect();
    for k in 1..n {
        for i in 0..n - k {
            let (xi, xik) = (points[i].0, points[i + k].0);
            p[i] = (xik * p[i] - xi * p[i + 1]) / (xik - xi);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neville_reproduces_quadratics() {
        let f = |l: f64| 2.0 - 3.0 * l + 0.5 * l * l;
        let pts: Vec<_> = [1e-2, 5e-3, 2.5e-3].iter().map(|&l| (l, f(l))).collect();
        assert!((neville_at_zero(&pts) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn neville_matches_richardson_formula() {
        let q = [(0.01, 1.3), (0.005, 1.2), (0.0025, 1.17)];
        let r = (8.0 * q[2].1 - 6.0 * q[1].1 + q[0].1) / 3.0;
        assert!((neville_at_zero(&q) - r).abs() < 1e-12);
    }
}
