//! Minimizing movements: prox chains, their refinement limit and diagnostics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{is_infinite_value, slope, Functional};
use crate::geodesic::GeodesicSpace;

/// Largest number of recorded nodes per trajectory (including t = 0).
pub const MAX_RECORDED_NODES: usize = 4097;
/// Default cap on the number of prox steps in [`flow`].
pub const DEFAULT_M_CAP: usize = 1 << 16;
/// Initial step count of the refinement loop in [`flow`].
pub const INITIAL_STEPS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Resolvent steps for node slopes; empty means the functional's own.
    pub slope_schedule: Vec<f64>,
    pub m_cap: usize,
    pub max_nodes: usize,
    /// Steps per segment when [`limit_slope`] continues the flow.
    pub segment_steps: usize,
    /// Number of horizon doublings before [`limit_slope`] gives up.
    pub max_doublings: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            slope_schedule: Vec::new(),
            m_cap: DEFAULT_M_CAP,
            max_nodes: MAX_RECORDED_NODES,
            segment_steps: 64,
            max_doublings: 12,
        }
    }
}

/// A discrete gradient flow: the prox chain read off at recorded nodes.
#[derive(Debug, Clone)]
pub struct FlowTrajectory<P> {
    pub times: Vec<f64>,
    pub points: Vec<P>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub slope_warnings: Vec<Option<String>>,
    pub analytic_slopes: Vec<Option<f64>>,
    /// Number of prox steps and their size.
    pub m: usize,
    pub tau: f64,
    /// Prox steps between consecutive recorded nodes.
    pub stride: usize,
    /// max_t d(c^{m}_t, c^{m/2}_t) when produced by [`flow`].
    pub cauchy_gap: Option<f64>,
}

impl<P> FlowTrajectory<P> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn last_point(&self) -> &P {
        self.points.last().expect("trajectory has a start point")
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::input(format!("horizon T = {t} must be positive")));
    }
    Ok(())
}

fn check_start<S: GeodesicSpace, G: Functional<S> + ?Sized>(space: &S, g: &G, x0: &S::Point) -> Result<()> {
    space.check(x0)?;
    if is_infinite_value(g.value(space, x0)?) {
        return Err(Error::input("start point is outside the domain of the functional"));
    }
    Ok(())
}

fn record_stride(m: usize, max_nodes: usize) -> usize {
    let slots = max_nodes.saturating_sub(1).max(1);
    m.div_ceil(slots)
}

/// Runs m prox steps of size T/m and returns the recorded nodes (no values).
fn chain<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    x0: &S::Point,
    t: f64,
    m: usize,
    stride: usize,
) -> Result<(Vec<f64>, Vec<S::Point>)> {
    let tau = t / m as f64;
    let mut times = vec![0.0];
    let mut points = vec![x0.clone()];
    let mut current = x0.clone();
    for k in 1..=m {
        current = g.prox(space, &current, tau).map_err(|e| Error::Step {
            step: k,
            source: Box::new(e),
        })?;
        if k % stride == 0 || k == m {
            times.push(if k == m { t } else { k as f64 * tau });
            points.push(current.clone());
        }
    }
    Ok((times, points))
}

fn decorate<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    times: Vec<f64>,
    points: Vec<S::Point>,
    m: usize,
    stride: usize,
    config: &FlowConfig,
) -> Result<FlowTrajectory<S::Point>> {
    let mut values = Vec::with_capacity(points.len());
    let mut slopes = Vec::with_capacity(points.len());
    let mut slope_warnings = Vec::with_capacity(points.len());
    let mut analytic_slopes = Vec::with_capacity(points.len());
    for p in &points {
        values.push(g.value(space, p)?);
        let est = slope(space, g, p, &config.slope_schedule, None)?;
        slopes.push(est.value);
        slope_warnings.push(est.warning);
        analytic_slopes.push(g.analytic_slope(space, p));
    }
    let tau = times.last().copied().unwrap_or(0.0) / m as f64;
    Ok(FlowTrajectory {
        times,
        points,
        values,
        slopes,
        slope_warnings,
        analytic_slopes,
        m,
        tau,
        stride,
        cauchy_gap: None,
    })
}

/// The Mayer chain c^{m,k}: k-fold prox with step T/m from x0.
pub fn mayer_flow<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    x0: &S::Point,
    t: f64,
    m: usize,
    config: &FlowConfig,
) -> Result<FlowTrajectory<S::Point>> {
    check_horizon(t)?;
    if m == 0 {
        return Err(Error::input("step count m must be positive"));
    }
    check_start(space, g, x0)?;
    let stride = record_stride(m, config.max_nodes);
    let (times, points) = chain(space, g, x0, t, m, stride)?;
    decorate(space, g, times, points, m, stride, config)
}

/// Refines the Mayer chain by doubling m until max_t d(c^{2m}_t, c^m_t) < tol.
///
/// The comparison runs over the nodes recorded by the coarser chain.
pub fn flow<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    x0: &S::Point,
    t: f64,
    tol: f64,
    config: &FlowConfig,
) -> Result<FlowTrajectory<S::Point>> {
    check_horizon(t)?;
    if !(tol > 0.0) {
        return Err(Error::input(format!("tolerance {tol} must be positive")));
    }
    check_start(space, g, x0)?;
    let mut m = INITIAL_STEPS.min(config.m_cap.max(1));
    let mut stride = record_stride(m, config.max_nodes);
    let mut coarse = chain(space, g, x0, t, m, stride)?;
    let mut gap = f64::INFINITY;
    while 2 * m <= config.m_cap {
        let fine_m = 2 * m;
        let fine_stride = record_stride(fine_m, config.max_nodes);
        let fine = chain(space, g, x0, t, fine_m, fine_stride)?;
        gap = 0.0;
        for (k, tk) in coarse.0.iter().enumerate() {
            let fk = fine
                .0
                .iter()
                .position(|s| (s - tk).abs() <= 1e-12 * t.max(1.0))
                .ok_or_else(|| Error::numerical("refined chain misses a coarse node", f64::NAN))?;
            gap = gap.max(space.distance(&coarse.1[k], &fine.1[fk])?);
        }
        m = fine_m;
        stride = fine_stride;
        coarse = fine;
        if gap < tol {
            let mut traj = decorate(space, g, coarse.0, coarse.1, m, stride, config)?;
            traj.cauchy_gap = Some(gap);
            return Ok(traj);
        }
    }
    Err(Error::numerical(
        format!("flow did not refine below tol = {tol} within m_cap = {}", config.m_cap),
        gap,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSlope {
    /// The last slope estimate.
    pub value: f64,
    /// Total flow time reached.
    pub horizon: f64,
    pub converged: bool,
    /// (t, slope) at the end of every segment.
    pub estimates: Vec<(f64, f64)>,
}

/// B = lim_t |∂G|(c_t), by continuing the flow over doubling horizons.
///
/// Each continuation is a prox chain of `config.segment_steps` steps over the
/// new stretch of time; it stops once successive slopes differ by less than tol.
pub fn limit_slope<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    x0: &S::Point,
    horizon: f64,
    tol: f64,
    config: &FlowConfig,
) -> Result<LimitSlope> {
    limit_slope_with_endpoint(space, g, x0, horizon, tol, config).map(|(l, _)| l)
}

pub(crate) fn limit_slope_with_endpoint<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    x0: &S::Point,
    horizon: f64,
    tol: f64,
    config: &FlowConfig,
) -> Result<(LimitSlope, S::Point)> {
    check_horizon(horizon)?;
    if !(tol > 0.0) {
        return Err(Error::input(format!("tolerance {tol} must be positive")));
    }
    check_start(space, g, x0)?;
    let steps = config.segment_steps.max(1);
    let segment = |from: &S::Point, length: f64| -> Result<S::Point> {
        let (_, pts) = chain(space, g, from, length, steps, steps)?;
        Ok(pts.last().expect("chain has an endpoint").clone())
    };
    let slope_at = |p: &S::Point| -> Result<f64> { Ok(slope(space, g, p, &config.slope_schedule, None)?.value) };

    let mut t = horizon;
    let mut point = segment(x0, horizon)?;
    let mut estimates = vec![(t, slope_at(&point)?)];
    for _ in 0..config.max_doublings {
        // Doubling the total horizon: flow for another t.
        point = segment(&point, t)?;
        t *= 2.0;
        let s = slope_at(&point)?;
        let previous = estimates.last().expect("nonempty").1;
        estimates.push((t, s));
        if (s - previous).abs() < tol {
            return Ok((
                LimitSlope {
                    value: s,
                    horizon: t,
                    converged: true,
                    estimates,
                },
                point,
            ));
        }
    }
    let value = estimates.last().expect("nonempty").1;
    Ok((
        LimitSlope {
            value,
            horizon: t,
            converged: false,
            estimates,
        },
        point,
    ))
}

/// Discrete EVI residuals [d(c_{k+1},v)² − d(c_k,v)²]/(2τ_k) − (G(v) − G(c_{k+1})).
pub fn evi_residual<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    traj: &FlowTrajectory<S::Point>,
    v: &S::Point,
) -> Result<Vec<f64>> {
    let gv = g.value(space, v)?;
    if is_infinite_value(gv) {
        return Err(Error::input("EVI reference point is outside the domain"));
    }
    let mut out = Vec::with_capacity(traj.len().saturating_sub(1));
    for k in 0..traj.len().saturating_sub(1) {
        let step = traj.times[k + 1] - traj.times[k];
        let d0 = space.distance(&traj.points[k], v)?;
        let d1 = space.distance(&traj.points[k + 1], v)?;
        out.push((d1 * d1 - d0 * d0) / (2.0 * step) - (gv - traj.values[k + 1]));
    }
    Ok(out)
}

/// Consistency constant C with every EVI residual ≤ C·τ (0 when all are ≤ 0).
pub fn evi_constant(residuals: &[f64], tau: f64) -> f64 {
    residuals.iter().fold(0.0f64, |c, &r| c.max(r / tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichGaps {
    /// |∂G|(c_t)·d(c_t,c_s) − (G(c_t) − G(c_s)).
    pub lower: f64,
    /// (G(c_t) − G(c_s)) − |∂G|(c_s)·d(c_t,c_s).
    pub upper: f64,
}

/// Slope sandwich between two recorded nodes t_idx ≤ s_idx.
pub fn sandwich_check<S: GeodesicSpace>(
    space: &S,
    traj: &FlowTrajectory<S::Point>,
    t_idx: usize,
    s_idx: usize,
) -> Result<SandwichGaps> {
    if t_idx > s_idx || s_idx >= traj.len() {
        return Err(Error::input(format!(
            "sandwich indices ({t_idx}, {s_idx}) invalid for {} nodes",
            traj.len()
        )));
    }
    let d = space.distance(&traj.points[t_idx], &traj.points[s_idx])?;
    let drop = traj.values[t_idx] - traj.values[s_idx];
    Ok(SandwichGaps {
        lower: traj.slopes[t_idx] * d - drop,
        upper: drop - traj.slopes[s_idx] * d,
    })
}

/// |(G(c_k) − G(c_{k+1}))/τ_k − |∂G|(c_k)²| per consecutive node pair.
pub fn energy_identity_residual<P>(traj: &FlowTrajectory<P>) -> Vec<f64> {
    (0..traj.len().saturating_sub(1))
        .map(|k| {
            let step = traj.times[k + 1] - traj.times[k];
            ((traj.values[k] - traj.values[k + 1]) / step - traj.slopes[k] * traj.slopes[k]).abs()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BindReport {
    pub first: LimitSlope,
    pub second: LimitSlope,
    /// |B(x0) − B(y0)|.
    pub difference: f64,
}

/// Limit slopes from two starts; they agree for any convex G.
pub fn bind_check<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    x0: &S::Point,
    y0: &S::Point,
    horizon: f64,
    tol: f64,
    config: &FlowConfig,
) -> Result<BindReport> {
    let first = limit_slope(space, g, x0, horizon, tol, config)?;
    let second = limit_slope(space, g, y0, horizon, tol, config)?;
    let difference = (first.value - second.value).abs();
    Ok(BindReport {
        first,
        second,
        difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::euclidean::{Euclidean, EuclideanFunctional};

    fn line() -> Euclidean {
        Euclidean::new(1).unwrap()
    }

    #[test]
    fn one_step_of_quadratic() {
        let t = mayer_flow(
            &line(),
            &EuclideanFunctional::Quadratic,
            &vec![2.0],
            1.0,
            1,
            &FlowConfig::default(),
        )
        .unwrap();
        assert_eq!(t.points[1], vec![1.0]);
        assert_eq!(t.times, vec![0.0, 1.0]);
    }

    #[test]
    fn linear_chain_is_exact() {
        let space = Euclidean::new(2).unwrap();
        let g = EuclideanFunctional::Linear(vec![3.0, 4.0]);
        let t = mayer_flow(&space, &g, &vec![0.0, 0.0], 2.0, 7, &FlowConfig::default()).unwrap();
        let end = t.last_point();
        assert!((end[0] + 6.0).abs() < 1e-12 && (end[1] + 8.0).abs() < 1e-12);
        let f = flow(&space, &g, &vec![0.0, 0.0], 2.0, 1e-9, &FlowConfig::default()).unwrap();
        assert_eq!(f.m, 2 * INITIAL_STEPS);
    }

    #[test]
    fn recording_is_capped() {
        let cfg = FlowConfig {
            max_nodes: 9,
            ..FlowConfig::default()
        };
        let t = mayer_flow(&line(), &EuclideanFunctional::Quadratic, &vec![1.0], 1.0, 64, &cfg).unwrap();
        assert_eq!(t.len(), 9);
        assert_eq!(t.stride, 8);
        assert_eq!(*t.times.last().unwrap(), 1.0);
    }

    #[test]
    fn m_cap_is_reported() {
        let cfg = FlowConfig {
            m_cap: 64,
            ..FlowConfig::default()
        };
        let err = flow(&line(), &EuclideanFunctional::Quadratic, &vec![1.0], 1.0, 1e-9, &cfg).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }

    #[test]
    fn sandwich_degenerate() {
        let t = mayer_flow(
            &line(),
            &EuclideanFunctional::Quadratic,
            &vec![1.0],
            1.0,
            8,
            &FlowConfig::default(),
        )
        .unwrap();
        let g = sandwich_check(&line(), &t, 3, 3).unwrap();
        assert_eq!((g.lower, g.upper), (0.0, 0.0));
        assert!(sandwich_check(&line(), &t, 4, 3).is_err());
    }
}
