//! From an escaping flow to its limiting ray, and the sharp slope certificate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{flow, limit_slope_with_endpoint, FlowConfig, FlowTrajectory, LimitSlope};
use crate::functional::{is_infinite_value, Functional};
use crate::geodesic::GeodesicSpace;
use crate::ray::{radial_value, ray_norm, QuotientLimit, Ray, DEFAULT_T_MAX};

/// Largest allowed movement of segment samples between successive extraction nodes.
pub const EXTRACTION_TOL: f64 = 1e-5;
/// Default lower bound on the escape rate d(x0, c_t)/t over the last doubling.
pub const DEFAULT_RATE_FLOOR: f64 = 1e-2;
/// Relative slack for the hypothesis checks of the two-functional mode.
const HYPOTHESIS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    Bounded,
    Escaping,
}

/// Sub-intervals of the last doubling on which the distance must keep growing.
const ESCAPE_PIECES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeVerdict {
    pub case: Case,
    /// d(x0, c_T).
    pub distance: f64,
    /// Smallest growth rate of d(x0, c_t) over the pieces of [T/2, T].
    pub rate: f64,
    /// The two criteria disagreed, so the verdict is a convention.
    pub inconclusive: bool,
}

/// Escaping iff d(x0, c_T) > threshold and d(x0, c_t) grows at a rate above
/// `rate_floor` on each quarter of the last doubling [T/2, T].
pub fn escape_test<S: GeodesicSpace>(
    space: &S,
    traj: &FlowTrajectory<S::Point>,
    threshold: f64,
    rate_floor: f64,
) -> Result<EscapeVerdict> {
    if traj.len() < 2 {
        return Err(Error::input("escape test needs a trajectory with at least two nodes"));
    }
    let x0 = &traj.points[0];
    let t_end = traj.horizon();
    let node_at = |t: f64| traj.times.partition_point(|&s| s < t).min(traj.len() - 1);
    let mut rate = f64::INFINITY;
    for j in 0..ESCAPE_PIECES {
        let lo = node_at(t_end * (0.5 + 0.5 * j as f64 / ESCAPE_PIECES as f64));
        let hi = node_at(t_end * (0.5 + 0.5 * (j + 1) as f64 / ESCAPE_PIECES as f64));
        let span = traj.times[hi] - traj.times[lo];
        let piece = if span > 0.0 {
            (space.distance(x0, &traj.points[hi])? - space.distance(x0, &traj.points[lo])?) / span
        } else {
            0.0
        };
        rate = rate.min(piece);
    }
    let distance = space.distance(x0, traj.last_point())?;
    let far = distance > threshold;
    let growing = rate > rate_floor;
    Ok(EscapeVerdict {
        case: if far && growing { Case::Escaping } else { Case::Bounded },
        distance,
        rate,
        inconclusive: far != growing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extraction {
    /// Flow times of the nodes used, with d(x_ε, c_t) at each.
    pub nodes: Vec<(f64, f64)>,
    /// Largest movement of the stored samples between the last two nodes.
    pub oscillation: f64,
}

/// The limit of unit-speed segments from x_ε (the first flow node) to c_t.
///
/// The ray is stored at times 0, 1, 2, …, `ray_time` (powers of two). Segments
/// are read at the first nodes where d(x_ε, c_t) passes 2ʲ ≥ `ray_time`; the
/// samples of the last two must agree to [`EXTRACTION_TOL`].
pub fn extract_ray<S: GeodesicSpace>(
    space: &S,
    traj: &FlowTrajectory<S::Point>,
    ray_time: f64,
) -> Result<(Ray<S::Point>, Extraction)> {
    if traj.len() < 3 {
        return Err(Error::input("ray extraction needs at least three flow nodes"));
    }
    if !(ray_time >= 1.0) || !ray_time.is_finite() {
        return Err(Error::input(format!("ray time {ray_time} must be >= 1")));
    }
    let base = traj.points[1].clone();
    let mut ray_times = vec![1.0];
    while ray_times.last().expect("nonempty") * 2.0 <= ray_time {
        ray_times.push(ray_times.last().expect("nonempty") * 2.0);
    }
    let s_max = *ray_times.last().expect("nonempty");

    let mut target = 2.0f64;
    while target < s_max {
        target *= 2.0;
    }
    let mut chosen: Vec<(usize, f64)> = Vec::new();
    for k in 2..traj.len() {
        let d = space.distance(&base, &traj.points[k])?;
        if d >= target {
            chosen.push((k, d));
            while target <= d {
                target *= 2.0;
            }
        }
    }
    if chosen.len() < 2 {
        return Err(Error::NonStabilizing {
            oscillation: f64::INFINITY,
            ray_time: s_max,
        });
    }

    let samples_at = |k: usize, d: f64| -> Result<Vec<S::Point>> {
        ray_times
            .iter()
            .map(|&s| space.interpolate(&base, &traj.points[k], s / d))
            .collect()
    };
    let (k_prev, d_prev) = chosen[chosen.len() - 2];
    let (k_last, d_last) = chosen[chosen.len() - 1];
    let prev = samples_at(k_prev, d_prev)?;
    let last = samples_at(k_last, d_last)?;
    let mut oscillation = 0.0f64;
    let mut worst_time = ray_times[0];
    for ((a, b), &s) in prev.iter().zip(&last).zip(&ray_times) {
        let m = space.distance(a, b)?;
        if m > oscillation {
            oscillation = m;
            worst_time = s;
        }
    }
    if oscillation >= EXTRACTION_TOL {
        return Err(Error::NonStabilizing {
            oscillation,
            ray_time: worst_time,
        });
    }
    let mut times = vec![0.0];
    times.extend(&ray_times);
    let mut samples = vec![base];
    samples.extend(last);
    let ray = Ray::from_samples(space, times, samples)?;
    let nodes = chosen.iter().map(|&(k, d)| (traj.times[k], d)).collect();
    Ok((ray, Extraction { nodes, oscillation }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    /// Flow horizon used for classification and extraction.
    pub horizon: f64,
    /// Convergence tolerance of the limit slope.
    pub tol: f64,
    /// Cauchy tolerance of the refined flow.
    pub cauchy_tol: f64,
    pub escape_threshold: f64,
    pub rate_floor: f64,
    /// Largest stored time of extracted rays.
    pub ray_time: f64,
    /// Largest time of the grid for radial and chordal limits.
    pub t_max: f64,
    /// Initial horizon of the limit-slope doubling.
    pub limit_horizon: f64,
    pub flow: FlowConfig,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            horizon: 16.0,
            tol: 1e-4,
            cauchy_tol: 1e-3,
            escape_threshold: 1.0,
            rate_floor: DEFAULT_RATE_FLOOR,
            ray_time: 4.0,
            t_max: DEFAULT_T_MAX,
            limit_horizon: 4.0,
            flow: FlowConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    /// max over checked points of F − G (≤ 0 when F ≤ G).
    pub max_excess: f64,
    /// Largest increase of G between consecutive flow nodes of F.
    pub max_increase: f64,
    pub points_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub escape: EscapeVerdict,
    pub limit: Option<LimitSlope>,
    pub radial: Option<QuotientLimit>,
    pub extraction: Option<Extraction>,
    pub cauchy_gap: Option<f64>,
    pub flow_steps: usize,
    pub hypotheses: HypothesisCheck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharpnessReport<P> {
    /// Limit slope B.
    pub b: f64,
    pub case: Case,
    pub ray: Ray<P>,
    /// −F(ℓ)/‖ℓ‖, 0 for the trivial ray.
    pub ratio: f64,
    pub norm: f64,
    /// B − max(0, ratio).
    pub gap: f64,
    pub diagnostics: Diagnostics,
}

impl<P> SharpnessReport<P> {
    /// max(0, ratio) > tol.
    pub fn unstable(&self, tol: f64) -> bool {
        self.ratio.max(0.0) > tol
    }
}

fn check_hypotheses<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    traj: &FlowTrajectory<S::Point>,
) -> Result<HypothesisCheck> {
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_increase = f64::NEG_INFINITY;
    let mut previous: Option<f64> = None;
    for (k, p) in traj.points.iter().enumerate() {
        let fv = traj.values[k];
        let gv = g.value(space, p)?;
        if is_infinite_value(gv) {
            return Err(Error::Hypothesis(format!(
                "flow node at t = {} leaves the domain of G",
                traj.times[k]
            )));
        }
        let scale = 1.0 + fv.abs().max(gv.abs());
        let excess = fv - gv;
        max_excess = max_excess.max(excess);
        if excess > HYPOTHESIS_SLACK * scale {
            return Err(Error::Hypothesis(format!(
                "F <= G fails at t = {}: F - G = {excess:.3e}",
                traj.times[k]
            )));
        }
        if let Some(prev) = previous {
            let inc = gv - prev;
            max_increase = max_increase.max(inc);
            if inc > HYPOTHESIS_SLACK * scale {
                return Err(Error::Hypothesis(format!(
                    "G increases along the flow of F at t = {} by {inc:.3e}",
                    traj.times[k]
                )));
            }
        }
        previous = Some(gv);
    }
    Ok(HypothesisCheck {
        max_excess,
        max_increase,
        points_checked: traj.len(),
    })
}

/// Runs the flow of F from x0 and certifies inf |∂F| = max(0, −F(ℓ)/‖ℓ‖).
///
/// G must dominate F and decrease along the flow of F; both are checked on the
/// flow nodes. Pass G = F for the single-functional mode.
pub fn sharpness_report<S: GeodesicSpace, F: Functional<S> + ?Sized, G: Functional<S> + ?Sized>(
    space: &S,
    f: &F,
    g: &G,
    x0: &S::Point,
    opts: &PipelineOptions,
) -> Result<SharpnessReport<S::Point>> {
    space.check(x0)?;
    if is_infinite_value(g.value(space, x0)?) {
        return Err(Error::Hypothesis("start point is outside the domain of G".into()));
    }
    let traj = flow(space, f, x0, opts.horizon, opts.cauchy_tol, &opts.flow)?;
    let hypotheses = check_hypotheses(space, g, &traj)?;
    let escape = escape_test(space, &traj, opts.escape_threshold, opts.rate_floor)?;
    let mut diagnostics = Diagnostics {
        escape: escape.clone(),
        limit: None,
        radial: None,
        extraction: None,
        cauchy_gap: traj.cauchy_gap,
        flow_steps: traj.m,
        hypotheses,
    };
    match escape.case {
        Case::Bounded => {
            let b = *traj.slopes.last().expect("trajectory has nodes");
            Ok(SharpnessReport {
                b,
                case: Case::Bounded,
                ray: Ray::trivial(traj.last_point().clone()),
                ratio: 0.0,
                norm: 0.0,
                gap: b,
                diagnostics,
            })
        }
        Case::Escaping => {
            let (limit, _) = limit_slope_with_endpoint(space, f, x0, opts.limit_horizon, opts.tol, &opts.flow)?;
            let (ray, extraction) = extract_ray(space, &traj, opts.ray_time)?;
            let norm = ray_norm(&ray);
            let radial = radial_value(space, f, &ray, opts.t_max)?;
            let ratio = if radial.value.is_finite() {
                -radial.value / norm
            } else {
                f64::NEG_INFINITY
            };
            let b = limit.value;
            diagnostics.limit = Some(limit);
            diagnostics.radial = Some(radial);
            diagnostics.extraction = Some(extraction);
            Ok(SharpnessReport {
                b,
                case: Case::Escaping,
                ray,
                ratio,
                norm,
                gap: b - ratio.max(0.0),
                diagnostics,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport<P> {
    /// Max pairwise chordal distance of the extracted rays (0 if all bounded).
    pub value: f64,
    pub reports: Vec<SharpnessReport<P>>,
}

/// Runs the pipeline from every start and compares the extracted rays.
///
/// `distance` measures the gap between two points when forming the chordal
/// quotient, which lets an instance compare rays modulo flat directions.
pub fn uniqueness_probe<S, F, G, D>(
    space: &S,
    f: &F,
    g: &G,
    starts: &[S::Point],
    opts: &PipelineOptions,
    distance: D,
) -> Result<UniquenessReport<S::Point>>
where
    S: GeodesicSpace,
    F: Functional<S> + ?Sized,
    G: Functional<S> + ?Sized,
    D: Fn(&S::Point, &S::Point) -> Result<f64>,
{
    if starts.is_empty() {
        return Err(Error::input("uniqueness probe needs at least one start"));
    }
    let reports = starts
        .iter()
        .map(|x0| sharpness_report(space, f, g, x0, opts))
        .collect::<Result<Vec<_>>>()?;
    let value = pairwise_chordal(space, &reports, opts.t_max, distance)?;
    Ok(UniquenessReport { value, reports })
}

/// Max pairwise chordal distance between the escaping rays of `reports`.
pub fn pairwise_chordal<S, D>(space: &S, reports: &[SharpnessReport<S::Point>], t_max: f64, distance: D) -> Result<f64>
where
    S: GeodesicSpace,
    D: Fn(&S::Point, &S::Point) -> Result<f64>,
{
    let rays: Vec<&Ray<S::Point>> = reports
        .iter()
        .filter(|r| r.case == Case::Escaping)
        .map(|r| &r.ray)
        .collect();
    let mut value = 0.0f64;
    for i in 0..rays.len() {
        for j in i + 1..rays.len() {
            // The quotient is nondecreasing in t, so the largest grid time is the best bound.
            let d = distance(&rays[i].position(space, t_max)?, &rays[j].position(space, t_max)?)?;
            value = value.max(d / t_max);
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::mayer_flow;
    use crate::model::euclidean::{Euclidean, EuclideanFunctional};

    #[test]
    fn escape_classification() {
        let line = Euclidean::new(1).unwrap();
        let cfg = FlowConfig::default();
        let q = mayer_flow(&line, &EuclideanFunctional::Quadratic, &vec![1.0], 16.0, 256, &cfg).unwrap();
        assert_eq!(
            escape_test(&line, &q, 1.0, DEFAULT_RATE_FLOOR).unwrap().case,
            Case::Bounded
        );
        let e = mayer_flow(
            &line,
            &EuclideanFunctional::ExpLinear { weight: 1.0 },
            &vec![0.0],
            16.0,
            256,
            &cfg,
        )
        .unwrap();
        assert_eq!(
            escape_test(&line, &e, 1.0, DEFAULT_RATE_FLOOR).unwrap().case,
            Case::Escaping
        );
    }

    #[test]
    fn linear_ray_is_extracted() {
        let plane = Euclidean::new(2).unwrap();
        let g = EuclideanFunctional::Linear(vec![3.0, 4.0]);
        let t = mayer_flow(&plane, &g, &vec![0.0, 0.0], 8.0, 64, &FlowConfig::default()).unwrap();
        let (ray, ex) = extract_ray(&plane, &t, 4.0).unwrap();
        assert!((ray_norm(&ray) - 1.0).abs() < 1e-12);
        assert!(ex.oscillation < 1e-12);
        let p = ray.position(&plane, 1.0).unwrap();
        let b = ray.base();
        assert!((p[0] - b[0] + 0.6).abs() < 1e-12 && (p[1] - b[1] + 0.8).abs() < 1e-12);
    }

    #[test]
    fn short_flows_do_not_extract() {
        let line = Euclidean::new(1).unwrap();
        let q = mayer_flow(
            &line,
            &EuclideanFunctional::Quadratic,
            &vec![1.0],
            4.0,
            16,
            &FlowConfig::default(),
        )
        .unwrap();
        assert!(matches!(extract_ray(&line, &q, 1.0), Err(Error::NonStabilizing { .. })));
    }

    #[test]
    fn hypothesis_violation_is_reported() {
        let line = Euclidean::new(1).unwrap();
        let f = EuclideanFunctional::ExpLinear { weight: 2.0 };
        let g = EuclideanFunctional::ExpLinear { weight: 1.0 };
        let err = sharpness_report(&line, &f, &g, &vec![0.0], &PipelineOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
    }
}
