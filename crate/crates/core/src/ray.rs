//! Geodesic rays, the chordal metric between them and radial functionals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{is_infinite_value, slope, Functional};
use crate::geodesic::GeodesicSpace;

/// Default largest time (2^40) of the geometric grid used for ray limits.
pub const DEFAULT_T_MAX: f64 = 1099511627776.0;
/// Radial quotients above this are reported as +∞.
pub const RADIAL_OVERFLOW: f64 = 1e5;
/// Relative slack for the monotonicity checks of ray quotients.
const QUOTIENT_SLACK: f64 = 1e-9;
/// Sample movement below which [`ray_geodesic`] stops refining.
pub const RAY_GEODESIC_TOL: f64 = 1e-6;

/// A geodesic ray t ↦ ℓ_t from `base`, stored at times 0 = t_0 < t_1 < … < t_k.
///
/// Between samples the ray follows the geodesic of the space; past the last
/// sample it continues along the geodesic from the base through that sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray<P> {
    times: Vec<f64>,
    samples: Vec<P>,
    speed: f64,
    /// Set when the ray came out of a limit that did not settle.
    pub flag: Option<String>,
}

impl<P: Clone> Ray<P> {
    /// The constant ray at `base`.
    pub fn trivial(base: P) -> Self {
        Ray {
            times: vec![0.0, 1.0],
            samples: vec![base.clone(), base],
            speed: 0.0,
            flag: None,
        }
    }

    pub fn base(&self) -> &P {
        &self.samples[0]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &[P] {
        &self.samples
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn is_trivial(&self) -> bool {
        self.speed == 0.0
    }
}

impl<P: Clone> Ray<P> {
    /// Builds a ray from samples at `times` (times[0] = 0 holds the base).
    pub fn from_samples<S: GeodesicSpace<Point = P>>(space: &S, times: Vec<f64>, samples: Vec<P>) -> Result<Self> {
        if times.len() < 2 || times.len() != samples.len() {
            return Err(Error::input("a ray needs matching times and samples, at least two"));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::input("ray times must start at 0 and increase"));
        }
        for p in &samples {
            space.check(p)?;
        }
        let mut ray = Ray {
            times,
            samples,
            speed: 0.0,
            flag: None,
        };
        let one = ray.sample_position(space, 1.0)?;
        ray.speed = space.distance(ray.base(), &one)?;
        Ok(ray)
    }

    /// The ray from `base` through `p`, reaching `p` at time 1.
    pub fn through<S: GeodesicSpace<Point = P>>(space: &S, base: P, p: P) -> Result<Self> {
        Ray::from_samples(space, vec![0.0, 1.0], vec![base, p])
    }

    /// ℓ_t.
    pub fn position<S: GeodesicSpace<Point = P>>(&self, space: &S, t: f64) -> Result<P> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::input(format!("ray time {t} must be finite and >= 0")));
        }
        if self.speed == 0.0 {
            return Ok(self.samples[0].clone());
        }
        self.sample_position(space, t)
    }

    fn sample_position<S: GeodesicSpace<Point = P>>(&self, space: &S, t: f64) -> Result<P> {
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            if t == self.times[last] {
                return Ok(self.samples[last].clone());
            }
            return space.extend(&self.samples[0], &self.samples[last], t / self.times[last]);
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let s = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        space.interpolate(&self.samples[i], &self.samples[i + 1], s)
    }
}

/// ‖ℓ‖ = d(ℓ_0, ℓ_1).
pub fn ray_norm<P: Clone>(ray: &Ray<P>) -> f64 {
    ray.speed()
}

fn geometric_grid(t_max: f64) -> Result<Vec<f64>> {
    if !(t_max >= 1.0) || !t_max.is_finite() {
        return Err(Error::input(format!("T_max = {t_max} must be finite and >= 1")));
    }
    let mut grid = vec![1.0];
    while grid.last().expect("nonempty") * 2.0 <= t_max {
        grid.push(grid.last().expect("nonempty") * 2.0);
    }
    Ok(grid)
}

/// A limit read off a monotone quotient on the grid t = 1, 2, 4, …, T_max.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientLimit {
    /// Quotient at the largest grid time (+∞ on overflow).
    pub value: f64,
    /// Change over the last doubling, the error bar of `value`.
    pub increment: f64,
    /// Whether the quotient was nondecreasing along the grid.
    pub monotone: bool,
    pub quotients: Vec<(f64, f64)>,
}

fn limit_of(quotients: Vec<(f64, f64)>) -> QuotientLimit {
    let monotone = quotients
        .windows(2)
        .all(|w| w[1].1 >= w[0].1 - QUOTIENT_SLACK * (1.0 + w[0].1.abs()));
    let n = quotients.len();
    let value = quotients[n - 1].1;
    let increment = if n > 1 { value - quotients[n - 2].1 } else { 0.0 };
    QuotientLimit {
        value,
        increment,
        monotone,
        quotients,
    }
}

/// d^c(ℓ¹, ℓ²) = lim d(ℓ¹_t, ℓ²_t)/t.
pub fn chordal_distance<S: GeodesicSpace>(
    space: &S,
    a: &Ray<S::Point>,
    b: &Ray<S::Point>,
    t_max: f64,
) -> Result<QuotientLimit> {
    let mut quotients = Vec::new();
    for t in geometric_grid(t_max)? {
        let d = space.distance(&a.position(space, t)?, &b.position(space, t)?)?;
        quotients.push((t, d / t));
    }
    Ok(limit_of(quotients))
}

/// F(ℓ) = lim (F(ℓ_t) − F(ℓ_0))/t, +∞ once the quotient passes the overflow guard.
pub fn radial_value<S: GeodesicSpace, F: Functional<S> + ?Sized>(
    space: &S,
    f: &F,
    ray: &Ray<S::Point>,
    t_max: f64,
) -> Result<QuotientLimit> {
    let f0 = f.value(space, ray.base())?;
    if is_infinite_value(f0) {
        return Err(Error::input("ray base is outside the domain of the functional"));
    }
    let mut quotients = Vec::new();
    for t in geometric_grid(t_max)? {
        let ft = f.value(space, &ray.position(space, t)?)?;
        let q = if is_infinite_value(ft) {
            f64::INFINITY
        } else {
            (ft - f0) / t
        };
        quotients.push((t, q));
        if q > RADIAL_OVERFLOW {
            let mut lim = limit_of(quotients);
            lim.value = f64::INFINITY;
            lim.increment = f64::INFINITY;
            return Ok(lim);
        }
    }
    Ok(limit_of(quotients))
}

/// The ray ℓ^s between ℓ⁰ and ℓ¹ sharing their base.
///
/// At each stored time T′ the sample is the limit over t of the point at
/// parameter T′/t on the segment from the base to the s-point between ℓ⁰_t and
/// ℓ¹_t; t doubles from T until successive samples move less than 1e−6, up to
/// [`DEFAULT_T_MAX`]. Unsettled samples flag the ray.
pub fn ray_geodesic<S: GeodesicSpace>(
    space: &S,
    l0: &Ray<S::Point>,
    l1: &Ray<S::Point>,
    s: f64,
    t: f64,
) -> Result<Ray<S::Point>> {
    crate::geodesic::check_unit_parameter(s)?;
    if space.distance(l0.base(), l1.base())? > 1e-9 {
        return Err(Error::input("ray_geodesic needs rays with a shared base"));
    }
    if s == 0.0 {
        return Ok(l0.clone());
    }
    if s == 1.0 {
        return Ok(l1.clone());
    }
    let base = l0.base().clone();
    let mut times = vec![0.0];
    let mut stored = vec![1.0];
    while stored.last().expect("nonempty") * 2.0 <= t {
        stored.push(stored.last().expect("nonempty") * 2.0);
    }
    times.extend(&stored);

    let sample_at = |big_t: f64| -> Result<Vec<S::Point>> {
        let mid = space.interpolate(&l0.position(space, big_t)?, &l1.position(space, big_t)?, s)?;
        stored
            .iter()
            .map(|&tp| space.interpolate(&base, &mid, tp / big_t))
            .collect()
    };
    let mut big_t = stored.last().copied().unwrap_or(1.0) * 2.0;
    let mut current = sample_at(big_t)?;
    let mut movement = f64::INFINITY;
    while big_t * 2.0 <= DEFAULT_T_MAX {
        big_t *= 2.0;
        let next = sample_at(big_t)?;
        movement = 0.0;
        for (a, b) in current.iter().zip(&next) {
            movement = movement.max(space.distance(a, b)?);
        }
        current = next;
        if movement < RAY_GEODESIC_TOL {
            break;
        }
    }
    let mut samples = vec![base];
    samples.extend(current);
    let mut ray = Ray::from_samples(space, times, samples)?;
    if movement >= RAY_GEODESIC_TOL {
        ray.flag = Some(format!("ray geodesic samples still moving by {movement:.3e}"));
    }
    Ok(ray)
}

/// d^c(ℓ,ℓˢ)² − [(1−s)d^c(ℓ,ℓ⁰)² + s·d^c(ℓ,ℓ¹)² − s(1−s)d^c(ℓ⁰,ℓ¹)²].
pub fn ray_cat0_defect<S: GeodesicSpace>(
    space: &S,
    l: &Ray<S::Point>,
    l0: &Ray<S::Point>,
    l1: &Ray<S::Point>,
    s: f64,
    t_max: f64,
) -> Result<f64> {
    let t_store = 4.0f64.min(t_max);
    let ls = ray_geodesic(space, l0, l1, s, t_store)?;
    let dc = |a: &Ray<S::Point>, b: &Ray<S::Point>| -> Result<f64> { Ok(chordal_distance(space, a, b, t_max)?.value) };
    let (d_ls, d_l0, d_l1, d_01) = (dc(l, &ls)?, dc(l, l0)?, dc(l, l1)?, dc(l0, l1)?);
    Ok(d_ls * d_ls - ((1.0 - s) * d_l0 * d_l0 + s * d_l1 * d_l1 - s * (1.0 - s) * d_01 * d_01))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentWeightGap {
    /// min over probes of |∂F|.
    pub min_slope: f64,
    /// max(0, max over nontrivial rays of −F(ℓ)/‖ℓ‖).
    pub max_ratio: f64,
    /// min_slope − max_ratio, nonnegative up to numerical error.
    pub gap: f64,
}

/// inf |∂F| over probes against sup −F(ℓ)/‖ℓ‖ over rays.
///
/// Rays with F(ℓ) = +∞ contribute −∞ and are skipped; the trivial ray is
/// always in the competition, so the ratio side is at least 0.
pub fn moment_weight_gap<S: GeodesicSpace, F: Functional<S> + ?Sized>(
    space: &S,
    f: &F,
    rays: &[Ray<S::Point>],
    probes: &[S::Point],
    t_max: f64,
) -> Result<MomentWeightGap> {
    if probes.is_empty() {
        return Err(Error::input("moment-weight gap needs at least one probe"));
    }
    let mut min_slope = f64::INFINITY;
    for p in probes {
        min_slope = min_slope.min(slope(space, f, p, &[], None)?.value);
    }
    let mut max_ratio = 0.0f64;
    for ray in rays {
        let norm = ray_norm(ray);
        if norm == 0.0 {
            continue;
        }
        let radial = radial_value(space, f, ray, t_max)?.value;
        if radial.is_finite() {
            max_ratio = max_ratio.max(-radial / norm);
        }
    }
    Ok(MomentWeightGap {
        min_slope,
        max_ratio,
        gap: min_slope - max_ratio,
    })
}
