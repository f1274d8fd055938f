//! Geodesic metric spaces and CAT(0) comparison utilities.
//!
//! Every space used by the flow engine is a uniquely geodesic space: a metric
//! together with the constant-speed geodesic between any two points. The
//! comparison machinery here (planar companion triangles, the CAT(0) defect,
//! asymptotic centers) is shared by the property suites of all instances.

use std::fmt::Debug;

use crate::error::{Error, Result};

/// Coordinate-wise tolerance for point equality.
pub const POINT_EQ_TOL: f64 = 1e-12;

/// Slack allowed when checking the triangle inequality for comparison triangles.
pub const TRIANGLE_SLACK: f64 = 1e-9;

/// A uniquely geodesic metric space.
///
/// Implementations are immutable once built and may be shared across threads.
pub trait GeodesicSpace: Send + Sync {
    type Point: Clone + Debug + Send + Sync;

    /// Short human-readable name, used in reports.
    fn name(&self) -> String;

    /// Rejects points whose payload has the wrong shape or non-finite entries.
    fn check(&self, p: &Self::Point) -> Result<()>;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> Result<f64>;

    /// The point at parameter `s` on the geodesic from `a` (s = 0) to `b` (s = 1).
    fn interpolate(&self, a: &Self::Point, b: &Self::Point, s: f64) -> Result<Self::Point>;

    /// Continues the geodesic through `a` and `b` beyond `b`: the point at
    /// parameter `s >= 1`. Used to evaluate rays past their last stored sample.
    fn extend(&self, a: &Self::Point, b: &Self::Point, s: f64) -> Result<Self::Point>;

    /// Flat numeric payload for export.
    fn payload(&self, p: &Self::Point) -> Vec<f64>;

    /// Payload equality within [`POINT_EQ_TOL`].
    fn approx_eq(&self, a: &Self::Point, b: &Self::Point) -> bool {
        let (pa, pb) = (self.payload(a), self.payload(b));
        pa.len() == pb.len() && pa.iter().zip(&pb).all(|(x, y)| (x - y).abs() <= POINT_EQ_TOL)
    }
}

pub(crate) fn check_unit_parameter(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) || s.is_nan() {
        return Err(Error::input(format!("geodesic parameter {s} outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_extension_parameter(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::input(format!(
            "geodesic extension parameter {s} must be finite and nonnegative"
        )));
    }
    Ok(())
}

pub fn distance<S: GeodesicSpace>(space: &S, a: &S::Point, b: &S::Point) -> Result<f64> {
    space.check(a)?;
    space.check(b)?;
    space.distance(a, b)
}

pub fn interpolate<S: GeodesicSpace>(space: &S, a: &S::Point, b: &S::Point, s: f64) -> Result<S::Point> {
    check_unit_parameter(s)?;
    space.check(a)?;
    space.check(b)?;
    space.interpolate(a, b, s)
}

/// Planar companion triangle for three side lengths.
///
/// `x` sits at the origin, `y` on the positive horizontal axis and `z` in the
/// closed upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonTriangle {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

impl ComparisonTriangle {
    /// Companion point of the point at parameter `s` on the side from x to y.
    pub fn on_xy(&self, s: f64) -> [f64; 2] {
        lerp2(self.x, self.y, s)
    }

    /// Companion point of the point at parameter `t` on the side from x to z.
    pub fn on_xz(&self, t: f64) -> [f64; 2] {
        lerp2(self.x, self.z, t)
    }
}

fn lerp2(a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

pub fn planar_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Builds the companion triangle with |x̄ȳ| = dxy, |ȳz̄| = dyz, |z̄x̄| = dzx.
pub fn comparison_triangle(dxy: f64, dyz: f64, dzx: f64) -> Result<ComparisonTriangle> {
    for (name, v) in [("dxy", dxy), ("dyz", dyz), ("dzx", dzx)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::input(format!("side {name} = {v} is not a length")));
        }
    }
    let scale = dxy.max(dyz).max(dzx).max(1.0);
    let violation = [dxy - dyz - dzx, dyz - dxy - dzx, dzx - dxy - dyz]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if violation > TRIANGLE_SLACK * scale {
        return Err(Error::input(format!(
            "side lengths ({dxy}, {dyz}, {dzx}) violate the triangle inequality by {violation:.3e}"
        )));
    }
    if dxy == 0.0 {
        // x̄ = ȳ; put z̄ straight up.
        return Ok(ComparisonTriangle {
            x: [0.0, 0.0],
            y: [0.0, 0.0],
            z: [0.0, dzx],
        });
    }
    // Height from Kahan's stable Heron formula; sides sorted a >= b >= c.
    let mut sides = [dxy, dyz, dzx];
    sides.sort_by(|p, q| q.total_cmp(p));
    let [a, b, c] = sides;
    let prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    let area = 0.25 * prod.max(0.0).sqrt();
    let height = 2.0 * area / dxy;
    let along = (dxy * dxy + dzx * dzx - dyz * dyz) / (2.0 * dxy);
    Ok(ComparisonTriangle {
        x: [0.0, 0.0],
        y: [dxy, 0.0],
        z: [along, height],
    })
}

/// d(a, b) − |ā − b̄| for a on [x, y] at parameter `s` and b on [x, z] at `t`.
///
/// Nonpositive values (up to rounding) certify the CAT(0) inequality for the sample.
pub fn cat0_defect<S: GeodesicSpace>(
    space: &S,
    x: &S::Point,
    y: &S::Point,
    z: &S::Point,
    s: f64,
    t: f64,
) -> Result<f64> {
    let a = interpolate(space, x, y, s)?;
    let b = interpolate(space, x, z, t)?;
    let tri = comparison_triangle(space.distance(x, y)?, space.distance(y, z)?, space.distance(z, x)?)?;
    Ok(space.distance(&a, &b)? - planar_distance(tri.on_xy(s), tri.on_xz(t)))
}

/// The candidate minimizing r(c) = limsup_n d(c, x_n).
///
/// The limsup is approximated by the max over the last ⌈n/2⌉ terms. Ties go to
/// the earliest candidate.
pub fn asymptotic_center<S: GeodesicSpace>(space: &S, seq: &[S::Point], candidates: &[S::Point]) -> Result<S::Point> {
    if seq.is_empty() || candidates.is_empty() {
        return Err(Error::input("asymptotic center needs a sequence and candidates"));
    }
    let tail = &seq[seq.len() / 2..];
    let mut best: Option<(f64, usize)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let mut r = 0.0f64;
        for p in tail {
            r = r.max(space.distance(c, p)?);
        }
        if best.is_none_or(|(rb, _)| r < rb) {
            best = Some((r, i));
        }
    }
    let (_, i) = best.expect("candidates nonempty");
    Ok(candidates[i].clone())
}
