//! One-dimensional toric instance on the moment interval [0, 1].
//!
//! A potential is u = u₀ + φ with u₀ = x log x + (1 − x) log(1 − x) the
//! Guillemin potential, sampled at x_i = i/N. Geodesics are linear in u, so the
//! space is flat: the metric is the trapezoid-weighted L² norm of sample
//! differences. The affine part of φ is stored apart from the rest because
//! affine directions are invisible to second differences while escaping flows
//! push potentials far along them; keeping them separate avoids cancellation in
//! the fourth-order curvature stencil.

mod mabuchi;

pub use mabuchi::{
    calabi_energy_toric, inverse_second_derivative, linear_part, mabuchi_toric, scalar_curvature, toric_prox,
    toric_ray_ratio, ToricMabuchi, PROX_MAX_ITER, PROX_TOL,
};

use crate::error::{Error, Result};
use crate::geodesic::{check_extension_parameter, check_unit_parameter, GeodesicSpace};

/// Smallest admissible grid.
pub const MIN_GRID: usize = 16;
pub const DEFAULT_GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToricConfig {
    pub n: usize,
    /// Linear-part coefficient; 2 is the average scalar curvature of the interval.
    pub a: f64,
}

impl ToricConfig {
    pub fn new(n: usize, a: f64) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::input(format!("toric grid N = {n} below minimum {MIN_GRID}")));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::input(format!("toric coefficient a = {a} must be positive")));
        }
        Ok(ToricConfig { n, a })
    }

    pub fn id(&self) -> String {
        format!("toric.N{}.a{:?}", self.n, self.a)
    }
}

pub fn grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Trapezoid weights on the uniform grid; they sum to the volume 1.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut w = vec![h; n + 1];
    w[0] = 0.5 * h;
    w[n] = 0.5 * h;
    w
}

pub fn integrate(values: &[f64]) -> f64 {
    let w = trapezoid_weights(values.len() - 1);
    values.iter().zip(&w).map(|(v, w)| v * w).sum()
}

pub fn l2_norm(values: &[f64]) -> f64 {
    let w = trapezoid_weights(values.len() - 1);
    values.iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
}

/// u₀(x) = x log x + (1 − x) log(1 − x), zero at both endpoints.
pub fn guillemin(x: f64) -> f64 {
    let xlogx = |t: f64| if t <= 0.0 { 0.0 } else { t * t.ln() };
    xlogx(x) + xlogx(1.0 - x)
}

/// u₀″(x) = 1 / (x(1 − x)).
pub fn guillemin_second_derivative(x: f64) -> f64 {
    1.0 / (x * (1.0 - x))
}

/// Samples of u₀ on the grid.
pub fn guillemin_samples(n: usize) -> Vec<f64> {
    grid(n).into_iter().map(guillemin).collect()
}

/// A symplectic potential u₀ + c + b·x + φ with φ orthogonal to affine functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticPotential {
    c: f64,
    b: f64,
    phi: Vec<f64>,
}

impl SymplecticPotential {
    /// The Guillemin potential itself.
    pub fn guillemin(n: usize) -> Self {
        SymplecticPotential {
            c: 0.0,
            b: 0.0,
            phi: vec![0.0; n + 1],
        }
    }

    /// u₀ + φ for grid samples φ.
    pub fn from_samples(phi: Vec<f64>) -> Self {
        SymplecticPotential::from_parts(0.0, 0.0, phi)
    }

    pub(crate) fn from_parts(c: f64, b: f64, mut phi: Vec<f64>) -> Self {
        let (dc, db) = affine_projection(&phi);
        let x = grid(phi.len() - 1);
        for (p, xi) in phi.iter_mut().zip(&x) {
            *p -= dc + db * xi;
        }
        SymplecticPotential {
            c: c + dc,
            b: b + db,
            phi,
        }
    }

    pub fn n(&self) -> usize {
        self.phi.len() - 1
    }

    /// The grid samples of φ = u − u₀.
    pub fn samples(&self) -> Vec<f64> {
        let n = self.n();
        self.phi
            .iter()
            .enumerate()
            .map(|(i, p)| self.c + self.b * (i as f64 / n as f64) + p)
            .collect()
    }

    /// Samples of u itself.
    pub fn u_samples(&self) -> Vec<f64> {
        self.samples()
            .iter()
            .zip(guillemin_samples(self.n()))
            .map(|(p, g)| p + g)
            .collect()
    }

    pub fn affine(&self) -> (f64, f64) {
        (self.c, self.b)
    }

    /// The non-affine part of φ.
    pub fn residual_part(&self) -> &[f64] {
        &self.phi
    }

    /// u + t·f for grid samples f.
    ///
    /// The affine part of f goes straight into (c, b). If f is affine up to
    /// rounding its residual is dropped, so that constant and linear moves leave
    /// the curvature bit-for-bit unchanged.
    pub fn translate(&self, f: &[f64], t: f64) -> Self {
        let (fc, fb, rest) = split_affine(f);
        let phi = self.phi.iter().zip(&rest).map(|(p, q)| p + t * q).collect();
        SymplecticPotential::from_parts(self.c + t * fc, self.b + t * fb, phi)
    }

    /// φ_a − φ_b on the grid, computed part by part.
    pub fn difference(&self, other: &Self) -> Vec<f64> {
        let n = self.n();
        let (dc, db) = (self.c - other.c, self.b - other.b);
        self.phi
            .iter()
            .zip(&other.phi)
            .enumerate()
            .map(|(i, (p, q))| dc + db * (i as f64 / n as f64) + (p - q))
            .collect()
    }

    fn combine(&self, other: &Self, s: f64) -> Self {
        SymplecticPotential {
            c: self.c + s * (other.c - self.c),
            b: self.b + s * (other.b - self.b),
            phi: self.phi.iter().zip(&other.phi).map(|(p, q)| p + s * (q - p)).collect(),
        }
    }
}

/// (α, β, v − α − βx), with the remainder zeroed when it is pure rounding.
pub(crate) fn split_affine(v: &[f64]) -> (f64, f64, Vec<f64>) {
    let (c, b) = affine_projection(v);
    let x = grid(v.len() - 1);
    let mut rest: Vec<f64> = v.iter().zip(&x).map(|(vi, xi)| vi - c - b * xi).collect();
    if l2_norm(&rest) <= 1e-13 * l2_norm(v) {
        rest.iter_mut().for_each(|r| *r = 0.0);
    }
    (c, b, rest)
}

/// Coefficients (α, β) of the weighted L² projection of `v` onto span{1, x}.
fn affine_projection(v: &[f64]) -> (f64, f64) {
    let n = v.len() - 1;
    let w = trapezoid_weights(n);
    let x = grid(n);
    let (mut g00, mut g01, mut g11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..=n {
        g00 += w[i];
        g01 += w[i] * x[i];
        g11 += w[i] * x[i] * x[i];
        r0 += w[i] * v[i];
        r1 += w[i] * x[i] * v[i];
    }
    let det = g00 * g11 - g01 * g01;
    ((g11 * r0 - g01 * r1) / det, (g00 * r1 - g01 * r0) / det)
}

/// The flat space of discretized potentials with the d₂ metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ToricSpace {
    n: usize,
    weights: Vec<f64>,
}

impl ToricSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::input(format!("toric grid N = {n} below minimum {MIN_GRID}")));
        }
        Ok(ToricSpace {
            n,
            weights: trapezoid_weights(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// d₂(u, v) = (∫ (φ_u − φ_v)² dx)^{1/2} with the trapezoid rule.
pub fn toric_distance(u: &SymplecticPotential, v: &SymplecticPotential) -> Result<f64> {
    if u.phi.len() != v.phi.len() {
        return Err(Error::input("potentials sampled on different grids"));
    }
    Ok(l2_norm(&u.difference(v)))
}

impl GeodesicSpace for ToricSpace {
    type Point = SymplecticPotential;

    fn name(&self) -> String {
        format!("toric(N={})", self.n)
    }

    fn check(&self, p: &SymplecticPotential) -> Result<()> {
        if p.phi.len() != self.n + 1 {
            return Err(Error::input(format!(
                "potential has {} samples, grid needs {}",
                p.phi.len(),
                self.n + 1
            )));
        }
        if !p.c.is_finite() || !p.b.is_finite() || p.phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("potential has non-finite samples"));
        }
        Ok(())
    }

    fn distance(&self, a: &SymplecticPotential, b: &SymplecticPotential) -> Result<f64> {
        if a.phi.len() != self.n + 1 || b.phi.len() != self.n + 1 {
            return Err(Error::input("potential does not match the toric grid"));
        }
        let d = a.difference(b);
        Ok(d.iter().zip(&self.weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt())
    }

    fn interpolate(&self, a: &SymplecticPotential, b: &SymplecticPotential, s: f64) -> Result<SymplecticPotential> {
        check_unit_parameter(s)?;
        if s == 1.0 {
            return Ok(b.clone());
        }
        Ok(a.combine(b, s))
    }

    fn extend(&self, a: &SymplecticPotential, b: &SymplecticPotential, s: f64) -> Result<SymplecticPotential> {
        check_extension_parameter(s)?;
        Ok(a.combine(b, s))
    }

    fn payload(&self, p: &SymplecticPotential) -> Vec<f64> {
        p.samples()
    }
}
