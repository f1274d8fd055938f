//! String-addressable model instances with their defaults and samplers.
//!
//! Ids: `euclid.linear.<a1>.<a2>…`, `euclid.quadratic[.<n>]`, `euclid.abs[.<n>]`,
//! `euclid.exp_linear`, `euclid.pair`, `euclid.valley`, `tripod.<a1>.<a2>.<a3>[.tie]`,
//! `toric[.N<n>].a<a>`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::destabilizer::PipelineOptions;
use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::geodesic::GeodesicSpace;
use crate::model::euclidean::{norm, Euclidean, EuclideanFunctional};
use crate::model::tripod::{Tripod, TripodLinear, TripodPoint};
use crate::model::AnalyticAnswers;
use crate::ray::Ray;
use crate::toric::{
    grid, inverse_second_derivative, l2_norm, scalar_curvature, trapezoid_weights, SymplecticPotential, ToricConfig,
    ToricMabuchi, ToricSpace, DEFAULT_GRID,
};

/// Canonical ids, one per shipped instance family.
pub const CANONICAL_IDS: [&str; 10] = [
    "euclid.linear.3.4",
    "euclid.quadratic",
    "euclid.abs",
    "euclid.exp_linear",
    "euclid.pair",
    "euclid.valley",
    "tripod.-1.2.2",
    "tripod.1.1.1",
    "toric.N256.a2.0",
    "toric.N256.a3.0",
];

/// A space, a primary functional F, a dominating G ≥ F and everything needed to
/// run the pipeline on them.
pub trait Model: Send + Sync {
    type Space: GeodesicSpace;
    type F: Functional<Self::Space>;

    fn id(&self) -> String;
    fn space(&self) -> &Self::Space;
    fn functional(&self) -> &Self::F;
    /// G in the two-functional mode; F itself otherwise.
    fn dominating(&self) -> &Self::F {
        self.functional()
    }
    fn analytic(&self) -> AnalyticAnswers;
    fn options(&self) -> PipelineOptions;
    /// Tolerance of |gap| in the escaping case.
    fn certification_tol(&self) -> f64;

    /// Zero curvature: CAT(0) comparisons hold with equality.
    fn is_flat(&self) -> bool {
        false
    }
    /// G is C¹ along its flows, so first-order flow diagnostics converge at rate τ.
    fn smooth(&self) -> bool {
        false
    }
    /// Horizon of the fixed-m flows used by the diagnostic suites.
    fn diagnostic_horizon(&self) -> f64 {
        2.0
    }

    fn default_start(&self) -> <Self::Space as GeodesicSpace>::Point;
    /// Hand-picked starts; `starts` tops them up with samples.
    fn canonical_starts(&self) -> Vec<<Self::Space as GeodesicSpace>::Point>;
    fn parse_point(&self, literal: &str) -> Result<<Self::Space as GeodesicSpace>::Point>;
    /// A random point of the domain.
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> <Self::Space as GeodesicSpace>::Point;
    /// A random nontrivial ray from `base`.
    fn sample_ray(
        &self,
        rng: &mut ChaCha8Rng,
        base: &<Self::Space as GeodesicSpace>::Point,
    ) -> Result<Ray<<Self::Space as GeodesicSpace>::Point>>;
    /// Base point for ray triples in the ray-space suites.
    fn ray_base(&self) -> <Self::Space as GeodesicSpace>::Point {
        self.default_start()
    }

    /// Distance used when comparing extracted rays.
    fn ray_gap(
        &self,
        a: &<Self::Space as GeodesicSpace>::Point,
        b: &<Self::Space as GeodesicSpace>::Point,
    ) -> Result<f64> {
        self.space().distance(a, b)
    }

    /// Extra per-point CSV (header, rows) for snapshots, if the instance has one.
    fn snapshot(&self, _p: &<Self::Space as GeodesicSpace>::Point) -> Option<Result<String>> {
        None
    }

    /// `count` starts: the canonical ones first, then samples seeded by `seed`.
    fn starts(&self, count: usize, seed: u64) -> Vec<<Self::Space as GeodesicSpace>::Point> {
        let mut out: Vec<_> = self.canonical_starts().into_iter().take(count).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while out.len() < count {
            out.push(self.sample_point(&mut rng));
        }
        out
    }
}

/// Visitor for code generic over the instance type.
pub trait ModelVisitor {
    type Output;
    fn visit<M: Model>(self, model: &M) -> Self::Output;
}

pub enum AnyModel {
    Euclid(EuclidModel),
    Tripod(TripodModel),
    Toric(ToricModel),
}

impl AnyModel {
    pub fn visit<V: ModelVisitor>(&self, v: V) -> V::Output {
        match self {
            AnyModel::Euclid(m) => v.visit(m),
            AnyModel::Tripod(m) => v.visit(m),
            AnyModel::Toric(m) => v.visit(m),
        }
    }

    pub fn id(&self) -> String {
        match self {
            AnyModel::Euclid(m) => m.id(),
            AnyModel::Tripod(m) => m.id(),
            AnyModel::Toric(m) => m.id(),
        }
    }
}

fn unknown(id: &str) -> Error {
    Error::input(format!("unknown instance id '{id}'"))
}

fn parse_reals(tokens: &[&str], id: &str) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| unknown(id))
        })
        .collect()
}

/// Resolves an instance id.
pub fn resolve(id: &str) -> Result<AnyModel> {
    let tokens: Vec<&str> = id.split('.').collect();
    match tokens.as_slice() {
        ["euclid", "linear", rest @ ..] if !rest.is_empty() => {
            let a = parse_reals(rest, id)?;
            Ok(AnyModel::Euclid(EuclidModel::new(id, EuclidKind::Linear(a))?))
        }
        ["euclid", kind @ ("quadratic" | "abs"), rest @ ..] if rest.len() <= 1 => {
            let dim = match rest {
                [] => 1,
                [n] => n.parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(|| unknown(id))?,
                _ => unreachable!(),
            };
            let kind = if *kind == "quadratic" {
                EuclidKind::Quadratic(dim)
            } else {
                EuclidKind::Abs(dim)
            };
            Ok(AnyModel::Euclid(EuclidModel::new(id, kind)?))
        }
        ["euclid", "exp_linear"] => Ok(AnyModel::Euclid(EuclidModel::new(id, EuclidKind::ExpLinear)?)),
        ["euclid", "pair"] => Ok(AnyModel::Euclid(EuclidModel::new(id, EuclidKind::Pair)?)),
        ["euclid", "valley"] => Ok(AnyModel::Euclid(EuclidModel::new(id, EuclidKind::Valley)?)),
        ["tripod", a1, a2, a3, rest @ ..] if rest.is_empty() || rest == ["tie"] => {
            let a = parse_reals(&[a1, a2, a3], id)?;
            let g = TripodLinear::new([a[0], a[1], a[2]], !rest.is_empty())?;
            Ok(AnyModel::Tripod(TripodModel { id: id.to_string(), g }))
        }
        ["toric", ..] => {
            let body = &id["toric.".len().min(id.len())..];
            let (n, coef) = match body.strip_prefix('N') {
                Some(r) => {
                    let (n, coef) = r.split_once('.').ok_or_else(|| unknown(id))?;
                    (n.parse::<usize>().map_err(|_| unknown(id))?, coef)
                }
                None => (DEFAULT_GRID, body),
            };
            let a = coef
                .strip_prefix('a')
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| unknown(id))?;
            Ok(AnyModel::Toric(ToricModel::new(id, ToricConfig::new(n, a)?)?))
        }
        _ => Err(unknown(id)),
    }
}

fn parse_vector(literal: &str) -> Result<Vec<f64>> {
    literal
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::input(format!("bad coordinate '{t}' in point literal '{literal}'")))
        })
        .collect()
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum EuclidKind {
    Linear(Vec<f64>),
    Quadratic(usize),
    Abs(usize),
    ExpLinear,
    /// F = −x + e^{−x} under G = −x + 2e^{−x}.
    Pair,
    Valley,
}

pub struct EuclidModel {
    id: String,
    kind: EuclidKind,
    space: Euclidean,
    f: EuclideanFunctional,
    g: EuclideanFunctional,
}

impl EuclidModel {
    pub fn new(id: &str, kind: EuclidKind) -> Result<Self> {
        let (dim, f, g) = match &kind {
            EuclidKind::Linear(a) => (a.len(), EuclideanFunctional::Linear(a.clone()), None),
            EuclidKind::Quadratic(n) => (*n, EuclideanFunctional::Quadratic, None),
            EuclidKind::Abs(n) => (*n, EuclideanFunctional::Abs, None),
            EuclidKind::ExpLinear => (1, EuclideanFunctional::ExpLinear { weight: 1.0 }, None),
            EuclidKind::Pair => (
                1,
                EuclideanFunctional::ExpLinear { weight: 1.0 },
                Some(EuclideanFunctional::ExpLinear { weight: 2.0 }),
            ),
            EuclidKind::Valley => (2, EuclideanFunctional::Valley, None),
        };
        let g = g.unwrap_or_else(|| f.clone());
        Ok(EuclidModel {
            id: id.to_string(),
            kind,
            space: Euclidean::new(dim)?,
            f,
            g,
        })
    }

    pub fn kind(&self) -> &EuclidKind {
        &self.kind
    }

    fn dim(&self) -> usize {
        self.space.dim()
    }
}

impl Model for EuclidModel {
    type Space = Euclidean;
    type F = EuclideanFunctional;

    fn id(&self) -> String {
        self.id.clone()
    }

    fn space(&self) -> &Euclidean {
        &self.space
    }

    fn functional(&self) -> &EuclideanFunctional {
        &self.f
    }

    fn dominating(&self) -> &EuclideanFunctional {
        &self.g
    }

    fn analytic(&self) -> AnalyticAnswers {
        self.f.analytic_answers()
    }

    fn options(&self) -> PipelineOptions {
        let base = PipelineOptions::default();
        match self.kind {
            EuclidKind::Linear(_) => PipelineOptions {
                horizon: 8.0,
                tol: 1e-8,
                limit_horizon: 1.0,
                ..base
            },
            EuclidKind::ExpLinear | EuclidKind::Pair => PipelineOptions {
                horizon: 32.0,
                tol: 1e-5,
                ..base
            },
            EuclidKind::Quadratic(_) => PipelineOptions { horizon: 16.0, ..base },
            EuclidKind::Abs(_) | EuclidKind::Valley => PipelineOptions { horizon: 8.0, ..base },
        }
    }

    fn certification_tol(&self) -> f64 {
        match self.kind {
            EuclidKind::ExpLinear | EuclidKind::Pair => 2e-3,
            _ => 1e-3,
        }
    }

    fn is_flat(&self) -> bool {
        true
    }

    fn smooth(&self) -> bool {
        matches!(
            self.kind,
            EuclidKind::Linear(_) | EuclidKind::Quadratic(_) | EuclidKind::ExpLinear | EuclidKind::Pair
        )
    }

    fn default_start(&self) -> Vec<f64> {
        match self.kind {
            EuclidKind::Valley => vec![0.3, 0.2],
            EuclidKind::Abs(_) => {
                let mut v = vec![0.0; self.dim()];
                v[0] = 2.0;
                v
            }
            EuclidKind::Quadratic(_) => {
                let mut v = vec![0.0; self.dim()];
                v[0] = 1.0;
                v
            }
            _ => vec![0.0; self.dim()],
        }
    }

    fn canonical_starts(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut starts = vec![self.default_start()];
        match self.kind {
            EuclidKind::ExpLinear | EuclidKind::Pair => {
                starts.extend([vec![5.0], vec![-2.0]]);
            }
            EuclidKind::Valley => {
                starts.extend([vec![-0.5, 0.1], vec![0.0, -0.7]]);
            }
            _ => {
                starts.push((0..n).map(|i| if i % 2 == 0 { 7.0 } else { -3.0 }).collect());
                starts.push((0..n).map(|i| -1.5 + 0.5 * i as f64).collect());
            }
        }
        starts
    }

    fn parse_point(&self, literal: &str) -> Result<Vec<f64>> {
        let v = parse_vector(literal)?;
        self.space.check(&v)?;
        Ok(v)
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self.kind {
            EuclidKind::ExpLinear | EuclidKind::Pair => vec![rng.gen_range(-2.0..5.0)],
            EuclidKind::Valley => {
                let r: f64 = rng.gen_range(0.0..0.9);
                let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                vec![r * th.cos(), r * th.sin()]
            }
            _ => (0..self.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        }
    }

    fn sample_ray(&self, rng: &mut ChaCha8Rng, base: &Vec<f64>) -> Result<Ray<Vec<f64>>> {
        let mut v: Vec<f64> = (0..self.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut len = norm(&v);
        while len < 1e-3 {
            v = (0..self.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            len = norm(&v);
        }
        let speed: f64 = rng.gen_range(0.5..2.0);
        let p = base.iter().zip(&v).map(|(b, d)| b + speed * d / len).collect();
        Ray::through(&self.space, base.clone(), p)
    }
}

// ---------------------------------------------------------------------------

pub struct TripodModel {
    id: String,
    g: TripodLinear,
}

impl TripodModel {
    pub fn new(alpha: [f64; 3], allow_tie: bool) -> Result<Self> {
        let g = TripodLinear::new(alpha, allow_tie)?;
        let id = format!(
            "tripod.{}.{}.{}{}",
            alpha[0],
            alpha[1],
            alpha[2],
            if g.has_tie() { ".tie" } else { "" }
        );
        Ok(TripodModel { id, g })
    }
}

impl Model for TripodModel {
    type Space = Tripod;
    type F = TripodLinear;

    fn id(&self) -> String {
        self.id.clone()
    }

    fn space(&self) -> &Tripod {
        &Tripod
    }

    fn functional(&self) -> &TripodLinear {
        &self.g
    }

    fn analytic(&self) -> AnalyticAnswers {
        self.g.analytic_answers()
    }

    fn options(&self) -> PipelineOptions {
        PipelineOptions {
            horizon: 32.0,
            tol: 1e-8,
            limit_horizon: 1.0,
            ray_time: 8.0,
            ..PipelineOptions::default()
        }
    }

    fn certification_tol(&self) -> f64 {
        1e-3
    }

    fn default_start(&self) -> TripodPoint {
        TripodPoint::origin()
    }

    fn canonical_starts(&self) -> Vec<TripodPoint> {
        vec![
            TripodPoint::origin(),
            TripodPoint::new(2, 1.5),
            TripodPoint::new(3, 1.0),
        ]
    }

    fn parse_point(&self, literal: &str) -> Result<TripodPoint> {
        let literal = literal.trim();
        if literal == "origin" || literal == "0" {
            return Ok(TripodPoint::origin());
        }
        let bad = || Error::input(format!("tripod point literal '{literal}' is not 'branch:r'"));
        let (b, r) = literal.split_once(':').ok_or_else(bad)?;
        let p = TripodPoint::new(
            b.trim().parse().map_err(|_| bad())?,
            r.trim().parse().map_err(|_| bad())?,
        );
        Tripod.check(&p)?;
        Ok(p)
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> TripodPoint {
        TripodPoint::new(rng.gen_range(1..=3), rng.gen_range(0.0..3.0))
    }

    fn sample_ray(&self, rng: &mut ChaCha8Rng, base: &TripodPoint) -> Result<Ray<TripodPoint>> {
        let speed: f64 = rng.gen_range(0.5..2.0);
        let target: usize = rng.gen_range(1..=3);
        if base.is_origin() || target == base.branch {
            return Ray::through(&Tripod, *base, TripodPoint::new(target, base.r.max(0.0) + speed));
        }
        // Through the vertex: store one sample past it.
        let mut t = 1.0;
        while speed * t <= base.r {
            t *= 2.0;
        }
        Ray::from_samples(
            &Tripod,
            vec![0.0, t],
            vec![*base, TripodPoint::new(target, speed * t - base.r)],
        )
    }

    fn ray_base(&self) -> TripodPoint {
        TripodPoint::origin()
    }
}

// ---------------------------------------------------------------------------

pub struct ToricModel {
    id: String,
    config: ToricConfig,
    space: ToricSpace,
    f: ToricMabuchi,
}

/// Amplitude of the default sine perturbation of the Guillemin potential.
pub const TORIC_DEFAULT_AMPLITUDE: f64 = 0.1;

impl ToricModel {
    pub fn new(id: &str, config: ToricConfig) -> Result<Self> {
        Ok(ToricModel {
            id: id.to_string(),
            config,
            space: ToricSpace::new(config.n)?,
            f: ToricMabuchi::new(config),
        })
    }

    pub fn config(&self) -> ToricConfig {
        self.config
    }

    fn profile(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        grid(self.config.n).into_iter().map(f).collect()
    }

    fn potential(&self, phi: Vec<f64>) -> Result<SymplecticPotential> {
        let p = SymplecticPotential::from_samples(phi);
        inverse_second_derivative(&p)?;
        Ok(p)
    }

    /// u₀ + amp·sin(πx).
    pub fn sine_start(&self, amp: f64) -> SymplecticPotential {
        let pi = std::f64::consts::PI;
        SymplecticPotential::from_samples(self.profile(|x| amp * (pi * x).sin()))
    }
}

/// A random convex profile: nonnegative mix of convex atoms plus an affine part.
fn convex_profile(rng: &mut ChaCha8Rng, x: &[f64]) -> Vec<f64> {
    let c: f64 = rng.gen_range(-1.0..1.0);
    let b: f64 = rng.gen_range(-1.0..1.0);
    let w_sq: f64 = rng.gen_range(0.0..1.0);
    let w_soft: f64 = rng.gen_range(0.0..1.0);
    let kink: f64 = rng.gen_range(0.1..0.9);
    let sharp: f64 = rng.gen_range(2.0..20.0);
    x.iter()
        .map(|&t| {
            let soft = ((sharp * (t - kink)).exp().ln_1p()) / sharp;
            c + b * t + w_sq * t * t + w_soft * soft
        })
        .collect()
}

impl Model for ToricModel {
    type Space = ToricSpace;
    type F = ToricMabuchi;

    fn id(&self) -> String {
        self.id.clone()
    }

    fn space(&self) -> &ToricSpace {
        &self.space
    }

    fn functional(&self) -> &ToricMabuchi {
        &self.f
    }

    fn analytic(&self) -> AnalyticAnswers {
        let a = self.config.a;
        if (a - 2.0).abs() == 0.0 {
            AnalyticAnswers::stable()
        } else {
            // −L_a(f) ≤ (a − 2)∫f ≤ |a − 2|·‖f‖ for convex f when a > 2, with
            // equality only along constants; for a < 2 the constants point down.
            let sign = if a > 2.0 { 1.0 } else { -1.0 };
            AnalyticAnswers::unstable(
                (a - 2.0).abs(),
                crate::model::AnalyticDirection::Profile(vec![sign; self.config.n + 1]),
            )
        }
    }

    fn options(&self) -> PipelineOptions {
        PipelineOptions {
            horizon: 256.0,
            tol: 1e-5,
            ray_time: 1.0,
            ..PipelineOptions::default()
        }
    }

    fn certification_tol(&self) -> f64 {
        2e-2
    }

    fn is_flat(&self) -> bool {
        true
    }

    fn smooth(&self) -> bool {
        true
    }

    /// Short enough that τ resolves the stiff modes of the start at m = 64.
    fn diagnostic_horizon(&self) -> f64 {
        0.005
    }

    fn default_start(&self) -> SymplecticPotential {
        self.sine_start(TORIC_DEFAULT_AMPLITUDE)
    }

    fn canonical_starts(&self) -> Vec<SymplecticPotential> {
        let pi = std::f64::consts::PI;
        let n = self.config.n;
        vec![
            self.default_start(),
            SymplecticPotential::guillemin(n),
            SymplecticPotential::from_samples(self.profile(|x| 0.5 + 0.2 * x + 0.01 * (2.0 * pi * x).sin())),
        ]
    }

    fn parse_point(&self, literal: &str) -> Result<SymplecticPotential> {
        let literal = literal.trim();
        let n = self.config.n;
        let number = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::input(format!("bad number in potential literal '{literal}'")))
        };
        let phi = if literal == "zero" || literal == "guillemin" {
            vec![0.0; n + 1]
        } else if let Some(a) = literal.strip_prefix("sin:") {
            let amp = number(a)?;
            self.profile(|x| amp * (std::f64::consts::PI * x).sin())
        } else if let Some(c) = literal.strip_prefix("const:") {
            vec![number(c)?; n + 1]
        } else {
            let v = parse_vector(literal)?;
            if v.len() != n + 1 {
                return Err(Error::input(format!(
                    "potential literal has {} samples, grid needs {}",
                    v.len(),
                    n + 1
                )));
            }
            v
        };
        self.potential(phi)
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> SymplecticPotential {
        // Σ|b_k|(kπ)² stays below 4 = min u₀″, so samples are convex.
        let pi = std::f64::consts::PI;
        let c: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        let amps: Vec<f64> = (1..=3).map(|_| rng.gen_range(-0.02..0.02)).collect();
        SymplecticPotential::from_samples(self.profile(|x| {
            c + b * x
                + amps
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * pi * x).sin())
                    .sum::<f64>()
        }))
    }

    fn sample_ray(&self, rng: &mut ChaCha8Rng, base: &SymplecticPotential) -> Result<Ray<SymplecticPotential>> {
        let x = grid(self.config.n);
        let mut f = convex_profile(rng, &x);
        while l2_norm(&f) < 1e-3 {
            f = convex_profile(rng, &x);
        }
        Ray::through(&self.space, base.clone(), base.translate(&f, 1.0))
    }

    fn ray_base(&self) -> SymplecticPotential {
        SymplecticPotential::guillemin(self.config.n)
    }

    /// Rays are compared modulo constants, along which M_a is affine.
    fn ray_gap(&self, a: &SymplecticPotential, b: &SymplecticPotential) -> Result<f64> {
        let d = a.difference(b);
        let w = trapezoid_weights(self.config.n);
        let mean: f64 = d.iter().zip(&w).map(|(v, w)| v * w).sum();
        Ok(l2_norm(&d.iter().map(|v| v - mean).collect::<Vec<_>>()))
    }

    fn snapshot(&self, p: &SymplecticPotential) -> Option<Result<String>> {
        Some(toric_snapshot(p))
    }
}

/// CSV with columns x, u, phi, S, w for one potential.
pub fn toric_snapshot(p: &SymplecticPotential) -> Result<String> {
    let s = scalar_curvature(p)?;
    let w = inverse_second_derivative(p)?;
    let u = p.u_samples();
    let phi = p.samples();
    let mut out = String::from("x,u,phi,S,w\n");
    for (i, x) in grid(p.n()).iter().enumerate() {
        out.push_str(&format!("{x},{},{},{},{}\n", u[i], phi[i], s[i], w[i]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_resolve() {
        for id in CANONICAL_IDS {
            assert_eq!(resolve(id).unwrap().id(), id);
        }
        assert!(resolve("toric.a3.0").is_ok());
        assert!(resolve("euclid.quadratic.3").is_ok());
        assert!(resolve("tripod.0.0.2").is_err());
        assert!(resolve("tripod.0.0.2.tie").is_ok());
        for bad in [
            "",
            "euclid",
            "euclid.linear",
            "tripod.1.2",
            "toric.N8.a2.0",
            "toric.N256",
            "nope.1",
        ] {
            assert!(resolve(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn toric_id_parts() {
        match resolve("toric.N64.a2.5").unwrap() {
            AnyModel::Toric(m) => assert_eq!(m.config(), ToricConfig::new(64, 2.5).unwrap()),
            _ => panic!("not toric"),
        }
    }

    #[test]
    fn tripod_literals() {
        let m = TripodModel::new([-1.0, 2.0, 2.0], false).unwrap();
        assert_eq!(m.parse_point("2:1.5").unwrap(), TripodPoint::new(2, 1.5));
        assert!(m.parse_point("4:1").is_err());
        assert!(m.parse_point("1:-1").is_err());
        assert_eq!(m.id(), "tripod.-1.2.2");
    }

    #[test]
    fn starts_are_deterministic() {
        let AnyModel::Euclid(m) = resolve("euclid.quadratic.2").unwrap() else {
            panic!()
        };
        assert_eq!(m.starts(6, 7), m.starts(6, 7));
        assert_ne!(m.starts(6, 7), m.starts(6, 8));
    }
}
