//! Property suites run by `hadflow check`: geometry, flow diagnostics,
//! moment-weight inequality and binding of the limit slope.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{
    energy_identity_residual, evi_constant, evi_residual, limit_slope, mayer_flow, sandwich_check, FlowTrajectory,
};
use crate::geodesic::{cat0_defect, GeodesicSpace};
use crate::ray::{chordal_distance, moment_weight_gap, ray_cat0_defect, Ray};
use crate::registry::{AnyModel, Model, ModelVisitor};

pub const CAT0_TRIPLES: usize = 200;
pub const RAY_TRIPLES: usize = 100;
pub const MOMENT_WEIGHT_SAMPLES: usize = 50;
pub const CAT0_TOL: f64 = 1e-9;
pub const FLAT_TOL: f64 = 1e-12;
pub const RAY_CAT0_TOL: f64 = 1e-6;
pub const SANDWICH_TOL: f64 = 1e-8;
pub const MOMENT_WEIGHT_TOL: f64 = 1e-6;
pub const BIND_TOL: f64 = 2e-3;
/// Step counts of the diagnostic flows; the second run doubles m.
pub const DIAGNOSTIC_STEPS: usize = 64;
/// Accepted band for the energy-identity residual ratio per m-doubling.
pub const HALVING_BAND: (f64, f64) = (1.6, 2.4);
/// Slack for monotonicity of slopes along a flow.
const MONOTONE_SLACK: f64 = 1e-9;
/// Number of reference points for EVI residuals.
const EVI_REFERENCES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Cat0,
    Evi,
    Sandwich,
    MomentWeight,
    Bind,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Cat0,
        Suite::Evi,
        Suite::Sandwich,
        Suite::MomentWeight,
        Suite::Bind,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Cat0 => "cat0",
            Suite::Evi => "evi",
            Suite::Sandwich => "sandwich",
            Suite::MomentWeight => "moment-weight",
            Suite::Bind => "bind",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::input(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub instance: String,
    pub passed: bool,
    pub metrics: Vec<Metric>,
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(suite: Suite, instance: String) -> Self {
        SuiteResult {
            suite: suite.name().into(),
            instance,
            passed: true,
            metrics: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Records value ≤ bound.
    fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, bound, value <= bound);
    }

    /// Records value ≥ bound.
    fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, bound, value >= bound);
    }

    fn push(&mut self, name: &str, value: f64, bound: f64, passed: bool) {
        if !passed {
            self.passed = false;
            self.failures.push(format!("{name} = {value:.6e} (bound {bound:.3e})"));
        }
        self.metrics.push(Metric {
            name: name.into(),
            value,
            bound,
            passed,
        });
    }

    fn fail(&mut self, message: String) {
        self.passed = false;
        self.failures.push(message);
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

/// Runs one suite on one instance. Equal seeds give equal results.
pub fn run_suite(suite: Suite, model: &AnyModel, seed: u64) -> SuiteResult {
    model.visit(SuiteVisitor { suite, seed })
}

struct SuiteVisitor {
    suite: Suite,
    seed: u64,
}

impl ModelVisitor for SuiteVisitor {
    type Output = SuiteResult;

    fn visit<M: Model>(self, model: &M) -> SuiteResult {
        let mut out = SuiteResult::new(self.suite, model.id());
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let run = match self.suite {
            Suite::Cat0 => cat0_suite(model, &mut rng, &mut out),
            Suite::Evi => evi_suite(model, &mut rng, &mut out),
            Suite::Sandwich => sandwich_suite(model, &mut out),
            Suite::MomentWeight => moment_weight_suite(model, &mut rng, &mut out),
            Suite::Bind => bind_suite(model, &mut out),
        };
        if let Err(e) = run {
            out.fail(format!("error: {e}"));
        }
        out
    }
}

type Point<M> = <<M as Model>::Space as GeodesicSpace>::Point;

fn cat0_suite<M: Model>(model: &M, rng: &mut ChaCha8Rng, out: &mut SuiteResult) -> Result<()> {
    let space = model.space();
    let mut max_defect = f64::NEG_INFINITY;
    let mut max_abs_defect = 0.0f64;
    let mut triangle = f64::NEG_INFINITY;
    let mut speed = 0.0f64;
    for _ in 0..CAT0_TRIPLES {
        let (x, y, z) = (
            model.sample_point(rng),
            model.sample_point(rng),
            model.sample_point(rng),
        );
        let (s, t): (f64, f64) = (rng.gen(), rng.gen());
        let defect = cat0_defect(space, &x, &y, &z, s, t)?;
        max_defect = max_defect.max(defect);
        max_abs_defect = max_abs_defect.max(defect.abs());
        let (dxy, dyz, dxz) = (
            space.distance(&x, &y)?,
            space.distance(&y, &z)?,
            space.distance(&x, &z)?,
        );
        triangle = triangle.max(dxz - dxy - dyz);
        let p = space.interpolate(&x, &y, s)?;
        let (d0, d1) = (space.distance(&x, &p)?, space.distance(&p, &y)?);
        speed = speed
            .max((d0 - s * dxy).abs() / (1.0 + dxy))
            .max((d1 - (1.0 - s) * dxy).abs() / (1.0 + dxy));
    }
    out.at_most("max_cat0_defect", max_defect, CAT0_TOL);
    if model.is_flat() {
        out.at_most("max_abs_cat0_defect", max_abs_defect, FLAT_TOL);
    }
    out.at_most("triangle_violation", triangle, CAT0_TOL);
    out.at_most("geodesic_speed_error", speed, CAT0_TOL);

    let base = model.ray_base();
    let t_max = model.options().t_max;
    let mut ray_defect = f64::NEG_INFINITY;
    let mut chordal_triangle = f64::NEG_INFINITY;
    for _ in 0..RAY_TRIPLES {
        let l = model.sample_ray(rng, &base)?;
        let l0 = model.sample_ray(rng, &base)?;
        let l1 = model.sample_ray(rng, &base)?;
        let s: f64 = rng.gen();
        ray_defect = ray_defect.max(ray_cat0_defect(space, &l, &l0, &l1, s, t_max)?);
        let dc = |a: &Ray<Point<M>>, b: &Ray<Point<M>>| Ok::<f64, Error>(chordal_distance(space, a, b, t_max)?.value);
        chordal_triangle = chordal_triangle.max(dc(&l, &l1)? - dc(&l, &l0)? - dc(&l0, &l1)?);
    }
    out.at_most("max_ray_cat0_defect", ray_defect, RAY_CAT0_TOL);
    out.at_most("chordal_triangle_violation", chordal_triangle, RAY_CAT0_TOL);
    Ok(())
}

fn diagnostic_flow<M: Model>(model: &M, m: usize) -> Result<FlowTrajectory<Point<M>>> {
    mayer_flow(
        model.space(),
        model.dominating(),
        &model.default_start(),
        model.diagnostic_horizon(),
        m,
        &model.options().flow,
    )
}

/// Slopes used by the checks: the exact value when the functional provides
/// one, the resolvent estimate otherwise.
fn best_slopes<P>(traj: &FlowTrajectory<P>) -> Vec<f64> {
    traj.slopes
        .iter()
        .zip(&traj.analytic_slopes)
        .map(|(s, a)| a.unwrap_or(*s))
        .collect()
}

fn evi_suite<M: Model>(model: &M, rng: &mut ChaCha8Rng, out: &mut SuiteResult) -> Result<()> {
    let space = model.space();
    let g = model.dominating();
    let coarse = diagnostic_flow(model, DIAGNOSTIC_STEPS)?;
    let fine = diagnostic_flow(model, 2 * DIAGNOSTIC_STEPS)?;

    let mut refs = vec![model.default_start(), coarse.last_point().clone()];
    while refs.len() < EVI_REFERENCES {
        refs.push(model.sample_point(rng));
    }
    let constant = |traj: &FlowTrajectory<Point<M>>| -> Result<f64> {
        let mut c = 0.0f64;
        for v in &refs {
            c = c.max(evi_constant(&evi_residual(space, g, traj, v)?, traj.tau));
        }
        Ok(c)
    };
    let (c_m, c_2m) = (constant(&coarse)?, constant(&fine)?);
    // C is reported; stability means doubling m changes it by at most half.
    let drift = (c_2m - c_m).abs();
    out.push("evi_constant", c_m, f64::NAN, true);
    out.push("evi_constant_doubled", c_2m, f64::NAN, true);
    out.at_most("evi_constant_drift", drift, 0.5 * c_m.max(c_2m) + 1e-6);

    let slopes = best_slopes(&fine);
    let increase = slopes
        .windows(2)
        .map(|w| (w[1] - w[0]) / (1.0 + w[0].abs()))
        .fold(f64::NEG_INFINITY, f64::max);
    out.at_most("slope_increase", increase, MONOTONE_SLACK);

    if model.smooth() {
        let (r_m, r_2m) = (
            max_of(&energy_identity_residual(&coarse)),
            max_of(&energy_identity_residual(&fine)),
        );
        out.push("energy_residual", r_m, f64::NAN, true);
        out.push("energy_residual_doubled", r_2m, f64::NAN, true);
        let floor = 1e-10 * (1.0 + slopes[0] * slopes[0]);
        if r_m <= floor {
            // Exact chains (linear G) have nothing to halve.
            out.at_most("energy_residual_floor", r_2m, floor);
        } else {
            let ratio = r_m / r_2m;
            out.at_least("energy_halving_ratio_low", ratio, HALVING_BAND.0);
            out.at_most("energy_halving_ratio_high", ratio, HALVING_BAND.1);
        }
    }
    Ok(())
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn sandwich_suite<M: Model>(model: &M, out: &mut SuiteResult) -> Result<()> {
    let mut traj = diagnostic_flow(model, 2 * DIAGNOSTIC_STEPS)?;
    traj.slopes = best_slopes(&traj);
    let n = traj.len();
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for t_idx in 0..n {
        for s_idx in t_idx + 1..n {
            let gaps = sandwich_check(model.space(), &traj, t_idx, s_idx)?;
            let scale = 1.0 + traj.values[t_idx].abs().max(traj.values[s_idx].abs());
            lower = lower.min(gaps.lower / scale);
            upper = upper.min(gaps.upper / scale);
        }
    }
    out.at_least("min_lower_gap", lower, -SANDWICH_TOL);
    out.at_least("min_upper_gap", upper, -SANDWICH_TOL);
    Ok(())
}

fn moment_weight_suite<M: Model>(model: &M, rng: &mut ChaCha8Rng, out: &mut SuiteResult) -> Result<()> {
    let space = model.space();
    let f = model.functional();
    let mut rays = Vec::with_capacity(MOMENT_WEIGHT_SAMPLES);
    let mut probes = Vec::with_capacity(MOMENT_WEIGHT_SAMPLES);
    for _ in 0..MOMENT_WEIGHT_SAMPLES {
        let base = model.sample_point(rng);
        rays.push(model.sample_ray(rng, &base)?);
        probes.push(model.sample_point(rng));
    }
    let gap = moment_weight_gap(space, f, &rays, &probes, model.options().t_max)?;
    out.push("min_slope", gap.min_slope, f64::NAN, true);
    out.push("max_ratio", gap.max_ratio, f64::NAN, true);
    out.at_least("gap", gap.gap, -MOMENT_WEIGHT_TOL);
    Ok(())
}

fn bind_suite<M: Model>(model: &M, out: &mut SuiteResult) -> Result<()> {
    let starts = model.starts(2, 0);
    let opts = model.options();
    let g = model.dominating();
    let mut values = Vec::with_capacity(2);
    for x0 in &starts {
        let l = limit_slope(model.space(), g, x0, opts.limit_horizon, opts.tol, &opts.flow)?;
        if !l.converged {
            out.fail(format!("limit slope did not converge by t = {}", l.horizon));
        }
        values.push(l.value);
    }
    out.push("B_first", values[0], f64::NAN, true);
    out.push("B_second", values[1], f64::NAN, true);
    out.at_most("bind_difference", (values[0] - values[1]).abs(), BIND_TOL);
    Ok(())
}
