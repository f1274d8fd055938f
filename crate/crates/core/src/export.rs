//! CSV, JSON ("v1") and plot-script output for trajectories, rays and reports.
//!
//! All writers are pure functions of their inputs: numbers use Rust's shortest
//! round-trip formatting and JSON objects keep insertion order, so equal runs
//! give byte-identical files.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::destabilizer::{Case, SharpnessReport};
use crate::error::Result;
use crate::flow::{energy_identity_residual, FlowTrajectory};
use crate::functional::Functional;
use crate::geodesic::GeodesicSpace;
use crate::model::AnalyticAnswers;
use crate::ray::Ray;

pub const SCHEMA_VERSION: &str = "v1";

/// JSON schema files shipped with the crate, by file name.
pub const SCHEMAS: [(&str, &str); 3] = [
    ("trajectory.v1.json", include_str!("../schemas/trajectory.v1.json")),
    ("report.v1.json", include_str!("../schemas/report.v1.json")),
    ("check.v1.json", include_str!("../schemas/check.v1.json")),
];

/// Run metadata shared by every emitted document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub instance: String,
    pub seed: u64,
    pub horizon: f64,
    pub tol: f64,
    pub m_cap: usize,
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Finite numbers as JSON numbers, the rest as null.
fn jnum(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Payloads up to this length get one CSV column per coordinate.
pub const MAX_POSITION_COLUMNS: usize = 8;

/// Trajectory CSV: t, value, slope, dist_from_start, energy_residual,
/// slope_warning, the functional's analytic-slope column and, for short
/// payloads, the position as pos1, pos2, …
pub fn trajectory_csv<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    traj: &FlowTrajectory<S::Point>,
) -> Result<String> {
    let energy = energy_identity_residual(traj);
    let width = space.payload(&traj.points[0]).len();
    let positions = width <= MAX_POSITION_COLUMNS;
    let mut out = format!(
        "t,value,slope,dist_from_start,energy_residual,slope_warning,{}",
        g.analytic_slope_label()
    );
    if positions {
        (1..=width).for_each(|i| out.push_str(&format!(",pos{i}")));
    }
    out.push('\n');
    for k in 0..traj.len() {
        let dist = space.distance(&traj.points[0], &traj.points[k])?;
        let residual = energy.get(k).map(|&r| num(r)).unwrap_or_default();
        let warning = traj.slope_warnings[k].as_deref().map(csv_text).unwrap_or_default();
        let analytic = traj.analytic_slopes[k].map(num).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            num(traj.times[k]),
            num(traj.values[k]),
            num(traj.slopes[k]),
            num(dist),
            residual,
            warning,
            analytic
        ));
        if positions {
            space
                .payload(&traj.points[k])
                .into_iter()
                .for_each(|v| out.push_str(&format!(",{}", num(v))));
        }
        out.push('\n');
    }
    Ok(out)
}

/// JSON mirror of a trajectory with run metadata.
pub fn trajectory_json<S: GeodesicSpace, G: Functional<S> + ?Sized>(
    space: &S,
    g: &G,
    traj: &FlowTrajectory<S::Point>,
    meta: &RunMeta,
) -> Result<Value> {
    let energy = energy_identity_residual(traj);
    let mut nodes = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let mut node = Map::new();
        node.insert("t".into(), jnum(traj.times[k]));
        node.insert("value".into(), jnum(traj.values[k]));
        node.insert("slope".into(), jnum(traj.slopes[k]));
        node.insert(
            "dist_from_start".into(),
            jnum(space.distance(&traj.points[0], &traj.points[k])?),
        );
        node.insert(
            "energy_residual".into(),
            energy.get(k).map(|&r| jnum(r)).unwrap_or(Value::Null),
        );
        node.insert(
            "analytic_slope".into(),
            traj.analytic_slopes[k].map(jnum).unwrap_or(Value::Null),
        );
        node.insert(
            "slope_warning".into(),
            traj.slope_warnings[k].clone().map(Value::String).unwrap_or(Value::Null),
        );
        nodes.push(Value::Object(node));
    }
    Ok(json!({
        "schema": SCHEMA_VERSION,
        "kind": "trajectory",
        "meta": meta,
        "functional": g.name(),
        "analytic_label": g.analytic_slope_label(),
        "m": traj.m,
        "tau": jnum(traj.tau),
        "cauchy_gap": traj.cauchy_gap.map(jnum).unwrap_or(Value::Null),
        "start": space.payload(&traj.points[0]).into_iter().map(jnum).collect::<Vec<_>>(),
        "end": space.payload(traj.last_point()).into_iter().map(jnum).collect::<Vec<_>>(),
        "nodes": nodes,
    }))
}

/// {base, speed, times[], payload[][]}.
pub fn ray_json<S: GeodesicSpace>(space: &S, ray: &Ray<S::Point>) -> Value {
    json!({
        "base": space.payload(ray.base()).into_iter().map(jnum).collect::<Vec<_>>(),
        "speed": jnum(ray.speed()),
        "times": ray.times().iter().map(|&t| jnum(t)).collect::<Vec<_>>(),
        "payload": ray
            .samples()
            .iter()
            .map(|p| space.payload(p).into_iter().map(jnum).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "flag": ray.flag,
    })
}

/// Ray samples as CSV: time, then one column per payload coordinate.
pub fn ray_csv<S: GeodesicSpace>(space: &S, ray: &Ray<S::Point>) -> String {
    let width = space.payload(ray.base()).len();
    let mut out = String::from("t");
    for i in 0..width {
        out.push_str(&format!(",p{i}"));
    }
    out.push('\n');
    for (t, p) in ray.times().iter().zip(ray.samples()) {
        out.push_str(&num(*t));
        for v in space.payload(p) {
            out.push(',');
            out.push_str(&num(v));
        }
        out.push('\n');
    }
    out
}

fn case_name(case: Case) -> &'static str {
    match case {
        Case::Bounded => "bounded",
        Case::Escaping => "escaping",
    }
}

/// Extra fields attached to a report document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportExtras {
    pub uniqueness: Option<f64>,
    pub starts: usize,
    pub certification_tol: f64,
}

/// The sharpness report as a JSON document.
pub fn report_json<S: GeodesicSpace>(
    space: &S,
    report: &SharpnessReport<S::Point>,
    start: &S::Point,
    analytic: &AnalyticAnswers,
    meta: &RunMeta,
    extras: &ReportExtras,
) -> Result<Value> {
    let ray = if report.case == Case::Escaping {
        ray_json(space, &report.ray)
    } else {
        Value::Null
    };
    Ok(json!({
        "schema": SCHEMA_VERSION,
        "kind": "sharpness_report",
        "meta": meta,
        "start": space.payload(start).into_iter().map(jnum).collect::<Vec<_>>(),
        "B": jnum(report.b),
        "case": case_name(report.case),
        "ratio": jnum(report.ratio),
        "norm": jnum(report.norm),
        "gap": jnum(report.gap),
        "unstable": report.unstable(meta.tol),
        "certification_tol": jnum(extras.certification_tol),
        "certified": report.gap >= -1e-6
            && (report.case == Case::Bounded || report.gap.abs() <= extras.certification_tol),
        "ray": ray,
        "analytic": {
            "B": jnum(analytic.b),
            "direction": serde_json::to_value(&analytic.direction).unwrap_or(Value::Null),
            "tie": analytic.tie,
        },
        "uniqueness": extras.uniqueness.map(jnum).unwrap_or(Value::Null),
        "starts": extras.starts,
        "diagnostics": serde_json::to_value(&report.diagnostics).unwrap_or(Value::Null),
    }))
}

pub const REPORT_SUMMARY_HEADER: &str = "instance,seed,start,case,B,ratio,norm,gap,unstable,uniqueness\n";

/// One summary CSV row (with trailing newline) for aggregation across runs;
/// `start` is the index of the start point within the run.
pub fn report_summary_row<P>(
    report: &SharpnessReport<P>,
    meta: &RunMeta,
    start: usize,
    uniqueness: Option<f64>,
) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        csv_text(&meta.instance),
        meta.seed,
        start,
        case_name(report.case),
        num(report.b),
        num(report.ratio),
        num(report.norm),
        num(report.gap),
        report.unstable(meta.tol),
        uniqueness.map(num).unwrap_or_default()
    )
}

/// A matplotlib script plotting value/slope against t and the ray profile.
pub fn plot_script(trajectory_csv: &str, ray_csv: Option<&str>, title: &str) -> String {
    let ray_part = match ray_csv {
        Some(file) => format!(
            r#"
ray = read_csv(os.path.join(here, "{file}"))
fig, ax = plt.subplots()
cols = [c for c in ray if c != "t"]
if len(cols) > 8:
    # Potential samples: plot the profile of the ray at time 1 minus its base.
    base = [ray[c][0] for c in cols]
    one = [ray[c][1] for c in cols]
    xs = [i / (len(cols) - 1) for i in range(len(cols))]
    ax.plot(xs, [b - a for a, b in zip(base, one)])
    ax.set_xlabel("x")
    ax.set_ylabel("ray direction")
else:
    for c in cols:
        ax.plot(ray["t"], ray[c], marker="o", label=c)
    ax.set_xlabel("ray time")
    ax.legend()
ax.set_title("extracted ray")
fig.savefig(os.path.join(here, "ray.png"), dpi=120)
"#
        ),
        None => String::new(),
    };
    format!(
        r#"#!/usr/bin/env python3
# Plots for {title}; reads the CSV files written next to this script.
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {{}}
    for key in rows[0]:
        vals = []
        for r in rows:
            try:
                vals.append(float(r[key]))
            except ValueError:
                vals.append(float("nan"))
        out[key] = vals
    return out


traj = read_csv(os.path.join(here, "{trajectory_csv}"))
fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
a.plot(traj["t"], traj["value"])
a.set_xlabel("t")
a.set_ylabel("value")
b.semilogy(traj["t"], [max(s, 1e-16) for s in traj["slope"]], label="slope")
b.set_xlabel("t")
b.legend()
fig.suptitle("{title}")
fig.savefig(os.path.join(here, "flow.png"), dpi=120)
{ray_part}"#
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(-2.0), "-2");
        assert_eq!(jnum(f64::NAN), Value::Null);
        assert_eq!(csv_text("a,b"), "\"a,b\"");
    }

    #[test]
    fn schemas_parse() {
        for (name, text) in SCHEMAS {
            let v: Value = serde_json::from_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(v.get("$schema").is_some(), "{name}");
        }
    }
}
