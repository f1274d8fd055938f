//! The four subcommands. Instances and starts run on a rayon pool; results are
//! merged in input order before anything is written.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use hadamard_flow::destabilizer::{pairwise_chordal, sharpness_report, Case};
use hadamard_flow::export::{
    plot_script, ray_csv, report_json, report_summary_row, trajectory_csv, trajectory_json, ReportExtras, RunMeta,
    REPORT_SUMMARY_HEADER, SCHEMA_VERSION,
};
use hadamard_flow::flow::flow;
use hadamard_flow::functional::Functional;
use hadamard_flow::geodesic::GeodesicSpace;
use hadamard_flow::registry::{resolve, AnyModel, Model, ModelVisitor, CANONICAL_IDS};
use hadamard_flow::suites::{run_suite, SuiteResult};

use crate::config::RunConfig;
use crate::CliError;

type Point<M> = <<M as Model>::Space as GeodesicSpace>::Point;

/// Files to write and lines to print for one instance.
#[derive(Debug, Default)]
struct Artifact {
    files: Vec<(String, String)>,
    lines: Vec<String>,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::config(format!("cannot start {jobs} worker threads: {e}")))
}

fn resolve_all(ids: &[String]) -> Result<Vec<AnyModel>, CliError> {
    if ids.is_empty() {
        return Err(CliError::config("no instance given (use --instance)"));
    }
    ids.iter()
        .map(|id| resolve(id).map_err(|e| CliError::unknown_instance(id, e)))
        .collect()
}

fn write_all(out: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    for a in artifacts {
        for (name, body) in &a.files {
            let path = out.join(name);
            fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// The start from `--x0`, or the instance default; must lie in the domain of F and G.
fn start_point<M: Model>(m: &M, literal: Option<&str>) -> Result<Point<M>, CliError> {
    let x = match literal {
        Some(l) => m.parse_point(l).map_err(|e| CliError::config(format!("--x0: {e}")))?,
        None => m.default_start(),
    };
    check_domain(m, &x)?;
    Ok(x)
}

fn check_domain<M: Model>(m: &M, x: &Point<M>) -> Result<(), CliError> {
    for g in [m.functional(), m.dominating()] {
        let v = g.value(m.space(), x).map_err(CliError::from)?;
        if !v.is_finite() {
            return Err(CliError::config(format!(
                "start point is outside the domain of {}",
                g.name()
            )));
        }
    }
    Ok(())
}

fn meta<M: Model>(m: &M, cfg: &RunConfig, horizon: f64, tol: f64, m_cap: usize) -> RunMeta {
    RunMeta {
        instance: m.id(),
        seed: cfg.seed,
        horizon,
        tol,
        m_cap,
    }
}

struct FlowRun<'a>(&'a RunConfig);

impl ModelVisitor for FlowRun<'_> {
    type Output = Result<Artifact, CliError>;

    fn visit<M: Model>(self, m: &M) -> Self::Output {
        let cfg = self.0;
        let opts = m.options();
        let x0 = start_point(m, cfg.x0.as_deref())?;
        let horizon = cfg.horizon.unwrap_or(opts.horizon);
        let tol = cfg.tol.unwrap_or(opts.cauchy_tol);
        let mut fc = opts.flow.clone();
        if let Some(c) = cfg.m_cap {
            fc.m_cap = c;
        }
        let traj = flow(m.space(), m.functional(), &x0, horizon, tol, &fc)?;
        let meta = meta(m, cfg, horizon, tol, fc.m_cap);
        let id = m.id();
        let mut art = Artifact::default();
        art.files.push((
            format!("{id}.trajectory.csv"),
            trajectory_csv(m.space(), m.functional(), &traj)?,
        ));
        let doc = trajectory_json(m.space(), m.functional(), &traj, &meta)?;
        art.files.push((format!("{id}.trajectory.json"), pretty(&doc)));
        if let Some(snap) = m.snapshot(traj.last_point()) {
            art.files.push((format!("{id}.snapshot.csv"), snap?));
        }
        let last = traj.len() - 1;
        art.lines.push(format!(
            "{id}: T = {horizon}, m = {}, cauchy gap = {:.3e}, value {:.9} -> {:.9}, slope {:.6e} -> {:.6e}",
            traj.m,
            traj.cauchy_gap.unwrap_or(f64::NAN),
            traj.values[0],
            traj.values[last],
            traj.slopes[0],
            traj.slopes[last],
        ));
        Ok(art)
    }
}

struct DestabilizeRun<'a>(&'a RunConfig);

impl ModelVisitor for DestabilizeRun<'_> {
    type Output = Result<Artifact, CliError>;

    fn visit<M: Model>(self, m: &M) -> Self::Output {
        let cfg = self.0;
        let mut opts = m.options();
        if let Some(t) = cfg.horizon {
            opts.horizon = t;
        }
        if let Some(t) = cfg.tol {
            opts.tol = t;
        }
        if let Some(c) = cfg.m_cap {
            opts.flow.m_cap = c;
        }
        let mut starts = m.starts(cfg.starts, cfg.seed);
        if cfg.x0.is_some() {
            starts[0] = start_point(m, cfg.x0.as_deref())?;
        }
        for x in &starts {
            check_domain(m, x)?;
        }
        let reports = starts
            .par_iter()
            .map(|x| sharpness_report(m.space(), m.functional(), m.dominating(), x, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        let uniqueness = if reports.len() > 1 {
            Some(pairwise_chordal(m.space(), &reports, opts.t_max, |a, b| {
                m.ray_gap(a, b)
            })?)
        } else {
            None
        };

        let id = m.id();
        let meta = meta(m, cfg, opts.horizon, opts.tol, opts.flow.m_cap);
        let extras = ReportExtras {
            uniqueness,
            starts: starts.len(),
            certification_tol: m.certification_tol(),
        };
        let primary = &reports[0];
        let doc = report_json(m.space(), primary, &starts[0], &m.analytic(), &meta, &extras)?;
        let mut summary = String::from(REPORT_SUMMARY_HEADER);
        let mut art = Artifact::default();
        for (k, r) in reports.iter().enumerate() {
            let row = report_summary_row(r, &meta, k, uniqueness);
            art.lines.push(row.trim_end().to_string());
            summary.push_str(&row);
        }

        // The flow behind the primary report, for plotting.
        let traj = flow(
            m.space(),
            m.functional(),
            &starts[0],
            opts.horizon,
            opts.cauchy_tol,
            &opts.flow,
        )?;
        let traj_name = format!("{id}.trajectory.csv");
        let ray_name = format!("{id}.ray.csv");
        art.files.push((format!("{id}.report.json"), pretty(&doc)));
        art.files.push((format!("{id}.summary.csv"), summary));
        art.files
            .push((traj_name.clone(), trajectory_csv(m.space(), m.functional(), &traj)?));
        let escaping = primary.case == Case::Escaping;
        if escaping {
            art.files.push((ray_name.clone(), ray_csv(m.space(), &primary.ray)));
        }
        let script = plot_script(&traj_name, escaping.then_some(ray_name.as_str()), &id);
        art.files.push((format!("{id}.plot.py"), script));
        if let Some(snap) = m.snapshot(traj.last_point()) {
            art.files.push((format!("{id}.snapshot.csv"), snap?));
        }
        Ok(art)
    }
}

pub fn cmd_flow(cfg: &RunConfig) -> Result<i32, CliError> {
    let models = resolve_all(&cfg.instances)?;
    let arts = pool(cfg.jobs)?.install(|| {
        models
            .par_iter()
            .map(|m| m.visit(FlowRun(cfg)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    write_all(&cfg.out, &arts)?;
    for a in &arts {
        a.lines.iter().for_each(|l| println!("{l}"));
    }
    Ok(0)
}

pub fn cmd_destabilize(cfg: &RunConfig) -> Result<i32, CliError> {
    let models = resolve_all(&cfg.instances)?;
    let arts = pool(cfg.jobs)?.install(|| {
        models
            .par_iter()
            .map(|m| m.visit(DestabilizeRun(cfg)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    write_all(&cfg.out, &arts)?;
    print!("{REPORT_SUMMARY_HEADER}");
    for a in &arts {
        a.lines.iter().for_each(|l| println!("{l}"));
    }
    Ok(0)
}

/// The check document for a list of suite results.
pub fn check_document(cfg: &RunConfig, results: &[SuiteResult]) -> Value {
    let suite = cfg.suites.iter().map(|s| s.name()).collect::<Vec<_>>().join(",");
    json!({
        "schema": SCHEMA_VERSION,
        "kind": "check",
        "suite": suite,
        "seed": cfg.seed,
        "passed": results.iter().all(|r| r.passed),
        "results": results,
    })
}

/// Exit 0 iff every (suite, instance) pair passes, 1 otherwise.
pub fn cmd_check(cfg: &RunConfig) -> Result<i32, CliError> {
    let ids: Vec<String> = if cfg.instances.is_empty() {
        CANONICAL_IDS.iter().map(|s| s.to_string()).collect()
    } else {
        cfg.instances.clone()
    };
    let models = resolve_all(&ids)?;
    let pairs: Vec<_> = models
        .iter()
        .flat_map(|m| cfg.suites.iter().map(move |&s| (m, s)))
        .collect();
    let results: Vec<SuiteResult> =
        pool(cfg.jobs)?.install(|| pairs.par_iter().map(|&(m, s)| run_suite(s, m, cfg.seed)).collect());

    let doc = check_document(cfg, &results);
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let path = cfg.out.join("check.json");
    fs::write(&path, pretty(&doc)).map_err(|e| CliError::io(&path, e))?;

    println!("{:<14} {:<20} {:<6} metrics", "suite", "instance", "status");
    for r in &results {
        let metrics: Vec<String> = r
            .metrics
            .iter()
            .map(|m| format!("{}={:.3e}", m.name, m.value))
            .collect();
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{:<14} {:<20} {:<6} {}", r.suite, r.instance, status, metrics.join(" "));
        for f in &r.failures {
            println!("{:<14} {:<20} {:<6} {f}", "", "", "");
        }
    }
    let passed = results.iter().all(|r| r.passed);
    println!(
        "{}",
        if passed {
            "all suites passed"
        } else {
            "some suites failed"
        }
    );
    Ok(if passed { 0 } else { 1 })
}

struct Describe;

impl ModelVisitor for Describe {
    type Output = String;

    fn visit<M: Model>(self, m: &M) -> String {
        let a = m.analytic();
        format!(
            "{:<20} {:<14} {:<22} B = {}",
            m.id(),
            m.space().name(),
            m.functional().name(),
            a.b
        )
    }
}

pub fn cmd_list() -> Result<i32, CliError> {
    for id in CANONICAL_IDS {
        let m = resolve(id).map_err(|e| CliError::unknown_instance(id, e))?;
        println!("{}", m.visit(Describe));
    }
    Ok(0)
}
