//! Run configuration: command-line flags layered over a flat key=value file.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use hadamard_flow::suites::Suite;

use crate::CliError;

pub const DEFAULT_OUT: &str = "hadflow-out";

const KEYS: [&str; 10] = [
    "instance", "x0", "starts", "T", "tol", "m_cap", "jobs", "out", "seed", "suite",
];

/// Optional settings from one source (flags or file).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layer {
    pub instances: Vec<String>,
    pub x0: Option<String>,
    pub starts: Option<usize>,
    pub horizon: Option<f64>,
    pub tol: Option<f64>,
    pub m_cap: Option<usize>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub suites: Vec<String>,
}

impl Layer {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("config line {}: expected key=value", k + 1)))?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::config(format!("config line {}: unknown key '{key}'", k + 1)));
            }
            map.insert(key, value.trim().to_string());
        }
        let list = |v: Option<&String>| -> Vec<String> {
            v.map(|s| {
                s.split(',')
                    .map(|t| t.trim().to_string())
                    .filter(|t| !t.is_empty())
                    .collect()
            })
            .unwrap_or_default()
        };
        Ok(Layer {
            instances: list(map.get("instance")),
            x0: map.get("x0").cloned(),
            starts: parse_opt(&map, "starts")?,
            horizon: parse_opt(&map, "T")?,
            tol: parse_opt(&map, "tol")?,
            m_cap: parse_opt(&map, "m_cap")?,
            jobs: parse_opt(&map, "jobs")?,
            out: map.get("out").map(PathBuf::from),
            seed: parse_opt(&map, "seed")?,
            suites: list(map.get("suite")),
        })
    }

    /// Fields set here win over `base`.
    pub fn over(self, base: Layer) -> Layer {
        Layer {
            instances: if self.instances.is_empty() {
                base.instances
            } else {
                self.instances
            },
            x0: self.x0.or(base.x0),
            starts: self.starts.or(base.starts),
            horizon: self.horizon.or(base.horizon),
            tol: self.tol.or(base.tol),
            m_cap: self.m_cap.or(base.m_cap),
            jobs: self.jobs.or(base.jobs),
            out: self.out.or(base.out),
            seed: self.seed.or(base.seed),
            suites: if self.suites.is_empty() {
                base.suites
            } else {
                self.suites
            },
        }
    }
}

fn parse_opt<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| CliError::config(format!("config key '{key}': cannot parse '{v}'")))
        })
        .transpose()
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub instances: Vec<String>,
    pub x0: Option<String>,
    pub starts: usize,
    /// Flow horizon T; `None` uses the instance default.
    pub horizon: Option<f64>,
    pub tol: Option<f64>,
    pub m_cap: Option<usize>,
    pub jobs: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub suites: Vec<Suite>,
}

impl RunConfig {
    pub fn from_layer(layer: Layer) -> Result<Self, CliError> {
        let positive = |name: &str, v: Option<f64>| -> Result<Option<f64>, CliError> {
            match v {
                Some(x) if !(x > 0.0) || !x.is_finite() => {
                    Err(CliError::config(format!("{name} = {x} must be positive and finite")))
                }
                _ => Ok(v),
            }
        };
        let at_least_one = |name: &str, v: Option<usize>| -> Result<Option<usize>, CliError> {
            match v {
                Some(0) => Err(CliError::config(format!("{name} must be at least 1"))),
                _ => Ok(v),
            }
        };
        let suites = if layer.suites.is_empty() {
            Suite::ALL.to_vec()
        } else {
            layer
                .suites
                .iter()
                .map(|s| s.parse::<Suite>().map_err(|e| CliError::config(e.to_string())))
                .collect::<Result<_, _>>()?
        };
        Ok(RunConfig {
            instances: layer.instances,
            x0: layer.x0,
            starts: at_least_one("starts", layer.starts)?.unwrap_or(1),
            horizon: positive("T", layer.horizon)?,
            tol: positive("tol", layer.tol)?,
            m_cap: at_least_one("m_cap", layer.m_cap)?,
            jobs: at_least_one("jobs", layer.jobs)?.unwrap_or(1),
            out: layer.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            seed: layer.seed.unwrap_or(0),
            suites,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_layer_parses_and_flags_override() {
        let file =
            Layer::from_text("# run\ninstance = euclid.quadratic, euclid.abs\nT=2\nm-cap = 512\nseed = 9\n").unwrap();
        assert_eq!(file.instances, vec!["euclid.quadratic", "euclid.abs"]);
        assert_eq!(file.m_cap, Some(512));
        let flags = Layer {
            horizon: Some(5.0),
            ..Layer::default()
        };
        let cfg = RunConfig::from_layer(flags.over(file)).unwrap();
        assert_eq!(cfg.horizon, Some(5.0));
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.suites.len(), Suite::ALL.len());
    }

    #[test]
    fn bad_files_and_values_are_config_errors() {
        assert!(Layer::from_text("colour = red").is_err());
        assert!(Layer::from_text("T").is_err());
        assert!(Layer::from_text("T = soon").is_err());
        let bad = Layer {
            tol: Some(-1.0),
            ..Layer::default()
        };
        assert_eq!(RunConfig::from_layer(bad).unwrap_err().exit_code(), 2);
        let bad = Layer {
            suites: vec!["nope".into()],
            ..Layer::default()
        };
        assert!(RunConfig::from_layer(bad).is_err());
    }
}
