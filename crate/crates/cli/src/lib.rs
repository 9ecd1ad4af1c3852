//! Config-driven runner for the sewing experiments.

pub mod config;
pub mod experiments;
pub mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use sewing::sewing::RateReport;

pub use config::ExperimentConfig;
pub use experiments::{find, registry, Experiment};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("numerical: {0}")]
    Numerical(#[source] sewing::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) | HarnessError::Io(_) => 3,
        }
    }
}

impl From<sewing::Error> for HarnessError {
    fn from(e: sewing::Error) -> Self {
        use sewing::Error as E;
        match e {
            E::Domain(_) | E::Condition(_) | E::ResolutionExceeded { .. } | E::InsufficientScales { .. } | E::OffGrid(_) => {
                HarnessError::Config(e.to_string())
            }
            other => HarnessError::Numerical(other),
        }
    }
}

/// One pass/fail line of an experiment.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub target: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, observed: f64, target: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), observed, target: target.into(), pass: pass && !observed.is_nan() }
    }

    /// `|observed - centre| ≤ tol`
    pub fn near(name: impl Into<String>, observed: f64, centre: f64, tol: f64) -> Self {
        Self::new(name, observed, format!("{centre} ± {tol}"), (observed - centre).abs() <= tol)
    }

    pub fn below(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self::new(name, observed, format!("< {bound}"), observed < bound)
    }

    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self::new(name, observed, format!(">= {bound}"), observed >= bound)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub reports: Vec<RateReport>,
    /// Extra CSV tables, file stem to contents.
    pub tables: BTreeMap<String, String>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(value).expect("serialisable summary entry"));
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub dir: PathBuf,
}

/// Run one config; `seed` and `output_dir` override the file.
pub fn run_config(text: &str, seed: Option<u64>, output_dir: Option<PathBuf>) -> Result<RunResult, HarnessError> {
    let mut cfg = ExperimentConfig::parse(text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let exp = find(&cfg.experiment).ok_or_else(|| HarnessError::Config(format!("unknown experiment {:?}", cfg.experiment)))?;
    let outcome = (exp.run)(&cfg)?;
    let root = output_dir.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("sewing-out"));
    let dir = output::write(&root, exp, &cfg, text, &outcome)?;
    Ok(RunResult { outcome, dir })
}

/// Run `f` on a pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}
