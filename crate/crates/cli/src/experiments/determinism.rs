use serde::Deserialize;

use super::{registry, smoke_config, Experiment};
use crate::output::render;
use crate::{with_workers, Check, ExperimentConfig, HarnessError, Outcome};

pub const DETERMINISM: Experiment = Experiment {
    name: "determinism",
    description: "Every experiment's reduced run gives byte-identical output under different worker counts",
    statement: "outputs are a function of the seed alone",
    run: determinism,
    smoke: "[params]\nworkers = [1, 2]\nonly = [\"qv-brownian\"]\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DeterminismParams {
    workers: Vec<usize>,
    /// Restrict to these experiments; empty means all.
    only: Vec<String>,
}

impl Default for DeterminismParams {
    fn default() -> Self {
        Self { workers: vec![1, 4], only: Vec::new() }
    }
}

fn determinism(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: DeterminismParams = cfg.params()?;
    if p.workers.len() < 2 {
        return Err(HarnessError::Config("need at least two worker counts".into()));
    }
    let mut out = Outcome::default();
    let mut mismatched = Vec::new();
    let mut table = String::from("experiment,workers,files,identical\n");
    for exp in registry().iter().filter(|e| e.name != DETERMINISM.name) {
        if !p.only.is_empty() && !p.only.iter().any(|n| n == exp.name) {
            continue;
        }
        let c = ExperimentConfig::parse(&smoke_config(exp, cfg.seed))?;
        let mut first = None;
        for &w in &p.workers {
            let files = with_workers(w, || (exp.run)(&c).and_then(|o| render(exp, &c, &o)))?;
            let same = first.as_ref().is_none_or(|f| *f == files);
            table.push_str(&format!("{},{w},{},{same}\n", exp.name, files.len()));
            if !same {
                mismatched.push(exp.name);
            }
            first.get_or_insert(files);
        }
    }
    mismatched.dedup();
    out.note("mismatched", &mismatched);
    out.tables.insert("determinism".into(), table);
    out.check(Check::new("experiments with differing output", mismatched.len() as f64, "= 0", mismatched.is_empty()));
    Ok(out)
}
