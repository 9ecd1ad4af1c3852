use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::experiments::Experiment;
use crate::{ExperimentConfig, HarnessError, Outcome};

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

/// Every output file except the config echo, keyed by file name. Contains
/// no clock-dependent data, so equal inputs give equal bytes.
pub fn render(exp: &Experiment, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<BTreeMap<String, Vec<u8>>, HarnessError> {
    let mut files = BTreeMap::new();
    let mut report_files = Vec::new();
    for (k, r) in outcome.reports.iter().enumerate() {
        let name = format!("{:02}_{}.csv", k, slug(&r.label));
        let mut buf = Vec::new();
        r.write_csv(&mut buf)?;
        files.insert(name.clone(), buf);
        report_files.push(name);
    }
    for (stem, body) in &outcome.tables {
        files.insert(format!("{}.csv", slug(stem)), body.clone().into_bytes());
    }
    let summary = json!({
        "experiment": exp.name,
        "seed": cfg.seed,
        "pass": outcome.pass(),
        "checks": outcome.checks,
        "summary": outcome.summary,
        "reports": outcome.reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Config(e.to_string()))?;
    text.push('\n');
    files.insert("summary.json".into(), text.into_bytes());
    let mut manifest = format!("experiment: {}\nstatement: {}\ndescription: {}\nfiles:\n", exp.name, exp.statement, exp.description);
    for name in files.keys() {
        manifest.push_str(&format!("  {name}\n"));
    }
    files.insert("manifest.txt".into(), manifest.into_bytes());
    Ok(files)
}

/// Writes `<root>/<experiment>/<timestamp>/` and returns that directory.
pub fn write(root: &Path, exp: &Experiment, cfg: &ExperimentConfig, text: &str, outcome: &Outcome) -> Result<PathBuf, HarnessError> {
    let files = render(exp, cfg, outcome)?;
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.3f").to_string();
    let mut dir = root.join(exp.name).join(&stamp);
    let mut k = 1;
    while dir.exists() {
        dir = root.join(exp.name).join(format!("{stamp}-{k}"));
        k += 1;
    }
    fs::create_dir_all(&dir)?;
    for (name, body) in &files {
        fs::write(dir.join(name), body)?;
    }
    fs::write(dir.join("config.echo.toml"), text)?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::slug;

    #[test]
    fn slugs() {
        assert_eq!(slug("A3 Riemann sums"), "a3_riemann_sums");
        assert_eq!(slug("poisson m=2"), "poisson_m_2");
    }
}
