//! Deterministic JSON and CSV serialization of suite results.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::inequalities::RayleighSweep;
use crate::suites::{Check, SuiteOutcome};

pub const CSV_HEADER: &str = "epsilon,quotient_oracle,quotient_quadrature,target,rel_gap";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub suite: String,
    pub pass: bool,
    pub details: Vec<Check>,
}

impl Summary {
    pub fn new(suite: &str, results: &[(String, SuiteOutcome)]) -> Self {
        let details: Vec<Check> = results.iter().flat_map(|(_, o)| o.checks.iter().cloned()).collect();
        Summary {
            suite: suite.to_string(),
            pass: details.iter().all(|c| c.pass),
            details,
        }
    }
}

/// Sweep rows with every value printed to 15 significant digits.
pub fn sweep_csv(sweep: &RayleighSweep) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for row in sweep.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.14e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Writes `summary.json` and one `<suite>_<name>.csv` per sweep, returning
/// the summary and the files written.
pub fn emit_report(suite: &str, results: &[(String, SuiteOutcome)], dir: &Path) -> Result<(Summary, Vec<PathBuf>)> {
    fs::create_dir_all(dir)?;
    let summary = Summary::new(suite, results);
    let mut files = Vec::new();
    let path = dir.join("summary.json");
    let mut f = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, &summary)?;
    f.write_all(b"\n")?;
    files.push(path);
    for (id, outcome) in results {
        for named in &outcome.sweeps {
            let path = dir.join(format!("{id}_{}.csv", named.name));
            fs::write(&path, sweep_csv(&named.sweep))?;
            files.push(path);
        }
    }
    Ok((summary, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_results_pass() {
        let s = Summary::new("identities", &[]);
        assert!(s.pass);
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["details"].as_array().unwrap().len(), 0);
        assert_eq!(json["pass"], true);
    }

    #[test]
    fn single_failure_fails() {
        let out = SuiteOutcome {
            checks: vec![Check::exact("dunkl_laplacian", "broken", 1)],
            sweeps: Vec::new(),
        };
        let s = Summary::new("identities", &[("identities".into(), out)]);
        assert!(!s.pass);
    }

    #[test]
    fn values_are_rounded() {
        let c = Check::bounded("x", "y", 0.1 + 0.2, 1.0);
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"value\":0.3"), "{json}");
    }
}
