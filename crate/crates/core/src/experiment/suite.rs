use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::Scenario;
use crate::error::{Error, Result};

use super::spec::SweepSpec;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    scenario: PathBuf,
    sweep: PathBuf,
}

/// One named (scenario, sweep) pair of a suite manifest.
#[derive(Clone, Debug)]
pub struct SuiteRun {
    pub name: String,
    pub scenario: Scenario,
    pub sweep: SweepSpec,
}

/// Loads a manifest: a JSON array of `{"name", "scenario", "sweep"}` with file
/// paths relative to the manifest.
pub fn load_suite(path: impl AsRef<Path>) -> Result<Vec<SuiteRun>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read suite {}: {e}", path.display())))?;
    let entries: Vec<Entry> = serde_json::from_str(&text).map_err(|e| Error::Config(format!("suite: {e}")))?;
    if entries.is_empty() {
        return Err(Error::Config("suite is empty".into()));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut runs: Vec<SuiteRun> = Vec::with_capacity(entries.len());
    for e in entries {
        if e.name.is_empty() || !e.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::Config(format!("suite entry name `{}` must be alphanumeric", e.name)));
        }
        if runs.iter().any(|r| r.name == e.name) {
            return Err(Error::Config(format!("suite entry `{}` repeats", e.name)));
        }
        runs.push(SuiteRun {
            scenario: Scenario::load(dir.join(&e.scenario))?,
            sweep: SweepSpec::load(dir.join(&e.sweep))?,
            name: e.name,
        });
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_paths_are_relative() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("sc.json"), r#"{"n_t": 2}"#).unwrap();
        std::fs::write(dir.path().join("sw.json"), r#"{"axis": "PMax", "values": [0]}"#).unwrap();
        let manifest = dir.path().join("suite.json");
        std::fs::write(&manifest, r#"[{"name": "a", "scenario": "sc.json", "sweep": "sw.json"}]"#).unwrap();
        let runs = load_suite(&manifest).unwrap();
        assert_eq!(runs[0].scenario.n_t, 2);
        std::fs::write(
            &manifest,
            r#"[{"name": "a", "scenario": "sc.json", "sweep": "sw.json"}, {"name": "a", "scenario": "sc.json", "sweep": "sw.json"}]"#,
        )
        .unwrap();
        assert!(matches!(load_suite(&manifest), Err(Error::Config(_))));
        std::fs::write(&manifest, r#"[{"name": "../x", "scenario": "sc.json", "sweep": "sw.json"}]"#).unwrap();
        assert!(load_suite(&manifest).is_err());
    }
}
