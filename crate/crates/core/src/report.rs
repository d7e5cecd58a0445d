//! Run manifests and JSON run reports.
//!
//! Reports contain no timestamps or host details, so two runs with equal
//! manifests serialise to the same bytes. Floats are written in shortest
//! round-trip form; non-finite values become `null`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregate::{AggregationConfig, AggregationResult, TraceEntry};
use crate::bench::accuracy;
use crate::dataset::{Dataset, GoldLabels};
use crate::error::Result;

pub const TOOL: &str = "fastds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest_file(path: impl AsRef<Path>) -> Result<InputDigest> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| crate::Error::Read { path: path.to_owned(), source })?;
    Ok(InputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) })
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> RunManifest {
        RunManifest {
            tool: TOOL.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            config,
            inputs: Vec::new(),
            seed,
            outputs: Vec::new(),
        }
    }

    pub fn with_input(mut self, path: impl AsRef<Path>) -> Result<RunManifest> {
        self.inputs.push(digest_file(path)?);
        Ok(self)
    }

    pub fn with_output(mut self, path: impl AsRef<Path>) -> RunManifest {
        self.outputs.push(path.as_ref().display().to_string());
        self
    }
}

/// Preprocessing applied between loading and aggregation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub loaded_questions: usize,
    pub dropped_class: Option<String>,
    /// Questions whose every vote went to the dropped class.
    pub questions_dropped_with_class: usize,
    pub min_annotators: Option<usize>,
    pub questions_dropped_below_min: usize,
    pub subsample: Option<usize>,
    pub questions: usize,
    pub annotators: usize,
    pub options: usize,
    pub votes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub manifest: RunManifest,
    pub config: AggregationConfig,
    pub preprocessing: Preprocessing,
    pub converged: bool,
    pub iterations: usize,
    pub switch_iteration: Option<usize>,
    pub warnings: Vec<String>,
    /// Observed-data log-likelihood, natural log, marginalised over classes.
    pub likelihood: String,
    pub negative_log_likelihood: f64,
    pub accuracy: Option<f64>,
    pub gold_questions: Option<usize>,
    pub seconds: Option<f64>,
    pub class_marginals: BTreeMap<String, f64>,
    pub trace: Vec<TraceEntry>,
    pub labels: BTreeMap<String, String>,
}

impl AggregateReport {
    pub fn new(
        manifest: RunManifest,
        config: &AggregationConfig,
        preprocessing: Preprocessing,
        d: &Dataset,
        result: &AggregationResult,
        gold: Option<&GoldLabels>,
        seconds: Option<f64>,
    ) -> Result<AggregateReport> {
        let labels = result.labels();
        let accuracy = gold.map(|g| accuracy(&labels, g)).transpose()?;
        Ok(AggregateReport {
            manifest,
            config: config.clone(),
            preprocessing,
            converged: result.converged,
            iterations: result.iterations,
            switch_iteration: result.switch_iteration,
            warnings: result.warnings.clone(),
            likelihood: "observed-data marginal, natural log".to_owned(),
            negative_log_likelihood: result.negative_log_likelihood,
            accuracy,
            gold_questions: gold.map(GoldLabels::covered),
            seconds,
            class_marginals: d
                .option_labels()
                .iter()
                .cloned()
                .zip(result.parameters.class_marginals.iter().copied())
                .collect(),
            trace: result.trace.clone(),
            labels: labels
                .iter()
                .enumerate()
                .map(|(q, &l)| (d.question_name(q).to_owned(), d.option_label(l).to_owned()))
                .collect(),
        })
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::aggregate;

    #[test]
    fn report_is_stable_and_keyed_by_original_ids() {
        let d = Dataset::from_records([("x", "a0", 1), ("x", "a1", 1), ("y", "a0", 0)], None).unwrap();
        let cfg = AggregationConfig::default();
        let result = aggregate(&d, &cfg).unwrap();
        let gold = GoldLabels::complete(&[1, 0]);
        let manifest = RunManifest::new("aggregate", serde_json::json!({"k": 1}), 0);
        let make = || {
            let r = AggregateReport::new(manifest.clone(), &cfg, Preprocessing::default(), &d, &result, Some(&gold), None)
                .unwrap();
            to_json_pretty(&r).unwrap()
        };
        let text = make();
        assert_eq!(text, make());
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["labels"]["x"], "1");
        assert_eq!(v["accuracy"], 1.0);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
    }
}
