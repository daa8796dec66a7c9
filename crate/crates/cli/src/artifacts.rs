//! Writing a command's JSON document and data files under the output
//! directory. Every file carries the resolved configuration and seed; the
//! JSON document's `generated_at` is the only timestamp anywhere.

use std::fs;
use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use crate::commands::{Check, Section};
use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Envelope<'a> {
    pub generated_at: String,
    pub command: &'a str,
    pub seed: u64,
    pub ok: bool,
    pub checks: &'a [Check],
    pub config: &'a RunConfig,
    pub result: &'a serde_json::Value,
}

/// What the binary prints on success.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub command: String,
    pub ok: bool,
    pub failed_checks: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

/// Comment lines opening every data file.
pub fn provenance(command: &str, cfg: &RunConfig) -> String {
    let json = serde_json::to_string(cfg).expect("configuration serializes");
    format!("# gapkit {command} seed={}\n# config {json}\n", cfg.seed)
}

pub fn write(command: &str, cfg: &RunConfig, section: &Section) -> Result<Summary, CliError> {
    let dir = &cfg.out;
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let head = provenance(command, cfg);
    let mut artifacts = Vec::new();
    for file in &section.files {
        let path = dir.join(&file.name);
        let mut body = head.clone().into_bytes();
        body.extend_from_slice(&file.body);
        fs::write(&path, body)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        artifacts.push(path);
    }
    let envelope = Envelope {
        generated_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        command,
        seed: cfg.seed,
        ok: section.ok(),
        checks: &section.checks,
        config: cfg,
        result: &section.result,
    };
    let path = dir.join(format!("{command}.json"));
    let mut text = serde_json::to_string_pretty(&envelope).expect("report serializes");
    text.push('\n');
    fs::write(&path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    artifacts.insert(0, path);
    Ok(Summary {
        command: command.to_string(),
        ok: section.ok(),
        failed_checks: section
            .checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.clone())
            .collect(),
        artifacts,
    })
}
