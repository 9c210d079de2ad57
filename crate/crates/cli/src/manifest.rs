use std::collections::BTreeMap;
use std::fs::File;
use std::io;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Flat key/value record of one run, written as `manifest.json`.
#[derive(Debug, Default)]
pub struct RunManifest {
    fields: BTreeMap<String, Value>,
}

pub fn now_iso8601() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut File::open(path)?, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

impl RunManifest {
    pub fn start(subcommand: &str) -> Self {
        let mut m = Self::default();
        let argv: Vec<String> = std::env::args().collect();
        m.set("command_line", argv.join(" "));
        m.set("subcommand", subcommand);
        m.set("started_at", now_iso8601());
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.fields.insert(key.to_string(), value.into());
    }

    pub fn input(&mut self, path: &Path) -> io::Result<()> {
        self.set("input_path", path.display().to_string());
        self.set("input_sha256", sha256_file(path)?);
        Ok(())
    }

    pub fn finish(mut self, artifacts: &[std::path::PathBuf], out: &Path) -> io::Result<()> {
        self.set("finished_at", now_iso8601());
        let names: Vec<String> = artifacts.iter().map(|p| p.display().to_string()).collect();
        self.set("artifacts", names.join(";"));
        let path = out.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.fields).map_err(io::Error::other)?;
        std::fs::write(path, text + "\n")
    }
}
