use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pricelab::simulator::Check;
use pricelab::Transcript;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{Command, Format, GlobalArgs};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Collects the files one subcommand writes into its output directory.
pub struct Output {
    dir: PathBuf,
    format: Format,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: PathBuf, format: Format) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output {
            dir,
            format,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `rows` as `<stem>.csv` or `<stem>.json` depending on `--format`.
    pub fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<()> {
        match self.format {
            Format::Json => self.json(&format!("{stem}.json"), rows),
            Format::Csv => {
                let w = self.create(&format!("{stem}.csv"))?;
                let mut csv = csv::Writer::from_writer(w);
                for r in rows {
                    csv.serialize(r)?;
                }
                csv.flush()?;
                Ok(())
            }
        }
    }

    pub fn transcript(&mut self, name: &str, t: &Transcript) -> Result<()> {
        let mut w = self.create(name)?;
        t.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Raw writer for outputs with their own layout.
    pub fn raw(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.create(name)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

/// The `report.json` of every subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub subcommand: String,
    pub params: serde_json::Value,
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn new(
        subcommand: &str,
        params: impl Serialize,
        results: impl Serialize,
        checks: Vec<Check>,
    ) -> Result<Self> {
        let passed = checks.iter().all(|c| c.passed);
        Ok(Report {
            subcommand: subcommand.to_string(),
            params: serde_json::to_value(params)?,
            results: serde_json::to_value(results)?,
            checks,
            passed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub global: GlobalArgs,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub manifest_version: u32,
    pub tool_version: String,
    pub subcommand: String,
    /// Flags and subcommand arguments as given, after merging `--config`.
    /// The output directory is left out so a replay can write elsewhere.
    pub invocation: Invocation,
    /// Every parameter after defaults were applied.
    pub resolved: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub wall_clock_seconds: f64,
    pub passed: bool,
}

pub fn digest(path: &Path) -> Result<(String, u64)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

pub fn digests(dir: &Path, files: &[String]) -> Result<Vec<FileDigest>> {
    files
        .iter()
        .map(|f| {
            let (sha256, bytes) = digest(&dir.join(f))?;
            Ok(FileDigest {
                path: f.clone(),
                sha256,
                bytes,
            })
        })
        .collect()
}

pub fn read_manifest(path: &Path) -> Result<ExperimentManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
