//! Output directory bookkeeping: CSV tables, the summary record and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const SUMMARY_FILE: &str = "summary.toml";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CONFIG_FILE: &str = "config.toml";

/// Files written by a run, in creation order.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    fn register(&mut self, name: &str) -> Result<PathBuf> {
        let rel = PathBuf::from(name);
        if rel.is_absolute()
            || rel
                .components()
                .any(|c| matches!(c, std::path::Component::ParentDir))
        {
            bail!("output name {name} escapes the output directory");
        }
        if !self.files.contains(&rel) {
            self.files.push(rel.clone());
        }
        let path = self.root.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, header: &[String]) -> Result<CsvWriter> {
        let path = self.register(name)?;
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = CsvWriter {
            out: BufWriter::new(file),
            columns: header.len(),
        };
        w.raw_row(header)?;
        Ok(w)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.register(name)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    fn raw_row<S: AsRef<str>>(&mut self, cells: &[S]) -> Result<()> {
        if cells.len() != self.columns {
            bail!("row has {} cells, header has {}", cells.len(), self.columns);
        }
        for (k, c) in cells.iter().enumerate() {
            if k > 0 {
                self.out.write_all(b",")?;
            }
            self.out.write_all(c.as_ref().as_bytes())?;
        }
        self.out.write_all(b"\n")?;
        Ok(())
    }

    /// Writes one row; `None` leaves the cell empty.
    pub fn row(&mut self, cells: &[Cell]) -> Result<()> {
        let text: Vec<String> = cells.iter().map(Cell::render).collect();
        self.raw_row(&text)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:e}"),
            Cell::Empty => String::new(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

/// Key-value record of fitted quantities, rendered as TOML.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    table: toml::Table,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<toml::Value>) {
        self.table.insert(key.to_string(), value.into());
    }

    pub fn set_opt(&mut self, key: &str, value: Option<f64>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    /// Appends a row to the array of tables `key`.
    pub fn push_row(&mut self, key: &str, row: Summary) {
        let entry = self
            .table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Array(Vec::new()));
        if let toml::Value::Array(a) = entry {
            a.push(toml::Value::Table(row.table));
        }
    }

    pub fn get(&self, key: &str) -> Option<&toml::Value> {
        self.table.get(key)
    }

    pub fn table(&self) -> &toml::Table {
        &self.table
    }

    pub fn from_table(table: toml::Table) -> Self {
        Self { table }
    }

    pub fn render(&self) -> String {
        toml::to_string(&self.table).expect("summary serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub rng: String,
    pub workers: usize,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

impl Manifest {
    pub fn build(
        config: &ExperimentConfig,
        out: &OutputDir,
        workers: usize,
        started_unix: u64,
        wall_seconds: f64,
    ) -> Result<Self> {
        let files = out
            .files()
            .iter()
            .map(|rel| {
                let (sha256, bytes) = sha256_file(&out.root().join(rel))?;
                Ok(FileEntry {
                    path: rel.to_string_lossy().replace('\\', "/"),
                    sha256,
                    bytes,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scenario: config.scenario.clone(),
            config_hash: config.hash(),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng: prethermal_core::rng::GENERATOR_NAME.to_string(),
            workers,
            started_unix,
            wall_seconds,
            files,
        })
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    /// Re-hashes every listed file and the stored config; returns the mismatches.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut problems = Vec::new();
        for f in &self.files {
            match sha256_file(&dir.join(&f.path)) {
                Ok((h, _)) if h == f.sha256 => {}
                Ok(_) => problems.push(format!("{}: hash mismatch", f.path)),
                Err(e) => problems.push(format!("{}: {e}", f.path)),
            }
        }
        let config =
            ExperimentConfig::from_toml_str(&std::fs::read_to_string(dir.join(CONFIG_FILE))?)?;
        if config.hash() != self.config_hash {
            problems.push(format!("{CONFIG_FILE}: config hash mismatch"));
        }
        Ok(problems)
    }
}
