//! CSV tables and the run manifest. Everything is rendered in memory and
//! only then written, so a failed run leaves no files behind.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Metadata repeated as comment lines at the top of every CSV.
#[derive(Debug, Clone)]
pub struct Meta {
    pub experiment: String,
    pub config_hash: String,
    pub seed: Option<u64>,
}

/// A CSV table with a unit description.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub units: String,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str], units: impl Into<String>) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            units: units.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, meta: &Meta) -> Result<Vec<u8>> {
        let mut out = format!(
            "# rcp {} experiment={} config_sha256={} seed={}\n# units: {}\n",
            env!("CARGO_PKG_VERSION"),
            meta.experiment,
            meta.config_hash,
            meta.seed.map_or_else(|| "none".to_string(), |s| s.to_string()),
            self.units
        )
        .into_bytes();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        out.extend(w.into_inner().map_err(|e| e.into_error())?);
        Ok(out)
    }
}

/// Shortest round-trip representation; identical inputs give identical text.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Files produced by one run, written together by [`Outputs::commit`].
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn table(&mut self, name: impl Into<String>, table: &Table, meta: &Meta) -> Result<()> {
        let bytes = table.render(meta)?;
        self.add(name, bytes);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Write every file into `dir`; on any failure the files written so far
    /// are removed again.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Err(e) = fs::write(&path, bytes) {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                let _ = fs::remove_file(&path);
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
            written.push(path);
        }
        Ok(written)
    }
}
