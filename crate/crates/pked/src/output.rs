//! CSV tables, run metadata and the table loader.
//!
//! Every table carries a `config_hash` column. [`load_table`] and
//! [`load_tables`] refuse input mixing rows from different configurations.

use crate::config::ExperimentConfig;
use crate::error::{ExpError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Writes `rows` with a header taken from the row type.
pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// A loaded table.
#[derive(Clone, Debug)]
pub struct Table {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub rows: Vec<csv::StringRecord>,
    pub config_hash: String,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Column `name` parsed as numbers; empty cells become `None`.
    pub fn f64_column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let i = self.column_index(name).ok_or_else(|| self.err(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| {
                let s = r.get(i).unwrap_or("");
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse()
                        .map(Some)
                        .map_err(|_| self.err(format!("`{s}` in column `{name}` is not a number")))
                }
            })
            .collect()
    }

    fn err(&self, msg: String) -> ExpError {
        ExpError::Table {
            path: self.path.clone(),
            msg,
        }
    }
}

/// Reads a table and checks that every row has the same `config_hash`.
pub fn load_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let err = |msg: String| ExpError::Table {
        path: path.to_path_buf(),
        msg,
    };
    let col = headers
        .iter()
        .position(|h| h == "config_hash")
        .ok_or_else(|| err("missing config_hash column".into()))?;
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
    let mut hash: Option<&str> = None;
    for row in &rows {
        let h = row.get(col).unwrap_or("");
        match hash {
            None => hash = Some(h),
            Some(prev) if prev != h => {
                return Err(err(format!("mixed config hashes `{prev}` and `{h}`")));
            }
            _ => {}
        }
    }
    let config_hash = hash.unwrap_or("").to_string();
    Ok(Table {
        path: path.to_path_buf(),
        headers,
        rows,
        config_hash,
    })
}

/// Reads several tables that must share one configuration.
pub fn load_tables(paths: &[PathBuf]) -> Result<Vec<Table>> {
    let tables = paths.iter().map(|p| load_table(p)).collect::<Result<Vec<_>>>()?;
    if let Some(first) = tables.iter().find(|t| !t.rows.is_empty()) {
        if let Some(other) = tables
            .iter()
            .find(|t| !t.rows.is_empty() && t.config_hash != first.config_hash)
        {
            return Err(ExpError::Table {
                path: other.path.clone(),
                msg: format!(
                    "config hash `{}` differs from `{}` in {}",
                    other.config_hash,
                    first.config_hash,
                    first.path.display()
                ),
            });
        }
    }
    Ok(tables)
}

/// Contents of `meta.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Meta {
    pub kind: String,
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    pub threads: usize,
    pub wall_time_s: f64,
    pub dropped_weight_total: f64,
    pub tables: Vec<String>,
    pub config: serde_json::Value,
    pub notes: BTreeMap<String, serde_json::Value>,
}

impl Meta {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            kind: cfg.kind.as_str().into(),
            name: cfg.name.clone(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            code_version: env!("CARGO_PKG_VERSION").into(),
            threads: rayon::current_num_threads(),
            wall_time_s: 0.0,
            dropped_weight_total: 0.0,
            tables: Vec::new(),
            config: serde_json::to_value(cfg)?,
            notes: BTreeMap::new(),
        })
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.notes.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
    }
}
