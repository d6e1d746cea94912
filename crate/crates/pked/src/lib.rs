//! Experiment orchestration for projected-ensemble design studies.
//!
//! Each campaign reads an [`ExperimentConfig`], runs on a bounded rayon
//! pool and writes CSV tables plus a `meta.json` under `<out>/<kind>/`.
//! Table contents never depend on the thread count.

pub mod config;
pub mod dynamics;
pub mod eigenstates;
pub mod error;
pub mod models;
pub mod output;
pub mod pairwise;
pub mod quench;
pub mod store;
pub mod theory;

pub use config::{ExperimentConfig, Kind, ModelKind};
pub use error::{ExpError, Result};
pub use store::SpectrumStore;

use output::{write_csv, Meta};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// What a finished run wrote.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub tables: Vec<PathBuf>,
    pub meta: Meta,
}

/// Every result a campaign can produce.
#[derive(Clone, Debug)]
pub enum Outcome {
    Quench(quench::QuenchResult),
    Eigenstates(eigenstates::EigenResult),
    Pairwise(pairwise::PairResult),
    Models(models::ModelResult),
    Theory(theory::TheoryResult),
}

/// Runs the campaign on the calling thread pool, reusing spectra in `store`.
pub fn execute(cfg: &ExperimentConfig, store: &SpectrumStore) -> Result<Outcome> {
    cfg.validate()?;
    Ok(match cfg.kind {
        Kind::Quench => Outcome::Quench(quench::run_quench(cfg, store)?),
        Kind::Eigenstates => Outcome::Eigenstates(eigenstates::run_eigenstates(cfg, store)?),
        Kind::Pairwise => Outcome::Pairwise(pairwise::run_pairwise(cfg, store)?),
        Kind::Models => Outcome::Models(models::run_models(cfg, store)?),
        Kind::Theory => Outcome::Theory(theory::run_theory_checks(cfg)?),
    })
}

struct Writer<'a> {
    dir: &'a Path,
    name: &'a str,
    tables: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put<R: Serialize>(&mut self, suffix: &str, rows: &[R]) -> Result<()> {
        let path = self.dir.join(format!("{}{suffix}.csv", self.name));
        write_csv(&path, rows)?;
        self.tables.push(path);
        Ok(())
    }
}

/// Writes the tables of `outcome` and returns the metadata to go with them.
pub fn write_outcome(cfg: &ExperimentConfig, outcome: &Outcome, dir: &Path) -> Result<(Vec<PathBuf>, Meta)> {
    let mut meta = Meta::new(cfg)?;
    let mut w = Writer {
        dir,
        name: &cfg.name,
        tables: Vec::new(),
    };
    match outcome {
        Outcome::Quench(r) => {
            w.put("", &r.rows)?;
            w.put("_summary", &r.summary)?;
            meta.dropped_weight_total = r.dropped_weight_total;
            meta.note("max_energy_drift", r.max_energy_drift)?;
        }
        Outcome::Eigenstates(r) => {
            w.put("", &r.rows)?;
            w.put("_summary", &r.summary)?;
            meta.dropped_weight_total = r.dropped_weight_total;
        }
        Outcome::Pairwise(r) => {
            w.put("", &r.rows)?;
            w.put("_bins", &r.bins)?;
            w.put("_summary", &r.summary)?;
        }
        Outcome::Models(r) => {
            w.put("", &r.rows)?;
            w.put("_eigen", &r.eigen)?;
            w.put("_summary", &r.summary)?;
            meta.dropped_weight_total = r.dropped_weight_total;
            meta.note("max_energy_drift", r.max_energy_drift)?;
        }
        Outcome::Theory(r) => {
            w.put("", &r.checks)?;
            w.put("_mu", &r.mu)?;
            w.put("_ab", &r.ab)?;
            w.put("_histogram", &r.histogram)?;
            w.put("_tails", &r.tails)?;
            w.put("_theorem1", &r.theorem1)?;
            meta.note("all_pass", r.all_pass())?;
        }
    }
    meta.tables = w
        .tables
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    Ok((w.tables, meta))
}

/// Runs one campaign end to end: pool, computation, tables, `meta.json`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| error::config_err(format!("thread pool: {e}")))?;
    pool.install(|| {
        let start = Instant::now();
        let store = SpectrumStore::new(cfg.cache_dir.clone());
        let outcome = execute(cfg, &store)?;
        let dir = cfg.out.join(cfg.kind.as_str());
        let (tables, mut meta) = write_outcome(cfg, &outcome, &dir)?;
        meta.threads = rayon::current_num_threads();
        meta.wall_time_s = start.elapsed().as_secs_f64();
        meta.write(&dir.join("meta.json"))?;
        Ok(RunSummary { dir, tables, meta })
    })
}
