//! Eigenstate campaign: `Delta^(k)` of projected ensembles of energy
//! eigenstates.

use crate::config::{ExperimentConfig, Kind};
use crate::dynamics::em_baseline;
use crate::error::{config_err, Result};
use crate::store::{hamiltonian, SpectrumStore};
use pked_core::designs::delta_orders;
use pked_core::ensembles::{projected_ensemble, ProjectedEnsemble};
use pked_core::hilbert::{Bipartition, PureState};
use pked_core::spectral::Spectrum;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct EigenRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "NA")]
    pub n_a: usize,
    pub index: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "E_over_N")]
    pub energy_density: f64,
    pub selection: &'static str,
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenSummaryRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "NA")]
    pub n_a: usize,
    pub selection: &'static str,
    pub k: usize,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub delta_em_mean: f64,
    pub delta_em_std: f64,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Default)]
pub struct EigenResult {
    pub rows: Vec<EigenRow>,
    pub summary: Vec<EigenSummaryRow>,
    pub dropped_weight_total: f64,
}

impl EigenResult {
    pub fn mean(&self, n: usize, selection: &str, k: usize) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.n == n && r.selection == selection && r.k == k)
            .map(|r| r.mean)
    }
}

/// `count` indices with the largest `|E|`, ascending; ties go to the lower
/// index.
pub fn band_edge_indices(spec: &Spectrum, count: usize) -> Vec<usize> {
    let e = spec.eigenvalues();
    let mut idx: Vec<usize> = (0..e.len()).collect();
    idx.sort_by(|&a, &b| e[b].abs().total_cmp(&e[a].abs()).then(a.cmp(&b)));
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// `(index, energy, deltas, dropped weight)`.
pub(crate) type EigenDeltas = (usize, f64, Vec<f64>, f64);

pub(crate) fn eigen_deltas(
    spec: &Spectrum,
    indices: &[usize],
    k_max: usize,
    build: &(dyn Fn(&PureState) -> pked_core::Result<ProjectedEnsemble> + Sync),
) -> Result<Vec<EigenDeltas>> {
    let e = spec.eigenvalues();
    indices
        .par_iter()
        .map(|&i| {
            let ens = build(&spec.eigenvector(i)?)?;
            Ok((i, e[i], delta_orders(&ens, k_max)?, ens.dropped_weight()))
        })
        .collect()
}

pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

pub fn run_eigenstates(cfg: &ExperimentConfig, store: &SpectrumStore) -> Result<EigenResult> {
    if cfg.kind != Kind::Eigenstates {
        return Err(config_err(format!("run_eigenstates called with kind {}", cfg.kind.as_str())));
    }
    let hash = cfg.hash();
    let mut out = EigenResult::default();
    for &n in &cfg.sizes {
        let h = hamiltonian(cfg.model, n, cfg)?;
        let spec = store.full(&h)?;
        let part = Bipartition::first(n, cfg.n_a)?;
        let mid = spec.indices_near(0.0, cfg.count)?;
        let edge = band_edge_indices(&spec, cfg.count);
        let indices: Vec<usize> = if cfg.sweep_all {
            (0..spec.len()).collect()
        } else {
            let mut v: Vec<usize> = mid.iter().chain(&edge).copied().collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let build = |s: &PureState| projected_ensemble(s, &part);
        let res = eigen_deltas(&spec, &indices, cfg.k_max, &build)?;
        for (i, e, d, dropped) in &res {
            let selection = if mid.binary_search(i).is_ok() {
                "mid"
            } else if edge.binary_search(i).is_ok() {
                "edge"
            } else {
                "other"
            };
            for k in 1..=cfg.k_max {
                out.rows.push(EigenRow {
                    n,
                    n_a: cfg.n_a,
                    index: *i,
                    energy: *e,
                    energy_density: e / n as f64,
                    selection,
                    k,
                    delta: d[k - 1],
                    seed: cfg.seed,
                    config_hash: hash.clone(),
                });
            }
            out.dropped_weight_total += dropped;
        }
        let em = em_baseline(part.d_a(), part.d_b(), cfg, "eigenstates/delta_em", n as u64)?;
        for (label, set) in [("mid", &mid), ("edge", &edge)] {
            for k in 1..=cfg.k_max {
                let v: Vec<f64> = res
                    .iter()
                    .filter(|r| set.binary_search(&r.0).is_ok())
                    .map(|r| r.2[k - 1])
                    .collect();
                let (mean, std) = mean_std(&v);
                out.summary.push(EigenSummaryRow {
                    n,
                    n_a: cfg.n_a,
                    selection: label,
                    k,
                    count: v.len(),
                    mean,
                    std,
                    delta_em_mean: em[k - 1].0,
                    delta_em_std: em[k - 1].1,
                    seed: cfg.seed,
                    config_hash: hash.clone(),
                });
            }
        }
    }
    Ok(out)
}
