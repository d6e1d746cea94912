//! Pairwise campaign: second-moment distances between eigenstate ensembles.

use crate::config::{ExperimentConfig, Kind};
use crate::error::{config_err, Result};
use crate::store::{hamiltonian, SpectrumStore};
use pked_core::designs::pairwise_delta2;
use pked_core::hilbert::{Bipartition, PureState};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct PairRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "NA")]
    pub n_a: usize,
    pub i: usize,
    pub j: usize,
    #[serde(rename = "E_i")]
    pub e_i: f64,
    #[serde(rename = "E_j")]
    pub e_j: f64,
    pub delta2: f64,
    pub seed: u64,
    pub config_hash: String,
}

/// Mean distance in one `|E_i - E_j|/N` bin along the cut.
#[derive(Clone, Debug, Serialize)]
pub struct CutBinRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean: f64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairSummaryRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "NA")]
    pub n_a: usize,
    pub states: usize,
    pub cut_pairs: usize,
    pub near_diag_pairs: usize,
    pub near_diag_mean: Option<f64>,
    pub max_diagonal: f64,
    pub max_asymmetry: f64,
    pub argmin_bin: Option<usize>,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Default)]
pub struct PairResult {
    pub rows: Vec<PairRow>,
    pub bins: Vec<CutBinRow>,
    pub summary: Vec<PairSummaryRow>,
}

impl PairResult {
    pub fn summary_for(&self, n: usize) -> Option<&PairSummaryRow> {
        self.summary.iter().find(|r| r.n == n)
    }
}

pub fn run_pairwise(cfg: &ExperimentConfig, store: &SpectrumStore) -> Result<PairResult> {
    if cfg.kind != Kind::Pairwise {
        return Err(config_err(format!("run_pairwise called with kind {}", cfg.kind.as_str())));
    }
    let hash = cfg.hash();
    let mut out = PairResult::default();
    for &n in &cfg.sizes {
        let h = hamiltonian(cfg.model, n, cfg)?;
        let spec = store.full(&h)?;
        let part = Bipartition::first(n, cfg.n_a)?;
        let e = spec.eigenvalues().to_vec();
        let states: Vec<(f64, PureState)> = (0..spec.len())
            .map(|i| Ok((e[i], spec.eigenvector(i)?)))
            .collect::<Result<_>>()?;
        let m = pairwise_delta2(&states, &part)?;
        drop(states);
        let dim = e.len();
        let nf = n as f64;
        let mut max_diagonal: f64 = 0.0;
        let mut max_asymmetry: f64 = 0.0;
        let on_cut = |i: usize, j: usize| ((e[i] + e[j]) / nf - cfg.energy_cut).abs() <= cfg.cut_width;
        let mut bins: Vec<(usize, f64)> = Vec::new();
        let mut cut_pairs = 0;
        for i in 0..dim {
            max_diagonal = max_diagonal.max(m[(i, i)].abs());
            for j in i..dim {
                max_asymmetry = max_asymmetry.max((m[(i, j)] - m[(j, i)]).abs());
                let cut = on_cut(i, j);
                if cut && j > i {
                    cut_pairs += 1;
                    let b = ((e[i] - e[j]).abs() / nf / cfg.bin_width) as usize;
                    if bins.len() <= b {
                        bins.resize(b + 1, (0, 0.0));
                    }
                    bins[b].0 += 1;
                    bins[b].1 += m[(i, j)];
                }
                if cfg.all_pairs || cut {
                    out.rows.push(PairRow {
                        n,
                        n_a: cfg.n_a,
                        i,
                        j,
                        e_i: e[i],
                        e_j: e[j],
                        delta2: m[(i, j)],
                        seed: cfg.seed,
                        config_hash: hash.clone(),
                    });
                }
            }
        }
        let mut near = (0usize, 0.0);
        for i in 0..dim {
            for j in i + 1..dim {
                if on_cut(i, j) && (e[i] - e[j]).abs() / nf < cfg.near_diag {
                    near.0 += 1;
                    near.1 += m[(i, j)];
                }
            }
        }
        let mut argmin: Option<(usize, f64)> = None;
        for (b, &(count, sum)) in bins.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let mean = sum / count as f64;
            if argmin.is_none_or(|(_, v)| mean < v) {
                argmin = Some((b, mean));
            }
            out.bins.push(CutBinRow {
                n,
                bin: b,
                lo: b as f64 * cfg.bin_width,
                hi: (b + 1) as f64 * cfg.bin_width,
                count,
                mean,
                config_hash: hash.clone(),
            });
        }
        out.summary.push(PairSummaryRow {
            n,
            n_a: cfg.n_a,
            states: dim,
            cut_pairs,
            near_diag_pairs: near.0,
            near_diag_mean: (near.0 > 0).then(|| near.1 / near.0 as f64),
            max_diagonal,
            max_asymmetry,
            argmin_bin: argmin.map(|a| a.0),
            seed: cfg.seed,
            config_hash: hash.clone(),
        });
    }
    Ok(out)
}
