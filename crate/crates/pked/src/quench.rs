//! Quench campaign: `Delta^(k)(t)` after a quench from a product state.

use crate::config::{ExperimentConfig, Kind};
use crate::dynamics::{em_baseline, summarize, trajectory, Builder};
use crate::error::{config_err, Result};
use crate::store::{hamiltonian, initial_state, SpectrumStore};
use pked_core::ensembles::projected_ensemble;
use pked_core::hilbert::{Bipartition, PureState};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct QuenchRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "NA")]
    pub n_a: usize,
    pub t: f64,
    pub k: usize,
    pub delta: f64,
    pub delta_em_mean: f64,
    pub delta_em_std: f64,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuenchSummaryRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "NA")]
    pub n_a: usize,
    pub k: usize,
    pub saturation: f64,
    pub exponent: Option<f64>,
    pub fit_points: usize,
    pub tau: Option<f64>,
    pub delta_em_mean: f64,
    pub delta_em_std: f64,
    pub energy_drift: f64,
    pub dropped_weight: f64,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Default)]
pub struct QuenchResult {
    pub rows: Vec<QuenchRow>,
    pub summary: Vec<QuenchSummaryRow>,
    pub max_energy_drift: f64,
    pub dropped_weight_total: f64,
}

impl QuenchResult {
    pub fn summary_for(&self, n: usize, k: usize) -> Option<&QuenchSummaryRow> {
        self.summary.iter().find(|r| r.n == n && r.k == k)
    }

    /// `(t, delta)` for one size and order.
    pub fn series(&self, n: usize, k: usize) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.n == n && r.k == k)
            .map(|r| (r.t, r.delta))
            .collect()
    }
}

pub fn run_quench(cfg: &ExperimentConfig, store: &SpectrumStore) -> Result<QuenchResult> {
    if cfg.kind != Kind::Quench {
        return Err(config_err(format!("run_quench called with kind {}", cfg.kind.as_str())));
    }
    let hash = cfg.hash();
    let times = cfg.times();
    let mut out = QuenchResult::default();
    for &n in &cfg.sizes {
        let h = hamiltonian(cfg.model, n, cfg)?;
        let psi0 = initial_state(cfg.model, n)?;
        let spec = store.for_state(&h, &psi0)?;
        let part = Bipartition::first(n, cfg.n_a)?;
        let build = |s: &PureState| projected_ensemble(s, &part);
        let builders: [Builder<'_>; 1] = [&build];
        let tr = trajectory(&h, &spec, &psi0, &times, cfg.k_max, &builders)?;
        let em = em_baseline(part.d_a(), part.d_b(), cfg, "quench/delta_em", n as u64)?;
        let sums = summarize(&times, &tr.deltas[0], &em, cfg)?;
        for (i, &t) in times.iter().enumerate() {
            for k in 1..=cfg.k_max {
                out.rows.push(QuenchRow {
                    n,
                    n_a: cfg.n_a,
                    t,
                    k,
                    delta: tr.deltas[0][i][k - 1],
                    delta_em_mean: em[k - 1].0,
                    delta_em_std: em[k - 1].1,
                    seed: cfg.seed,
                    config_hash: hash.clone(),
                });
            }
        }
        for s in sums {
            out.summary.push(QuenchSummaryRow {
                n,
                n_a: cfg.n_a,
                k: s.k,
                saturation: s.saturation,
                exponent: s.exponent,
                fit_points: s.fit_points,
                tau: s.tau,
                delta_em_mean: s.em_mean,
                delta_em_std: s.em_std,
                energy_drift: tr.energy_drift,
                dropped_weight: tr.dropped[0],
                seed: cfg.seed,
                config_hash: hash.clone(),
            });
        }
        out.max_energy_drift = out.max_energy_drift.max(tr.energy_drift);
        out.dropped_weight_total += tr.dropped[0];
    }
    Ok(out)
}
