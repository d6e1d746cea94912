//! Disordered-model campaign: quench and eigenstate runs for the random
//! coupling and random hopping models, with the magnetization-resolved
//! ensemble for the hopping model.

use crate::config::{ExperimentConfig, Kind, ModelKind};
use crate::dynamics::{em_baseline, summarize, trajectory, Builder};
use crate::eigenstates::{eigen_deltas, mean_std};
use crate::error::{config_err, Result};
use crate::store::{hamiltonian, initial_state, SpectrumStore};
use pked_core::ensembles::{postselect_magnetization, projected_ensemble, single_sector_magnetization, ProjectedEnsemble};
use pked_core::hilbert::{Bipartition, PureState};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct ModelRow {
    pub model: &'static str,
    pub ensemble: &'static str,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "NA")]
    pub n_a: usize,
    pub d_a: usize,
    pub t: f64,
    pub k: usize,
    pub delta: f64,
    pub delta_em_mean: f64,
    pub delta_em_std: f64,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelSummaryRow {
    pub model: &'static str,
    pub ensemble: &'static str,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "NA")]
    pub n_a: usize,
    pub d_a: usize,
    pub entries: usize,
    pub k: usize,
    pub saturation: f64,
    pub exponent: Option<f64>,
    pub tau: Option<f64>,
    pub delta_em_mean: f64,
    pub delta_em_std: f64,
    pub eigen_mean: f64,
    pub eigen_std: f64,
    pub energy_drift: f64,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelEigenRow {
    pub model: &'static str,
    pub ensemble: &'static str,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "NA")]
    pub n_a: usize,
    pub index: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "E_over_N")]
    pub energy_density: f64,
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Default)]
pub struct ModelResult {
    pub rows: Vec<ModelRow>,
    pub summary: Vec<ModelSummaryRow>,
    pub eigen: Vec<ModelEigenRow>,
    pub max_energy_drift: f64,
    pub dropped_weight_total: f64,
}

impl ModelResult {
    pub fn summary_for(&self, model: ModelKind, ensemble: &str, n: usize, k: usize) -> Option<&ModelSummaryRow> {
        self.summary
            .iter()
            .find(|r| r.model == model.as_str() && r.ensemble == ensemble && r.n == n && r.k == k)
    }
}

type BoxedBuilder<'a> = Box<dyn Fn(&PureState) -> pked_core::Result<ProjectedEnsemble> + Sync + 'a>;

pub fn run_models(cfg: &ExperimentConfig, store: &SpectrumStore) -> Result<ModelResult> {
    if cfg.kind != Kind::Models {
        return Err(config_err(format!("run_models called with kind {}", cfg.kind.as_str())));
    }
    let hash = cfg.hash();
    let times = cfg.times();
    let mut out = ModelResult::default();
    for &model in &cfg.models {
        for &n in &cfg.sizes {
            let h = hamiltonian(model, n, cfg)?;
            let psi0 = initial_state(model, n)?;
            let spec = store.for_state(&h, &psi0)?;
            let naive = Bipartition::first(n, cfg.n_a)?;
            let sector = Bipartition::first(n, cfg.sector_n_a)?;
            let mut labels: Vec<(&'static str, usize)> = vec![("naive", cfg.n_a)];
            let mut builders: Vec<BoxedBuilder<'_>> = vec![Box::new(|s: &PureState| projected_ensemble(s, &naive))];
            if model == ModelKind::RandomHopping && cfg.postselect {
                let s_tot = single_sector_magnetization(&psi0)?;
                if (s_tot - cfg.s_b - cfg.s_a).abs() > 1e-12 {
                    return Err(config_err(format!(
                        "s_a = {} and s_b = {} do not add up to the initial magnetization {s_tot}",
                        cfg.s_a, cfg.s_b
                    )));
                }
                let s_b = cfg.s_b;
                let sector = &sector;
                labels.push(("postselected", cfg.sector_n_a));
                builders.push(Box::new(move |s: &PureState| postselect_magnetization(s, sector, s_b)));
            }
            let refs: Vec<Builder<'_>> = builders.iter().map(|b| b.as_ref() as Builder<'_>).collect();
            let tr = trajectory(&h, &spec, &psi0, &times, cfg.k_max, &refs)?;
            out.max_energy_drift = out.max_energy_drift.max(tr.energy_drift);

            let count = cfg.count.min(spec.len());
            let idx = spec.indices_near(0.0, count)?;
            for (e, &(label, n_a)) in labels.iter().enumerate() {
                let dim = tr.dims[e];
                let tag = format!("models/{}/{label}/delta_em", model.as_str());
                let em = em_baseline(dim, tr.counts[e], cfg, &tag, n as u64)?;
                let sums = summarize(&times, &tr.deltas[e], &em, cfg)?;
                let eig = eigen_deltas(&spec, &idx, cfg.k_max, builders[e].as_ref())?;
                out.dropped_weight_total += tr.dropped[e] + eig.iter().map(|r| r.3).sum::<f64>();
                for (i, &t) in times.iter().enumerate() {
                    for k in 1..=cfg.k_max {
                        out.rows.push(ModelRow {
                            model: model.as_str(),
                            ensemble: label,
                            n,
                            n_a,
                            d_a: dim,
                            t,
                            k,
                            delta: tr.deltas[e][i][k - 1],
                            delta_em_mean: em[k - 1].0,
                            delta_em_std: em[k - 1].1,
                            seed: cfg.seed,
                            config_hash: hash.clone(),
                        });
                    }
                }
                for (i, energy, d, _) in &eig {
                    for k in 1..=cfg.k_max {
                        out.eigen.push(ModelEigenRow {
                            model: model.as_str(),
                            ensemble: label,
                            n,
                            n_a,
                            index: *i,
                            energy: *energy,
                            energy_density: energy / n as f64,
                            k,
                            delta: d[k - 1],
                            seed: cfg.seed,
                            config_hash: hash.clone(),
                        });
                    }
                }
                for s in sums {
                    let v: Vec<f64> = eig.iter().map(|r| r.2[s.k - 1]).collect();
                    let (eigen_mean, eigen_std) = mean_std(&v);
                    out.summary.push(ModelSummaryRow {
                        model: model.as_str(),
                        ensemble: label,
                        n,
                        n_a,
                        d_a: dim,
                        entries: tr.counts[e],
                        k: s.k,
                        saturation: s.saturation,
                        exponent: s.exponent,
                        tau: s.tau,
                        delta_em_mean: s.em_mean,
                        delta_em_std: s.em_std,
                        eigen_mean,
                        eigen_std,
                        energy_drift: tr.energy_drift,
                        seed: cfg.seed,
                        config_hash: hash.clone(),
                    });
                }
            }
        }
    }
    Ok(out)
}
