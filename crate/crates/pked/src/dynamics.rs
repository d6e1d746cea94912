//! Shared machinery for quench campaigns: evolve, build ensembles, measure.

use crate::config::ExperimentConfig;
use crate::error::{ExpError, Result};
use pked_core::designs::{delta_em_orders, delta_orders, design_time, power_law_fit, saturation, DeltaSeries};
use pked_core::ensembles::ProjectedEnsemble;
use pked_core::hamiltonians::HamiltonianOperator;
use pked_core::hilbert::PureState;
use pked_core::rng::Stream;
use pked_core::spectral::Spectrum;
use rayon::prelude::*;

/// Largest tolerated drift of `<H>` along a trajectory.
pub const ENERGY_DRIFT_TOL: f64 = 1e-8;

/// Ensemble constructor applied to every evolved state.
pub type Builder<'a> = &'a (dyn Fn(&PureState) -> pked_core::Result<ProjectedEnsemble> + Sync);

/// Distances along one trajectory for each ensemble constructor.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `deltas[e][i][k - 1]` for ensemble `e` at time `times[i]`.
    pub deltas: Vec<Vec<Vec<f64>>>,
    /// Subsystem dimension of each ensemble.
    pub dims: Vec<usize>,
    /// Entry count of each ensemble at the final time.
    pub counts: Vec<usize>,
    pub energy_drift: f64,
    /// Largest dropped weight seen for each ensemble.
    pub dropped: Vec<f64>,
}

struct Point {
    drift: f64,
    per: Vec<(Vec<f64>, usize, usize, f64)>,
}

pub fn trajectory(
    h: &HamiltonianOperator,
    spec: &Spectrum,
    psi0: &PureState,
    times: &[f64],
    k_max: usize,
    builders: &[Builder<'_>],
) -> Result<Trajectory> {
    let dec = spec.decompose(psi0)?;
    let e0 = h.expectation(psi0)?;
    let points: Vec<Point> = times
        .par_iter()
        .map(|&t| -> Result<Point> {
            let psi = dec.state_at(t)?;
            let drift = (h.expectation(&psi)? - e0).abs();
            let per = builders
                .iter()
                .map(|b| -> Result<_> {
                    let ens = b(&psi)?;
                    let d = delta_orders(&ens, k_max)?;
                    Ok((d, ens.subsystem_dim(), ens.len(), ens.dropped_weight()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Point { drift, per })
        })
        .collect::<Result<_>>()?;
    let energy_drift = points.iter().map(|p| p.drift).fold(0.0, f64::max);
    if energy_drift > ENERGY_DRIFT_TOL {
        return Err(ExpError::Core(pked_core::Error::Invariant(format!(
            "energy drift {energy_drift:e} above {ENERGY_DRIFT_TOL:e}"
        ))));
    }
    let nb = builders.len();
    let last = points.last().expect("non-empty time grid");
    Ok(Trajectory {
        times: times.to_vec(),
        deltas: (0..nb)
            .map(|e| points.iter().map(|p| p.per[e].0.clone()).collect())
            .collect(),
        dims: last.per.iter().map(|x| x.1).collect(),
        counts: last.per.iter().map(|x| x.2).collect(),
        energy_drift,
        dropped: (0..nb)
            .map(|e| points.iter().map(|p| p.per[e].3).fold(0.0, f64::max))
            .collect(),
    })
}

/// Late-time and fit summary of one order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderSummary {
    pub k: usize,
    pub saturation: f64,
    pub exponent: Option<f64>,
    pub fit_points: usize,
    pub tau: Option<f64>,
    pub em_mean: f64,
    pub em_std: f64,
}

/// Saturation, power-law exponent and design time for every order of one
/// ensemble. Times at or below zero are left out.
pub fn summarize(
    times: &[f64],
    deltas: &[Vec<f64>],
    em: &[(f64, f64)],
    cfg: &ExperimentConfig,
) -> Result<Vec<OrderSummary>> {
    let pos: Vec<usize> = (0..times.len()).filter(|&i| times[i] > 0.0).collect();
    let t: Vec<f64> = pos.iter().map(|&i| times[i]).collect();
    let mut series = DeltaSeries::new(t.clone(), "time");
    let k_max = em.len();
    (1..=k_max)
        .map(|k| {
            let v: Vec<f64> = pos.iter().map(|&i| deltas[i][k - 1]).collect();
            series.insert(k, v.clone())?;
            let fit = power_law_fit(&t, &v, cfg.fit_lo, cfg.fit_hi);
            Ok(OrderSummary {
                k,
                saturation: saturation(&v, cfg.saturation_points)
                    .ok_or_else(|| crate::error::config_err("fewer time points than saturation_points"))?,
                exponent: fit.map(|f| f.exponent),
                fit_points: fit.map_or(0, |f| f.points),
                tau: design_time(&series, k, cfg.epsilon)?,
                em_mean: em[k - 1].0,
                em_std: em[k - 1].1,
            })
        })
        .collect()
}

/// Empirical Haar baselines `(mean, std)` for orders `1..=k_max`.
pub fn em_baseline(dim: usize, count: usize, cfg: &ExperimentConfig, tag: &str, index: u64) -> Result<Vec<(f64, f64)>> {
    let orders: Vec<usize> = (1..=cfg.k_max).collect();
    let rng = Stream::new(cfg.seed, tag, index);
    Ok(delta_em_orders(dim, count, &orders, cfg.em_repeats, &rng)?)
}
