//! Theory campaign: every check of the moment machinery with default
//! parameters, plus the curves behind the modulating-function and
//! concentration panels.

use crate::config::{ExperimentConfig, Kind};
use crate::error::{config_err, Result};
use pked_core::ensembles::haar_state;
use pked_core::hilbert::{Bipartition, PureState};
use pked_core::rng::Stream;
use pked_core::theorylab::{
    check_ab_bound, concentration_report, ln_residual_mean_bound, mc_expectation_identity, mc_independence,
    mc_weight_moments, mu, residual_r, theorem1_log2_db, theorem1_required_nb, theorem2_error_terms,
    PolyApproxParams,
};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub params: String,
    pub value: f64,
    pub reference: f64,
    pub deviation: f64,
    pub std_error: Option<f64>,
    pub pass: bool,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MuRow {
    pub k: usize,
    pub b: u32,
    pub s: f64,
    pub mu: f64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AbRow {
    pub k: usize,
    pub b: u32,
    pub state: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct HistogramRow {
    pub d_a: usize,
    pub d_b: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub d_a: usize,
    pub d_b: usize,
    pub delta: f64,
    pub empirical: f64,
    pub bound: f64,
    pub violated: bool,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem1Row {
    pub n_a: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub log2_db: f64,
    pub n_b: u32,
    pub config_hash: String,
}

#[derive(Clone, Debug, Default)]
pub struct TheoryResult {
    pub checks: Vec<CheckRow>,
    pub mu: Vec<MuRow>,
    pub ab: Vec<AbRow>,
    pub histogram: Vec<HistogramRow>,
    pub tails: Vec<TailRow>,
    pub theorem1: Vec<Theorem1Row>,
}

impl TheoryResult {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
    pub fn check(&self, name: &str) -> Vec<&CheckRow> {
        self.checks.iter().filter(|c| c.check == name).collect()
    }
}

/// Sizes of the moment-identity scaling check.
pub const SCALING_SAMPLES: [usize; 3] = [1000, 4000, 16000];
/// Independent runs averaged at each scaling size.
pub const SCALING_REPEATS: u64 = 8;
/// Grid of deviations `|s - 1|` for the tail check.
pub const DELTA_GRID: [f64; 8] = [0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

pub fn run_theory_checks(cfg: &ExperimentConfig) -> Result<TheoryResult> {
    if cfg.kind != Kind::Theory {
        return Err(config_err(format!("run_theory_checks called with kind {}", cfg.kind.as_str())));
    }
    let hash = cfg.hash();
    let seed = cfg.seed;
    let mut out = TheoryResult::default();
    let mut check = |check: &str, params: String, value: f64, reference: f64, se: Option<f64>, pass: bool| {
        out.checks.push(CheckRow {
            check: check.into(),
            params,
            value,
            reference,
            deviation: (value - reference).abs(),
            std_error: se,
            pass,
            config_hash: hash.clone(),
        })
    };

    // Residual bound on Haar states, d_A = 4, d_B = 16.
    let part = Bipartition::first(6, 2)?;
    let states: Vec<PureState> = (0..cfg.theory_states)
        .map(|i| Ok(PureState::new(6, haar_state(64, &mut Stream::new(seed, "theory/ab", i as u64))?)?))
        .collect::<Result<_>>()?;
    let mut ab = Vec::new();
    for k in [2, 3] {
        for b in [2, 4] {
            let p = PolyApproxParams::with_default_r(k, b)?;
            let rows: Vec<AbRow> = states
                .par_iter()
                .enumerate()
                .map(|(i, s)| {
                    let r = check_ab_bound(s, &part, p)?;
                    Ok(AbRow {
                        k,
                        b,
                        state: i,
                        lhs: r.lhs,
                        rhs: r.rhs,
                        holds: r.holds,
                        config_hash: hash.clone(),
                    })
                })
                .collect::<Result<_>>()?;
            let held = rows.iter().filter(|r| r.holds).count() as f64 / rows.len() as f64;
            check("ab_bound", format!("d_a=4 d_b=16 k={k} b={b}"), held, 1.0, None, held == 1.0);
            ab.extend(rows);
        }
    }

    // Expectation identity.
    for k in [1, 2] {
        let r = mc_expectation_identity(2, 8, k, cfg.theory_samples, &Stream::new(seed, "theory/identity", k as u64))?;
        check(
            "expectation_identity",
            format!("d_a=2 d_b=8 k={k} n={}", cfg.theory_samples),
            r.deviation,
            0.0,
            Some(r.std_error),
            r.deviation < 0.02,
        );
    }
    let mean_dev: Vec<f64> = SCALING_SAMPLES
        .iter()
        .map(|&n| {
            let devs = (0..SCALING_REPEATS)
                .map(|rep| {
                    let rng = Stream::new(seed, "theory/identity_scaling", (n as u64) << 8 | rep);
                    Ok(mc_expectation_identity(2, 8, 2, n, &rng)?.deviation)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(devs.iter().sum::<f64>() / devs.len() as f64)
        })
        .collect::<Result<_>>()?;
    for w in 0..2 {
        let ratio = mean_dev[w + 1] / mean_dev[w];
        check(
            "identity_scaling",
            format!("n={}->{}", SCALING_SAMPLES[w], SCALING_SAMPLES[w + 1]),
            ratio,
            0.5,
            None,
            (0.4..=0.8).contains(&ratio),
        );
    }

    // Weight moments.
    for (d_a, d_b, k) in [(2, 4, 1), (2, 2, 2)] {
        let rng = Stream::new(seed, "theory/weights", (d_a * 100 + d_b * 10 + k) as u64);
        let w = mc_weight_moments(d_a, d_b, k, cfg.theory_samples, &rng)?;
        for (label, r) in [("weight_moment", &w.diagonal), ("cross_moment", &w.cross)] {
            let est = r.estimate.scalar().unwrap_or(f64::NAN);
            let refv = r.reference.scalar().unwrap_or(f64::NAN);
            check(
                label,
                format!("d_a={d_a} d_b={d_b} k={k}"),
                est,
                refv,
                Some(r.std_error),
                r.z_score() < 4.0,
            );
        }
    }

    // Concentration of s = d_B p_z.
    let n_conc = (cfg.theory_samples / 10).max(1000);
    let mut tail_half = Vec::new();
    for d_a in [4, 16] {
        let d_b = 16;
        let rng = Stream::new(seed, "theory/concentration", d_a as u64);
        let r = concentration_report(d_a, d_b, n_conc, &DELTA_GRID, &rng)?;
        check(
            "concentration_mean",
            format!("d_a={d_a} d_b={d_b} n={n_conc}"),
            r.mean,
            1.0,
            Some(r.std_error),
            (r.mean - 1.0).abs() <= 3.0 * r.std_error,
        );
        check(
            "concentration_bound",
            format!("d_a={d_a} d_b={d_b}"),
            r.tails.iter().filter(|t| t.violated).count() as f64,
            0.0,
            None,
            !r.any_violation(),
        );
        let h = &r.histogram;
        let mode = (0..h.counts.len())
            .max_by(|&a, &b| h.counts[a].cmp(&h.counts[b]).then(b.cmp(&a)))
            .map(|i| 0.5 * (h.edges[i] + h.edges[i + 1]))
            .unwrap_or(f64::NAN);
        check(
            "concentration_mode",
            format!("d_a={d_a} d_b={d_b}"),
            mode,
            1.0,
            None,
            d_a < 16 || (0.8..=1.2).contains(&mode),
        );
        for i in 0..h.counts.len() {
            out.histogram.push(HistogramRow {
                d_a,
                d_b,
                lo: h.edges[i],
                hi: h.edges[i + 1],
                count: h.counts[i],
                config_hash: hash.clone(),
            });
        }
        for t in &r.tails {
            out.tails.push(TailRow {
                d_a,
                d_b,
                delta: t.delta,
                empirical: t.empirical,
                bound: t.bound,
                violated: t.violated,
                config_hash: hash.clone(),
            });
        }
        tail_half.push(r.tail_at(0.5).map_or(f64::NAN, |t| t.empirical));
    }
    check(
        "concentration_sharpens",
        "delta=0.5 d_a=16 vs 4".into(),
        tail_half[1],
        tail_half[0],
        None,
        tail_half[1] < tail_half[0],
    );

    // Independence of weight and conditional state.
    let ind = mc_independence(2, 8, n_conc, &Stream::new(seed, "theory/independence", 0))?;
    let corr = ind.correlation.unwrap_or(f64::NAN);
    check(
        "independence",
        format!("d_a=2 d_b=8 n={n_conc}"),
        corr,
        0.0,
        Some(ind.std_error),
        corr.abs() < 3.0 * ind.std_error,
    );

    // Closed-form bounds.
    let nb = theorem1_required_nb(1, 1, 0.1, 0.01)?;
    check("theorem1_nb", "n_a=1 k=1 eps=0.1 delta=0.01".into(), f64::from(nb), 23.0, None, nb == 23);
    for b in [2u32, 4, 8] {
        let t = theorem2_error_terms(8, 16, 1, b, 1.0)?;
        let want = f64::from(b) * std::f64::consts::LN_2;
        check(
            "theorem2_e1_k1",
            format!("d_a=8 d_b=16 k=1 b={b}"),
            t.ln_e1,
            want,
            None,
            (t.ln_e1 - want).abs() < 1e-12,
        );
    }
    let t = theorem2_error_terms(2, 4, 2, 2, 1.0)?;
    check("theorem2_e1", "d_a=2 d_b=4 k=2 b=2".into(), t.ln_e1.exp(), 289.0, None, (t.ln_e1.exp() - 289.0).abs() < 1e-9);
    for n_a in 1..=4 {
        for k in 1..=4 {
            out.theorem1.push(Theorem1Row {
                n_a,
                k,
                eps: 0.1,
                delta: 0.01,
                log2_db: theorem1_log2_db(n_a, k, 0.1, 0.01)?,
                n_b: theorem1_required_nb(n_a, k, 0.1, 0.01)?,
                config_hash: hash.clone(),
            });
        }
    }

    // Haar mean of the residual against its bound, d_A = 16, d_B = 64.
    let part = Bipartition::first(10, 4)?;
    let p = PolyApproxParams::with_default_r(2, 8)?;
    let rs: Vec<f64> = (0..cfg.theory_states)
        .into_par_iter()
        .map(|i| {
            let s = PureState::new(10, haar_state(1024, &mut Stream::new(seed, "theory/residual", i as u64))?)?;
            Ok(residual_r(&s, &part, p)?)
        })
        .collect::<Result<_>>()?;
    let mean = rs.iter().sum::<f64>() / rs.len() as f64;
    let ln_bound = ln_residual_mean_bound(16, 64, 2, 8);
    check(
        "residual_mean_ln",
        "d_a=16 d_b=64 k=2 b=8 r=1".into(),
        mean.ln(),
        ln_bound,
        None,
        mean.ln() <= ln_bound,
    );

    for b in [2u32, 4, 8, 16] {
        for i in 0..=150 {
            let s = i as f64 * 0.01;
            out.mu.push(MuRow {
                k: 2,
                b,
                s,
                mu: mu(s, 2, b)?,
                config_hash: hash.clone(),
            });
        }
    }
    out.ab = ab;
    Ok(out)
}
