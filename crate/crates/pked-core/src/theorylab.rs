//! Numerical checks of the moment identities behind projected designs.
//!
//! For a state `|Phi>` on `A (x) B` write `|Phi~_z> = (<z|_B) |Phi>` and
//! `p_z = <Phi~_z|Phi~_z>`. The k-th moment of the projected ensemble is the
//! rational tensor
//!
//! ```text
//! A(Phi) = sum_z |Phi~_z><Phi~_z|^{(x)k} / p_z^{k-1}
//! ```
//!
//! which [`tensor_b`] approximates by damping each term with
//! `mu_{k,b}(d_B p_z / r)`, `mu_{k,b}(s) = 1 - (1 - s^{2(k-1)})^b`. The
//! damping error is bounded termwise by the residual [`residual_r`].
//!
//! Monte Carlo helpers draw Haar states on `C^{d_a} (x) C^{d_b}` with the A
//! index most significant, and sample `i` always uses `rng.fork(i)`.
//!
//! The published bounds mix the symbols `t` and `k` for the design order;
//! every function here reads both as `k`.

use crate::designs::{haar_moment, tensor_power, MomentMatrix, MOMENT_BUDGET};
use crate::ensembles::haar_state;
use crate::error::invalid;
use crate::hilbert::{Bipartition, PureState};
use crate::reduce::tree_map_reduce;
use crate::rng::Stream;
use crate::{linalg, Error, Result, C64};
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use std::f64::consts::{E, PI, SQRT_2};

/// Samples per task in Monte Carlo reductions.
const MC_CHUNK: usize = 512;

/// Parameters of the polynomial damping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyApproxParams {
    pub k: usize,
    pub b: u32,
    pub r: f64,
}

impl PolyApproxParams {
    /// `k >= 2`, `b >= 2` even, `r > 0`.
    pub fn new(k: usize, b: u32, r: f64) -> Result<Self> {
        if k < 2 {
            return Err(invalid(format!("damping needs k >= 2, got {k}")));
        }
        check_b(b)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!("r must be positive, got {r}")));
        }
        Ok(Self { k, b, r })
    }

    /// `r = 1`.
    pub fn with_default_r(k: usize, b: u32) -> Result<Self> {
        Self::new(k, b, 1.0)
    }
}

fn check_b(b: u32) -> Result<()> {
    if b < 2 || b % 2 != 0 {
        return Err(invalid(format!("b must be an even integer >= 2, got {b}")));
    }
    Ok(())
}

/// `mu_{k,b}(s) = 1 - (1 - s^{2(k-1)})^b`.
pub fn mu(s: f64, k: usize, b: u32) -> Result<f64> {
    check_b(b)?;
    Ok(1.0 - residual_factor(s, k, b))
}

fn residual_factor(s: f64, k: usize, b: u32) -> f64 {
    (1.0 - s.powi(2 * (k as i32 - 1))).powi(b as i32)
}

/// Per-outcome weights and normalized conditional states.
fn outcomes(state: &PureState, part: &Bipartition) -> Result<Vec<(f64, Vec<C64>)>> {
    (0..part.d_b())
        .map(|z| {
            let v = part.conditional(state, z)?;
            let p: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            let s = if p > 0.0 { 1.0 / p.sqrt() } else { 0.0 };
            Ok((p, v.into_iter().map(|c| c * s).collect()))
        })
        .collect()
}

fn weighted_tensor_sum(d: usize, k: usize, terms: &[(f64, Vec<C64>)]) -> Result<Mat<C64>> {
    let n = d
        .checked_pow(k as u32)
        .filter(|&n| n <= MOMENT_BUDGET)
        .ok_or_else(|| Error::BudgetExceeded(format!("tensor on {d}^{k} above {MOMENT_BUDGET}")))?;
    let live: Vec<&(f64, Vec<C64>)> = terms.iter().filter(|(w, _)| *w > 0.0).collect();
    let mut a = Mat::<C64>::zeros(n, live.len());
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for (c, (w, psi)) in live.iter().enumerate() {
        tensor_power(psi, k, w.sqrt(), &mut buf);
        for (r, v) in buf.iter().enumerate() {
            a[(r, c)] = *v;
        }
    }
    let mut out = Mat::<C64>::zeros(n, n);
    matmul(
        out.as_mut(),
        Accum::Replace,
        a.as_ref(),
        a.adjoint(),
        C64::new(1.0, 0.0),
        Par::Seq,
    );
    Ok(out)
}

/// `A(Phi)` built directly from the conditional vectors.
pub fn tensor_a(state: &PureState, part: &Bipartition, k: usize) -> Result<MomentMatrix> {
    let terms = outcomes(state, part)?;
    MomentMatrix::new(part.d_a(), k, weighted_tensor_sum(part.d_a(), k, &terms)?)
}

/// `B(Phi)`: each term of `A(Phi)` multiplied by `mu_{k,b}(d_B p_z / r)`.
pub fn tensor_b(state: &PureState, part: &Bipartition, params: PolyApproxParams) -> Result<Mat<C64>> {
    let d_b = part.d_b() as f64;
    let terms: Vec<(f64, Vec<C64>)> = outcomes(state, part)?
        .into_iter()
        .map(|(p, v)| (p * mu(d_b * p / params.r, params.k, params.b).unwrap_or(0.0), v))
        .collect();
    // mu can be negative, so the weights are applied after the outer products.
    let n = part.d_a().pow(params.k as u32);
    let mut out = Mat::<C64>::zeros(n, n);
    for (w, v) in &terms {
        if *w != 0.0 {
            let m = weighted_tensor_sum(part.d_a(), params.k, &[(1.0, v.clone())])?;
            out += &m * faer::Scale(C64::new(*w, 0.0));
        }
    }
    Ok(out)
}

/// `R(Phi) = sum_z p_z (1 - (d_B p_z / r)^{2(k-1)})^b`.
pub fn residual_r(state: &PureState, part: &Bipartition, params: PolyApproxParams) -> Result<f64> {
    let d_b = part.d_b() as f64;
    Ok((0..part.d_b())
        .map(|z| {
            let p: f64 = part
                .conditional(state, z)
                .map(|v| v.iter().map(|c| c.norm_sqr()).sum())
                .unwrap_or(0.0);
            p * residual_factor(d_b * p / params.r, params.k, params.b)
        })
        .sum())
}

/// Both sides of `||A - B||_1 <= R`. `holds` allows a relative rounding
/// slack of 1e-9, since the two sides coincide on some states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn check_ab_bound(state: &PureState, part: &Bipartition, params: PolyApproxParams) -> Result<AbBound> {
    let a = tensor_a(state, part, params.k)?;
    let b = tensor_b(state, part, params)?;
    let lhs = linalg::trace_norm((a.matrix() - &b).as_ref())?;
    let rhs = residual_r(state, part, params)?;
    Ok(AbBound {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9 * rhs.max(1.0),
    })
}

/// Natural log of the bound on the Haar mean of `R` at `r = 1`:
/// `d_B / 2^b + 2 d_B^{2b(k-1)+2} exp(-d_A^{1/4} / (8 e sqrt 2))`.
/// The bound is stated for `d_A^{1/4} >= 8k - 6`.
pub fn ln_residual_mean_bound(d_a: usize, d_b: usize, k: usize, b: u32) -> f64 {
    let ldb = (d_b as f64).ln();
    let first = ldb - f64::from(b) * std::f64::consts::LN_2;
    let second = 2f64.ln() + (2.0 * f64::from(b) * (k as f64 - 1.0) + 2.0) * ldb
        - (d_a as f64).powf(0.25) / (8.0 * E * SQRT_2);
    log_add(first, second)
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Monte Carlo estimate against a closed-form or exact reference.
#[derive(Clone, Debug)]
pub struct McReport {
    pub n_samples: usize,
    pub estimate: McValue,
    pub reference: McValue,
    /// Trace distance for matrices, absolute difference for scalars.
    pub deviation: f64,
    /// Standard error of a scalar estimate, or the largest entrywise
    /// standard error of a matrix estimate.
    pub std_error: f64,
}

#[derive(Clone, Debug)]
pub enum McValue {
    Scalar(f64),
    Matrix(Mat<C64>),
}

impl McValue {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            McValue::Scalar(x) => Some(*x),
            McValue::Matrix(_) => None,
        }
    }
}

impl McReport {
    /// Deviation in units of the standard error.
    pub fn z_score(&self) -> f64 {
        self.deviation / self.std_error
    }
}

fn check_samples(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(invalid(format!("need at least {min} samples, got {n}")));
    }
    Ok(())
}

fn check_dims(d_a: usize, d_b: usize) -> Result<()> {
    if d_a == 0 || d_b == 0 {
        return Err(invalid("dimensions must be positive"));
    }
    Ok(())
}

fn haar_outcomes(d_a: usize, d_b: usize, rng: &mut Stream) -> Result<Vec<(f64, Vec<C64>)>> {
    let phi = haar_state(d_a * d_b, rng)?;
    Ok((0..d_b)
        .map(|z| {
            let v: Vec<C64> = (0..d_a).map(|a| phi[a * d_b + z]).collect();
            let p: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            let s = if p > 0.0 { 1.0 / p.sqrt() } else { 0.0 };
            (p, v.into_iter().map(|c| c * s).collect())
        })
        .collect())
}

/// Running sums of scalar observables.
#[derive(Clone, Debug)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    cross: f64,
}

impl Moments {
    fn zero(n: usize) -> Self {
        Self {
            sum: vec![0.0; n],
            sum_sq: vec![0.0; n],
            cross: 0.0,
        }
    }
    fn push(&mut self, x: &[f64]) {
        for (i, v) in x.iter().enumerate() {
            self.sum[i] += v;
            self.sum_sq[i] += v * v;
        }
        if x.len() >= 2 {
            self.cross += x[0] * x[1];
        }
    }
    fn merge(mut self, o: Self) -> Self {
        for i in 0..self.sum.len() {
            self.sum[i] += o.sum[i];
            self.sum_sq[i] += o.sum_sq[i];
        }
        self.cross += o.cross;
        self
    }
    fn mean(&self, i: usize, n: usize) -> f64 {
        self.sum[i] / n as f64
    }
    fn var(&self, i: usize, n: usize) -> f64 {
        let m = self.mean(i, n);
        ((self.sum_sq[i] - n as f64 * m * m) / (n as f64 - 1.0)).max(0.0)
    }
}

fn mc_scalars<F>(n: usize, width: usize, rng: &Stream, f: F) -> Result<Moments>
where
    F: Fn(&mut Stream) -> Result<Vec<f64>> + Sync,
{
    tree_map_reduce(
        n,
        MC_CHUNK,
        |r| {
            let mut m = Moments::zero(width);
            for i in r {
                let x = f(&mut rng.fork(i as u64))?;
                m.push(&x);
            }
            Ok(m)
        },
        |a: Result<Moments>, b: Result<Moments>| Ok(a?.merge(b?)),
    )
    .unwrap_or_else(|| Ok(Moments::zero(width)))
}

/// Haar average of `A(Phi)` against the Haar moment on A.
pub fn mc_expectation_identity(
    d_a: usize,
    d_b: usize,
    k: usize,
    n_samples: usize,
    rng: &Stream,
) -> Result<McReport> {
    check_samples(n_samples, 100)?;
    check_dims(d_a, d_b)?;
    let reference = haar_moment(d_a, k)?;
    let dim = reference.dim();
    type Acc = (Mat<C64>, Mat<f64>);
    let (sum, sum_sq) = tree_map_reduce(
        n_samples,
        MC_CHUNK,
        |r| -> Result<Acc> {
            let mut s = Mat::<C64>::zeros(dim, dim);
            let mut q = Mat::<f64>::zeros(dim, dim);
            for i in r {
                let terms = haar_outcomes(d_a, d_b, &mut rng.fork(i as u64))?;
                let a = weighted_tensor_sum(d_a, k, &terms)?;
                for c in 0..dim {
                    for r in 0..dim {
                        q[(r, c)] += a[(r, c)].norm_sqr();
                    }
                }
                s += &a;
            }
            Ok((s, q))
        },
        |x, y| {
            let (x, y) = (x?, y?);
            Ok((x.0 + y.0, x.1 + y.1))
        },
    )
    .expect("n_samples >= 100")?;
    let n = n_samples as f64;
    let mean = &sum * faer::Scale(C64::new(1.0 / n, 0.0));
    let mut se: f64 = 0.0;
    for c in 0..dim {
        for r in 0..dim {
            let var = ((sum_sq[(r, c)] - n * mean[(r, c)].norm_sqr()) / (n - 1.0)).max(0.0);
            se = se.max((var / n).sqrt());
        }
    }
    let deviation = 0.5 * linalg::trace_norm((&mean - reference.matrix()).as_ref())?;
    Ok(McReport {
        n_samples,
        estimate: McValue::Matrix(mean),
        reference: McValue::Matrix(reference.into_matrix()),
        deviation,
        std_error: se,
    })
}

fn rising(x: f64, k: usize) -> f64 {
    (0..k).map(|j| x + j as f64).product()
}

/// `E[p_z^k] = d_A (d_A+1)...(d_A+k-1) / (d (d+1)...(d+k-1))`.
pub fn weight_moment_closed_form(d_a: usize, d_b: usize, k: usize) -> f64 {
    rising(d_a as f64, k) / rising((d_a * d_b) as f64, k)
}

/// `E[|<Phi~_z|Phi~_y>|^{2k}] = k! d_A...(d_A+k-1) / (d...(d+2k-1))`, `z != y`.
pub fn cross_moment_closed_form(d_a: usize, d_b: usize, k: usize) -> f64 {
    let fact: f64 = (1..=k).map(|x| x as f64).product();
    fact * rising(d_a as f64, k) / rising((d_a * d_b) as f64, 2 * k)
}

/// Monte Carlo weight moment and cross-overlap moment.
#[derive(Clone, Debug)]
pub struct WeightMoments {
    pub diagonal: McReport,
    pub cross: McReport,
}

/// Sample means of `p_0^k` and `|<Phi~_0|Phi~_1>|^{2k}` against their
/// closed forms.
pub fn mc_weight_moments(
    d_a: usize,
    d_b: usize,
    k: usize,
    n_samples: usize,
    rng: &Stream,
) -> Result<WeightMoments> {
    check_samples(n_samples, 100)?;
    check_dims(d_a, d_b)?;
    if d_b < 2 {
        return Err(invalid("cross moments need d_B >= 2"));
    }
    let m = mc_scalars(n_samples, 2, rng, |s| {
        let phi = haar_state(d_a * d_b, s)?;
        let p0: f64 = (0..d_a).map(|a| phi[a * d_b].norm_sqr()).sum();
        let ov: C64 = (0..d_a).map(|a| phi[a * d_b].conj() * phi[a * d_b + 1]).sum();
        Ok(vec![p0.powi(k as i32), ov.norm_sqr().powi(k as i32)])
    })?;
    let report = |i: usize, reference: f64| {
        let est = m.mean(i, n_samples);
        McReport {
            n_samples,
            estimate: McValue::Scalar(est),
            reference: McValue::Scalar(reference),
            deviation: (est - reference).abs(),
            std_error: (m.var(i, n_samples) / n_samples as f64).sqrt(),
        }
    };
    Ok(WeightMoments {
        diagonal: report(0, weight_moment_closed_form(d_a, d_b, k)),
        cross: report(1, cross_moment_closed_form(d_a, d_b, k)),
    })
}

/// Tail bound `P(|s - 1| >= delta) <= 2 exp(-sqrt(d_A) delta / (8 e sqrt 2))`
/// for `s = d_B p_z`.
pub fn concentration_bound(d_a: usize, delta: f64) -> f64 {
    2.0 * (-(d_a as f64).sqrt() * delta / (8.0 * E * SQRT_2)).exp()
}

/// Equal-width histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize) -> Self {
        let w = (hi - lo) / bins as f64;
        Self {
            edges: (0..=bins).map(|i| lo + w * i as f64).collect(),
            counts: vec![0; bins],
        }
    }
    fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let (lo, hi) = (self.edges[0], self.edges[bins]);
        if x >= lo && x < hi {
            let i = (((x - lo) / (hi - lo)) * bins as f64) as usize;
            self.counts[i.min(bins - 1)] += 1;
        } else if x >= hi {
            self.counts[bins - 1] += 1;
        }
    }
}

/// Empirical tail against the bound at one `delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailPoint {
    pub delta: f64,
    pub empirical: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Clone, Debug)]
pub struct ConcentrationReport {
    pub d_a: usize,
    pub d_b: usize,
    pub n_samples: usize,
    /// Sample mean of `s = d_B p_0`.
    pub mean: f64,
    pub std_error: f64,
    /// Histogram of `s` on `[0, 4)`; larger values land in the last bin.
    pub histogram: Histogram,
    pub tails: Vec<TailPoint>,
}

impl ConcentrationReport {
    pub fn any_violation(&self) -> bool {
        self.tails.iter().any(|t| t.violated)
    }
    pub fn tail_at(&self, delta: f64) -> Option<&TailPoint> {
        self.tails.iter().find(|t| t.delta == delta)
    }
}

/// Distribution of `s = d_B p_0` over Haar states.
pub fn concentration_report(
    d_a: usize,
    d_b: usize,
    n_samples: usize,
    delta_grid: &[f64],
    rng: &Stream,
) -> Result<ConcentrationReport> {
    check_samples(n_samples, 1000)?;
    check_dims(d_a, d_b)?;
    let s: Vec<f64> = (0..n_samples)
        .map(|i| {
            let phi = haar_state(d_a * d_b, &mut rng.fork(i as u64))?;
            Ok(d_b as f64 * (0..d_a).map(|a| phi[a * d_b].norm_sqr()).sum::<f64>())
        })
        .collect::<Result<_>>()?;
    let n = n_samples as f64;
    let mean = s.iter().sum::<f64>() / n;
    let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut histogram = Histogram::new(0.0, 4.0, 40);
    for &x in &s {
        histogram.add(x);
    }
    let tails = delta_grid
        .iter()
        .map(|&delta| {
            let empirical = s.iter().filter(|&&x| (x - 1.0).abs() >= delta).count() as f64 / n;
            let bound = concentration_bound(d_a, delta);
            TailPoint {
                delta,
                empirical,
                bound,
                violated: empirical > bound,
            }
        })
        .collect();
    Ok(ConcentrationReport {
        d_a,
        d_b,
        n_samples,
        mean,
        std_error: (var / n).sqrt(),
        histogram,
        tails,
    })
}

/// Smallest `N_B` with `2^{N_B} >= 18 pi^3 (2k-1) d_A^{4k} (2k ln d_A + ln(2/delta)) / eps^2`,
/// `d_A = 2^{N_A}`, evaluated in log space.
pub fn theorem1_required_nb(n_a: usize, k: usize, eps: f64, delta: f64) -> Result<u32> {
    Ok(theorem1_log2_db(n_a, k, eps, delta)?.ceil().max(0.0) as u32)
}

/// `log2` of the right-hand side in [`theorem1_required_nb`].
pub fn theorem1_log2_db(n_a: usize, k: usize, eps: f64, delta: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(invalid("eps and delta must lie in (0, 1)"));
    }
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    let k = k as f64;
    let ln_da = n_a as f64 * std::f64::consts::LN_2;
    let inner = 2.0 * k * ln_da + (2.0 / delta).ln();
    Ok((18.0 * PI.powi(3) * (2.0 * k - 1.0)).log2() + 4.0 * k * n_a as f64 + inner.log2()
        - 2.0 * eps.log2())
}

/// `ln E_1` and `ln E_2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorTerms {
    pub ln_e1: f64,
    pub ln_e2: f64,
}

/// `E_1 = (1 + (d_B/r)^{2(k-1)})^b` and
/// `E_2 = 2 k! (E_1 - 1) + d_A^k (E_1 - 1)^2`, both as natural logs.
pub fn theorem2_error_terms(d_a: usize, d_b: usize, k: usize, b: u32, r: f64) -> Result<ErrorTerms> {
    check_b(b)?;
    if d_a == 0 || d_b == 0 || k == 0 || r.is_nan() || r <= 0.0 {
        return Err(invalid("error terms need positive parameters"));
    }
    let ln_x = 2.0 * (k as f64 - 1.0) * (d_b as f64 / r).ln();
    // ln(1 + e^x)
    let ln_1px = if ln_x > 0.0 {
        ln_x + (-ln_x).exp().ln_1p()
    } else {
        ln_x.exp().ln_1p()
    };
    let ln_e1 = f64::from(b) * ln_1px;
    // ln(E_1 - 1)
    let ln_m = if ln_e1 > 1.0 {
        ln_e1 + (-(-ln_e1).exp()).ln_1p()
    } else {
        ln_e1.exp_m1().ln()
    };
    let ln_fact: f64 = (1..=k).map(|x| (x as f64).ln()).sum();
    let ln_e2 = log_add(
        2f64.ln() + ln_fact + ln_m,
        k as f64 * (d_a as f64).ln() + 2.0 * ln_m,
    );
    Ok(ErrorTerms { ln_e1, ln_e2 })
}

/// Sample correlation between `p_0` and `|<0|Phi_0>|^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndependenceReport {
    pub n_samples: usize,
    /// `None` when either variable has zero variance.
    pub correlation: Option<f64>,
    pub std_error: f64,
    pub degenerate: bool,
}

/// Correlation test of weight and conditional state on Haar inputs.
pub fn mc_independence(d_a: usize, d_b: usize, n_samples: usize, rng: &Stream) -> Result<IndependenceReport> {
    independence_with(d_a, d_b, n_samples, rng, |s| haar_state(d_a * d_b, s))
}

/// [`mc_independence`] with a caller-supplied state sampler. States use the
/// index layout `a * d_b + z`.
pub fn independence_with<F>(
    d_a: usize,
    d_b: usize,
    n_samples: usize,
    rng: &Stream,
    sample: F,
) -> Result<IndependenceReport>
where
    F: Fn(&mut Stream) -> Result<Vec<C64>> + Sync,
{
    check_samples(n_samples, 1000)?;
    check_dims(d_a, d_b)?;
    let m = mc_scalars(n_samples, 2, rng, |s| {
        let phi = sample(s)?;
        if phi.len() != d_a * d_b {
            return Err(Error::DimensionMismatch {
                what: "sampled state",
                expected: d_a * d_b,
                found: phi.len(),
            });
        }
        let p: f64 = (0..d_a).map(|a| phi[a * d_b].norm_sqr()).sum();
        let f = if p > 0.0 { phi[0].norm_sqr() / p } else { 0.0 };
        Ok(vec![p, f])
    })?;
    let n = n_samples as f64;
    let (vp, vf) = (m.var(0, n_samples), m.var(1, n_samples));
    let degenerate = vp < 1e-300 || vf < 1e-300;
    let correlation = (!degenerate).then(|| {
        let cov = (m.cross - n * m.mean(0, n_samples) * m.mean(1, n_samples)) / (n - 1.0);
        cov / (vp * vf).sqrt()
    });
    let r = correlation.unwrap_or(0.0);
    Ok(IndependenceReport {
        n_samples,
        correlation,
        std_error: (1.0 - r * r) / (n - 1.0).sqrt(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::ensemble_moment;
    use crate::ensembles::projected_ensemble;
    use crate::hilbert::bell;
    use proptest::prelude::*;

    fn random_state(n: usize, seed: u64) -> PureState {
        let mut s = Stream::new(seed, "theorylab-test", 0);
        PureState::new(n, haar_state(1 << n, &mut s).unwrap()).unwrap()
    }

    #[test]
    fn mu_values() {
        for (k, b) in [(2, 2), (3, 4), (4, 8)] {
            assert_eq!(mu(1.0, k, b).unwrap(), 1.0);
            assert_eq!(mu(0.0, k, b).unwrap(), 0.0);
        }
        assert!((mu(0.5, 2, 2).unwrap() - 0.4375).abs() < 1e-15);
        assert!(mu(0.5, 2, 3).is_err());
        assert!(PolyApproxParams::new(1, 2, 1.0).is_err());
        assert!(PolyApproxParams::new(2, 2, 0.0).is_err());
    }

    #[test]
    fn tensor_a_on_bell() {
        let a = tensor_a(&bell(), &Bipartition::first(2, 1).unwrap(), 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j && (i == 0 || i == 3) { 0.5 } else { 0.0 };
                assert!((a.matrix()[(i, j)].re - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn uniform_weights_make_b_equal_a() {
        let part = Bipartition::first(2, 1).unwrap();
        let p = PolyApproxParams::with_default_r(2, 4).unwrap();
        let ab = check_ab_bound(&bell(), &part, p).unwrap();
        assert!(ab.lhs < 1e-15 && ab.rhs < 1e-15 && ab.holds);
    }

    #[test]
    fn bound_holds_on_product_state() {
        let part = Bipartition::first(5, 2).unwrap();
        let psi = PureState::basis(5, 0).unwrap();
        for b in [2, 4] {
            let ab = check_ab_bound(&psi, &part, PolyApproxParams::with_default_r(2, b).unwrap()).unwrap();
            assert!(ab.holds, "{ab:?}");
        }
    }

    #[test]
    fn bound_holds_on_haar_states() {
        let part = Bipartition::first(6, 2).unwrap();
        for seed in 0..100 {
            let psi = random_state(6, seed);
            for b in [2, 4] {
                let p = PolyApproxParams::with_default_r(2, b).unwrap();
                let ab = check_ab_bound(&psi, &part, p).unwrap();
                assert!(ab.holds, "seed {seed} b {b}: {ab:?}");
                let tb: f64 = {
                    let m = tensor_b(&psi, &part, p).unwrap();
                    (0..16).map(|i| m[(i, i)].re).sum()
                };
                assert!(tb <= 1.0 + ab.rhs + 1e-12);
            }
        }
    }

    #[test]
    fn larger_b_tightens_in_the_contracting_window() {
        let part = Bipartition::first(6, 2).unwrap();
        let mut tested = 0;
        for seed in 0..200 {
            let psi = random_state(6, seed);
            let d_b = part.d_b() as f64;
            let ok = (0..part.d_b()).all(|z| {
                let p: f64 = part.conditional(&psi, z).unwrap().iter().map(|c| c.norm_sqr()).sum();
                d_b * p > 0.0 && d_b * p < 2f64.sqrt()
            });
            if !ok {
                continue;
            }
            tested += 1;
            let a = tensor_a(&psi, &part, 2).unwrap();
            let dist: Vec<f64> = [2, 4, 8]
                .iter()
                .map(|&b| {
                    let bm = tensor_b(&psi, &part, PolyApproxParams::with_default_r(2, b).unwrap()).unwrap();
                    linalg::trace_norm((a.matrix() - &bm).as_ref()).unwrap()
                })
                .collect();
            assert!(dist[0] >= dist[1] - 1e-12 && dist[1] >= dist[2] - 1e-12, "{dist:?}");
            if tested == 20 {
                break;
            }
        }
        assert!(tested >= 1);
    }

    #[test]
    fn residual_mean_below_bound() {
        let rng = Stream::new(5, "residual", 0);
        let part = Bipartition::first(10, 4).unwrap();
        let p = PolyApproxParams::with_default_r(2, 8).unwrap();
        let n = 200;
        let mean: f64 = (0..n)
            .map(|i| {
                let psi = PureState::new(10, haar_state(1024, &mut rng.fork(i)).unwrap()).unwrap();
                residual_r(&psi, &part, p).unwrap()
            })
            .sum::<f64>()
            / n as f64;
        assert!(mean >= 0.0);
        assert!(mean.ln() <= ln_residual_mean_bound(16, 64, 2, 8));
    }

    #[test]
    fn closed_forms() {
        assert!((weight_moment_closed_form(2, 4, 1) - 0.25).abs() < 1e-15);
        assert!((weight_moment_closed_form(2, 2, 2) - 0.3).abs() < 1e-15);
        assert!((cross_moment_closed_form(2, 2, 1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn weight_moments_match() {
        let rng = Stream::new(9, "weights", 0);
        for (da, db, k) in [(2, 4, 1), (2, 2, 2)] {
            let w = mc_weight_moments(da, db, k, 20_000, &rng).unwrap();
            assert!(w.diagonal.z_score() < 4.0, "{:?}", w.diagonal);
            assert!(w.cross.z_score() < 4.0, "{:?}", w.cross);
        }
        assert!(mc_weight_moments(2, 1, 1, 200, &rng).is_err());
    }

    #[test]
    fn expectation_identity() {
        let rng = Stream::new(3, "identity", 0);
        let r = mc_expectation_identity(2, 8, 2, 20_000, &rng).unwrap();
        assert!(r.deviation < 0.02, "{}", r.deviation);
        assert!(mc_expectation_identity(2, 8, 2, 50, &rng).is_err());
    }

    #[test]
    fn concentration() {
        let rng = Stream::new(4, "conc", 0);
        let grid = [0.1, 0.25, 0.5, 1.0, 2.0];
        let small = concentration_report(4, 16, 4000, &grid, &rng).unwrap();
        let large = concentration_report(16, 16, 4000, &grid, &rng).unwrap();
        for r in [&small, &large] {
            assert!(!r.any_violation());
            assert!((r.mean - 1.0).abs() < 3.0 * r.std_error);
            assert_eq!(r.histogram.counts.iter().sum::<u64>(), 4000);
        }
        assert!(large.tail_at(0.5).unwrap().empirical < small.tail_at(0.5).unwrap().empirical);
    }

    #[test]
    fn theorem1_values() {
        assert_eq!(theorem1_required_nb(1, 1, 0.1, 0.01).unwrap(), 23);
        let a = theorem1_log2_db(2, 2, 0.1, 0.01).unwrap();
        let b = theorem1_log2_db(2, 2, 0.05, 0.01).unwrap();
        assert!((b - a - 2.0).abs() < 1e-12);
        for k in 1..5 {
            for na in 1..6 {
                let nb = theorem1_required_nb(na, k, 0.1, 0.01).unwrap();
                assert!(nb <= theorem1_required_nb(na + 1, k, 0.1, 0.01).unwrap());
                assert!(nb <= theorem1_required_nb(na, k + 1, 0.1, 0.01).unwrap());
            }
        }
        assert!(theorem1_required_nb(1, 1, 1.5, 0.01).is_err());
    }

    #[test]
    fn theorem2_values() {
        let t = theorem2_error_terms(4, 4, 1, 6, 1.0).unwrap();
        assert!((t.ln_e1 - 6.0 * 2f64.ln()).abs() < 1e-12);
        let t = theorem2_error_terms(2, 4, 2, 2, 1.0).unwrap();
        assert!((t.ln_e1.exp() - 289.0).abs() < 1e-9);
        let e2 = 2.0 * 2.0 * 288.0 + 4.0 * 288.0 * 288.0;
        assert!((t.ln_e2 - f64::ln(e2)).abs() < 1e-12);
        let big = theorem2_error_terms(1 << 20, 1 << 30, 4, 1000, 1.0).unwrap();
        assert!(big.ln_e1.is_finite() && big.ln_e2.is_finite());
        assert!(theorem2_error_terms(2, 2, 2, 3, 1.0).is_err());
    }

    #[test]
    fn independence() {
        let rng = Stream::new(8, "indep", 0);
        let r = mc_independence(2, 8, 10_000, &rng).unwrap();
        assert!(r.correlation.unwrap().abs() < 3.0 * r.std_error, "{r:?}");
        let r4 = mc_independence(2, 8, 40_000, &rng).unwrap();
        let ratio = r4.std_error / r.std_error;
        assert!((ratio - 0.5).abs() < 0.15, "{ratio}");
        let zero = independence_with(2, 8, 1000, &rng, |_| {
            let mut v = vec![C64::new(0.0, 0.0); 16];
            v[0] = C64::new(1.0, 0.0);
            Ok(v)
        })
        .unwrap();
        assert!(zero.degenerate && zero.correlation.is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn tensor_a_matches_pipeline(seed in 0u64..10_000, na in 1usize..=3, nb in 1usize..=3, k in 1usize..=3) {
            let n = na + nb;
            let part = Bipartition::first(n, na).unwrap();
            let psi = random_state(n, seed);
            let a = tensor_a(&psi, &part, k).unwrap();
            let m = ensemble_moment(&projected_ensemble(&psi, &part).unwrap(), k).unwrap();
            prop_assert!(linalg::max_abs((a.matrix() - m.matrix()).as_ref()) < 1e-12);
        }

        #[test]
        fn residual_nonnegative(seed in 0u64..10_000, b in 1u32..=4) {
            let part = Bipartition::first(5, 2).unwrap();
            let r = residual_r(&random_state(5, seed), &part, PolyApproxParams::with_default_r(2, 2 * b).unwrap()).unwrap();
            prop_assert!(r >= 0.0);
        }
    }
}
