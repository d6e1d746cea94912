//! k-th moments of state ensembles and their distance to the Haar moment.
//!
//! Two routes compute the same numbers:
//!
//! * [`MomentMatrix`] holds the full operator on `(C^d)^{(x)k}` and is used
//!   for small dimensions, for structural checks and as a cross-check.
//! * [`symmetric`] expresses every moment in an orthonormal basis of the
//!   symmetric subspace, where the Haar moment is a multiple of the identity.
//!   [`delta_k`], [`delta_ensemble`], [`delta_em`] and [`pairwise_delta2`]
//!   use this route.
//!
//! Tensor factor 0 is the most significant digit of a product index.

pub mod series;
pub mod symmetric;

pub use series::{design_time, power_law_fit, saturation, slope, DeltaSeries, PowerLawFit};
pub use symmetric::SymBasis;

use crate::ensembles::{empirical_haar_ensemble, projected_ensemble, ProjectedEnsemble};
use crate::error::{check_dim, invalid};
use crate::hilbert::{Bipartition, PureState};
use crate::reduce::tree_map_reduce;
use crate::rng::Stream;
use crate::{binomial, linalg, Error, Result, C64};
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use rayon::prelude::*;

/// Largest `d^k` for which a full moment operator is built.
pub const MOMENT_BUDGET: usize = 4096;

/// Highest moment order supported.
pub const MAX_ORDER: usize = 4;

fn full_dim(d: usize, k: usize) -> Result<usize> {
    if d == 0 || k == 0 {
        return Err(invalid("moment needs d >= 1 and k >= 1"));
    }
    if k > MAX_ORDER {
        return Err(Error::BudgetExceeded(format!("moment order {k} above {MAX_ORDER}")));
    }
    match d.checked_pow(k as u32) {
        Some(n) if n <= MOMENT_BUDGET => Ok(n),
        _ => Err(Error::BudgetExceeded(format!(
            "moment operator of dimension {d}^{k} above {MOMENT_BUDGET}"
        ))),
    }
}

/// Hermitian unit-trace operator on `k` copies of a `d`-dimensional space.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    base_dim: usize,
    order: usize,
    matrix: Mat<C64>,
}

impl MomentMatrix {
    /// Wraps `matrix`, checking its shape, Hermiticity and trace.
    pub fn new(base_dim: usize, order: usize, matrix: Mat<C64>) -> Result<Self> {
        let n = full_dim(base_dim, order)?;
        check_dim("moment rows", n, matrix.nrows())?;
        check_dim("moment columns", n, matrix.ncols())?;
        let herm = linalg::hermiticity_defect(matrix.as_ref());
        if herm > 1e-10 {
            return Err(Error::NotHermitian(herm));
        }
        let tr: f64 = (0..n).map(|i| matrix[(i, i)].re).sum();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::Invariant(format!("moment trace {tr}")));
        }
        Ok(Self {
            base_dim,
            order,
            matrix,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }
    pub fn into_matrix(self) -> Mat<C64> {
        self.matrix
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let v = linalg::eigvalsh(self.matrix.as_ref())?;
        Ok(v.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// Trace over tensor factor `factor`, giving an order `k - 1` moment.
    pub fn partial_trace(&self, factor: usize) -> Result<MomentMatrix> {
        if self.order < 2 || factor >= self.order {
            return Err(invalid(format!(
                "cannot trace factor {factor} of an order-{} moment",
                self.order
            )));
        }
        let d = self.base_dim;
        let inner = d.pow((self.order - 1 - factor) as u32);
        let outer = d.pow(factor as u32);
        let m = outer * inner;
        let idx = |o: usize, a: usize, i: usize| (o * d + a) * inner + i;
        let out = Mat::<C64>::from_fn(m, m, |r, c| {
            let (ro, ri) = (r / inner, r % inner);
            let (co, ci) = (c / inner, c % inner);
            (0..d)
                .map(|a| self.matrix[(idx(ro, a, ri), idx(co, a, ci))])
                .sum()
        });
        MomentMatrix::new(d, self.order - 1, out)
    }

    /// Conjugation by the factor permutation sending factor `f` to `perm[f]`.
    pub fn permute_factors(&self, perm: &[usize]) -> Result<MomentMatrix> {
        let p = permutation_map(self.base_dim, self.order, perm)?;
        let n = self.dim();
        let mut out = Mat::<C64>::zeros(n, n);
        for c in 0..n {
            for r in 0..n {
                out[(p[r], p[c])] = self.matrix[(r, c)];
            }
        }
        Ok(MomentMatrix {
            base_dim: self.base_dim,
            order: self.order,
            matrix: out,
        })
    }
}

fn digits(mut x: usize, d: usize, k: usize) -> Vec<usize> {
    let mut v = vec![0; k];
    for f in (0..k).rev() {
        v[f] = x % d;
        x /= d;
    }
    v
}

fn undigits(v: &[usize], d: usize) -> usize {
    v.iter().fold(0, |acc, &x| acc * d + x)
}

/// Index map of the factor permutation on `(C^d)^{(x)k}`.
fn permutation_map(d: usize, k: usize, perm: &[usize]) -> Result<Vec<usize>> {
    let n = full_dim(d, k)?;
    check_dim("permutation length", k, perm.len())?;
    let mut seen = vec![false; k];
    for &p in perm {
        if p >= k || std::mem::replace(&mut seen[p], true) {
            return Err(invalid(format!("{perm:?} is not a permutation")));
        }
    }
    Ok((0..n)
        .map(|x| {
            let src = digits(x, d, k);
            let mut dst = vec![0; k];
            for f in 0..k {
                dst[perm[f]] = src[f];
            }
            undigits(&dst, d)
        })
        .collect())
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..k {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Projector onto the symmetric subspace of `(C^d)^{(x)k}`, the average of
/// all `k!` factor permutations.
pub fn symmetric_projector(d: usize, k: usize) -> Result<Mat<f64>> {
    let n = full_dim(d, k)?;
    let perms = permutations(k);
    let w = 1.0 / perms.len() as f64;
    let mut p = Mat::<f64>::zeros(n, n);
    for perm in &perms {
        for (x, y) in permutation_map(d, k, perm)?.into_iter().enumerate() {
            p[(y, x)] += w;
        }
    }
    Ok(p)
}

/// Haar moment `Pi_k / C(d+k-1, k)`.
pub fn haar_moment(d: usize, k: usize) -> Result<MomentMatrix> {
    let p = symmetric_projector(d, k)?;
    let norm = binomial((d + k - 1) as u64, k as u64) as f64;
    let m = Mat::<C64>::from_fn(p.nrows(), p.ncols(), |i, j| C64::new(p[(i, j)] / norm, 0.0));
    MomentMatrix::new(d, k, m)
}

pub(crate) fn tensor_power(psi: &[C64], k: usize, scale: f64, out: &mut [C64]) {
    let d = psi.len();
    for (x, o) in out.iter_mut().enumerate() {
        let mut v = C64::new(scale, 0.0);
        let mut y = x;
        for _ in 0..k {
            v *= psi[y % d];
            y /= d;
        }
        *o = v;
    }
}

/// `sum_i p_i (|psi_i><psi_i|)^{(x)k}` as a full operator.
pub fn ensemble_moment(ens: &ProjectedEnsemble, k: usize) -> Result<MomentMatrix> {
    let d = ens.subsystem_dim();
    let n = full_dim(d, k)?;
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble("moment of an empty ensemble".into()));
    }
    let weights = ens.weights();
    let states = ens.states();
    let m = tree_map_reduce(
        ens.len(),
        symmetric::CHUNK,
        |r| {
            let mut a = Mat::<C64>::zeros(n, r.len());
            let mut buf = vec![C64::new(0.0, 0.0); n];
            for (c, i) in r.enumerate() {
                tensor_power(&states[i], k, weights[i].sqrt(), &mut buf);
                for (row, v) in buf.iter().enumerate() {
                    a[(row, c)] = *v;
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
            out
        },
        |x, y| x + y,
    )
    .expect("nonempty ensemble");
    MomentMatrix::new(d, k, m)
}

/// `1/2 ||m1 - m2||_1`.
pub fn trace_distance(m1: &MomentMatrix, m2: &MomentMatrix) -> Result<f64> {
    check_dim("moment dimension", m1.dim(), m2.dim())?;
    Ok(0.5 * linalg::trace_norm((&m1.matrix - &m2.matrix).as_ref())?)
}

/// Distance of the k-th moment of `ens` from the Haar moment.
pub fn delta_ensemble(ens: &ProjectedEnsemble, k: usize) -> Result<f64> {
    if k > MAX_ORDER {
        return Err(Error::BudgetExceeded(format!("moment order {k} above {MAX_ORDER}")));
    }
    symmetric::ensemble_delta(ens, k)
}

/// `Delta^(k)` of the projected ensemble of `state` on `part`.
pub fn delta_k(state: &PureState, part: &Bipartition, k: usize) -> Result<f64> {
    delta_ensemble(&projected_ensemble(state, part)?, k)
}

/// `Delta^(1..=k_max)` of one ensemble, sharing nothing but the input.
pub fn delta_orders(ens: &ProjectedEnsemble, k_max: usize) -> Result<Vec<f64>> {
    (1..=k_max).map(|k| delta_ensemble(ens, k)).collect()
}

/// Sample mean and standard deviation of the distance of `count`-sample
/// empirical Haar ensembles from the Haar moment. Repeat `r` draws from
/// `rng.fork(r)`.
pub fn delta_em(d: usize, count: usize, k: usize, repeats: usize, rng: &Stream) -> Result<(f64, f64)> {
    let all = delta_em_orders(d, count, &[k], repeats, rng)?;
    Ok(all[0])
}

/// [`delta_em`] for several orders evaluated on the same samples.
pub fn delta_em_orders(
    d: usize,
    count: usize,
    orders: &[usize],
    repeats: usize,
    rng: &Stream,
) -> Result<Vec<(f64, f64)>> {
    if repeats < 2 {
        return Err(invalid("delta_em needs at least two repeats"));
    }
    let per: Vec<Vec<f64>> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut s = rng.fork(r as u64);
            let ens = empirical_haar_ensemble(d, count, &mut s)?;
            orders.iter().map(|&k| delta_ensemble(&ens, k)).collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..orders.len())
        .map(|j| {
            let xs: Vec<f64> = per.iter().map(|v| v[j]).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, var.sqrt())
        })
        .collect())
}

/// Symmetric matrix of `1/2 ||rho_i^(2) - rho_j^(2)||_1` between the
/// projected ensembles of the given states.
pub fn pairwise_delta2(states: &[(f64, PureState)], part: &Bipartition) -> Result<Mat<f64>> {
    let n = states.len();
    if let Some((_, s)) = states.iter().find(|(_, s)| s.n_qubits() != part.n_total()) {
        return Err(Error::DimensionMismatch {
            what: "state qubits",
            expected: part.n_total(),
            found: s.n_qubits(),
        });
    }
    let basis = SymBasis::new(part.d_a(), 2)?;
    let moments: Vec<Mat<C64>> = states
        .par_iter()
        .map(|(_, s)| symmetric::sym_moment(&projected_ensemble(s, part)?, &basis))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| symmetric::sym_distance(&moments[i], &moments[j]))
        .collect::<Result<_>>()?;
    let mut out = Mat::<f64>::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(vals) {
        out[(i, j)] = v;
        out[(j, i)] = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{haar_state, Provenance};
    use crate::hilbert::{bell, ghz};
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn ens(d: usize, entries: Vec<(f64, Vec<C64>)>) -> ProjectedEnsemble {
        ProjectedEnsemble::from_entries(d, entries, Provenance::Projected).unwrap()
    }

    fn random_state(n: usize, seed: u64) -> PureState {
        let mut s = Stream::new(seed, "designs-test", 0);
        PureState::new(n, haar_state(1 << n, &mut s).unwrap()).unwrap()
    }

    #[test]
    fn projector_traces() {
        assert_eq!(
            (0..4).map(|i| symmetric_projector(2, 2).unwrap()[(i, i)]).sum::<f64>(),
            3.0
        );
        let p = symmetric_projector(2, 3).unwrap();
        assert!(((0..8).map(|i| p[(i, i)]).sum::<f64>() - 4.0).abs() < 1e-12);
        let id = symmetric_projector(5, 1).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(id[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
        assert!(symmetric_projector(8, 5).is_err());
        assert!(symmetric_projector(64, 3).is_err());
    }

    #[test]
    fn projector_idempotent() {
        for d in [2, 3, 8] {
            for k in 1..=3 {
                let p = symmetric_projector(d, k).unwrap();
                let err = linalg::max_abs((&p * &p - &p).as_ref());
                assert!(err < 1e-10, "d={d} k={k} err={err}");
            }
        }
    }

    #[test]
    fn haar_moment_examples() {
        let h = haar_moment(2, 1).unwrap();
        assert!((h.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert_eq!(h.matrix()[(0, 1)], c(0.0));
        let h = haar_moment(2, 2).unwrap();
        let p = symmetric_projector(2, 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((h.matrix()[(i, j)].re - p[(i, j)] / 3.0).abs() < 1e-15);
            }
        }
        let h = haar_moment(8, 4).unwrap();
        let ev = linalg::eigvalsh(h.matrix().as_ref()).unwrap();
        assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert_eq!(ev.iter().filter(|&&e| e > 1e-8).count(), 330);
    }

    #[test]
    fn haar_moment_is_scaled_projector() {
        let h = haar_moment(3, 3).unwrap();
        let b = 10.0;
        let m = h.matrix() * faer::Scale(c(b));
        let err = linalg::max_abs((&m * &m - &m).as_ref());
        assert!(err < 1e-9);
        for perm in permutations(3) {
            let q = h.permute_factors(&perm).unwrap();
            assert_eq!(linalg::max_abs((q.matrix() - h.matrix()).as_ref()), 0.0);
        }
    }

    #[test]
    fn classical_mixture_moment_and_distance() {
        let e = ens(2, vec![(0.5, vec![c(1.0), c(0.0)]), (0.5, vec![c(0.0), c(1.0)])]);
        let m = ensemble_moment(&e, 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j && (i == 0 || i == 3) { 0.5 } else { 0.0 };
                assert!((m.matrix()[(i, j)] - c(want)).norm() < 1e-15);
            }
        }
        let d = trace_distance(&m, &haar_moment(2, 2).unwrap()).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-12);
        assert!((delta_ensemble(&e, 2).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_is_rank_one() {
        let mut s = Stream::new(3, "x", 0);
        let psi = haar_state(3, &mut s).unwrap();
        let m = ensemble_moment(&ens(3, vec![(1.0, psi)]), 3).unwrap();
        let ev = linalg::eigvalsh(m.matrix().as_ref()).unwrap();
        assert_eq!(ev.iter().filter(|&&e| e.abs() > 1e-10).count(), 1);
    }

    #[test]
    fn ghz_first_moment_is_maximally_mixed() {
        let part = Bipartition::first(3, 1).unwrap();
        let e = projected_ensemble(&ghz(3).unwrap(), &part).unwrap();
        let m = ensemble_moment(&e, 1).unwrap();
        assert!((m.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!(delta_ensemble(&e, 1).unwrap() < 1e-12);
    }

    #[test]
    fn trace_distance_extremes() {
        let a = ensemble_moment(&ens(2, vec![(1.0, vec![c(1.0), c(0.0)])]), 1).unwrap();
        let b = ensemble_moment(&ens(2, vec![(1.0, vec![c(0.0), c(1.0)])]), 1).unwrap();
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        assert!(trace_distance(&a, &haar_moment(2, 2).unwrap()).is_err());
    }

    #[test]
    fn delta_k_examples() {
        let zero = PureState::basis(6, 0).unwrap();
        let part = Bipartition::first(6, 3).unwrap();
        assert!((delta_k(&zero, &part, 1).unwrap() - 0.875).abs() < 1e-12);
        let d = delta_k(&bell(), &Bipartition::first(2, 1).unwrap(), 2).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn routes_agree() {
        for (n, na, seed) in [(6, 2, 1), (7, 3, 2), (5, 1, 3)] {
            let part = Bipartition::first(n, na).unwrap();
            let e = projected_ensemble(&random_state(n, seed), &part).unwrap();
            for k in 1..=3 {
                if part.d_a().pow(k as u32) > MOMENT_BUDGET {
                    continue;
                }
                let full = trace_distance(
                    &ensemble_moment(&e, k).unwrap(),
                    &haar_moment(part.d_a(), k).unwrap(),
                )
                .unwrap();
                let fast = delta_ensemble(&e, k).unwrap();
                assert!((full - fast).abs() < 1e-10, "n={n} k={k}: {full} vs {fast}");
            }
        }
    }

    #[test]
    fn delta_em_shrinks_with_count() {
        let rng = Stream::new(11, "delta-em", 0);
        let means: Vec<f64> = [32, 128, 512]
            .iter()
            .map(|&c| delta_em(8, c, 1, 8, &rng).unwrap().0)
            .collect();
        assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
        assert!(delta_em(8, 16, 1, 1, &rng).is_err());
        assert_eq!(delta_em(4, 16, 2, 3, &rng).unwrap(), delta_em(4, 16, 2, 3, &rng).unwrap());
    }

    #[test]
    fn pairwise_shape() {
        let part = Bipartition::first(6, 2).unwrap();
        let states: Vec<(f64, PureState)> =
            (0..5).map(|i| (i as f64, random_state(6, 40 + i))).collect();
        let m = pairwise_delta2(&states, &part).unwrap();
        for i in 0..5 {
            assert_eq!(m[(i, i)], 0.0);
            for j in 0..5 {
                assert_eq!(m[(i, j)], m[(j, i)]);
                assert!((0.0..=1.0).contains(&m[(i, j)]));
            }
        }
        let direct = trace_distance(
            &ensemble_moment(&projected_ensemble(&states[0].1, &part).unwrap(), 2).unwrap(),
            &ensemble_moment(&projected_ensemble(&states[3].1, &part).unwrap(), 2).unwrap(),
        )
        .unwrap();
        assert!((m[(0, 3)] - direct).abs() < 1e-10);
    }

    #[test]
    fn bad_permutation() {
        let h = haar_moment(2, 2).unwrap();
        assert!(h.permute_factors(&[0, 0]).is_err());
        assert!(h.partial_trace(2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn moment_invariants(seed in 0u64..1000, na in 1usize..=3, extra in 1usize..=4) {
            let n = na + extra;
            let part = Bipartition::first(n, na).unwrap();
            let e = projected_ensemble(&random_state(n, seed), &part).unwrap();
            let k = if na == 3 { 3 } else { 4 };
            let m = ensemble_moment(&e, k).unwrap();
            prop_assert!(m.min_eigenvalue().unwrap() > -1e-10);
            let mut s = Stream::new(seed, "perm", 0);
            let mut perm: Vec<usize> = (0..k).collect();
            for i in (1..k).rev() {
                perm.swap(i, (s.next_u64() % (i as u64 + 1)) as usize);
            }
            let q = m.permute_factors(&perm).unwrap();
            prop_assert!(linalg::max_abs((q.matrix() - m.matrix()).as_ref()) < 1e-10);
            let lower = ensemble_moment(&e, k - 1).unwrap();
            for f in 0..k {
                let pt = m.partial_trace(f).unwrap();
                prop_assert!(linalg::max_abs((pt.matrix() - lower.matrix()).as_ref()) < 1e-10);
            }
            let ds = delta_orders(&e, k).unwrap();
            for w in ds.windows(2) {
                prop_assert!(w[0] <= w[1] + 1e-10);
            }
        }

        #[test]
        fn triangle_inequality(seed in 0u64..1000) {
            let part = Bipartition::first(5, 2).unwrap();
            let ms: Vec<MomentMatrix> = (0..3)
                .map(|i| ensemble_moment(&projected_ensemble(&random_state(5, seed * 3 + i), &part).unwrap(), 2).unwrap())
                .collect();
            let d01 = trace_distance(&ms[0], &ms[1]).unwrap();
            let d10 = trace_distance(&ms[1], &ms[0]).unwrap();
            let d02 = trace_distance(&ms[0], &ms[2]).unwrap();
            let d12 = trace_distance(&ms[1], &ms[2]).unwrap();
            prop_assert!((d01 - d10).abs() < 1e-9);
            prop_assert!(d02 <= d01 + d12 + 1e-9);
        }
    }
}
