//! Moments restricted to the symmetric subspace.
//!
//! Every `psi^{(x)k}` lies in `Sym^k(C^d)`, and so does the Haar moment
//! `Pi_k / D` with `D = C(d+k-1, k)`. Expanding in the orthonormal basis of
//! normalized symmetrized occupation states `|S_n>` gives
//!
//! ```text
//! <S_n | psi^{(x)k}> = sqrt(k! / prod_j n_j!) * prod_j psi_j^{n_j}
//! ```
//!
//! so a k-th moment becomes a `D x D` matrix, the Haar moment becomes
//! `I / D`, and trace distances are unchanged because the embedding is an
//! isometry. For `d = 8` this turns 4096-dimensional eigenproblems at
//! `k = 4` into 330-dimensional ones.

use crate::ensembles::ProjectedEnsemble;
use crate::error::{check_dim, invalid};
use crate::reduce::tree_map_reduce;
use crate::{binomial, linalg, Error, Result, C64};
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};

/// Largest symmetric-subspace dimension handled.
pub const SYM_BUDGET: usize = 4096;

/// Entries per chunk in moment accumulation.
pub const CHUNK: usize = 256;

/// Occupation basis of `Sym^k(C^d)` in lexicographic order of the sorted
/// index tuples.
#[derive(Clone, Debug)]
pub struct SymBasis {
    d: usize,
    k: usize,
    tuples: Vec<u16>,
    coef: Vec<f64>,
}

impl SymBasis {
    pub fn new(d: usize, k: usize) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(invalid("symmetric basis needs d >= 1 and k >= 1"));
        }
        let dim = binomial((d + k - 1) as u64, k as u64);
        if dim > SYM_BUDGET as u64 || d > u16::MAX as usize {
            return Err(Error::BudgetExceeded(format!(
                "symmetric subspace of dimension {dim} for d = {d}, k = {k}"
            )));
        }
        let mut tuples = Vec::with_capacity(dim as usize * k);
        let mut coef = Vec::with_capacity(dim as usize);
        let mut t = vec![0usize; k];
        let fact = |n: usize| (1..=n).map(|x| x as f64).product::<f64>();
        loop {
            tuples.extend(t.iter().map(|&i| i as u16));
            let mut denom = 1.0;
            let mut run = 1;
            for w in 1..=k {
                if w < k && t[w] == t[w - 1] {
                    run += 1;
                } else {
                    denom *= fact(run);
                    run = 1;
                }
            }
            coef.push((fact(k) / denom).sqrt());
            // next nondecreasing tuple
            let mut p = k;
            while p > 0 && t[p - 1] == d - 1 {
                p -= 1;
            }
            if p == 0 {
                break;
            }
            let v = t[p - 1] + 1;
            for x in &mut t[p - 1..] {
                *x = v;
            }
        }
        debug_assert_eq!(coef.len() as u64, dim);
        Ok(Self { d, k, tuples, coef })
    }

    pub fn base_dim(&self) -> usize {
        self.d
    }
    pub fn order(&self) -> usize {
        self.k
    }
    /// `C(d+k-1, k)`.
    pub fn dim(&self) -> usize {
        self.coef.len()
    }

    /// Sorted index tuple of basis element `i`.
    pub fn tuple(&self, i: usize) -> &[u16] {
        &self.tuples[i * self.k..(i + 1) * self.k]
    }

    /// Coordinates of `psi^{(x)k}`, scaled by `scale`.
    pub fn coords_scaled(&self, psi: &[C64], scale: f64, out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut p = C64::new(self.coef[i] * scale, 0.0);
            for &j in self.tuple(i) {
                p *= psi[j as usize];
            }
            *o = p;
        }
    }

    /// Coordinates of `psi^{(x)k}`.
    pub fn coords(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.coords_scaled(psi, 1.0, &mut out);
        out
    }
}

/// k-th moment of `ens` in symmetric coordinates.
pub fn sym_moment(ens: &ProjectedEnsemble, basis: &SymBasis) -> Result<Mat<C64>> {
    check_dim("ensemble dimension", basis.base_dim(), ens.subsystem_dim())?;
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble("moment of an empty ensemble".into()));
    }
    let dd = basis.dim();
    let weights = ens.weights();
    let states = ens.states();
    let m = tree_map_reduce(
        ens.len(),
        CHUNK,
        |r| {
            let mut a = Mat::<C64>::zeros(dd, r.len());
            let mut buf = vec![C64::new(0.0, 0.0); dd];
            for (c, i) in r.enumerate() {
                basis.coords_scaled(&states[i], weights[i].sqrt(), &mut buf);
                for (row, v) in buf.iter().enumerate() {
                    a[(row, c)] = *v;
                }
            }
            let mut out = Mat::<C64>::zeros(dd, dd);
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
    );
    Ok(m.expect("nonempty ensemble"))
}

/// `1/2 ||m - I/D||_1`.
pub fn distance_to_haar(m: &Mat<C64>) -> Result<f64> {
    let dd = m.nrows();
    let mut diff = m.clone();
    let h = 1.0 / dd as f64;
    for i in 0..dd {
        diff[(i, i)] -= C64::new(h, 0.0);
    }
    Ok(0.5 * linalg::trace_norm(diff.as_ref())?)
}

/// `1/2 ||a - b||_1` of two symmetric-coordinate moments.
pub fn sym_distance(a: &Mat<C64>, b: &Mat<C64>) -> Result<f64> {
    check_dim("moment dimension", a.nrows(), b.nrows())?;
    Ok(0.5 * linalg::trace_norm((a - b).as_ref())?)
}

/// Trace distance of the k-th moment of `ens` from the Haar moment.
pub fn ensemble_delta(ens: &ProjectedEnsemble, k: usize) -> Result<f64> {
    let basis = SymBasis::new(ens.subsystem_dim(), k)?;
    distance_to_haar(&sym_moment(ens, &basis)?)
}
