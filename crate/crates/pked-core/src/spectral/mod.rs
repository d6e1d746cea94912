//! Exact diagonalization, spectral time evolution and eigenstate selection.
//!
//! A [`Spectrum`] is stored block by block (see [`blocks`]); eigenvectors
//! are expanded to the full computational basis of the original frame only
//! when requested. Global eigenvalue order is ascending energy with ties
//! resolved by block label and then by position within the block.

pub mod blocks;
pub mod cache;

use crate::error::{check_dim, invalid};
use crate::hamiltonians::{HamiltonianOperator, ModelTag};
use crate::hilbert::PureState;
use crate::linalg::{self, Scalar};
use crate::{Error, Result, C64};
use blocks::{block_bases, block_matrix, detect_symmetries, BlockBasis, BlockLabel, Symmetries};
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use std::path::Path;

/// Tolerance on the Hermiticity defect accepted by [`diagonalize`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Blocks whose overlap with a requested support state is below this
/// squared norm are skipped by [`diagonalize_support`].
pub const SUPPORT_TOL: f64 = 1e-20;

/// Eigenvectors of one block.
#[derive(Clone, Debug)]
pub enum BlockVectors {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

impl BlockVectors {
    fn dim(&self) -> usize {
        match self {
            BlockVectors::Real(m) => m.nrows(),
            BlockVectors::Complex(m) => m.nrows(),
        }
    }

    /// `V w`.
    fn apply(&self, w: &[C64]) -> Vec<C64> {
        match self {
            BlockVectors::Real(v) => {
                let rhs = Mat::<f64>::from_fn(w.len(), 2, |i, j| if j == 0 { w[i].re } else { w[i].im });
                let mut out = Mat::<f64>::zeros(v.nrows(), 2);
                matmul(out.as_mut(), Accum::Replace, v.as_ref(), rhs.as_ref(), 1.0, Par::Seq);
                (0..v.nrows()).map(|i| C64::new(out[(i, 0)], out[(i, 1)])).collect()
            }
            BlockVectors::Complex(v) => {
                let rhs = Mat::<C64>::from_fn(w.len(), 1, |i, _| w[i]);
                let mut out = Mat::<C64>::zeros(v.nrows(), 1);
                matmul(out.as_mut(), Accum::Replace, v.as_ref(), rhs.as_ref(), C64::new(1.0, 0.0), Par::Seq);
                (0..v.nrows()).map(|i| out[(i, 0)]).collect()
            }
        }
    }

    /// `V^dagger y`.
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        match self {
            BlockVectors::Real(v) => {
                let rhs = Mat::<f64>::from_fn(y.len(), 2, |i, j| if j == 0 { y[i].re } else { y[i].im });
                let mut out = Mat::<f64>::zeros(v.ncols(), 2);
                matmul(out.as_mut(), Accum::Replace, v.transpose(), rhs.as_ref(), 1.0, Par::Seq);
                (0..v.ncols()).map(|i| C64::new(out[(i, 0)], out[(i, 1)])).collect()
            }
            BlockVectors::Complex(v) => {
                let rhs = Mat::<C64>::from_fn(y.len(), 1, |i, _| y[i]);
                let mut out = Mat::<C64>::zeros(v.ncols(), 1);
                matmul(out.as_mut(), Accum::Replace, v.adjoint(), rhs.as_ref(), C64::new(1.0, 0.0), Par::Seq);
                (0..v.ncols()).map(|i| out[(i, 0)]).collect()
            }
        }
    }

    fn column(&self, j: usize) -> Vec<C64> {
        match self {
            BlockVectors::Real(v) => (0..v.nrows()).map(|i| C64::new(v[(i, j)], 0.0)).collect(),
            BlockVectors::Complex(v) => (0..v.nrows()).map(|i| v[(i, j)]).collect(),
        }
    }
}

/// Eigenpairs of one symmetry block.
#[derive(Clone, Debug)]
pub struct Block {
    pub basis: BlockBasis,
    pub values: Vec<f64>,
    pub vectors: BlockVectors,
}

impl Block {
    pub fn label(&self) -> BlockLabel {
        self.basis.label
    }
}

/// Eigenvalues in ascending order with block-resolved eigenvectors.
#[derive(Clone, Debug)]
pub struct Spectrum {
    n_qubits: usize,
    model: ModelTag,
    seed: Option<u64>,
    fingerprint: u64,
    symmetries: Symmetries,
    blocks: Vec<Block>,
    /// `(block, local index)` for each global index.
    order: Vec<(u32, u32)>,
    energies: Vec<f64>,
    complete: bool,
}

impl Spectrum {
    fn assemble(
        h: &HamiltonianOperator,
        symmetries: Symmetries,
        blocks: Vec<Block>,
        complete: bool,
    ) -> Self {
        let mut order: Vec<(u32, u32)> = blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| (0..blk.values.len() as u32).map(move |i| (b as u32, i)))
            .collect();
        let e = |&(b, i): &(u32, u32)| blocks[b as usize].values[i as usize];
        order.sort_by(|x, y| e(x).total_cmp(&e(y)).then(x.cmp(y)));
        let energies = order.iter().map(e).collect();
        Self {
            n_qubits: h.n_qubits(),
            model: h.model(),
            seed: h.seed(),
            fingerprint: h.fingerprint(),
            symmetries,
            blocks,
            order,
            energies,
            complete,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn model(&self) -> ModelTag {
        self.model
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
    /// Fingerprint of the Hamiltonian this spectrum was computed from.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
    pub fn symmetries(&self) -> Symmetries {
        self.symmetries
    }
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }
    /// False when only the blocks overlapping a given state were solved.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Full-space eigenvector for global index `i`.
    pub fn eigenvector(&self, i: usize) -> Result<PureState> {
        let &(b, j) = self
            .order
            .get(i)
            .ok_or_else(|| invalid(format!("eigen index {i} >= {}", self.len())))?;
        let blk = &self.blocks[b as usize];
        let col = blk.vectors.column(j as usize);
        let mut full = vec![C64::new(0.0, 0.0); 1 << self.n_qubits];
        blk.basis.embed_into(&col, &mut full);
        self.symmetries.frame.from_frame(&mut full);
        PureState::normalized(self.n_qubits, full)
    }

    /// Global indices of the `count` eigenvalues closest to `e0`; ties go to
    /// the lower index. Returned in ascending order.
    pub fn indices_near(&self, e0: f64, count: usize) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(invalid("empty spectrum"));
        }
        if count > self.len() {
            return Err(invalid(format!(
                "requested {count} eigenstates from a spectrum of {}",
                self.len()
            )));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            (self.energies[a] - e0)
                .abs()
                .total_cmp(&(self.energies[b] - e0).abs())
                .then(a.cmp(&b))
        });
        idx.truncate(count);
        idx.sort_unstable();
        Ok(idx)
    }

    /// The `count` eigenpairs closest in energy to `e0`.
    pub fn eigenstates_near(&self, e0: f64, count: usize) -> Result<Vec<(f64, PureState)>> {
        self.indices_near(e0, count)?
            .into_iter()
            .map(|i| Ok((self.energies[i], self.eigenvector(i)?)))
            .collect()
    }

    /// Expands `psi0` in the eigenbasis for repeated evolution.
    pub fn decompose(&self, psi0: &PureState) -> Result<Decomposition<'_>> {
        check_dim("qubit count", self.n_qubits, psi0.n_qubits())?;
        let mut v = psi0.amplitudes().to_vec();
        self.symmetries.frame.to_frame(&mut v);
        let mut captured = 0.0;
        let coeffs: Vec<Vec<C64>> = self
            .blocks
            .iter()
            .map(|blk| {
                let c = blk.vectors.apply_adjoint(&blk.basis.restrict(&v));
                captured += c.iter().map(|z| z.norm_sqr()).sum::<f64>();
                c
            })
            .collect();
        if (captured - 1.0).abs() > 1e-10 {
            return Err(invalid(format!(
                "state has weight {:.3e} outside the diagonalized blocks",
                1.0 - captured
            )));
        }
        Ok(Decomposition { spec: self, coeffs })
    }

    /// `exp(-i H t) psi0`.
    pub fn evolve(&self, psi0: &PureState, t: f64) -> Result<PureState> {
        self.decompose(psi0)?.state_at(t)
    }

    /// Eigenvectors as dense columns in global order. Small systems only.
    pub fn dense_vectors(&self) -> Result<Mat<C64>> {
        let d = 1usize << self.n_qubits;
        if d > 4096 {
            return Err(Error::BudgetExceeded(format!("dense eigenvector matrix of dim {d}")));
        }
        let mut m = Mat::<C64>::zeros(d, self.len());
        for i in 0..self.len() {
            let v = self.eigenvector(i)?;
            for (r, a) in v.amplitudes().iter().enumerate() {
                m[(r, i)] = *a;
            }
        }
        Ok(m)
    }
}

/// Eigenbasis coefficients of one initial state.
#[derive(Clone, Debug)]
pub struct Decomposition<'a> {
    spec: &'a Spectrum,
    coeffs: Vec<Vec<C64>>,
}

impl Decomposition<'_> {
    /// `<H>` of the expanded state.
    pub fn energy(&self) -> f64 {
        self.spec
            .blocks
            .iter()
            .zip(&self.coeffs)
            .map(|(b, c)| b.values.iter().zip(c).map(|(e, z)| e * z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// State at time `t`.
    pub fn state_at(&self, t: f64) -> Result<PureState> {
        let n = self.spec.n_qubits;
        let mut full = vec![C64::new(0.0, 0.0); 1 << n];
        for (blk, c) in self.spec.blocks.iter().zip(&self.coeffs) {
            let w: Vec<C64> = blk
                .values
                .iter()
                .zip(c)
                .map(|(&e, &z)| z * C64::from_polar(1.0, -e * t))
                .collect();
            let y = blk.vectors.apply(&w);
            blk.basis.embed_into(&y, &mut full);
        }
        self.spec.symmetries.frame.from_frame(&mut full);
        PureState::new(n, full)
    }
}

fn solve_block<T: Scalar>(hf: &HamiltonianOperator, basis: BlockBasis) -> Result<(Vec<f64>, Mat<T>, BlockBasis)> {
    let m = block_matrix::<T>(hf, &basis);
    let e = linalg::eigh(m.as_ref(), true)?;
    drop(m);
    let v = e.vectors.ok_or_else(|| Error::Eigensolver("missing eigenvectors".into()))?;
    Ok((e.values, v, basis))
}

fn solve_blocks(
    h: &HamiltonianOperator,
    sym: Symmetries,
    keep: impl Fn(&BlockBasis) -> bool,
) -> Result<(Vec<Block>, bool)> {
    let hf = h.in_frame(sym.frame)?;
    let mut out = Vec::new();
    let mut complete = true;
    for basis in block_bases(h.n_qubits(), &sym) {
        if !keep(&basis) {
            complete = false;
            continue;
        }
        let block = if sym.real {
            let (values, v, basis) = solve_block::<f64>(&hf, basis)?;
            Block {
                basis,
                values,
                vectors: BlockVectors::Real(v),
            }
        } else {
            let (values, v, basis) = solve_block::<C64>(&hf, basis)?;
            Block {
                basis,
                values,
                vectors: BlockVectors::Complex(v),
            }
        };
        debug_assert_eq!(block.vectors.dim(), block.basis.dim());
        out.push(block);
    }
    Ok((out, complete))
}

/// Full spectrum of `h`.
pub fn diagonalize(h: &HamiltonianOperator) -> Result<Spectrum> {
    h.check_hermitian(HERMITIAN_TOL)?;
    let sym = detect_symmetries(h)?;
    let (blocks, complete) = solve_blocks(h, sym, |_| true)?;
    Ok(Spectrum::assemble(h, sym, blocks, complete))
}

/// Full spectrum in the plain computational basis, without symmetry
/// reduction.
pub fn diagonalize_plain(h: &HamiltonianOperator) -> Result<Spectrum> {
    h.check_hermitian(HERMITIAN_TOL)?;
    let sym = Symmetries::none(h);
    let (blocks, complete) = solve_blocks(h, sym, |_| true)?;
    Ok(Spectrum::assemble(h, sym, blocks, complete))
}

/// Spectrum restricted to the blocks in which `psi0` has weight. Sufficient
/// for evolving `psi0`.
pub fn diagonalize_support(h: &HamiltonianOperator, psi0: &PureState) -> Result<Spectrum> {
    h.check_hermitian(HERMITIAN_TOL)?;
    check_dim("qubit count", h.n_qubits(), psi0.n_qubits())?;
    let sym = detect_symmetries(h)?;
    let mut v = psi0.amplitudes().to_vec();
    sym.frame.to_frame(&mut v);
    let keep = |b: &BlockBasis| {
        b.restrict(&v).iter().map(|z| z.norm_sqr()).sum::<f64>() > SUPPORT_TOL
    };
    let (blocks, complete) = solve_blocks(h, sym, keep)?;
    Ok(Spectrum::assemble(h, sym, blocks, complete))
}

/// Like [`diagonalize`] or [`diagonalize_support`], reading and writing
/// `cache_dir` when given.
pub fn diagonalize_cached(
    h: &HamiltonianOperator,
    support: Option<&PureState>,
    cache_dir: Option<&Path>,
) -> Result<Spectrum> {
    let Some(dir) = cache_dir else {
        return match support {
            Some(psi) => diagonalize_support(h, psi),
            None => diagonalize(h),
        };
    };
    let path = cache::cache_path(dir, h, support);
    if path.exists() {
        if let Ok(spec) = cache::read(&path, h) {
            return Ok(spec);
        }
    }
    let spec = match support {
        Some(psi) => diagonalize_support(h, psi)?,
        None => diagonalize(h)?,
    };
    std::fs::create_dir_all(dir)?;
    cache::write(&path, &spec)?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{
        Frame, build_qimf, build_random_coupling, build_random_hopping, neel_index, Pauli, PauliString,
        PauliTerm,
    };

    fn sigma(n: usize, sites: &[(usize, Pauli)]) -> HamiltonianOperator {
        HamiltonianOperator::from_terms(
            n,
            vec![PauliTerm {
                coeff: C64::new(1.0, 0.0),
                string: PauliString::from_sites(n, sites).unwrap(),
            }],
        )
        .unwrap()
    }

    fn check_invariants(h: &HamiltonianOperator, spec: &Spectrum) {
        let d = h.dim();
        let hd = h.to_dense().unwrap();
        let v = spec.dense_vectors().unwrap();
        let e = Mat::<C64>::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(spec.eigenvalues()[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let rec = &v * &e * v.adjoint();
        let hmax = linalg::max_abs(hd.as_ref());
        assert!(linalg::max_abs((&rec - &hd).as_ref()) < 1e-8 * hmax);
        let id = v.adjoint() * &v;
        let err = linalg::max_abs((&id - Mat::<C64>::identity(d, d)).as_ref());
        assert!(err < 1e-10, "{err}");
        assert!(spec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sigma_x_spectrum() {
        let spec = diagonalize(&sigma(1, &[(0, Pauli::X)])).unwrap();
        assert!((spec.eigenvalues()[0] + 1.0).abs() < 1e-15);
        assert!((spec.eigenvalues()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invariants_on_models() {
        for h in [
            build_qimf(2, 0.8090, 0.9045, 1.0).unwrap(),
            build_qimf(7, 0.8090, 0.9045, 1.0).unwrap(),
            build_qimf(6, 0.0, 0.9045, 1.0).unwrap(),
            build_random_coupling(5, 2).unwrap(),
            build_random_hopping(6, 4).unwrap(),
        ] {
            let spec = diagonalize(&h).unwrap();
            check_invariants(&h, &spec);
            let plain = diagonalize_plain(&h).unwrap();
            for (a, b) in spec.eigenvalues().iter().zip(plain.eigenvalues()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        let q2 = diagonalize(&build_qimf(2, 0.8090, 0.9045, 1.0).unwrap()).unwrap();
        assert!(q2.eigenvalues().iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn sum_of_squares_matches_trace() {
        let h = build_random_coupling(6, 1).unwrap();
        let spec = diagonalize(&h).unwrap();
        let s: f64 = spec.eigenvalues().iter().map(|e| e * e).sum();
        let tr = h.trace_h2();
        assert!((s - tr).abs() < 1e-6 * tr);
        let hd = h.to_dense().unwrap();
        let direct: f64 = (hd.adjoint() * &hd).diagonal().column_vector().iter().map(|z| z.re).sum();
        assert!((direct - tr).abs() < 1e-9 * tr);
    }

    #[test]
    fn non_hermitian_rejected() {
        let h = HamiltonianOperator::from_terms(
            1,
            vec![PauliTerm {
                coeff: C64::new(0.0, 1.0),
                string: PauliString::from_sites(1, &[(0, Pauli::X)]).unwrap(),
            }],
        )
        .unwrap();
        assert!(matches!(diagonalize(&h), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn evolution_examples() {
        let h = sigma(1, &[(0, Pauli::X)]);
        let spec = diagonalize(&h).unwrap();
        let psi = PureState::basis(1, 0).unwrap();
        let out = spec.evolve(&psi, std::f64::consts::FRAC_PI_2).unwrap();
        // exp(-i X pi/2)|0> = -i|1>
        assert!((out.amplitudes()[1].norm_sqr() - 1.0).abs() < 1e-14);
        let t0 = spec.evolve(&psi, 0.0).unwrap();
        assert!((t0.amplitudes()[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        // closed form at generic time
        let t = 0.37;
        let out = spec.evolve(&psi, t).unwrap();
        assert!((out.amplitudes()[0] - C64::new(t.cos(), 0.0)).norm() < 1e-14);
        assert!((out.amplitudes()[1] - C64::new(0.0, -t.sin())).norm() < 1e-14);
    }

    #[test]
    fn qimf_energy_conservation_and_group_property() {
        let h = build_qimf(10, 0.8090, 0.9045, 1.0).unwrap();
        let psi = PureState::basis(10, 0).unwrap();
        let spec = diagonalize_support(&h, &psi).unwrap();
        assert!(!spec.is_complete());
        let dec = spec.decompose(&psi).unwrap();
        let e0 = h.expectation(&psi).unwrap();
        let psit = dec.state_at(37.3).unwrap();
        assert!((h.expectation(&psit).unwrap() - e0).abs() < 1e-8);
        assert!((linalg::norm(psit.amplitudes()) - 1.0).abs() < 1e-10);
        let a = spec.evolve(&spec.evolve(&psi, 1.3).unwrap(), 2.1).unwrap();
        let b = spec.evolve(&psi, 3.4).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-9);
        }
        let same = dec.state_at(0.0).unwrap();
        for (x, y) in same.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn support_mismatch_is_detected() {
        let h = build_random_hopping(6, 1).unwrap();
        let neel = PureState::basis(6, neel_index(6)).unwrap();
        let spec = diagonalize_support(&h, &neel).unwrap();
        assert_eq!(spec.len(), 20);
        assert!(spec.decompose(&PureState::basis(6, 0).unwrap()).is_err());
    }

    #[test]
    fn selection_near_energy() {
        let h = sigma(2, &[(0, Pauli::Z)]);
        let spec = diagonalize(&h).unwrap();
        let all = spec.eigenstates_near(0.0, 4).unwrap();
        assert_eq!(all.len(), 4);
        let top = spec.eigenstates_near(1.0, 2).unwrap();
        assert!(top.iter().all(|(e, _)| (*e - 1.0).abs() < 1e-15));
        assert!(spec.eigenstates_near(0.0, 5).is_err());

        let h = build_qimf(10, 0.8090, 0.9045, 1.0).unwrap();
        let spec = diagonalize(&h).unwrap();
        let idx = spec.indices_near(0.0, 100).unwrap();
        let inside = idx.iter().map(|&i| spec.eigenvalues()[i].abs()).fold(0.0, f64::max);
        let outside = (0..spec.len())
            .filter(|i| !idx.contains(i))
            .map(|i| spec.eigenvalues()[i].abs())
            .fold(f64::INFINITY, f64::min);
        assert!(inside <= outside);
        let hd = h.in_frame(Frame::Identity).unwrap();
        for &i in idx.iter().take(5) {
            let v = spec.eigenvector(i).unwrap();
            let hv = hd.apply(v.amplitudes()).unwrap();
            let e = spec.eigenvalues()[i];
            let r: f64 = hv
                .iter()
                .zip(v.amplitudes())
                .map(|(a, b)| (a - b * e).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-8, "{r}");
        }
    }
}
