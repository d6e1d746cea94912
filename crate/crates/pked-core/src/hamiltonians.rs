//! Spin-chain Hamiltonians stored as sums of Pauli strings.
//!
//! A Pauli string is kept in symplectic form `(x, z)` over basis-index bits,
//! with `P = i^{|x & z|} X^x Z^z`, so that
//! `P|c> = i^{|x & z|} (-1)^{|c & z|} |c ^ x>`. Matrix elements are produced
//! on the fly; a dense matrix is only formed on request and within
//! [`DENSE_BUDGET_BYTES`].

use crate::error::{check_dim, invalid};
use crate::hilbert::PureState;
use crate::rng::{fnv1a64, Stream};
use crate::{linalg, Error, Result, C64, MAX_QUBITS};
use faer::Mat;
use std::collections::BTreeMap;

/// Upper limit for [`HamiltonianOperator::to_dense`].
pub const DENSE_BUDGET_BYTES: usize = 1 << 30;

/// Single-site Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// Tensor product of single-site Paulis in symplectic bit form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    pub x: u32,
    pub z: u32,
}

impl PauliString {
    /// Builds a string from `(qubit, pauli)` factors on `n` qubits.
    pub fn from_sites(n: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = PauliString { x: 0, z: 0 };
        for &(q, p) in sites {
            if q >= n {
                return Err(invalid(format!("qubit {q} outside [0, {n})")));
            }
            let bit = 1u32 << (n - 1 - q);
            if (s.x | s.z) & bit != 0 {
                return Err(invalid(format!("qubit {q} appears twice in a Pauli string")));
            }
            match p {
                Pauli::I => {}
                Pauli::X => s.x |= bit,
                Pauli::Z => s.z |= bit,
                Pauli::Y => {
                    s.x |= bit;
                    s.z |= bit;
                }
            }
        }
        Ok(s)
    }

    /// Number of `Y` factors.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// `i^{y_count}` as a complex number.
    pub fn phase(&self) -> C64 {
        match self.y_count() % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    /// Site-reversed string on `n` qubits.
    pub fn reversed(&self, n: usize) -> Self {
        let rev = |m: u32| m.reverse_bits() >> (32 - n);
        Self {
            x: rev(self.x),
            z: rev(self.z),
        }
    }
}

/// Real- or complex-weighted Pauli string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: C64,
    pub string: PauliString,
}

/// Which model family an operator instantiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelTag {
    Qimf,
    RandomCoupling,
    RandomHopping,
    Custom,
}

impl ModelTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::Qimf => "qimf",
            ModelTag::RandomCoupling => "random_coupling",
            ModelTag::RandomHopping => "random_hopping",
            ModelTag::Custom => "custom",
        }
    }
}

/// Nonzero entries of one column, keyed by the flip mask `x`.
#[derive(Clone, Debug)]
struct FlipGroup {
    x: u32,
    /// `(z, coeff * i^{|x & z|})` pairs.
    zs: Vec<(u32, C64)>,
}

/// Hermitian operator `sum_k c_k P_k` with model metadata.
#[derive(Clone, Debug)]
pub struct HamiltonianOperator {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
    groups: Vec<FlipGroup>,
    model: ModelTag,
    seed: Option<u64>,
    couplings: Vec<f64>,
}

impl HamiltonianOperator {
    /// Operator from explicit terms. Identical strings are merged.
    pub fn from_terms(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        Self::build(n_qubits, terms, ModelTag::Custom, None, Vec::new())
    }

    fn build(
        n_qubits: usize,
        terms: Vec<PauliTerm>,
        model: ModelTag,
        seed: Option<u64>,
        couplings: Vec<f64>,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(invalid("need at least one qubit"));
        }
        if n_qubits > MAX_QUBITS {
            return Err(Error::BudgetExceeded(format!(
                "N = {n_qubits} exceeds the supported maximum of {MAX_QUBITS} qubits"
            )));
        }
        let limit = 1u32 << n_qubits;
        let mut merged: BTreeMap<PauliString, C64> = BTreeMap::new();
        for t in terms {
            if t.string.x >= limit || t.string.z >= limit {
                return Err(invalid("Pauli string acts outside the register"));
            }
            *merged.entry(t.string).or_insert(C64::new(0.0, 0.0)) += t.coeff;
        }
        let terms: Vec<PauliTerm> = merged
            .into_iter()
            .filter(|(_, c)| *c != C64::new(0.0, 0.0))
            .map(|(string, coeff)| PauliTerm { coeff, string })
            .collect();
        let mut by_x: BTreeMap<u32, Vec<(u32, C64)>> = BTreeMap::new();
        for t in &terms {
            by_x.entry(t.string.x)
                .or_default()
                .push((t.string.z, t.coeff * t.string.phase()));
        }
        let groups = by_x
            .into_iter()
            .map(|(x, zs)| FlipGroup { x, zs })
            .collect();
        Ok(Self {
            n_qubits,
            terms,
            groups,
            model,
            seed,
            couplings,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }
    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }
    pub fn model(&self) -> ModelTag {
        self.model
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
    /// Disorder couplings in draw order (empty for clean models).
    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Distinct flip masks with a nonzero term.
    pub fn flip_masks(&self) -> impl Iterator<Item = u32> + '_ {
        self.groups.iter().map(|g| g.x)
    }

    /// Calls `f(row, value)` for every nonzero entry of column `c`.
    pub fn for_each_in_column(&self, c: usize, mut f: impl FnMut(usize, C64)) {
        let c32 = c as u32;
        for g in &self.groups {
            let mut v = C64::new(0.0, 0.0);
            for &(z, w) in &g.zs {
                if (c32 & z).count_ones() % 2 == 0 {
                    v += w;
                } else {
                    v -= w;
                }
            }
            if v != C64::new(0.0, 0.0) {
                f((c32 ^ g.x) as usize, v);
            }
        }
    }

    /// `<r|H|c>`.
    pub fn element(&self, r: usize, c: usize) -> C64 {
        let mut out = C64::new(0.0, 0.0);
        self.for_each_in_column(c, |row, v| {
            if row == r {
                out += v;
            }
        });
        out
    }

    /// `H v` for a full-space vector.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_dim("vector length", self.dim(), v.len())?;
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for (c, &a) in v.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            self.for_each_in_column(c, |r, h| out[r] += h * a);
        }
        Ok(out)
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        let hv = self.apply(psi.amplitudes())?;
        Ok(linalg::inner(psi.amplitudes(), &hv).re)
    }

    /// Largest `|H_rc - conj(H_cr)|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.dim() {
            self.for_each_in_column(c, |r, v| {
                worst = worst.max((v - self.element(c, r).conj()).norm());
            });
        }
        worst
    }

    /// Fails with [`Error::NotHermitian`] when the defect exceeds `tol`.
    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let d = self.hermiticity_defect();
        if d > tol {
            Err(Error::NotHermitian(d))
        } else {
            Ok(())
        }
    }

    /// Largest entry of `[H, sum_j sigma^z_j]`.
    pub fn total_z_commutator_max(&self) -> f64 {
        let n = self.n_qubits as i64;
        let m = |s: usize| n - 2 * i64::from((s as u32).count_ones());
        let mut worst: f64 = 0.0;
        for c in 0..self.dim() {
            self.for_each_in_column(c, |r, v| {
                worst = worst.max(v.norm() * (m(c) - m(r)).abs() as f64);
            });
        }
        worst
    }

    /// `Tr(H^2)` from the Pauli coefficients.
    pub fn trace_h2(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm_sqr()).sum::<f64>() * self.dim() as f64
    }

    /// `Tr(H)`.
    pub fn trace(&self) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.string.x == 0 && t.string.z == 0)
            .map(|t| t.coeff)
            .sum::<C64>()
            * self.dim() as f64
    }

    /// Dense matrix, refused above [`DENSE_BUDGET_BYTES`].
    pub fn to_dense(&self) -> Result<Mat<C64>> {
        let d = self.dim();
        let bytes = d * d * std::mem::size_of::<C64>();
        if bytes > DENSE_BUDGET_BYTES {
            return Err(Error::BudgetExceeded(format!(
                "dense {d}x{d} complex matrix needs {bytes} bytes"
            )));
        }
        let mut m = Mat::<C64>::zeros(d, d);
        for c in 0..d {
            self.for_each_in_column(c, |r, v| m[(r, c)] += v);
        }
        Ok(m)
    }

    /// Stable 64-bit hash of the term list.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::with_capacity(self.terms.len() * 24 + 8);
        bytes.extend_from_slice(&(self.n_qubits as u64).to_le_bytes());
        for t in &self.terms {
            bytes.extend_from_slice(&t.string.x.to_le_bytes());
            bytes.extend_from_slice(&t.string.z.to_le_bytes());
            bytes.extend_from_slice(&t.coeff.re.to_le_bytes());
            bytes.extend_from_slice(&t.coeff.im.to_le_bytes());
        }
        fnv1a64(&bytes)
    }

    /// Same operator with every term conjugated by the site-uniform
    /// `frame` rotation.
    pub fn in_frame(&self, frame: Frame) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| frame.map_term(*t))
            .collect();
        Self::build(
            self.n_qubits,
            terms,
            self.model,
            self.seed,
            self.couplings.clone(),
        )
    }

    /// True when every entry is real in the computational basis.
    pub fn is_real(&self) -> bool {
        self.groups
            .iter()
            .all(|g| g.zs.iter().all(|(_, w)| w.im == 0.0))
    }
}

/// Site-uniform single-qubit basis rotation used to make a Hamiltonian real.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Frame {
    Identity,
    /// `u = exp(-i pi/4 sigma^x)` on every site: `X -> X`, `Y -> Z`,
    /// `Z -> -Y`.
    YToZ,
}

impl Frame {
    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::Identity => "identity",
            Frame::YToZ => "y_to_z",
        }
    }

    fn map_term(&self, t: PauliTerm) -> PauliTerm {
        match self {
            Frame::Identity => t,
            Frame::YToZ => {
                let s = t.string;
                let y = s.x & s.z;
                let xo = s.x & !s.z;
                let zo = s.z & !s.x;
                let mut coeff = t.coeff;
                if zo.count_ones() % 2 == 1 {
                    coeff = -coeff;
                }
                PauliTerm {
                    coeff,
                    string: PauliString {
                        // X stays X, Y becomes Z, Z becomes Y.
                        x: xo | zo,
                        z: y | zo,
                    },
                }
            }
        }
    }

    /// Single-site matrix `u` (row-major) of the rotation.
    fn site_matrix(&self, inverse: bool) -> [[C64; 2]; 2] {
        match self {
            Frame::Identity => {
                let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
                [[l, o], [o, l]]
            }
            Frame::YToZ => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let off = if inverse { h } else { -h };
                let (d, o) = (C64::new(h, 0.0), C64::new(0.0, off));
                [[d, o], [o, d]]
            }
        }
    }

    fn apply_sites(&self, v: &mut [C64], inverse: bool) {
        if *self == Frame::Identity {
            return;
        }
        let u = self.site_matrix(inverse);
        let d = v.len();
        let mut bit = 1;
        while bit < d {
            for i in 0..d {
                if i & bit == 0 {
                    let (a, b) = (v[i], v[i | bit]);
                    v[i] = u[0][0] * a + u[0][1] * b;
                    v[i | bit] = u[1][0] * a + u[1][1] * b;
                }
            }
            bit <<= 1;
        }
    }

    /// `U v` with `U` the rotation on every site.
    pub fn to_frame(&self, v: &mut [C64]) {
        self.apply_sites(v, false)
    }

    /// `U^dagger v`.
    pub fn from_frame(&self, v: &mut [C64]) {
        self.apply_sites(v, true)
    }
}

/// Mixed-field Ising chain with open boundaries:
/// `hx sum X_j + hy sum Y_j + J sum_{j<N-1} X_j X_{j+1}`.
pub fn build_qimf(n: usize, hx: f64, hy: f64, j: f64) -> Result<HamiltonianOperator> {
    let mut terms = Vec::new();
    for q in 0..n {
        terms.push(PauliTerm {
            coeff: C64::new(hx, 0.0),
            string: PauliString::from_sites(n, &[(q, Pauli::X)])?,
        });
        terms.push(PauliTerm {
            coeff: C64::new(hy, 0.0),
            string: PauliString::from_sites(n, &[(q, Pauli::Y)])?,
        });
    }
    for q in 0..n.saturating_sub(1) {
        terms.push(PauliTerm {
            coeff: C64::new(j, 0.0),
            string: PauliString::from_sites(n, &[(q, Pauli::X), (q + 1, Pauli::X)])?,
        });
    }
    HamiltonianOperator::build(n, terms, ModelTag::Qimf, None, Vec::new())
}

/// Ordered `(mu, nu)` pairs of the random coupling model.
pub const COUPLING_PAIRS: [(Pauli, Pauli); 8] = [
    (Pauli::X, Pauli::X),
    (Pauli::X, Pauli::Y),
    (Pauli::X, Pauli::Z),
    (Pauli::Y, Pauli::X),
    (Pauli::Y, Pauli::Y),
    (Pauli::Y, Pauli::Z),
    (Pauli::Z, Pauli::X),
    (Pauli::Z, Pauli::Y),
];

/// All-to-all couplings `J_ij^{mu nu} sigma^mu_i sigma^nu_j` for `i < j` and
/// `(mu, nu) != (z, z)`, each drawn from a normal with variance `1/N`.
///
/// Draw order: pairs `(i, j)` lexicographically, then [`COUPLING_PAIRS`],
/// from `Stream::new(seed, "random-coupling", 0)`.
pub fn build_random_coupling(n: usize, seed: u64) -> Result<HamiltonianOperator> {
    if n < 2 {
        return Err(invalid("random coupling model needs N >= 2"));
    }
    check_size(n)?;
    let mut rng = Stream::new(seed, "random-coupling", 0);
    let sd = 1.0 / (n as f64).sqrt();
    let mut terms = Vec::new();
    let mut couplings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for &(mu, nu) in &COUPLING_PAIRS {
                let c = rng.normal() * sd;
                couplings.push(c);
                terms.push(PauliTerm {
                    coeff: C64::new(c, 0.0),
                    string: PauliString::from_sites(n, &[(i, mu), (j, nu)])?,
                });
            }
        }
    }
    HamiltonianOperator::build(n, terms, ModelTag::RandomCoupling, Some(seed), couplings)
}

/// U(1)-symmetric hopping
/// `J+_ij (X_i X_j + Y_i Y_j) + J-_ij (X_i Y_j - Y_i X_j)` over `i < j`,
/// couplings of variance `1/N` drawn as `J+` then `J-` per pair from
/// `Stream::new(seed, "random-hopping", 0)`.
pub fn build_random_hopping(n: usize, seed: u64) -> Result<HamiltonianOperator> {
    if n < 2 {
        return Err(invalid("random hopping model needs N >= 2"));
    }
    check_size(n)?;
    let mut rng = Stream::new(seed, "random-hopping", 0);
    let sd = 1.0 / (n as f64).sqrt();
    let mut terms = Vec::new();
    let mut couplings = Vec::new();
    let term = |c: f64, i, a, j, b| -> Result<PauliTerm> {
        Ok(PauliTerm {
            coeff: C64::new(c, 0.0),
            string: PauliString::from_sites(n, &[(i, a), (j, b)])?,
        })
    };
    for i in 0..n {
        for j in i + 1..n {
            let jp = rng.normal() * sd;
            let jm = rng.normal() * sd;
            couplings.push(jp);
            couplings.push(jm);
            terms.push(term(jp, i, Pauli::X, j, Pauli::X)?);
            terms.push(term(jp, i, Pauli::Y, j, Pauli::Y)?);
            terms.push(term(jm, i, Pauli::X, j, Pauli::Y)?);
            terms.push(term(-jm, i, Pauli::Y, j, Pauli::X)?);
        }
    }
    HamiltonianOperator::build(n, terms, ModelTag::RandomHopping, Some(seed), couplings)
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        Err(Error::BudgetExceeded(format!(
            "N = {n} exceeds the supported maximum of {MAX_QUBITS} qubits"
        )))
    } else {
        Ok(())
    }
}

/// Number of up spins (`0` bits) in basis index `s` of an `n`-qubit register.
pub fn n_up(s: usize, n: usize) -> usize {
    n - (s as u32).count_ones() as usize
}

/// Total `S^z` of basis state `s`, each qubit contributing `+-1/2`.
pub fn magnetization(s: usize, n: usize) -> f64 {
    n_up(s, n) as f64 - n as f64 / 2.0
}

/// Basis states of fixed total magnetization.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnetizationSector {
    pub n_qubits: usize,
    pub s_total: f64,
    pub n_up: usize,
    pub basis_indices: Vec<usize>,
}

impl MagnetizationSector {
    pub fn dim(&self) -> usize {
        self.basis_indices.len()
    }

    /// Position of basis index `s` within the sector.
    pub fn position(&self, s: usize) -> Option<usize> {
        self.basis_indices.binary_search(&s).ok()
    }
}

/// Converts a half-integer magnetization into an up-spin count.
pub fn sector_n_up(n: usize, s_total: f64) -> Result<usize> {
    let two = 2.0 * s_total;
    if !two.is_finite() || two.round() != two {
        return Err(invalid(format!("magnetization {s_total} is not a half-integer")));
    }
    let twice_up = n as i64 + two as i64;
    if twice_up % 2 != 0 || twice_up < 0 || twice_up > 2 * n as i64 {
        return Err(invalid(format!(
            "magnetization {s_total} is not reachable with {n} qubits"
        )));
    }
    Ok((twice_up / 2) as usize)
}

/// All basis indices of `n` qubits with total magnetization `s_total`.
pub fn magnetization_sector(n: usize, s_total: f64) -> Result<MagnetizationSector> {
    if n > 30 {
        return Err(invalid(format!("N = {n} is too large")));
    }
    let up = sector_n_up(n, s_total)?;
    let basis_indices = (0..1usize << n).filter(|&s| n_up(s, n) == up).collect();
    Ok(MagnetizationSector {
        n_qubits: n,
        s_total,
        n_up: up,
        basis_indices,
    })
}

/// Basis index of `|0101...>` (qubit 0 up, qubit 1 down, ...).
pub fn neel_index(n: usize) -> usize {
    (0..n).filter(|q| q % 2 == 1).fold(0, |s, q| s | 1 << (n - 1 - q))
}
