//! Qubit state vectors, bipartitions and computational-basis measurement.
//!
//! Basis index `g` of an `N`-qubit register stores qubit `q` in bit
//! `N - 1 - q`, so qubit 0 is the most significant bit. Within a
//! [`Bipartition`] the A-index lists the A qubits in the given order (first
//! one most significant) and the outcome index does the same for the B
//! qubits in ascending order.

use crate::error::{check_dim, invalid};
use crate::{linalg, Error, Result, C64, P_MIN};
use faer::Mat;

/// Tolerance on the squared norm of a [`PureState`].
pub const NORM_TOL: f64 = 1e-10;

/// Normalized amplitude vector over `2^n_qubits` basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl PureState {
    /// Wraps `amps` after checking its length and norm.
    pub fn new(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        check_dim("state length", 1usize << n_qubits, amps.len())?;
        let n2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("state norm^2 = {n2}, expected 1")));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes `amps` and wraps it.
    pub fn normalized(n_qubits: usize, mut amps: Vec<C64>) -> Result<Self> {
        check_dim("state length", 1usize << n_qubits, amps.len())?;
        let n = linalg::norm(&amps);
        if n == 0.0 || !n.is_finite() {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        amps.iter_mut().for_each(|z| *z /= n);
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let d = 1usize << n_qubits;
        if index >= d {
            return Err(invalid(format!("basis index {index} >= {d}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); d];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Product of the same single-qubit state on every qubit.
    pub fn product(n_qubits: usize, site: [C64; 2]) -> Result<Self> {
        let mut amps = vec![C64::new(1.0, 0.0)];
        for _ in 0..n_qubits {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * site[0]);
                next.push(a * site[1]);
            }
            amps = next;
        }
        Self::normalized(n_qubits, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// Multiplies every amplitude by `e^{i phi}`.
    pub fn with_phase(&self, phi: f64) -> Self {
        let p = C64::from_polar(1.0, phi);
        Self {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|z| z * p).collect(),
        }
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        check_dim("state length", self.dim(), other.dim())?;
        Ok(linalg::inner(&self.amps, &other.amps))
    }
}

/// Split of `n_total` qubits into a measured-out part B and a kept part A.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    n_total: usize,
    a_qubits: Vec<usize>,
    b_qubits: Vec<usize>,
    a_offsets: Vec<usize>,
    b_offsets: Vec<usize>,
}

impl Bipartition {
    /// A = the first `n_a` qubits.
    pub fn first(n_total: usize, n_a: usize) -> Result<Self> {
        if n_a > n_total {
            return Err(invalid(format!("N_A = {n_a} exceeds N = {n_total}")));
        }
        Self::new(n_total, (0..n_a).collect())
    }

    /// A = `a_qubits` in the given order.
    pub fn new(n_total: usize, a_qubits: Vec<usize>) -> Result<Self> {
        if n_total > 30 {
            return Err(invalid(format!("N = {n_total} is too large")));
        }
        let mut seen = vec![false; n_total];
        for &q in &a_qubits {
            if q >= n_total {
                return Err(invalid(format!("qubit {q} outside [0, {n_total})")));
            }
            if seen[q] {
                return Err(invalid(format!("qubit {q} listed twice")));
            }
            seen[q] = true;
        }
        let b_qubits: Vec<usize> = (0..n_total).filter(|&q| !seen[q]).collect();
        let offsets = |qs: &[usize]| -> Vec<usize> {
            let k = qs.len();
            (0..1usize << k)
                .map(|local| {
                    qs.iter().enumerate().fold(0usize, |g, (pos, &q)| {
                        let bit = (local >> (k - 1 - pos)) & 1;
                        g | (bit << (n_total - 1 - q))
                    })
                })
                .collect()
        };
        let a_offsets = offsets(&a_qubits);
        let b_offsets = offsets(&b_qubits);
        Ok(Self {
            n_total,
            a_qubits,
            b_qubits,
            a_offsets,
            b_offsets,
        })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }
    pub fn n_a(&self) -> usize {
        self.a_qubits.len()
    }
    pub fn n_b(&self) -> usize {
        self.b_qubits.len()
    }
    pub fn d_a(&self) -> usize {
        1 << self.n_a()
    }
    pub fn d_b(&self) -> usize {
        1 << self.n_b()
    }
    pub fn a_qubits(&self) -> &[usize] {
        &self.a_qubits
    }
    pub fn b_qubits(&self) -> &[usize] {
        &self.b_qubits
    }

    /// Global basis index of A-index `a` combined with outcome index `z`.
    pub fn global_index(&self, a: usize, z: usize) -> usize {
        self.a_offsets[a] | self.b_offsets[z]
    }

    fn check_state(&self, state: &PureState) -> Result<()> {
        check_dim("qubit count", self.n_total, state.n_qubits())
    }

    /// Unnormalized conditional vector `(<z|_B) |psi>` on A.
    pub fn conditional(&self, state: &PureState, z: usize) -> Result<Vec<C64>> {
        self.check_state(state)?;
        if z >= self.d_b() {
            return Err(invalid(format!("outcome {z} >= d_B = {}", self.d_b())));
        }
        let amps = state.amplitudes();
        Ok((0..self.d_a())
            .map(|a| amps[self.global_index(a, z)])
            .collect())
    }
}

/// A computational-basis outcome on the B qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Outcome {
    n_b: usize,
    index: usize,
}

impl Outcome {
    pub fn new(n_b: usize, index: usize) -> Result<Self> {
        if index >> n_b != 0 {
            return Err(invalid(format!("outcome {index} needs more than {n_b} bits")));
        }
        Ok(Self { n_b, index })
    }

    /// Outcome from bits listed in B-qubit order.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut index = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(invalid(format!("bit value {b}")));
            }
            index = (index << 1) | usize::from(b);
        }
        Ok(Self {
            n_b: bits.len(),
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.n_b
    }
    pub fn is_empty(&self) -> bool {
        self.n_b == 0
    }
    pub fn index(&self) -> usize {
        self.index
    }
}

/// Probability of outcome `z` and the normalized post-measurement state of
/// A, which is `None` when the probability does not exceed [`P_MIN`].
pub fn project_outcome(
    state: &PureState,
    part: &Bipartition,
    z: Outcome,
) -> Result<(f64, Option<PureState>)> {
    check_dim("qubit count", part.n_total(), state.n_qubits())?;
    check_dim("outcome length", part.n_b(), z.len())?;
    let v = part.conditional(state, z.index())?;
    let w: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    if w <= P_MIN {
        return Ok((w, None));
    }
    let s = w.sqrt();
    let amps = v.into_iter().map(|c| c / s).collect();
    Ok((
        w,
        Some(PureState {
            n_qubits: part.n_a(),
            amps,
        }),
    ))
}

/// `Tr_B |psi><psi|` as a `d_A x d_A` matrix.
pub fn reduced_density_matrix(state: &PureState, part: &Bipartition) -> Result<Mat<C64>> {
    check_dim("qubit count", part.n_total(), state.n_qubits())?;
    let (da, db) = (part.d_a(), part.d_b());
    let amps = state.amplitudes();
    let mut rho = Mat::<C64>::zeros(da, da);
    for z in 0..db {
        let col: Vec<C64> = (0..da).map(|a| amps[part.global_index(a, z)]).collect();
        for j in 0..da {
            let cj = col[j].conj();
            if cj == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..da {
                rho[(i, j)] += col[i] * cj;
            }
        }
    }
    Ok(rho)
}

/// Bell state `(|00> + |11>)/sqrt 2`.
pub fn bell() -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    PureState {
        n_qubits: 2,
        amps: vec![C64::new(h, 0.0), z, z, C64::new(h, 0.0)],
    }
}

/// GHZ state on `n` qubits.
pub fn ghz(n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::InvalidArgument("GHZ needs at least one qubit".into()));
    }
    let d = 1usize << n;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(0.0, 0.0); d];
    amps[0] = C64::new(h, 0.0);
    amps[d - 1] = C64::new(h, 0.0);
    PureState::new(n, amps)
}
