//! Symmetry detection and block bases.
//!
//! Three exact symmetries are used when present:
//!
//! * a site-uniform basis rotation ([`Frame`]) that makes all matrix
//!   elements real,
//! * a charge: the number of `1` bits (U(1)) or its parity (Z2) in that
//!   frame,
//! * site reflection `q -> N - 1 - q`, with even and odd combinations
//!   `(|s> +- |Ps>)/sqrt 2` of mirror pairs.
//!
//! Among the frames the one with the smallest estimated solver cost wins.

use crate::hamiltonians::{Frame, HamiltonianOperator};
use crate::linalg::Scalar;
use crate::{Result, C64};
use std::collections::HashMap;

/// Conserved charge in the computational basis of the chosen frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Charge {
    /// Number of `1` bits.
    U1,
    /// Parity of the number of `1` bits.
    Parity,
}

/// Symmetries exploited for one Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Symmetries {
    pub frame: Frame,
    pub charge: Option<Charge>,
    pub reflection: bool,
    /// All matrix elements are real in `frame`.
    pub real: bool,
}

impl Symmetries {
    /// Plain computational basis, single block.
    pub fn none(h: &HamiltonianOperator) -> Self {
        Self {
            frame: Frame::Identity,
            charge: None,
            reflection: false,
            real: h.is_real(),
        }
    }
}

/// Quantum numbers of a block. `charge` is the bit count (U1) or its parity;
/// `parity` is the reflection eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockLabel {
    pub charge: Option<u32>,
    pub parity: Option<i8>,
}

impl std::fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.charge {
            Some(q) => write!(f, "q{q}")?,
            None => write!(f, "q*")?,
        }
        match self.parity {
            Some(p) if p > 0 => write!(f, "+"),
            Some(_) => write!(f, "-"),
            None => write!(f, "*"),
        }
    }
}

pub(crate) fn reverse_bits(s: u32, n: usize) -> u32 {
    s.reverse_bits() >> (32 - n)
}

pub(crate) fn charge_of(charge: Option<Charge>, s: u32) -> Option<u32> {
    match charge {
        None => None,
        Some(Charge::U1) => Some(s.count_ones()),
        Some(Charge::Parity) => Some(s.count_ones() & 1),
    }
}

fn conserves_u1(h: &HamiltonianOperator) -> bool {
    let mut ok = true;
    for c in 0..h.dim() {
        h.for_each_in_column(c, |r, _| {
            ok &= (r as u32).count_ones() == (c as u32).count_ones();
        });
        if !ok {
            break;
        }
    }
    ok
}

fn conserves_parity(h: &HamiltonianOperator) -> bool {
    h.flip_masks().all(|x| x.count_ones() % 2 == 0)
}

fn reflection_invariant(h: &HamiltonianOperator) -> bool {
    let n = h.n_qubits();
    let map: HashMap<_, C64> = h.terms().iter().map(|t| (t.string, t.coeff)).collect();
    h.terms().iter().all(|t| {
        map.get(&t.string.reversed(n))
            .is_some_and(|c| (c - t.coeff).norm() <= 1e-14 * (1.0 + t.coeff.norm()))
    })
}

/// Symmetries of `h` in frame `frame`.
pub fn symmetries_in(h: &HamiltonianOperator, frame: Frame) -> Result<Symmetries> {
    let hf = h.in_frame(frame)?;
    let charge = if conserves_u1(&hf) {
        Some(Charge::U1)
    } else if conserves_parity(&hf) {
        Some(Charge::Parity)
    } else {
        None
    };
    Ok(Symmetries {
        frame,
        charge,
        reflection: reflection_invariant(&hf),
        real: hf.is_real(),
    })
}

/// Relative cost of diagonalizing every block under `sym`.
pub fn estimated_cost(n: usize, sym: &Symmetries) -> f64 {
    let dims = block_dims(n, sym);
    let w = if sym.real { 1.0 } else { 4.0 };
    dims.iter().map(|&d| w * (d as f64).powi(3)).sum()
}

fn block_dims(n: usize, sym: &Symmetries) -> Vec<usize> {
    let mut counts: HashMap<BlockLabel, usize> = HashMap::new();
    for s in 0..(1u32 << n) {
        for label in labels_of(n, sym, s) {
            *counts.entry(label).or_default() += 1;
        }
    }
    counts.into_values().collect()
}

/// Labels of the blocks in which representative `s` carries a basis vector.
fn labels_of(n: usize, sym: &Symmetries, s: u32) -> Vec<BlockLabel> {
    let charge = charge_of(sym.charge, s);
    if !sym.reflection {
        return vec![BlockLabel {
            charge,
            parity: None,
        }];
    }
    let p = reverse_bits(s, n);
    if s > p {
        return Vec::new();
    }
    if s == p {
        return vec![BlockLabel {
            charge,
            parity: Some(1),
        }];
    }
    vec![
        BlockLabel {
            charge,
            parity: Some(1),
        },
        BlockLabel {
            charge,
            parity: Some(-1),
        },
    ]
}

/// Cheapest symmetry description among the supported frames.
pub fn detect_symmetries(h: &HamiltonianOperator) -> Result<Symmetries> {
    let n = h.n_qubits();
    let mut best: Option<(f64, Symmetries)> = None;
    for frame in [Frame::Identity, Frame::YToZ] {
        let sym = symmetries_in(h, frame)?;
        let cost = estimated_cost(n, &sym);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, sym));
        }
    }
    Ok(best.map(|b| b.1).expect("at least one frame"))
}

/// Orthonormal basis of one symmetry block, in the frame's computational
/// basis.
#[derive(Clone, Debug)]
pub struct BlockBasis {
    pub n_qubits: usize,
    pub label: BlockLabel,
    /// Smallest element of each mirror pair (or the state itself).
    pub reps: Vec<u32>,
}

impl BlockBasis {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    /// Nonzero components `(basis index, amplitude)` of basis vector `i`.
    pub fn components(&self, i: usize) -> ([(u32, f64); 2], usize) {
        let s = self.reps[i];
        match self.label.parity {
            None => ([(s, 1.0), (0, 0.0)], 1),
            Some(p) => {
                let ps = reverse_bits(s, self.n_qubits);
                if ps == s {
                    ([(s, 1.0), (0, 0.0)], 1)
                } else {
                    let h = std::f64::consts::FRAC_1_SQRT_2;
                    ([(s, h), (ps, f64::from(p) * h)], 2)
                }
            }
        }
    }

    /// Lookup table from full-space index to `(position, amplitude)` of the
    /// block basis vector containing it.
    pub fn lookup(&self) -> Vec<(u32, f64)> {
        let mut table = vec![(u32::MAX, 0.0); 1 << self.n_qubits];
        for i in 0..self.dim() {
            let (comp, m) = self.components(i);
            for &(s, a) in &comp[..m] {
                table[s as usize] = (i as u32, a);
            }
        }
        table
    }

    /// Projects a full-space vector onto the block: `B^dagger v`.
    pub fn restrict(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim())
            .map(|i| {
                let (comp, m) = self.components(i);
                comp[..m].iter().map(|&(s, a)| v[s as usize] * a).sum()
            })
            .collect()
    }

    /// Adds `B w` into the full-space vector `out`.
    pub fn embed_into(&self, w: &[C64], out: &mut [C64]) {
        for (i, &x) in w.iter().enumerate() {
            let (comp, m) = self.components(i);
            for &(s, a) in &comp[..m] {
                out[s as usize] += x * a;
            }
        }
    }
}

/// Every nonempty block under `sym`, sorted by label.
pub fn block_bases(n: usize, sym: &Symmetries) -> Vec<BlockBasis> {
    let mut map: std::collections::BTreeMap<BlockLabel, Vec<u32>> = Default::default();
    for s in 0..(1u32 << n) {
        for label in labels_of(n, sym, s) {
            map.entry(label).or_default().push(s);
        }
    }
    map.into_iter()
        .map(|(label, reps)| BlockBasis {
            n_qubits: n,
            label,
            reps,
        })
        .collect()
}

/// Dense block matrix `B^dagger H_f B` with `H_f` the frame Hamiltonian.
/// For `T = f64` the imaginary parts, zero for a real frame, are dropped.
pub fn block_matrix<T: Scalar>(hf: &HamiltonianOperator, basis: &BlockBasis) -> faer::Mat<T> {
    let d = basis.dim();
    let table = basis.lookup();
    let mut m = faer::Mat::<T>::zeros(d, d);
    for j in 0..d {
        let (comp, cnt) = basis.components(j);
        for &(s, a) in &comp[..cnt] {
            hf.for_each_in_column(s as usize, |r, v| {
                let (i, b) = table[r];
                if i != u32::MAX {
                    let e = &mut m[(i as usize, j)];
                    *e = e.plus(T::from_c64_lossy(v * (a * b)));
                }
            });
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_qimf, build_random_coupling, build_random_hopping};

    #[test]
    fn detected_symmetries() {
        let q = detect_symmetries(&build_qimf(6, 0.8090, 0.9045, 1.0).unwrap()).unwrap();
        assert_eq!(q.frame, Frame::YToZ);
        assert!(q.real && q.reflection && q.charge.is_none());
        let q0 = detect_symmetries(&build_qimf(6, 0.0, 0.9045, 1.0).unwrap()).unwrap();
        assert_eq!(q0.charge, Some(Charge::Parity));
        assert!(q0.real && q0.reflection);
        let hop = detect_symmetries(&build_random_hopping(6, 1).unwrap()).unwrap();
        assert_eq!(hop.frame, Frame::Identity);
        assert_eq!(hop.charge, Some(Charge::U1));
        assert!(!hop.reflection);
        let rc = detect_symmetries(&build_random_coupling(6, 1).unwrap()).unwrap();
        assert!(rc.charge.is_none() && !rc.reflection);
    }

    #[test]
    fn blocks_partition_the_space() {
        for n in 1..8 {
            let h = build_qimf(n, 0.0, 0.9, 1.0).unwrap();
            let sym = detect_symmetries(&h).unwrap();
            let total: usize = block_bases(n, &sym).iter().map(|b| b.dim()).sum();
            assert_eq!(total, 1 << n);
        }
    }

    #[test]
    fn block_matrices_are_hermitian_and_decouple() {
        let h = build_qimf(5, 0.8, 0.9, 1.0).unwrap();
        let sym = detect_symmetries(&h).unwrap();
        let hf = h.in_frame(sym.frame).unwrap();
        let blocks = block_bases(5, &sym);
        // Reassemble H_f from the blocks and compare with the dense frame matrix.
        let dense = hf.to_dense().unwrap();
        let mut rebuilt = faer::Mat::<C64>::zeros(32, 32);
        for b in &blocks {
            let m = block_matrix::<C64>(&hf, b);
            assert!(crate::linalg::hermiticity_defect(m.as_ref()) < 1e-13);
            for j in 0..b.dim() {
                let mut col = vec![C64::new(0.0, 0.0); b.dim()];
                col[j] = C64::new(1.0, 0.0);
                let mut ej = vec![C64::new(0.0, 0.0); 32];
                b.embed_into(&col, &mut ej);
                for i in 0..b.dim() {
                    let mut row = vec![C64::new(0.0, 0.0); b.dim()];
                    row[i] = C64::new(1.0, 0.0);
                    let mut ei = vec![C64::new(0.0, 0.0); 32];
                    b.embed_into(&row, &mut ei);
                    for r in 0..32 {
                        for c in 0..32 {
                            rebuilt[(r, c)] += ei[r] * m[(i, j)] * ej[c].conj();
                        }
                    }
                }
            }
        }
        assert!(crate::linalg::max_abs((&rebuilt - &dense).as_ref()) < 1e-12);
    }
}
