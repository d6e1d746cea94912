//! Projected ensembles of small qubit systems and their distance to Haar
//! k-designs.
//!
//! The crate is organised bottom-up:
//!
//! * [`hilbert`]: state vectors, bipartitions and projective measurement.
//! * [`hamiltonians`]: Pauli-string Hamiltonians for the mixed-field Ising
//!   chain and two disordered all-to-all models.
//! * [`spectral`]: exact diagonalization in symmetry blocks, time evolution
//!   and eigenstate selection.
//! * [`ensembles`]: projected, post-selected and empirical Haar ensembles.
//! * [`designs`]: k-th moments, Haar moments, trace distances, design times.
//! * [`theorylab`]: Monte Carlo and closed-form checks of the moment
//!   identities, residual bounds and concentration estimates.
//!
//! Qubit 0 is the most significant bit of a basis index and `|0>` is the
//! `sigma^z = +1` state throughout.

pub mod designs;
pub mod ensembles;
mod error;
pub mod hamiltonians;
pub mod hilbert;
pub mod linalg;
pub mod reduce;
pub mod rng;
pub mod spectral;
pub mod theorylab;

pub use error::{Error, Result};

/// Complex double used for all amplitudes.
pub type C64 = num_complex::Complex64;

/// Outcomes with weight at or below this value carry no normalized state.
pub const P_MIN: f64 = 1e-14;

/// Largest qubit count accepted by the Hamiltonian builders.
pub const MAX_QUBITS: usize = 14;

/// Binomial coefficient `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

#[cfg(test)]
mod tests {
    #[test]
    fn binomials() {
        assert_eq!(super::binomial(5, 2), 10);
        assert_eq!(super::binomial(11, 4), 330);
        assert_eq!(super::binomial(3, 4), 0);
        assert_eq!(super::binomial(12, 6), 924);
    }
}
