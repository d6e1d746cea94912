//! Spectra shared between campaigns of one process, backed by the optional
//! on-disk cache.

use crate::config::{ExperimentConfig, ModelKind};
use crate::error::Result;
use pked_core::hamiltonians::{build_qimf, build_random_coupling, build_random_hopping, neel_index, HamiltonianOperator};
use pked_core::hilbert::PureState;
use pked_core::spectral::{diagonalize_cached, Spectrum};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

#[derive(Default)]
pub struct SpectrumStore {
    cache_dir: Option<PathBuf>,
    spectra: Mutex<Vec<Arc<Spectrum>>>,
}

impl SpectrumStore {
    pub fn new(cache_dir: Option<PathBuf>) -> Self {
        Self {
            cache_dir,
            spectra: Mutex::new(Vec::new()),
        }
    }

    fn find(&self, h: &HamiltonianOperator, pred: impl Fn(&Spectrum) -> bool) -> Option<Arc<Spectrum>> {
        let fp = h.fingerprint();
        self.spectra
            .lock()
            .expect("store lock")
            .iter()
            .find(|s| s.fingerprint() == fp && s.n_qubits() == h.n_qubits() && pred(s))
            .cloned()
    }

    fn insert(&self, s: Spectrum) -> Arc<Spectrum> {
        let s = Arc::new(s);
        self.spectra.lock().expect("store lock").push(Arc::clone(&s));
        s
    }

    /// Complete spectrum of `h`.
    pub fn full(&self, h: &HamiltonianOperator) -> Result<Arc<Spectrum>> {
        if let Some(s) = self.find(h, |s| s.is_complete()) {
            return Ok(s);
        }
        Ok(self.insert(diagonalize_cached(h, None, self.cache_dir.as_deref())?))
    }

    /// A spectrum of `h` covering every block in which `psi0` has weight.
    pub fn for_state(&self, h: &HamiltonianOperator, psi0: &PureState) -> Result<Arc<Spectrum>> {
        if let Some(s) = self.find(h, |s| s.decompose(psi0).is_ok()) {
            return Ok(s);
        }
        Ok(self.insert(diagonalize_cached(h, Some(psi0), self.cache_dir.as_deref())?))
    }

    /// Drops every stored spectrum.
    pub fn clear(&self) {
        self.spectra.lock().expect("store lock").clear();
    }
}

/// Hamiltonian of `model` on `n` qubits with the couplings in `cfg`.
pub fn hamiltonian(model: ModelKind, n: usize, cfg: &ExperimentConfig) -> Result<HamiltonianOperator> {
    Ok(match model {
        ModelKind::Qimf => build_qimf(n, cfg.hx, cfg.hy, cfg.j)?,
        ModelKind::RandomCoupling => build_random_coupling(n, cfg.disorder_seed)?,
        ModelKind::RandomHopping => build_random_hopping(n, cfg.disorder_seed)?,
    })
}

/// Quench initial state: `|0...0>`, or `|0101...01>` for the hopping model.
pub fn initial_state(model: ModelKind, n: usize) -> Result<PureState> {
    let index = match model {
        ModelKind::RandomHopping => neel_index(n),
        _ => 0,
    };
    Ok(PureState::basis(n, index)?)
}
