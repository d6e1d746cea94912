use pked_core::designs::{delta_ensemble, delta_orders};
use pked_core::ensembles::{postselect_magnetization, projected_ensemble, single_sector_magnetization};
use pked_core::hamiltonians::{build_qimf, build_random_hopping, neel_index};
use pked_core::hilbert::{Bipartition, PureState};
use pked_core::linalg::norm;
use pked_core::spectral::{diagonalize, diagonalize_cached, diagonalize_plain, diagonalize_support};
use pked_core::{binomial, C64};

fn distance(a: &PureState, b: &PureState) -> f64 {
    let d: Vec<C64> = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| x - y).collect();
    norm(&d)
}

#[test]
fn symmetry_blocks_match_the_plain_solver() {
    let h = build_qimf(8, 0.809, 0.9045, 1.0).unwrap();
    let a = diagonalize(&h).unwrap();
    let b = diagonalize_plain(&h).unwrap();
    assert_eq!(a.len(), 256);
    for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
        assert!((x - y).abs() < 1e-10);
    }
    let psi0 = PureState::basis(8, 0).unwrap();
    let s = diagonalize_support(&h, &psi0).unwrap();
    assert!(!s.is_complete());
    for t in [0.3, 3.7, 41.0] {
        let x = a.evolve(&psi0, t).unwrap();
        assert!(distance(&x, &b.evolve(&psi0, t).unwrap()) < 1e-9);
        assert!(distance(&x, &s.evolve(&psi0, t).unwrap()) < 1e-9);
    }
}

#[test]
fn quench_conserves_energy_and_starts_from_the_product_value() {
    let h = build_qimf(8, 0.809, 0.9045, 1.0).unwrap();
    let psi0 = PureState::basis(8, 0).unwrap();
    let spec = diagonalize_support(&h, &psi0).unwrap();
    let dec = spec.decompose(&psi0).unwrap();
    let part = Bipartition::first(8, 3).unwrap();
    let e0 = h.expectation(&psi0).unwrap();
    assert!((dec.energy() - e0).abs() < 1e-10);
    let d0 = delta_ensemble(&projected_ensemble(&dec.state_at(0.0).unwrap(), &part).unwrap(), 1).unwrap();
    assert!((d0 - 0.875).abs() < 1e-10);
    for t in [1.0, 10.0, 100.0] {
        let psi = dec.state_at(t).unwrap();
        assert!((h.expectation(&psi).unwrap() - e0).abs() < 1e-8);
        let d = delta_orders(&projected_ensemble(&psi, &part).unwrap(), 3).unwrap();
        assert!(d[0] < d0);
        assert!(d[0] <= d[1] + 1e-12 && d[1] <= d[2] + 1e-12);
    }
}

#[test]
fn cached_spectra_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let h = build_qimf(7, 0.809, 0.9045, 1.0).unwrap();
    let a = diagonalize_cached(&h, None, Some(dir.path())).unwrap();
    assert!(std::fs::read_dir(dir.path()).unwrap().count() > 0);
    let b = diagonalize_cached(&h, None, Some(dir.path())).unwrap();
    assert_eq!(a.eigenvalues(), b.eigenvalues());
    assert_eq!(a.fingerprint(), b.fingerprint());
    let psi0 = PureState::basis(7, 5).unwrap();
    assert!(distance(&a.evolve(&psi0, 2.5).unwrap(), &b.evolve(&psi0, 2.5).unwrap()) < 1e-12);
}

#[test]
fn hopping_quench_post_selects_into_the_a_sector() {
    let n = 8;
    let h = build_random_hopping(n, 3).unwrap();
    let psi0 = PureState::basis(n, neel_index(n)).unwrap();
    let spec = diagonalize_support(&h, &psi0).unwrap();
    let psi = spec.evolve(&psi0, 5.0).unwrap();
    assert!(single_sector_magnetization(&psi).unwrap().abs() < 1e-12);
    let part = Bipartition::first(n, 3).unwrap();
    let ens = postselect_magnetization(&psi, &part, 0.5).unwrap();
    // three up spins among the five B qubits leave one of three in A
    assert_eq!(ens.subsystem_dim(), binomial(3, 1) as usize);
    assert_eq!(ens.len() as u64, binomial(5, 3));
    assert!(ens.weights().iter().all(|&w| w >= 0.0));
    assert!(ens.retained_weight() <= 1.0 + 1e-12);
    let d = delta_ensemble(&ens, 1).unwrap();
    assert!((0.0..=1.0).contains(&d));
}
