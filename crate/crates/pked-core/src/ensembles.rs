//! Projected, post-selected and empirical Haar ensembles.
//!
//! # Dump format
//!
//! [`write_dump`] produces a text file with one header line followed by one
//! line per entry:
//!
//! ```text
//! # pked-ensemble v1 provenance=projected subsystem_dim=8 entries=512 dropped_weight=0.00000000000000000e0
//! <weight> <re_0> <im_0> <re_1> <im_1> ... <re_{d-1}> <im_{d-1}>
//! ```
//!
//! Numbers are whitespace separated and printed with 17 significant digits
//! so a round trip through [`read_dump`] is exact.

use crate::error::{check_dim, invalid};
use crate::hamiltonians::{magnetization_sector, n_up, sector_n_up};
use crate::hilbert::{Bipartition, PureState};
use crate::rng::Stream;
use crate::{Error, Result, C64, P_MIN};
use faer::Mat;
use rayon::prelude::*;
use std::io::{BufRead, Write};

/// Origin of an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Projected,
    PostSelected,
    EmpiricalHaar,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Projected => "projected",
            Provenance::PostSelected => "postselected",
            Provenance::EmpiricalHaar => "empirical_haar",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "projected" => Provenance::Projected,
            "postselected" => Provenance::PostSelected,
            "empirical_haar" => Provenance::EmpiricalHaar,
            _ => return Err(invalid(format!("unknown provenance {s:?}"))),
        })
    }
}

/// Weighted pure states on a subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedEnsemble {
    subsystem_dim: usize,
    weights: Vec<f64>,
    states: Vec<Vec<C64>>,
    provenance: Provenance,
    dropped_weight: f64,
    retained_weight: f64,
}

impl ProjectedEnsemble {
    /// Ensemble from explicit entries. States must be unit vectors of length
    /// `subsystem_dim` and weights must be nonnegative and sum to one.
    pub fn from_entries(
        subsystem_dim: usize,
        entries: Vec<(f64, Vec<C64>)>,
        provenance: Provenance,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyEnsemble("no entries".into()));
        }
        let mut total = 0.0;
        for (w, s) in &entries {
            check_dim("ensemble state length", subsystem_dim, s.len())?;
            if w.is_nan() || *w < 0.0 {
                return Err(invalid(format!("negative weight {w}")));
            }
            let n2: f64 = s.iter().map(|z| z.norm_sqr()).sum();
            if (n2 - 1.0).abs() > 1e-10 {
                return Err(invalid(format!("ensemble state with norm^2 {n2}")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("weights sum to {total}")));
        }
        let (weights, states) = entries.into_iter().unzip();
        Ok(Self {
            subsystem_dim,
            weights,
            states,
            provenance,
            dropped_weight: 0.0,
            retained_weight: 1.0,
        })
    }

    pub fn subsystem_dim(&self) -> usize {
        self.subsystem_dim
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn states(&self) -> &[Vec<C64>] {
        &self.states
    }
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
    /// Total probability of outcomes discarded for being at or below
    /// [`P_MIN`].
    pub fn dropped_weight(&self) -> f64 {
        self.dropped_weight
    }
    /// Probability of the retained outcome class before renormalization
    /// (1 for plain projected ensembles).
    pub fn retained_weight(&self) -> f64 {
        self.retained_weight
    }

    pub fn entries(&self) -> impl Iterator<Item = (f64, &[C64])> {
        self.weights.iter().copied().zip(self.states.iter().map(|s| s.as_slice()))
    }

    /// `sum_i p_i |psi_i><psi_i|`.
    pub fn first_moment(&self) -> Mat<C64> {
        let d = self.subsystem_dim;
        let mut rho = Mat::<C64>::zeros(d, d);
        for (w, s) in self.entries() {
            for j in 0..d {
                let c = s[j].conj() * w;
                for i in 0..d {
                    rho[(i, j)] += s[i] * c;
                }
            }
        }
        rho
    }
}

/// Projected ensemble of `state` for measuring every B qubit in the
/// computational basis. Entries are in ascending outcome order.
pub fn projected_ensemble(state: &PureState, part: &Bipartition) -> Result<ProjectedEnsemble> {
    check_dim("qubit count", part.n_total(), state.n_qubits())?;
    if part.n_b() == 0 {
        return Err(invalid("N_B = 0: the ensemble would be the single global state"));
    }
    let raw: Vec<(f64, Vec<C64>)> = (0..part.d_b())
        .into_par_iter()
        .map(|z| {
            let v = part.conditional(state, z).expect("checked dimensions");
            let w: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            (w, v)
        })
        .collect();
    let mut dropped = 0.0;
    let mut weights = Vec::new();
    let mut states = Vec::new();
    for (w, v) in raw {
        if w <= P_MIN {
            dropped += w;
            continue;
        }
        let s = w.sqrt();
        weights.push(w);
        states.push(v.into_iter().map(|c| c / s).collect());
    }
    Ok(ProjectedEnsemble {
        subsystem_dim: part.d_a(),
        weights,
        states,
        provenance: Provenance::Projected,
        dropped_weight: dropped,
        retained_weight: 1.0,
    })
}

/// Total magnetization of `state` when it lies in a single sector within
/// `1e-10`.
pub fn single_sector_magnetization(state: &PureState) -> Result<f64> {
    let n = state.n_qubits();
    let mut per = vec![0.0; n + 1];
    for (s, a) in state.amplitudes().iter().enumerate() {
        per[n_up(s, n)] += a.norm_sqr();
    }
    let (up, &w) = per
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one sector");
    if w < 1.0 - 1e-10 {
        return Err(invalid(format!(
            "state is not in a single magnetization sector (largest sector weight {w})"
        )));
    }
    Ok(up as f64 - n as f64 / 2.0)
}

/// Ensemble of outcomes whose B-magnetization equals `s_b`, with A-states
/// written in the basis of the induced A sector `S_tot - s_b`.
pub fn postselect_magnetization(
    state: &PureState,
    part: &Bipartition,
    s_b: f64,
) -> Result<ProjectedEnsemble> {
    check_dim("qubit count", part.n_total(), state.n_qubits())?;
    if part.n_b() == 0 {
        return Err(invalid("N_B = 0: nothing to post-select on"));
    }
    let s_tot = single_sector_magnetization(state)?;
    let (n_a, n_b) = (part.n_a(), part.n_b());
    let up_b = sector_n_up(n_b, s_b)?;
    let sector_a = magnetization_sector(n_a, s_tot - s_b)?;
    let mut weights = Vec::new();
    let mut states = Vec::new();
    let mut dropped = 0.0;
    for z in 0..part.d_b() {
        if n_up(z, n_b) != up_b {
            continue;
        }
        let v = part.conditional(state, z)?;
        let w: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if w <= P_MIN {
            dropped += w;
            continue;
        }
        let s = w.sqrt();
        weights.push(w);
        states.push(sector_a.basis_indices.iter().map(|&a| v[a] / s).collect::<Vec<C64>>());
    }
    let retained: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Err(Error::EmptyEnsemble(format!("no outcome with s_B = {s_b} has weight")));
    }
    for (w, st) in weights.iter_mut().zip(&mut states) {
        *w /= retained;
        let n2: f64 = st.iter().map(|c| c.norm_sqr()).sum();
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(Error::Invariant(format!(
                "post-selected state leaks out of the A sector (norm^2 {n2})"
            )));
        }
    }
    Ok(ProjectedEnsemble {
        subsystem_dim: sector_a.dim(),
        weights,
        states,
        provenance: Provenance::PostSelected,
        dropped_weight: dropped,
        retained_weight: retained,
    })
}

/// Haar-random unit vector: i.i.d. complex Gaussians, normalized.
pub fn haar_state(dim: usize, rng: &mut Stream) -> Result<Vec<C64>> {
    if dim == 0 {
        return Err(invalid("Haar state of dimension 0"));
    }
    loop {
        let v: Vec<C64> = (0..dim).map(|_| rng.complex_normal()).collect();
        let n = crate::linalg::norm(&v);
        if n > 0.0 {
            return Ok(v.into_iter().map(|z| z / n).collect());
        }
    }
}

/// `count` Haar states with weight `1/count` each.
pub fn empirical_haar_ensemble(dim: usize, count: usize, rng: &mut Stream) -> Result<ProjectedEnsemble> {
    if count == 0 {
        return Err(invalid("empirical ensemble needs count >= 1"));
    }
    let states = (0..count)
        .map(|_| haar_state(dim, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectedEnsemble {
        subsystem_dim: dim,
        weights: vec![1.0 / count as f64; count],
        states,
        provenance: Provenance::EmpiricalHaar,
        dropped_weight: 0.0,
        retained_weight: 1.0,
    })
}

/// Writes the text dump described in the module docs.
pub fn write_dump(ens: &ProjectedEnsemble, mut w: impl Write) -> Result<()> {
    writeln!(
        w,
        "# pked-ensemble v1 provenance={} subsystem_dim={} entries={} dropped_weight={:.17e}",
        ens.provenance.as_str(),
        ens.subsystem_dim,
        ens.len(),
        ens.dropped_weight
    )?;
    for (p, s) in ens.entries() {
        write!(w, "{p:.17e}")?;
        for z in s {
            write!(w, " {:.17e} {:.17e}", z.re, z.im)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a dump written by [`write_dump`].
pub fn read_dump(r: impl BufRead) -> Result<ProjectedEnsemble> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| invalid("empty dump"))??;
    let mut prov = None;
    let mut dim = None;
    let mut count = None;
    let mut dropped = 0.0;
    for tok in header.split_whitespace().skip(3) {
        let (k, v) = tok.split_once('=').ok_or_else(|| invalid(format!("bad header token {tok}")))?;
        let bad = |_| invalid(format!("bad header value {tok}"));
        match k {
            "provenance" => prov = Some(Provenance::parse(v)?),
            "subsystem_dim" => dim = Some(v.parse::<usize>().map_err(bad)?),
            "entries" => count = Some(v.parse::<usize>().map_err(bad)?),
            "dropped_weight" => dropped = v.parse::<f64>().map_err(|_| invalid(format!("bad header value {tok}")))?,
            _ => return Err(invalid(format!("unknown header key {k}"))),
        }
    }
    if !header.starts_with("# pked-ensemble v1") {
        return Err(invalid("not a pked ensemble dump"));
    }
    let (prov, dim, count) = match (prov, dim, count) {
        (Some(p), Some(d), Some(c)) => (p, d, c),
        _ => return Err(invalid("incomplete dump header")),
    };
    let mut weights = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| invalid(format!("bad number {t}"))))
            .collect::<Result<Vec<f64>>>()?;
        check_dim("dump record length", 1 + 2 * dim, nums.len())?;
        weights.push(nums[0]);
        states.push(nums[1..].chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect());
    }
    check_dim("dump entry count", count, weights.len())?;
    Ok(ProjectedEnsemble {
        subsystem_dim: dim,
        weights,
        states,
        provenance: prov,
        dropped_weight: dropped,
        retained_weight: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_random_hopping, neel_index};
    use crate::hilbert::{bell, ghz, reduced_density_matrix};
    use crate::linalg::max_abs;
    use crate::spectral::diagonalize;
    use proptest::prelude::*;

    fn random_state(n: usize, seed: u64) -> PureState {
        let mut s = Stream::new(seed, "ens-test", 0);
        PureState::new(n, haar_state(1 << n, &mut s).unwrap()).unwrap()
    }

    #[test]
    fn bell_and_ghz() {
        let part = Bipartition::first(2, 1).unwrap();
        let e = projected_ensemble(&bell(), &part).unwrap();
        assert_eq!(e.len(), 2);
        assert!((e.weights()[0] - 0.5).abs() < 1e-15);
        assert!((e.states()[0][0].norm() - 1.0).abs() < 1e-15);
        assert!((e.states()[1][1].norm() - 1.0).abs() < 1e-15);
        let part3 = Bipartition::first(3, 1).unwrap();
        let g = projected_ensemble(&ghz(3).unwrap(), &part3).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.dropped_weight(), 0.0);
    }

    #[test]
    fn product_plus_state() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = [C64::new(h, 0.0), C64::new(h, 0.0)];
        let psi = PureState::product(3, plus).unwrap();
        let e = projected_ensemble(&psi, &Bipartition::first(3, 1).unwrap()).unwrap();
        assert_eq!(e.len(), 4);
        for (w, s) in e.entries() {
            assert!((w - 0.25).abs() < 1e-15);
            assert!((s[0] - plus[0]).norm() < 1e-15 && (s[1] - plus[1]).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_empty_b() {
        let part = Bipartition::first(2, 2).unwrap();
        assert!(projected_ensemble(&bell(), &part).is_err());
    }

    #[test]
    fn postselect_neel() {
        let psi = PureState::basis(4, 0b0101).unwrap();
        let part = Bipartition::first(4, 2).unwrap();
        let e = postselect_magnetization(&psi, &part, 0.0).unwrap();
        assert_eq!(e.subsystem_dim(), 2);
        assert_eq!(e.len(), 1);
        assert_eq!(e.weights()[0], 1.0);
        // |01> is the first element of the sector {01, 10}.
        assert_eq!(e.states()[0], vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(postselect_magnetization(&random_state(4, 1), &part, 0.0).is_err());
        assert!(matches!(
            postselect_magnetization(&psi, &part, 1.0),
            Err(Error::EmptyEnsemble(_))
        ));
    }

    #[test]
    fn postselect_sector_dimension_and_retained_weight() {
        let h = build_random_hopping(8, 3).unwrap();
        let spec = diagonalize(&h).unwrap();
        // an eigenstate in the S = 0 sector
        let neel = PureState::basis(8, neel_index(8)).unwrap();
        let mut idx = None;
        for i in 0..spec.len() {
            let v = spec.eigenvector(i).unwrap();
            if single_sector_magnetization(&v).ok() == Some(0.0) && v.overlap(&neel).unwrap().norm() > 1e-3 {
                idx = Some(i);
                break;
            }
        }
        let v = spec.eigenvector(idx.unwrap()).unwrap();
        let part = Bipartition::first(8, 5).unwrap();
        let e = postselect_magnetization(&v, &part, 0.5).unwrap();
        assert_eq!(e.subsystem_dim(), 10);
        let mut oracle = 0.0;
        let mut raw = Vec::new();
        for z in 0..8 {
            let c = part.conditional(&v, z).unwrap();
            let w: f64 = c.iter().map(|x| x.norm_sqr()).sum();
            if n_up(z, 3) == 2 {
                oracle += w;
                raw.push(w);
            }
        }
        assert!((e.retained_weight() - oracle).abs() < 1e-12);
        // relative weights preserved
        for (a, b) in e.weights().iter().zip(&raw) {
            assert!((a * oracle - b).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_examples() {
        let mut s = Stream::new(1, "haar", 0);
        let v = haar_state(1, &mut s).unwrap();
        assert!((v[0].norm() - 1.0).abs() < 1e-15);
        let a = haar_state(8, &mut Stream::new(4, "haar", 0)).unwrap();
        let b = haar_state(8, &mut Stream::new(4, "haar", 0)).unwrap();
        assert_eq!(a, b);
        assert!(haar_state(0, &mut s).is_err());
        let mut s = Stream::new(2, "haar", 1);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| haar_state(2, &mut s).unwrap()[0].norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn empirical_examples() {
        let mut s = Stream::new(1, "emp", 0);
        let e = empirical_haar_ensemble(4, 1, &mut s).unwrap();
        assert_eq!(e.weights(), &[1.0]);
        let e = empirical_haar_ensemble(8, 256, &mut s).unwrap();
        assert!(e.weights().iter().all(|&w| w == 1.0 / 256.0));
        assert_eq!(e.provenance(), Provenance::EmpiricalHaar);
        assert!(empirical_haar_ensemble(8, 0, &mut s).is_err());
    }

    /// Two-sample Kolmogorov–Smirnov statistic.
    fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    #[test]
    fn haar_unitary_invariance_ks() {
        let d = 4;
        let n = 10_000;
        let u = {
            // fixed unitary: eigenvectors of a fixed Hermitian matrix
            let mut s = Stream::new(99, "u", 0);
            let mut m = Mat::<C64>::zeros(d, d);
            for j in 0..d {
                for i in j..d {
                    let z = if i == j { C64::new(s.normal(), 0.0) } else { s.complex_normal() };
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            crate::linalg::eigh(m.as_ref(), true).unwrap().vectors.unwrap()
        };
        let mut s1 = Stream::new(5, "ks", 0);
        let mut s2 = Stream::new(5, "ks", 1);
        let plain: Vec<f64> = (0..n).map(|_| haar_state(d, &mut s1).unwrap()[0].norm_sqr()).collect();
        let rotated: Vec<f64> = (0..n)
            .map(|_| {
                let v = haar_state(d, &mut s2).unwrap();
                let w0: C64 = (0..d).map(|k| u[(0, k)] * v[k]).sum();
                w0.norm_sqr()
            })
            .collect();
        // 1% critical value for equal sample sizes: 1.628 sqrt(2/n)
        let crit = 1.628 * (2.0 / n as f64).sqrt();
        assert!(ks(plain, rotated) < crit);
    }

    #[test]
    fn dump_roundtrip() {
        let psi = random_state(5, 3);
        let e = projected_ensemble(&psi, &Bipartition::first(5, 2).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_dump(&e, &mut buf).unwrap();
        let back = read_dump(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.weights(), e.weights());
        assert_eq!(back.states(), e.states());
        assert_eq!(back.provenance(), Provenance::Projected);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]
        #[test]
        fn first_moment_is_reduced_density_matrix(n in 2usize..9, seed in any::<u64>(), na in 1usize..4) {
            let na = na.min(n - 1);
            let psi = random_state(n, seed);
            let part = Bipartition::first(n, na).unwrap();
            let e = projected_ensemble(&psi, &part).unwrap();
            let total: f64 = e.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
            let rho = reduced_density_matrix(&psi, &part).unwrap();
            prop_assert!(max_abs((&rho - &e.first_moment()).as_ref()) < 1e-10);
        }
    }
}
