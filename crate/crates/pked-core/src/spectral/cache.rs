//! On-disk spectrum cache.
//!
//! Little-endian binary layout:
//!
//! ```text
//! magic      8 bytes  "PKEDSPC1"
//! n_qubits   u32
//! h_hash     u64      HamiltonianOperator::fingerprint
//! model      u8       0 qimf, 1 random coupling, 2 random hopping, 3 custom
//! seed       u8 flag + u64
//! frame      u8       0 identity, 1 y_to_z
//! charge     u8       0 none, 1 U1, 2 parity
//! reflection u8
//! real       u8
//! complete   u8
//! n_blocks   u32
//! per block:
//!   charge   i64      -1 when absent
//!   parity   i8       0 when absent
//!   dim      u64
//!   reps     dim x u32
//!   values   dim x f64
//!   vectors  dim*dim x f64 (real) or dim*dim x (re f64, im f64), column-major
//! ```
//!
//! File names encode the model, `N`, the Hamiltonian hash and, for
//! support-restricted spectra, a hash of the solved block labels.

use super::blocks::{detect_symmetries, BlockBasis, BlockLabel, Charge, Symmetries};
use super::{Block, BlockVectors, Spectrum};
use crate::hamiltonians::{Frame, HamiltonianOperator, ModelTag};
use crate::hilbert::PureState;
use crate::rng::fnv1a64;
use crate::{Error, Result, C64};
use faer::Mat;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 8] = b"PKEDSPC1";

/// Cache file for `h`, optionally restricted to the support of a state.
pub fn cache_path(dir: &Path, h: &HamiltonianOperator, support: Option<&PureState>) -> PathBuf {
    let suffix = match support.and_then(|psi| support_key(h, psi).ok()) {
        Some(k) => format!("-s{k:016x}"),
        None => String::new(),
    };
    dir.join(format!(
        "{}-n{}-{:016x}{}.spec",
        h.model().as_str(),
        h.n_qubits(),
        h.fingerprint(),
        suffix
    ))
}

fn support_key(h: &HamiltonianOperator, psi: &PureState) -> Result<u64> {
    let sym = detect_symmetries(h)?;
    let mut v = psi.amplitudes().to_vec();
    sym.frame.to_frame(&mut v);
    let mut bytes = Vec::new();
    for b in super::blocks::block_bases(h.n_qubits(), &sym) {
        let w: f64 = b.restrict(&v).iter().map(|z| z.norm_sqr()).sum();
        if w > super::SUPPORT_TOL {
            bytes.extend_from_slice(format!("{};", b.label).as_bytes());
        }
    }
    Ok(fnv1a64(&bytes))
}

fn model_code(m: ModelTag) -> u8 {
    match m {
        ModelTag::Qimf => 0,
        ModelTag::RandomCoupling => 1,
        ModelTag::RandomHopping => 2,
        ModelTag::Custom => 3,
    }
}

fn model_from(c: u8) -> Result<ModelTag> {
    Ok(match c {
        0 => ModelTag::Qimf,
        1 => ModelTag::RandomCoupling,
        2 => ModelTag::RandomHopping,
        3 => ModelTag::Custom,
        _ => return Err(Error::Cache(format!("unknown model code {c}"))),
    })
}

/// Writes `spec` to `path`.
pub fn write(path: &Path, spec: &Spectrum) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(spec.n_qubits as u32).to_le_bytes())?;
    w.write_all(&spec.fingerprint.to_le_bytes())?;
    w.write_all(&[model_code(spec.model)])?;
    w.write_all(&[u8::from(spec.seed.is_some())])?;
    w.write_all(&spec.seed.unwrap_or(0).to_le_bytes())?;
    let sym = spec.symmetries;
    let frame = match sym.frame {
        Frame::Identity => 0u8,
        Frame::YToZ => 1,
    };
    let charge = match sym.charge {
        None => 0u8,
        Some(Charge::U1) => 1,
        Some(Charge::Parity) => 2,
    };
    w.write_all(&[frame, charge, u8::from(sym.reflection), u8::from(sym.real)])?;
    w.write_all(&[u8::from(spec.complete)])?;
    w.write_all(&(spec.blocks.len() as u32).to_le_bytes())?;
    for b in &spec.blocks {
        let q = b.basis.label.charge.map_or(-1i64, i64::from);
        w.write_all(&q.to_le_bytes())?;
        w.write_all(&b.basis.label.parity.unwrap_or(0).to_le_bytes())?;
        let d = b.basis.dim();
        w.write_all(&(d as u64).to_le_bytes())?;
        for r in &b.basis.reps {
            w.write_all(&r.to_le_bytes())?;
        }
        for e in &b.values {
            w.write_all(&e.to_le_bytes())?;
        }
        match &b.vectors {
            BlockVectors::Real(v) => {
                for j in 0..d {
                    for i in 0..d {
                        w.write_all(&v[(i, j)].to_le_bytes())?;
                    }
                }
            }
            BlockVectors::Complex(v) => {
                for j in 0..d {
                    for i in 0..d {
                        w.write_all(&v[(i, j)].re.to_le_bytes())?;
                        w.write_all(&v[(i, j)].im.to_le_bytes())?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const K: usize>(&mut self) -> Result<[u8; K]> {
        let mut b = [0u8; K];
        self.0.read_exact(&mut b)?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

/// Reads a spectrum written by [`write`] and checks it belongs to `h`.
pub fn read(path: &Path, h: &HamiltonianOperator) -> Result<Spectrum> {
    let mut r = Reader(BufReader::new(File::open(path)?));
    if &r.bytes::<8>()? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let n = r.u32()? as usize;
    let hash = r.u64()?;
    if n != h.n_qubits() || hash != h.fingerprint() {
        return Err(Error::Cache("cached spectrum belongs to a different Hamiltonian".into()));
    }
    let _model = model_from(r.u8()?)?;
    let _has_seed = r.u8()?;
    let _seed = r.u64()?;
    let frame = match r.u8()? {
        0 => Frame::Identity,
        1 => Frame::YToZ,
        c => return Err(Error::Cache(format!("unknown frame code {c}"))),
    };
    let charge = match r.u8()? {
        0 => None,
        1 => Some(Charge::U1),
        2 => Some(Charge::Parity),
        c => return Err(Error::Cache(format!("unknown charge code {c}"))),
    };
    let reflection = r.u8()? != 0;
    let real = r.u8()? != 0;
    let complete = r.u8()? != 0;
    let sym = Symmetries {
        frame,
        charge,
        reflection,
        real,
    };
    let nb = r.u32()? as usize;
    let mut blocks = Vec::with_capacity(nb);
    for _ in 0..nb {
        let q = i64::from_le_bytes(r.bytes()?);
        let p = r.bytes::<1>()?[0] as i8;
        let label = BlockLabel {
            charge: (q >= 0).then_some(q as u32),
            parity: (p != 0).then_some(p),
        };
        let d = r.u64()? as usize;
        if d > 1 << n {
            return Err(Error::Cache(format!("block dimension {d} too large")));
        }
        let reps = (0..d).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let values = (0..d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let vectors = if real {
            let mut m = Mat::<f64>::zeros(d, d);
            for j in 0..d {
                for i in 0..d {
                    m[(i, j)] = r.f64()?;
                }
            }
            BlockVectors::Real(m)
        } else {
            let mut m = Mat::<C64>::zeros(d, d);
            for j in 0..d {
                for i in 0..d {
                    let re = r.f64()?;
                    m[(i, j)] = C64::new(re, r.f64()?);
                }
            }
            BlockVectors::Complex(m)
        };
        blocks.push(Block {
            basis: BlockBasis {
                n_qubits: n,
                label,
                reps,
            },
            values,
            vectors,
        });
    }
    Ok(Spectrum::assemble(h, sym, blocks, complete))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_qimf, build_random_hopping};
    use crate::spectral::{diagonalize, diagonalize_cached};

    #[test]
    fn roundtrip_real_and_complex() {
        let dir = tempfile::tempdir().unwrap();
        for h in [
            build_qimf(6, 0.8090, 0.9045, 1.0).unwrap(),
            build_random_hopping(5, 2).unwrap(),
        ] {
            let spec = diagonalize(&h).unwrap();
            let path = cache_path(dir.path(), &h, None);
            write(&path, &spec).unwrap();
            let back = read(&path, &h).unwrap();
            assert_eq!(back.eigenvalues(), spec.eigenvalues());
            let a = spec.eigenvector(3).unwrap();
            let b = back.eigenvector(3).unwrap();
            assert_eq!(a.amplitudes(), b.amplitudes());
            let other = build_qimf(6, 0.8, 0.9, 1.0).unwrap();
            assert!(read(&path, &other).is_err());
        }
    }

    #[test]
    fn cached_support_spectrum_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let h = build_qimf(6, 0.8090, 0.9045, 1.0).unwrap();
        let psi = PureState::basis(6, 0).unwrap();
        let a = diagonalize_cached(&h, Some(&psi), Some(dir.path())).unwrap();
        let path = cache_path(dir.path(), &h, Some(&psi));
        assert!(path.exists());
        let b = diagonalize_cached(&h, Some(&psi), Some(dir.path())).unwrap();
        assert_eq!(a.eigenvalues(), b.eigenvalues());
        assert!(!b.is_complete());
    }
}
