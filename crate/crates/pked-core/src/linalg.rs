//! Dense Hermitian eigensolvers and small helpers on top of `faer`.
//!
//! All calls run with `Par::Seq` so results do not depend on the size of
//! any thread pool; parallelism lives one level up, over independent work
//! units.

use crate::{Error, Result, C64};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::traits::ComplexField;
use faer::diag::Diag;
use faer::{Mat, MatRef, Par};

/// Scalars the solvers accept: `f64` and `C64`.
pub trait Scalar: ComplexField + Copy + Send + Sync + 'static {
    fn real_part(self) -> f64;
    fn to_c64(self) -> C64;
    fn from_f64(x: f64) -> Self;
    /// Converts from `C64`, dropping the imaginary part for real scalars.
    fn from_c64_lossy(z: C64) -> Self;
    fn plus(self, other: Self) -> Self;
}

impl Scalar for f64 {
    fn real_part(self) -> f64 {
        self
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_c64_lossy(z: C64) -> Self {
        z.re
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
}

impl Scalar for C64 {
    fn real_part(self) -> f64 {
        self.re
    }
    fn to_c64(self) -> C64 {
        self
    }
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn from_c64_lossy(z: C64) -> Self {
        z
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
}

/// Ascending eigenvalues and, optionally, the matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigh<T> {
    pub values: Vec<f64>,
    pub vectors: Option<Mat<T>>,
}

/// Eigendecomposition of a self-adjoint matrix. Only the lower triangle is
/// read.
pub fn eigh<T: Scalar>(a: MatRef<'_, T>, vectors: bool) -> Result<Eigh<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "square matrix",
            expected: n,
            found: a.ncols(),
        });
    }
    let compute = if vectors {
        ComputeEigenvectors::Yes
    } else {
        ComputeEigenvectors::No
    };
    let par = Par::Seq;
    let mut s = Diag::<T>::zeros(n);
    let mut u = if vectors {
        Some(Mat::<T>::zeros(n, n))
    } else {
        None
    };
    let req = evd::self_adjoint_evd_scratch::<T>(n, compute, par, Default::default());
    let mut buf = MemBuffer::new(req);
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        u.as_mut().map(|m| m.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values: Vec<f64> = (0..n).map(|i| s[i].real_part()).collect();
    Ok(Eigh { values, vectors: u })
}

/// Eigenvalues only.
pub fn eigvalsh<T: Scalar>(a: MatRef<'_, T>) -> Result<Vec<f64>> {
    Ok(eigh(a, false)?.values)
}

/// Trace norm of a Hermitian matrix: the sum of absolute eigenvalues.
pub fn trace_norm<T: Scalar>(a: MatRef<'_, T>) -> Result<f64> {
    let mut v = eigvalsh(a)?;
    v.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    Ok(v.iter().map(|x| x.abs()).sum())
}

/// Largest entrywise deviation `|a_ij - conj(a_ji)|`.
pub fn hermiticity_defect<T: Scalar>(a: MatRef<'_, T>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in j..n {
            let x = a[(i, j)].to_c64();
            let y = a[(j, i)].to_c64();
            worst = worst.max((x - y.conj()).norm());
        }
    }
    worst
}

/// Largest absolute entry.
pub fn max_abs<T: Scalar>(a: MatRef<'_, T>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].to_c64().norm());
        }
    }
    m
}

/// Euclidean norm of a complex slice.
pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a|b>`, conjugating the left argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
