//! Dense complex linear algebra shared by the analysis modules.
//!
//! Matrices are row-major with `f64` complex entries. Everything here is
//! sized for small Hilbert spaces (composite dimension up to a few
//! thousand), so the kernels favor robustness and determinism over speed:
//! Hermitian eigendecompositions and singular value decompositions are
//! cyclic Jacobi sweeps, and orthonormalization is two-pass Gram-Schmidt.

mod eig;
mod orth;
mod svd;

pub use eig::{herm_eig, herm_exp, HermEig};
pub use orth::{gram_schmidt, orthonormal_completion};
pub use svd::{null_space, singular_values, spectral_norm, svd, Svd};

use num_complex::Complex64;

use crate::error::{NiqsError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest composite dimension a Kronecker product may produce.
pub const MAX_COMPOSITE_DIM: usize = 4096;

/// Tolerances used across the analysis pipeline. All are overridable; the
/// defaults leave wide margins at the small dimensions this crate targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank decisions.
    pub rank: f64,
    /// Residual-norm cutoff below which a vector counts as dependent.
    pub dep: f64,
    /// Allowed deviation of unit-vector norms from 1.
    pub norm: f64,
    /// Relative Frobenius deviation allowed in Hermitian checks.
    pub herm: f64,
    /// Allowed deviation from unitarity (Frobenius, relative to dimension).
    pub unitary: f64,
    /// Slack above 1 allowed for the largest singular value of a contraction.
    pub contraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-10,
            dep: 1e-8,
            norm: 1e-10,
            herm: 1e-10,
            unitary: 1e-10,
            contraction: 1e-10,
        }
    }
}

/// Complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector {
    entries: Vec<C64>,
}

impl CVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(NiqsError::DimensionMismatch("empty vector".into()));
        }
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(NiqsError::NonFinite("vector"));
        }
        Ok(CVector { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        CVector { entries: vec![ZERO; dim] }
    }

    /// Standard basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut entries = vec![ZERO; dim];
        entries[index] = ONE;
        CVector { entries }
    }

    pub fn from_reals(reals: &[f64]) -> Self {
        CVector { entries: reals.iter().map(|&r| C64::new(r, 0.0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &CVector) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, factor: C64) -> CVector {
        CVector { entries: self.entries.iter().map(|z| z * factor).collect() }
    }

    pub fn add(&self, other: &CVector) -> CVector {
        debug_assert_eq!(self.dim(), other.dim());
        CVector {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CVector) -> CVector {
        debug_assert_eq!(self.dim(), other.dim());
        CVector {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn axpy(&mut self, factor: C64, other: &CVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += factor * b;
        }
    }

    pub fn conj(&self) -> CVector {
        CVector { entries: self.entries.iter().map(|z| z.conj()).collect() }
    }

    /// Normalized copy. Returns `None` when the norm is below `tiny`.
    pub fn normalized(&self, tiny: f64) -> Option<CVector> {
        let n = self.norm();
        if n <= tiny {
            None
        } else {
            Some(self.scale(C64::new(1.0 / n, 0.0)))
        }
    }

    /// Tensor product `|self> (x) |other>` in row-major (self-major) order.
    pub fn tensor(&self, other: &CVector) -> CVector {
        let mut entries = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.entries {
            for b in &other.entries {
                entries.push(a * b);
            }
        }
        CVector { entries }
    }

    /// Rotate the global phase so the first entry of magnitude above `tiny`
    /// becomes real nonnegative. Deterministic representative of the ray.
    pub fn canonical_phase(&self, tiny: f64) -> CVector {
        for z in &self.entries {
            let m = z.norm();
            if m > tiny {
                let phase = z.conj() / m;
                return self.scale(phase);
            }
        }
        self.clone()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.entries[i]
    }
}

impl std::ops::IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.entries[i]
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(NiqsError::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(NiqsError::NonFinite("matrix"));
        }
        Ok(CMatrix { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, entries: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Build from nested row slices of complex entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(NiqsError::DimensionMismatch("empty matrix".into()));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(NiqsError::DimensionMismatch("ragged rows".into()));
        }
        CMatrix::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let converted: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        CMatrix::from_rows(&converted)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col_vector(&self, c: usize) -> CVector {
        let mut v = CVector::zeros(self.rows);
        for r in 0..self.rows {
            v[r] = self[(r, c)];
        }
        v
    }

    pub fn transpose(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        assert_eq!(self.cols, v.dim(), "mul_vec shape mismatch");
        let mut out = CVector::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = ZERO;
            for c in 0..self.cols {
                acc += self[(r, c)] * v[c];
            }
            out[r] = acc;
        }
        out
    }

    /// `|a><b|` outer product.
    pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
        let mut out = CMatrix::zeros(a.dim(), b.dim());
        for r in 0..a.dim() {
            for c in 0..b.dim() {
                out[(r, c)] = a[r] * b[c].conj();
            }
        }
        out
    }

    /// Relative Frobenius deviation from Hermitian symmetry.
    pub fn hermitian_deviation(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let norm = self.frobenius_norm();
        let dev = self.sub(&self.dagger()).frobenius_norm();
        if norm == 0.0 {
            0.0
        } else {
            dev / norm
        }
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        if self.rows != self.cols {
            return Err(NiqsError::DimensionMismatch("Hermitian check on non-square matrix".into()));
        }
        let deviation = self.hermitian_deviation();
        if deviation > tol {
            return Err(NiqsError::NotHermitian { deviation, tol });
        }
        Ok(())
    }

    /// Frobenius deviation of `self * self^dagger` from the identity.
    pub fn unitary_deviation(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        self.matmul(&self.dagger())
            .sub(&CMatrix::identity(self.rows))
            .frobenius_norm()
    }

    pub fn check_unitary(&self, tol: f64) -> Result<()> {
        if self.rows != self.cols {
            return Err(NiqsError::DimensionMismatch("unitarity check on non-square matrix".into()));
        }
        let deviation = self.unitary_deviation();
        if deviation > tol * (self.rows as f64).sqrt().max(1.0) {
            return Err(NiqsError::NotUnitary { deviation, tol });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.entries[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.entries[r * self.cols + c]
    }
}

/// Kronecker product `a (x) b`. Row/column indices combine a-major, matching
/// the probe-major composite index convention `(j, s) = j*n + s`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    if rows > MAX_COMPOSITE_DIM || cols > MAX_COMPOSITE_DIM {
        return Err(NiqsError::ModelTooLarge {
            dim: rows.max(cols),
            max: MAX_COMPOSITE_DIM,
        });
    }
    let mut out = CMatrix::zeros(rows, cols);
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let f = a[(ar, ac)];
            if f == ZERO {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out[(ar * b.rows() + br, ac * b.cols() + bc)] = f * b[(br, bc)];
                }
            }
        }
    }
    Ok(out)
}

/// Partial trace over the second (object) factor of an `(m*n) x (m*n)`
/// operator under the probe-major convention: the result is `m x m` with
/// entries `sum_s op[(j,s),(k,s)]`.
pub fn partial_trace_system(op: &CMatrix, m: usize, n: usize) -> Result<CMatrix> {
    if op.rows() != m * n || op.cols() != m * n {
        return Err(NiqsError::DimensionMismatch(format!(
            "partial trace expects {0}x{0}, got {1}x{2}",
            m * n,
            op.rows(),
            op.cols()
        )));
    }
    let mut out = CMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            let mut acc = ZERO;
            for s in 0..n {
                acc += op[(j * n + s, k * n + s)];
            }
            out[(j, k)] = acc;
        }
    }
    Ok(out)
}
