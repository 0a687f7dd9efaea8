//! Hermitian eigendecomposition by cyclic complex Jacobi rotations, and the
//! matrix exponential built on top of it.

use super::{CMatrix, CVector, C64, ZERO};
use crate::error::{NiqsError, Result};

const MAX_SWEEPS: usize = 128;

/// Eigendecomposition of a Hermitian matrix: `h = V diag(values) V^dagger`,
/// eigenvalues ascending, eigenvector columns phase-canonicalized.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn eigenvector(&self, i: usize) -> CVector {
        self.vectors.col_vector(i)
    }
}

/// Diagonalize a Hermitian matrix with cyclic Jacobi sweeps.
///
/// Each off-diagonal pivot `(p, q)` is first rotated to a real value by a
/// diagonal phase, then annihilated by the standard symmetric Jacobi
/// rotation. Convergence is quadratic; failure to converge within the sweep
/// budget is reported rather than returning junk.
pub fn herm_eig(h: &CMatrix, tol_herm: f64) -> Result<HermEig> {
    h.check_hermitian(tol_herm)?;
    let n = h.rows();
    let mut a = h.clone();
    // Symmetrize exactly so rounding in the input cannot bias the sweep.
    for p in 0..n {
        a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
        for q in (p + 1)..n {
            let avg = (a[(p, q)] + a[(q, p)].conj()) * C64::new(0.5, 0.0);
            a[(p, q)] = avg;
            a[(q, p)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);

    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            return Ok(finish(a, v));
        }
        let _ = sweep;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                // Phase that makes the pivot real: conjugating the pair
                // (p, q) by diag(1, u_bar) with u = apq / |apq|.
                let u = apq / C64::new(r, 0.0);
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                // Column rotation J = diag(1, conj(u)) * G with
                // G = [[c, s], [-s, c]]: columns p,q of A and V get
                // col_p' = c*col_p - s*conj(u)*col_q
                // col_q' = s*u*col_p + c*... applied as below; rows of A get
                // the conjugate-transposed update.
                let cpx = C64::new(cth, 0.0);
                let spx_p = C64::new(sth, 0.0) * u; // multiplies col_q into col_p side
                rotate_columns(&mut a, p, q, cpx, spx_p);
                rotate_rows(&mut a, p, q, cpx, spx_p);
                rotate_columns(&mut v, p, q, cpx, spx_p);
            }
        }
    }
    Err(NiqsError::NoConvergence(MAX_SWEEPS))
}

/// col_p' = c*col_p - conj(s)*col_q ; col_q' = s*col_p + c*col_q
/// with c real. This is right-multiplication by the unitary
/// [[c, s], [-conj(s), c]]^dagger-style 2x2 block; the same routine serves
/// the one-sided SVD sweeps.
pub(super) fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, c: C64, s: C64) {
    for r in 0..m.rows() {
        let xp = m[(r, p)];
        let xq = m[(r, q)];
        m[(r, p)] = c * xp - s.conj() * xq;
        m[(r, q)] = s * xp + c * xq;
    }
}

fn rotate_rows(m: &mut CMatrix, p: usize, q: usize, c: C64, s: C64) {
    for col in 0..m.cols() {
        let xp = m[(p, col)];
        let xq = m[(q, col)];
        m[(p, col)] = c * xp - s * xq;
        m[(q, col)] = s.conj() * xp + c * xq;
    }
}

fn finish(a: CMatrix, v: CMatrix) -> HermEig {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let mut values = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        values.push(diag[old_col]);
        let col = v.col_vector(old_col).canonical_phase(1e-12);
        for r in 0..n {
            vectors[(r, new_col)] = col[r];
        }
    }
    HermEig { values, vectors }
}

/// `exp(scale * h)` for Hermitian `h`, via eigendecomposition. The result is
/// unitary (within tolerance) whenever `scale` is purely imaginary.
pub fn herm_exp(h: &CMatrix, scale: C64, tol_herm: f64) -> Result<CMatrix> {
    let eig = herm_eig(h, tol_herm)?;
    let n = h.rows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in eig.values.iter().enumerate() {
        let f = (scale * C64::new(lambda, 0.0)).exp();
        if !(f.re.is_finite() && f.im.is_finite()) {
            return Err(NiqsError::NonFinite("matrix exponential"));
        }
        for r in 0..n {
            let vr = eig.vectors[(r, k)];
            if vr == ZERO {
                continue;
            }
            let fvr = f * vr;
            for c in 0..n {
                out[(r, c)] += fvr * eig.vectors[(c, k)].conj();
            }
        }
    }
    Ok(out)
}
