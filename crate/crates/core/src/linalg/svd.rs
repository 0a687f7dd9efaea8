//! Singular value decomposition by one-sided (Hestenes) Jacobi sweeps.
//!
//! One-sided Jacobi orthogonalizes the columns of the working matrix with
//! unitary right rotations, which preserves high relative accuracy for the
//! small singular values the kernel-space analysis depends on. The right
//! rotations are accumulated into `V`; at convergence the column norms are
//! the singular values and the normalized columns form `U`.

use super::eig::rotate_columns;
use super::{CMatrix, CVector, C64, ZERO};
use crate::error::{NiqsError, Result};

const MAX_SWEEPS: usize = 128;

/// `a = U diag(sigma) V^dagger` with `sigma` descending. `sigma` and the
/// columns of `u` are padded with zeros past the rank; `v` is square and
/// unitary.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(a: &CMatrix) -> Result<Svd> {
    let rows = a.rows();
    let cols = a.cols();
    let mut w = a.clone();
    let mut v = CMatrix::identity(cols);
    // Columns whose correlation sits at rounding level relative to the
    // whole matrix are converged; without the absolute floor, pairs of
    // noise-level columns can cycle forever.
    let scale = a.frobenius_norm();
    let floor = 1e-30 * scale * scale + f64::MIN_POSITIVE;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = ZERO;
                for r in 0..rows {
                    let xp = w[(r, p)];
                    let xq = w[(r, q)];
                    app += xp.norm_sqr();
                    aqq += xq.norm_sqr();
                    apq += xp.conj() * xq;
                }
                let g = apq.norm();
                if g <= 1e-15 * (app * aqq).sqrt() + floor {
                    continue;
                }
                rotated = true;
                let u_phase = apq / C64::new(g, 0.0);
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                let c = C64::new(cth, 0.0);
                let s = C64::new(sth, 0.0) * u_phase;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(NiqsError::NoConvergence(MAX_SWEEPS));
    }

    // Column norms are the singular values; sort descending.
    let norms: Vec<f64> = (0..cols)
        .map(|c| (0..rows).map(|r| w[(r, c)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let mut u = CMatrix::zeros(rows, cols);
    let mut v_sorted = CMatrix::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    for (new_c, &old_c) in order.iter().enumerate() {
        let n = norms[old_c];
        sigma.push(n);
        if n > 0.0 {
            for r in 0..rows {
                u[(r, new_c)] = w[(r, old_c)] / C64::new(n, 0.0);
            }
        }
        for r in 0..cols {
            v_sorted[(r, new_c)] = v[(r, old_c)];
        }
    }
    Ok(Svd { u, sigma, v: v_sorted })
}

/// Singular values of `a` in descending order, `min(rows, cols)` of them.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    let k = a.rows().min(a.cols());
    let mut s = svd(a)?.sigma;
    s.truncate(k);
    Ok(s)
}

/// Largest singular value (operator 2-norm).
pub fn spectral_norm(a: &CMatrix) -> Result<f64> {
    Ok(svd(a)?.sigma.first().copied().unwrap_or(0.0))
}

/// Orthonormal basis of the right null space of `a`: every returned `v`
/// satisfies `||a v|| <= tol_rank * sigma_max`. The rank decision compares
/// singular values against `tol_rank * sigma_max`; a numerically zero matrix
/// yields the full standard basis image.
pub fn null_space(a: &CMatrix, tol_rank: f64) -> Result<Vec<CVector>> {
    let dec = svd(a)?;
    let sigma_max = dec.sigma.first().copied().unwrap_or(0.0);
    let thr = tol_rank * sigma_max;
    let mut out = Vec::new();
    for (i, &s) in dec.sigma.iter().enumerate() {
        if s <= thr {
            out.push(dec.v.col_vector(i).canonical_phase(1e-12));
        }
    }
    Ok(out)
}
