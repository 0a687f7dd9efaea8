//! Gram-Schmidt orthonormalization with re-orthogonalization.

use super::{CVector, C64};
use crate::error::{NiqsError, Result};

/// Orthonormalize `seed` in order, preserving the span.
///
/// Uses two projection passes per vector (CGS2), which keeps the output
/// Gram matrix at the identity to near machine precision even for badly
/// conditioned inputs. A vector whose residual after projection drops to
/// `tol_dep` times its own norm is reported as `DependentVector` with its
/// index; callers decide whether dependence is fatal.
pub fn gram_schmidt(seed: &[CVector], tol_dep: f64) -> Result<Vec<CVector>> {
    let mut out: Vec<CVector> = Vec::with_capacity(seed.len());
    for (idx, v) in seed.iter().enumerate() {
        match orthonormalize_against(v, &out, tol_dep) {
            Some(q) => out.push(q),
            None => return Err(NiqsError::DependentVector(idx)),
        }
    }
    Ok(out)
}

/// Extend `basis` (assumed orthonormal) by the candidates in order, skipping
/// dependent ones, until the space is exhausted or candidates run out.
/// Returns the full basis including the original vectors.
pub fn orthonormal_completion(
    basis: &[CVector],
    candidates: &[CVector],
    tol_dep: f64,
) -> Vec<CVector> {
    let mut out: Vec<CVector> = basis.to_vec();
    let dim = basis
        .first()
        .map(|v| v.dim())
        .or_else(|| candidates.first().map(|v| v.dim()))
        .unwrap_or(0);
    for v in candidates {
        if out.len() == dim {
            break;
        }
        if let Some(q) = orthonormalize_against(v, &out, tol_dep) {
            out.push(q);
        }
    }
    out
}

fn orthonormalize_against(v: &CVector, basis: &[CVector], tol_dep: f64) -> Option<CVector> {
    let vnorm = v.norm();
    if vnorm == 0.0 {
        return None;
    }
    let mut r = v.clone();
    for _pass in 0..2 {
        for q in basis {
            let coeff = q.inner(&r);
            r.axpy(-coeff, q);
        }
    }
    let rnorm = r.norm();
    if rnorm <= tol_dep * vnorm {
        return None;
    }
    Some(r.scale(C64::new(1.0 / rnorm, 0.0)).canonical_phase(1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn already_orthonormal_input_is_unchanged() {
        let seed = vec![
            CVector::new(vec![ONE, ZERO]).unwrap(),
            CVector::new(vec![ZERO, ONE]).unwrap(),
        ];
        let out = gram_schmidt(&seed, 1e-8).unwrap();
        assert_eq!(out, seed);
    }

    #[test]
    fn second_vector_is_projected_out() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let seed = vec![
            CVector::new(vec![ONE, ZERO]).unwrap(),
            CVector::new(vec![c(s, 0.0), c(s, 0.0)]).unwrap(),
        ];
        let out = gram_schmidt(&seed, 1e-8).unwrap();
        assert!((out[0][0] - ONE).norm() < 1e-15);
        assert!((out[1][0]).norm() < 1e-14);
        assert!((out[1][1] - ONE).norm() < 1e-14);
    }

    #[test]
    fn exact_repeat_is_dependent() {
        let seed = vec![
            CVector::new(vec![ONE, ZERO]).unwrap(),
            CVector::new(vec![ONE, ZERO]).unwrap(),
        ];
        match gram_schmidt(&seed, 1e-8) {
            Err(NiqsError::DependentVector(1)) => {}
            other => panic!("expected DependentVector(1), got {other:?}"),
        }
    }

    #[test]
    fn output_gram_matrix_is_identity() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let dim = 6;
        let seed: Vec<CVector> = (0..dim)
            .map(|_| {
                CVector::new(
                    (0..dim)
                        .map(|_| c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let out = gram_schmidt(&seed, 1e-8).unwrap();
        for (i, a) in out.iter().enumerate() {
            for (j, b) in out.iter().enumerate() {
                let g = a.inner(b);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(expect, 0.0)).norm() < 1e-10, "gram[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn completion_fills_the_space() {
        let basis = vec![CVector::new(vec![
            c(0.6, 0.0),
            c(0.8, 0.0),
            ZERO,
        ])
        .unwrap()];
        let std_basis: Vec<CVector> = (0..3).map(|i| CVector::basis(3, i)).collect();
        let full = orthonormal_completion(&basis, &std_basis, 1e-8);
        assert_eq!(full.len(), 3);
        for (i, a) in full.iter().enumerate() {
            for (j, b) in full.iter().enumerate() {
                let g = a.inner(b);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }
}
