//! Feasibility analysis: witness pairs, kernel-space decomposition, and the
//! independence criterion.
//!
//! A witness is a pair of unit probe vectors `(chi, psi_d')` whose partial
//! contraction of `D` is proportional to the object identity,
//! `<chi| D |psi_d'> = c I`. Witnesses are necessary for a nondistortion
//! interrogation; sufficiency additionally requires `|psi_d'> - c |chi>` to
//! be linearly independent of the other scattering directions, which the
//! kernel-space decomposition exposes.

mod search;

pub use search::{
    find_witness, grid_oracle, GridOracleReport, WitnessSearchConfig, WitnessSearchOutcome,
};

use crate::error::{NiqsError, Result};
use crate::linalg::{herm_eig, orthonormal_completion, CMatrix, CVector, Tolerances, C64};
use crate::model::ContractionOperator;

/// Magnitude below which a witness constant counts as zero (the
/// absorber-like regime where `chi` carries no scattered amplitude).
pub const C_ZERO_TOL: f64 = 1e-9;

/// A certified witness pair.
#[derive(Debug, Clone)]
pub struct NiqsWitness {
    /// Unit vector in the interacting probe space; the success projector's
    /// component inside the box arm.
    pub chi: CVector,
    /// Unit vector in the interacting probe space: the free-evolved probe
    /// component entering the box.
    pub psi_d: CVector,
    /// Proportionality constant of the partial contraction.
    pub c: C64,
    /// Frobenius norm of `<chi| D |psi_d> - c I`.
    pub residual: f64,
}

impl NiqsWitness {
    pub fn new(chi: CVector, psi_d: CVector, c: C64, residual: f64) -> Result<Self> {
        for (name, v) in [("chi", &chi), ("psi_d", &psi_d)] {
            if (v.norm() - 1.0).abs() > 1e-8 {
                return Err(NiqsError::InvalidConfig(format!("witness {name} must be unit")));
            }
        }
        if c.norm() > 1.0 + 1e-8 {
            return Err(NiqsError::InvalidConfig(format!(
                "witness constant |c| = {} exceeds 1",
                c.norm()
            )));
        }
        Ok(NiqsWitness { chi, psi_d, c, residual })
    }
}

/// Evaluate a candidate pair: returns `(c, residual)` with
/// `c = Tr(<chi|D|psi_d>)/n` and the Frobenius distance from `c I`.
pub fn witness_residual(
    d: &ContractionOperator,
    chi: &CVector,
    psi_d: &CVector,
) -> (C64, f64) {
    let n = d.object_dim();
    let m = d.partial_contraction(chi, psi_d);
    let c = m.trace() / C64::new(n as f64, 0.0);
    let mut dev = 0.0f64;
    for r in 0..n {
        for col in 0..n {
            let expect = if r == col { c } else { C64::new(0.0, 0.0) };
            dev += (m[(r, col)] - expect).norm_sqr();
        }
    }
    (c, dev.sqrt())
}

/// The kernel-space structure induced by a witness.
///
/// `q_ops[i]` is the positive semidefinite probe-space operator obtained by
/// tracing the object out of `D |psi_d'>|i><i|<psi_d'| D^dagger`. The joint
/// kernel `K` of all `q_ops` collects probe directions the scattered wave
/// can never reach; its orthogonal complement `Kbar` (dimension `l`) is
/// spanned by `kbar_basis` with `chi` as the first element whenever `Kbar`
/// is nontrivial.
#[derive(Debug, Clone)]
pub struct KernelDecomposition {
    pub q_ops: Vec<CMatrix>,
    /// Orthonormal basis of `Kbar`; `chi` first when `chi_in_basis`.
    pub kbar_basis: Vec<CVector>,
    /// Dimension of `Kbar`.
    pub l: usize,
    /// Whether the basis starts with the (projected) witness vector. False
    /// only in the absorber-like case `l = 0`.
    pub chi_in_basis: bool,
    /// Effective witness constant after projecting `chi` into `Kbar`.
    pub c: C64,
    /// Norm of the component of the original `chi` that lay outside `Kbar`.
    pub chi_projection_deficit: f64,
    /// Orthonormal basis of the kernel `K` itself.
    pub kernel_basis: Vec<CVector>,
}

impl KernelDecomposition {
    /// The witness direction inside `Kbar`, when it exists.
    pub fn chi(&self) -> Option<&CVector> {
        if self.chi_in_basis {
            self.kbar_basis.first()
        } else {
            None
        }
    }

    /// The scattering directions `chi_1 .. chi_{l-1}` orthogonal to `chi`.
    pub fn scattering(&self) -> &[CVector] {
        if self.chi_in_basis {
            &self.kbar_basis[1..]
        } else {
            &self.kbar_basis
        }
    }
}

/// Build the `Q` operators and the `Kbar` basis for an accepted witness.
///
/// The joint kernel is computed as the null space of the sum of the `Q`
/// operators; each summand is positive semidefinite, so the intersection of
/// the individual kernels equals the kernel of the sum and one
/// eigendecomposition suffices.
pub fn kernel_decomposition(
    d: &ContractionOperator,
    w: &NiqsWitness,
    tol: &Tolerances,
) -> Result<KernelDecomposition> {
    let m = d.probe_dim();
    let n = d.object_dim();

    let mut q_ops = Vec::with_capacity(n);
    let mut q_sum = CMatrix::zeros(m, m);
    for i in 0..n {
        let v = d.apply_product(&w.psi_d, &CVector::basis(n, i));
        let mut q = CMatrix::zeros(m, m);
        for j in 0..m {
            for k in 0..m {
                let mut acc = C64::new(0.0, 0.0);
                for s in 0..n {
                    acc += v[j * n + s] * v[k * n + s].conj();
                }
                q[(j, k)] = acc;
            }
        }
        q_sum = q_sum.add(&q);
        q_ops.push(q);
    }

    let eig = herm_eig(&q_sum, tol.herm.max(1e-8))?;
    let lambda_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let thr = tol.rank * lambda_max;
    let mut kernel_basis = Vec::new();
    let mut kbar_vecs = Vec::new();
    for (i, &lambda) in eig.values.iter().enumerate() {
        if lambda.abs() <= thr || lambda_max == 0.0 {
            kernel_basis.push(eig.eigenvector(i));
        } else {
            kbar_vecs.push(eig.eigenvector(i));
        }
    }
    let l = kbar_vecs.len();

    // Internal consistency: <chi| sum Q |chi> = n|c|^2 + residual^2, so an
    // accepted witness with c != 0 must see at least n|c|^2 of weight.
    let c_mag = w.c.norm();
    if c_mag > C_ZERO_TOL {
        let weight = w.chi.inner(&q_sum.mul_vec(&w.chi)).re;
        let bound = (n as f64) * c_mag * c_mag;
        if weight < bound - 1e-7 * bound.max(1.0) {
            return Err(NiqsError::ChiOutsideKbar(format!(
                "<chi|sum Q|chi> = {weight:.3e} below n|c|^2 = {bound:.3e}"
            )));
        }
    }

    if l == 0 {
        // Absorber-like: the scattered wave vanishes identically, so Kbar is
        // trivial and the decomposition carries no basis at all.
        return Ok(KernelDecomposition {
            q_ops,
            kbar_basis: Vec::new(),
            l: 0,
            chi_in_basis: false,
            c: C64::new(0.0, 0.0),
            chi_projection_deficit: w.chi.norm(),
            kernel_basis,
        });
    }

    // Project chi into Kbar. For c != 0 the projection is the whole vector
    // up to the witness residual; for c = 0 a nonzero projection still
    // admits the construction, while a vanishing one leaves nothing to seed
    // the basis with.
    let mut chi_proj = CVector::zeros(m);
    for b in &kbar_vecs {
        chi_proj.axpy(b.inner(&w.chi), b);
    }
    let proj_norm = chi_proj.norm();
    let deficit = w.chi.sub(&chi_proj).norm();
    if proj_norm <= tol.dep {
        return Err(NiqsError::ChiOutsideKbar(format!(
            "projection of chi onto Kbar has norm {proj_norm:.3e}"
        )));
    }
    let chi_use = chi_proj.scale(C64::new(1.0 / proj_norm, 0.0));
    let c_eff = w.c / C64::new(proj_norm, 0.0);

    let kbar_basis = orthonormal_completion(&[chi_use], &kbar_vecs, tol.dep);
    if kbar_basis.len() != l {
        return Err(NiqsError::ChiOutsideKbar(format!(
            "Kbar basis has {} vectors, expected {l}",
            kbar_basis.len()
        )));
    }

    Ok(KernelDecomposition {
        q_ops,
        kbar_basis,
        l,
        chi_in_basis: true,
        c: c_eff,
        chi_projection_deficit: deficit,
        kernel_basis,
    })
}

/// The scattered state expanded over the `Kbar` basis.
#[derive(Debug, Clone)]
pub struct ActionDecomposition {
    /// Coefficient of the `|chi>|psi_S>` component.
    pub c: C64,
    /// Object-space components `|m_{S(j)}>` carried by the scattering
    /// directions.
    pub scattered: Vec<CVector>,
    /// Norm of the part of `D|psi_d'>|psi_S>` the basis failed to absorb.
    pub residual: f64,
}

/// Expand `D |psi_d'>|psi_S>` as `c |chi>|psi_S> + sum_j |chi_j>|m_{S(j)}>`
/// and verify the expansion reproduces the scattered state.
pub fn decompose_action(
    d: &ContractionOperator,
    w: &NiqsWitness,
    kd: &KernelDecomposition,
    psi_s: &CVector,
    tol_residual: f64,
) -> Result<ActionDecomposition> {
    let n = d.object_dim();
    if psi_s.dim() != n {
        return Err(NiqsError::DimensionMismatch(format!(
            "object state must have dimension {n}"
        )));
    }
    let full = d.apply_product(&w.psi_d, psi_s);
    let mut recon = CVector::zeros(full.dim());
    if let Some(chi) = kd.chi() {
        let term = chi.tensor(psi_s).scale(kd.c);
        recon = recon.add(&term);
    }
    let mut scattered = Vec::new();
    for chi_j in kd.scattering() {
        let m_j = d.partial_contraction(chi_j, &w.psi_d).mul_vec(psi_s);
        recon = recon.add(&chi_j.tensor(&m_j));
        scattered.push(m_j);
    }
    let residual = full.sub(&recon).norm();
    if residual > tol_residual {
        return Err(NiqsError::DecompositionResidual(residual));
    }
    Ok(ActionDecomposition { c: kd.c, scattered, residual })
}

/// Outcome of the independence criterion.
#[derive(Debug, Clone, Copy)]
pub struct IndependenceVerdict {
    pub feasible: bool,
    /// Norm of `(|psi_d'> - c|chi>)` after removing its components along the
    /// scattering directions.
    pub independence_margin: f64,
}

/// Decide feasibility: the residual direction `|psi_d'> - c |chi>` must be
/// linearly independent of the scattering directions for a success
/// projector to exist.
pub fn independence_check(
    w: &NiqsWitness,
    kd: &KernelDecomposition,
    tol_dep: f64,
) -> IndependenceVerdict {
    let mut r = w.psi_d.clone();
    if let Some(chi) = kd.chi() {
        r.axpy(-kd.c, chi);
    }
    for chi_j in kd.scattering() {
        let coeff = chi_j.inner(&r);
        r.axpy(-coeff, chi_j);
    }
    let margin = r.norm();
    IndependenceVerdict { feasible: margin > tol_dep, independence_margin: margin }
}

/// Orthonormal basis completion helper shared with the projector module.
pub(crate) fn standard_basis(dim: usize) -> Vec<CVector> {
    (0..dim).map(|i| CVector::basis(dim, i)).collect()
}

/// Re-express a candidate pair in canonical form: `psi_d` phase-fixed,
/// `chi` rotated so `c` is real nonnegative. Returns `None` when either
/// vector has no usable norm.
pub fn canonicalize_pair(
    d: &ContractionOperator,
    chi: &CVector,
    psi_d: &CVector,
) -> Option<NiqsWitness> {
    let psi = psi_d.normalized(1e-14)?.canonical_phase(1e-12);
    let mut chi = chi.normalized(1e-14)?;
    let (c0, _) = witness_residual(d, &chi, &psi);
    if c0.norm() > 1e-13 {
        chi = chi.scale(c0 / C64::new(c0.norm(), 0.0));
    } else {
        chi = chi.canonical_phase(1e-12);
    }
    let (c, residual) = witness_residual(d, &chi, &psi);
    NiqsWitness::new(chi, psi, c, residual).ok()
}
