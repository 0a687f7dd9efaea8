//! Shared helpers for the integration and acceptance suites.

#![allow(dead_code)]

use niqs::conditions::{
    canonicalize_pair, kernel_decomposition, independence_check, KernelDecomposition, NiqsWitness,
};
use niqs::linalg::{orthonormal_completion, spectral_norm, CMatrix, CVector, Tolerances, C64};
use niqs::model::{ContractionOperator, Dynamics, InteractionModel, ProbeSpec, SpaceLayout};
use niqs::projector::{embed_interacting, embed_reference, MeasurementPlan};
use niqs::rng::{random_unit_vector, standard_normal, stream_rng};

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A contraction with a planted witness, plus everything needed to run the
/// downstream pipeline on it.
pub struct PlantedModel {
    pub model: InteractionModel,
    pub d: ContractionOperator,
    pub witness: NiqsWitness,
    pub kd: KernelDecomposition,
    pub probe: ProbeSpec,
}

/// Random contraction of the given shape: a dense random matrix scaled just
/// inside the unit spectral ball.
pub fn random_contraction(m: usize, n: usize, seed: u64) -> ContractionOperator {
    let mut rng = stream_rng(seed, 0);
    let dim = m * n;
    let entries: Vec<C64> = (0..dim * dim)
        .map(|_| c64(standard_normal(&mut rng), standard_normal(&mut rng)))
        .collect();
    let mat = CMatrix::new(dim, dim, entries).unwrap();
    let sigma = spectral_norm(&mat).unwrap();
    let mat = mat.scale(c64(1.0 / (sigma * (1.0 + 1e-12)), 0.0));
    ContractionOperator::new(mat, m, n, 1e-10).unwrap()
}

/// Build a random feasible model by embedding a known witness: the action
/// on the witness probe vector is `c0 |chi0>` on the object identity plus
/// scattering into directions orthogonal to `chi0`; all other probe sectors
/// scatter arbitrarily.
pub fn random_feasible_model(m: usize, n: usize, m_r: usize, seed: u64) -> PlantedModel {
    for attempt in 0..64u64 {
        if let Some(planted) = try_feasible_model(m, n, m_r, seed, attempt) {
            return planted;
        }
    }
    panic!("no feasible model found for m={m}, n={n} at seed {seed}");
}

fn try_feasible_model(
    m: usize,
    n: usize,
    m_r: usize,
    seed: u64,
    attempt: u64,
) -> Option<PlantedModel> {
    let mut rng = stream_rng(seed, 1000 + attempt);
    let tol = Tolerances::default();
    let dim = m * n;

    let psi0 = random_unit_vector(&mut rng, m);
    let chi0 = random_unit_vector(&mut rng, m);
    let c0 = 0.3 + 0.6 * rng_f64(&mut rng);

    // Orthonormal frames extending the witness vectors.
    let std_basis: Vec<CVector> = (0..m).map(|i| CVector::basis(m, i)).collect();
    let psi_frame = orthonormal_completion(std::slice::from_ref(&psi0), &std_basis, 1e-10);
    let chi_frame = orthonormal_completion(std::slice::from_ref(&chi0), &std_basis, 1e-10);

    let mut mat = CMatrix::zeros(dim, dim);
    // Column group for the witness sector psi0 (x) e_s.
    for s in 0..n {
        let mut image = chi0.tensor(&CVector::basis(n, s)).scale(c64(c0, 0.0));
        for x_t in &chi_frame[1..] {
            // scattering component: x_t (x) (A_t e_s) with random A_t
            let a_col = CVector::new(
                (0..n)
                    .map(|_| {
                        c64(
                            0.35 * standard_normal(&mut rng),
                            0.35 * standard_normal(&mut rng),
                        )
                    })
                    .collect(),
            )
            .unwrap();
            image = image.add(&x_t.tensor(&a_col));
        }
        add_outer(&mut mat, &image, &psi0.tensor(&CVector::basis(n, s)));
    }
    // Arbitrary action on the remaining probe sectors.
    for p_k in &psi_frame[1..] {
        for s in 0..n {
            let image = CVector::new(
                (0..dim)
                    .map(|_| {
                        c64(
                            0.4 * standard_normal(&mut rng),
                            0.4 * standard_normal(&mut rng),
                        )
                    })
                    .collect(),
            )
            .unwrap();
            add_outer(&mut mat, &image, &p_k.tensor(&CVector::basis(n, s)));
        }
    }

    // Compress inside the unit ball; the witness constant scales along.
    let sigma = spectral_norm(&mat).unwrap();
    let mat = if sigma > 1.0 {
        mat.scale(c64(1.0 / (sigma * (1.0 + 1e-12)), 0.0))
    } else {
        mat
    };

    let d = ContractionOperator::new(mat, m, n, 1e-10).ok()?;
    let witness = canonicalize_pair(&d, &chi0, &psi0)?;
    if witness.residual > 1e-10 || witness.c.norm() < 0.05 {
        return None;
    }
    let kd = kernel_decomposition(&d, &witness, &tol).ok()?;
    let verdict = independence_check(&witness, &kd, 1e-8);
    if !verdict.feasible || verdict.independence_margin < 0.02 {
        return None;
    }

    let layout = SpaceLayout::compact(n, m, m_r).unwrap();
    let model =
        InteractionModel::new(layout, Dynamics::DirectD(d.matrix().clone()), 1.0).unwrap();

    let a_sqr = 0.2 + 0.6 * rng_f64(&mut rng);
    let alpha = c64(a_sqr.sqrt(), 0.0);
    let beta = c64((1.0 - a_sqr).sqrt(), 0.0);
    let psi_r = random_unit_vector(&mut rng, m_r);
    let probe = ProbeSpec::new(alpha, beta, psi_r, witness.psi_d.clone()).ok()?;

    Some(PlantedModel { model, d, witness, kd, probe })
}

fn add_outer(mat: &mut CMatrix, image: &CVector, basis_vec: &CVector) {
    for r in 0..image.dim() {
        for c in 0..basis_vec.dim() {
            let v = image[r] * basis_vec[c].conj();
            if v != c64(0.0, 0.0) {
                mat[(r, c)] += v;
            }
        }
    }
}

fn rng_f64(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    use rand::Rng;
    rng.random::<f64>()
}

/// The success amplitude obtained by contracting the fully evolved joint
/// state with the success direction, for one object state. Independent of
/// the plan's cached value.
pub fn analytic_success_amplitude(
    d: &ContractionOperator,
    plan: &MeasurementPlan,
    psi_s: &CVector,
) -> f64 {
    let n = d.object_dim();
    let probe_dim = plan.probe_dim();
    let e_r = embed_reference(&plan.psi_r_prime, plan.m);
    let mut joint = CVector::zeros(probe_dim * n);
    for p in 0..probe_dim {
        let a = plan.alpha * e_r[p];
        for s in 0..n {
            joint[p * n + s] += a * psi_s[s];
        }
    }
    let scattered = d.apply_product(&plan.psi_d_prime, psi_s);
    for j in 0..plan.m {
        for s in 0..n {
            joint[(plan.m_r + j) * n + s] += plan.beta * scattered[j * n + s];
        }
    }
    let mut object = CVector::zeros(n);
    for p in 0..probe_dim {
        let coeff = plan.psi_i[p].conj();
        for s in 0..n {
            object[s] += coeff * joint[p * n + s];
        }
    }
    object.norm()
}

/// Embedding helper mirroring the projector convention, re-exported for
/// assertions in the suites.
pub fn embed_d(v: &CVector, m_r: usize) -> CVector {
    embed_interacting(v, m_r)
}
