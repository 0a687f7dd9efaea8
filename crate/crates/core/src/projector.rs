//! Success projector construction and optimization.
//!
//! Feasibility gives a recipe: orthonormalize the scattering directions,
//! the empty-box probe direction, and the witness combination in that order.
//! The last vector produced is the success direction `psi_I`; projecting the
//! scattered joint state onto it leaves the object in its freely evolved
//! state with an amplitude `Delta` that does not depend on the object state.
//! The success probability `|Delta|^2` is then optimized over the probe
//! split `alpha`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conditions::{standard_basis, KernelDecomposition, NiqsWitness};
use crate::error::{NiqsError, Result};
use crate::linalg::{gram_schmidt, orthonormal_completion, CVector, Tolerances, C64};
use crate::model::{FreeEvolution, ProbeSpec};

/// Embed an interacting-probe vector into the full probe space
/// (reference coordinates first).
pub fn embed_interacting(v: &CVector, m_r: usize) -> CVector {
    let mut out = CVector::zeros(m_r + v.dim());
    for i in 0..v.dim() {
        out[m_r + i] = v[i];
    }
    out
}

/// Embed a reference-arm vector into the full probe space.
pub fn embed_reference(v: &CVector, m: usize) -> CVector {
    let mut out = CVector::zeros(v.dim() + m);
    for i in 0..v.dim() {
        out[i] = v[i];
    }
    out
}

/// The measurement plan: success vector, the orthonormalization
/// intermediates, the success amplitude, and a complete deterministic
/// measurement basis for the probe space.
#[derive(Debug, Clone)]
pub struct MeasurementPlan {
    /// Success direction in the full probe space.
    pub psi_i: CVector,
    /// Intermediate vector produced from the empty-box direction.
    pub psi_tilde: CVector,
    /// Probe direction reached when the box is empty.
    pub p_e_direction: CVector,
    /// Success amplitude.
    pub delta: C64,
    /// `|delta|^2`.
    pub prob: f64,
    /// Complete orthonormal measurement basis; index 0 is `psi_i`, index 1
    /// is the empty-box direction.
    pub basis_o: Vec<CVector>,
    pub m_r: usize,
    pub m: usize,
    pub alpha: C64,
    pub beta: C64,
    /// Free-evolved reference vector (reference coordinates).
    pub psi_r_prime: CVector,
    /// Free-evolved interacting vector; equals the witness vector.
    pub psi_d_prime: CVector,
    /// Witness direction inside the interacting space, absent for
    /// absorber-like plans.
    pub chi: Option<CVector>,
    /// Effective witness constant.
    pub c: C64,
    /// Scattering directions (interacting coordinates).
    pub scattering: Vec<CVector>,
    /// `alpha |psi_r'> + c beta |chi>` embedded: the vector whose overlap
    /// with `psi_i` is the success amplitude.
    pub success_source: CVector,
}

impl MeasurementPlan {
    pub fn probe_dim(&self) -> usize {
        self.m_r + self.m
    }

    /// Scattering directions embedded in the full probe space.
    pub fn scattering_embedded(&self) -> Vec<CVector> {
        self.scattering
            .iter()
            .map(|v| embed_interacting(v, self.m_r))
            .collect()
    }
}

/// Build the measurement plan for an accepted, feasible witness.
///
/// The probe's interacting component must free-evolve into the witness
/// vector; the reference component free-evolves under the same model. The
/// orthonormalization order is fixed: scattering directions first, then the
/// empty-box direction (producing `psi_tilde`), then the witness
/// combination (producing `psi_i`). A `DependentVector` error here means the
/// independence criterion was violated.
pub fn build_plan(
    w: &NiqsWitness,
    kd: &KernelDecomposition,
    probe: &ProbeSpec,
    frees: &FreeEvolution,
    tol: &Tolerances,
) -> Result<MeasurementPlan> {
    let alpha = probe.alpha;
    let beta = probe.beta;
    if alpha.norm() <= 1e-12 {
        return Err(NiqsError::AlphaZero);
    }
    let m_r = probe.psi_r.dim();
    let m = probe.psi_d.dim();
    if w.psi_d.dim() != m {
        return Err(NiqsError::PlanModelMismatch(format!(
            "witness probe dimension {} vs probe spec {}",
            w.psi_d.dim(),
            m
        )));
    }
    if frees.u_probe.rows() != m_r + m {
        return Err(NiqsError::PlanModelMismatch(format!(
            "free evolution acts on dimension {}, probe has {}",
            frees.u_probe.rows(),
            m_r + m
        )));
    }

    // Advance the probe to its primed version and check it matches the
    // witness: the plan is only meaningful for the probe it was built from.
    let evolved = frees.u_probe.mul_vec(&embed_interacting(&probe.psi_d, m_r));
    let mut psi_d_evolved = CVector::zeros(m);
    for i in 0..m {
        psi_d_evolved[i] = evolved[m_r + i];
    }
    if psi_d_evolved.sub(&w.psi_d).norm() > 1e-7 {
        return Err(NiqsError::PlanModelMismatch(
            "probe psi_d does not free-evolve into the witness vector".into(),
        ));
    }
    let evolved_r = frees.u_probe.mul_vec(&embed_reference(&probe.psi_r, m));
    let mut psi_r_prime = CVector::zeros(m_r);
    for i in 0..m_r {
        psi_r_prime[i] = evolved_r[i];
    }

    let pieces = PlanPieces::new(&psi_r_prime, &w.psi_d, kd, m_r);
    let assembled = pieces.assemble(alpha, beta, tol)?;

    Ok(MeasurementPlan {
        psi_i: assembled.psi_i,
        psi_tilde: assembled.psi_tilde,
        p_e_direction: assembled.p_e,
        delta: assembled.delta,
        prob: assembled.prob,
        basis_o: assembled.basis_o,
        m_r,
        m,
        alpha,
        beta,
        psi_r_prime,
        psi_d_prime: w.psi_d.clone(),
        chi: kd.chi().cloned(),
        c: kd.c,
        scattering: kd.scattering().to_vec(),
        success_source: assembled.success_source,
    })
}

/// Embedded, probe-split-independent ingredients of a plan, reused across
/// the optimization grid.
struct PlanPieces {
    e_r: CVector,
    e_d: CVector,
    x: Option<CVector>,
    scattering: Vec<CVector>,
    c: C64,
    dim: usize,
}

struct AssembledPlan {
    psi_i: CVector,
    psi_tilde: CVector,
    p_e: CVector,
    delta: C64,
    prob: f64,
    basis_o: Vec<CVector>,
    success_source: CVector,
}

impl PlanPieces {
    fn new(
        psi_r_prime: &CVector,
        psi_d_prime: &CVector,
        kd: &KernelDecomposition,
        m_r: usize,
    ) -> Self {
        let m = psi_d_prime.dim();
        PlanPieces {
            e_r: embed_reference(psi_r_prime, m),
            e_d: embed_interacting(psi_d_prime, m_r),
            x: kd.chi().map(|chi| embed_interacting(chi, m_r)),
            scattering: kd
                .scattering()
                .iter()
                .map(|v| embed_interacting(v, m_r))
                .collect(),
            c: kd.c,
            dim: m_r + m,
        }
    }

    fn success_source(&self, alpha: C64, beta: C64) -> CVector {
        let mut source = self.e_r.scale(alpha);
        if let Some(x) = &self.x {
            source.axpy(self.c * beta, x);
        }
        source
    }

    fn assemble(&self, alpha: C64, beta: C64, tol: &Tolerances) -> Result<AssembledPlan> {
        let mut p_e = self.e_r.scale(alpha);
        p_e.axpy(beta, &self.e_d);
        let p_e = p_e
            .normalized(1e-12)
            .ok_or_else(|| NiqsError::PlanModelMismatch("empty-box direction vanished".into()))?;

        let source = self.success_source(alpha, beta);
        let norm = source.norm();
        if norm <= 1e-14 {
            return Err(NiqsError::AlphaZero);
        }
        let n2 = source.scale(C64::new(1.0 / norm, 0.0));

        let mut seed = self.scattering.clone();
        seed.push(p_e.clone());
        seed.push(n2);
        let ortho = gram_schmidt(&seed, tol.dep)?;
        let psi_i = ortho.last().expect("nonempty").clone();
        let psi_tilde = ortho[ortho.len() - 2].clone();

        let delta = psi_i.inner(&source);
        let prob = delta.norm_sqr();

        let mut heads = vec![psi_i.clone(), p_e.clone()];
        heads = orthonormal_completion(&heads, &self.scattering, tol.dep);
        let basis_o = orthonormal_completion(&heads, &standard_basis(self.dim), tol.dep);

        Ok(AssembledPlan {
            psi_i,
            psi_tilde,
            p_e,
            delta,
            prob,
            basis_o,
            success_source: source,
        })
    }
}

/// Recompute the success probability from the plan's stored ingredients.
/// Independent of the value cached at construction; the two must agree.
pub fn success_probability(plan: &MeasurementPlan) -> f64 {
    let delta = plan.psi_i.inner(&plan.success_source);
    delta.norm_sqr()
}

/// Grid/refinement settings for the probe-split optimization.
#[derive(Debug, Clone)]
pub struct AlphaGridConfig {
    /// Number of `|alpha|` samples on `[0, 1)`.
    pub alpha_points: usize,
    /// Number of relative-phase samples on `[0, 2 pi)`.
    pub phase_points: usize,
    /// Golden-section iterations per coordinate refinement.
    pub refine_iterations: usize,
    /// Alternating refinement rounds over the two coordinates.
    pub refine_rounds: usize,
}

impl Default for AlphaGridConfig {
    fn default() -> Self {
        AlphaGridConfig {
            alpha_points: 201,
            phase_points: 64,
            refine_iterations: 80,
            refine_rounds: 3,
        }
    }
}

/// One sample of the success-probability landscape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    pub alpha_mag: f64,
    pub phase: f64,
    pub prob: f64,
}

/// Result of optimizing the probe split.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub alpha_opt: C64,
    pub beta_opt: C64,
    pub p_opt: f64,
    /// `|alpha|` sweep at the optimal phase.
    pub scan: Vec<ScanSample>,
}

const ALPHA_FLOOR: f64 = 1e-7;

/// Maximize the success probability over `|alpha| in [0, 1)` and the
/// relative phase of `beta`. Coarse grid, then golden-section refinement on
/// each coordinate in turn. The boundary values are evaluated by continuity
/// just inside the open interval.
pub fn optimize_alpha(
    w: &NiqsWitness,
    kd: &KernelDecomposition,
    psi_r_prime: &CVector,
    m_r: usize,
    grid: &AlphaGridConfig,
    tol: &Tolerances,
) -> OptimizationResult {
    let pieces = PlanPieces::new(psi_r_prime, &w.psi_d, kd, m_r);
    let eval = |a: f64, phase: f64| -> f64 {
        let a = a.clamp(ALPHA_FLOOR, (1.0 - 1e-14_f64).sqrt());
        let b = (1.0 - a * a).max(0.0).sqrt();
        let alpha = C64::new(a, 0.0);
        let beta = C64::from_polar(b, phase);
        match pieces.assemble(alpha, beta, tol) {
            Ok(p) => p.prob,
            Err(_) => 0.0,
        }
    };

    let alphas: Vec<f64> = (0..grid.alpha_points)
        .map(|i| i as f64 / grid.alpha_points as f64)
        .collect();
    let phases: Vec<f64> = (0..grid.phase_points)
        .map(|j| j as f64 * std::f64::consts::TAU / grid.phase_points as f64)
        .collect();

    let samples: Vec<(usize, usize, f64)> = alphas
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, &a)| {
            let eval = &eval;
            phases
                .iter()
                .enumerate()
                .map(move |(j, &p)| (i, j, eval(a, p)))
                .collect::<Vec<_>>()
        })
        .collect();

    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for &(i, j, p) in &samples {
        if p > best.2 {
            best = (i, j, p);
        }
    }
    let (mut a_best, mut phase_best) = (alphas[best.0], phases[best.1]);

    let a_step = 1.0 / grid.alpha_points as f64;
    let phase_step = std::f64::consts::TAU / grid.phase_points as f64;
    for _ in 0..grid.refine_rounds {
        a_best = golden_max(
            |a| eval(a, phase_best),
            (a_best - a_step).max(0.0),
            (a_best + a_step).min(1.0 - 1e-9),
            grid.refine_iterations,
        );
        phase_best = golden_max(
            |p| eval(a_best, p),
            phase_best - phase_step,
            phase_best + phase_step,
            grid.refine_iterations,
        );
    }
    let p_opt = eval(a_best, phase_best);
    let scan = alphas
        .iter()
        .map(|&a| ScanSample { alpha_mag: a, phase: phase_best, prob: eval(a, phase_best) })
        .collect();

    let b = (1.0 - a_best * a_best).max(0.0).sqrt();
    OptimizationResult {
        alpha_opt: C64::new(a_best, 0.0),
        beta_opt: C64::from_polar(b, phase_best),
        p_opt,
        scan,
    }
}

/// Golden-section maximization of a unimodal slice on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iterations: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iterations {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 > f2 {
        x1
    } else {
        x2
    }
}

/// Sample alternative success directions that satisfy the interrogation
/// constraints (orthogonal to the empty-box direction and to every
/// scattering direction) and report the largest success probability seen.
/// The Schmidt-built plan maximizes the probability, so the result never
/// exceeds `plan.prob` beyond tolerance.
pub fn optimality_audit(plan: &MeasurementPlan, trials: usize, seed: u64) -> f64 {
    let mut constrained = vec![plan.p_e_direction.clone()];
    constrained.extend(plan.scattering_embedded());
    audit_subspace(
        &constrained,
        &plan.success_source,
        plan.probe_dim(),
        trials,
        seed,
    )
}

/// Core of the audit, exposed for the degenerate cases: sample unit vectors
/// orthogonal to `constraints` and maximize `|<v|target>|^2`.
pub fn audit_subspace(
    constraints: &[CVector],
    target: &CVector,
    dim: usize,
    trials: usize,
    seed: u64,
) -> f64 {
    let basis = orthonormal_completion(&[], constraints, 1e-10);
    let full = orthonormal_completion(&basis, &standard_basis(dim), 1e-10);
    let free = &full[basis.len()..];
    if free.is_empty() {
        return 0.0;
    }
    // Project the target once; samples only mix inside the free subspace.
    let coeffs: Vec<C64> = free.iter().map(|b| b.inner(target)).collect();
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut overlap = C64::new(0.0, 0.0);
            let mut norm_sqr = 0.0f64;
            for c in &coeffs {
                let z = C64::new(
                    crate::rng::standard_normal(&mut rng),
                    crate::rng::standard_normal(&mut rng),
                );
                norm_sqr += z.norm_sqr();
                overlap += z.conj() * c;
            }
            if norm_sqr <= 1e-300 {
                0.0
            } else {
                overlap.norm_sqr() / norm_sqr
            }
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{
        find_witness, kernel_decomposition, independence_check, WitnessSearchConfig,
    };
    use crate::linalg::{CMatrix, ONE};
    use crate::model::{identity_contraction, ContractionOperator, SpaceLayout};

    fn c64(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn interferometer() -> ContractionOperator {
        let mut d = CMatrix::zeros(4, 4);
        d[(1, 1)] = ONE;
        d[(2, 2)] = ONE;
        ContractionOperator::new(d, 2, 2, 1e-10).unwrap()
    }

    fn x_polarized() -> CVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CVector::from_reals(&[s, s])
    }

    fn interferometer_plan(alpha: f64) -> MeasurementPlan {
        let d = interferometer();
        let chi = x_polarized();
        let w = crate::conditions::canonicalize_pair(&d, &chi, &chi).unwrap();
        let kd = kernel_decomposition(&d, &w, &Tolerances::default()).unwrap();
        let beta = (1.0 - alpha * alpha).sqrt();
        let probe = ProbeSpec::new(
            c64(alpha, 0.0),
            c64(beta, 0.0),
            x_polarized(),
            x_polarized(),
        )
        .unwrap();
        let layout = SpaceLayout::compact(2, 2, 2).unwrap();
        let frees = FreeEvolution::identity(&layout);
        build_plan(&w, &kd, &probe, &frees, &Tolerances::default()).unwrap()
    }

    #[test]
    fn interferometer_plan_matches_hand_construction() {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let plan = interferometer_plan(a);
        // psi_I = beta*(u+ + u-)/sqrt2 - alpha*(l+ + l-)/sqrt2 up to phase
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = (1.0 - a * a).sqrt();
        let expected = CVector::from_reals(&[b * s, b * s, -a * s, -a * s]);
        assert!(
            plan.psi_i.inner(&expected).norm() > 1.0 - 1e-12,
            "psi_I = {:?}",
            plan.psi_i
        );
        assert!((plan.prob - a * a * b * b / 4.0).abs() < 1e-12);
        assert!((plan.prob - 1.0 / 16.0).abs() < 1e-12);
        // orthogonality to the empty-box direction and scattering vectors
        assert!(plan.psi_i.inner(&plan.p_e_direction).norm() < 1e-12);
        for s in &plan.scattering_embedded() {
            assert!(plan.psi_i.inner(s).norm() < 1e-12);
        }
        // the amplitude is recoverable from the interacting components
        // alone: <psi_I| beta (psi_d' - c chi)> = -Delta
        let mut diff = embed_interacting(&plan.psi_d_prime, plan.m_r);
        diff.axpy(-plan.c, &embed_interacting(plan.chi.as_ref().unwrap(), plan.m_r));
        let lhs = plan.psi_i.inner(&diff.scale(plan.beta));
        assert!((lhs + plan.delta).norm() < 1e-12);
        // the measurement basis is a complete orthonormal frame
        assert_eq!(plan.basis_o.len(), plan.probe_dim());
        for (i, u) in plan.basis_o.iter().enumerate() {
            for (j, v) in plan.basis_o.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((u.inner(v) - c64(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn probability_curve_matches_quarter_product() {
        for &asqr in &[0.1, 0.25, 0.5, 0.7, 0.9] {
            let a = f64::sqrt(asqr);
            let plan = interferometer_plan(a);
            let expect = asqr * (1.0 - asqr) / 4.0;
            assert!((plan.prob - expect).abs() < 1e-12, "a^2 = {asqr}");
            assert!((success_probability(&plan) - plan.prob).abs() < 1e-12);
        }
    }

    fn absorber() -> (ContractionOperator, NiqsWitness, KernelDecomposition) {
        let d = ContractionOperator::new(CMatrix::zeros(2, 2), 1, 2, 1e-10).unwrap();
        let chi = CVector::basis(1, 0);
        let w = crate::conditions::canonicalize_pair(&d, &chi, &chi).unwrap();
        let kd = kernel_decomposition(&d, &w, &Tolerances::default()).unwrap();
        (d, w, kd)
    }

    #[test]
    fn absorber_plan_is_the_interaction_free_construction() {
        let (_, w, kd) = absorber();
        let a = 0.6f64;
        let b = 0.8f64;
        let probe = ProbeSpec::new(
            c64(a, 0.0),
            c64(b, 0.0),
            CVector::basis(1, 0),
            CVector::basis(1, 0),
        )
        .unwrap();
        let layout = SpaceLayout::compact(2, 1, 1).unwrap();
        let frees = FreeEvolution::identity(&layout);
        let plan = build_plan(&w, &kd, &probe, &frees, &Tolerances::default()).unwrap();
        // psi_I = beta |psi_r'> - alpha |psi_d'> up to phase
        let expected = CVector::from_reals(&[b, -a]);
        assert!(plan.psi_i.inner(&expected).norm() > 1.0 - 1e-12);
        assert!((plan.prob - a * a * b * b).abs() < 1e-13);
    }

    #[test]
    fn identity_interaction_plan_construction_fails_dependent() {
        let d = identity_contraction(2, 2);
        let psi = x_polarized();
        let w = crate::conditions::canonicalize_pair(&d, &psi, &psi).unwrap();
        let kd = kernel_decomposition(&d, &w, &Tolerances::default()).unwrap();
        assert!(!independence_check(&w, &kd, 1e-8).feasible);
        let probe = ProbeSpec::balanced(x_polarized(), x_polarized()).unwrap();
        let layout = SpaceLayout::compact(2, 2, 2).unwrap();
        let frees = FreeEvolution::identity(&layout);
        match build_plan(&w, &kd, &probe, &frees, &Tolerances::default()) {
            Err(NiqsError::DependentVector(_)) => {}
            other => panic!("expected DependentVector, got {other:?}"),
        }
    }

    #[test]
    fn alpha_zero_is_rejected() {
        let (_, w, kd) = absorber();
        let probe = ProbeSpec::new(
            c64(0.0, 0.0),
            ONE,
            CVector::basis(1, 0),
            CVector::basis(1, 0),
        );
        // ProbeSpec itself allows alpha = 0 (beta must be nonzero), the
        // plan construction does not.
        let probe = probe.unwrap();
        let layout = SpaceLayout::compact(2, 1, 1).unwrap();
        let frees = FreeEvolution::identity(&layout);
        assert!(matches!(
            build_plan(&w, &kd, &probe, &frees, &Tolerances::default()),
            Err(NiqsError::AlphaZero)
        ));
    }

    #[test]
    fn optimize_interferometer_hits_one_sixteenth() {
        let d = interferometer();
        let cfg = WitnessSearchConfig {
            hint: Some(x_polarized()),
            ..WitnessSearchConfig::default()
        };
        let w = find_witness(&d, &cfg).unwrap().witnesses.remove(0);
        let kd = kernel_decomposition(&d, &w, &Tolerances::default()).unwrap();
        let res = optimize_alpha(
            &w,
            &kd,
            &x_polarized(),
            2,
            &AlphaGridConfig::default(),
            &Tolerances::default(),
        );
        assert!((res.p_opt - 1.0 / 16.0).abs() < 1e-9, "p_opt = {}", res.p_opt);
        assert!((res.alpha_opt.norm_sqr() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn optimize_absorber_hits_one_quarter() {
        let (_, w, kd) = absorber();
        let res = optimize_alpha(
            &w,
            &kd,
            &CVector::basis(1, 0),
            1,
            &AlphaGridConfig::default(),
            &Tolerances::default(),
        );
        assert!((res.p_opt - 0.25).abs() < 1e-9);
        assert!((res.alpha_opt.norm_sqr() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn probability_vanishes_at_the_split_boundaries() {
        let d = interferometer();
        let cfg = WitnessSearchConfig {
            hint: Some(x_polarized()),
            ..WitnessSearchConfig::default()
        };
        let w = find_witness(&d, &cfg).unwrap().witnesses.remove(0);
        let kd = kernel_decomposition(&d, &w, &Tolerances::default()).unwrap();
        let res = optimize_alpha(
            &w,
            &kd,
            &x_polarized(),
            2,
            &AlphaGridConfig::default(),
            &Tolerances::default(),
        );
        let lo = res.scan.first().unwrap();
        assert!(lo.alpha_mag < 1e-12 && lo.prob < 1e-12);
        // the scan stops short of 1; extrapolate by the curve formula
        let hi = res.scan.last().unwrap();
        let expect = hi.alpha_mag.powi(2) * (1.0 - hi.alpha_mag.powi(2)) / 4.0;
        assert!((hi.prob - expect).abs() < 1e-12);
    }

    #[test]
    fn audit_never_beats_the_plan() {
        let plan = interferometer_plan(std::f64::consts::FRAC_1_SQRT_2);
        let max_alt = optimality_audit(&plan, 10_000, 7);
        assert!(
            max_alt <= plan.prob + 1e-9,
            "audit found {max_alt} above prob {}",
            plan.prob
        );
        // the optimum is attainable: psi_i itself satisfies the constraints
        assert!(max_alt <= plan.prob + 1e-9);
    }

    #[test]
    fn audit_returns_zero_when_target_is_constrained_away() {
        // Infeasible setup: the target lies inside the span of the
        // constraints, so every admissible direction has zero overlap.
        let pe = CVector::from_reals(&[1.0, 0.0, 0.0]);
        let chi1 = CVector::from_reals(&[0.0, 1.0, 0.0]);
        let target = pe.scale(c64(0.3, 0.1)).add(&chi1.scale(c64(-0.2, 0.4)));
        let best = audit_subspace(&[pe, chi1], &target, 3, 2000, 11);
        assert!(best < 1e-20, "expected zero overlap, got {best}");
    }

    #[test]
    fn scaled_copies_lose_probability_quadratically() {
        let plan = interferometer_plan(std::f64::consts::FRAC_1_SQRT_2);
        // d-scaled copy of psi_I plus junk in the orthogonal complement of
        // H_{l+1} keeps the constraints but scales Delta by d.
        let d_scale = 0.7f64;
        let e_junk = &plan.basis_o[3];
        let mut alt = plan.psi_i.scale(c64(d_scale, 0.0));
        alt.axpy(c64((1.0 - d_scale * d_scale).sqrt(), 0.0), e_junk);
        assert!((alt.norm() - 1.0).abs() < 1e-10);
        let delta_alt = alt.inner(&plan.success_source);
        assert!((delta_alt.norm_sqr() - d_scale * d_scale * plan.prob).abs() < 1e-10);
    }

    #[test]
    fn probability_is_invariant_under_global_alpha_phase() {
        let d = interferometer();
        let chi = x_polarized();
        let w = crate::conditions::canonicalize_pair(&d, &chi, &chi).unwrap();
        let kd = kernel_decomposition(&d, &w, &Tolerances::default()).unwrap();
        let layout = SpaceLayout::compact(2, 2, 2).unwrap();
        let frees = FreeEvolution::identity(&layout);
        let a = 0.6f64;
        let b = 0.8f64;
        let mut probs = Vec::new();
        for theta in [0.0, 0.9, 2.4] {
            let probe = ProbeSpec::new(
                C64::from_polar(a, theta),
                c64(b, 0.0),
                x_polarized(),
                x_polarized(),
            )
            .unwrap();
            let plan = build_plan(&w, &kd, &probe, &frees, &Tolerances::default()).unwrap();
            probs.push(plan.prob);
        }
        for p in &probs[1..] {
            assert!((p - probs[0]).abs() < 1e-12, "{probs:?}");
        }
    }

    #[test]
    fn nondistortion_product_form() {
        // Projecting the full no-decay state with P_I = |psi_I><psi_I| (x) I
        // leaves the object exactly in its freely evolved state with
        // amplitude Delta, for any object state.
        use rand::Rng;
        use rand::SeedableRng;
        let d = interferometer();
        let plan = interferometer_plan(std::f64::consts::FRAC_1_SQRT_2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 2usize;
        for _ in 0..100 {
            let psi_s = CVector::new(
                (0..n)
                    .map(|_| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect(),
            )
            .unwrap()
            .normalized(1e-9)
            .unwrap();
            // joint state: alpha |psi_r'>|psi_s> + beta embed(D(psi_d' x psi_s))
            let m_full = plan.probe_dim();
            let mut joint = CVector::zeros(m_full * n);
            let e_r = embed_reference(&plan.psi_r_prime, plan.m);
            for p in 0..m_full {
                for s in 0..n {
                    joint[p * n + s] += plan.alpha * e_r[p] * psi_s[s];
                }
            }
            let scattered = d.apply_product(&plan.psi_d_prime, &psi_s);
            for j in 0..plan.m {
                for s in 0..n {
                    joint[(plan.m_r + j) * n + s] += plan.beta * scattered[j * n + s];
                }
            }
            // contract with <psi_I| over the probe index
            let mut object = CVector::zeros(n);
            for p in 0..m_full {
                for s in 0..n {
                    object[s] += plan.psi_i[p].conj() * joint[p * n + s];
                }
            }
            let amp = object.norm();
            assert!((amp - plan.delta.norm()).abs() < 1e-11);
            let fidelity = object.inner(&psi_s).norm() / amp.max(1e-300);
            assert!(fidelity > 1.0 - 1e-11);
        }
    }
}
