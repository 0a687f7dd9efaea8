//! Monte Carlo realization of the interrogation protocol.
//!
//! Each trial prepares the joint probe/object state, applies the free
//! evolution to the reference branch and the full interaction to the
//! interacting branch, samples the decay event from the leaked norm,
//! collapses the survivors, and performs the Von Neumann measurement in the
//! plan's basis. Trials run on independent RNG streams keyed by
//! `(seed, trial index)`, so parallel execution tallies exactly like serial
//! execution.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{NiqsError, Result};
use crate::linalg::{CVector, C64};
use crate::model::{assemble_d, free_evolution_total, InteractionModel, ProbeSpec};
use crate::projector::{embed_reference, MeasurementPlan};
use crate::rng;

/// Object preparation for the trial batch.
#[derive(Debug, Clone)]
pub enum ObjectState {
    /// The same unit state every trial.
    Fixed(CVector),
    /// An independent Haar-like random state per trial.
    RandomPerTrial,
}

/// Configuration of one simulation batch.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub model: InteractionModel,
    pub probe: ProbeSpec,
    pub plan: MeasurementPlan,
    pub object_present: bool,
    pub object_state: ObjectState,
    pub trials: u64,
    pub seed: u64,
}

/// Measurement outcome labels. `Other(k)` is the `k`-th basis vector beyond
/// the success and empty-box directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Decay,
    Success,
    EmptyConsistent,
    Other(usize),
}

impl Outcome {
    pub fn label(&self) -> String {
        match self {
            Outcome::Decay => "decay".to_string(),
            Outcome::Success => "success".to_string(),
            Outcome::EmptyConsistent => "empty_consistent".to_string(),
            Outcome::Other(k) => format!("other_{k}"),
        }
    }

    fn from_basis_index(i: usize) -> Outcome {
        match i {
            0 => Outcome::Success,
            1 => Outcome::EmptyConsistent,
            k => Outcome::Other(k - 2),
        }
    }
}

/// Tally of one batch.
#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub counts: BTreeMap<Outcome, u64>,
    pub trials: u64,
    pub empirical_success_rate: f64,
    /// Mean success-conditioned fidelity of the object state against its
    /// freely evolved self; `None` when no trial succeeded.
    pub mean_success_fidelity: Option<f64>,
    /// Worst success-conditioned fidelity observed.
    pub min_success_fidelity: Option<f64>,
    /// `plan.prob` when the object is present, 0 otherwise.
    pub expected_success_rate: f64,
}

/// Fixed evolution data shared by all trials.
struct TrialKernel {
    /// Columns: `D (psi_d' (x) U_S e_s)` for each object basis state, i.e.
    /// the scattered interacting branch as a map from the initial object
    /// state. Dimensions `(m*n) x n`.
    scatter_map: Vec<CVector>,
    /// `U_S`, advancing object states to their primed versions.
    u_s: crate::linalg::CMatrix,
    /// Reference branch embedded in the probe space.
    e_r: CVector,
    /// Free-evolved interacting probe branch embedded (object absent).
    e_d: CVector,
    alpha: C64,
    beta: C64,
    m_r: usize,
    m: usize,
    n: usize,
    basis: Vec<CVector>,
    object_present: bool,
}

impl TrialKernel {
    fn build(cfg: &TrialConfig) -> Result<Self> {
        let plan = &cfg.plan;
        let layout = &cfg.model.layout;
        let (m_r, m, n) = (layout.m_r, layout.m, layout.n);
        if plan.m_r != m_r || plan.m != m {
            return Err(NiqsError::PlanModelMismatch(format!(
                "plan probe split ({}, {}) vs model ({m_r}, {m})",
                plan.m_r, plan.m
            )));
        }
        if cfg.probe.psi_r.dim() != m_r || cfg.probe.psi_d.dim() != m {
            return Err(NiqsError::PlanModelMismatch(
                "probe dimensions disagree with the model layout".into(),
            ));
        }
        let d = assemble_d(&cfg.model)?;
        let frees = free_evolution_total(&cfg.model)?;

        let probe_primed = frees
            .u_probe
            .mul_vec(&full_probe(&cfg.probe, m_r, m));
        // Split the primed probe into its branches.
        let mut psi_r_prime = CVector::zeros(m_r);
        let mut psi_d_prime = CVector::zeros(m);
        for i in 0..m_r {
            psi_r_prime[i] = probe_primed[i];
        }
        for i in 0..m {
            psi_d_prime[i] = probe_primed[m_r + i];
        }
        // Undo the amplitudes to recover unit branch vectors.
        let psi_r_prime = psi_r_prime
            .scale(C64::new(1.0, 0.0) / cfg.probe.alpha_or_unit())
            .normalized(1e-12)
            .unwrap_or_else(|| CVector::basis(m_r, 0));
        let psi_d_prime = psi_d_prime
            .scale(C64::new(1.0, 0.0) / cfg.probe.beta)
            .normalized(1e-12)
            .ok_or_else(|| NiqsError::PlanModelMismatch("interacting branch vanished".into()))?;

        let mut scatter_map = Vec::with_capacity(n);
        for s in 0..n {
            let psi_s_prime = frees.u_s.col_vector(s);
            scatter_map.push(d.apply_product(&psi_d_prime, &psi_s_prime));
        }

        Ok(TrialKernel {
            scatter_map,
            u_s: frees.u_s.clone(),
            e_r: embed_reference(&psi_r_prime, m),
            e_d: crate::projector::embed_interacting(&psi_d_prime, m_r),
            alpha: cfg.probe.alpha,
            beta: cfg.probe.beta,
            m_r,
            m,
            n,
            basis: plan.basis_o.clone(),
            object_present: cfg.object_present,
        })
    }

    /// Unnormalized no-decay joint state for the given initial object state,
    /// plus the decay probability.
    fn evolve(&self, psi_s: &CVector) -> (CVector, f64) {
        let n = self.n;
        let probe_dim = self.m_r + self.m;
        let psi_s_prime = self.u_s.mul_vec(psi_s);
        let mut joint = CVector::zeros(probe_dim * n);
        for p in 0..probe_dim {
            let a = self.alpha * self.e_r[p];
            if a != crate::linalg::ZERO {
                for s in 0..n {
                    joint[p * n + s] += a * psi_s_prime[s];
                }
            }
        }
        if self.object_present {
            // interacting branch scatters: sum_s psi_s[s] * scatter_map[s]
            for (s0, column) in self.scatter_map.iter().enumerate() {
                let w = self.beta * psi_s[s0];
                if w == crate::linalg::ZERO {
                    continue;
                }
                for j in 0..self.m {
                    for s in 0..n {
                        joint[(self.m_r + j) * n + s] += w * column[j * n + s];
                    }
                }
            }
        } else {
            for p in 0..probe_dim {
                let b = self.beta * self.e_d[p];
                if b == crate::linalg::ZERO {
                    continue;
                }
                for s in 0..n {
                    joint[p * n + s] += b * psi_s_prime[s];
                }
            }
        }
        let survive = joint.norm_sqr();
        (joint, (1.0 - survive).max(0.0))
    }

    /// Contract the joint state with `<v| (x) I`: the conditional
    /// (unnormalized) object state for probe outcome `v`.
    fn object_component(&self, joint: &CVector, v: &CVector) -> CVector {
        let n = self.n;
        let probe_dim = self.m_r + self.m;
        let mut out = CVector::zeros(n);
        for p in 0..probe_dim {
            let coeff = v[p].conj();
            if coeff == crate::linalg::ZERO {
                continue;
            }
            for s in 0..n {
                out[s] += coeff * joint[p * n + s];
            }
        }
        out
    }

    fn outcome_weights(&self, joint: &CVector) -> Vec<f64> {
        self.basis
            .iter()
            .map(|v| self.object_component(joint, v).norm_sqr())
            .collect()
    }
}

fn full_probe(probe: &ProbeSpec, m_r: usize, m: usize) -> CVector {
    let mut v = CVector::zeros(m_r + m);
    for i in 0..m_r {
        v[i] = probe.alpha * probe.psi_r[i];
    }
    for i in 0..m {
        v[m_r + i] = probe.beta * probe.psi_d[i];
    }
    v
}

impl ProbeSpec {
    /// `alpha` when usable as a divisor, else 1 (the branch is absent).
    fn alpha_or_unit(&self) -> C64 {
        if self.alpha.norm() > 1e-12 {
            self.alpha
        } else {
            C64::new(1.0, 0.0)
        }
    }
}

/// Run the trial batch. Deterministic for a fixed configuration.
pub fn run_trials(cfg: &TrialConfig) -> Result<SimulationOutcome> {
    if cfg.trials == 0 {
        return Err(NiqsError::InvalidConfig("trials must be at least 1".into()));
    }
    if let ObjectState::Fixed(v) = &cfg.object_state {
        if v.dim() != cfg.model.layout.n {
            return Err(NiqsError::PlanModelMismatch(
                "object state dimension disagrees with the layout".into(),
            ));
        }
        if (v.norm() - 1.0).abs() > 1e-8 {
            return Err(NiqsError::InvalidConfig("object state must be unit".into()));
        }
    }
    let kernel = TrialKernel::build(cfg)?;

    // Collect per-trial results in trial order, then tally serially: the
    // fidelity sum must not depend on how rayon batches the work, or
    // identical seeds could produce reports differing in the last bit.
    let per_trial: Vec<(Outcome, Option<f64>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream_rng(cfg.seed, trial);
            // Draw order per trial: object state (if random), decay,
            // outcome. Fixed by the stream contract.
            let psi_s = match &cfg.object_state {
                ObjectState::Fixed(v) => v.clone(),
                ObjectState::RandomPerTrial => rng::random_unit_vector(&mut rng, kernel.n),
            };
            let (joint, p_decay) = kernel.evolve(&psi_s);
            let u_decay: f64 = rng.random();
            if u_decay < p_decay {
                return (Outcome::Decay, None);
            }
            let weights = kernel.outcome_weights(&joint);
            let total: f64 = weights.iter().sum();
            let u_outcome: f64 = rng.random::<f64>() * total;
            let mut cum = 0.0;
            let mut picked = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                cum += w;
                if u_outcome < cum {
                    picked = i;
                    break;
                }
            }
            let outcome = Outcome::from_basis_index(picked);
            let fidelity = (outcome == Outcome::Success).then(|| {
                let object = kernel.object_component(&joint, &kernel.basis[0]);
                let amp = object.norm();
                let target = kernel.u_s.mul_vec(&psi_s);
                if amp > 1e-300 {
                    object.inner(&target).norm() / amp
                } else {
                    0.0
                }
            });
            (outcome, fidelity)
        })
        .collect();

    let mut counts: BTreeMap<Outcome, u64> = BTreeMap::new();
    let mut fidelity_sum = 0.0f64;
    let mut fidelity_min = f64::INFINITY;
    let mut successes = 0u64;
    for (outcome, fidelity) in per_trial {
        *counts.entry(outcome).or_insert(0) += 1;
        if let Some(f) = fidelity {
            fidelity_sum += f;
            fidelity_min = fidelity_min.min(f);
            successes += 1;
        }
    }
    let total: u64 = counts.values().sum();
    debug_assert_eq!(total, cfg.trials);

    Ok(SimulationOutcome {
        empirical_success_rate: successes as f64 / cfg.trials as f64,
        mean_success_fidelity: (successes > 0).then(|| fidelity_sum / successes as f64),
        min_success_fidelity: (successes > 0).then_some(fidelity_min),
        expected_success_rate: if cfg.object_present { cfg.plan.prob } else { 0.0 },
        counts,
        trials: cfg.trials,
    })
}

/// Exact Born probabilities of every outcome, the oracle for `run_trials`.
///
/// For a fixed object state the probabilities are the squared norms of the
/// projections of the unnormalized no-decay state, plus the decay leak. For
/// the random-per-trial preparation the result is the Haar average, which
/// equals the mean over any orthonormal object basis because every
/// probability is a quadratic form in the object state.
pub fn analytic_outcome_distribution(cfg: &TrialConfig) -> Result<BTreeMap<Outcome, f64>> {
    let kernel = TrialKernel::build(cfg)?;
    let states: Vec<CVector> = match &cfg.object_state {
        ObjectState::Fixed(v) => vec![v.clone()],
        ObjectState::RandomPerTrial => {
            (0..kernel.n).map(|s| CVector::basis(kernel.n, s)).collect()
        }
    };
    let mut dist: BTreeMap<Outcome, f64> = BTreeMap::new();
    let weight = 1.0 / states.len() as f64;
    for psi_s in &states {
        let (joint, p_decay) = kernel.evolve(psi_s);
        *dist.entry(Outcome::Decay).or_insert(0.0) += weight * p_decay;
        for (i, w) in kernel.outcome_weights(&joint).iter().enumerate() {
            *dist.entry(Outcome::from_basis_index(i)).or_insert(0.0) += weight * w;
        }
    }
    Ok(dist)
}
