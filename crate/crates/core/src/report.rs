//! Machine- and human-readable reports.
//!
//! Every floating-point value is rounded to 12 significant digits before
//! serialization, both so reports are easy to diff and so repeated runs with
//! the same seed produce byte-identical JSON. Maps are ordered; no
//! timestamps or environment data are embedded.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::linalg::{CVector, C64};
use crate::modelfile::SCHEMA_VERSION;

/// Round to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn complex12(z: C64) -> [f64; 2] {
    [sig12(z.re), sig12(z.im)]
}

pub fn vector12(v: &CVector) -> Vec<[f64; 2]> {
    v.entries().iter().map(|&z| complex12(z)).collect()
}

/// Formats a float with 12 significant digits for the text renderers.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub index: usize,
    pub c: [f64; 2],
    pub c_abs: f64,
    pub residual: f64,
    pub chi: Vec<[f64; 2]>,
    pub psi_d: Vec<[f64; 2]>,
    /// Dimension of the complement of the kernel space, when the
    /// decomposition succeeded.
    pub l: Option<usize>,
    pub kernel_dim: Option<usize>,
    pub chi_projection_deficit: Option<f64>,
    pub feasible: Option<bool>,
    pub independence_margin: Option<f64>,
    /// Present when the kernel decomposition rejected the witness.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub command: String,
    pub verdict: String,
    pub detail: String,
    pub witnesses: Vec<WitnessReport>,
    pub best_residual: f64,
    pub used_grid_fallback: bool,
    pub seed: u64,
    pub starts: usize,
    pub tol_witness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub witness_index: usize,
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub delta: [f64; 2],
    pub prob: f64,
    pub psi_i: Vec<[f64; 2]>,
    pub psi_tilde: Vec<[f64; 2]>,
    pub p_e_direction: Vec<[f64; 2]>,
    pub basis_size: usize,
    /// Initial interacting probe vector that free-evolves into the witness.
    pub required_psi_d: Vec<[f64; 2]>,
    /// Overlap magnitude between the model file's evolved probe and the
    /// witness vector; 1 means the file's probe realizes this witness.
    pub probe_witness_fidelity: f64,
    /// Largest violation of the orthogonality constraints, as a check.
    pub constraint_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstructReport {
    pub schema_version: u32,
    pub command: String,
    pub verdict: String,
    pub witness: WitnessReport,
    pub plan: PlanReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeEntry {
    pub witness_index: usize,
    pub c_abs: f64,
    pub p_opt: f64,
    pub alpha_opt_abs: f64,
    pub alpha_opt_sqr: f64,
    pub beta_phase: f64,
    /// CSV samples `alpha_mag,phase,prob` of the probability curve at the
    /// optimal phase.
    pub curve_csv: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub schema_version: u32,
    pub command: String,
    pub verdict: String,
    pub entries: Vec<OptimizeEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSection {
    pub object_present: bool,
    pub object_state: String,
    pub trials: u64,
    pub counts: BTreeMap<String, u64>,
    pub empirical_success_rate: f64,
    pub expected_success_rate: f64,
    pub mean_success_fidelity: Option<f64>,
    pub min_success_fidelity: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub outcome: String,
    pub analytic: f64,
    pub empirical: f64,
    pub binomial_sigma: f64,
    pub within_4_sigma: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub command: String,
    pub verdict: String,
    pub seed: u64,
    pub trials: u64,
    pub plan: PlanReport,
    pub analytic_distribution: BTreeMap<String, f64>,
    pub analytic_total: f64,
    pub present: RunSection,
    pub present_random_object: RunSection,
    pub absent: RunSection,
    pub comparison: Vec<ComparisonRow>,
}

impl AnalyzeReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("verdict: {}\n", self.verdict));
        out.push_str(&format!("detail: {}\n", self.detail));
        out.push_str(&format!(
            "best residual: {} (tol {})\n",
            fmt12(self.best_residual),
            fmt12(self.tol_witness)
        ));
        out.push_str(&format!(
            "witnesses: {} (seed {}, {} starts{})\n",
            self.witnesses.len(),
            self.seed,
            self.starts,
            if self.used_grid_fallback { ", grid fallback" } else { "" }
        ));
        for w in &self.witnesses {
            out.push_str(&format!(
                "  [{}] |c| = {}  residual = {}  l = {}  feasible = {}  margin = {}\n",
                w.index,
                fmt12(w.c_abs),
                fmt12(w.residual),
                w.l.map_or("-".to_string(), |l| l.to_string()),
                w.feasible.map_or("-".to_string(), |f| f.to_string()),
                w.independence_margin
                    .map_or("-".to_string(), fmt12),
            ));
            if let Some(err) = &w.decomposition_error {
                out.push_str(&format!("      decomposition error: {err}\n"));
            }
        }
        out
    }
}

impl ConstructReport {
    pub fn to_text(&self) -> String {
        let p = &self.plan;
        let mut out = String::new();
        out.push_str(&format!("verdict: {}\n", self.verdict));
        out.push_str(&format!(
            "witness [{}]: |c| = {}  residual = {}\n",
            self.witness.index,
            fmt12(self.witness.c_abs),
            fmt12(self.witness.residual)
        ));
        out.push_str(&format!("delta: [{}, {}]\n", fmt12(p.delta[0]), fmt12(p.delta[1])));
        out.push_str(&format!("prob: {}\n", fmt12(p.prob)));
        out.push_str(&format!(
            "basis size: {}  constraint residual: {}\n",
            p.basis_size,
            fmt12(p.constraint_residual)
        ));
        out.push_str(&format!(
            "probe/witness fidelity: {}\n",
            fmt12(p.probe_witness_fidelity)
        ));
        out.push_str("psi_I:\n");
        for e in &p.psi_i {
            out.push_str(&format!("  [{}, {}]\n", fmt12(e[0]), fmt12(e[1])));
        }
        out
    }
}

impl OptimizeReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("verdict: {}\n", self.verdict));
        for e in &self.entries {
            out.push_str(&format!(
                "witness [{}]: p_opt = {} at |alpha|^2 = {} (|alpha| = {}, beta phase = {})\n",
                e.witness_index,
                fmt12(e.p_opt),
                fmt12(e.alpha_opt_sqr),
                fmt12(e.alpha_opt_abs),
                fmt12(e.beta_phase)
            ));
            out.push_str("curve (alpha_mag,phase,prob):\n");
            out.push_str(&e.curve_csv);
            out.push('\n');
        }
        out
    }
}

impl SimulateReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "verdict: {} (seed {}, {} trials)\n",
            self.verdict, self.seed, self.trials
        ));
        out.push_str(&format!("plan prob: {}\n", fmt12(self.plan.prob)));
        out.push_str(&format!(
            "analytic distribution (total {}):\n",
            fmt12(self.analytic_total)
        ));
        for (k, v) in &self.analytic_distribution {
            out.push_str(&format!("  {k}: {}\n", fmt12(*v)));
        }
        for section in [&self.present, &self.present_random_object, &self.absent] {
            out.push_str(&format!(
                "run (object {}, state {}):\n",
                if section.object_present { "present" } else { "absent" },
                section.object_state
            ));
            for (k, v) in &section.counts {
                out.push_str(&format!("  {k}: {v}\n"));
            }
            out.push_str(&format!(
                "  success rate {} (expected {})\n",
                fmt12(section.empirical_success_rate),
                fmt12(section.expected_success_rate)
            ));
            if let (Some(mean), Some(min)) =
                (section.mean_success_fidelity, section.min_success_fidelity)
            {
                out.push_str(&format!(
                    "  success fidelity mean {} min {}\n",
                    fmt12(mean),
                    fmt12(min)
                ));
            }
        }
        out.push_str("comparison (outcome, analytic, empirical, 4sigma ok):\n");
        for row in &self.comparison {
            out.push_str(&format!(
                "  {}: {} vs {} -> {}\n",
                row.outcome,
                fmt12(row.analytic),
                fmt12(row.empirical),
                row.within_4_sigma
            ));
        }
        out
    }
}

/// Shared constructor defaults.
pub fn report_header(command: &str) -> (u32, String) {
    (SCHEMA_VERSION, command.to_string())
}
