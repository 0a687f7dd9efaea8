//! Command pipelines behind the `niqs` binary: analyze, construct,
//! optimize, simulate, example.
//!
//! Exit code contract: 0 = feasible / command succeeded, 1 = infeasible at
//! the search budget, 2 = parse, validation, or configuration failure.

use std::path::{Path, PathBuf};

use crate::conditions::{
    find_witness, kernel_decomposition, independence_check, KernelDecomposition, NiqsWitness,
    IndependenceVerdict, WitnessSearchConfig,
};
use crate::error::{NiqsError, Result};
use crate::linalg::CVector;
use crate::model::{assemble_d, free_evolution_total, ContractionOperator, FreeEvolution, ProbeSpec};
use crate::modelfile::{read_model, LoadedModel};
use crate::projector::{build_plan, optimize_alpha, AlphaGridConfig, MeasurementPlan};
use crate::report::{
    complex12, fmt12, report_header, sig12, vector12, AnalyzeReport, ComparisonRow,
    ConstructReport, OptimizeEntry, OptimizeReport, PlanReport, RunSection, SimulateReport,
    WitnessReport,
};
use crate::simulator::{analytic_outcome_distribution, run_trials, ObjectState, TrialConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Options shared by the analysis-driven commands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub starts: usize,
    pub tol_witness: f64,
    pub trials: u64,
    pub alpha_grid: usize,
    pub phase_grid: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 42,
            starts: 48,
            tol_witness: 1e-8,
            trials: 100_000,
            alpha_grid: 201,
            phase_grid: 64,
        }
    }
}

/// A finished report plus the process exit code.
pub enum ReportDoc {
    Analyze(AnalyzeReport),
    Construct(Box<ConstructReport>),
    Optimize(OptimizeReport),
    Simulate(Box<SimulateReport>),
    ModelJson(String),
}

impl ReportDoc {
    pub fn to_json(&self) -> String {
        let mut s = match self {
            ReportDoc::Analyze(r) => serde_json::to_string_pretty(r),
            ReportDoc::Construct(r) => serde_json::to_string_pretty(r.as_ref()),
            ReportDoc::Optimize(r) => serde_json::to_string_pretty(r),
            ReportDoc::Simulate(r) => serde_json::to_string_pretty(r.as_ref()),
            ReportDoc::ModelJson(s) => return s.clone(),
        }
        .expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        match self {
            ReportDoc::Analyze(r) => r.to_text(),
            ReportDoc::Construct(r) => r.to_text(),
            ReportDoc::Optimize(r) => r.to_text(),
            ReportDoc::Simulate(r) => r.to_text(),
            ReportDoc::ModelJson(s) => s.clone(),
        }
    }
}

/// One analyzed witness: the search result plus its kernel decomposition and
/// independence verdict.
pub struct AnalyzedWitness {
    pub witness: NiqsWitness,
    pub kd: std::result::Result<KernelDecomposition, String>,
    pub verdict: Option<IndependenceVerdict>,
}

pub struct Analysis {
    pub d: ContractionOperator,
    pub frees: FreeEvolution,
    pub hint: CVector,
    pub witnesses: Vec<AnalyzedWitness>,
    pub best_residual: f64,
    pub used_grid_fallback: bool,
}

impl Analysis {
    pub fn feasible_index(&self) -> Option<usize> {
        self.witnesses
            .iter()
            .position(|aw| aw.verdict.map(|v| v.feasible).unwrap_or(false))
    }
}

/// Run the witness search and independence checks for a loaded model.
pub fn analyze_model(loaded: &LoadedModel, opts: &RunOptions) -> Result<Analysis> {
    let tol = loaded.model.tol;
    let d = assemble_d(&loaded.model)?;
    let frees = free_evolution_total(&loaded.model)?;
    let layout = &loaded.model.layout;
    let hint = frees.u_d(layout).mul_vec(&loaded.probe.psi_d);

    let cfg = WitnessSearchConfig {
        starts: opts.starts,
        seed: opts.seed,
        tol_witness: opts.tol_witness,
        hint: Some(hint.clone()),
        ..WitnessSearchConfig::default()
    };
    let outcome = find_witness(&d, &cfg)?;

    let mut witnesses = Vec::with_capacity(outcome.witnesses.len());
    for w in outcome.witnesses {
        let kd = kernel_decomposition(&d, &w, &tol).map_err(|e| e.to_string());
        let verdict = kd
            .as_ref()
            .ok()
            .map(|kd| independence_check(&w, kd, tol.dep));
        witnesses.push(AnalyzedWitness { witness: w, kd, verdict });
    }

    Ok(Analysis {
        d,
        frees,
        hint,
        witnesses,
        best_residual: outcome.best_residual,
        used_grid_fallback: outcome.used_grid_fallback,
    })
}

fn witness_report(index: usize, aw: &AnalyzedWitness) -> WitnessReport {
    let w = &aw.witness;
    WitnessReport {
        index,
        c: complex12(w.c),
        c_abs: sig12(w.c.norm()),
        residual: sig12(w.residual),
        chi: vector12(&w.chi),
        psi_d: vector12(&w.psi_d),
        l: aw.kd.as_ref().ok().map(|kd| kd.l),
        kernel_dim: aw.kd.as_ref().ok().map(|kd| kd.kernel_basis.len()),
        chi_projection_deficit: aw
            .kd
            .as_ref()
            .ok()
            .map(|kd| sig12(kd.chi_projection_deficit)),
        feasible: aw.verdict.map(|v| v.feasible),
        independence_margin: aw.verdict.map(|v| sig12(v.independence_margin)),
        decomposition_error: aw.kd.as_ref().err().cloned(),
    }
}

fn verdict_parts(analysis: &Analysis, opts: &RunOptions) -> (String, String, i32) {
    if analysis.feasible_index().is_some() {
        (
            "feasible".to_string(),
            "a witness satisfies the independence criterion".to_string(),
            EXIT_OK,
        )
    } else if analysis.witnesses.is_empty() {
        (
            "infeasible-at-budget".to_string(),
            format!(
                "no witness found at this search budget; best residual {}",
                fmt12(analysis.best_residual)
            ),
            EXIT_INFEASIBLE,
        )
    } else {
        (
            "infeasible-at-budget".to_string(),
            format!(
                "{} witness(es) found but all fail the independence criterion \
                 (dependence detected); tol_witness {}",
                analysis.witnesses.len(),
                fmt12(opts.tol_witness)
            ),
            EXIT_INFEASIBLE,
        )
    }
}

pub fn cmd_analyze(model_path: &Path, opts: &RunOptions) -> Result<(ReportDoc, i32)> {
    analyze_doc(&read_model(model_path)?, opts)
}

/// Path-free analyze pipeline, shared with the C bindings.
pub fn analyze_doc(loaded: &LoadedModel, opts: &RunOptions) -> Result<(ReportDoc, i32)> {
    let analysis = analyze_model(loaded, opts)?;
    let (verdict, detail, code) = verdict_parts(&analysis, opts);
    let (schema_version, command) = report_header("analyze");
    let report = AnalyzeReport {
        schema_version,
        command,
        verdict,
        detail,
        witnesses: analysis
            .witnesses
            .iter()
            .enumerate()
            .map(|(i, aw)| witness_report(i, aw))
            .collect(),
        best_residual: sig12(analysis.best_residual),
        used_grid_fallback: analysis.used_grid_fallback,
        seed: opts.seed,
        starts: opts.starts,
        tol_witness: sig12(opts.tol_witness),
    };
    Ok((ReportDoc::Analyze(report), code))
}

/// Probe that realizes a witness: same split and reference vector as the
/// file's probe, interacting vector chosen so it free-evolves into the
/// witness.
fn witness_probe(
    loaded: &LoadedModel,
    frees: &FreeEvolution,
    w: &NiqsWitness,
) -> Result<ProbeSpec> {
    let layout = &loaded.model.layout;
    let u_d = frees.u_d(layout);
    let required = u_d.dagger().mul_vec(&w.psi_d);
    ProbeSpec::new(
        loaded.probe.alpha,
        loaded.probe.beta,
        loaded.probe.psi_r.clone(),
        required,
    )
}

fn plan_report(
    analysis: &Analysis,
    index: usize,
    plan: &MeasurementPlan,
    probe: &ProbeSpec,
) -> PlanReport {
    let w = &analysis.witnesses[index].witness;
    let fidelity = analysis.hint.inner(&w.psi_d).norm();
    let mut constraint = plan.psi_i.inner(&plan.p_e_direction).norm();
    for s in &plan.scattering_embedded() {
        constraint = constraint.max(plan.psi_i.inner(s).norm());
    }
    PlanReport {
        witness_index: index,
        alpha: complex12(plan.alpha),
        beta: complex12(plan.beta),
        delta: complex12(plan.delta),
        prob: sig12(plan.prob),
        psi_i: vector12(&plan.psi_i),
        psi_tilde: vector12(&plan.psi_tilde),
        p_e_direction: vector12(&plan.p_e_direction),
        basis_size: plan.basis_o.len(),
        required_psi_d: vector12(&probe.psi_d),
        probe_witness_fidelity: sig12(fidelity),
        constraint_residual: sig12(constraint),
    }
}

fn infeasible_report(analysis: &Analysis, opts: &RunOptions, command: &str) -> (ReportDoc, i32) {
    let (verdict, detail, code) = verdict_parts(analysis, opts);
    let (schema_version, _) = report_header(command);
    let report = AnalyzeReport {
        schema_version,
        command: command.to_string(),
        verdict,
        detail,
        witnesses: analysis
            .witnesses
            .iter()
            .enumerate()
            .map(|(i, aw)| witness_report(i, aw))
            .collect(),
        best_residual: sig12(analysis.best_residual),
        used_grid_fallback: analysis.used_grid_fallback,
        seed: opts.seed,
        starts: opts.starts,
        tol_witness: sig12(opts.tol_witness),
    };
    (ReportDoc::Analyze(report), code)
}

pub fn cmd_construct(model_path: &Path, opts: &RunOptions) -> Result<(ReportDoc, i32)> {
    construct_doc(&read_model(model_path)?, opts)
}

/// Path-free construct pipeline, shared with the C bindings.
pub fn construct_doc(loaded: &LoadedModel, opts: &RunOptions) -> Result<(ReportDoc, i32)> {
    let analysis = analyze_model(loaded, opts)?;
    let Some(index) = analysis.feasible_index() else {
        return Ok(infeasible_report(&analysis, opts, "construct"));
    };
    let aw = &analysis.witnesses[index];
    let kd = aw.kd.as_ref().expect("feasible witness has decomposition");
    let probe = witness_probe(loaded, &analysis.frees, &aw.witness)?;
    let plan = build_plan(
        &aw.witness,
        kd,
        &probe,
        &analysis.frees,
        &loaded.model.tol,
    )?;
    let (schema_version, command) = report_header("construct");
    let report = ConstructReport {
        schema_version,
        command,
        verdict: "feasible".to_string(),
        witness: witness_report(index, aw),
        plan: plan_report(&analysis, index, &plan, &probe),
    };
    Ok((ReportDoc::Construct(Box::new(report)), EXIT_OK))
}

pub fn cmd_optimize(model_path: &Path, opts: &RunOptions) -> Result<(ReportDoc, i32)> {
    optimize_doc(&read_model(model_path)?, opts)
}

/// Path-free optimize pipeline, shared with the C bindings.
pub fn optimize_doc(loaded: &LoadedModel, opts: &RunOptions) -> Result<(ReportDoc, i32)> {
    let analysis = analyze_model(loaded, opts)?;
    if analysis.feasible_index().is_none() {
        return Ok(infeasible_report(&analysis, opts, "optimize"));
    }
    let layout = &loaded.model.layout;
    let psi_r_prime = analysis.frees.u_r(layout).mul_vec(&loaded.probe.psi_r);
    let grid = AlphaGridConfig {
        alpha_points: opts.alpha_grid,
        phase_points: opts.phase_grid,
        ..AlphaGridConfig::default()
    };
    let mut entries = Vec::new();
    for (i, aw) in analysis.witnesses.iter().enumerate() {
        let Some(verdict) = aw.verdict else { continue };
        if !verdict.feasible {
            continue;
        }
        let kd = aw.kd.as_ref().expect("feasible witness has decomposition");
        let res = optimize_alpha(
            &aw.witness,
            kd,
            &psi_r_prime,
            layout.m_r,
            &grid,
            &loaded.model.tol,
        );
        let mut csv = String::from("alpha_mag,phase,prob\n");
        for s in &res.scan {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt12(s.alpha_mag),
                fmt12(s.phase),
                fmt12(s.prob)
            ));
        }
        entries.push(OptimizeEntry {
            witness_index: i,
            c_abs: sig12(aw.witness.c.norm()),
            p_opt: sig12(res.p_opt),
            alpha_opt_abs: sig12(res.alpha_opt.norm()),
            alpha_opt_sqr: sig12(res.alpha_opt.norm_sqr()),
            beta_phase: sig12(res.beta_opt.arg().rem_euclid(std::f64::consts::TAU)),
            curve_csv: csv,
        });
    }
    let (schema_version, command) = report_header("optimize");
    let report = OptimizeReport {
        schema_version,
        command,
        verdict: "feasible".to_string(),
        entries,
    };
    Ok((ReportDoc::Optimize(report), EXIT_OK))
}

fn run_section(cfg: &TrialConfig, state_label: &str) -> Result<RunSection> {
    let out = run_trials(cfg)?;
    Ok(RunSection {
        object_present: cfg.object_present,
        object_state: state_label.to_string(),
        trials: out.trials,
        counts: out
            .counts
            .iter()
            .map(|(k, &v)| (k.label(), v))
            .collect(),
        empirical_success_rate: sig12(out.empirical_success_rate),
        expected_success_rate: sig12(out.expected_success_rate),
        mean_success_fidelity: out.mean_success_fidelity.map(sig12),
        min_success_fidelity: out.min_success_fidelity.map(sig12),
    })
}

pub fn cmd_simulate(model_path: &Path, opts: &RunOptions) -> Result<(ReportDoc, i32)> {
    simulate_doc(&read_model(model_path)?, opts)
}

/// Path-free simulate pipeline, shared with the C bindings.
pub fn simulate_doc(loaded: &LoadedModel, opts: &RunOptions) -> Result<(ReportDoc, i32)> {
    if opts.trials == 0 {
        return Err(NiqsError::InvalidConfig("trials must be at least 1".into()));
    }
    let analysis = analyze_model(loaded, opts)?;
    let Some(index) = analysis.feasible_index() else {
        return Ok(infeasible_report(&analysis, opts, "simulate"));
    };
    let aw = &analysis.witnesses[index];
    let kd = aw.kd.as_ref().expect("feasible witness has decomposition");
    let probe = witness_probe(loaded, &analysis.frees, &aw.witness)?;
    let plan = build_plan(
        &aw.witness,
        kd,
        &probe,
        &analysis.frees,
        &loaded.model.tol,
    )?;

    let base = TrialConfig {
        model: loaded.model.clone(),
        probe: probe.clone(),
        plan: plan.clone(),
        object_present: true,
        object_state: ObjectState::Fixed(loaded.object_state.clone()),
        trials: opts.trials,
        seed: opts.seed,
    };
    let present = run_section(&base, "fixed")?;

    let mut random_cfg = base.clone();
    random_cfg.object_state = ObjectState::RandomPerTrial;
    random_cfg.seed = opts.seed.wrapping_add(1);
    let present_random = run_section(&random_cfg, "random-per-trial")?;

    let mut absent_cfg = base.clone();
    absent_cfg.object_present = false;
    absent_cfg.seed = opts.seed.wrapping_add(2);
    let absent = run_section(&absent_cfg, "fixed")?;

    let analytic = analytic_outcome_distribution(&base)?;
    let analytic_total: f64 = analytic.values().sum();
    let comparison: Vec<ComparisonRow> = analytic
        .iter()
        .map(|(outcome, &p)| {
            let label = outcome.label();
            let observed = present
                .counts
                .get(&label)
                .copied()
                .unwrap_or(0) as f64
                / opts.trials as f64;
            let sigma = (p * (1.0 - p) / opts.trials as f64).sqrt();
            let within = if sigma > 0.0 {
                (observed - p).abs() <= 4.0 * sigma
            } else {
                observed == p
            };
            ComparisonRow {
                outcome: label,
                analytic: sig12(p),
                empirical: sig12(observed),
                binomial_sigma: sig12(sigma),
                within_4_sigma: within,
            }
        })
        .collect();

    let (schema_version, command) = report_header("simulate");
    let report = SimulateReport {
        schema_version,
        command,
        verdict: "feasible".to_string(),
        seed: opts.seed,
        trials: opts.trials,
        plan: plan_report(&analysis, index, &plan, &probe),
        analytic_distribution: analytic
            .iter()
            .map(|(k, &v)| (k.label(), sig12(v)))
            .collect(),
        analytic_total: sig12(analytic_total),
        present,
        present_random_object: present_random,
        absent,
        comparison,
    };
    Ok((ReportDoc::Simulate(Box::new(report)), EXIT_OK))
}

pub fn cmd_example(name: &str) -> Result<(ReportDoc, i32)> {
    let file = crate::builtin::example_model(name)?;
    let mut json = serde_json::to_string_pretty(&file).expect("model serializes");
    json.push('\n');
    Ok((ReportDoc::ModelJson(json), EXIT_OK))
}

/// Write a report to `out` (or stdout when absent) in the requested format.
pub fn emit(doc: &ReportDoc, format: &str, out: Option<&PathBuf>) -> Result<()> {
    let body = match format {
        "json" => doc.to_json(),
        "text" => doc.to_text(),
        other => {
            return Err(NiqsError::InvalidConfig(format!(
                "unknown format '{other}' (expected json or text)"
            )))
        }
    };
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| {
            NiqsError::InvalidConfig(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            use std::io::Write;
            // A closed pipe (e.g. piping into `head`) is not an error.
            match std::io::stdout().write_all(body.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(NiqsError::InvalidConfig(format!("cannot write stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

