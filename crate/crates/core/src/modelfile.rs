//! JSON model files: the single ingestion format.
//!
//! Complex numbers are two-element arrays `[re, im]`, vectors are arrays of
//! complex numbers, matrices are nested row arrays. The `schema_version`
//! field is required and must be 1. The shipped schema documentation lives
//! in `docs/model.schema.json`.

use serde::{Deserialize, Serialize};

use crate::error::{NiqsError, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::model::{Dynamics, InteractionModel, ProbeSpec, ScheduleSegment, SpaceLayout};

pub type ComplexWire = [f64; 2];
pub type VectorWire = Vec<ComplexWire>;
pub type MatrixWire = Vec<Vec<ComplexWire>>;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub layout: LayoutWire,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    pub dynamics: DynamicsWire,
    pub probe: ProbeWire,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_state: Option<VectorWire>,
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutWire {
    pub n: usize,
    pub m: usize,
    pub m_r: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ext: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed_s: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_ext: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed_d: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DynamicsWire {
    DirectD {
        matrix: MatrixWire,
    },
    UnitaryPair {
        u_full: MatrixWire,
        h_s_free: MatrixWire,
        h_d_free: MatrixWire,
        t: f64,
    },
    HamiltonianSchedule {
        segments: Vec<SegmentWire>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentWire {
    pub h_s: MatrixWire,
    pub h_d: MatrixWire,
    pub h_i: MatrixWire,
    pub duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeWire {
    pub alpha: ComplexWire,
    pub beta: ComplexWire,
    pub psi_r: VectorWire,
    pub psi_d: VectorWire,
}

pub fn complex_to_wire(z: C64) -> ComplexWire {
    [z.re, z.im]
}

pub fn vector_to_wire(v: &CVector) -> VectorWire {
    v.entries().iter().map(|&z| complex_to_wire(z)).collect()
}

pub fn matrix_to_wire(m: &CMatrix) -> MatrixWire {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|&z| complex_to_wire(z)).collect())
        .collect()
}

fn wire_to_complex(w: &ComplexWire) -> C64 {
    C64::new(w[0], w[1])
}

fn wire_to_vector(field: &str, w: &VectorWire) -> Result<CVector> {
    if w.is_empty() {
        return Err(NiqsError::InvalidModel(format!("{field}: empty vector")));
    }
    CVector::new(w.iter().map(wire_to_complex).collect())
        .map_err(|e| NiqsError::InvalidModel(format!("{field}: {e}")))
}

fn wire_to_matrix(field: &str, w: &MatrixWire) -> Result<CMatrix> {
    let rows: Vec<Vec<C64>> = w
        .iter()
        .map(|row| row.iter().map(wire_to_complex).collect())
        .collect();
    CMatrix::from_rows(&rows).map_err(|e| NiqsError::InvalidModel(format!("{field}: {e}")))
}

/// The fully validated content of a model file.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: InteractionModel,
    pub probe: ProbeSpec,
    /// Object preparation; defaults to the first basis state.
    pub object_state: CVector,
}

/// Parse and validate a model document.
pub fn parse_model(json: &str) -> Result<LoadedModel> {
    let file: ModelFile = serde_json::from_str(json).map_err(|e| {
        NiqsError::InvalidModel(format!(
            "JSON parse error at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    from_file(&file)
}

pub fn from_file(file: &ModelFile) -> Result<LoadedModel> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(NiqsError::InvalidModel(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let lw = &file.layout;
    let n_ext = lw.n_ext.unwrap_or(lw.n);
    let embed_s = lw.embed_s.clone().unwrap_or_else(|| (0..lw.n).collect());
    let m_ext = lw.m_ext.unwrap_or(lw.m);
    let embed_d = lw.embed_d.clone().unwrap_or_else(|| (0..lw.m).collect());
    let layout = SpaceLayout::new(lw.n, lw.m, lw.m_r, n_ext, embed_s, m_ext, embed_d)
        .map_err(|e| NiqsError::InvalidModel(format!("layout: {e}")))?;

    let dynamics = match &file.dynamics {
        DynamicsWire::DirectD { matrix } => {
            Dynamics::DirectD(wire_to_matrix("dynamics.matrix", matrix)?)
        }
        DynamicsWire::UnitaryPair { u_full, h_s_free, h_d_free, t } => Dynamics::UnitaryPair {
            u_full: wire_to_matrix("dynamics.u_full", u_full)?,
            h_s_free: wire_to_matrix("dynamics.h_s_free", h_s_free)?,
            h_d_free: wire_to_matrix("dynamics.h_d_free", h_d_free)?,
            t: *t,
        },
        DynamicsWire::HamiltonianSchedule { segments } => {
            let mut segs = Vec::with_capacity(segments.len());
            for (i, s) in segments.iter().enumerate() {
                segs.push(ScheduleSegment {
                    h_s: wire_to_matrix(&format!("dynamics.segments[{i}].h_s"), &s.h_s)?,
                    h_d: wire_to_matrix(&format!("dynamics.segments[{i}].h_d"), &s.h_d)?,
                    h_i: wire_to_matrix(&format!("dynamics.segments[{i}].h_i"), &s.h_i)?,
                    duration: s.duration,
                });
            }
            Dynamics::HamiltonianSchedule(segs)
        }
    };

    let model = InteractionModel::new(layout, dynamics, file.hbar)?;

    let pw = &file.probe;
    let psi_r = wire_to_vector("probe.psi_r", &pw.psi_r)?;
    let psi_d = wire_to_vector("probe.psi_d", &pw.psi_d)?;
    if psi_r.dim() != model.layout.m_r {
        return Err(NiqsError::InvalidModel(format!(
            "probe.psi_r has dimension {}, layout says m_r = {}",
            psi_r.dim(),
            model.layout.m_r
        )));
    }
    if psi_d.dim() != model.layout.m {
        return Err(NiqsError::InvalidModel(format!(
            "probe.psi_d has dimension {}, layout says m = {}",
            psi_d.dim(),
            model.layout.m
        )));
    }
    let probe = ProbeSpec::new(
        wire_to_complex(&pw.alpha),
        wire_to_complex(&pw.beta),
        psi_r,
        psi_d,
    )?;

    let object_state = match &file.object_state {
        Some(w) => {
            let v = wire_to_vector("object_state", w)?;
            if v.dim() != model.layout.n {
                return Err(NiqsError::InvalidModel(format!(
                    "object_state has dimension {}, layout says n = {}",
                    v.dim(),
                    model.layout.n
                )));
            }
            v.normalized(1e-12).ok_or_else(|| {
                NiqsError::InvalidModel("object_state must have nonzero norm".into())
            })?
        }
        None => CVector::basis(model.layout.n, 0),
    };

    Ok(LoadedModel { model, probe, object_state })
}

pub fn read_model(path: &std::path::Path) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        NiqsError::InvalidConfig(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn builtin_examples_round_trip() {
        for name in builtin::EXAMPLE_NAMES {
            let file = builtin::example_model(name).unwrap();
            let json = serde_json::to_string_pretty(&file).unwrap();
            let loaded = parse_model(&json).unwrap();
            let reparsed = parse_model(&json).unwrap();
            assert_eq!(loaded.model, reparsed.model, "{name}");
            assert_eq!(loaded.probe, reparsed.probe, "{name}");
        }
    }

    #[test]
    fn parse_error_carries_position() {
        let err = parse_model("{ not json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn schema_version_is_enforced() {
        let file = builtin::example_model("mach-zehnder-atom").unwrap();
        let mut value = serde_json::to_value(&file).unwrap();
        value["schema_version"] = serde_json::json!(99);
        let err = parse_model(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("schema_version"));
    }

    #[test]
    fn unitary_pair_models_parse_and_assemble() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // 1x2 joint space rotated by a phase; identity free Hamiltonians.
        let json = serde_json::json!({
            "schema_version": 1,
            "layout": { "n": 2, "m": 1, "m_r": 1 },
            "dynamics": {
                "type": "unitary_pair",
                "u_full": [
                    [[0.0, -1.0], [0.0, 0.0]],
                    [[0.0, 0.0], [0.0, -1.0]]
                ],
                "h_s_free": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
                "h_d_free": [
                    [[0.0, 0.0], [0.0, 0.0]],
                    [[0.0, 0.0], [0.0, 0.0]]
                ],
                "t": 1.0
            },
            "probe": {
                "alpha": [s, 0.0],
                "beta": [s, 0.0],
                "psi_r": [[1.0, 0.0]],
                "psi_d": [[1.0, 0.0]]
            }
        });
        let loaded = parse_model(&json.to_string()).unwrap();
        let d = crate::model::assemble_d(&loaded.model).unwrap();
        // a global -i phase: still unitary, sigma_max = 1
        assert!((d.sigma_max() - 1.0).abs() < 1e-12);
        assert!((d.matrix()[(0, 0)] - C64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn non_unitary_u_full_is_rejected() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let json = serde_json::json!({
            "schema_version": 1,
            "layout": { "n": 1, "m": 1, "m_r": 1 },
            "dynamics": {
                "type": "unitary_pair",
                "u_full": [[[2.0, 0.0]]],
                "h_s_free": [[[0.0, 0.0]]],
                "h_d_free": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
                "t": 1.0
            },
            "probe": {
                "alpha": [s, 0.0],
                "beta": [s, 0.0],
                "psi_r": [[1.0, 0.0]],
                "psi_d": [[1.0, 0.0]]
            }
        });
        assert!(matches!(
            parse_model(&json.to_string()),
            Err(NiqsError::NotUnitary { .. })
        ));
    }

    #[test]
    fn non_hermitian_schedule_is_rejected() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let json = serde_json::json!({
            "schema_version": 1,
            "layout": { "n": 1, "m": 1, "m_r": 1 },
            "dynamics": {
                "type": "hamiltonian_schedule",
                "segments": [{
                    "h_s": [[[0.0, 0.0]]],
                    "h_d": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
                    "h_i": [[[0.0, 1.0]]],
                    "duration": 1.0
                }]
            },
            "probe": {
                "alpha": [s, 0.0],
                "beta": [s, 0.0],
                "psi_r": [[1.0, 0.0]],
                "psi_d": [[1.0, 0.0]]
            }
        });
        assert!(matches!(
            parse_model(&json.to_string()),
            Err(NiqsError::NotHermitian { .. })
        ));
    }

    #[test]
    fn dimension_mismatches_are_named() {
        let file = builtin::example_model("mach-zehnder-atom").unwrap();
        let mut value = serde_json::to_value(&file).unwrap();
        value["probe"]["psi_d"] = serde_json::json!([[1.0, 0.0]]);
        let err = parse_model(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("psi_d"), "{err}");
    }
}
