//! Canonical example models, shipped so every headline number is
//! reproducible from a file.

use crate::error::{NiqsError, Result};
use crate::modelfile::{
    DynamicsWire, LayoutWire, ModelFile, ProbeWire, SegmentWire, SCHEMA_VERSION,
};

pub const EXAMPLE_NAMES: &[&str] = &["mach-zehnder-atom", "absorber", "identity"];

const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Build one of the shipped models by name.
pub fn example_model(name: &str) -> Result<ModelFile> {
    match name {
        "mach-zehnder-atom" => Ok(mach_zehnder_atom()),
        "absorber" => Ok(absorber()),
        "identity" => Ok(identity()),
        other => Err(NiqsError::InvalidConfig(format!(
            "unknown example '{other}'; known: {}",
            EXAMPLE_NAMES.join(", ")
        ))),
    }
}

fn zero(ar: usize, ac: usize) -> Vec<Vec<[f64; 2]>> {
    vec![vec![[0.0, 0.0]; ac]; ar]
}

/// Two-level atom in a Mach-Zehnder interferometer. The probe photon
/// carries a path label (upper = reference, lower = interacting) and a
/// circular polarization; the box absorbs matched polarizations and the
/// survivors are exactly the mismatched ones:
/// `D = |l+>|m-><m-|<l+| + |l->|m+><m+|<l-|`.
fn mach_zehnder_atom() -> ModelFile {
    let mut d = zero(4, 4);
    d[1][1] = [1.0, 0.0]; // (l+, m-) survives
    d[2][2] = [1.0, 0.0]; // (l-, m+) survives
    let x_pol = vec![[INV_SQRT_2, 0.0], [INV_SQRT_2, 0.0]];
    ModelFile {
        schema_version: SCHEMA_VERSION,
        layout: LayoutWire {
            n: 2,
            m: 2,
            m_r: 2,
            n_ext: None,
            embed_s: None,
            m_ext: None,
            embed_d: None,
        },
        hbar: 1.0,
        dynamics: DynamicsWire::DirectD { matrix: d },
        probe: ProbeWire {
            alpha: [INV_SQRT_2, 0.0],
            beta: [INV_SQRT_2, 0.0],
            psi_r: x_pol.clone(),
            psi_d: x_pol.clone(),
        },
        object_state: Some(x_pol),
    }
}

/// Perfect absorber: any probe amplitude entering the box is lost, which is
/// the classic interaction-free measurement limit. The object keeps a
/// two-level internal state so nondistortion stays observable.
fn absorber() -> ModelFile {
    ModelFile {
        schema_version: SCHEMA_VERSION,
        layout: LayoutWire {
            n: 2,
            m: 1,
            m_r: 1,
            n_ext: None,
            embed_s: None,
            m_ext: None,
            embed_d: None,
        },
        hbar: 1.0,
        dynamics: DynamicsWire::DirectD { matrix: zero(2, 2) },
        probe: ProbeWire {
            alpha: [INV_SQRT_2, 0.0],
            beta: [INV_SQRT_2, 0.0],
            psi_r: vec![[1.0, 0.0]],
            psi_d: vec![[1.0, 0.0]],
        },
        object_state: None,
    }
}

/// No interaction at all (`H_I = 0`): the box is transparent even when
/// occupied, so interrogation is impossible. Free Hamiltonians are nonzero
/// to exercise the full assembly path.
fn identity() -> ModelFile {
    let h_s = vec![
        vec![[0.0, 0.0], [0.0, 0.0]],
        vec![[0.0, 0.0], [0.5, 0.0]],
    ];
    // probe space: reference level first, then the two interacting levels
    let h_d = vec![
        vec![[0.3, 0.0], [0.0, 0.0], [0.0, 0.0]],
        vec![[0.0, 0.0], [-0.2, 0.0], [0.0, 0.0]],
        vec![[0.0, 0.0], [0.0, 0.0], [0.1, 0.0]],
    ];
    ModelFile {
        schema_version: SCHEMA_VERSION,
        layout: LayoutWire {
            n: 2,
            m: 2,
            m_r: 1,
            n_ext: None,
            embed_s: None,
            m_ext: None,
            embed_d: None,
        },
        hbar: 1.0,
        dynamics: DynamicsWire::HamiltonianSchedule {
            segments: vec![SegmentWire {
                h_s,
                h_d,
                h_i: zero(4, 4),
                duration: 1.0,
            }],
        },
        probe: ProbeWire {
            alpha: [INV_SQRT_2, 0.0],
            beta: [INV_SQRT_2, 0.0],
            psi_r: vec![[1.0, 0.0]],
            psi_d: vec![[INV_SQRT_2, 0.0], [INV_SQRT_2, 0.0]],
        },
        object_state: None,
    }
}
