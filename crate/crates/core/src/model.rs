//! Physical setup: Hilbert space layout, dynamics, and assembly of the
//! contraction operator `D`.
//!
//! The object lives in a metastable space of dimension `n`, possibly
//! embedded in a larger space that also holds excited and ground levels.
//! The probe splits into a non-interacting reference part (dimension `m_r`)
//! and an interacting part (dimension `m`); only the interacting part enters
//! the black box. `D` is the compression to the metastable sector of the
//! interaction evolution followed by the inverse free evolution: its action
//! on `|psi_d> (x) |psi_S>` is everything that survives decay monitoring.

use crate::error::{NiqsError, Result};
use crate::linalg::{self, CMatrix, CVector, Tolerances, C64, MAX_COMPOSITE_DIM, ONE};

/// Dimensions and index embeddings of the object and probe spaces.
///
/// `embed_s` lists which levels of the extended object space form the
/// metastable subspace; `embed_d` does the same for the interacting probe
/// subspace inside its extended space. In probe coordinates the reference
/// space occupies indices `0..m_r` and the (extended) interacting space
/// follows it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceLayout {
    /// Metastable object dimension.
    pub n: usize,
    /// Interacting probe dimension.
    pub m: usize,
    /// Reference (non-interacting) probe dimension.
    pub m_r: usize,
    /// Extended object dimension (metastable plus excited/ground levels).
    pub n_ext: usize,
    /// Indices of the metastable levels inside the extended object space.
    pub embed_s: Vec<usize>,
    /// Extended interacting probe dimension.
    pub m_ext: usize,
    /// Indices of the interacting probe levels inside its extended space.
    pub embed_d: Vec<usize>,
}

impl SpaceLayout {
    /// Layout without any extension: the metastable and interacting spaces
    /// are the whole object and probe spaces.
    pub fn compact(n: usize, m: usize, m_r: usize) -> Result<Self> {
        SpaceLayout::new(n, m, m_r, n, (0..n).collect(), m, (0..m).collect())
    }

    pub fn new(
        n: usize,
        m: usize,
        m_r: usize,
        n_ext: usize,
        embed_s: Vec<usize>,
        m_ext: usize,
        embed_d: Vec<usize>,
    ) -> Result<Self> {
        if n == 0 || m == 0 || m_r == 0 {
            return Err(NiqsError::InvalidModel(
                "dimensions n, m, m_r must all be at least 1".into(),
            ));
        }
        if n_ext < n || m_ext < m {
            return Err(NiqsError::InvalidModel(
                "extended dimensions must not be smaller than the embedded ones".into(),
            ));
        }
        check_embedding("embed_s", &embed_s, n, n_ext)?;
        check_embedding("embed_d", &embed_d, m, m_ext)?;
        if m_ext * n_ext > MAX_COMPOSITE_DIM {
            return Err(NiqsError::ModelTooLarge {
                dim: m_ext * n_ext,
                max: MAX_COMPOSITE_DIM,
            });
        }
        Ok(SpaceLayout { n, m, m_r, n_ext, embed_s, m_ext, embed_d })
    }

    /// Composite dimension of the metastable interacting sector.
    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    /// Full probe dimension `m_r + m`.
    pub fn probe_dim(&self) -> usize {
        self.m_r + self.m
    }

    /// Composite index in the extended joint space for probe level `j` and
    /// object level `s` of the embedded sector.
    fn ext_index(&self, j: usize, s: usize) -> usize {
        self.embed_d[j] * self.n_ext + self.embed_s[s]
    }
}

fn check_embedding(name: &str, embed: &[usize], want: usize, ext: usize) -> Result<()> {
    if embed.len() != want {
        return Err(NiqsError::InvalidModel(format!(
            "{name} must list exactly {want} indices, got {}",
            embed.len()
        )));
    }
    let mut seen = vec![false; ext];
    for &i in embed {
        if i >= ext {
            return Err(NiqsError::InvalidModel(format!(
                "{name} index {i} out of range for extended dimension {ext}"
            )));
        }
        if seen[i] {
            return Err(NiqsError::InvalidModel(format!("{name} index {i} repeated")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// One piecewise-constant segment of the interaction schedule. All three
/// Hamiltonians act on the extended spaces: `h_s` on the extended object
/// space, `h_d` on the full probe space (reference block first), `h_i` on
/// the extended interacting joint space.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSegment {
    pub h_s: CMatrix,
    pub h_d: CMatrix,
    pub h_i: CMatrix,
    pub duration: f64,
}

/// How the dynamics are specified.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// The contraction operator itself, `(m*n) x (m*n)` probe-major. Free
    /// evolutions default to identities.
    DirectD(CMatrix),
    /// Full interaction unitary on the extended joint space plus the free
    /// Hamiltonians and the interaction time.
    UnitaryPair {
        u_full: CMatrix,
        h_s_free: CMatrix,
        h_d_free: CMatrix,
        t: f64,
    },
    /// Ordered piecewise-constant Hamiltonian segments; later segments act
    /// later (compose on the left).
    HamiltonianSchedule(Vec<ScheduleSegment>),
}

/// Full description of an interrogation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionModel {
    pub layout: SpaceLayout,
    pub dynamics: Dynamics,
    pub hbar: f64,
    pub tol: Tolerances,
}

impl InteractionModel {
    pub fn new(layout: SpaceLayout, dynamics: Dynamics, hbar: f64) -> Result<Self> {
        let model = InteractionModel { layout, dynamics, hbar, tol: Tolerances::default() };
        model.validate()?;
        Ok(model)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(NiqsError::InvalidModel("hbar must be positive and finite".into()));
        }
        let l = &self.layout;
        match &self.dynamics {
            Dynamics::DirectD(d) => {
                if d.rows() != l.mn() || d.cols() != l.mn() {
                    return Err(NiqsError::DimensionMismatch(format!(
                        "direct D must be {0}x{0}, got {1}x{2}",
                        l.mn(),
                        d.rows(),
                        d.cols()
                    )));
                }
            }
            Dynamics::UnitaryPair { u_full, h_s_free, h_d_free, t } => {
                let joint = l.m_ext * l.n_ext;
                if u_full.rows() != joint || u_full.cols() != joint {
                    return Err(NiqsError::DimensionMismatch(format!(
                        "u_full must be {joint}x{joint}"
                    )));
                }
                u_full.check_unitary(self.tol.unitary)?;
                if !t.is_finite() || *t < 0.0 {
                    return Err(NiqsError::InvalidModel("t must be nonnegative".into()));
                }
                self.check_free_pair(h_s_free, h_d_free)?;
            }
            Dynamics::HamiltonianSchedule(segments) => {
                if segments.is_empty() {
                    return Err(NiqsError::InvalidModel("schedule has no segments".into()));
                }
                let joint = l.m_ext * l.n_ext;
                for (i, seg) in segments.iter().enumerate() {
                    if !(seg.duration > 0.0 && seg.duration.is_finite()) {
                        return Err(NiqsError::InvalidModel(format!(
                            "segment {i}: duration must be positive"
                        )));
                    }
                    if seg.h_i.rows() != joint || seg.h_i.cols() != joint {
                        return Err(NiqsError::DimensionMismatch(format!(
                            "segment {i}: h_i must be {joint}x{joint}"
                        )));
                    }
                    seg.h_i.check_hermitian(self.tol.herm)?;
                    self.check_free_pair(&seg.h_s, &seg.h_d)?;
                }
            }
        }
        Ok(())
    }

    fn check_free_pair(&self, h_s: &CMatrix, h_d: &CMatrix) -> Result<()> {
        let l = &self.layout;
        if h_s.rows() != l.n_ext || h_s.cols() != l.n_ext {
            return Err(NiqsError::DimensionMismatch(format!(
                "free object Hamiltonian must be {0}x{0}",
                l.n_ext
            )));
        }
        let probe_full = l.m_r + l.m_ext;
        if h_d.rows() != probe_full || h_d.cols() != probe_full {
            return Err(NiqsError::DimensionMismatch(format!(
                "free probe Hamiltonian must be {probe_full}x{probe_full} (reference block first)"
            )));
        }
        h_s.check_hermitian(self.tol.herm)?;
        h_d.check_hermitian(self.tol.herm)?;
        // The reference arm never couples to the interacting arm; a free
        // Hamiltonian mixing them breaks the direct-sum decomposition.
        let mut coupling = 0.0f64;
        for r in 0..l.m_r {
            for c in l.m_r..probe_full {
                coupling += h_d[(r, c)].norm_sqr();
            }
        }
        let scale = h_d.frobenius_norm().max(1.0);
        if coupling.sqrt() > self.tol.herm * scale {
            return Err(NiqsError::InvalidModel(
                "free probe Hamiltonian couples the reference and interacting arms".into(),
            ));
        }
        Ok(())
    }

    /// Total evolution time of the model's dynamics.
    pub fn total_time(&self) -> f64 {
        match &self.dynamics {
            Dynamics::DirectD(_) => 0.0,
            Dynamics::UnitaryPair { t, .. } => *t,
            Dynamics::HamiltonianSchedule(segments) => {
                segments.iter().map(|s| s.duration).sum()
            }
        }
    }

    /// Interacting-probe block of a full probe Hamiltonian.
    fn h_d_interacting(&self, h_d: &CMatrix) -> CMatrix {
        let l = &self.layout;
        let mut out = CMatrix::zeros(l.m_ext, l.m_ext);
        for r in 0..l.m_ext {
            for c in 0..l.m_ext {
                out[(r, c)] = h_d[(l.m_r + r, l.m_r + c)];
            }
        }
        out
    }

    /// Lift free Hamiltonians to the extended joint space (probe-major).
    fn joint_free_hamiltonian(&self, h_s: &CMatrix, h_d: &CMatrix) -> Result<CMatrix> {
        let l = &self.layout;
        let h_dd = self.h_d_interacting(h_d);
        let a = linalg::kron(&h_dd, &CMatrix::identity(l.n_ext))?;
        let b = linalg::kron(&CMatrix::identity(l.m_ext), h_s)?;
        Ok(a.add(&b))
    }
}

/// The `(m*n) x (m*n)` contraction operator describing no-decay scattering.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionOperator {
    matrix: CMatrix,
    m: usize,
    n: usize,
    sigma_max: f64,
}

impl ContractionOperator {
    /// Wrap a matrix after verifying its shape and the contraction bound.
    pub fn new(matrix: CMatrix, m: usize, n: usize, tol_contraction: f64) -> Result<Self> {
        if matrix.rows() != m * n || matrix.cols() != m * n {
            return Err(NiqsError::DimensionMismatch(format!(
                "contraction operator must be {0}x{0}, got {1}x{2}",
                m * n,
                matrix.rows(),
                matrix.cols()
            )));
        }
        let sigma_max = linalg::spectral_norm(&matrix)?;
        if sigma_max > 1.0 + tol_contraction {
            return Err(NiqsError::NotAContraction { sigma: sigma_max, tol: tol_contraction });
        }
        Ok(ContractionOperator { matrix, m, n, sigma_max })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn probe_dim(&self) -> usize {
        self.m
    }

    pub fn object_dim(&self) -> usize {
        self.n
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Object-space block `D_{jk} = <j|_d D |k>_d` under the probe-major
    /// convention.
    pub fn block_view(&self, j: usize, k: usize) -> Result<CMatrix> {
        if j >= self.m || k >= self.m {
            return Err(NiqsError::DimensionMismatch(format!(
                "block index ({j},{k}) out of range for m = {}",
                self.m
            )));
        }
        let n = self.n;
        let mut out = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] = self.matrix[(j * n + r, k * n + c)];
            }
        }
        Ok(out)
    }

    /// Apply `D` to a product vector `|psi_d> (x) |psi_s>`.
    pub fn apply_product(&self, psi_d: &CVector, psi_s: &CVector) -> CVector {
        self.matrix.mul_vec(&psi_d.tensor(psi_s))
    }

    /// Partial contraction `<chi| D |psi_d>` over the probe index: the
    /// `n x n` object-space matrix `sum_jk conj(chi_j) psi_k D_{jk}`.
    pub fn partial_contraction(&self, chi: &CVector, psi_d: &CVector) -> CMatrix {
        let (m, n) = (self.m, self.n);
        debug_assert_eq!(chi.dim(), m);
        debug_assert_eq!(psi_d.dim(), m);
        let mut out = CMatrix::zeros(n, n);
        for j in 0..m {
            let cj = chi[j].conj();
            if cj == linalg::ZERO {
                continue;
            }
            for k in 0..m {
                let w = cj * psi_d[k];
                if w == linalg::ZERO {
                    continue;
                }
                for r in 0..n {
                    for c in 0..n {
                        out[(r, c)] += w * self.matrix[(j * n + r, k * n + c)];
                    }
                }
            }
        }
        out
    }
}

/// Free-evolution unitaries advancing probe and object states to their
/// primed versions.
#[derive(Debug, Clone)]
pub struct FreeEvolution {
    /// `n x n` unitary on the metastable object space.
    pub u_s: CMatrix,
    /// `(m_r + m) x (m_r + m)` unitary on the probe space, block-diagonal
    /// over the reference/interacting split.
    pub u_probe: CMatrix,
}

impl FreeEvolution {
    pub fn identity(layout: &SpaceLayout) -> Self {
        FreeEvolution {
            u_s: CMatrix::identity(layout.n),
            u_probe: CMatrix::identity(layout.probe_dim()),
        }
    }

    /// Reference-arm block of the probe unitary.
    pub fn u_r(&self, layout: &SpaceLayout) -> CMatrix {
        sub_block(&self.u_probe, 0, 0, layout.m_r, layout.m_r)
    }

    /// Interacting-arm block of the probe unitary.
    pub fn u_d(&self, layout: &SpaceLayout) -> CMatrix {
        sub_block(&self.u_probe, layout.m_r, layout.m_r, layout.m, layout.m)
    }
}

fn sub_block(m: &CMatrix, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix {
    let mut out = CMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            out[(r, c)] = m[(r0 + r, c0 + c)];
        }
    }
    out
}

/// Assemble the contraction operator from the model's dynamics.
///
/// For Hamiltonian dynamics this is the compression of
/// `U_int * U_free^dagger` to the metastable interacting sector, where
/// `U_int` is the ordered product of per-segment exponentials and `U_free`
/// the matching free product. A `DirectD` model returns its matrix after the
/// contraction check.
pub fn assemble_d(model: &InteractionModel) -> Result<ContractionOperator> {
    let l = &model.layout;
    match &model.dynamics {
        Dynamics::DirectD(d) => {
            ContractionOperator::new(d.clone(), l.m, l.n, model.tol.contraction)
        }
        Dynamics::UnitaryPair { u_full, h_s_free, h_d_free, t } => {
            let h_free = model.joint_free_hamiltonian(h_s_free, h_d_free)?;
            let unfree = linalg::herm_exp(
                &h_free,
                C64::new(0.0, *t / model.hbar),
                model.tol.herm,
            )?;
            let ext = u_full.matmul(&unfree);
            compress(model, &ext)
        }
        Dynamics::HamiltonianSchedule(segments) => {
            let joint = l.m_ext * l.n_ext;
            let mut u_int = CMatrix::identity(joint);
            let mut u_free = CMatrix::identity(joint);
            for seg in segments {
                let h_free = model.joint_free_hamiltonian(&seg.h_s, &seg.h_d)?;
                let h_full = h_free.add(&seg.h_i);
                let scale = C64::new(0.0, -seg.duration / model.hbar);
                u_int = linalg::herm_exp(&h_full, scale, model.tol.herm)?.matmul(&u_int);
                u_free = linalg::herm_exp(&h_free, scale, model.tol.herm)?.matmul(&u_free);
            }
            let ext = u_int.matmul(&u_free.dagger());
            compress(model, &ext)
        }
    }
}

/// Compress an extended-joint-space operator to the metastable interacting
/// sector through the layout embeddings.
fn compress(model: &InteractionModel, ext: &CMatrix) -> Result<ContractionOperator> {
    let l = &model.layout;
    let mn = l.mn();
    let mut d = CMatrix::zeros(mn, mn);
    for j in 0..l.m {
        for s in 0..l.n {
            let row = l.ext_index(j, s);
            for k in 0..l.m {
                for t in 0..l.n {
                    d[(j * l.n + s, k * l.n + t)] = ext[(row, l.ext_index(k, t))];
                }
            }
        }
    }
    ContractionOperator::new(d, l.m, l.n, model.tol.contraction)
}

/// Free evolutions `(U_S, U_probe)` for duration `t`.
///
/// For `DirectD` models the free evolutions are identities. For Hamiltonian
/// models the extended-space exponential is compressed to the embedded
/// sector, which must stay invariant under free evolution (the metastable
/// space is closed under free evolution by assumption); leakage is reported
/// as a non-unitary compression.
pub fn free_evolution(model: &InteractionModel, t: f64) -> Result<FreeEvolution> {
    let l = &model.layout;
    match &model.dynamics {
        Dynamics::DirectD(_) => Ok(FreeEvolution::identity(l)),
        Dynamics::UnitaryPair { h_s_free, h_d_free, .. } => {
            free_from_segments(model, &[(h_s_free.clone(), h_d_free.clone(), t)])
        }
        Dynamics::HamiltonianSchedule(segments) => {
            let total = model.total_time();
            if t > total + 1e-12 {
                return Err(NiqsError::InvalidConfig(format!(
                    "requested free evolution time {t} exceeds schedule length {total}"
                )));
            }
            let mut remaining = t;
            let mut walk = Vec::new();
            for seg in segments {
                if remaining <= 0.0 {
                    break;
                }
                let step = seg.duration.min(remaining);
                walk.push((seg.h_s.clone(), seg.h_d.clone(), step));
                remaining -= step;
            }
            free_from_segments(model, &walk)
        }
    }
}

/// Free evolutions at the model's own total duration (the primed states).
pub fn free_evolution_total(model: &InteractionModel) -> Result<FreeEvolution> {
    free_evolution(model, model.total_time())
}

fn free_from_segments(
    model: &InteractionModel,
    segments: &[(CMatrix, CMatrix, f64)],
) -> Result<FreeEvolution> {
    let l = &model.layout;
    let mut u_s_ext = CMatrix::identity(l.n_ext);
    let mut u_probe_ext = CMatrix::identity(l.m_r + l.m_ext);
    for (h_s, h_d, dt) in segments {
        let scale = C64::new(0.0, -dt / model.hbar);
        u_s_ext = linalg::herm_exp(h_s, scale, model.tol.herm)?.matmul(&u_s_ext);
        u_probe_ext = linalg::herm_exp(h_d, scale, model.tol.herm)?.matmul(&u_probe_ext);
    }
    // Compress to the embedded sectors and insist the result stays unitary:
    // free evolution must not leak out of the metastable object space or the
    // interacting probe space.
    let mut u_s = CMatrix::zeros(l.n, l.n);
    for r in 0..l.n {
        for c in 0..l.n {
            u_s[(r, c)] = u_s_ext[(l.embed_s[r], l.embed_s[c])];
        }
    }
    u_s.check_unitary(model.tol.unitary.max(1e-9)).map_err(|_| {
        NiqsError::InvalidModel(
            "free object evolution leaks out of the metastable space".into(),
        )
    })?;
    let probe_dim = l.probe_dim();
    let mut u_probe = CMatrix::zeros(probe_dim, probe_dim);
    let probe_index = |i: usize| if i < l.m_r { i } else { l.m_r + l.embed_d[i - l.m_r] };
    for r in 0..probe_dim {
        for c in 0..probe_dim {
            u_probe[(r, c)] = u_probe_ext[(probe_index(r), probe_index(c))];
        }
    }
    u_probe.check_unitary(model.tol.unitary.max(1e-9)).map_err(|_| {
        NiqsError::InvalidModel(
            "free probe evolution leaks out of the interacting subspace".into(),
        )
    })?;
    Ok(FreeEvolution { u_s, u_probe })
}

/// Initial probe wave `alpha |psi_r> + beta |psi_d>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub alpha: C64,
    pub beta: C64,
    pub psi_r: CVector,
    pub psi_d: CVector,
}

impl ProbeSpec {
    pub fn new(alpha: C64, beta: C64, psi_r: CVector, psi_d: CVector) -> Result<Self> {
        let tol = Tolerances::default();
        let budget = alpha.norm_sqr() + beta.norm_sqr();
        if (budget - 1.0).abs() > tol.norm {
            return Err(NiqsError::InvalidProbe(format!(
                "|alpha|^2 + |beta|^2 = {budget}, expected 1"
            )));
        }
        // The interrogation is vacuous without a box component, and the
        // witness algebra divides by beta.
        if beta.norm() <= 1e-12 {
            return Err(NiqsError::InvalidProbe("beta must be nonzero".into()));
        }
        for (name, v) in [("psi_r", &psi_r), ("psi_d", &psi_d)] {
            if (v.norm() - 1.0).abs() > tol.norm {
                return Err(NiqsError::InvalidProbe(format!("{name} must be a unit vector")));
            }
        }
        Ok(ProbeSpec { alpha, beta, psi_r, psi_d })
    }

    /// Equal split with real amplitudes: `alpha = beta = 1/sqrt(2)`.
    pub fn balanced(psi_r: CVector, psi_d: CVector) -> Result<Self> {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        ProbeSpec::new(s, s, psi_r, psi_d)
    }
}

/// The identity operator on the metastable sector, as a sanity anchor:
/// an empty interaction (`H_I = 0`) assembles to exactly this.
pub fn identity_contraction(m: usize, n: usize) -> ContractionOperator {
    let mut mat = CMatrix::zeros(m * n, m * n);
    for i in 0..m * n {
        mat[(i, i)] = ONE;
    }
    ContractionOperator::new(mat, m, n, 1e-10).expect("identity is a contraction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// The interferometer example: D = |l+>|m-><m-|<l+| + |l->|m+><m+|<l-|.
    pub(crate) fn interferometer_d() -> CMatrix {
        let mut d = CMatrix::zeros(4, 4);
        // probe-major (j, s) = j*2 + s with j in {l+, l-}, s in {m+, m-}
        d[(1, 1)] = ONE; // |l+, m-><l+, m-|
        d[(2, 2)] = ONE; // |l-, m+><l-, m+|
        d
    }

    #[test]
    fn zero_interaction_assembles_to_identity() {
        let layout = SpaceLayout::compact(2, 2, 1).unwrap();
        let h_s = CMatrix::from_real_rows(&[vec![0.3, 0.0], vec![0.0, -0.7]]).unwrap();
        let mut h_d = CMatrix::zeros(3, 3);
        h_d[(0, 0)] = c(0.4, 0.0);
        h_d[(1, 1)] = c(1.1, 0.0);
        h_d[(2, 2)] = c(-0.2, 0.0);
        let seg = ScheduleSegment { h_s, h_d, h_i: CMatrix::zeros(4, 4), duration: 1.3 };
        let model = InteractionModel::new(
            layout,
            Dynamics::HamiltonianSchedule(vec![seg]),
            1.0,
        )
        .unwrap();
        let d = assemble_d(&model).unwrap();
        let diff = d.matrix().sub(&CMatrix::identity(4)).frobenius_norm();
        assert!(diff < 1e-12, "H_I = 0 must give D = I, got deviation {diff}");
    }

    #[test]
    fn interferometer_blocks() {
        let layout = SpaceLayout::compact(2, 2, 2).unwrap();
        let model = InteractionModel::new(
            layout,
            Dynamics::DirectD(interferometer_d()),
            1.0,
        )
        .unwrap();
        let d = assemble_d(&model).unwrap();
        // block(+,+) = |m-><m-|
        let bpp = d.block_view(0, 0).unwrap();
        assert_eq!(bpp[(1, 1)], ONE);
        assert_eq!(bpp[(0, 0)], ZERO);
        // block(-,-) = |m+><m+|
        let bmm = d.block_view(1, 1).unwrap();
        assert_eq!(bmm[(0, 0)], ONE);
        // off-diagonal blocks vanish
        assert_eq!(d.block_view(0, 1).unwrap().frobenius_norm(), 0.0);
        assert_eq!(d.block_view(1, 0).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn identity_blocks() {
        let d = identity_contraction(2, 3);
        assert!(d
            .block_view(0, 0)
            .unwrap()
            .sub(&CMatrix::identity(3))
            .frobenius_norm()
            .abs()
            < 1e-15);
        assert_eq!(d.block_view(0, 1).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn blocks_reassemble_to_original() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (m, n) = (3, 2);
        let entries: Vec<C64> = (0..(m * n) * (m * n))
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mat = CMatrix::new(m * n, m * n, entries).unwrap();
        let sigma = crate::linalg::spectral_norm(&mat).unwrap();
        let mat = mat.scale(c(1.0 / (sigma * (1.0 + 1e-12)), 0.0));
        let d = ContractionOperator::new(mat.clone(), m, n, 1e-10).unwrap();
        let mut rebuilt = CMatrix::zeros(m * n, m * n);
        for j in 0..m {
            for k in 0..m {
                let b = d.block_view(j, k).unwrap();
                for r in 0..n {
                    for cidx in 0..n {
                        rebuilt[(j * n + r, k * n + cidx)] = b[(r, cidx)];
                    }
                }
            }
        }
        assert_eq!(rebuilt, mat);
    }

    #[test]
    fn half_rabi_pulse_is_a_strict_contraction() {
        // Three-level object: metastable m+, m- at indices 0, 1 and an
        // excited level e at index 2. The interaction couples |m+> <-> |e>
        // while the probe sits in its first level.
        let layout = SpaceLayout::new(2, 2, 1, 3, vec![0, 1], 2, vec![0, 1]).unwrap();
        let g = 1.0;
        let t = std::f64::consts::FRAC_PI_4; // quarter of a full Rabi cycle
        let mut h_i = CMatrix::zeros(6, 6);
        // probe-major over n_ext = 3: (j, s) = j*3 + s
        // couple (l+, m+) <-> (l+, e): indices 0*3+0 = 0 and 0*3+2 = 2
        h_i[(0, 2)] = c(g, 0.0);
        h_i[(2, 0)] = c(g, 0.0);
        let seg = ScheduleSegment {
            h_s: CMatrix::zeros(3, 3),
            h_d: CMatrix::zeros(3, 3),
            h_i,
            duration: t,
        };
        let model = InteractionModel::new(
            layout,
            Dynamics::HamiltonianSchedule(vec![seg]),
            1.0,
        )
        .unwrap();
        let d = assemble_d(&model).unwrap();
        // Analytic oracle: the coupled sector rotates by angle g*t, so the
        // (l+, m+) diagonal entry is cos(g*t) and everything else is
        // untouched.
        let sv = crate::linalg::singular_values(d.matrix()).unwrap();
        assert!(sv[0] <= 1.0 + 1e-10);
        assert!(*sv.last().unwrap() < 1.0 - 1e-6);
        let expect = (g * t).cos();
        assert!((d.matrix()[(0, 0)] - c(expect, 0.0)).norm() < 1e-12);
        for i in 1..4 {
            assert!((d.matrix()[(i, i)] - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn extended_probe_space_compresses_to_attenuation() {
        // One monitored probe level embedded in a two-level physical space;
        // the interaction drives it toward the unmonitored level, which
        // counts as loss after compression: D = cos(g t) I_n.
        let layout = SpaceLayout::new(2, 1, 1, 2, vec![0, 1], 2, vec![0]).unwrap();
        let g = 0.8;
        let t = 0.9;
        let mut h_i = CMatrix::zeros(4, 4);
        // joint (j, s) = j*2 + s over m_ext = 2, n_ext = 2: couple
        // (p0, s) <-> (p1, s) for both object levels
        for s in 0..2 {
            h_i[(s, 2 + s)] = c(g, 0.0);
            h_i[(2 + s, s)] = c(g, 0.0);
        }
        let seg = ScheduleSegment {
            h_s: CMatrix::zeros(2, 2),
            h_d: CMatrix::zeros(3, 3),
            h_i,
            duration: t,
        };
        let model = InteractionModel::new(
            layout,
            Dynamics::HamiltonianSchedule(vec![seg]),
            1.0,
        )
        .unwrap();
        let d = assemble_d(&model).unwrap();
        let expect = (g * t).cos();
        for s in 0..2 {
            assert!((d.matrix()[(s, s)] - c(expect, 0.0)).norm() < 1e-12);
        }
        assert!((d.sigma_max() - expect.abs()).abs() < 1e-12);
    }

    #[test]
    fn free_evolution_diagonal_phase() {
        let layout = SpaceLayout::compact(2, 1, 1).unwrap();
        let omega = 0.9;
        let h_s = CMatrix::from_real_rows(&[vec![0.0, 0.0], vec![0.0, omega]]).unwrap();
        let model = InteractionModel::new(
            layout,
            Dynamics::UnitaryPair {
                u_full: CMatrix::identity(2),
                h_s_free: h_s,
                h_d_free: CMatrix::zeros(2, 2),
                t: std::f64::consts::PI / omega,
            },
            1.0,
        )
        .unwrap();
        let frees = free_evolution(&model, std::f64::consts::PI / omega).unwrap();
        assert!((frees.u_s[(0, 0)] - ONE).norm() < 1e-12);
        assert!((frees.u_s[(1, 1)] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!(frees.u_probe.sub(&CMatrix::identity(2)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn free_evolution_is_unitary_for_random_hermitian() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let layout = SpaceLayout::compact(3, 2, 2).unwrap();
        let mut h_s = CMatrix::zeros(3, 3);
        for i in 0..3 {
            h_s[(i, i)] = c(rng.random::<f64>() - 0.5, 0.0);
            for j in (i + 1)..3 {
                let z = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                h_s[(i, j)] = z;
                h_s[(j, i)] = z.conj();
            }
        }
        let model = InteractionModel::new(
            layout,
            Dynamics::UnitaryPair {
                u_full: CMatrix::identity(6),
                h_s_free: h_s,
                h_d_free: CMatrix::zeros(4, 4),
                t: 2.0,
            },
            1.0,
        )
        .unwrap();
        let frees = free_evolution(&model, 2.0).unwrap();
        assert!(frees.u_s.unitary_deviation() < 1e-12);
    }

    #[test]
    fn probe_rejects_zero_beta() {
        let v = CVector::basis(2, 0);
        assert!(matches!(
            ProbeSpec::new(ONE, ZERO, v.clone(), v.clone()),
            Err(NiqsError::InvalidProbe(_))
        ));
    }

    #[test]
    fn probe_rejects_broken_budget() {
        let v = CVector::basis(2, 0);
        assert!(ProbeSpec::new(c(0.9, 0.0), c(0.9, 0.0), v.clone(), v).is_err());
    }

    #[test]
    fn direct_d_rejects_expansion() {
        let layout = SpaceLayout::compact(2, 2, 1).unwrap();
        let mat = CMatrix::identity(4).scale(c(1.5, 0.0));
        let model = InteractionModel::new(layout, Dynamics::DirectD(mat), 1.0).unwrap();
        assert!(matches!(
            assemble_d(&model),
            Err(NiqsError::NotAContraction { .. })
        ));
    }

    #[test]
    fn global_phase_on_u_full_changes_d_by_global_phase_only() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let layout = SpaceLayout::compact(2, 2, 1).unwrap();
        // Random unitary from a random Hermitian generator.
        let mut h = CMatrix::zeros(4, 4);
        for i in 0..4 {
            h[(i, i)] = c(rng.random::<f64>() - 0.5, 0.0);
            for j in (i + 1)..4 {
                let z = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let u = crate::linalg::herm_exp(&h, c(0.0, -1.0), 1e-10).unwrap();
        let build = |u_full: CMatrix| {
            let model = InteractionModel::new(
                layout.clone(),
                Dynamics::UnitaryPair {
                    u_full,
                    h_s_free: CMatrix::zeros(2, 2),
                    h_d_free: CMatrix::zeros(3, 3),
                    t: 1.0,
                },
                1.0,
            )
            .unwrap();
            assemble_d(&model).unwrap()
        };
        let d1 = build(u.clone());
        let phase = c(0.0, 0.77).exp();
        let d2 = build(u.scale(phase));
        // entries agree in magnitude, and the ratio is one global phase
        let mut ratio: Option<C64> = None;
        for (a, b) in d1.matrix().entries().iter().zip(d2.matrix().entries()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
            if a.norm() > 1e-9 {
                let r = b / a;
                if let Some(r0) = ratio {
                    assert!((r - r0).norm() < 1e-10);
                } else {
                    ratio = Some(r);
                }
            }
        }
        assert!((ratio.unwrap().norm() - 1.0).abs() < 1e-10);
    }
}
