//! Hybrid quantum-classical states and the maps between the total, quantum
//! and classical descriptions.
//!
//! A [`HybridState`] with classical dimension `n + 1` holds one quantum block
//! per classical event. Block traces are the classical probabilities, the
//! block sum is the reduced quantum state.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

/// Numerical tolerances used when validating operators and states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub idempotency: f64,
    /// Smallest eigenvalue accepted is `-positivity`.
    pub positivity: f64,
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            idempotency: 1e-10,
            positivity: 1e-9,
            trace: 1e-9,
        }
    }
}

fn check_square(m: &CMatrix, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::InvalidOperator(format!(
            "{what} must be square with dimension >= 1, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !linalg::is_finite(m) {
        return Err(Error::InvalidOperator(format!("{what} has non-finite entries")));
    }
    Ok(())
}

/// Bounded operator on a `dim`-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOperator(CMatrix);

impl QuantumOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m, "operator")?;
        Ok(Self(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(linalg::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(linalg::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

/// Hermitian, idempotent, trace-one projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector(CMatrix);

impl Projector {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_square(&m, "projector")?;
        let (herm, _) = linalg::hermiticity_deviation(&m);
        if herm > tol.hermiticity {
            return Err(Error::InvalidProjector(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let idem = linalg::max_abs(&(&m * &m - &m));
        if idem > tol.idempotency {
            return Err(Error::InvalidProjector(format!(
                "not idempotent (|e^2 - e| = {idem:.3e})"
            )));
        }
        let tr = linalg::trace(&m);
        if (tr.re - 1.0).abs() > tol.idempotency || tr.im.abs() > tol.idempotency {
            return Err(Error::InvalidProjector(format!("trace {tr} is not 1")));
        }
        Ok(Self(m))
    }

    /// Projector onto computational basis vector `index`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, limit: dim });
        }
        Ok(Self(linalg::matrix_unit(dim, index, index)))
    }

    /// Projector onto the direction of a nonzero vector.
    pub fn from_vector(v: &[C64]) -> Result<Self> {
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if v.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidProjector("zero or non-finite vector".into()));
        }
        Self::new(linalg::outer_normalized(v))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    /// `Tr(e f)`; zero for mutually orthogonal rank-1 projectors.
    pub fn overlap(&self, other: &Projector) -> f64 {
        linalg::real_trace(&(&self.0 * &other.0))
    }

    /// Weight `Tr(e rho)` of a block along this projector.
    pub fn weight(&self, rho: &CMatrix) -> f64 {
        linalg::real_trace(&(&self.0 * rho))
    }
}

/// Off-diagonal basis element `|row><col|` (not trace one, not a projector).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixUnit {
    pub dim: usize,
    pub row: usize,
    pub col: usize,
}

impl MatrixUnit {
    pub fn new(dim: usize, row: usize, col: usize) -> Result<Self> {
        let limit = dim;
        if row >= limit {
            return Err(Error::IndexOutOfRange { index: row, limit });
        }
        if col >= limit {
            return Err(Error::IndexOutOfRange { index: col, limit });
        }
        Ok(Self { dim, row, col })
    }

    pub fn matrix(&self) -> CMatrix {
        linalg::matrix_unit(self.dim, self.row, self.col)
    }
}

/// One quantum block of a hybrid state: Hermitian, positive semidefinite,
/// trace in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityBlock(CMatrix);

impl DensityBlock {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_square(&m, "density block")?;
        let report = BlockReport::of(&m);
        if let Some(v) = report.violations(tol).into_iter().next() {
            return Err(Error::InvalidState(v.to_string()));
        }
        if report.trace > 1.0 + tol.trace {
            return Err(Error::InvalidState(format!("block trace {} exceeds 1", report.trace)));
        }
        Ok(Self(m))
    }

    /// Unit-trace state with the given real diagonal weights.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(weights[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::new(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(linalg::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::real_trace(&self.0)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

impl From<Projector> for DensityBlock {
    fn from(p: Projector) -> Self {
        Self(p.0)
    }
}

/// Classical distribution over the `n + 1` events.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(p, Tolerances::default().trace)
    }

    pub fn with_tolerance(p: Vec<f64>, tol: f64) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidState("empty probability vector".into()));
        }
        if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < -tol) {
            return Err(Error::InvalidState(format!("probability {x} out of range")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self(p))
    }

    /// Detector at rest: all weight on the no-registration event 0.
    pub fn initial(classical_dim: usize) -> Self {
        let mut p = vec![0.0; classical_dim.max(1)];
        p[0] = 1.0;
        Self(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Block-diagonal hybrid state `diag(rho_0, ..., rho_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    blocks: Vec<CMatrix>,
}

impl HybridState {
    /// Builds a state and rejects it unless [`validate_state`] passes.
    pub fn new(blocks: Vec<CMatrix>) -> Result<Self> {
        Self::with_tolerances(blocks, &Tolerances::default())
    }

    pub fn with_tolerances(blocks: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        let state = Self::from_raw(blocks)?;
        let report = validate_state(&state, tol);
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidState(v.to_string()));
        }
        Ok(state)
    }

    pub fn from_density_blocks(blocks: Vec<DensityBlock>) -> Result<Self> {
        Self::new(blocks.into_iter().map(DensityBlock::into_matrix).collect())
    }

    /// Structural checks only (square, equal dimension, finite). Use
    /// [`validate_state`] to inspect the physical invariants.
    pub fn from_raw(blocks: Vec<CMatrix>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidState("hybrid state needs at least one block".into()))?;
        let dim = first.nrows();
        for (alpha, b) in blocks.iter().enumerate() {
            check_square(b, "block")?;
            if b.nrows() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "block {alpha} has dimension {}, expected {dim}",
                    b.nrows()
                )));
            }
        }
        Ok(Self { blocks })
    }

    pub fn classical_dim(&self) -> usize {
        self.blocks.len()
    }

    pub fn quantum_dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn block(&self, alpha: usize) -> &CMatrix {
        &self.blocks[alpha]
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(linalg::real_trace).sum()
    }
}

/// `w ⊗ P = diag(p_0 w, ..., p_n w)`.
pub fn product_state(w: &DensityBlock, p: &ProbabilityVector) -> Result<HybridState> {
    let tol = Tolerances::default();
    let tr = w.trace();
    if (tr - 1.0).abs() > tol.trace {
        return Err(Error::InvalidState(format!(
            "quantum factor must have unit trace, got {tr}"
        )));
    }
    let blocks = p
        .as_slice()
        .iter()
        .map(|&pa| w.matrix() * C64::new(pa, 0.0))
        .collect();
    HybridState::from_raw(blocks)
}

/// Reduced quantum state `sum_alpha rho_alpha`.
pub fn quantum_marginal(rho: &HybridState) -> DensityBlock {
    let mut acc = linalg::zeros(rho.quantum_dim());
    for b in rho.blocks() {
        acc += b;
    }
    DensityBlock(acc)
}

/// Classical distribution `(Tr rho_0, ..., Tr rho_n)`.
pub fn classical_marginal(rho: &HybridState) -> ProbabilityVector {
    ProbabilityVector(rho.blocks().iter().map(linalg::real_trace).collect())
}

/// Per-block diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub hermiticity_deviation: f64,
    /// Position of the largest `|rho - rho†|` entry.
    pub worst_entry: (usize, usize),
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub trace_imag: f64,
}

impl BlockReport {
    fn of(m: &CMatrix) -> Self {
        let (hermiticity_deviation, worst_entry) = linalg::hermiticity_deviation(m);
        let tr = linalg::trace(m);
        Self {
            hermiticity_deviation,
            worst_entry,
            min_eigenvalue: linalg::min_eigenvalue(m),
            trace: tr.re,
            trace_imag: tr.im,
        }
    }

    fn violations(&self, tol: &Tolerances) -> Vec<String> {
        let mut out = Vec::new();
        if self.hermiticity_deviation > tol.hermiticity {
            out.push(format!(
                "not Hermitian: |rho - rho†| = {:.3e} at {:?}",
                self.hermiticity_deviation, self.worst_entry
            ));
        }
        if self.min_eigenvalue < -tol.positivity {
            out.push(format!("negative eigenvalue {:.3e}", self.min_eigenvalue));
        }
        if self.trace < -tol.trace || self.trace_imag.abs() > tol.trace {
            out.push(format!("block trace {} out of range", self.trace));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Hermiticity { block: usize, deviation: f64, entry: (usize, usize) },
    Positivity { block: usize, min_eigenvalue: f64 },
    BlockTrace { block: usize, trace: f64 },
    TotalTrace { deviation: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Hermiticity { block, deviation, entry } => write!(
                f,
                "block {block} not Hermitian: max |rho - rho†| = {deviation:.3e} at {entry:?}"
            ),
            Violation::Positivity { block, min_eigenvalue } => {
                write!(f, "block {block} has eigenvalue {min_eigenvalue:.3e}")
            }
            Violation::BlockTrace { block, trace } => {
                write!(f, "block {block} trace {trace} outside [0, 1]")
            }
            Violation::TotalTrace { deviation } => {
                write!(f, "total trace deviates from 1 by {deviation:.3e}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub blocks: Vec<BlockReport>,
    pub total_trace_deviation: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().map(|b| b.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    pub fn max_hermiticity_deviation(&self) -> f64 {
        self.blocks.iter().map(|b| b.hermiticity_deviation).fold(0.0, f64::max)
    }
}

pub fn validate_state(rho: &HybridState, tol: &Tolerances) -> ValidationReport {
    let blocks: Vec<BlockReport> = rho.blocks().iter().map(BlockReport::of).collect();
    let mut violations = Vec::new();
    for (block, r) in blocks.iter().enumerate() {
        if r.hermiticity_deviation > tol.hermiticity {
            violations.push(Violation::Hermiticity {
                block,
                deviation: r.hermiticity_deviation,
                entry: r.worst_entry,
            });
        }
        if r.min_eigenvalue < -tol.positivity {
            violations.push(Violation::Positivity { block, min_eigenvalue: r.min_eigenvalue });
        }
        if r.trace < -tol.trace || r.trace > 1.0 + tol.trace {
            violations.push(Violation::BlockTrace { block, trace: r.trace });
        }
    }
    let total: f64 = blocks.iter().map(|b| b.trace).sum();
    let total_trace_deviation = (total - 1.0).abs();
    if total_trace_deviation > tol.trace {
        violations.push(Violation::TotalTrace { deviation: total_trace_deviation });
    }
    ValidationReport { blocks, total_trace_deviation, violations }
}
