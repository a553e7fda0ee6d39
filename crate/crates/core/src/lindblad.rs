//! Liouville evolution of hybrid states.
//!
//! The generator acting on a block-diagonal state is
//!
//! ```text
//! rho' = -i[H, rho] + sum_i V_i† rho V_i - 1/2 { sum_i V_i V_i†, rho }
//! ```
//!
//! where each coupling `V_i` is a block matrix over classical index pairs.
//! Block `(a, b)` of a coupling transfers weight from event `a` to event `b`:
//! it feeds `V_ab† rho_a V_ab` into block `b` and drains `V_ab V_ab†` from
//! block `a`.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::state::{self, HybridState, Tolerances};

/// Block operator `V = [V_ab]` with quantum-operator entries. Missing
/// entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOperator {
    classical_dim: usize,
    quantum_dim: usize,
    entries: Vec<Option<CMatrix>>,
}

impl CouplingOperator {
    pub fn zeros(classical_dim: usize, quantum_dim: usize) -> Self {
        Self {
            classical_dim,
            quantum_dim,
            entries: vec![None; classical_dim * classical_dim],
        }
    }

    pub fn from_entries(
        classical_dim: usize,
        quantum_dim: usize,
        entries: impl IntoIterator<Item = ((usize, usize), CMatrix)>,
    ) -> Result<Self> {
        let mut v = Self::zeros(classical_dim, quantum_dim);
        for ((a, b), m) in entries {
            v.set(a, b, m)?;
        }
        Ok(v)
    }

    pub fn with_entry(mut self, row: usize, col: usize, m: CMatrix) -> Result<Self> {
        self.set(row, col, m)?;
        Ok(self)
    }

    pub fn set(&mut self, row: usize, col: usize, m: CMatrix) -> Result<()> {
        let n = self.classical_dim;
        if row >= n || col >= n {
            return Err(Error::IndexOutOfRange { index: row.max(col), limit: n });
        }
        if m.nrows() != self.quantum_dim || m.ncols() != self.quantum_dim {
            return Err(Error::DimensionMismatch(format!(
                "entry ({row}, {col}) is {}x{}, coupling has quantum dimension {}",
                m.nrows(),
                m.ncols(),
                self.quantum_dim
            )));
        }
        self.entries[row * n + col] = Some(m);
        Ok(())
    }

    pub fn classical_dim(&self) -> usize {
        self.classical_dim
    }

    pub fn quantum_dim(&self) -> usize {
        self.quantum_dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Option<&CMatrix> {
        self.entries[row * self.classical_dim + col].as_ref()
    }

    /// Entry or an explicit zero matrix.
    pub fn entry_or_zero(&self, row: usize, col: usize) -> CMatrix {
        self.entry(row, col).cloned().unwrap_or_else(|| linalg::zeros(self.quantum_dim))
    }

    /// Iterates the stored `(row, col, block)` entries.
    pub fn nonzero_entries(&self) -> impl Iterator<Item = (usize, usize, &CMatrix)> {
        let n = self.classical_dim;
        self.entries
            .iter()
            .enumerate()
            .filter_map(move |(k, e)| e.as_ref().map(|m| (k / n, k % n, m)))
    }

    /// Full product `V V†` as a block matrix.
    fn product_with_adjoint(&self) -> Vec<CMatrix> {
        let n = self.classical_dim;
        let mut out = vec![linalg::zeros(self.quantum_dim); n * n];
        for a in 0..n {
            for c in 0..n {
                for b in 0..n {
                    if let (Some(x), Some(y)) = (self.entry(a, b), self.entry(c, b)) {
                        out[a * n + c] += x * y.adjoint();
                    }
                }
            }
        }
        out
    }

    /// Full sandwich `V† A V` for block-diagonal `A`.
    fn sandwich(&self, a_blocks: &[CMatrix]) -> Vec<CMatrix> {
        let n = self.classical_dim;
        let mut out = vec![linalg::zeros(self.quantum_dim); n * n];
        for (alpha, a) in a_blocks.iter().enumerate() {
            for b in 0..n {
                let Some(x) = self.entry(alpha, b) else { continue };
                let left = x.adjoint() * a;
                for c in 0..n {
                    if let Some(y) = self.entry(alpha, c) {
                        out[b * n + c] += &left * y;
                    }
                }
            }
        }
        out
    }
}

/// Block-diagonal Hermitian Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    blocks: Vec<CMatrix>,
}

impl Hamiltonian {
    pub fn new(blocks: Vec<CMatrix>) -> Result<Self> {
        let tol = Tolerances::default();
        let dim = blocks.first().map(|b| b.nrows()).unwrap_or(0);
        for (alpha, b) in blocks.iter().enumerate() {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "Hamiltonian block {alpha} is {}x{}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            let (dev, _) = linalg::hermiticity_deviation(b);
            if dev > tol.hermiticity {
                return Err(Error::InvalidOperator(format!(
                    "Hamiltonian block {alpha} is not Hermitian ({dev:.3e})"
                )));
            }
        }
        Ok(Self { blocks })
    }

    pub fn zero(classical_dim: usize, quantum_dim: usize) -> Self {
        Self { blocks: vec![linalg::zeros(quantum_dim); classical_dim] }
    }

    /// Same quantum Hamiltonian in every classical block.
    pub fn uniform(classical_dim: usize, h: CMatrix) -> Result<Self> {
        Self::new(vec![h; classical_dim])
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| linalg::max_abs(b) == 0.0)
    }
}

struct Transfer {
    from: usize,
    to: usize,
    op: CMatrix,
    op_adj: CMatrix,
}

/// Precomputed generator; applying it costs one pass over the transfers.
pub struct Generator {
    hamiltonian: Option<Vec<CMatrix>>,
    drains: Vec<CMatrix>,
    transfers: Vec<Transfer>,
}

impl Generator {
    pub fn new(
        classical_dim: usize,
        quantum_dim: usize,
        h: &Hamiltonian,
        couplings: &[CouplingOperator],
    ) -> Result<Self> {
        if h.blocks.len() != classical_dim
            || h.blocks.first().map(|b| b.nrows()) != Some(quantum_dim)
        {
            return Err(Error::DimensionMismatch(format!(
                "Hamiltonian has {} blocks, state has {classical_dim} blocks of dimension {quantum_dim}",
                h.blocks.len()
            )));
        }
        let mut drains = vec![linalg::zeros(quantum_dim); classical_dim];
        let mut transfers = Vec::new();
        for (i, v) in couplings.iter().enumerate() {
            if v.classical_dim != classical_dim || v.quantum_dim != quantum_dim {
                return Err(Error::DimensionMismatch(format!(
                    "coupling {i} is {}x{} blocks of dimension {}, state is {classical_dim} blocks of dimension {quantum_dim}",
                    v.classical_dim, v.classical_dim, v.quantum_dim
                )));
            }
            for (a, b, m) in v.nonzero_entries() {
                drains[a] += m * m.adjoint();
                transfers.push(Transfer { from: a, to: b, op: m.clone(), op_adj: m.adjoint() });
            }
        }
        let hamiltonian = (!h.is_zero()).then(|| h.blocks.clone());
        Ok(Self { hamiltonian, drains, transfers })
    }

    pub fn apply(&self, rho: &[CMatrix]) -> Vec<CMatrix> {
        let half = C64::new(0.5, 0.0);
        let mut out: Vec<CMatrix> = rho
            .iter()
            .zip(&self.drains)
            .map(|(r, d)| -(linalg::anticommutator(d, r) * half))
            .collect();
        if let Some(h) = &self.hamiltonian {
            let minus_i = C64::new(0.0, -1.0);
            for ((o, hb), r) in out.iter_mut().zip(h).zip(rho) {
                *o += linalg::commutator(hb, r) * minus_i;
            }
        }
        for t in &self.transfers {
            out[t.to] += &t.op_adj * &rho[t.from] * &t.op;
        }
        out
    }
}

/// Blockwise time derivative of `rho` under the generator.
pub fn liouville_rhs(
    rho: &HybridState,
    h: &Hamiltonian,
    couplings: &[CouplingOperator],
) -> Result<Vec<CMatrix>> {
    let gen = Generator::new(rho.classical_dim(), rho.quantum_dim(), h, couplings)?;
    Ok(gen.apply(rho.blocks()))
}

/// Probability derivatives from the trace form of the generator:
/// `p_b' = sum_{a != b} Tr(V_ab V_ab† rho_a) - sum_{c != b} Tr(V_bc V_bc† rho_b)`.
pub fn classical_rate_equations(
    rho: &HybridState,
    couplings: &[CouplingOperator],
) -> Result<Vec<f64>> {
    let n = rho.classical_dim();
    let mut rates = vec![0.0; n];
    for (i, v) in couplings.iter().enumerate() {
        if v.classical_dim != n || v.quantum_dim != rho.quantum_dim() {
            return Err(Error::DimensionMismatch(format!("coupling {i} does not match state")));
        }
        for (a, b, m) in v.nonzero_entries() {
            if a == b {
                continue;
            }
            let flow = linalg::real_trace(&(m * m.adjoint() * rho.block(a)));
            rates[b] += flow;
            rates[a] -= flow;
        }
    }
    Ok(rates)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpCheckOptions {
    /// Random block-diagonal probes added to the supplied states.
    pub random_probes: usize,
    pub seed: u64,
    /// Largest Frobenius norm accepted for an off-diagonal block.
    pub tolerance: f64,
}

impl Default for CpCheckOptions {
    fn default() -> Self {
        Self { random_probes: 16, seed: 0, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpCondition {
    /// `sum_i V_i V_i†` must be block-diagonal.
    SumOfProducts,
    /// `V_i† A V_i` must be block-diagonal for block-diagonal `A`.
    Sandwich { coupling: usize, probe: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpViolation {
    pub condition: CpCondition,
    pub block: (usize, usize),
    pub norm: f64,
}

impl std::fmt::Display for CpViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.condition {
            CpCondition::SumOfProducts => write!(
                f,
                "sum V V† has off-diagonal block {:?} with norm {:.3e}",
                self.block, self.norm
            ),
            CpCondition::Sandwich { coupling, probe } => write!(
                f,
                "V_{coupling}† A V_{coupling} (probe {probe}) has off-diagonal block {:?} with norm {:.3e}",
                self.block, self.norm
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpReport {
    pub probes_checked: usize,
    pub max_off_diagonal: f64,
    pub violations: Vec<CpViolation>,
}

impl CpReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_cp_conditions(couplings: &[CouplingOperator], probes: &[HybridState]) -> CpReport {
    check_cp_conditions_with(couplings, probes, &CpCheckOptions::default())
}

pub fn check_cp_conditions_with(
    couplings: &[CouplingOperator],
    probes: &[HybridState],
    opts: &CpCheckOptions,
) -> CpReport {
    let mut violations = Vec::new();
    let mut max_off = 0.0f64;
    let Some(first) = couplings.first() else {
        return CpReport { probes_checked: 0, max_off_diagonal: 0.0, violations };
    };
    let n = first.classical_dim;
    let d = first.quantum_dim;
    if couplings.iter().any(|v| v.classical_dim != n || v.quantum_dim != d) {
        violations.push(CpViolation {
            condition: CpCondition::SumOfProducts,
            block: (0, 0),
            norm: f64::INFINITY,
        });
        return CpReport { probes_checked: 0, max_off_diagonal: f64::INFINITY, violations };
    }

    let mut sum = vec![linalg::zeros(d); n * n];
    for v in couplings {
        for (acc, b) in sum.iter_mut().zip(v.product_with_adjoint()) {
            *acc += b;
        }
    }
    for a in 0..n {
        for c in (0..n).filter(|&c| c != a) {
            let norm = sum[a * n + c].norm();
            max_off = max_off.max(norm);
            if norm > opts.tolerance {
                violations.push(CpViolation {
                    condition: CpCondition::SumOfProducts,
                    block: (a, c),
                    norm,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut probe_blocks: Vec<Vec<CMatrix>> = probes
        .iter()
        .filter(|p| p.classical_dim() == n && p.quantum_dim() == d)
        .map(|p| p.blocks().to_vec())
        .collect();
    for _ in 0..opts.random_probes {
        probe_blocks.push((0..n).map(|_| linalg::random_matrix(d, &mut rng)).collect());
    }
    for (pi, blocks) in probe_blocks.iter().enumerate() {
        for (vi, v) in couplings.iter().enumerate() {
            let s = v.sandwich(blocks);
            for b in 0..n {
                for c in (0..n).filter(|&c| c != b) {
                    let norm = s[b * n + c].norm();
                    max_off = max_off.max(norm);
                    if norm > opts.tolerance {
                        violations.push(CpViolation {
                            condition: CpCondition::Sandwich { coupling: vi, probe: pi },
                            block: (b, c),
                            norm,
                        });
                    }
                }
            }
        }
    }
    CpReport { probes_checked: probe_blocks.len(), max_off_diagonal: max_off, violations }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub step: f64,
    pub duration: f64,
    /// Record every `record_every`-th step (the final step is always recorded).
    pub record_every: usize,
    pub tolerances: Tolerances,
    /// Largest per-step change of the total trace.
    pub max_step_drift: f64,
}

impl EvolutionConfig {
    pub fn new(step: f64, duration: f64, record_every: usize) -> Result<Self> {
        let cfg = Self {
            step,
            duration,
            record_every,
            tolerances: Tolerances::default(),
            max_step_drift: 1e-9,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {}", self.step)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if self.step > self.duration {
            return Err(Error::InvalidParameter("step exceeds duration".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of integration steps; the effective step never exceeds `step`.
    pub fn steps(&self) -> usize {
        ((self.duration / self.step) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_step(&self) -> f64 {
        self.duration / self.steps() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: HybridState,
    /// `|sum_a Tr rho_a(t) - 1|`.
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
}

impl TrajectoryPoint {
    pub fn probabilities(&self) -> Vec<f64> {
        self.state.blocks().iter().map(linalg::real_trace).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory is never empty")
    }

    /// Recorded point closest to `t`.
    pub fn at(&self, t: f64) -> &TrajectoryPoint {
        self.points
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("trajectory is never empty")
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.points.iter().map(|p| p.trace_drift).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.points.iter().map(|p| p.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    /// Columns `t, p_0..p_n, trace_drift, min_eigenvalue`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.points[0].state.classical_dim();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|a| format!("p_{a}")));
        header.push("trace_drift".into());
        header.push("min_eigenvalue".into());
        writeln!(w, "{}", header.join(","))?;
        for p in &self.points {
            let mut row = vec![format!("{}", p.t)];
            row.extend(p.probabilities().iter().map(|x| format!("{x}")));
            row.push(format!("{}", p.trace_drift));
            row.push(format!("{}", p.min_eigenvalue));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn axpy(base: &[CMatrix], k: &[CMatrix], h: f64) -> Vec<CMatrix> {
    let h = C64::new(h, 0.0);
    base.iter().zip(k).map(|(b, k)| b + k * h).collect()
}

fn recorded_point(
    t: f64,
    blocks: &[CMatrix],
    cfg: &EvolutionConfig,
) -> Result<TrajectoryPoint> {
    let state = HybridState::from_raw(blocks.to_vec())?;
    let report = state::validate_state(&state, &cfg.tolerances);
    let trace_drift = report.total_trace_deviation;
    let min_eigenvalue = report.min_eigenvalue();
    if trace_drift > cfg.tolerances.trace.max(cfg.max_step_drift) || !trace_drift.is_finite() {
        return Err(Error::TraceDrift { t, drift: trace_drift });
    }
    if min_eigenvalue < -cfg.tolerances.positivity || !min_eigenvalue.is_finite() {
        return Err(Error::PositivityLoss { t, min_eigenvalue });
    }
    if let Some(v) = report.violations.first() {
        return Err(Error::InvalidState(format!("at t = {t}: {v}")));
    }
    Ok(TrajectoryPoint { t, state, trace_drift, min_eigenvalue })
}

/// Fixed-step classical RK4 integration of the generator from `rho0`.
pub fn evolve(
    rho0: &HybridState,
    h: &Hamiltonian,
    couplings: &[CouplingOperator],
    cfg: &EvolutionConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let initial = state::validate_state(rho0, &cfg.tolerances);
    if let Some(v) = initial.violations.first() {
        return Err(Error::InvalidState(format!("initial state: {v}")));
    }
    let cp = check_cp_conditions(couplings, std::slice::from_ref(rho0));
    if let Some(v) = cp.violations.first() {
        return Err(Error::CpViolation(v.to_string()));
    }
    let gen = Generator::new(rho0.classical_dim(), rho0.quantum_dim(), h, couplings)?;

    let steps = cfg.steps();
    let dt = cfg.effective_step();
    let mut rho: Vec<CMatrix> = rho0.blocks().to_vec();
    let mut points = vec![recorded_point(0.0, &rho, cfg)?];
    let mut prev_trace: f64 = rho.iter().map(linalg::real_trace).sum();

    for step in 1..=steps {
        let k1 = gen.apply(&rho);
        let k2 = gen.apply(&axpy(&rho, &k1, dt / 2.0));
        let k3 = gen.apply(&axpy(&rho, &k2, dt / 2.0));
        let k4 = gen.apply(&axpy(&rho, &k3, dt));
        let w = C64::new(dt / 6.0, 0.0);
        let two = C64::new(2.0, 0.0);
        for (i, r) in rho.iter_mut().enumerate() {
            *r += (&k1[i] + &k2[i] * two + &k3[i] * two + &k4[i]) * w;
        }
        let t = step as f64 * dt;
        let tr: f64 = rho.iter().map(linalg::real_trace).sum();
        let drift = (tr - prev_trace).abs();
        if drift > cfg.max_step_drift || !drift.is_finite() {
            return Err(Error::TraceDrift { t, drift });
        }
        prev_trace = tr;
        if step % cfg.record_every == 0 || step == steps {
            points.push(recorded_point(t, &rho, cfg)?);
        }
    }
    Ok(Trajectory { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{product_state, DensityBlock, ProbabilityVector, Projector};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn binary(k1: f64, k2: f64, e: &CMatrix) -> CouplingOperator {
        CouplingOperator::from_entries(2, e.nrows(), [((0, 1), e * c(k1)), ((1, 0), e * c(k2))])
            .unwrap()
    }

    #[test]
    fn free_generator_is_zero() {
        let w = DensityBlock::diagonal(&[0.6, 0.4]).unwrap();
        let rho = product_state(&w, &ProbabilityVector::new(vec![0.5, 0.5]).unwrap()).unwrap();
        let d = liouville_rhs(&rho, &Hamiltonian::zero(2, 2), &[]).unwrap();
        assert!(d.iter().all(|b| linalg::max_abs(b) == 0.0));
    }

    #[test]
    fn binary_rhs_matches_hand_expansion() {
        // rho = diag(rho_q, 0), b = k1 e, c = 0:
        // p0' = -k1^2 Tr(e rho_q), p1' = +k1^2 Tr(e rho_q).
        let k1 = 0.7;
        let e = Projector::basis(2, 0).unwrap();
        let rho_q = DensityBlock::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.6), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.4)],
        ))
        .unwrap();
        let rho = product_state(&rho_q, &ProbabilityVector::initial(2)).unwrap();
        let v = binary(k1, 0.0, e.matrix());
        let d = liouville_rhs(&rho, &Hamiltonian::zero(2, 2), &[v]).unwrap();
        let expect = k1 * k1 * e.weight(rho_q.matrix());
        assert!((linalg::real_trace(&d[0]) + expect).abs() < 1e-14);
        assert!((linalg::real_trace(&d[1]) - expect).abs() < 1e-14);
    }

    #[test]
    fn rhs_is_traceless_with_hamiltonian() {
        let e = Projector::basis(2, 1).unwrap();
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0), C64::new(0.3, 0.1), C64::new(0.3, -0.1), c(-0.5)]);
        let rho = product_state(
            &DensityBlock::diagonal(&[0.3, 0.7]).unwrap(),
            &ProbabilityVector::new(vec![0.8, 0.2]).unwrap(),
        )
        .unwrap();
        let d = liouville_rhs(&rho, &Hamiltonian::uniform(2, h).unwrap(), &[binary(1.0, 0.5, e.matrix())])
            .unwrap();
        let total: f64 = d.iter().map(linalg::real_trace).sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn antidiagonal_passes_cp_check() {
        let e = Projector::basis(2, 0).unwrap();
        let report = check_cp_conditions(&[binary(1.0, 2.0, e.matrix())], &[]);
        assert!(report.passed(), "{:?}", report.violations);
        assert!(check_cp_conditions(&[], &[]).passed());
    }

    #[test]
    fn full_block_coupling_fails_cp_check() {
        let e = Projector::basis(2, 0).unwrap().matrix().clone();
        let v = CouplingOperator::from_entries(
            2,
            2,
            [((0, 0), e.clone()), ((0, 1), e.clone()), ((1, 0), e.clone()), ((1, 1), e)],
        )
        .unwrap();
        let report = check_cp_conditions(&[v], &[]);
        assert!(!report.passed());
        // V V† = [[2e, 2e], [2e, 2e]]: off-diagonal norm 2.
        let sum = report
            .violations
            .iter()
            .find(|x| x.condition == CpCondition::SumOfProducts)
            .unwrap();
        assert!((sum.norm - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_trajectory_without_couplings() {
        let rho = product_state(
            &DensityBlock::diagonal(&[0.3, 0.7]).unwrap(),
            &ProbabilityVector::initial(2),
        )
        .unwrap();
        let cfg = EvolutionConfig::new(0.1, 1.0, 1).unwrap();
        let traj = evolve(&rho, &Hamiltonian::zero(2, 2), &[], &cfg).unwrap();
        assert_eq!(traj.points.len(), 11);
        assert!(traj.points.iter().all(|p| p.state == rho));
    }

    #[test]
    fn binary_evolution_matches_exponential() {
        let e = Projector::basis(2, 0).unwrap();
        let rho = product_state(&DensityBlock::from(e.clone()), &ProbabilityVector::initial(2)).unwrap();
        let cfg = EvolutionConfig::new(0.01, 2.0, 10).unwrap();
        let traj = evolve(&rho, &Hamiltonian::zero(2, 2), &[binary(1.0, 0.0, e.matrix())], &cfg)
            .unwrap();
        for t in [0.5, 1.0, 2.0] {
            let p = traj.at(t).probabilities();
            assert!((p[1] - (1.0 - (-t).exp())).abs() < 1e-6);
        }
    }

    #[test]
    fn evolve_rejects_cp_violations() {
        let e = Projector::basis(2, 0).unwrap().matrix().clone();
        let v = CouplingOperator::from_entries(2, 2, [((0, 0), e.clone()), ((0, 1), e)]).unwrap();
        let rho = product_state(&DensityBlock::diagonal(&[1.0, 0.0]).unwrap(), &ProbabilityVector::initial(2))
            .unwrap();
        let cfg = EvolutionConfig::new(0.1, 1.0, 1).unwrap();
        assert!(matches!(
            evolve(&rho, &Hamiltonian::zero(2, 2), &[v], &cfg),
            Err(Error::CpViolation(_))
        ));
    }

    #[test]
    fn oversized_step_trips_a_guard() {
        let e = Projector::basis(2, 0).unwrap();
        let rho = product_state(&DensityBlock::from(e.clone()), &ProbabilityVector::initial(2)).unwrap();
        let cfg = EvolutionConfig::new(1.0, 20.0, 1).unwrap();
        let err = evolve(&rho, &Hamiltonian::zero(2, 2), &[binary(3.0, 0.0, e.matrix())], &cfg)
            .unwrap_err();
        assert!(err.is_numerical_guard(), "{err}");
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::new(0.0, 1.0, 1).is_err());
        assert!(EvolutionConfig::new(2.0, 1.0, 1).is_err());
        assert!(EvolutionConfig::new(0.1, 1.0, 0).is_err());
        let cfg = EvolutionConfig::new(0.3, 1.0, 1).unwrap();
        assert_eq!(cfg.steps(), 4);
        assert!(cfg.effective_step() <= 0.3);
    }

    #[test]
    fn csv_layout() {
        let rho = product_state(&DensityBlock::diagonal(&[1.0, 0.0]).unwrap(), &ProbabilityVector::initial(2))
            .unwrap();
        let cfg = EvolutionConfig::new(0.5, 1.0, 1).unwrap();
        let traj = evolve(&rho, &Hamiltonian::zero(2, 2), &[], &cfg).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,p_0,p_1,trace_drift,min_eigenvalue"));
        assert_eq!(lines.count(), 3);
    }
}
