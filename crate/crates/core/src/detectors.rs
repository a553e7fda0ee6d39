//! Closed-form responses of the four detector families.
//!
//! Each family also builds its coupling operators, so the same parameters
//! can be handed to [`crate::lindblad::evolve`] and compared against the
//! formulas here.
//!
//! Conventions: event 0 is "no registration"; the detector starts with all
//! probability on event 0. For a rank-1 projector `e` and an incoming
//! quantum state `rho_q`, the aligned weight is `Tr(e rho_q)`. The trace
//! dynamics close on aligned weights, so every formula below holds for any
//! `rho_q` with the given aligned weights, coherences included.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::lindblad::CouplingOperator;
use crate::state::{DensityBlock, HybridState, ProbabilityVector, Projector, Tolerances};

fn check_rate(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {x}")));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// Fraction of the aligned weight transferred by time `t` for a two-way
/// exchange with forward constant `fwd` and backward constant `back`:
/// `fwd² / (fwd² + back²) · (1 - exp(-(fwd² + back²) t))`.
fn exchange_fraction(fwd: f64, back: f64, t: f64) -> f64 {
    let rate = fwd * fwd + back * back;
    if rate == 0.0 {
        return 0.0;
    }
    if t.is_infinite() {
        return fwd * fwd / rate;
    }
    fwd * fwd / rate * -(-rate * t).exp_m1()
}

fn scaled(p: &Projector, k: f64) -> CMatrix {
    p.matrix() * C64::new(k, 0.0)
}

/// Two-event detector with `V = [[0, k1 e], [k2 e, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDetectorSpec {
    pub k1: f64,
    pub k2: f64,
    pub e: Projector,
}

impl BinaryDetectorSpec {
    pub fn new(k1: f64, k2: f64, e: Projector) -> Result<Self> {
        check_rate("k1", k1)?;
        check_rate("k2", k2)?;
        if k1 + k2 <= 0.0 {
            return Err(Error::InvalidParameter("k1 + k2 must be positive".into()));
        }
        Ok(Self { k1, k2, e })
    }

    pub fn couplings(&self) -> Vec<CouplingOperator> {
        let d = self.e.dim();
        let v = CouplingOperator::from_entries(
            2,
            d,
            [((0, 1), scaled(&self.e, self.k1)), ((1, 0), scaled(&self.e, self.k2))],
        )
        .expect("binary coupling fits its own dimension");
        vec![v]
    }
}

/// Split of the incoming signal along the detector projector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalDecomposition {
    /// Weight aligned with the projector.
    pub aligned: f64,
    /// Weight orthogonal to the projector.
    pub orthogonal: f64,
}

impl SignalDecomposition {
    pub fn new(aligned: f64, orthogonal: f64) -> Result<Self> {
        let tol = Tolerances::default().trace;
        for (name, x) in [("aligned", aligned), ("orthogonal", orthogonal)] {
            if !(x >= 0.0 && x <= 1.0 + tol) {
                return Err(Error::InvalidParameter(format!("{name} weight {x} outside [0, 1]")));
            }
        }
        if aligned + orthogonal > 1.0 + tol {
            return Err(Error::InvalidParameter(format!(
                "aligned + orthogonal = {} exceeds 1",
                aligned + orthogonal
            )));
        }
        Ok(Self { aligned, orthogonal })
    }

    /// Decomposition of a unit-trace state relative to `e`.
    pub fn of_state(rho_q: &DensityBlock, e: &Projector) -> Result<Self> {
        let a = e.weight(rho_q.matrix()).clamp(0.0, 1.0);
        let total = rho_q.trace();
        Self::new(a, (total - a).max(0.0))
    }

    pub fn total(&self) -> f64 {
        self.aligned + self.orthogonal
    }
}

/// Limit of [`binary_trajectory`]: `p1 = k1² / (k1² + k2²) · aligned`,
/// `p0 = total - p1`. For a normalised signal `aligned = 1 - orthogonal`.
pub fn binary_asymptotic(spec: &BinaryDetectorSpec, sig: &SignalDecomposition) -> Result<(f64, f64)> {
    binary_trajectory(spec, sig, f64::INFINITY)
}

/// `(p0(t), p1(t))` with `p1(t) = aligned · k1²/(k1²+k2²) · (1 - e^{-(k1²+k2²) t})`
/// and `p0(t) = aligned + orthogonal - p1(t)`.
pub fn binary_trajectory(
    spec: &BinaryDetectorSpec,
    sig: &SignalDecomposition,
    t: f64,
) -> Result<(f64, f64)> {
    check_time(t)?;
    if spec.k1 == 0.0 && spec.k2 == 0.0 {
        return Err(Error::InvalidParameter("k1 = k2 = 0".into()));
    }
    let p1 = sig.aligned * exchange_fraction(spec.k1, spec.k2, t);
    Ok((sig.total() - p1, p1))
}

/// `k2² Tr(e rho_1) - k1² Tr(e rho_0)`; zero once the exchange balances.
pub fn balance_residual(spec: &BinaryDetectorSpec, rho: &HybridState) -> Result<f64> {
    if rho.classical_dim() != 2 || rho.quantum_dim() != spec.e.dim() {
        return Err(Error::DimensionMismatch(format!(
            "binary detector needs 2 blocks of dimension {}, got {} of dimension {}",
            spec.e.dim(),
            rho.classical_dim(),
            rho.quantum_dim()
        )));
    }
    Ok(spec.k2 * spec.k2 * spec.e.weight(rho.block(1))
        - spec.k1 * spec.k1 * spec.e.weight(rho.block(0)))
}

/// Three-event detector built from a W9 coupling on `e2` and a W10 coupling
/// on `e3`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStateDetectorSpec {
    pub k1: f64,
    pub k2: f64,
    pub n1: f64,
    pub n2: f64,
    pub e2: Projector,
    pub e3: Projector,
}

impl TwoStateDetectorSpec {
    pub fn new(k1: f64, k2: f64, n1: f64, n2: f64, e2: Projector, e3: Projector) -> Result<Self> {
        for (name, x) in [("k1", k1), ("k2", k2), ("n1", n1), ("n2", n2)] {
            check_rate(name, x)?;
        }
        if k1 + k2 <= 0.0 && n1 + n2 <= 0.0 {
            return Err(Error::InvalidParameter("all coupling constants are zero".into()));
        }
        if e2.dim() != e3.dim() {
            return Err(Error::DimensionMismatch("e2 and e3 differ in dimension".into()));
        }
        let overlap = e2.overlap(&e3);
        if overlap.abs() > Tolerances::default().idempotency {
            return Err(Error::InvalidProjector(format!(
                "e2 and e3 are not orthogonal (Tr(e2 e3) = {overlap:.3e})"
            )));
        }
        Ok(Self { k1, k2, n1, n2, e2, e3 })
    }

    /// `[V1, V2]`: V1 exchanges events 0 and 1 through `e2`, V2 exchanges
    /// events 0 and 2 through `e3`.
    pub fn couplings(&self) -> Vec<CouplingOperator> {
        let d = self.e2.dim();
        let v1 = CouplingOperator::from_entries(
            3,
            d,
            [((0, 1), scaled(&self.e2, self.k1)), ((1, 0), scaled(&self.e2, self.k2))],
        )
        .expect("dimensions checked");
        let v2 = CouplingOperator::from_entries(
            3,
            d,
            [((0, 2), scaled(&self.e3, self.n1)), ((2, 0), scaled(&self.e3, self.n2))],
        )
        .expect("dimensions checked");
        vec![v1, v2]
    }
}

fn check_two_state_inputs(spec: &TwoStateDetectorSpec, a0: f64, b0: f64) -> Result<()> {
    SignalDecomposition::new(a0, b0)?;
    if a0 > 0.0 && spec.k1 == 0.0 && spec.k2 == 0.0 {
        return Err(Error::InvalidParameter("e2 channel has weight but no coupling".into()));
    }
    if b0 > 0.0 && spec.n1 == 0.0 && spec.n2 == 0.0 {
        return Err(Error::InvalidParameter("e3 channel has weight but no coupling".into()));
    }
    Ok(())
}

/// `[p0, p1, p2]` at time `t` for weights `a0 = Tr(e2 rho_q)` and
/// `b0 = Tr(e3 rho_q)`; weight outside both channels stays on event 0.
pub fn two_state_trajectory(spec: &TwoStateDetectorSpec, a0: f64, b0: f64, t: f64) -> Result<[f64; 3]> {
    check_time(t)?;
    check_two_state_inputs(spec, a0, b0)?;
    let p1 = a0 * exchange_fraction(spec.k1, spec.k2, t);
    let p2 = b0 * exchange_fraction(spec.n1, spec.n2, t);
    Ok([1.0 - p1 - p2, p1, p2])
}

/// `(p1(∞), p2(∞), p1(∞) + p2(∞))`.
pub fn two_state_asymptotic(spec: &TwoStateDetectorSpec, a0: f64, b0: f64) -> Result<(f64, f64, f64)> {
    let [_, p1, p2] = two_state_trajectory(spec, a0, b0, f64::INFINITY)?;
    Ok((p1, p2, p1 + p2))
}

/// `k1² n1² / (n1² (k1² + k2²) + k1² (n1² + n2²))`; equals 1/2 for
/// `k2 = n2 = 0`.
pub fn two_state_equal_channel_reference(spec: &TwoStateDetectorSpec) -> f64 {
    let (k1, k2, n1, n2) = (spec.k1 * spec.k1, spec.k2 * spec.k2, spec.n1 * spec.n1, spec.n2 * spec.n2);
    k1 * n1 / (n1 * (k1 + k2) + k1 * (n1 + n2))
}

/// `n`-channel detector: coupling `i` moves `e_i` weight from event 0 to
/// event `i` at rate `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NStateDetectorSpec {
    pub k: f64,
    pub projectors: Vec<Projector>,
}

impl NStateDetectorSpec {
    pub fn new(k: f64, projectors: Vec<Projector>) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
        }
        if projectors.is_empty() {
            return Err(Error::InvalidParameter("at least one channel projector required".into()));
        }
        let tol = Tolerances::default().idempotency;
        for (i, p) in projectors.iter().enumerate() {
            if p.dim() != projectors[0].dim() {
                return Err(Error::DimensionMismatch(format!("projector {i} has another dimension")));
            }
            for (j, q) in projectors.iter().enumerate().skip(i + 1) {
                if p.overlap(q).abs() > tol {
                    return Err(Error::InvalidProjector(format!(
                        "projectors {i} and {j} are not orthogonal"
                    )));
                }
            }
        }
        Ok(Self { k, projectors })
    }

    pub fn channels(&self) -> usize {
        self.projectors.len()
    }

    pub fn couplings(&self) -> Vec<CouplingOperator> {
        let n = self.channels() + 1;
        let d = self.projectors[0].dim();
        let amp = self.k.sqrt();
        self.projectors
            .iter()
            .enumerate()
            .map(|(i, e)| {
                CouplingOperator::from_entries(n, d, [((0, i + 1), scaled(e, amp))])
                    .expect("dimensions checked")
            })
            .collect()
    }
}

/// Distribution at time `t` for a signal fully aligned with channel `j`
/// (event index `j` in `1..=n`): `p0 = e^{-kt}`, `p_j = 1 - e^{-kt}`.
pub fn n_state_trajectory(spec: &NStateDetectorSpec, j: usize, t: f64) -> Result<ProbabilityVector> {
    check_time(t)?;
    if j == 0 || j > spec.channels() {
        return Err(Error::IndexOutOfRange { index: j, limit: spec.channels() + 1 });
    }
    let mut p = vec![0.0; spec.channels() + 1];
    p[0] = (-spec.k * t).exp();
    p[j] = -(-spec.k * t).exp_m1();
    ProbabilityVector::new(p)
}

/// Nondemolition filter `V = sqrt(k) [[0, e1], [e1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub k: f64,
    pub e1: Projector,
}

impl FilterSpec {
    pub fn new(k: f64, e1: Projector) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
        }
        Ok(Self { k, e1 })
    }

    pub fn couplings(&self) -> Vec<CouplingOperator> {
        let amp = self.k.sqrt();
        let v = CouplingOperator::from_entries(
            2,
            self.e1.dim(),
            [((0, 1), scaled(&self.e1, amp)), ((1, 0), scaled(&self.e1, amp))],
        )
        .expect("dimensions checked");
        vec![v]
    }
}

/// Quantum marginal behind the filter:
/// `rho_q(t) = rho_q + (e^{-kt/2} - 1)({e, rho_q} - 2 e rho_q e)`.
///
/// Populations and coherences inside or outside `e1` pass unchanged; the
/// coherences between them decay as `e^{-kt/2}`.
pub fn filter_quantum_output(rho_q: &DensityBlock, spec: &FilterSpec, t: f64) -> Result<DensityBlock> {
    check_time(t)?;
    if rho_q.dim() != spec.e1.dim() {
        return Err(Error::DimensionMismatch("state and filter projector differ".into()));
    }
    let e = spec.e1.matrix();
    let r = rho_q.matrix();
    let cross = linalg::anticommutator(e, r) - e * r * e * C64::new(2.0, 0.0);
    let factor = (-spec.k * t / 2.0).exp_m1();
    DensityBlock::new(r + cross * C64::new(factor, 0.0))
}

/// State written in a basis `e_1, ..., e_d` (index 0 is the filter
/// projector `e_1`): diagonal weights `rho_i` and off-diagonal weights
/// `rho_ij` on the matrix units `e_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisWeights {
    pub diagonal: Vec<f64>,
    /// `((i, j), rho_ij)` for `i != j`; the Hermitian partner is implied.
    pub off_diagonal: Vec<((usize, usize), C64)>,
}

impl BasisWeights {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.diagonal.len();
        let mut m = linalg::zeros(d);
        for (i, w) in self.diagonal.iter().enumerate() {
            m[(i, i)] = C64::new(*w, 0.0);
        }
        for &((i, j), z) in &self.off_diagonal {
            if i >= d || j >= d {
                return Err(Error::IndexOutOfRange { index: i.max(j), limit: d });
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("({i}, {j}) is not off-diagonal")));
            }
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        DensityBlock::new(m.clone())?;
        Ok(m)
    }
}

/// Basis-weight form of the filter output: each `rho_ij` is scaled by
/// `1 + (δ_i1 + δ_j1)(e^{-kt/2} - 1)`, diagonal weights pass through.
pub fn filter_weights_output(weights: &BasisWeights, k: f64, t: f64) -> Result<BasisWeights> {
    check_time(t)?;
    weights.to_matrix()?;
    let decay = (-k * t / 2.0).exp_m1();
    let off_diagonal = weights
        .off_diagonal
        .iter()
        .map(|&((i, j), z)| {
            let touches = (i == 0) as u8 + (j == 0) as u8;
            ((i, j), z * (1.0 + touches as f64 * decay))
        })
        .collect();
    Ok(BasisWeights { diagonal: weights.diagonal.clone(), off_diagonal })
}

/// Classical output of the filter for initial distribution `(p0, p1)` and
/// aligned weight `q1 = Tr(e1 rho_q)`:
/// `p0(t) = ½(p1 - p0) q1 + p0 + ½(p0 - p1) q1 e^{-2kt}`, `p1` symmetric.
pub fn filter_classical_output(p0: f64, p1: f64, q1: f64, k: f64, t: f64) -> Result<(f64, f64)> {
    check_time(t)?;
    ProbabilityVector::new(vec![p0, p1])?;
    if !(0.0..=1.0).contains(&q1) {
        return Err(Error::InvalidParameter(format!("q1 = {q1} outside [0, 1]")));
    }
    let decay = (-2.0 * k * t).exp();
    let shift = 0.5 * (p1 - p0) * q1;
    Ok((p0 + shift - shift * decay, p1 - shift + shift * decay))
}
