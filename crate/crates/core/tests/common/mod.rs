#![allow(dead_code)]

use eeqt_core::linalg::{self, CMatrix};
use eeqt_core::{
    evolve, product_state, CouplingOperator, DensityBlock, EvolutionConfig, Hamiltonian,
    HybridState, ProbabilityVector, Trajectory,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `w` on event 0, every other block empty.
pub fn start_on_zero(w: CMatrix, classical_dim: usize) -> HybridState {
    let w = DensityBlock::new(w).unwrap();
    product_state(&w, &ProbabilityVector::initial(classical_dim)).unwrap()
}

pub fn run(
    rho0: &HybridState,
    couplings: &[CouplingOperator],
    step: f64,
    duration: f64,
    record_every: usize,
) -> Trajectory {
    let cfg = EvolutionConfig::new(step, duration, record_every).unwrap();
    let h = Hamiltonian::zero(rho0.classical_dim(), rho0.quantum_dim());
    evolve(rho0, &h, couplings, &cfg).unwrap()
}

/// Probabilities at the recorded point nearest `t`, asserting it is on `t`.
pub fn probs_at(traj: &Trajectory, t: f64) -> Vec<f64> {
    let p = traj.at(t);
    assert!((p.t - t).abs() < 1e-9, "no recorded point at t = {t} (nearest {})", p.t);
    p.probabilities()
}

/// Direct enumeration of all `2^m` outcome strings.
pub fn brute_force_confidence(m: u32, p: f64, lo: u32, hi: u32) -> f64 {
    let mut total = 0.0;
    for s in 0u32..(1 << m) {
        let i = s.count_ones();
        if lo <= i && i <= hi {
            total += p.powi(i as i32) * (1.0 - p).powi((m - i) as i32);
        }
    }
    total
}

pub fn max_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    linalg::max_abs(&(a - b))
}
