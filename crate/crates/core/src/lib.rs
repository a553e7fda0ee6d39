//! Simulation and planning toolkit for discrete hybrid quantum-classical
//! detector systems.
//!
//! A hybrid state is a block-diagonal density matrix: one quantum block per
//! classical event, block traces forming the classical distribution. The
//! crate evolves such states under a Lindblad-type generator whose coupling
//! operators move probability between classical events, classifies
//! admissible coupling shapes, evaluates closed-form detector responses, and
//! sizes repeated transmissions with exact binomial confidence.
//!
//! Module map:
//!
//! * [`state`] - hybrid states, marginals, validation.
//! * [`lindblad`] - generator, RK4 evolution, CP structural checks.
//! * [`shapes`] - block-pattern admissibility and topology tags.
//! * [`detectors`] - closed-form detector families.
//! * [`planner`] - binomial planning for transmitter/receiver pairs.

pub mod detectors;
pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod planner;
pub mod shapes;
pub mod state;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use lindblad::{
    check_cp_conditions, classical_rate_equations, evolve, liouville_rhs, CouplingOperator,
    CpReport, EvolutionConfig, Hamiltonian, Trajectory,
};
pub use planner::{PlanResult, TransmissionScenario};
pub use state::{
    classical_marginal, product_state, quantum_marginal, validate_state, DensityBlock,
    HybridState, ProbabilityVector, Projector, QuantumOperator, Tolerances,
};
