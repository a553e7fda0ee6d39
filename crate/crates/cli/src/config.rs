//! Scenario configuration files.
//!
//! Configs are TOML documents with named sections:
//!
//! ```toml
//! [system]
//! quantum_dim = 2
//!
//! [detector]
//! family = "binary"        # binary | two_state | n_state | filter
//! k1 = 1.0
//! k2 = 0.0
//! projector = 0            # basis index of e
//!
//! [signal]
//! weights = [1.0, 0.0]     # diagonal of the incoming quantum state
//! coherences = [{ i = 0, j = 1, re = 0.0, im = 0.0 }]
//! classical = [1.0, 0.0]   # initial event distribution, default: event 0
//!
//! [evolution]
//! step = 0.01
//! duration = 10.0
//! record_every = 10
//! ```
//!
//! A `[coupling]` section replaces the detector family with explicit
//! operators, see [`parse_coupling`].

use std::ops::Range;
use std::path::Path;

use eeqt_core::detectors::{
    BinaryDetectorSpec, FilterSpec, NStateDetectorSpec, TwoStateDetectorSpec,
};
use eeqt_core::linalg::{self, CMatrix, C64};
use eeqt_core::{
    product_state, CouplingOperator, DensityBlock, EvolutionConfig, HybridState,
    ProbabilityVector, Projector, TransmissionScenario,
};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub system: SystemSection,
    pub detector: Option<DetectorSection>,
    pub coupling: Option<CouplingSection>,
    #[serde(default)]
    pub signal: SignalSection,
    pub evolution: Option<EvolutionSection>,
    pub efficiency: Option<EfficiencySection>,
    pub plan: Option<PlanSection>,
    #[serde(default)]
    pub validate: ValidateSection,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default = "default_quantum_dim")]
    pub quantum_dim: usize,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self { quantum_dim: default_quantum_dim() }
    }
}

fn default_quantum_dim() -> usize {
    2
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Binary,
    TwoState,
    NState,
    Filter,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Binary => "binary",
            Family::TwoState => "two_state",
            Family::NState => "n_state",
            Family::Filter => "filter",
        }
    }
}

/// Constants and basis indices for one detector family. Which fields are
/// required depends on `family`: binary `k1 k2 projector`, two_state
/// `k1 k2 n1 n2 e2 e3`, n_state `k channels`, filter `k e1`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub family: Family,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    pub k: Option<f64>,
    pub projector: Option<usize>,
    pub e1: Option<usize>,
    pub e2: Option<usize>,
    pub e3: Option<usize>,
    pub channels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub classical_dim: usize,
    #[serde(default)]
    pub operators: Vec<String>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub coherences: Vec<Coherence>,
    pub classical: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Coherence {
    pub i: usize,
    pub j: usize,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub step: f64,
    pub duration: f64,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EfficiencySection {
    pub t_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    101
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub rho1: Option<f64>,
    pub eta_det: Option<f64>,
    pub accuracy: Option<f64>,
    pub margin: Option<f64>,
    pub confidence: Option<f64>,
    pub m_max: Option<u64>,
    /// Registration probability of the confirming detector.
    pub p_reg: Option<f64>,
    /// Confidence target for confirmation, default `confidence`.
    pub di_confidence: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_probes")]
    pub probes: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self { seed: 0, probes: default_probes() }
    }
}

fn default_probes() -> usize {
    100
}

/// Closed-form model matching the configured family.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorModel {
    Binary(BinaryDetectorSpec),
    TwoState(TwoStateDetectorSpec),
    NState(NStateDetectorSpec),
    Filter(FilterSpec),
}

impl DetectorModel {
    pub fn couplings(&self) -> Vec<CouplingOperator> {
        match self {
            DetectorModel::Binary(s) => s.couplings(),
            DetectorModel::TwoState(s) => s.couplings(),
            DetectorModel::NState(s) => s.couplings(),
            DetectorModel::Filter(s) => s.couplings(),
        }
    }

    pub fn classical_dim(&self) -> usize {
        match self {
            DetectorModel::Binary(_) | DetectorModel::Filter(_) => 2,
            DetectorModel::TwoState(_) => 3,
            DetectorModel::NState(s) => s.channels() + 1,
        }
    }
}

/// Everything a command needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct System {
    pub classical_dim: usize,
    pub quantum_dim: usize,
    pub couplings: Vec<CouplingOperator>,
    /// Labels for `couplings`, `V1`, `V2`, ...
    pub names: Vec<String>,
    pub model: Option<DetectorModel>,
}

/// A parsed config together with its source, for line-numbered errors.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: String,
    pub source: String,
    pub config: ScenarioConfig,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            line: None,
            message: e.to_string(),
        })?;
        Self::parse(&path.display().to_string(), source)
    }

    pub fn parse(path: &str, source: String) -> Result<Self, CliError> {
        match toml::from_str::<ScenarioConfig>(&source) {
            Ok(config) => Ok(Self { path: path.to_string(), source, config }),
            Err(e) => Err(CliError::Config {
                path: path.to_string(),
                line: e.span().map(|s| line_of(&source, s)),
                message: e.message().to_string(),
            }),
        }
    }

    /// Hex SHA-256 of the raw config bytes.
    pub fn hash(&self) -> String {
        sha256_hex(self.source.as_bytes())
    }

    pub fn error(&self, section: &str, key: Option<&str>, message: impl Into<String>) -> CliError {
        CliError::Config {
            path: self.path.clone(),
            line: locate(&self.source, section, key),
            message: message.into(),
        }
    }

    pub fn system(&self) -> Result<System, CliError> {
        let d = self.config.system.quantum_dim;
        if d == 0 {
            return Err(self.error("system", Some("quantum_dim"), "quantum_dim must be at least 1"));
        }
        match (&self.config.detector, &self.config.coupling) {
            (Some(_), Some(_)) => Err(self.error(
                "coupling",
                None,
                "[detector] and [coupling] are mutually exclusive",
            )),
            (Some(det), None) => {
                let model = self.detector_model(det, d)?;
                let couplings = model.couplings();
                Ok(System {
                    classical_dim: model.classical_dim(),
                    quantum_dim: d,
                    names: (1..=couplings.len()).map(|i| format!("V{i}")).collect(),
                    couplings,
                    model: Some(model),
                })
            }
            (None, Some(c)) => {
                if c.classical_dim < 2 {
                    return Err(self.error("coupling", Some("classical_dim"), "classical_dim must be at least 2"));
                }
                let couplings = c
                    .operators
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        parse_coupling(s, c.classical_dim, d).map_err(|m| {
                            self.error("coupling", Some("operators"), format!("operator {}: {m}", i + 1))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(System {
                    classical_dim: c.classical_dim,
                    quantum_dim: d,
                    names: (1..=couplings.len()).map(|i| format!("V{i}")).collect(),
                    couplings,
                    model: None,
                })
            }
            (None, None) => Ok(System {
                classical_dim: 2,
                quantum_dim: d,
                couplings: Vec::new(),
                names: Vec::new(),
                model: None,
            }),
        }
    }

    fn basis(&self, key: &str, index: usize, d: usize) -> Result<Projector, CliError> {
        Projector::basis(d, index).map_err(|_| {
            self.error("detector", Some(key), format!("basis index {index} out of range for quantum_dim {d}"))
        })
    }

    fn detector_model(&self, det: &DetectorSection, d: usize) -> Result<DetectorModel, CliError> {
        let core = |key: &str, e: eeqt_core::Error| self.error("detector", Some(key), e.to_string());
        let missing = |key: &str| {
            self.error("detector", Some("family"), format!("family '{}' needs '{key}'", det.family.name()))
        };
        let real = |v: Option<f64>, key: &str| v.ok_or_else(|| missing(key));
        let index = |v: Option<usize>, key: &str| self.basis(key, v.ok_or_else(|| missing(key))?, d);
        Ok(match det.family {
            Family::Binary => DetectorModel::Binary(
                BinaryDetectorSpec::new(real(det.k1, "k1")?, real(det.k2, "k2")?, index(det.projector, "projector")?)
                    .map_err(|e| core("k1", e))?,
            ),
            Family::TwoState => DetectorModel::TwoState(
                TwoStateDetectorSpec::new(
                    real(det.k1, "k1")?,
                    real(det.k2, "k2")?,
                    real(det.n1, "n1")?,
                    real(det.n2, "n2")?,
                    index(det.e2, "e2")?,
                    index(det.e3, "e3")?,
                )
                .map_err(|e| core("e3", e))?,
            ),
            Family::NState => {
                let channels = det.channels.as_ref().ok_or_else(|| missing("channels"))?;
                let projectors = channels
                    .iter()
                    .map(|&i| self.basis("channels", i, d))
                    .collect::<Result<Vec<_>, _>>()?;
                DetectorModel::NState(
                    NStateDetectorSpec::new(real(det.k, "k")?, projectors).map_err(|e| core("channels", e))?,
                )
            }
            Family::Filter => DetectorModel::Filter(
                FilterSpec::new(real(det.k, "k")?, index(det.e1, "e1")?).map_err(|e| core("k", e))?,
            ),
        })
    }

    /// Incoming quantum state from `[signal]`; defaults to the first basis state.
    pub fn signal_state(&self, d: usize) -> Result<DensityBlock, CliError> {
        let sig = &self.config.signal;
        let mut m = linalg::zeros(d);
        match &sig.weights {
            Some(w) => {
                if w.len() != d {
                    return Err(self.error(
                        "signal",
                        Some("weights"),
                        format!("{} weights given for quantum_dim {d}", w.len()),
                    ));
                }
                for (i, x) in w.iter().enumerate() {
                    m[(i, i)] = C64::new(*x, 0.0);
                }
            }
            None => m[(0, 0)] = C64::new(1.0, 0.0),
        }
        for c in &sig.coherences {
            if c.i >= d || c.j >= d || c.i == c.j {
                return Err(self.error(
                    "signal",
                    Some("coherences"),
                    format!("coherence ({}, {}) is not an off-diagonal entry of a {d}x{d} state", c.i, c.j),
                ));
            }
            let z = C64::new(c.re, c.im);
            m[(c.i, c.j)] = z;
            m[(c.j, c.i)] = z.conj();
        }
        DensityBlock::new(m).map_err(|e| self.error("signal", Some("weights"), e.to_string()))
    }

    pub fn classical_distribution(&self, n: usize) -> Result<ProbabilityVector, CliError> {
        match &self.config.signal.classical {
            None => Ok(ProbabilityVector::initial(n)),
            Some(p) if p.len() != n => Err(self.error(
                "signal",
                Some("classical"),
                format!("{} probabilities given for {n} events", p.len()),
            )),
            Some(p) => ProbabilityVector::new(p.clone())
                .map_err(|e| self.error("signal", Some("classical"), e.to_string())),
        }
    }

    pub fn initial_state(&self, sys: &System) -> Result<HybridState, CliError> {
        let w = self.signal_state(sys.quantum_dim)?;
        let p = self.classical_distribution(sys.classical_dim)?;
        product_state(&w, &p).map_err(|e| self.error("signal", None, e.to_string()))
    }

    pub fn evolution(&self) -> Result<EvolutionConfig, CliError> {
        let ev = self
            .config
            .evolution
            .as_ref()
            .ok_or_else(|| self.error("evolution", None, "missing [evolution] section"))?;
        EvolutionConfig::new(ev.step, ev.duration, ev.record_every)
            .map_err(|e| self.error("evolution", Some("step"), e.to_string()))
    }
}

/// Parses one coupling operator.
///
/// Blocks are separated by `;`, each written `row,col: terms`. Terms are
/// joined by `+`; a term is a coefficient followed by `e<i>` (the projector
/// on basis vector `i`) or `e<i>.<j>` (the matrix unit `|i><j|`). Complex
/// coefficients go in parentheses: `(0.5+0.5i) e0.1`.
///
/// `"0,1: 1.0 e0; 1,0: 0.5 e0"` is a two-event detector on `e0`.
pub fn parse_coupling(s: &str, classical_dim: usize, quantum_dim: usize) -> Result<CouplingOperator, String> {
    let mut v = CouplingOperator::zeros(classical_dim, quantum_dim);
    for block in s.split(';').map(str::trim).filter(|b| !b.is_empty()) {
        let (pos, terms) = block
            .split_once(':')
            .ok_or_else(|| format!("block '{block}' lacks 'row,col:'"))?;
        let (r, c) = pos
            .split_once(',')
            .ok_or_else(|| format!("block position '{pos}' is not 'row,col'"))?;
        let r: usize = r.trim().parse().map_err(|_| format!("bad row '{}'", r.trim()))?;
        let c: usize = c.trim().parse().map_err(|_| format!("bad column '{}'", c.trim()))?;
        if r >= classical_dim || c >= classical_dim {
            return Err(format!("block ({r}, {c}) outside {classical_dim} events"));
        }
        let mut m = v.entry_or_zero(r, c);
        for term in split_terms(terms) {
            m += parse_term(term.trim(), quantum_dim)?;
        }
        v.set(r, c, m).map_err(|e| e.to_string())?;
    }
    Ok(v)
}

fn split_terms(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_term(term: &str, d: usize) -> Result<CMatrix, String> {
    let (coeff, op) = term
        .rsplit_once(char::is_whitespace)
        .ok_or_else(|| format!("term '{term}' is not 'coefficient e<i>'"))?;
    let coeff = coeff.trim();
    let coeff = coeff.strip_prefix('(').and_then(|c| c.strip_suffix(')')).unwrap_or(coeff);
    let z: C64 = coeff.parse().map_err(|_| format!("bad coefficient '{coeff}'"))?;
    let idx = op.strip_prefix('e').ok_or_else(|| format!("operator '{op}' must start with 'e'"))?;
    let (i, j) = match idx.split_once('.') {
        Some((i, j)) => (i, j),
        None => (idx, idx),
    };
    let i: usize = i.parse().map_err(|_| format!("bad basis index in '{op}'"))?;
    let j: usize = j.parse().map_err(|_| format!("bad basis index in '{op}'"))?;
    if i >= d || j >= d {
        return Err(format!("basis index in '{op}' out of range for quantum_dim {d}"));
    }
    Ok(linalg::matrix_unit(d, i, j) * z)
}

/// Scenario from `[plan]`, each field overridable.
pub fn plan_scenario(
    section: &PlanSection,
) -> Result<TransmissionScenario, String> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| format!("missing plan parameter '{name}'"));
    let rho1 = need(section.rho1, "rho1")?;
    let eta = need(section.eta_det, "eff")?;
    let accuracy = need(section.accuracy, "accuracy")?;
    let confidence = need(section.confidence, "confidence")?;
    let margin = section.margin.unwrap_or(eta * accuracy);
    TransmissionScenario::with_margin(rho1, eta, accuracy, margin, confidence).map_err(|e| e.to_string())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn line_of(source: &str, span: Range<usize>) -> usize {
    source[..span.start.min(source.len())].matches('\n').count() + 1
}

/// 1-based line of `key` inside `[section]`, or of the section header.
fn locate(source: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let header = format!("[{section}]");
    let mut in_section = false;
    let mut header_line = None;
    for (n, line) in source.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            in_section = t.starts_with(&header);
            if in_section {
                header_line = Some(n + 1);
            }
            continue;
        }
        if in_section {
            if let Some(k) = key {
                let name = t.split('=').next().unwrap_or("").trim();
                if name == k {
                    return Some(n + 1);
                }
            }
        }
    }
    header_line
}
