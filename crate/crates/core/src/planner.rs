//! Binomial planning for a transmitter sending repeated copies of a state.
//!
//! The first detector only has to confirm that something arrived; the second
//! decodes a logical value by counting registrations out of `m` copies and
//! accepting when the count falls inside an interval around its expectation.

use std::ops::RangeInclusive;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Integers within this distance of an interval end are treated as lying on it.
const ENDPOINT_SNAP: f64 = 1e-9;

/// Exact binomial coefficients are used up to this `m`.
const EXACT_BINOMIAL_MAX: u64 = 64;

/// Parameters of a binary transmission through the decoding detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionScenario {
    /// Signal weight on the code projector.
    pub rho1: f64,
    /// Efficiency factor of the decoding detector.
    pub eta_det: f64,
    /// Half-width of the decoding interval on `rho1`.
    pub accuracy: f64,
    /// Half-width applied per copy to the expected count.
    pub margin: f64,
    pub confidence_target: f64,
}

impl TransmissionScenario {
    /// Scenario with the default margin `eta_det * accuracy`.
    pub fn new(rho1: f64, eta_det: f64, accuracy: f64, confidence_target: f64) -> Result<Self> {
        Self::with_margin(rho1, eta_det, accuracy, eta_det * accuracy, confidence_target)
    }

    pub fn with_margin(
        rho1: f64,
        eta_det: f64,
        accuracy: f64,
        margin: f64,
        confidence_target: f64,
    ) -> Result<Self> {
        let s = Self { rho1, eta_det, accuracy, margin, confidence_target };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(0.0..=1.0).contains(&self.rho1) {
            return bad(format!("rho1 = {} outside [0, 1]", self.rho1));
        }
        if !(0.0..=1.0).contains(&self.eta_det) {
            return bad(format!("eta_det = {} outside [0, 1]", self.eta_det));
        }
        if !(self.accuracy > 0.0 && self.accuracy.is_finite()) {
            return bad(format!("accuracy must be positive, got {}", self.accuracy));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad(format!("margin must be positive, got {}", self.margin));
        }
        if !(self.confidence_target > 0.0 && self.confidence_target < 1.0) {
            return bad(format!("confidence target {} outside (0, 1)", self.confidence_target));
        }
        let eps = 1e-12;
        if self.rho1 - self.accuracy < -eps || self.rho1 + self.accuracy > 1.0 + eps {
            return bad(format!(
                "rho1 ± accuracy = [{}, {}] leaves [0, 1]",
                self.rho1 - self.accuracy,
                self.rho1 + self.accuracy
            ));
        }
        if self.margin > self.accuracy + eps {
            return bad(format!("margin {} exceeds accuracy {}", self.margin, self.accuracy));
        }
        Ok(())
    }

    /// Registration probability per copy, `eta_det * rho1`.
    pub fn success_probability(&self) -> f64 {
        self.eta_det * self.rho1
    }
}

/// Inclusive range of registration counts accepted as the logical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdvantageousSet {
    pub lo: u64,
    pub hi: u64,
    empty: bool,
}

impl AdvantageousSet {
    pub fn new(lo: u64, hi: u64) -> Self {
        Self { lo, hi, empty: lo > hi }
    }

    pub fn empty() -> Self {
        Self { lo: 1, hi: 0, empty: true }
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn len(&self) -> u64 {
        if self.empty {
            0
        } else {
            self.hi - self.lo + 1
        }
    }

    pub fn iter(&self) -> RangeInclusive<u64> {
        if self.empty {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        self.lo..=self.hi
    }

    pub fn contains(&self, i: u64) -> bool {
        !self.empty && self.lo <= i && i <= self.hi
    }
}

impl std::fmt::Display for AdvantageousSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.empty {
            write!(f, "{{}}")
        } else if self.lo == self.hi {
            write!(f, "{{{}}}", self.lo)
        } else {
            write!(f, "{{{}..{}}}", self.lo, self.hi)
        }
    }
}

/// One row of a plan scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanResult {
    pub m: u64,
    pub i_minus: f64,
    pub i_plus: f64,
    pub advantageous: AdvantageousSet,
    pub confidence: f64,
}

/// Copies the confirming detector needs: smallest `n` with
/// `(1 - p_reg)^n <= 1 - target`.
pub fn di_confirmation_count(p_reg: f64, confidence_target: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p_reg) {
        return Err(Error::InvalidParameter(format!("p_reg = {p_reg} outside [0, 1]")));
    }
    if !(confidence_target > 0.0 && confidence_target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence target {confidence_target} outside (0, 1)"
        )));
    }
    if p_reg == 1.0 {
        return Ok(1);
    }
    if p_reg == 0.0 {
        return Err(Error::InvalidParameter(
            "registration probability is zero; confirmation is impossible".into(),
        ));
    }
    let miss = 1.0 - p_reg;
    let bound = 1.0 - confidence_target;
    // Estimate from logarithms, then settle on the literal inequality.
    let mut n = ((bound.ln() / miss.ln()).ceil().max(1.0)) as u64;
    while n > 1 && miss.powi((n - 1) as i32) <= bound {
        n -= 1;
    }
    while miss.powi(n as i32) > bound {
        n += 1;
    }
    Ok(n)
}

/// Per-copy registration probability of the confirming filter,
/// `½(1 - e^{-2 k t0})`, optionally weighted by the signal weight.
pub fn filter_registration_probability(k: f64, t0: f64, signal_weight: Option<f64>) -> f64 {
    0.5 * -(-2.0 * k * t0).exp_m1() * signal_weight.unwrap_or(1.0)
}

fn check_m(m: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    Ok(())
}

/// `(m p - margin m, m p + margin m)` with `p = eta_det * rho1`.
pub fn interval_expectations(m: u64, scenario: &TransmissionScenario) -> Result<(f64, f64)> {
    check_m(m)?;
    scenario.validate()?;
    let mf = m as f64;
    let centre = mf * scenario.success_probability();
    let half = scenario.margin * mf;
    Ok((centre - half, centre + half))
}

/// Smallest `m` whose interval is at least one count wide.
pub fn minimal_m(scenario: &TransmissionScenario) -> Result<u64> {
    scenario.validate()?;
    let width = |m: u64| 2.0 * scenario.margin * m as f64;
    let mut m = (1.0 / (2.0 * scenario.margin)).ceil().max(1.0) as u64;
    while m > 1 && width(m - 1) >= 1.0 {
        m -= 1;
    }
    while width(m) < 1.0 {
        m += 1;
    }
    Ok(m)
}

/// Integers in `[i_minus, i_plus] ∩ [0, m]`, ends inclusive.
pub fn advantageous_set(m: u64, scenario: &TransmissionScenario) -> Result<AdvantageousSet> {
    let (lo, hi) = interval_expectations(m, scenario)?;
    Ok(integer_range(lo, hi, m))
}

fn integer_range(lo: f64, hi: f64, m: u64) -> AdvantageousSet {
    let snap = |x: f64| {
        let r = x.round();
        if (x - r).abs() <= ENDPOINT_SNAP {
            r
        } else {
            x
        }
    };
    let lo = snap(lo).ceil().max(0.0);
    let hi = snap(hi).floor().min(m as f64);
    if lo > hi {
        AdvantageousSet::empty()
    } else {
        AdvantageousSet::new(lo as u64, hi as u64)
    }
}

fn ln_binomial(m: u64, i: u64) -> f64 {
    if m <= EXACT_BINOMIAL_MAX {
        let k = i.min(m - i);
        let mut c: u128 = 1;
        for j in 0..k {
            c = c * (m - j) as u128 / (j + 1) as u128;
        }
        (c as f64).ln()
    } else {
        ln_gamma(m as f64 + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((m - i) as f64 + 1.0)
    }
}

fn ln_term(m: u64, i: u64, p: f64) -> f64 {
    let ln_p = if i == 0 { 0.0 } else { p.ln() };
    let ln_q = if i == m { 0.0 } else { (1.0 - p).ln() };
    ln_binomial(m, i) + i as f64 * ln_p + (m - i) as f64 * ln_q
}

/// `Σ_{i ∈ set} C(m, i) p^i (1 - p)^{m - i}`, accumulated in log space.
pub fn confidence(m: u64, p: f64, set: &AdvantageousSet) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    if set.is_empty() {
        return Ok(0.0);
    }
    if set.hi > m {
        return Err(Error::IndexOutOfRange { index: set.hi as usize, limit: m as usize + 1 });
    }
    let logs: Vec<f64> = set.iter().map(|i| ln_term(m, i, p)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    Ok((top + sum.ln()).exp().clamp(0.0, 1.0))
}

/// Plan row for a single `m`.
pub fn plan_for(m: u64, scenario: &TransmissionScenario) -> Result<PlanResult> {
    let (i_minus, i_plus) = interval_expectations(m, scenario)?;
    let advantageous = integer_range(i_minus, i_plus, m);
    let confidence = confidence(m, scenario.success_probability(), &advantageous)?;
    Ok(PlanResult { m, i_minus, i_plus, advantageous, confidence })
}

/// Rows for every `m` from [`minimal_m`] to `m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanScan {
    pub rows: Vec<PlanResult>,
    /// First row meeting the confidence target, if any.
    pub first_passing: Option<PlanResult>,
}

pub fn scan_plan(scenario: &TransmissionScenario, m_max: u64) -> Result<PlanScan> {
    let start = minimal_m(scenario)?;
    if m_max < start {
        return Err(Error::InvalidParameter(format!(
            "m_max = {m_max} is below the minimal m = {start}"
        )));
    }
    let rows = (start..=m_max).map(|m| plan_for(m, scenario)).collect::<Result<Vec<_>>>()?;
    let first_passing = rows.iter().find(|r| r.confidence >= scenario.confidence_target).copied();
    Ok(PlanScan { rows, first_passing })
}

/// A pair `m < later` with lower confidence at `later`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descent {
    pub m: u64,
    pub later: u64,
    pub from: f64,
    pub to: f64,
}

/// Every pair in `range` whose confidence drops as `m` grows.
pub fn detect_nonmonotonicity(
    scenario: &TransmissionScenario,
    range: RangeInclusive<u64>,
) -> Result<Vec<Descent>> {
    let rows = range.map(|m| plan_for(m, scenario)).collect::<Result<Vec<_>>>()?;
    Ok(descents(&rows))
}

/// Descents over already computed rows, in the order given.
pub fn descents(rows: &[PlanResult]) -> Vec<Descent> {
    let mut out = Vec::new();
    for (a, ra) in rows.iter().enumerate() {
        for rb in &rows[a + 1..] {
            if rb.confidence < ra.confidence {
                out.push(Descent { m: ra.m, later: rb.m, from: ra.confidence, to: rb.confidence });
            }
        }
    }
    out
}

/// Bits per second.
pub fn transmission_speed(bits: u64, seconds: f64) -> Result<f64> {
    if !(seconds > 0.0 && seconds.is_finite()) {
        return Err(Error::InvalidParameter(format!("duration must be positive, got {seconds}")));
    }
    Ok(bits as f64 / seconds)
}

/// Fraction of positions where the decoded bits differ from the sent ones.
pub fn intelligibility(input: &[bool], output: &[bool]) -> Result<f64> {
    if input.len() != output.len() {
        return Err(Error::DimensionMismatch(format!(
            "bit sequences differ in length: {} vs {}",
            input.len(),
            output.len()
        )));
    }
    if input.is_empty() {
        return Err(Error::InvalidParameter("empty bit sequences".into()));
    }
    let diff = input.iter().zip(output).filter(|(a, b)| a != b).count();
    Ok(diff as f64 / input.len() as f64)
}

/// Parses a string of `0`/`1` characters.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::InvalidParameter(format!("'{other}' is not a bit"))),
        })
        .collect()
}
