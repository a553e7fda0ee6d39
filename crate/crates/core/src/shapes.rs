//! Zero-pattern admissibility of coupling operators.
//!
//! Coupling blocks are compared to zero at [`ZERO_THRESHOLD`]; a coupling is
//! then classified by which blocks are present. Two-event couplings follow a
//! four-conjunct rule and fall into six named shapes; three-event couplings
//! are matched against the W1..W11 catalogue and tagged with the topology of
//! the classical rate equations they induce.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::lindblad::CouplingOperator;

/// Blocks whose largest entry is at most this are treated as zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Presence map of the blocks of a coupling operator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockPattern {
    dim: usize,
    present: Vec<bool>,
}

impl BlockPattern {
    pub fn empty(dim: usize) -> Self {
        Self { dim, present: vec![false; dim * dim] }
    }

    /// Pattern with the given `(row, col)` blocks present (0-based).
    pub fn from_cells(dim: usize, cells: &[(usize, usize)]) -> Self {
        let mut p = Self::empty(dim);
        for &(r, c) in cells {
            p.present[r * dim + c] = true;
        }
        p
    }

    pub fn of(v: &CouplingOperator) -> Self {
        let n = v.classical_dim();
        let mut p = Self::empty(n);
        for (r, c, m) in v.nonzero_entries() {
            if linalg::max_abs(m) > ZERO_THRESHOLD {
                p.present[r * n + c] = true;
            }
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.present[row * self.dim + col]
    }

    pub fn cells(&self) -> Vec<(usize, usize)> {
        (0..self.dim * self.dim)
            .filter(|&k| self.present[k])
            .map(|k| (k / self.dim, k % self.dim))
            .collect()
    }

    pub fn off_diagonal_cells(&self) -> Vec<(usize, usize)> {
        self.cells().into_iter().filter(|(r, c)| r != c).collect()
    }

    fn has_diagonal(&self) -> bool {
        (0..self.dim).any(|i| self.get(i, i))
    }

    /// Fills each present block with `coeff * projector`, giving every block
    /// its own projector from a random orthonormal basis.
    pub fn instantiate<R: Rng + ?Sized>(
        &self,
        quantum_dim: usize,
        coeff: f64,
        rng: &mut R,
    ) -> Result<CouplingOperator> {
        let cells = self.cells();
        if cells.len() > quantum_dim {
            return Err(Error::InvalidParameter(format!(
                "{} blocks need quantum dimension >= {}",
                cells.len(),
                cells.len()
            )));
        }
        let projectors = linalg::random_orthogonal_projectors(quantum_dim, cells.len(), rng);
        CouplingOperator::from_entries(
            self.dim,
            quantum_dim,
            cells.into_iter().zip(projectors).map(|(cell, p)| (cell, p * C64::new(coeff, 0.0))),
        )
    }
}

impl std::fmt::Display for BlockPattern {
    /// Rows separated by `/`, `x` for a present block: `.x/x.`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.dim {
            if r > 0 {
                write!(f, "/")?;
            }
            for c in 0..self.dim {
                write!(f, "{}", if self.get(r, c) { 'x' } else { '.' })?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeTag2x2 {
    /// `[[0, b], [c, 0]]`
    Antidiagonal,
    /// `[[0, 0], [c, 0]]`
    LowerOnly,
    /// `[[0, b], [0, 0]]`
    UpperOnly,
    /// `[[a, 0], [0, d]]`, including the zero operator.
    Diagonal,
    /// `[[a, 0], [0, 0]]`
    DiagonalPartialA,
    /// `[[0, 0], [0, d]]`
    DiagonalPartialD,
}

impl ShapeTag2x2 {
    pub const ALL: [ShapeTag2x2; 6] = [
        ShapeTag2x2::Antidiagonal,
        ShapeTag2x2::DiagonalPartialD,
        ShapeTag2x2::UpperOnly,
        ShapeTag2x2::Diagonal,
        ShapeTag2x2::DiagonalPartialA,
        ShapeTag2x2::LowerOnly,
    ];

    pub fn pattern(self) -> BlockPattern {
        let cells: &[(usize, usize)] = match self {
            ShapeTag2x2::Antidiagonal => &[(0, 1), (1, 0)],
            ShapeTag2x2::LowerOnly => &[(1, 0)],
            ShapeTag2x2::UpperOnly => &[(0, 1)],
            ShapeTag2x2::Diagonal => &[(0, 0), (1, 1)],
            ShapeTag2x2::DiagonalPartialA => &[(0, 0)],
            ShapeTag2x2::DiagonalPartialD => &[(1, 1)],
        };
        BlockPattern::from_cells(2, cells)
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeTag2x2::Antidiagonal => "ANTIDIAGONAL",
            ShapeTag2x2::LowerOnly => "LOWER_ONLY",
            ShapeTag2x2::UpperOnly => "UPPER_ONLY",
            ShapeTag2x2::Diagonal => "DIAGONAL",
            ShapeTag2x2::DiagonalPartialA => "DIAGONAL_PARTIAL_A",
            ShapeTag2x2::DiagonalPartialD => "DIAGONAL_PARTIAL_D",
        }
    }
}

/// One conjunct of the two-event rule, with `V = [[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conjunct2x2 {
    AOrB,
    COrD,
    AOrC,
    BOrD,
}

impl Conjunct2x2 {
    const ALL: [Conjunct2x2; 4] =
        [Conjunct2x2::AOrB, Conjunct2x2::COrD, Conjunct2x2::AOrC, Conjunct2x2::BOrD];

    fn cells(self) -> [(usize, usize); 2] {
        match self {
            Conjunct2x2::AOrB => [(0, 0), (0, 1)],
            Conjunct2x2::COrD => [(1, 0), (1, 1)],
            Conjunct2x2::AOrC => [(0, 0), (1, 0)],
            Conjunct2x2::BOrD => [(0, 1), (1, 1)],
        }
    }
}

impl std::fmt::Display for Conjunct2x2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Conjunct2x2::AOrB => "(a=0 ∨ b=0)",
            Conjunct2x2::COrD => "(c=0 ∨ d=0)",
            Conjunct2x2::AOrC => "(a=0 ∨ c=0)",
            Conjunct2x2::BOrD => "(b=0 ∨ d=0)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection2x2 {
    WrongDimension(usize),
    Violates(Conjunct2x2),
}

impl std::fmt::Display for Rejection2x2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rejection2x2::WrongDimension(n) => write!(f, "classical dimension {n}, expected 2"),
            Rejection2x2::Violates(c) => write!(f, "violates {c}"),
        }
    }
}

pub fn classify_pattern_2x2(p: &BlockPattern) -> std::result::Result<ShapeTag2x2, Rejection2x2> {
    if p.dim() != 2 {
        return Err(Rejection2x2::WrongDimension(p.dim()));
    }
    for conj in Conjunct2x2::ALL {
        let [x, y] = conj.cells();
        if p.get(x.0, x.1) && p.get(y.0, y.1) {
            return Err(Rejection2x2::Violates(conj));
        }
    }
    if p.cells().is_empty() {
        return Ok(ShapeTag2x2::Diagonal);
    }
    // Every pattern that survives the four conjuncts is one of the six shapes.
    Ok(ShapeTag2x2::ALL
        .into_iter()
        .find(|t| t.pattern() == *p)
        .expect("admissible 2x2 pattern outside the catalogue"))
}

pub fn admissible_2x2(v: &CouplingOperator) -> std::result::Result<ShapeTag2x2, Rejection2x2> {
    classify_pattern_2x2(&BlockPattern::of(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShapeTag3x3 {
    W1,
    W2,
    W3,
    W4,
    W5,
    W6,
    W7,
    W8,
    W9,
    W10,
    W11,
    Diagonal,
    Inadmissible,
}

/// Off-diagonal cells of each catalogue shape, 0-based `(row, col)`.
const W_CELLS: [(ShapeTag3x3, &[(usize, usize)]); 11] = [
    (ShapeTag3x3::W1, &[(0, 2), (1, 0), (2, 1)]),
    (ShapeTag3x3::W2, &[(0, 1), (1, 2), (2, 0)]),
    (ShapeTag3x3::W3, &[(0, 2), (1, 0), (2, 0)]),
    (ShapeTag3x3::W4, &[(0, 1), (1, 0), (2, 0)]),
    (ShapeTag3x3::W5, &[(0, 2), (2, 1)]),
    (ShapeTag3x3::W6, &[(1, 2), (2, 1)]),
    (ShapeTag3x3::W7, &[(0, 1), (1, 2)]),
    (ShapeTag3x3::W8, &[(1, 0), (2, 0)]),
    (ShapeTag3x3::W9, &[(0, 1), (1, 0)]),
    (ShapeTag3x3::W10, &[(0, 2), (2, 0)]),
    (ShapeTag3x3::W11, &[(0, 2), (2, 0)]),
];

/// Pairs of off-diagonal blocks that may not both be present. The first
/// three are the per-row pairs (a sandwich `V† A V` stays block-diagonal),
/// the last pairs share columns 2 and 3. The repeated column-3 pair is kept
/// so the table has the same six conjuncts as the published rule.
pub const EXCLUSIONS_3X3: [((usize, usize), (usize, usize)); 6] = [
    ((2, 0), (2, 1)),
    ((1, 0), (1, 2)),
    ((0, 1), (0, 2)),
    ((0, 1), (2, 1)),
    ((1, 2), (0, 2)),
    ((0, 2), (1, 2)),
];

impl ShapeTag3x3 {
    pub const CATALOGUE: [ShapeTag3x3; 11] = [
        ShapeTag3x3::W1,
        ShapeTag3x3::W2,
        ShapeTag3x3::W3,
        ShapeTag3x3::W4,
        ShapeTag3x3::W5,
        ShapeTag3x3::W6,
        ShapeTag3x3::W7,
        ShapeTag3x3::W8,
        ShapeTag3x3::W9,
        ShapeTag3x3::W10,
        ShapeTag3x3::W11,
    ];

    /// Displayed pattern of a catalogue shape.
    pub fn pattern(self) -> Option<BlockPattern> {
        W_CELLS
            .iter()
            .find(|(t, _)| *t == self)
            .map(|(_, cells)| BlockPattern::from_cells(3, cells))
    }

    /// W11 repeats W10's pattern and conditions verbatim.
    pub fn duplicate_of(self) -> Option<ShapeTag3x3> {
        (self == ShapeTag3x3::W11).then_some(ShapeTag3x3::W10)
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeTag3x3::W1 => "W1",
            ShapeTag3x3::W2 => "W2",
            ShapeTag3x3::W3 => "W3",
            ShapeTag3x3::W4 => "W4",
            ShapeTag3x3::W5 => "W5",
            ShapeTag3x3::W6 => "W6",
            ShapeTag3x3::W7 => "W7",
            ShapeTag3x3::W8 => "W8",
            ShapeTag3x3::W9 => "W9",
            ShapeTag3x3::W10 => "W10",
            ShapeTag3x3::W11 => "W11",
            ShapeTag3x3::Diagonal => "DIAGONAL",
            ShapeTag3x3::Inadmissible => "INADMISSIBLE",
        }
    }
}

/// Whether an off-diagonal pattern satisfies every exclusion pair.
pub fn satisfies_exclusions_3x3(p: &BlockPattern) -> bool {
    EXCLUSIONS_3X3
        .iter()
        .all(|&(x, y)| !(p.get(x.0, x.1) && p.get(y.0, y.1)))
}

/// Classifies a three-event pattern.
///
/// A pattern with no off-diagonal block is `Diagonal`. Otherwise the diagonal
/// must be empty and the exclusion pairs must hold; the tag is the smallest
/// catalogue shape containing the pattern (lowest index on ties, so an exact
/// W10/W11 pattern reports W10).
pub fn classify_pattern_3x3(p: &BlockPattern) -> Result<ShapeTag3x3> {
    if p.dim() != 3 {
        return Err(Error::UnsupportedDimension(p.dim()));
    }
    let off = p.off_diagonal_cells();
    if off.is_empty() {
        return Ok(ShapeTag3x3::Diagonal);
    }
    if p.has_diagonal() || !satisfies_exclusions_3x3(p) {
        return Ok(ShapeTag3x3::Inadmissible);
    }
    let tag = W_CELLS
        .iter()
        .filter(|(_, cells)| off.iter().all(|c| cells.contains(c)))
        .min_by_key(|(t, cells)| (cells.len(), *t))
        .map(|(t, _)| *t);
    Ok(tag.unwrap_or(ShapeTag3x3::Inadmissible))
}

pub fn admissible_3x3(v: &CouplingOperator) -> Result<ShapeTag3x3> {
    classify_pattern_3x3(&BlockPattern::of(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyTag {
    /// Probabilities chained around the three events.
    Cascade,
    /// One probability evolves on its own.
    IndependentProbability,
    /// Event 0 is decoupled; constant under the standard initial condition.
    FrozenUnderInit,
    /// Only two blocks of the state enter the rate equations.
    TwoEntry,
    /// Exchange between event 0 and a single other event.
    SingleFocus,
}

impl TopologyTag {
    pub fn name(self) -> &'static str {
        match self {
            TopologyTag::Cascade => "CASCADE",
            TopologyTag::IndependentProbability => "INDEPENDENT_PROBABILITY",
            TopologyTag::FrozenUnderInit => "FROZEN_UNDER_INIT",
            TopologyTag::TwoEntry => "TWO_ENTRY",
            TopologyTag::SingleFocus => "SINGLE_FOCUS",
        }
    }
}

pub fn classify_topology(tag: ShapeTag3x3) -> Result<TopologyTag> {
    use ShapeTag3x3::*;
    Ok(match tag {
        W1 | W2 => TopologyTag::Cascade,
        W3 | W4 | W5 => TopologyTag::IndependentProbability,
        W6 => TopologyTag::FrozenUnderInit,
        W7 | W8 | W11 => TopologyTag::TwoEntry,
        W9 | W10 => TopologyTag::SingleFocus,
        Diagonal | Inadmissible => {
            return Err(Error::NoTopology(format!("{} has no topology", tag.name())))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeTag {
    TwoEvent(ShapeTag2x2),
    ThreeEvent(ShapeTag3x3),
}

impl ShapeTag {
    pub fn name(self) -> &'static str {
        match self {
            ShapeTag::TwoEvent(t) => t.name(),
            ShapeTag::ThreeEvent(t) => t.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogueEntry {
    pub tag: ShapeTag,
    pub pattern: BlockPattern,
    pub topology: Option<TopologyTag>,
    /// Earlier entry with an identical pattern.
    pub duplicate_of: Option<ShapeTag>,
}

/// Full shape catalogue: six entries for two events, eleven for three.
pub fn enumerate_admissible_patterns(classical_dim: usize) -> Result<Vec<CatalogueEntry>> {
    match classical_dim {
        2 => Ok(ShapeTag2x2::ALL
            .into_iter()
            .map(|t| CatalogueEntry {
                tag: ShapeTag::TwoEvent(t),
                pattern: t.pattern(),
                topology: None,
                duplicate_of: None,
            })
            .collect()),
        3 => ShapeTag3x3::CATALOGUE
            .into_iter()
            .map(|t| {
                Ok(CatalogueEntry {
                    tag: ShapeTag::ThreeEvent(t),
                    pattern: t.pattern().expect("catalogue shape"),
                    topology: Some(classify_topology(t)?),
                    duplicate_of: t.duplicate_of().map(ShapeTag::ThreeEvent),
                })
            })
            .collect(),
        n => Err(Error::UnsupportedDimension(n)),
    }
}

/// Every subset of the six off-diagonal cells of a 3x3 pattern.
pub fn all_off_diagonal_patterns_3x3() -> Vec<BlockPattern> {
    const CELLS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
    (0u32..64)
        .map(|mask| {
            let cells: Vec<_> = (0..6).filter(|b| mask & (1 << b) != 0).map(|b| CELLS[b]).collect();
            BlockPattern::from_cells(3, &cells)
        })
        .collect()
}
