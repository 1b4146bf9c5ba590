//! The 24 single-qubit Clifford elements compiled into `±π/2` and `π`
//! rotations about x and y, with multiplication and inverse tables.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{x_gate, y_gate};
use crate::quantum::{phase_insensitive_distance, ComplexMatrix};

/// Physical generator of a compiled Clifford.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    X,
    Y,
    X2,
    Y2,
    MX2,
    MY2,
}

impl Generator {
    pub const ALL: [Generator; 6] = [Self::X, Self::Y, Self::X2, Self::Y2, Self::MX2, Self::MY2];

    pub fn unitary(self) -> ComplexMatrix {
        match self {
            Self::X => x_gate(PI),
            Self::Y => y_gate(PI),
            Self::X2 => x_gate(PI / 2.0),
            Self::Y2 => y_gate(PI / 2.0),
            Self::MX2 => x_gate(-PI / 2.0),
            Self::MY2 => y_gate(-PI / 2.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::X => "X",
            Self::Y => "Y",
            Self::X2 => "X/2",
            Self::Y2 => "Y/2",
            Self::MX2 => "-X/2",
            Self::MY2 => "-Y/2",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                what: "generator",
                value: s.into(),
            })
    }
}

use Generator::*;

/// Decompositions in time order; the first entry is the identity.
const DECOMPOSITIONS: [&[Generator]; 24] = [
    &[],
    &[X],
    &[Y],
    &[Y, X],
    &[X2, Y2],
    &[X2, MY2],
    &[MX2, Y2],
    &[MX2, MY2],
    &[Y2, X2],
    &[Y2, MX2],
    &[MY2, X2],
    &[MY2, MX2],
    &[X2],
    &[MX2],
    &[Y2],
    &[MY2],
    &[MX2, Y2, X2],
    &[MX2, MY2, X2],
    &[X, Y2],
    &[X, MY2],
    &[Y, X2],
    &[Y, MX2],
    &[X2, Y2, X2],
    &[MX2, Y2, MX2],
];

#[derive(Debug, Clone, PartialEq)]
pub struct Clifford {
    pub decomposition: Vec<Generator>,
    pub unitary: ComplexMatrix,
}

/// The group with `compose[a][b]` = index of "apply `a`, then `b`".
#[derive(Debug, Clone)]
pub struct CliffordGroup {
    pub elements: Vec<Clifford>,
    compose: Vec<Vec<usize>>,
    inverse: Vec<usize>,
}

impl CliffordGroup {
    pub fn new() -> Self {
        let elements: Vec<Clifford> = DECOMPOSITIONS
            .iter()
            .map(|d| Clifford {
                decomposition: d.to_vec(),
                unitary: d
                    .iter()
                    .fold(ComplexMatrix::identity(2, 2), |u, g| g.unitary() * u),
            })
            .collect();
        let find = |u: &ComplexMatrix| {
            elements
                .iter()
                .position(|c| phase_insensitive_distance(&c.unitary, u) < 1e-9)
                .expect("Clifford set is closed")
        };
        let compose: Vec<Vec<usize>> = elements
            .iter()
            .map(|a| elements.iter().map(|b| find(&(&b.unitary * &a.unitary))).collect())
            .collect();
        let inverse = (0..elements.len())
            .map(|a| (0..elements.len()).find(|&b| compose[a][b] == 0).expect("group inverse"))
            .collect();
        Self {
            elements,
            compose,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of `a` followed by `b`.
    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.compose[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// Index of the element equal to `u` up to global phase.
    pub fn find(&self, u: &ComplexMatrix) -> Option<usize> {
        self.elements
            .iter()
            .position(|c| phase_insensitive_distance(&c.unitary, u) < 1e-9)
    }

    /// Mean number of physical pulses per element.
    pub fn average_gate_count(&self) -> f64 {
        self.elements.iter().map(|c| c.decomposition.len()).sum::<usize>() as f64 / self.len() as f64
    }
}

impl Default for CliffordGroup {
    fn default() -> Self {
        Self::new()
    }
}
