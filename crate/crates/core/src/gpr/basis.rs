use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GprError;

/// Explicit mean function of the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisKind {
    None,
    Constant,
    Linear,
    /// Constant, linear and per-feature squares; no cross terms.
    PureQuadratic,
}

impl BasisKind {
    pub const ALL: [BasisKind; 4] = [BasisKind::None, BasisKind::Constant, BasisKind::Linear, BasisKind::PureQuadratic];

    pub fn name(self) -> &'static str {
        match self {
            BasisKind::None => "none",
            BasisKind::Constant => "constant",
            BasisKind::Linear => "linear",
            BasisKind::PureQuadratic => "pureQuadratic",
        }
    }

    pub fn width(self, dim: usize) -> usize {
        match self {
            BasisKind::None => 0,
            BasisKind::Constant => 1,
            BasisKind::Linear => 1 + dim,
            BasisKind::PureQuadratic => 1 + 2 * dim,
        }
    }

    pub fn row(self, x: &[f64]) -> Vec<f64> {
        let mut h = Vec::with_capacity(self.width(x.len()));
        if self != BasisKind::None {
            h.push(1.0);
        }
        if matches!(self, BasisKind::Linear | BasisKind::PureQuadratic) {
            h.extend_from_slice(x);
        }
        if self == BasisKind::PureQuadratic {
            h.extend(x.iter().map(|v| v * v));
        }
        h
    }

    /// Design matrix for row-major inputs.
    pub(crate) fn design(self, x: &[f64], n: usize, d: usize) -> DMatrix<f64> {
        let w = self.width(d);
        let mut h = DMatrix::zeros(n, w);
        for i in 0..n {
            for (c, v) in self.row(&x[i * d..(i + 1) * d]).into_iter().enumerate() {
                h[(i, c)] = v;
            }
        }
        h
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisKind {
    type Err = GprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BasisKind::ALL
            .iter()
            .copied()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| GprError::UnknownName(s.to_string()))
    }
}
