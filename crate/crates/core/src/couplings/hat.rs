//! The six admissible local patterns of a four-chain coupling and their hat version.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Local tuple `(τ⁺, τ⁻, τ̃⁺, τ̃⁻)` at one site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryRow {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl BoundaryRow {
    pub const ALL: [BoundaryRow; 6] = [Self::A, Self::B, Self::C, Self::D, Self::E, Self::F];

    pub fn tuple(self) -> [i8; 4] {
        match self {
            Self::A => [-1, -1, -1, -1],
            Self::B => [-1, -1, 1, -1],
            Self::C => [-1, -1, 1, 1],
            Self::D => [1, 1, 1, 1],
            Self::E => [1, -1, 1, 1],
            Self::F => [1, -1, 1, -1],
        }
    }

    pub fn classify(t: [i8; 4]) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.tuple() == t)
            .ok_or(LabError::Inadmissible(t))
    }

    /// Hat row: `B` lowers `τ̃⁺`, `C` raises `τ⁺, τ⁻`, `E` raises `τ⁻`; the rest are fixed.
    pub fn hat(self) -> [i8; 4] {
        match self {
            Self::B => [-1, -1, -1, -1],
            Self::C | Self::E => [1, 1, 1, 1],
            r => r.tuple(),
        }
    }

    /// Full disagreement: `τ⁺ = τ̃⁺ = 1`, `τ⁻ = τ̃⁻ = −1`.
    pub fn is_full_disagreement(t: [i8; 4]) -> bool {
        t == [1, -1, 1, -1]
    }
}

/// Hat boundaries on `Γ`, one tuple per site.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HatBoundary {
    pub rows: Vec<BoundaryRow>,
    pub tuples: Vec<[i8; 4]>,
}

impl HatBoundary {
    /// Column `k` of the hat tuples: 0 = `τ̂⁺`, 1 = `τ̂⁻`, 2 = `τ̂̃⁺`, 3 = `τ̂̃⁻`.
    pub fn column(&self, k: usize) -> Vec<i8> {
        self.tuples.iter().map(|t| t[k]).collect()
    }

    pub fn full_disagreements(&self) -> usize {
        self.tuples
            .iter()
            .filter(|t| BoundaryRow::is_full_disagreement(**t))
            .count()
    }
}

pub fn hat_transform(tuples: &[[i8; 4]]) -> Result<HatBoundary> {
    let rows = tuples
        .iter()
        .map(|&t| BoundaryRow::classify(t))
        .collect::<Result<Vec<_>>>()?;
    let tuples = rows.iter().map(|r| r.hat()).collect();
    Ok(HatBoundary { rows, tuples })
}

/// Per-site tuples from four boundary vectors.
pub fn zip_boundaries(b: [&[i8]; 4]) -> Vec<[i8; 4]> {
    (0..b[0].len())
        .map(|i| [b[0][i], b[1][i], b[2][i], b[3][i]])
        .collect()
}
