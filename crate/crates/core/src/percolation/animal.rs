use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::lattice::Block;

/// Boxes of side `side` tiling `Λ_N` from its lower-left corner; partial boxes at the
/// top and right edges are dropped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxGrid {
    pub n: u32,
    pub side: u32,
    pub per_side: u32,
    pub open: Vec<bool>,
}

impl BoxGrid {
    pub fn new(n: u32, side: u32) -> Result<Self> {
        if side == 0 || side > 2 * n + 1 {
            return Err(LabError::Geometry(format!(
                "box side {side} does not fit in Λ_{n}"
            )));
        }
        let per_side = (2 * n + 1) / side;
        Ok(Self {
            n,
            side,
            per_side,
            open: vec![false; (per_side * per_side) as usize],
        })
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    /// Box `(ix, iy)` in grid coordinates, raster order `iy · per_side + ix`.
    pub fn block(&self, k: usize) -> Block {
        let g = self.per_side as usize;
        let (ix, iy) = ((k % g) as i32, (k / g) as i32);
        let s = self.side as i32;
        Block {
            x0: -(self.n as i32) + ix * s,
            y0: -(self.n as i32) + iy * s,
            side: self.side,
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = Block> + '_ {
        (0..self.len()).map(|k| self.block(k))
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|o| **o).count()
    }
}

/// Sizes of the ℓ∞-connected components of open boxes, largest first.
pub fn animal_sizes(grid: &BoxGrid) -> Vec<usize> {
    let g = grid.per_side as i64;
    let mut seen = vec![false; grid.len()];
    let mut sizes = Vec::new();
    for start in 0..grid.len() {
        if !grid.open[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut size = 0;
        while let Some(k) = stack.pop() {
            size += 1;
            let (ix, iy) = (k as i64 % g, k as i64 / g);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (jx, jy) = (ix + dx, iy + dy);
                    if (dx, dy) == (0, 0) || jx < 0 || jy < 0 || jx >= g || jy >= g {
                        continue;
                    }
                    let j = (jy * g + jx) as usize;
                    if grid.open[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

pub fn largest_lattice_animal(grid: &BoxGrid) -> usize {
    animal_sizes(grid).first().copied().unwrap_or(0)
}
