//! Coarse-grained box percolation of disagreements.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::animal::{animal_sizes, BoxGrid};
use crate::error::{LabError, Result};
use crate::field::standard_normal_at;
use crate::ground_state::xi_labels_values;
use crate::lattice::{
    intrinsic_distance, Block, Distance, Enlargement, RegionGraph, Site, SiteSet,
};
use crate::stats::{wilson_interval, z_for};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OpenDefinition {
    /// `C^{B^E} ∩ B ≠ ∅`.
    NonemptyDisagreement,
    /// `d_{C^{B^E}}(∂B, rim of B^E) ≤ side^α`.
    DistanceBased {
        alpha: f64,
    },
    AlwaysFalse,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub n: u32,
    pub side: u32,
    pub open: OpenDefinition,
    pub enlargement: Enlargement,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanInstance {
    pub seed: u64,
    pub grid: BoxGrid,
    pub sizes: Vec<usize>,
    pub largest: usize,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub n: u32,
    pub side: u32,
    pub instances: usize,
    pub boxes: usize,
    pub open_boxes: usize,
    pub p_hat: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub largest_median: usize,
    pub largest_q90: usize,
    pub largest_max: usize,
    /// `(k, fraction of instances whose largest animal has size ≥ k)` for `k = 1..=max`.
    pub tail: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub params: ScanParams,
    pub instances: Vec<ScanInstance>,
    pub summary: ScanSummary,
}

impl ScanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(LabError::InvalidParameter(
                "epsilon must be positive".into(),
            ));
        }
        let grid = BoxGrid::new(self.n, self.side)?;
        if grid.is_empty() {
            return Err(LabError::Geometry("no boxes fit".into()));
        }
        grid.block(0).enlarged(self.enlargement)?;
        if let OpenDefinition::DistanceBased { alpha } = self.open {
            if !(alpha > 0.0) {
                return Err(LabError::InvalidParameter("α must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Open flag of one box under a field keyed by `seed`.
pub fn box_open(params: &ScanParams, b: Block, seed: u64) -> Result<(bool, bool)> {
    if params.open == OpenDefinition::AlwaysFalse {
        return Ok((false, false));
    }
    let big = b.enlarged(params.enlargement)?;
    let g = Arc::new(RegionGraph::new(&big.to_set()));
    let h: Vec<f64> = g
        .sites()
        .iter()
        .map(|&s| params.epsilon * standard_normal_at(seed, s))
        .collect();
    let xi = xi_labels_values(&g, &h)?;
    let c = xi.disagreement();
    let open = match params.open {
        OpenDefinition::NonemptyDisagreement => b.sites().any(|s| c.contains(s)),
        OpenDefinition::DistanceBased { alpha } => {
            let inner = crate::lattice::boundary(&b.to_set());
            let rim: SiteSet = big.sites().filter(|s| !interior_of(&big, *s)).collect();
            match intrinsic_distance(&c, &inner, &rim) {
                Distance::Finite(d) => d as f64 <= (params.side as f64).powf(alpha),
                Distance::Infinite => false,
            }
        }
        OpenDefinition::AlwaysFalse => false,
    };
    Ok((open, xi.degenerate))
}

fn interior_of(b: &Block, s: Site) -> bool {
    let n = b.side as i32;
    s.x > b.x0 && s.y > b.y0 && s.x < b.x0 + n - 1 && s.y < b.y0 + n - 1
}

pub fn scan_instance(params: &ScanParams, seed: u64) -> Result<ScanInstance> {
    let mut grid = BoxGrid::new(params.n, params.side)?;
    let mut degenerate = false;
    for k in 0..grid.len() {
        let (open, deg) = box_open(params, grid.block(k), seed)?;
        grid.open[k] = open;
        degenerate |= deg;
    }
    let sizes = animal_sizes(&grid);
    let largest = sizes.first().copied().unwrap_or(0);
    Ok(ScanInstance {
        seed,
        grid,
        sizes,
        largest,
        degenerate,
    })
}

pub fn coarse_grain_scan(params: &ScanParams, seeds: &[u64]) -> Result<ScanResult> {
    params.validate()?;
    let instances = seeds
        .par_iter()
        .map(|&s| scan_instance(params, s))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(params, &instances);
    Ok(ScanResult {
        params: *params,
        instances,
        summary,
    })
}

pub fn summarize(params: &ScanParams, instances: &[ScanInstance]) -> ScanSummary {
    let boxes: usize = instances.iter().map(|i| i.grid.len()).sum();
    let open_boxes: usize = instances.iter().map(|i| i.grid.open_count()).sum();
    let (p_lo, p_hi) = wilson_interval(open_boxes as u64, boxes as u64, z_for(0.95));
    let mut largest: Vec<usize> = instances.iter().map(|i| i.largest).collect();
    largest.sort_unstable();
    let q = |p: f64| {
        if largest.is_empty() {
            0
        } else {
            largest[((largest.len() - 1) as f64 * p).round() as usize]
        }
    };
    let max = largest.last().copied().unwrap_or(0);
    let m = largest.len().max(1) as f64;
    let tail = (1..=max)
        .map(|k| (k, largest.iter().filter(|&&l| l >= k).count() as f64 / m))
        .collect();
    ScanSummary {
        n: params.n,
        side: params.side,
        instances: instances.len(),
        boxes,
        open_boxes,
        p_hat: if boxes == 0 {
            0.0
        } else {
            open_boxes as f64 / boxes as f64
        },
        p_lo,
        p_hi,
        largest_median: q(0.5),
        largest_q90: q(0.9),
        largest_max: max,
        tail,
    }
}
