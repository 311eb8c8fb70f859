//! Perfect sampling by monotone coupling from the past.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::gibbs::GibbsSpec;
use crate::ground_state::SpinConfig;
use crate::lattice::RegionGraph;
use crate::num::Real;
use crate::rng::{self, STREAM_CFTP};

/// Uniforms indexed by (sweep counted back from time 0, site index); sweeps visit sites in raster order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateStream {
    pub seed: u64,
}

impl UpdateStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Uniform for site `i` during sweep `s ≥ 1`, the sweep occupying `(−s, −s+1]`.
    #[inline]
    pub fn uniform(&self, sweep: u64, i: usize) -> f64 {
        rng::uniform(self.seed, STREAM_CFTP, sweep, i as u64)
    }
}

/// Heat-bath step in place: `σ_i = +1` iff `u < P(σ_i = +1 | rest)`.
#[inline]
pub fn heat_bath_step<R: Real>(spec: &GibbsSpec<R>, spins: &mut [i8], i: usize, u: f64) {
    spins[i] = if u < spec.single_site_plus(i, spins).f64() {
        1
    } else {
        -1
    };
}

pub fn heat_bath_update<R: Real>(
    config: &SpinConfig,
    i: usize,
    u: f64,
    spec: &GibbsSpec<R>,
) -> Result<SpinConfig> {
    if i >= spec.len() {
        return Err(LabError::InvalidParameter(format!(
            "site index {i} outside region"
        )));
    }
    let mut spins = config.spins.clone();
    heat_bath_step(spec, &mut spins, i, u);
    SpinConfig::new(config.graph.clone(), spins, spec.boundary().to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CftpOptions {
    /// First look-back in sweeps; doubled until coalescence.
    pub initial_sweeps: u64,
    pub max_sweeps: u64,
}

pub const MAX_SWEEPS: u64 = 1 << 24;

impl Default for CftpOptions {
    fn default() -> Self {
        Self {
            initial_sweeps: 1,
            max_sweeps: MAX_SWEEPS,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CftpSample {
    pub spins: Vec<i8>,
    /// Look-back at which the sandwich chains had met.
    pub sweeps: u64,
}

/// `σ^{(i)} ≤ σ^{(j)}` is required whenever `(i, j)` appears in `order`.
#[derive(Clone, Debug)]
pub struct GrandCouplingSample {
    pub configs: Vec<Vec<i8>>,
    pub order: Vec<(usize, usize)>,
    pub sweeps: u64,
}

impl GrandCouplingSample {
    pub fn respects_order(&self) -> bool {
        self.order.iter().all(|&(i, j)| {
            self.configs[i]
                .iter()
                .zip(&self.configs[j])
                .all(|(a, b)| a <= b)
        })
    }
}

/// Pairs `(i, j)`, `i ≠ j`, with `spec_i ≼ spec_j`.
pub fn partial_order<R: Real>(specs: &[GibbsSpec<R>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..specs.len() {
        for j in 0..specs.len() {
            if i != j && specs[i].precedes(&specs[j]) {
                out.push((i, j));
            }
        }
    }
    out
}

fn same_region(a: &RegionGraph, b: &RegionGraph) -> bool {
    std::ptr::eq(a, b) || a.sites() == b.sites()
}

/// Runs every spec's top and bottom chain on one stream; returns each spec's coalesced state.
pub fn grand_monotone_sample_with<R: Real>(
    specs: &[GibbsSpec<R>],
    stream: UpdateStream,
    opts: CftpOptions,
) -> Result<GrandCouplingSample> {
    let first = specs
        .first()
        .ok_or_else(|| LabError::InvalidParameter("empty family".into()))?;
    if specs.iter().any(|s| !same_region(first.graph(), s.graph())) {
        return Err(LabError::InvalidParameter(
            "family members must share a region".into(),
        ));
    }
    if opts.initial_sweeps == 0 || opts.initial_sweeps > opts.max_sweeps {
        return Err(LabError::InvalidParameter(
            "initial look-back must be in 1..=max".into(),
        ));
    }
    for s in specs {
        if !s.beta().is_finite() {
            return Err(LabError::InvalidParameter("CFTP needs finite β".into()));
        }
    }
    let n = first.len();
    let order = partial_order(specs);
    let mut t = opts.initial_sweeps;
    loop {
        let mut top: Vec<Vec<i8>> = vec![vec![1; n]; specs.len()];
        let mut bottom: Vec<Vec<i8>> = vec![vec![-1; n]; specs.len()];
        for sweep in (1..=t).rev() {
            for i in 0..n {
                let u = stream.uniform(sweep, i);
                for (k, spec) in specs.iter().enumerate() {
                    heat_bath_step(spec, &mut top[k], i, u);
                    heat_bath_step(spec, &mut bottom[k], i, u);
                }
            }
        }
        if top == bottom {
            return Ok(GrandCouplingSample {
                configs: top,
                order,
                sweeps: t,
            });
        }
        if t >= opts.max_sweeps {
            let open = top
                .iter()
                .zip(&bottom)
                .map(|(a, b)| a.iter().zip(b).filter(|p| p.0 != p.1).count())
                .max();
            return Err(LabError::Budget {
                sweeps: t,
                detail: format!("{} sites still uncoupled", open.unwrap_or(0)),
            });
        }
        t = (t * 2).min(opts.max_sweeps);
    }
}

pub fn grand_monotone_sample<R: Real>(
    specs: &[GibbsSpec<R>],
    seed: u64,
) -> Result<GrandCouplingSample> {
    grand_monotone_sample_with(specs, UpdateStream::new(seed), CftpOptions::default())
}

pub fn cftp_sample_with<R: Real>(
    spec: &GibbsSpec<R>,
    stream: UpdateStream,
    opts: CftpOptions,
) -> Result<CftpSample> {
    let g = grand_monotone_sample_with(std::slice::from_ref(spec), stream, opts)?;
    Ok(CftpSample {
        spins: g.configs.into_iter().next().unwrap(),
        sweeps: g.sweeps,
    })
}

/// Exact draw from `μ^{spec}`.
pub fn cftp_sample<R: Real>(spec: &GibbsSpec<R>, seed: u64) -> Result<CftpSample> {
    cftp_sample_with(spec, UpdateStream::new(seed), CftpOptions::default())
}

pub fn cftp_config<R: Real>(spec: &GibbsSpec<R>, seed: u64) -> Result<SpinConfig> {
    let s = cftp_sample(spec, seed)?;
    SpinConfig::new(Arc::clone(spec.graph()), s.spins, spec.boundary().to_vec())
}
