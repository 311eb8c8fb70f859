//! Adaptive admissible couplings of ordered Gibbs families.

pub mod audit;
pub mod hat;
pub mod policy;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cftp::{grand_monotone_sample_with, partial_order, CftpOptions, UpdateStream};
use crate::error::{LabError, Result};
use crate::gibbs::{ConditionalOracle, ExactGibbs, GibbsSpec, ENUMERATION_LIMIT};
use crate::ground_state::uniform_boundary;
use crate::lattice::{BoxRegion, RegionGraph, Site, SiteSet};
use crate::num::Real;
use crate::rng::{self, STREAM_COUPLING};
use policy::{ExplorationPolicy, ExplorationState, MultiPhaseParams, StageRecord};

pub use hat::{hat_transform, BoundaryRow, HatBoundary};

pub const TRACE_SCHEMA: &str = "trace_v1";

/// Chains sharing a region and `β`, with the order `i ≺ j` read off their inputs.
#[derive(Clone, Debug)]
pub struct Family<R: Real> {
    specs: Vec<GibbsSpec<R>>,
    order: Vec<(usize, usize)>,
}

impl<R: Real> Family<R> {
    pub fn new(specs: Vec<GibbsSpec<R>>) -> Result<Self> {
        let first = specs
            .first()
            .ok_or_else(|| LabError::InvalidParameter("empty family".into()))?;
        for s in &specs {
            if s.graph().sites() != first.graph().sites() {
                return Err(LabError::InvalidParameter(
                    "family members must share a region".into(),
                ));
            }
            if s.beta() != first.beta() {
                return Err(LabError::InvalidParameter(
                    "family members must share β".into(),
                ));
            }
        }
        let order = partial_order(&specs);
        Ok(Self { specs, order })
    }

    /// `(+, h)` and `(−, h)`.
    pub fn plus_minus(graph: Arc<RegionGraph>, h: Vec<R>, beta: R) -> Result<Self> {
        let plus = GibbsSpec::new(graph.clone(), uniform_boundary(&graph, 1), h.clone(), beta)?;
        let minus = GibbsSpec::new(graph.clone(), uniform_boundary(&graph, -1), h, beta)?;
        Self::new(vec![plus, minus])
    }

    /// `(+, h), (−, h), (+, h̃), (−, h̃)`.
    pub fn four(graph: Arc<RegionGraph>, h: Vec<R>, h_tilde: Vec<R>, beta: R) -> Result<Self> {
        let b = |v| uniform_boundary(&graph, v);
        Self::new(vec![
            GibbsSpec::new(graph.clone(), b(1), h.clone(), beta)?,
            GibbsSpec::new(graph.clone(), b(-1), h, beta)?,
            GibbsSpec::new(graph.clone(), b(1), h_tilde.clone(), beta)?,
            GibbsSpec::new(graph.clone(), b(-1), h_tilde, beta)?,
        ])
    }

    pub fn specs(&self) -> &[GibbsSpec<R>] {
        &self.specs
    }

    pub fn order(&self) -> &[(usize, usize)] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn graph(&self) -> &Arc<RegionGraph> {
        self.specs[0].graph()
    }

    /// Every ordered pair is respected pointwise on the assigned sites.
    pub fn admissible(&self, spins: &[Vec<i8>]) -> bool {
        self.order
            .iter()
            .all(|&(i, j)| spins[i].iter().zip(&spins[j]).all(|(a, b)| a <= b))
    }
}

/// `h̃ = h + Δ` on `Λ_N \ Λ_{N/4}` for a box region at the origin.
pub fn annulus_shifted<R: Real>(graph: &RegionGraph, h: &[R], n: u32, delta: R) -> Vec<R> {
    let core = BoxRegion::centered(n / 4);
    (0..graph.len())
        .map(|i| {
            if core.contains(graph.site(i)) {
                h[i]
            } else {
                h[i] + delta
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingMode {
    /// Site-by-site quantile coupling of exact conditionals.
    Exact,
    /// One grand monotone CFTP draw of the unexplored remainder per block; reveals the block.
    LockstepCftp,
    /// Lockstep blocks until the remainder is small, then exact steps.
    Auto,
}

/// Remainder size at which `Auto` switches to exact steps.
pub const AUTO_EXACT_REMAINDER: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: usize,
    pub site: Site,
    pub block: usize,
    /// Shared uniform `U_t`; exact steps only.
    pub uniform: Option<f64>,
    /// `θ_i(+1)` per chain; exact steps only.
    pub theta: Option<Vec<f64>>,
    pub spins: Vec<i8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub index: usize,
    pub label: String,
    pub first_step: usize,
    pub len: usize,
    pub exact: bool,
    /// CFTP look-back used by a lockstep block.
    pub sweeps: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiPhaseInfo {
    pub params: MultiPhaseParams,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTrace {
    pub schema: String,
    pub policy: String,
    pub mode: CouplingMode,
    pub seed: u64,
    pub chains: usize,
    pub region: Vec<Site>,
    pub steps: Vec<TraceStep>,
    pub blocks: Vec<BlockRecord>,
    pub stages: Vec<StageRecord>,
    pub multi_phase: Option<MultiPhaseInfo>,
}

impl CouplingTrace {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| LabError::Format(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s).map_err(|e| LabError::Format(e.to_string()))?;
        if t.schema != TRACE_SCHEMA {
            return Err(LabError::Format(format!(
                "unsupported trace schema {}",
                t.schema
            )));
        }
        Ok(t)
    }

    /// Spins of each chain in region order, from the recorded steps.
    pub fn final_spins(&self) -> Vec<Vec<i8>> {
        let index: std::collections::HashMap<Site, usize> = self
            .region
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i))
            .collect();
        let mut out = vec![vec![0i8; self.region.len()]; self.chains];
        for st in &self.steps {
            let i = index[&st.site];
            for (c, &v) in st.spins.iter().enumerate() {
                out[c][i] = v;
            }
        }
        out
    }

    /// Explored set after `t` steps.
    pub fn explored_after(&self, t: usize) -> SiteSet {
        self.steps[..t.min(self.steps.len())]
            .iter()
            .map(|s| s.site)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct CouplingOutcome {
    pub configs: Vec<Vec<i8>>,
    pub trace: CouplingTrace,
}

/// Exact conditionals over a fixed set of free sites (at most the enumeration limit).
struct ExactPhase<R: Real> {
    local: Vec<Option<usize>>,
    oracles: Vec<ConditionalOracle<R>>,
    mask: u32,
    values: Vec<u32>,
}

impl<R: Real> ExactPhase<R> {
    fn build(specs: &[GibbsSpec<R>], free: &[usize], n: usize) -> Result<Self> {
        let mut local = vec![None; n];
        for (k, &i) in free.iter().enumerate() {
            local[i] = Some(k);
        }
        let oracles = specs
            .iter()
            .map(|s| Ok(ConditionalOracle::new(&ExactGibbs::new(s)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            local,
            oracles,
            mask: 0,
            values: vec![0; specs.len()],
        })
    }

    fn reset(&mut self) {
        self.mask = 0;
        self.values.iter_mut().for_each(|v| *v = 0);
    }
}

/// Builds the conditional law of the unexplored remainder for every chain.
fn remainder_specs<R: Real>(
    family: &Family<R>,
    explored: &[bool],
    spins: &[Vec<i8>],
) -> Result<(Vec<usize>, Vec<GibbsSpec<R>>)> {
    let g = family.graph();
    let free: Vec<usize> = (0..g.len()).filter(|&i| !explored[i]).collect();
    let set: SiteSet = free.iter().map(|&i| g.site(i)).collect();
    let sub = Arc::new(RegionGraph::new(&set));
    let specs = family
        .specs()
        .iter()
        .enumerate()
        .map(|(c, spec)| {
            let boundary = sub
                .boundary_sites()
                .iter()
                .map(|&b| match g.index_of(b) {
                    Some(j) => spins[c][j],
                    None => spec.boundary()[g.boundary_index(b).expect("outer boundary site")],
                })
                .collect();
            let h = sub
                .sites()
                .iter()
                .map(|&s| spec.field()[g.index_of(s).unwrap()])
                .collect();
            GibbsSpec::new(sub.clone(), boundary, h, spec.beta())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((free, specs))
}

/// Reusable sampler; exact tables built once per family.
pub struct AdaptiveCoupler<'a, R: Real> {
    family: &'a Family<R>,
    mode: CouplingMode,
    full_table: Option<ExactPhase<R>>,
    pub cftp: CftpOptions,
}

const TAG_BLOCK: u64 = 0x424c_4f43;

impl<'a, R: Real> AdaptiveCoupler<'a, R> {
    pub fn new(family: &'a Family<R>, mode: CouplingMode) -> Result<Self> {
        let full_table = if mode == CouplingMode::Exact {
            let n = family.graph().len();
            if n > ENUMERATION_LIMIT {
                return Err(LabError::Capacity(format!(
                    "exact coupling on {n} sites exceeds the enumeration limit; use lockstep or auto mode"
                )));
            }
            let all: Vec<usize> = (0..n).collect();
            Some(ExactPhase::build(family.specs(), &all, n)?)
        } else {
            None
        };
        Ok(Self {
            family,
            mode,
            full_table,
            cftp: CftpOptions::default(),
        })
    }

    pub fn run(
        &mut self,
        policy: &mut dyn ExplorationPolicy,
        seed: u64,
    ) -> Result<CouplingOutcome> {
        let g = self.family.graph().clone();
        let n = g.len();
        let k = self.family.len();
        let mut explored = vec![false; n];
        let mut spins = vec![vec![0i8; n]; k];
        let mut steps: Vec<TraceStep> = Vec::with_capacity(n);
        let mut blocks: Vec<BlockRecord> = Vec::new();
        let mut local_table: Option<ExactPhase<R>> = None;
        if let Some(t) = self.full_table.as_mut() {
            t.reset();
        }
        loop {
            if steps.len() == n {
                break;
            }
            let block = {
                let state = ExplorationState {
                    graph: &g,
                    explored: &explored,
                    spins: &spins,
                };
                policy.next_block(&state)?
            };
            let Some(block) = block else {
                return Err(LabError::InvalidParameter(format!(
                    "policy {} stopped with {} unexplored sites",
                    policy.name(),
                    n - steps.len()
                )));
            };
            let mut seen = vec![false; n];
            for &i in &block.sites {
                if i >= n || explored[i] || seen[i] {
                    return Err(LabError::InvalidParameter(format!(
                        "policy {} revisited or invented a site",
                        policy.name()
                    )));
                }
                seen[i] = true;
            }
            let bi = blocks.len();
            let first_step = steps.len();
            let remainder = n - steps.len();
            let use_exact = match self.mode {
                CouplingMode::Exact => true,
                CouplingMode::LockstepCftp => false,
                CouplingMode::Auto => local_table.is_some() || remainder <= AUTO_EXACT_REMAINDER,
            };
            let mut sweeps = None;
            if use_exact {
                if self.mode == CouplingMode::Auto && local_table.is_none() {
                    let (free, specs) = remainder_specs(self.family, &explored, &spins)?;
                    local_table = Some(ExactPhase::build(&specs, &free, n)?);
                }
                let table = match self.mode {
                    CouplingMode::Exact => self.full_table.as_mut().unwrap(),
                    _ => local_table.as_mut().unwrap(),
                };
                for &i in &block.sites {
                    let t = steps.len();
                    let l = table.local[i].expect("site in exact table");
                    let u = rng::uniform(seed, STREAM_COUPLING, t as u64, 0);
                    let mut theta = Vec::with_capacity(k);
                    let mut col = Vec::with_capacity(k);
                    for c in 0..k {
                        let th = table.oracles[c]
                            .plus_probability(table.mask, table.values[c], l)
                            .f64();
                        let v: i8 = if u <= 1.0 - th { -1 } else { 1 };
                        if v > 0 {
                            table.values[c] |= 1 << l;
                        }
                        spins[c][i] = v;
                        theta.push(th);
                        col.push(v);
                    }
                    table.mask |= 1 << l;
                    explored[i] = true;
                    steps.push(TraceStep {
                        t,
                        site: g.site(i),
                        block: bi,
                        uniform: Some(u),
                        theta: Some(theta),
                        spins: col,
                    });
                }
            } else if !block.sites.is_empty() {
                let (free, specs) = remainder_specs(self.family, &explored, &spins)?;
                let stream = UpdateStream::new(rng::derive_seed(seed, TAG_BLOCK, bi as u64));
                let draw = grand_monotone_sample_with(&specs, stream, self.cftp)?;
                sweeps = Some(draw.sweeps);
                let mut pos = vec![usize::MAX; n];
                for (p, &i) in free.iter().enumerate() {
                    pos[i] = p;
                }
                for &i in &block.sites {
                    let col: Vec<i8> = (0..k).map(|c| draw.configs[c][pos[i]]).collect();
                    for c in 0..k {
                        spins[c][i] = col[c];
                    }
                    explored[i] = true;
                    steps.push(TraceStep {
                        t: steps.len(),
                        site: g.site(i),
                        block: bi,
                        uniform: None,
                        theta: None,
                        spins: col,
                    });
                }
            }
            blocks.push(BlockRecord {
                index: bi,
                label: block.label,
                first_step,
                len: block.sites.len(),
                exact: use_exact,
                sweeps,
            });
        }
        // let the policy close its last stage record on the final spins
        {
            let state = ExplorationState {
                graph: &g,
                explored: &explored,
                spins: &spins,
            };
            while policy
                .next_block(&state)?
                .is_some_and(|b| b.sites.is_empty())
            {}
        }
        let trace = CouplingTrace {
            schema: TRACE_SCHEMA.into(),
            policy: policy.name(),
            mode: self.mode,
            seed,
            chains: k,
            region: g.sites().to_vec(),
            steps,
            blocks,
            stages: policy.stages(),
            multi_phase: None,
        };
        Ok(CouplingOutcome {
            configs: spins,
            trace,
        })
    }
}

/// One run of the adaptive admissible coupling.
pub fn adaptive_admissible_sample<R: Real>(
    family: &Family<R>,
    policy: &mut dyn ExplorationPolicy,
    mode: CouplingMode,
    seed: u64,
) -> Result<CouplingOutcome> {
    AdaptiveCoupler::new(family, mode)?.run(policy, seed)
}

/// Breadth-first coupling of the plus and minus measures on `Λ_N`.
pub fn breadth_first_coupling<R: Real>(
    n: u32,
    h: &[R],
    beta: R,
    mode: CouplingMode,
    seed: u64,
) -> Result<CouplingOutcome> {
    let g = Arc::new(RegionGraph::from_box(&BoxRegion::centered(n)));
    let family = Family::plus_minus(g, h.to_vec(), beta)?;
    let mut policy = policy::BreadthFirstPolicy::plus_minus(n);
    AdaptiveCoupler::new(&family, mode)?.run(&mut policy, seed)
}

/// Multi-phase exploration of the four-chain family `(±, h)`, `(±, h̃)` on `Λ_N`.
pub fn multi_phase_exploration<R: Real>(
    params: MultiPhaseParams,
    h: &[R],
    delta: R,
    beta: R,
    mode: CouplingMode,
    seed: u64,
) -> Result<CouplingOutcome> {
    params.validate()?;
    let g = Arc::new(RegionGraph::from_box(&BoxRegion::centered(params.n)));
    if h.len() != g.len() {
        return Err(LabError::InvalidParameter(
            "field length differs from Λ_N".into(),
        ));
    }
    let ht = annulus_shifted(&g, h, params.n, delta);
    let family = Family::four(g, h.to_vec(), ht, beta)?;
    let pairs = vec![(0, 1), (2, 3)];
    let mut policy = policy::MultiPhasePolicy::new(params, pairs.clone())?;
    let mut out = AdaptiveCoupler::new(&family, mode)?.run(&mut policy, seed)?;
    out.trace.multi_phase = Some(MultiPhaseInfo { params, pairs });
    Ok(out)
}
