//! Exploration procedures: deterministic maps from the explored history to the next sites.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::lattice::{shell_clockwise, BoxRegion, Link, RegionGraph, Site};

/// Read-only view of the explored history.
pub struct ExplorationState<'a> {
    pub graph: &'a RegionGraph,
    pub explored: &'a [bool],
    /// Per chain; `0` at unexplored sites.
    pub spins: &'a [Vec<i8>],
}

impl ExplorationState<'_> {
    /// Site `i` is explored and `σ_p > σ_m` for every listed chain pair.
    pub fn disagrees(&self, i: usize, pairs: &[(usize, usize)]) -> bool {
        self.explored[i]
            && pairs
                .iter()
                .all(|&(p, m)| self.spins[p][i] > self.spins[m][i])
    }

    pub fn unexplored(&self) -> Vec<usize> {
        (0..self.graph.len())
            .filter(|&i| !self.explored[i])
            .collect()
    }
}

/// A batch of sites fixed by the history at the time it is issued, sampled in the listed order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplorationBlock {
    pub sites: Vec<usize>,
    pub label: String,
}

/// One stage of a frontier exploration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Phase `j` (0 for single-phase breadth-first runs).
    pub phase: u32,
    /// Stage number, counted from 1.
    pub stage: u32,
    /// Radius `N′` of the phase box (the region radius for breadth-first runs).
    pub radius: u32,
    /// Frontier at the start of the stage.
    pub frontier: Vec<Site>,
    /// Sites explored in the stage.
    pub explored: Vec<Site>,
    /// Frontier produced by the stage.
    pub next_frontier: Vec<Site>,
    /// The frontier was empty: the procedure finished from here.
    pub empty: bool,
    /// A newly explored site reached the inner boundary: the procedure finished from here.
    pub reached_inner: bool,
}

pub trait ExplorationPolicy {
    fn name(&self) -> String;
    /// Next block, or `None` once the policy is done.
    fn next_block(&mut self, state: &ExplorationState) -> Result<Option<ExplorationBlock>>;
    fn stages(&self) -> Vec<StageRecord> {
        Vec::new()
    }
}

/// Everything in raster order as one block.
#[derive(Clone, Debug, Default)]
pub struct RasterPolicy {
    done: bool,
}

impl RasterPolicy {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ExplorationPolicy for RasterPolicy {
    fn name(&self) -> String {
        "raster".into()
    }

    fn next_block(&mut self, state: &ExplorationState) -> Result<Option<ExplorationBlock>> {
        if self.done {
            return Ok(None);
        }
        self.done = true;
        Ok(Some(ExplorationBlock {
            sites: state.unexplored(),
            label: "raster".into(),
        }))
    }
}

/// A fixed site order, issued in blocks of `block` sites.
#[derive(Clone, Debug)]
pub struct FixedOrderPolicy {
    order: Vec<usize>,
    block: usize,
    pos: usize,
}

impl FixedOrderPolicy {
    pub fn new(order: Vec<usize>, block: usize) -> Self {
        Self {
            order,
            block: block.max(1),
            pos: 0,
        }
    }
}

impl ExplorationPolicy for FixedOrderPolicy {
    fn name(&self) -> String {
        "fixed".into()
    }

    fn next_block(&mut self, _: &ExplorationState) -> Result<Option<ExplorationBlock>> {
        if self.pos >= self.order.len() {
            return Ok(None);
        }
        let end = (self.pos + self.block).min(self.order.len());
        let sites = self.order[self.pos..end].to_vec();
        self.pos = end;
        Ok(Some(ExplorationBlock {
            sites,
            label: "fixed".into(),
        }))
    }
}

fn finish_block(state: &ExplorationState) -> ExplorationBlock {
    ExplorationBlock {
        sites: state.unexplored(),
        label: "finish".into(),
    }
}

/// Frontier growth from the region boundary through the disagreement set.
#[derive(Clone, Debug)]
pub struct BreadthFirstPolicy {
    pairs: Vec<(usize, usize)>,
    radius: u32,
    frontier: Option<Vec<usize>>,
    pending: Vec<usize>,
    stage: u32,
    stages: Vec<StageRecord>,
    finished: bool,
}

impl BreadthFirstPolicy {
    /// `pairs` lists the chain pairs `(p, m)` whose disagreement defines membership in `C`.
    pub fn new(pairs: Vec<(usize, usize)>, radius: u32) -> Self {
        Self {
            pairs,
            radius,
            frontier: None,
            pending: Vec::new(),
            stage: 0,
            stages: Vec::new(),
            finished: false,
        }
    }

    pub fn plus_minus(radius: u32) -> Self {
        Self::new(vec![(0, 1)], radius)
    }
}

impl ExplorationPolicy for BreadthFirstPolicy {
    fn name(&self) -> String {
        "breadth-first".into()
    }

    fn next_block(&mut self, state: &ExplorationState) -> Result<Option<ExplorationBlock>> {
        if self.finished {
            return Ok(None);
        }
        let g = state.graph;
        let candidates: Vec<usize> = match &self.frontier {
            None => {
                // A_0 is the outer boundary, which carries the disagreeing boundary values
                (0..g.len())
                    .filter(|&i| {
                        !state.explored[i]
                            && g.links(i).iter().any(|l| matches!(l, Link::Boundary(_)))
                    })
                    .collect()
            }
            Some(_) => {
                let next: Vec<usize> = self
                    .pending
                    .iter()
                    .copied()
                    .filter(|&i| state.disagrees(i, &self.pairs))
                    .collect();
                if let Some(last) = self.stages.last_mut() {
                    last.next_frontier = next.iter().map(|&i| g.site(i)).collect();
                }
                self.frontier = Some(next.clone());
                let mut mark = vec![false; g.len()];
                for &a in &next {
                    for l in g.links(a) {
                        if let Link::Site(j) = *l {
                            if !state.explored[j as usize] {
                                mark[j as usize] = true;
                            }
                        }
                    }
                }
                if next.is_empty() {
                    self.stage += 1;
                    self.stages.push(StageRecord {
                        phase: 0,
                        stage: self.stage,
                        radius: self.radius,
                        frontier: Vec::new(),
                        explored: Vec::new(),
                        next_frontier: Vec::new(),
                        empty: true,
                        reached_inner: false,
                    });
                    self.finished = true;
                    return Ok(Some(finish_block(state)));
                }
                (0..g.len()).filter(|&i| mark[i]).collect()
            }
        };
        let frontier_sites = match &self.frontier {
            None => g.boundary_sites().to_vec(),
            Some(f) => f.iter().map(|&i| g.site(i)).collect(),
        };
        if self.frontier.is_none() {
            self.frontier = Some(Vec::new());
        }
        self.stage += 1;
        self.stages.push(StageRecord {
            phase: 0,
            stage: self.stage,
            radius: self.radius,
            frontier: frontier_sites,
            explored: candidates.iter().map(|&i| g.site(i)).collect(),
            next_frontier: Vec::new(),
            empty: false,
            reached_inner: false,
        });
        self.pending = candidates.clone();
        Ok(Some(ExplorationBlock {
            sites: candidates,
            label: format!("stage {}", self.stage),
        }))
    }

    fn stages(&self) -> Vec<StageRecord> {
        self.stages.clone()
    }
}

/// Schedule parameters of the multi-phase exploration on `Λ_N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiPhaseParams {
    pub n: u32,
    /// Stages per phase minus one: stages run for `k = 0..=K`.
    pub k_max: u32,
    /// Number of phases `ℓ`.
    pub phases: u32,
    /// Radius decrement per phase, `⌊N^{α′}⌋` by default.
    pub step: u32,
    pub alpha_prime: f64,
    pub alpha: f64,
    /// K, ℓ or the step were set by hand rather than from the exponents.
    pub overridden: bool,
}

pub const DEFAULT_ALPHA_PRIME: f64 = 0.9;
pub const DEFAULT_ALPHA: f64 = 1.5;

impl MultiPhaseParams {
    /// `K = ⌊N^{α′α}⌋`, `ℓ = ⌊N^{1−α′}/4⌋`, step `⌊N^{α′}⌋`.
    pub fn from_exponents(n: u32, alpha_prime: f64, alpha: f64) -> Self {
        let nf = n as f64;
        Self {
            n,
            k_max: nf.powf(alpha_prime * alpha).floor() as u32,
            phases: (nf.powf(1.0 - alpha_prime) / 4.0).floor() as u32,
            step: nf.powf(alpha_prime).floor() as u32,
            alpha_prime,
            alpha,
            overridden: false,
        }
    }

    pub fn with_overrides(
        mut self,
        k_max: Option<u32>,
        phases: Option<u32>,
        step: Option<u32>,
    ) -> Self {
        if let Some(k) = k_max {
            self.k_max = k;
            self.overridden = true;
        }
        if let Some(l) = phases {
            self.phases = l;
            self.overridden = true;
        }
        if let Some(s) = step {
            self.step = s;
            self.overridden = true;
        }
        self
    }

    /// `N′_j = N/2 − (j−1)·step`.
    pub fn phase_radius(&self, j: u32) -> i64 {
        (self.n / 2) as i64 - (j as i64 - 1) * self.step as i64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || !self.n.is_multiple_of(4) {
            return Err(LabError::InvalidParameter(format!(
                "N = {} must be a positive multiple of 4",
                self.n
            )));
        }
        if self.step == 0 {
            return Err(LabError::InvalidParameter(
                "phase step must be positive".into(),
            ));
        }
        for j in 1..=self.phases {
            let inner = self.phase_radius(j) - self.step as i64;
            if inner <= (self.n / 4) as i64 {
                return Err(LabError::InvalidParameter(format!(
                    "phase {j}: N′ − step = {inner} ≤ N/4 = {}",
                    self.n / 4
                )));
            }
        }
        Ok(())
    }
}

/// `∂Λ_r` at the origin: the ring at radius `r+1` without its corners.
pub fn literal_boundary_contains(s: Site, r: i64) -> bool {
    let (ax, ay) = (s.x.unsigned_abs() as i64, s.y.unsigned_abs() as i64);
    (ax == r + 1 && ay <= r) || (ay == r + 1 && ax <= r)
}

#[derive(Clone, Debug)]
enum Mode {
    Shells(u32),
    StartPhase(u32),
    Stage { j: u32, k: u32 },
    Ring(u32),
    Finish,
    Done,
}

/// Shells from the outside in, then frontier phases through `C_*` on shrinking boxes.
#[derive(Clone, Debug)]
pub struct MultiPhasePolicy {
    params: MultiPhaseParams,
    pairs: Vec<(usize, usize)>,
    mode: Mode,
    frontier: Vec<usize>,
    pending: Vec<usize>,
    stages: Vec<StageRecord>,
}

impl MultiPhasePolicy {
    /// `pairs` define `C_*`; the region must be `Λ_N` at the origin.
    pub fn new(params: MultiPhaseParams, pairs: Vec<(usize, usize)>) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            pairs,
            mode: Mode::Shells(params.n),
            frontier: Vec::new(),
            pending: Vec::new(),
            stages: Vec::new(),
        })
    }

    pub fn params(&self) -> &MultiPhaseParams {
        &self.params
    }

    fn block(sites: Vec<usize>, label: String) -> Option<ExplorationBlock> {
        Some(ExplorationBlock { sites, label })
    }
}

impl ExplorationPolicy for MultiPhasePolicy {
    fn name(&self) -> String {
        "multi-phase".into()
    }

    fn next_block(&mut self, state: &ExplorationState) -> Result<Option<ExplorationBlock>> {
        let g = state.graph;
        let p = self.params;
        if g.len() != BoxRegion::centered(p.n).len()
            || g.index_of(Site::new(p.n as i32, p.n as i32)).is_none()
        {
            return Err(LabError::Geometry(format!(
                "multi-phase exploration needs Λ_{} at the origin",
                p.n
            )));
        }
        loop {
            match self.mode.clone() {
                Mode::Shells(r) => {
                    self.mode = if r > p.n / 2 + 1 {
                        Mode::Shells(r - 1)
                    } else {
                        Mode::StartPhase(1)
                    };
                    let sites = shell_clockwise(Site::ORIGIN, r)
                        .into_iter()
                        .filter_map(|s| g.index_of(s))
                        .filter(|&i| !state.explored[i])
                        .collect();
                    return Ok(Self::block(sites, format!("shell {r}")));
                }
                Mode::StartPhase(j) => {
                    if j > p.phases {
                        self.mode = Mode::Finish;
                        continue;
                    }
                    let r = p.phase_radius(j);
                    self.frontier = (0..g.len())
                        .filter(|&i| {
                            literal_boundary_contains(g.site(i), r)
                                && state.disagrees(i, &self.pairs)
                        })
                        .collect();
                    self.mode = Mode::Stage { j, k: 0 };
                }
                Mode::Stage { j, k } => {
                    let r = p.phase_radius(j);
                    let inner = r - p.step as i64;
                    if k > 0 {
                        let reached = self
                            .pending
                            .iter()
                            .any(|&i| literal_boundary_contains(g.site(i), inner));
                        let last = self.stages.last_mut().expect("stage record");
                        if reached {
                            last.reached_inner = true;
                            self.mode = Mode::Finish;
                            continue;
                        }
                        self.frontier = self
                            .pending
                            .iter()
                            .copied()
                            .filter(|&i| state.disagrees(i, &self.pairs))
                            .collect();
                        last.next_frontier = self.frontier.iter().map(|&i| g.site(i)).collect();
                        if k > p.k_max {
                            self.mode = Mode::Ring(j);
                            continue;
                        }
                    }
                    let stage = k + 1;
                    if self.frontier.is_empty() {
                        self.stages.push(StageRecord {
                            phase: j,
                            stage,
                            radius: r as u32,
                            frontier: Vec::new(),
                            explored: Vec::new(),
                            next_frontier: Vec::new(),
                            empty: true,
                            reached_inner: false,
                        });
                        self.mode = Mode::Finish;
                        continue;
                    }
                    let inside = BoxRegion::centered(r as u32);
                    let mut mark = vec![false; g.len()];
                    for &a in &self.frontier {
                        for n in g.site(a).neighbors4() {
                            if let Some(b) = g.index_of(n) {
                                if inside.contains(n) && !state.explored[b] {
                                    mark[b] = true;
                                }
                            }
                        }
                    }
                    let sites: Vec<usize> = (0..g.len()).filter(|&i| mark[i]).collect();
                    self.stages.push(StageRecord {
                        phase: j,
                        stage,
                        radius: r as u32,
                        frontier: self.frontier.iter().map(|&i| g.site(i)).collect(),
                        explored: sites.iter().map(|&i| g.site(i)).collect(),
                        next_frontier: Vec::new(),
                        empty: false,
                        reached_inner: false,
                    });
                    self.pending = sites.clone();
                    self.mode = Mode::Stage { j, k: k + 1 };
                    return Ok(Self::block(sites, format!("phase {j} stage {stage}")));
                }
                Mode::Ring(j) => {
                    let r = p.phase_radius(j);
                    let outer = BoxRegion::centered(r as u32);
                    let inner = BoxRegion::centered((r - p.step as i64) as u32);
                    let sites = (0..g.len())
                        .filter(|&i| {
                            let s = g.site(i);
                            !state.explored[i] && outer.contains(s) && !inner.contains(s)
                        })
                        .collect();
                    self.mode = Mode::StartPhase(j + 1);
                    return Ok(Self::block(sites, format!("phase {j} ring")));
                }
                Mode::Finish => {
                    self.mode = Mode::Done;
                    return Ok(Some(finish_block(state)));
                }
                Mode::Done => return Ok(None),
            }
        }
    }

    fn stages(&self) -> Vec<StageRecord> {
        self.stages.clone()
    }
}
