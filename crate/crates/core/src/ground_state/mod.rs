//! Zero-temperature ground states by minimum cut, ξ-labels and disagreement sets.

pub mod mincut;
mod spins;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::FieldSample;
use crate::lattice::{components4, BoxRegion, Link, RegionGraph, Site, SiteSet};
use crate::num::Real;
use mincut::FlowNetwork;

pub(crate) use spins::check_boundary;
pub use spins::{
    boundary_from_fn, energy, external_terms, hamiltonian, uniform_boundary, RunLength, SpinConfig,
};

/// Both extremal minimizers of the Hamiltonian under a fixed boundary.
#[derive(Clone, Debug)]
pub struct GroundState<R: Real> {
    /// Minimizer with the largest set of `+1` spins.
    pub upper: SpinConfig,
    /// Minimizer with the smallest set of `+1` spins.
    pub lower: SpinConfig,
    pub energy: R,
    /// Extremal minimizers differ, or a near-tie within the gap threshold was seen.
    pub degenerate: bool,
}

impl<R: Real> GroundState<R> {
    pub fn config(&self) -> &SpinConfig {
        &self.upper
    }
}

/// Exact minimizer through the source/sink cut reduction; source side reads as `+1`.
pub fn ground_state_values<R: Real>(
    graph: &Arc<RegionGraph>,
    h: &[R],
    boundary: &[i8],
) -> Result<GroundState<R>> {
    check_boundary(graph, boundary)?;
    if h.len() != graph.len() {
        return Err(LabError::InvalidParameter(
            "field length differs from region size".into(),
        ));
    }
    let n = graph.len();
    let (s, t) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2);
    let two = R::of(2.0);
    let a = external_terms(graph, h, boundary);
    let mut offset = R::zero();
    for (i, &ai) in a.iter().enumerate() {
        // −σ a: choosing the disfavoured sign costs 2|a| over the favoured one
        offset = offset - ai.abs();
        if ai > R::zero() {
            net.add_edge(s, i, two * ai, R::zero());
        } else if ai < R::zero() {
            net.add_edge(i, t, -two * ai, R::zero());
        }
    }
    for &(u, v) in graph.edges() {
        net.add_edge(u as usize, v as usize, two, two);
    }
    offset = offset - R::of(graph.edges().len() as f64);
    let flow = net.max_flow(s, t);

    let exact = R::of(R::FLOW_EPS);
    let loose = R::of(R::TIE_GAP);
    let low = net.source_reachable(s, exact);
    let high_rev = net.sink_reaching(t, exact);
    let low_loose = net.source_reachable(s, loose);
    let high_loose = net.sink_reaching(t, loose);
    let to_spins = |plus: &dyn Fn(usize) -> bool| -> Vec<i8> {
        (0..n).map(|i| if plus(i) { 1 } else { -1 }).collect()
    };
    let lower_spins = to_spins(&|i| low[i]);
    let upper_spins = to_spins(&|i| !high_rev[i]);
    let degenerate = lower_spins != upper_spins
        || (0..n).any(|i| low_loose[i] != low[i] || high_loose[i] != high_rev[i]);
    let lower = SpinConfig::new(graph.clone(), lower_spins, boundary.to_vec())?;
    let upper = SpinConfig::new(graph.clone(), upper_spins, boundary.to_vec())?;
    Ok(GroundState {
        upper,
        lower,
        energy: offset + flow,
        degenerate,
    })
}

pub fn ground_state<R: Real>(
    graph: &Arc<RegionGraph>,
    field: &FieldSample<R>,
    boundary: &[i8],
) -> Result<GroundState<R>> {
    ground_state_values(graph, &field.on_graph(graph)?, boundary)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Xi {
    Plus,
    Minus,
    Zero,
}

#[derive(Clone, Debug)]
pub struct XiLabeling {
    pub graph: Arc<RegionGraph>,
    pub labels: Vec<Xi>,
    pub plus: Vec<i8>,
    pub minus: Vec<i8>,
    pub degenerate: bool,
}

impl XiLabeling {
    pub fn from_pair(graph: Arc<RegionGraph>, plus: Vec<i8>, minus: Vec<i8>) -> Result<Self> {
        let mut labels = Vec::with_capacity(plus.len());
        for (i, (&p, &m)) in plus.iter().zip(&minus).enumerate() {
            labels.push(match (p, m) {
                (1, 1) => Xi::Plus,
                (-1, -1) => Xi::Minus,
                (1, -1) => Xi::Zero,
                _ => {
                    let s = graph.site(i);
                    return Err(LabError::OrderingViolation(format!(
                        "σ⁺ < σ⁻ at ({}, {})",
                        s.x, s.y
                    )));
                }
            });
        }
        Ok(Self {
            graph,
            labels,
            plus,
            minus,
            degenerate: false,
        })
    }

    /// Label at a site; boundary sites of the region read as `Zero` (σ⁺ = +1, σ⁻ = −1 there).
    pub fn label_at(&self, s: Site) -> Option<Xi> {
        match self.graph.index_of(s) {
            Some(i) => Some(self.labels[i]),
            None => self.graph.boundary_index(s).map(|_| Xi::Zero),
        }
    }

    /// `C = {v : ξ_v = 0}`.
    pub fn disagreement(&self) -> SiteSet {
        self.graph
            .sites()
            .iter()
            .zip(&self.labels)
            .filter(|p| *p.1 == Xi::Zero)
            .map(|p| *p.0)
            .collect()
    }
}

/// Labels from the plus- and minus-boundary ground states.
///
/// The plus side takes the upper minimizer and the minus side the lower one, which
/// keeps `σ⁺ ≥ σ⁻` even at exact ties; ties are still flagged.
pub fn xi_labels_values<R: Real>(graph: &Arc<RegionGraph>, h: &[R]) -> Result<XiLabeling> {
    let gp = ground_state_values(graph, h, &uniform_boundary(graph, 1))?;
    let gm = ground_state_values(graph, h, &uniform_boundary(graph, -1))?;
    let mut xi = XiLabeling::from_pair(graph.clone(), gp.upper.spins, gm.lower.spins)?;
    xi.degenerate = gp.degenerate || gm.degenerate;
    Ok(xi)
}

pub fn xi_labels<R: Real>(graph: &Arc<RegionGraph>, field: &FieldSample<R>) -> Result<XiLabeling> {
    xi_labels_values(graph, &field.on_graph(graph)?)
}

/// Disagreement set `C^B` of a box.
pub fn disagreement_set<R: Real>(region: &BoxRegion, field: &FieldSample<R>) -> Result<XiLabeling> {
    let g = Arc::new(RegionGraph::from_box(region));
    xi_labels(&g, field)
}

/// `C^B ∩ B′ ⊆ C^{B′}` for a field on `B` and a box `B′ ⊂ B`.
pub fn restriction_monotonicity_check<R: Real>(
    field_b: &FieldSample<R>,
    b_prime: &BoxRegion,
) -> Result<bool> {
    let big = disagreement_set(&field_b.region, field_b)?.disagreement();
    let small = disagreement_set(b_prime, field_b)?.disagreement();
    let ok = big
        .iter()
        .filter(|s| b_prime.contains(*s))
        .all(|s| small.contains(s));
    Ok(ok)
}

/// Margins of the two flip inequalities for a ZERO set `S`:
/// `h_S + |g(S,+)| − |g(S,−)| + |g(S,0)|` and `−h_S + |g(S,−)| − |g(S,+)| + |g(S,0)|`.
pub fn flip_margins<R: Real>(xi: &XiLabeling, h: &[R], set: &[Site]) -> (R, R) {
    let members: SiteSet = set.iter().copied().collect();
    let mut h_s = R::zero();
    let (mut gp, mut gm, mut g0) = (0i64, 0i64, 0i64);
    for &u in set {
        let i = xi.graph.index_of(u).expect("set inside region");
        h_s = h_s + h[i];
        for v in u.neighbors4() {
            if members.contains(v) {
                continue;
            }
            match xi
                .label_at(v)
                .expect("neighbor inside region or its boundary")
            {
                Xi::Plus => gp += 1,
                Xi::Minus => gm += 1,
                Xi::Zero => g0 += 1,
            }
        }
    }
    let f = |x: i64| R::of(x as f64);
    (h_s + f(gp) - f(gm) + f(g0), -h_s + f(gm) - f(gp) + f(g0))
}

/// Connected ZERO components, each with both flip margins.
pub fn zero_component_margins<R: Real>(xi: &XiLabeling, h: &[R]) -> Vec<(Vec<Site>, R, R)> {
    components4(&xi.disagreement())
        .into_iter()
        .map(|c| {
            let (a, b) = flip_margins(xi, h, &c);
            (c, a, b)
        })
        .collect()
}

/// Region sites with a neighbor on the region boundary.
pub fn touches_boundary(graph: &RegionGraph, i: usize) -> bool {
    graph
        .links(i)
        .iter()
        .any(|l| matches!(l, Link::Boundary(_)))
}
