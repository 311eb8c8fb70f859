//! Replay, structural and statistical audits of coupling runs.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::hat::{hat_transform, BoundaryRow, HatBoundary};
use super::policy::literal_boundary_contains;
use super::policy::RasterPolicy;
use super::{remainder_specs, AdaptiveCoupler, CouplingMode, CouplingOutcome, CouplingTrace, Family};
use crate::cftp::{grand_monotone_sample_with, CftpOptions, UpdateStream};
use crate::error::{LabError, Result};
use crate::gibbs::audit::perturbed_gap;
use crate::gibbs::{ExactGibbs, GibbsSpec};
use crate::lattice::{BoxRegion, Link, RegionGraph, Site, SiteSet};
use crate::num::Real;
use crate::rng;
use crate::stats::{chi_square_gof, MeanSe};

/// Sites where every listed pair disagrees.
pub fn disagreement_mask(configs: &[Vec<i8>], pairs: &[(usize, usize)]) -> Vec<bool> {
    (0..configs[0].len())
        .map(|i| pairs.iter().all(|&(p, m)| configs[p][i] > configs[m][i]))
        .collect()
}

/// Every four-chain local pattern is one of the six admissible rows.
pub fn table_one_patterns_hold(configs: &[Vec<i8>]) -> bool {
    configs.len() == 4
        && (0..configs[0].len()).all(|i| {
            BoundaryRow::classify([configs[0][i], configs[1][i], configs[2][i], configs[3][i]])
                .is_ok()
        })
}

/// `o ∈ C` only if `o` is joined inside `C` to a site next to the region boundary.
pub fn percolation_property_holds(graph: &RegionGraph, c: &[bool], o: Site) -> bool {
    let Some(start) = graph.index_of(o) else {
        return true;
    };
    if !c[start] {
        return true;
    }
    let mut seen = vec![false; graph.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(i) = queue.pop_front() {
        for l in graph.links(i) {
            match *l {
                Link::Boundary(_) => return true,
                Link::Site(j) => {
                    let j = j as usize;
                    if c[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    false
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub steps: usize,
    /// Sites distinct and `V_t = V_{t−1} ∪ {v_t}` covers the region.
    pub visits_consistent: bool,
    /// Exact steps: spins equal the threshold rule `σ_i = −1 ⇔ U ≤ 1 − θ_i`.
    pub thresholds_consistent: bool,
    pub stages_checked: usize,
    /// Frontier sets recomputed by breadth-first search equal the recorded ones.
    pub frontiers_match: bool,
    /// At most one of the empty / inner-boundary events per stage.
    pub events_exclusive: bool,
}

impl ReplayReport {
    pub fn ok(&self) -> bool {
        self.visits_consistent
            && self.thresholds_consistent
            && self.frontiers_match
            && self.events_exclusive
    }
}

/// BFS layers of `carrier` from `sources`, as a site → distance map.
fn layers(carrier: &SiteSet, sources: &[Site]) -> HashMap<Site, u32> {
    let mut d = HashMap::new();
    let mut q = VecDeque::new();
    for &s in sources {
        if carrier.contains(s) && d.insert(s, 0).is_none() {
            q.push_back(s);
        }
    }
    while let Some(u) = q.pop_front() {
        let du = d[&u];
        for v in u.neighbors4() {
            if carrier.contains(v) && !d.contains_key(&v) {
                d.insert(v, du + 1);
                q.push_back(v);
            }
        }
    }
    d
}

fn sorted(mut v: Vec<Site>) -> Vec<Site> {
    v.sort();
    v
}

/// Recomputes what a trace claims from its own recorded spins.
pub fn replay_trace(trace: &CouplingTrace) -> ReplayReport {
    let mut r = ReplayReport {
        steps: trace.steps.len(),
        ..Default::default()
    };
    let region: SiteSet = trace.region.iter().copied().collect();
    let mut seen = SiteSet::new();
    r.visits_consistent = trace.steps.len() == trace.region.len()
        && trace
            .steps
            .iter()
            .enumerate()
            .all(|(t, s)| s.t == t && region.contains(s.site) && seen.insert(s.site));
    r.thresholds_consistent = trace.steps.iter().all(|s| match (&s.uniform, &s.theta) {
        (Some(u), Some(th)) => th
            .iter()
            .zip(&s.spins)
            .all(|(&p, &v)| (v == -1) == (*u <= 1.0 - p)),
        (None, None) => true,
        _ => false,
    });
    r.events_exclusive = trace.stages.iter().all(|s| !(s.empty && s.reached_inner));

    let finals = trace.final_spins();
    let index: HashMap<Site, usize> = trace
        .region
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i))
        .collect();
    let pairs: Vec<(usize, usize)> = match &trace.multi_phase {
        Some(m) => m.pairs.clone(),
        None => vec![(0, 1)],
    };
    let c_star: SiteSet = trace
        .region
        .iter()
        .filter(|s| {
            pairs
                .iter()
                .all(|&(p, m)| finals[p][index[s]] > finals[m][index[s]])
        })
        .copied()
        .collect();
    let mut ok = true;
    let mut by_phase: BTreeMap<u32, Vec<&super::policy::StageRecord>> = BTreeMap::new();
    for s in &trace.stages {
        by_phase.entry(s.phase).or_default().push(s);
    }
    for (phase, recs) in by_phase {
        let radius = recs[0].radius as i64;
        let (carrier, sources, offset): (SiteSet, Vec<Site>, u32) = if phase == 0 {
            // A_0 is the boundary itself; the outer layer of C sits at distance 1
            let layer: Vec<Site> = trace
                .region
                .iter()
                .filter(|s| s.neighbors4().iter().any(|n| !region.contains(*n)))
                .copied()
                .collect();
            (c_star.clone(), layer, 1)
        } else {
            let inside = BoxRegion::centered(radius as u32);
            let src: Vec<Site> = c_star
                .iter()
                .filter(|&s| literal_boundary_contains(s, radius))
                .collect();
            let carrier = c_star
                .filter(|s| inside.contains(s))
                .union(&src.iter().copied().collect());
            (carrier, src, 0)
        };
        let d = layers(&carrier, &sources);
        let layer = |k: u32| -> Vec<Site> {
            sorted(
                d.iter()
                    .filter(|(_, &v)| v + offset == k)
                    .map(|(&s, _)| s)
                    .collect(),
            )
        };
        for rec in recs {
            r.stages_checked += 1;
            let k = rec.stage - 1;
            if !(phase == 0 && k == 0) && sorted(rec.frontier.clone()) != layer(k) {
                ok = false;
            }
            if rec.empty != rec.frontier.is_empty() && !(phase == 0 && k == 0) {
                ok = false;
            }
            if !rec.empty && !rec.reached_inner && sorted(rec.next_frontier.clone()) != layer(k + 1)
            {
                ok = false;
            }
        }
    }
    r.frontiers_match = ok;
    r
}

/// Declares the stopping set as the first prefix `V_t` satisfying the rule.
pub type StoppingRule = dyn Fn(&[Site], &[Vec<i8>]) -> bool + Sync;

pub fn at_step(t: usize) -> impl Fn(&[Site], &[Vec<i8>]) -> bool + Sync {
    move |v: &[Site], _: &[Vec<i8>]| v.len() >= t
}

/// First `t` with `rule(V_t, spins on V_t)`; the run length when none fires.
pub fn stopping_step(trace: &CouplingTrace, rule: &StoppingRule) -> usize {
    let mut v = Vec::new();
    let mut s: Vec<Vec<i8>> = vec![Vec::new(); trace.chains];
    for t in 0..=trace.steps.len() {
        if rule(&v, &s) {
            return t;
        }
        if t < trace.steps.len() {
            v.push(trace.steps[t].site);
            for (c, &x) in trace.steps[t].spins.iter().enumerate() {
                s[c].push(x);
            }
        }
    }
    trace.steps.len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingAuditReport {
    pub runs: usize,
    pub bins: usize,
    pub tested_bins: usize,
    pub chains_tested: usize,
    pub min_p: f64,
    /// Largest gap between empirical and exact single-site marginals on `𝒱ᶜ`.
    pub max_marginal_deviation: f64,
    /// No bin had an unexplored remainder.
    pub vacuous: bool,
    pub threshold: f64,
}

impl StoppingAuditReport {
    pub fn passes(&self) -> bool {
        self.vacuous || self.min_p > self.threshold
    }
}

/// Bins runs by `(𝒱, σ|_𝒱)` and compares each bin's remainder law with the Gibbs measure
/// whose boundary is read off the explored spins.
pub fn stopping_set_conditional_audit<R: Real>(
    family: &Family<R>,
    runs: &[CouplingOutcome],
    rule: &StoppingRule,
    min_runs: usize,
    threshold: f64,
) -> Result<StoppingAuditReport> {
    let g = family.graph();
    let n = g.len();
    type Key = (Vec<Site>, Vec<Vec<i8>>);
    let mut bins: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for (r, run) in runs.iter().enumerate() {
        let t = stopping_step(&run.trace, rule);
        let mut sites: Vec<Site> = run.trace.steps[..t].iter().map(|s| s.site).collect();
        sites.sort();
        let spins: Vec<Vec<i8>> = (0..family.len())
            .map(|c| {
                sites
                    .iter()
                    .map(|&s| run.configs[c][g.index_of(s).unwrap()])
                    .collect()
            })
            .collect();
        bins.entry((sites, spins)).or_default().push(r);
    }
    let mut rep = StoppingAuditReport {
        runs: runs.len(),
        bins: bins.len(),
        tested_bins: 0,
        chains_tested: 0,
        min_p: 1.0,
        max_marginal_deviation: 0.0,
        vacuous: true,
        threshold,
    };
    for ((sites, _), members) in &bins {
        if members.len() < min_runs || sites.len() == n {
            continue;
        }
        rep.vacuous = false;
        rep.tested_bins += 1;
        let mut explored = vec![false; n];
        for s in sites {
            explored[g.index_of(*s).unwrap()] = true;
        }
        let reference = &runs[members[0]].configs;
        let (free, specs) = remainder_specs(family, &explored, reference)?;
        for (c, spec) in specs.iter().enumerate() {
            let exact = ExactGibbs::new(spec)?;
            let mut counts = vec![0u64; exact.states()];
            let mut plus = vec![0u64; free.len()];
            for &m in members {
                let mut state = 0usize;
                for (b, &i) in free.iter().enumerate() {
                    if runs[m].configs[c][i] > 0 {
                        state |= 1 << b;
                        plus[b] += 1;
                    }
                }
                counts[state] += 1;
            }
            let probs: Vec<f64> = (0..exact.states())
                .map(|s| exact.probability(s).f64())
                .collect();
            let chi = chi_square_gof(&counts, &probs)?;
            rep.min_p = rep.min_p.min(chi.p_value);
            let means = exact.mean_spins(None, &|_| R::zero())?;
            for (b, &cnt) in plus.iter().enumerate() {
                let emp = cnt as f64 / members.len() as f64;
                let want = (means[b].f64() + 1.0) / 2.0;
                rep.max_marginal_deviation = rep.max_marginal_deviation.max((emp - want).abs());
            }
            rep.chains_tested += 1;
        }
    }
    Ok(rep)
}

/// Source of joint draws for the hat audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HatSampler {
    /// Grand monotone CFTP over all eight chains.
    Cftp(CftpOptions),
    /// Adaptive coupling with exact conditionals, raster order; needs ≤ 24 sites.
    Exact,
}

/// Conditional setting on `S`: original boundary tuples on `∂S` and the shifted zone.
#[derive(Clone, Debug)]
pub struct HatSetting<R: Real> {
    pub graph: Arc<RegionGraph>,
    pub h: Vec<R>,
    /// Sites of `S` carrying the shift `Δ` in the tilde chains.
    pub zone: SiteSet,
    pub delta: R,
    pub beta: R,
    /// `(τ⁺, τ⁻, τ̃⁺, τ̃⁻)` per boundary site of `S`.
    pub tuples: Vec<[i8; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatAuditReport {
    pub samples: usize,
    /// Runs with `C_* ⊄ C_*^hat`.
    pub inclusion_violations: usize,
    /// Runs with `Γ ∩ C_* = ∅` yet a full disagreement inside.
    pub corollary_violations: usize,
    pub full_disagreements_on_boundary: usize,
    /// `2Δ⟨#(C_*^hat ∩ zone)⟩` estimate and its standard error.
    pub lower: f64,
    pub lower_se: f64,
    /// `Δ⟨#(C_* ∩ zone)⟩` estimate and its standard error.
    pub stopped: f64,
    pub stopped_se: f64,
    /// `(F̃^{τ̂̃⁺} − F̃^{τ̂̃⁻}) − (F^{τ̂⁺} − F^{τ̂⁻})`.
    pub middle: f64,
    pub middle_integral: f64,
    /// `16 #{full disagreements on Γ}`.
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    /// `Δ⟨#(C_* ∩ zone)⟩ ≤ 8 #{Γ ∩ C_*}` within three standard errors.
    pub stopped_bound_holds: bool,
}

impl HatAuditReport {
    pub fn passes(&self) -> bool {
        self.inclusion_violations == 0
            && self.corollary_violations == 0
            && self.lower_holds
            && self.upper_holds
            && self.stopped_bound_holds
    }
}

impl<R: Real> HatSetting<R> {
    pub fn hat(&self) -> Result<HatBoundary> {
        hat_transform(&self.tuples)
    }

    fn h_tilde(&self) -> Vec<R> {
        (0..self.graph.len())
            .map(|i| {
                if self.zone.contains(self.graph.site(i)) {
                    self.h[i] + self.delta
                } else {
                    self.h[i]
                }
            })
            .collect()
    }

    /// Chains `0..4` original, `4..8` hat, each as `(+, h), (−, h), (+, h̃), (−, h̃)`.
    pub fn specs(&self) -> Result<Vec<GibbsSpec<R>>> {
        if self.tuples.len() != self.graph.boundary_sites().len() {
            return Err(LabError::InvalidParameter(
                "one boundary tuple per boundary site required".into(),
            ));
        }
        let hat = self.hat()?;
        let ht = self.h_tilde();
        let col = |k: usize| self.tuples.iter().map(|t| t[k]).collect::<Vec<i8>>();
        let mut out = Vec::with_capacity(8);
        for (k, field) in [(0, &self.h), (1, &self.h), (2, &ht), (3, &ht)] {
            out.push(GibbsSpec::new(
                self.graph.clone(),
                col(k),
                field.clone(),
                self.beta,
            )?);
        }
        for (k, field) in [(0, &self.h), (1, &self.h), (2, &ht), (3, &ht)] {
            out.push(GibbsSpec::new(
                self.graph.clone(),
                hat.column(k),
                field.clone(),
                self.beta,
            )?);
        }
        Ok(out)
    }

    /// Inclusion, corollary and the hat free-energy bounds over `samples` joint CFTP draws.
    pub fn audit(&self, samples: usize, seed: u64, opts: CftpOptions) -> Result<HatAuditReport> {
        self.audit_with(samples, seed, HatSampler::Cftp(opts))
    }

    pub fn audit_with(&self, samples: usize, seed: u64, sampler: HatSampler) -> Result<HatAuditReport> {
        let specs = self.specs()?;
        let hat = self.hat()?;
        let zone_idx: Vec<bool> = (0..self.graph.len()).map(|i| self.zone.contains(self.graph.site(i))).collect();
        let full = self.tuples.iter().filter(|t| BoundaryRow::is_full_disagreement(**t)).count();
        let d = self.delta.f64();
        let mut inclusion_violations = 0;
        let mut corollary_violations = 0;
        let mut hat_counts = Vec::with_capacity(samples);
        let mut star_counts = Vec::with_capacity(samples);
        let family = match sampler {
            HatSampler::Exact => Some(Family::new(specs.clone())?),
            HatSampler::Cftp(_) => None,
        };
        let mut coupler = family.as_ref().map(|f| AdaptiveCoupler::new(f, CouplingMode::Exact)).transpose()?;
        for k in 0..samples {
            let key = rng::derive_seed(seed, 0x4841_54, k as u64);
            let c = match (&mut coupler, sampler) {
                (Some(cp), _) => cp.run(&mut RasterPolicy::new(), key)?.configs,
                (None, HatSampler::Cftp(opts)) => grand_monotone_sample_with(&specs, UpdateStream::new(key), opts)?.configs,
                (None, HatSampler::Exact) => unreachable!(),
            };
            let star = disagreement_mask(&c, &[(0, 1), (2, 3)]);
            let star_hat = disagreement_mask(&c, &[(4, 5), (6, 7)]);
            if star.iter().zip(&star_hat).any(|(a, b)| *a && !*b) {
                inclusion_violations += 1;
            }
            if full == 0 && star.iter().any(|x| *x) {
                corollary_violations += 1;
            }
            let count = |m: &[bool]| m.iter().zip(&zone_idx).filter(|(a, z)| **a && **z).count() as f64;
            hat_counts.push(2.0 * d * count(&star_hat));
            star_counts.push(d * count(&star));
        }
        let lower = MeanSe::of(&hat_counts);
        let stopped = MeanSe::of(&star_counts);
        let base = &specs[4];
        let gap = perturbed_gap(base, &hat.column(0), &hat.column(1), &self.zone, self.delta)?;
        let upper = 16.0 * full as f64;
        let tol = 1e-9 * gap.direct.abs().max(1.0);
        Ok(HatAuditReport {
            samples,
            inclusion_violations,
            corollary_violations,
            full_disagreements_on_boundary: full,
            lower: lower.mean,
            lower_se: lower.se,
            stopped: stopped.mean,
            stopped_se: stopped.se,
            middle: gap.direct,
            middle_integral: gap.integral,
            upper,
            lower_holds: lower.mean - 3.0 * lower.se <= gap.direct + tol,
            upper_holds: gap.direct <= upper + tol,
            stopped_bound_holds: stopped.mean - 3.0 * stopped.se <= 8.0 * full as f64 + tol,
        })
    }
}

/// Uniformly random admissible tuples.
pub fn random_tuples(count: usize, seed: u64) -> Vec<[i8; 4]> {
    let mut r = rng::KeyedRng::new(seed);
    (0..count)
        .map(|_| BoundaryRow::ALL[r.below(6) as usize].tuple())
        .collect()
}

/// Boundary tuples on `∂S` read from an explored four-chain history, outside `Λ` from the
/// family's own boundaries.
pub fn tuples_from_history<R: Real>(
    family: &Family<R>,
    s_graph: &RegionGraph,
    spins: &[Vec<i8>],
) -> Result<Vec<[i8; 4]>> {
    if family.len() != 4 {
        return Err(LabError::InvalidParameter(
            "hat tuples need a four-chain family".into(),
        ));
    }
    let g = family.graph();
    s_graph
        .boundary_sites()
        .iter()
        .map(|&b| {
            let mut t = [0i8; 4];
            for (c, v) in t.iter_mut().enumerate() {
                *v = match g.index_of(b) {
                    Some(j) => spins[c][j],
                    None => family.specs()[c].boundary()[g.boundary_index(b).ok_or_else(|| {
                        LabError::Geometry(
                            "S boundary leaves the family region and its boundary".into(),
                        )
                    })?],
                };
            }
            if t.contains(&0) {
                return Err(LabError::InvalidParameter(
                    "boundary tuple read from an unexplored site".into(),
                ));
            }
            Ok(t)
        })
        .collect()
}
