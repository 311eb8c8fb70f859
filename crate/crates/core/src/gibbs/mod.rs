//! Exact finite-temperature inference on small regions.

pub mod audit;
pub mod quadrature;
mod transfer;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::FieldSample;
use crate::ground_state::{check_boundary, energy, external_terms};
use crate::lattice::{Link, RegionGraph, Site, SiteSet};
use crate::num::{log_sum_exp, Real};
use crate::rng::KeyedRng;

pub use transfer::{strip_log_z, STRIP_WIDTH};

/// Largest number of free spins handled by exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 24;

/// Ising measure on a region with boundary `τ` (entries in `{−1, 0, 1}`), field `h` and `β`.
#[derive(Clone, Debug)]
pub struct GibbsSpec<R: Real> {
    graph: Arc<RegionGraph>,
    boundary: Vec<i8>,
    field: Vec<R>,
    beta: R,
    ext: Vec<R>,
}

impl<R: Real> GibbsSpec<R> {
    pub fn new(graph: Arc<RegionGraph>, boundary: Vec<i8>, field: Vec<R>, beta: R) -> Result<Self> {
        check_boundary(&graph, &boundary)?;
        if field.len() != graph.len() {
            return Err(LabError::InvalidParameter(
                "field length differs from region size".into(),
            ));
        }
        if !(beta >= R::zero()) || !beta.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "beta must be finite and ≥ 0, got {beta}"
            )));
        }
        let ext = external_terms(&graph, &field, &boundary);
        Ok(Self {
            graph,
            boundary,
            field,
            beta,
            ext,
        })
    }

    pub fn from_field(
        graph: Arc<RegionGraph>,
        boundary: Vec<i8>,
        field: &FieldSample<R>,
        beta: R,
    ) -> Result<Self> {
        let h = field.on_graph(&graph)?;
        Self::new(graph, boundary, h, beta)
    }

    pub fn graph(&self) -> &Arc<RegionGraph> {
        &self.graph
    }

    pub fn boundary(&self) -> &[i8] {
        &self.boundary
    }

    pub fn field(&self) -> &[R] {
        &self.field
    }

    pub fn beta(&self) -> R {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    pub fn with_field(&self, field: Vec<R>) -> Result<Self> {
        Self::new(self.graph.clone(), self.boundary.clone(), field, self.beta)
    }

    pub fn with_boundary(&self, boundary: Vec<i8>) -> Result<Self> {
        Self::new(self.graph.clone(), boundary, self.field.clone(), self.beta)
    }

    /// Boundary and field contributions at site `i`.
    #[inline]
    pub fn external(&self, i: usize) -> R {
        self.ext[i]
    }

    /// `Σ_{j∼i} σ_j + τ-terms + h_i`.
    #[inline]
    pub fn local_field(&self, i: usize, spins: &[i8]) -> R {
        let mut s = 0i32;
        for l in self.graph.links(i) {
            if let Link::Site(j) = *l {
                s += spins[j as usize] as i32;
            }
        }
        self.ext[i] + R::of(s as f64)
    }

    /// Probability of `+1` at `i` given all other spins.
    #[inline]
    pub fn single_site_plus(&self, i: usize, spins: &[i8]) -> R {
        heat_bath_probability(self.beta, self.local_field(i, spins))
    }

    pub fn energy(&self, spins: &[i8]) -> R {
        energy(&self.graph, spins, &self.boundary, &self.field)
    }

    /// `self ≼ other`: boundary and field both pointwise below.
    pub fn precedes(&self, other: &GibbsSpec<R>) -> bool {
        self.boundary
            .iter()
            .zip(&other.boundary)
            .all(|(a, b)| a <= b)
            && self.field.iter().zip(&other.field).all(|(a, b)| a <= b)
    }
}

/// `e^{βL} / (e^{βL} + e^{−βL})`.
#[inline]
pub fn heat_bath_probability<R: Real>(beta: R, local: R) -> R {
    R::one() / (R::one() + (-(beta + beta) * local).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Unspecified,
}

type PredicateFn = dyn Fn(&[i8]) -> bool + Send + Sync;

/// An event `Ω ⊂ {−1,1}^S` with a declared monotonicity.
#[derive(Clone)]
pub struct ConfigPredicate {
    pub name: String,
    pub tag: Monotonicity,
    pred: Arc<PredicateFn>,
}

impl fmt::Debug for ConfigPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConfigPredicate({}, {:?})", self.name, self.tag)
    }
}

impl ConfigPredicate {
    pub fn new(
        name: impl Into<String>,
        tag: Monotonicity,
        f: impl Fn(&[i8]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            tag,
            pred: Arc::new(f),
        }
    }

    /// The whole configuration space; both increasing and decreasing.
    pub fn full() -> Self {
        Self::new("full", Monotonicity::Unspecified, |_| true)
    }

    #[inline]
    pub fn eval(&self, spins: &[i8]) -> bool {
        (self.pred)(spins)
    }

    /// Random check of the declared tag: members stay members after raising (or lowering) spins.
    pub fn spot_check(&self, n: usize, trials: usize, seed: u64) -> bool {
        let up = match self.tag {
            Monotonicity::Increasing => 1,
            Monotonicity::Decreasing => -1,
            Monotonicity::Unspecified => return true,
        };
        let mut rng = KeyedRng::new(seed);
        let mut checked = 0;
        let mut attempts = 0;
        while checked < trials && attempts < 50 * trials {
            attempts += 1;
            let mut s: Vec<i8> = (0..n)
                .map(|_| if rng.bernoulli(0.5) { 1 } else { -1 })
                .collect();
            if !self.eval(&s) {
                continue;
            }
            checked += 1;
            for v in s.iter_mut() {
                if rng.bernoulli(0.3) {
                    *v = up;
                }
            }
            if !self.eval(&s) {
                return false;
            }
        }
        true
    }
}

/// `−βH` over every assignment of the free sites, indexed by the free-site bit pattern.
///
/// Bit `b` set means site `free[b]` is `+1`; the remaining sites keep `base` values.
fn neg_beta_energies<R: Real>(spec: &GibbsSpec<R>, free: &[usize], base: &[i8]) -> Vec<R> {
    let m = free.len();
    let mut spins = base.to_vec();
    for &i in free {
        spins[i] = -1;
    }
    let mut e = spec.energy(&spins);
    let mut out = vec![R::zero(); 1usize << m];
    out[0] = -spec.beta * e;
    for k in 1usize..(1usize << m) {
        let bit = k.trailing_zeros() as usize;
        let i = free[bit];
        let local = spec.local_field(i, &spins);
        e = e + R::of(2.0 * spins[i] as f64) * local;
        spins[i] = -spins[i];
        if k % 256 == 0 {
            e = spec.energy(&spins);
        }
        out[k ^ (k >> 1)] = -spec.beta * e;
    }
    out
}

/// Fully enumerated Gibbs measure; state bit `i` set means site `i` is `+1`.
#[derive(Clone, Debug)]
pub struct ExactGibbs<R: Real> {
    spec: GibbsSpec<R>,
    lw: Vec<R>,
    log_z: R,
}

impl<R: Real> ExactGibbs<R> {
    pub fn new(spec: &GibbsSpec<R>) -> Result<Self> {
        if spec.len() > ENUMERATION_LIMIT {
            return Err(LabError::Capacity(format!(
                "{} free spins exceed the enumeration limit {ENUMERATION_LIMIT}",
                spec.len()
            )));
        }
        let free: Vec<usize> = (0..spec.len()).collect();
        let lw = neg_beta_energies(spec, &free, &vec![-1; spec.len()]);
        let log_z = log_sum_exp(lw.iter().copied());
        Ok(Self {
            spec: spec.clone(),
            lw,
            log_z,
        })
    }

    pub fn spec(&self) -> &GibbsSpec<R> {
        &self.spec
    }

    pub fn states(&self) -> usize {
        self.lw.len()
    }

    /// `−βH` of a state.
    pub fn log_weight(&self, state: usize) -> R {
        self.lw[state]
    }

    /// Natural log of the partition function.
    pub fn log_z(&self) -> R {
        self.log_z
    }

    pub fn probability(&self, state: usize) -> R {
        (self.lw[state] - self.log_z).exp()
    }

    pub fn spins_of(&self, state: usize) -> Vec<i8> {
        (0..self.spec.len())
            .map(|i| if state >> i & 1 == 1 { 1 } else { -1 })
            .collect()
    }

    pub fn state_of(spins: &[i8]) -> usize {
        spins
            .iter()
            .enumerate()
            .filter(|p| *p.1 > 0)
            .map(|p| 1usize << p.0)
            .sum()
    }

    /// Membership of every state in `Ω`.
    pub fn mask(&self, pred: &ConfigPredicate) -> Vec<bool> {
        (0..self.states())
            .map(|s| pred.eval(&self.spins_of(s)))
            .collect()
    }

    /// `log Σ_{σ ∈ Ω} e^{−βH(σ) + tilt(σ)}`.
    pub fn log_sum(&self, keep: Option<&[bool]>, tilt: &dyn Fn(usize) -> R) -> R {
        log_sum_exp(
            (0..self.states())
                .filter(|&s| keep.is_none_or(|k| k[s]))
                .map(|s| self.lw[s] + tilt(s)),
        )
    }

    /// `(1/β) log Σ_{σ∈Ω} e^{−βH}`.
    pub fn free_energy(&self, keep: Option<&[bool]>) -> Result<R> {
        self.free_energy_tilted(keep, &|_| R::zero())
    }

    pub fn free_energy_tilted(
        &self,
        keep: Option<&[bool]>,
        tilt: &dyn Fn(usize) -> R,
    ) -> Result<R> {
        require_positive_beta(self.spec.beta)?;
        let l = self.log_sum(keep, tilt);
        if l == R::neg_infinity() {
            return Err(LabError::EmptyRestriction("Ω has no configurations".into()));
        }
        Ok(l / self.spec.beta)
    }

    /// `μ(Ω)`.
    pub fn measure(&self, keep: &[bool]) -> R {
        (self.log_sum(Some(keep), &|_| R::zero()) - self.log_z).exp()
    }

    /// `⟨σ_i⟩` for every site under the restricted and tilted measure.
    pub fn mean_spins(&self, keep: Option<&[bool]>, tilt: &dyn Fn(usize) -> R) -> Result<Vec<R>> {
        let l = self.log_sum(keep, tilt);
        if l == R::neg_infinity() {
            return Err(LabError::EmptyRestriction("Ω has no configurations".into()));
        }
        let n = self.spec.len();
        let mut plus = vec![R::zero(); n];
        for s in (0..self.states()).filter(|&s| keep.is_none_or(|k| k[s])) {
            let p = (self.lw[s] + tilt(s) - l).exp();
            for (i, acc) in plus.iter_mut().enumerate() {
                if s >> i & 1 == 1 {
                    *acc = *acc + p;
                }
            }
        }
        Ok(plus.into_iter().map(|p| p + p - R::one()).collect())
    }

    /// Ground-state-like maximizer of `−βH`.
    pub fn argmax(&self) -> usize {
        (0..self.states()).fold(0, |b, s| if self.lw[s] > self.lw[b] { s } else { b })
    }
}

fn require_positive_beta<R: Real>(beta: R) -> Result<()> {
    if beta > R::zero() {
        Ok(())
    } else {
        Err(LabError::InvalidParameter("free energy needs β > 0".into()))
    }
}

/// Memoized conditional probabilities from an enumerated measure.
pub struct ConditionalOracle<R: Real> {
    n: usize,
    probs: Vec<R>,
    memo: HashMap<(u32, u32), R>,
}

/// Below this many free spins the direct sum is cheaper than a lookup.
const MEMO_MIN_FREE: u32 = 8;

impl<R: Real> ConditionalOracle<R> {
    pub fn new(exact: &ExactGibbs<R>) -> Self {
        let probs = (0..exact.states()).map(|s| exact.probability(s)).collect();
        Self {
            n: exact.spec.len(),
            probs,
            memo: HashMap::new(),
        }
    }

    /// `μ(σ_mask = values)`.
    pub fn weight(&mut self, mask: u32, values: u32) -> R {
        let full = if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        };
        let free = full & !mask;
        if free.count_ones() >= MEMO_MIN_FREE {
            if let Some(&w) = self.memo.get(&(mask, values)) {
                return w;
            }
        }
        let mut sub = free;
        let mut acc = R::zero();
        loop {
            acc = acc + self.probs[(values | sub) as usize];
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
        if free.count_ones() >= MEMO_MIN_FREE {
            self.memo.insert((mask, values), acc);
        }
        acc
    }

    /// `μ(σ_i = +1 | σ_mask = values)`.
    pub fn plus_probability(&mut self, mask: u32, values: u32, i: usize) -> R {
        let b = 1u32 << i;
        let den = self.weight(mask, values);
        let num = self.weight(mask | b, values | b);
        num / den
    }
}

fn pins_of<R: Real>(spec: &GibbsSpec<R>, conditioned: &[(Site, i8)]) -> Result<Vec<Option<i8>>> {
    let mut pins = vec![None; spec.len()];
    for &(s, v) in conditioned {
        let i = spec.graph.index_of(s).ok_or_else(|| {
            LabError::InvalidParameter(format!(
                "conditioned site ({}, {}) outside region",
                s.x, s.y
            ))
        })?;
        if v != 1 && v != -1 {
            return Err(LabError::InvalidParameter(
                "conditioned spins must be ±1".into(),
            ));
        }
        if pins[i].is_some_and(|p| p != v) {
            return Err(LabError::InvalidParameter(
                "contradictory conditioning".into(),
            ));
        }
        pins[i] = Some(v);
    }
    Ok(pins)
}

/// Natural-log partition function over configurations matching `pins` and `Ω`.
fn pinned_log_z<R: Real>(
    spec: &GibbsSpec<R>,
    pins: &[Option<i8>],
    restriction: Option<&ConfigPredicate>,
) -> Result<R> {
    let free: Vec<usize> = (0..spec.len()).filter(|&i| pins[i].is_none()).collect();
    if free.len() <= ENUMERATION_LIMIT {
        let base: Vec<i8> = pins.iter().map(|p| p.unwrap_or(-1)).collect();
        let lw = neg_beta_energies(spec, &free, &base);
        let l = match restriction {
            None => log_sum_exp(lw.iter().copied()),
            Some(pred) => {
                let mut spins = base.clone();
                let kept: Vec<R> = lw
                    .iter()
                    .enumerate()
                    .filter_map(|(k, &w)| {
                        for (b, &i) in free.iter().enumerate() {
                            spins[i] = if k >> b & 1 == 1 { 1 } else { -1 };
                        }
                        pred.eval(&spins).then_some(w)
                    })
                    .collect();
                log_sum_exp(kept)
            }
        };
        return Ok(l);
    }
    if restriction.is_some() {
        return Err(LabError::Capacity(format!(
            "restricted measure on {} free spins exceeds the enumeration limit",
            free.len()
        )));
    }
    strip_log_z(spec, pins)
}

/// `F = (1/β) log Σ_{σ∈Ω} e^{−βH(σ)}`.
pub fn log_partition<R: Real>(
    spec: &GibbsSpec<R>,
    restriction: Option<&ConfigPredicate>,
) -> Result<R> {
    require_positive_beta(spec.beta)?;
    let l = pinned_log_z(spec, &vec![None; spec.len()], restriction)?;
    if l == R::neg_infinity() {
        return Err(LabError::EmptyRestriction(format!(
            "{} has no configurations",
            restriction.map_or("Ω", |p| p.name.as_str())
        )));
    }
    Ok(l / spec.beta)
}

/// `μ(σ_site = +1 | conditioned)`.
pub fn conditional_marginal<R: Real>(
    spec: &GibbsSpec<R>,
    conditioned: &[(Site, i8)],
    site: Site,
) -> Result<R> {
    let mut pins = pins_of(spec, conditioned)?;
    let i = spec.graph.index_of(site).ok_or_else(|| {
        LabError::InvalidParameter(format!("site ({}, {}) outside region", site.x, site.y))
    })?;
    if let Some(v) = pins[i] {
        return Ok(if v > 0 { R::one() } else { R::zero() });
    }
    let den = pinned_log_z(spec, &pins, None)?;
    pins[i] = Some(1);
    let num = pinned_log_z(spec, &pins, None)?;
    Ok((num - den).exp())
}

/// `Σ_{v∈window} ⟨σ_v⟩` under the (restricted) measure.
pub fn magnetization_sum<R: Real>(
    spec: &GibbsSpec<R>,
    restriction: Option<&ConfigPredicate>,
    window: &SiteSet,
) -> Result<R> {
    let idx: Vec<usize> = window
        .iter()
        .map(|s| {
            spec.graph.index_of(s).ok_or_else(|| {
                LabError::InvalidParameter(format!("window site ({}, {}) outside region", s.x, s.y))
            })
        })
        .collect::<Result<_>>()?;
    if idx.is_empty() {
        return Ok(R::zero());
    }
    if spec.len() <= ENUMERATION_LIMIT {
        let ex = ExactGibbs::new(spec)?;
        let keep = restriction.map(|p| ex.mask(p));
        let m = ex.mean_spins(keep.as_deref(), &|_| R::zero())?;
        return Ok(idx.iter().map(|&i| m[i]).sum());
    }
    if restriction.is_some() {
        return Err(LabError::Capacity(
            "restricted magnetization needs enumeration".into(),
        ));
    }
    let mut pins = vec![None; spec.len()];
    let l = strip_log_z(spec, &pins)?;
    let mut total = R::zero();
    for &i in &idx {
        pins[i] = Some(1);
        let p = (strip_log_z(spec, &pins)? - l).exp();
        pins[i] = None;
        total = total + p + p - R::one();
    }
    Ok(total)
}

/// Analytic `dF/dt = Δ Σ_{zone} ⟨σ_v⟩` against the central difference with `δt = 1e−5`,
/// for `h(t) = h + tΔ·1_zone`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub analytic: f64,
    pub finite_difference: f64,
}

impl DerivativeCheck {
    pub fn relative_error(&self) -> f64 {
        (self.analytic - self.finite_difference).abs() / self.analytic.abs().max(1.0)
    }
}

pub const FD_STEP: f64 = 1e-5;

pub fn free_energy_derivative_check<R: Real>(
    spec: &GibbsSpec<R>,
    zone: &SiteSet,
    delta: R,
    t: R,
    restriction: Option<&ConfigPredicate>,
) -> Result<DerivativeCheck> {
    let zone_idx: Vec<bool> = (0..spec.len())
        .map(|i| zone.contains(spec.graph.site(i)))
        .collect();
    let at = |tt: R| -> Result<GibbsSpec<R>> {
        let h = spec
            .field
            .iter()
            .zip(&zone_idx)
            .map(|(&h, &z)| if z { h + tt * delta } else { h })
            .collect();
        spec.with_field(h)
    };
    let spec_t = at(t)?;
    let analytic = delta * magnetization_sum(&spec_t, restriction, zone)?;
    let dt = R::of(FD_STEP);
    let fp = log_partition(&at(t + dt)?, restriction)?;
    let fm = log_partition(&at(t - dt)?, restriction)?;
    Ok(DerivativeCheck {
        analytic: analytic.f64(),
        finite_difference: ((fp - fm) / (dt + dt)).f64(),
    })
}
