//! Quenched Gaussian external field, perturbation overlays and Gaussian change of measure.

mod io;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{LabError, Result};
use crate::lattice::{Annulus, BoxRegion, RegionGraph, Site, SiteSet};
use crate::num::Real;
use crate::rng;

pub use io::{read_csv, read_snapshot, write_csv, write_snapshot, SNAPSHOT_MAGIC};

/// Standard normal value keyed by `(seed, site)`; identical across nested regions.
pub fn standard_normal_at(seed: u64, s: Site) -> f64 {
    let u = rng::uniform(seed, rng::STREAM_FIELD, rng::site_word(s.x, s.y), 0);
    unit_normal().inverse_cdf(u)
}

fn unit_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample<R: Real> {
    pub region: BoxRegion,
    pub epsilon: R,
    pub seed: u64,
    values: Vec<R>,
}

/// i.i.d. `N(0, ε²)` per site of `region`.
pub fn sample_field<R: Real>(region: BoxRegion, epsilon: R, seed: u64) -> Result<FieldSample<R>> {
    if !(epsilon > R::zero()) || !epsilon.is_finite() {
        return Err(LabError::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let values = region
        .sites()
        .map(|s| epsilon * R::of(standard_normal_at(seed, s)))
        .collect();
    Ok(FieldSample {
        region,
        epsilon,
        seed,
        values,
    })
}

impl<R: Real> FieldSample<R> {
    /// Field with explicit raster-ordered values.
    pub fn from_values(region: BoxRegion, epsilon: R, seed: u64, values: Vec<R>) -> Result<Self> {
        if values.len() != region.len() {
            return Err(LabError::InvalidParameter(format!(
                "{} values for a region of {} sites",
                values.len(),
                region.len()
            )));
        }
        Ok(Self {
            region,
            epsilon,
            seed,
            values,
        })
    }

    /// Field given by a function of the site.
    pub fn from_fn(region: BoxRegion, f: impl Fn(Site) -> R) -> Self {
        let values = region.sites().map(f).collect();
        Self {
            region,
            epsilon: R::one(),
            seed: 0,
            values,
        }
    }

    pub fn constant(region: BoxRegion, c: R) -> Self {
        Self::from_fn(region, |_| c)
    }

    #[inline]
    pub fn get(&self, s: Site) -> Option<R> {
        self.region.index_of(s).map(|i| self.values[i])
    }

    pub fn value(&self, s: Site) -> Result<R> {
        self.get(s).ok_or(LabError::MissingField { x: s.x, y: s.y })
    }

    /// Raster-ordered values.
    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, R)> + '_ {
        self.region.sites().zip(self.values.iter().copied())
    }

    /// Field values at the graph's sites, in graph order.
    pub fn on_graph(&self, g: &RegionGraph) -> Result<Vec<R>> {
        g.sites().iter().map(|&s| self.value(s)).collect()
    }

    pub fn sum_over(&self, sites: &SiteSet) -> Result<R> {
        sites.iter().map(|s| self.value(s)).sum()
    }

    /// Pointwise `h_v + x(v)`.
    pub fn shifted(&self, x: impl Fn(Site) -> R) -> FieldSample<R> {
        let values = self.iter().map(|(s, v)| v + x(s)).collect();
        FieldSample { values, ..*self }
    }

    /// Restriction to a concentric or nested box.
    pub fn restrict(&self, b: BoxRegion) -> Result<FieldSample<R>> {
        let values = b
            .sites()
            .map(|s| self.value(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldSample {
            region: b,
            epsilon: self.epsilon,
            seed: self.seed,
            values,
        })
    }
}

impl<R: Real> FieldSample<R> {
    fn empty_like(&self) -> Self {
        Self {
            region: self.region,
            epsilon: self.epsilon,
            seed: self.seed,
            values: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Perturbation<R> {
    /// `h + Δ` on `Λ_N`.
    UniformShift { delta: R },
    /// `h + Δ` on `Λ_N \ Λ_{N/4}`.
    AnnulusShift { delta: R },
    /// `h + Δ′` on `Λ_N \ Λ_{N/8}` and `h + tΔ` on `Λ_{N/8}`.
    TwoZone {
        delta_outer: R,
        delta_inner: R,
        t: R,
    },
    /// `h + tΔ` on `Λ_N \ Λ_{N/4}`.
    Interpolated { delta: R, t: R },
}

/// A perturbation whose zones are boxes of radius `radius`, `radius/4`, `radius/8`
/// about the field's center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec<R> {
    pub radius: u32,
    pub kind: Perturbation<R>,
}

impl<R: Real> PerturbationSpec<R> {
    pub fn new(radius: u32, kind: Perturbation<R>) -> Self {
        Self { radius, kind }
    }

    fn validate(&self) -> Result<()> {
        let bad = |x: R| !(x >= R::zero()) || !x.is_finite();
        let check_t = |t: R| t >= R::zero() && t <= R::one();
        let ok = match self.kind {
            Perturbation::UniformShift { delta } | Perturbation::AnnulusShift { delta } => {
                !bad(delta)
            }
            Perturbation::TwoZone {
                delta_outer,
                delta_inner,
                t,
            } => !bad(delta_outer) && !bad(delta_inner) && check_t(t),
            Perturbation::Interpolated { delta, t } => !bad(delta) && check_t(t),
        };
        if ok {
            Ok(())
        } else {
            Err(LabError::InvalidParameter(format!(
                "invalid perturbation {:?}",
                self.kind
            )))
        }
    }

    /// Shift applied at site `s` for a field centered at `c`.
    pub fn shift_at(&self, c: Site, s: Site) -> R {
        let d = s.linf(c);
        let n = self.radius;
        if d > n {
            return R::zero();
        }
        match self.kind {
            Perturbation::UniformShift { delta } => delta,
            Perturbation::AnnulusShift { delta } => {
                if d > n / 4 {
                    delta
                } else {
                    R::zero()
                }
            }
            Perturbation::TwoZone {
                delta_outer,
                delta_inner,
                t,
            } => {
                if d > n / 8 {
                    delta_outer
                } else {
                    t * delta_inner
                }
            }
            Perturbation::Interpolated { delta, t } => {
                if d > n / 4 {
                    t * delta
                } else {
                    R::zero()
                }
            }
        }
    }
}

/// Pointwise shifted copy of `field`; the original is untouched.
pub fn apply_perturbation<R: Real>(
    field: &FieldSample<R>,
    spec: &PerturbationSpec<R>,
) -> Result<FieldSample<R>> {
    spec.validate()?;
    if spec.radius > field.region.radius {
        return Err(LabError::Geometry(format!(
            "perturbation zone of radius {} exceeds field region of radius {}",
            spec.radius, field.region.radius
        )));
    }
    let c = field.region.center;
    let mut out = field.empty_like();
    out.values = field.iter().map(|(s, v)| v + spec.shift_at(c, s)).collect();
    Ok(out)
}

/// `log dP/dP̃` at a perturbed field with block sum `h̃_Λ` over `|Λ|` sites.
pub fn log_radon_nikodym<R: Real>(perturbed_sum: R, delta: R, size: usize, epsilon: R) -> R {
    let n = R::of(size as f64);
    let e2 = epsilon * epsilon;
    -delta * (perturbed_sum - delta * n) / e2 - delta * delta * n / (R::of(2.0) * e2)
}

/// `exp{−Δ(h̃_Λ − Δ|Λ|)/ε²} · exp{−Δ²|Λ|/2ε²}`.
pub fn radon_nikodym_weight<R: Real>(perturbed_sum: R, delta: R, size: usize, epsilon: R) -> R {
    log_radon_nikodym(perturbed_sum, delta, size, epsilon).exp()
}

/// `Var(h_𝔄) = ε² · #𝔄`.
pub fn block_sum_variance<R: Real>(epsilon: R, count: usize) -> R {
    epsilon * epsilon * R::of(count as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusDecomposition<R: Real> {
    pub annulus: Option<Annulus>,
    pub count: usize,
    /// `h_𝔄`.
    pub total: R,
    /// `h_𝔄 / #𝔄`.
    pub mean_part: R,
    /// `g_v = h_v − h_𝔄/#𝔄`.
    pub residuals: Vec<(Site, R)>,
}

impl<R: Real> AnnulusDecomposition<R> {
    pub fn residual_sum(&self) -> R {
        self.residuals.iter().map(|p| p.1).sum()
    }

    /// `mean_part · #𝔄 + Σ g`.
    pub fn reconstructed_total(&self) -> R {
        self.mean_part * R::of(self.count as f64) + self.residual_sum()
    }
}

/// Mean/residual split of the field over an arbitrary site set.
pub fn decompose<R: Real>(
    field: &FieldSample<R>,
    sites: &SiteSet,
) -> Result<AnnulusDecomposition<R>> {
    if sites.is_empty() {
        return Err(LabError::Geometry(
            "cannot decompose over an empty set".into(),
        ));
    }
    let vals: Vec<(Site, R)> = sites
        .iter()
        .map(|s| field.value(s).map(|v| (s, v)))
        .collect::<Result<_>>()?;
    let total: R = vals.iter().map(|p| p.1).sum();
    let mean_part = total / R::of(vals.len() as f64);
    let residuals = vals.iter().map(|&(s, v)| (s, v - mean_part)).collect();
    Ok(AnnulusDecomposition {
        annulus: None,
        count: vals.len(),
        total,
        mean_part,
        residuals,
    })
}

pub fn decompose_annulus<R: Real>(
    field: &FieldSample<R>,
    annulus: &Annulus,
) -> Result<AnnulusDecomposition<R>> {
    if annulus.is_empty() {
        return Err(LabError::Geometry("empty annulus".into()));
    }
    if !(annulus.outer.center.linf(field.region.center) + annulus.outer.radius
        <= field.region.radius)
    {
        return Err(LabError::Geometry("annulus leaves the field region".into()));
    }
    let mut d = decompose(field, &annulus.to_set())?;
    d.annulus = Some(*annulus);
    Ok(d)
}
