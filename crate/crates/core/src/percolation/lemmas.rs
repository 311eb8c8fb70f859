//! Per-instance checks of the zero-temperature perturbation statements.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::FieldSample;
use crate::ground_state::{touches_boundary, xi_labels_values};
use crate::lattice::{
    components4, intrinsic_distance, BoxRegion, Distance, RegionGraph, Site, SiteSet,
};
use crate::num::Real;

/// Both conditions of the incompatibility statement for `h̃ = h + Δ` on `Λ_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncompatibilityReport {
    pub n: u32,
    pub delta: f64,
    pub k: f64,
    /// `d_{C_*}(∂Λ_{N/4}, ∂Λ_{N/2})`.
    pub distance: Distance,
    /// `#(C_* ∩ Λ_{N/4})`.
    pub inner: usize,
    /// `#(C_* ∩ (Λ_{N/2} \ Λ_{N/4}))`.
    pub annulus: usize,
    pub disagreements: usize,
    pub cond_a: bool,
    pub cond_b: bool,
    pub degenerate: bool,
}

impl IncompatibilityReport {
    pub fn violated(&self) -> bool {
        self.cond_a && self.cond_b
    }
}

fn centered_box<R: Real>(field: &FieldSample<R>) -> Result<(u32, Arc<RegionGraph>, Vec<R>)> {
    let b = field.region;
    if b.center != Site::ORIGIN {
        return Err(LabError::Geometry(
            "field must live on an origin-centered box".into(),
        ));
    }
    let g = Arc::new(RegionGraph::from_box(&b));
    let h = field.on_graph(&g)?;
    Ok((b.radius, g, h))
}

/// `C_* = C ∩ C̃` where `C̃` uses the field shifted by `x`.
pub fn shifted_disagreement<R: Real>(
    g: &Arc<RegionGraph>,
    h: &[R],
    x: impl Fn(usize) -> R,
) -> Result<(SiteSet, SiteSet, bool)> {
    let xi = xi_labels_values(g, h)?;
    let shifted: Vec<R> = h.iter().enumerate().map(|(i, &v)| v + x(i)).collect();
    let xt = xi_labels_values(g, &shifted)?;
    Ok((
        xi.disagreement(),
        xt.disagreement(),
        xi.degenerate || xt.degenerate,
    ))
}

/// `k = f64::INFINITY` gives the percolation form: (a) is `d = ∞`, (b) is `C_* ∩ Λ_{N/4} ≠ ∅`.
pub fn perturbation_incompatibility<R: Real>(
    field: &FieldSample<R>,
    delta: R,
    k: f64,
) -> Result<IncompatibilityReport> {
    let (n, g, h) = centered_box(field)?;
    if n < 4 || n % 4 != 0 {
        return Err(LabError::Geometry(format!(
            "N = {n} must be a positive multiple of 4"
        )));
    }
    if !(k > 0.0) {
        return Err(LabError::InvalidParameter("K must be positive".into()));
    }
    let (c, ct, degenerate) = shifted_disagreement(&g, &h, |_| delta)?;
    let star = c.intersection(&ct);
    let quarter = BoxRegion::centered(n / 4);
    let half = BoxRegion::centered(n / 2);
    let distance = intrinsic_distance(&star, &quarter.boundary(), &half.boundary());
    let inner = star.iter().filter(|s| quarter.contains(*s)).count();
    let annulus = star
        .iter()
        .filter(|s| half.contains(*s) && !quarter.contains(*s))
        .count();
    let cond_a = match distance {
        Distance::Infinite => true,
        Distance::Finite(d) => d as f64 >= k,
    };
    let rhs = if k.is_infinite() {
        0.0
    } else {
        8.0 / k * annulus as f64
    };
    let cond_b = inner as f64 * delta.f64() > rhs;
    Ok(IncompatibilityReport {
        n,
        delta: delta.f64(),
        k,
        distance,
        inner,
        annulus,
        disagreements: star.len(),
        cond_a,
        cond_b,
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReachReport {
    /// `#(C ∩ Č)`.
    pub common: usize,
    /// Sites of `C ∩ Č` whose component misses the outer layer of `Λ_N`.
    pub stranded: Vec<Site>,
    pub degenerate: bool,
}

impl BoundaryReachReport {
    pub fn holds(&self) -> bool {
        self.stranded.is_empty()
    }
}

/// Every site of `C ∩ Č` for `ȟ = h + x`, `x ≥ 0`, must reach `∂Λ_N` inside `C ∩ Č`.
pub fn percolation_to_boundary<R: Real>(
    field: &FieldSample<R>,
    x: &[R],
) -> Result<BoundaryReachReport> {
    let (_, g, h) = centered_box(field)?;
    if x.len() != g.len() || x.iter().any(|&v| v < R::zero()) {
        return Err(LabError::InvalidParameter(
            "increase must be nonnegative on every site".into(),
        ));
    }
    let (c, cc, degenerate) = shifted_disagreement(&g, &h, |i| x[i])?;
    let common = c.intersection(&cc);
    let mut stranded = Vec::new();
    for comp in components4(&common) {
        let reaches = comp
            .iter()
            .any(|&s| touches_boundary(&g, g.index_of(s).expect("site of the box")));
        if !reaches {
            stranded.extend(comp);
        }
    }
    Ok(BoundaryReachReport {
        common: common.len(),
        stranded,
        degenerate,
    })
}
