//! Crossing events, planar duality, contours, lattice animals and coarse-grained scans.

mod animal;
mod contour;
pub mod lemmas;
pub mod scan;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::lattice::{linf_near_segment, Annulus, Rectangle, Site, SiteSet};

pub use animal::{animal_sizes, largest_lattice_animal, BoxGrid};
pub use contour::{outermost_plus_contour, outermost_plus_contour_of, Contour};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossingMode {
    /// 4-path joining the two shorter sides.
    RectangleShortSides,
    /// 4-path from the inner to the outer boundary.
    AnnulusEasy,
    /// 8-circuit separating the inner from the outer boundary.
    AnnulusHard,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CrossingShape {
    Rectangle(Rectangle),
    Annulus(Annulus),
}

#[derive(Clone, Debug)]
pub struct CrossingQuery {
    pub shape: CrossingShape,
    pub carrier: SiteSet,
    pub mode: CrossingMode,
}

impl CrossingQuery {
    pub fn evaluate(&self) -> Result<bool> {
        match (self.shape, self.mode) {
            (CrossingShape::Rectangle(r), CrossingMode::RectangleShortSides) => {
                cross_rectangle(&r, &self.carrier)
            }
            (CrossingShape::Annulus(a), CrossingMode::AnnulusEasy) => {
                cross_annulus_easy(&a, &self.carrier)
            }
            (CrossingShape::Annulus(a), CrossingMode::AnnulusHard) => {
                cross_annulus_hard(&a, &self.carrier)
            }
            (s, m) => Err(LabError::InvalidParameter(format!(
                "mode {m:?} does not apply to {s:?}"
            ))),
        }
    }
}

/// A 4-path in `carrier ∩ A` whose end sites lie within ℓ∞ distance 1 of the two shorter sides.
pub fn cross_rectangle(rect: &Rectangle, carrier: &SiteSet) -> Result<bool> {
    if rect.is_degenerate() {
        return Err(LabError::Geometry(format!(
            "degenerate rectangle {:?}",
            rect.half_lengths
        )));
    }
    let [(p0, q0), (p1, q1)] = rect.short_sides();
    let open: SiteSet = rect
        .sites()
        .into_iter()
        .filter(|s| carrier.contains(*s))
        .collect();
    let sources: Vec<Site> = open
        .iter()
        .filter(|&s| linf_near_segment(s, p0, q0))
        .collect();
    Ok(search4(&open, sources, |s| linf_near_segment(s, p1, q1)))
}

/// Easy crossing: a 4-path in `carrier ∩ annulus` from the inner layer to the outer layer.
pub fn cross_annulus_easy(annulus: &Annulus, carrier: &SiteSet) -> Result<bool> {
    check_annulus(annulus)?;
    let open: SiteSet = annulus.sites().filter(|s| carrier.contains(*s)).collect();
    let inner = annulus.inner_layer();
    let (c, r) = (annulus.outer.center, annulus.outer.radius);
    let sources: Vec<Site> = open.iter().filter(|s| inner.contains(*s)).collect();
    Ok(search4(&open, sources, |s| s.linf(c) == r))
}

/// Hard crossing: an 8-connected circuit in `carrier ∩ annulus` winding around the inner box.
///
/// Each 8-component is lifted to the cover cut along the ray `{(x, c_y + ½) : x > c_x}`;
/// a component carries a surrounding circuit iff its lift is inconsistent.
pub fn cross_annulus_hard(annulus: &Annulus, carrier: &SiteSet) -> Result<bool> {
    check_annulus(annulus)?;
    let open: SiteSet = annulus.sites().filter(|s| carrier.contains(*s)).collect();
    Ok(winding_components(&open, annulus.outer.center)
        .iter()
        .any(|c| c.winds))
}

pub fn cross_annulus(annulus: &Annulus, carrier: &SiteSet, hard: bool) -> Result<bool> {
    if hard {
        cross_annulus_hard(annulus, carrier)
    } else {
        cross_annulus_easy(annulus, carrier)
    }
}

/// Exactly one of: a hard crossing in `carrier`, an easy crossing in its complement.
pub fn duality_holds(annulus: &Annulus, carrier: &SiteSet) -> Result<bool> {
    let complement: SiteSet = annulus.sites().filter(|s| !carrier.contains(*s)).collect();
    Ok(cross_annulus_hard(annulus, carrier)? != cross_annulus_easy(annulus, &complement)?)
}

fn check_annulus(a: &Annulus) -> Result<()> {
    if a.outer.center != a.inner.center || a.inner.radius >= a.outer.radius {
        return Err(LabError::Geometry(
            "inner box must lie strictly inside the outer box".into(),
        ));
    }
    Ok(())
}

fn search4(open: &SiteSet, sources: Vec<Site>, target: impl Fn(Site) -> bool) -> bool {
    let mut seen = SiteSet::new();
    let mut queue = VecDeque::new();
    for s in sources {
        if target(s) {
            return true;
        }
        if seen.insert(s) {
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for n in s.neighbors4() {
            if open.contains(n) && seen.insert(n) {
                if target(n) {
                    return true;
                }
                queue.push_back(n);
            }
        }
    }
    false
}

/// Signed crossings of the cut ray by the step `u → v`.
#[inline]
fn cut_weight(u: Site, v: Site, c: Site) -> i64 {
    if u.x + v.x <= 2 * c.x {
        return 0;
    }
    match (u.y <= c.y, v.y <= c.y) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    }
}

pub(crate) struct WindingComponent {
    pub sites: Vec<Site>,
    pub winds: bool,
}

/// 8-components of `open` with a flag for a nonzero winding around `c`.
pub(crate) fn winding_components(open: &SiteSet, c: Site) -> Vec<WindingComponent> {
    let mut level = std::collections::HashMap::<Site, i64>::with_capacity(open.len());
    let mut out = Vec::new();
    for s in open.iter() {
        if level.contains_key(&s) {
            continue;
        }
        level.insert(s, 0);
        let mut sites = vec![s];
        let mut winds = false;
        let mut i = 0;
        while i < sites.len() {
            let u = sites[i];
            i += 1;
            let lu = level[&u];
            for v in u.neighbors8() {
                if !open.contains(v) {
                    continue;
                }
                let lv = lu + cut_weight(u, v, c);
                match level.get(&v) {
                    Some(&seen) => winds |= seen != lv,
                    None => {
                        level.insert(v, lv);
                        sites.push(v);
                    }
                }
            }
        }
        out.push(WindingComponent { sites, winds });
    }
    out
}
