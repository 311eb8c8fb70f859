use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::winding_components;
use crate::ground_state::SpinConfig;
use crate::lattice::{Annulus, Site, SiteSet};

/// Outermost surrounding circuit of `+1` sites and the sites it encloses within the annulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub sites: Vec<Site>,
    pub interior: Vec<Site>,
}

/// The `+1` sites of the surrounding cluster that face the exterior.
///
/// The exterior is everything 4-reachable from outside the annulus through non-plus
/// sites; the returned circuit depends only on spins outside its interior.
pub fn outermost_plus_contour(plus: &SiteSet, annulus: &Annulus) -> Option<Contour> {
    let (c, r) = (annulus.outer.center, annulus.outer.radius);
    let open: SiteSet = annulus.sites().filter(|s| plus.contains(*s)).collect();
    let on_rim = |s: Site| s.linf(c) == r;

    let mut ext = SiteSet::new();
    let mut queue: VecDeque<Site> = VecDeque::new();
    for s in annulus.outer_layer().iter().filter(|s| !open.contains(*s)) {
        ext.insert(s);
        queue.push_back(s);
    }
    while let Some(s) = queue.pop_front() {
        for n in s.neighbors4() {
            if annulus.contains(n) && !open.contains(n) && ext.insert(n) {
                queue.push_back(n);
            }
        }
    }

    let facing = |s: Site| on_rim(s) || s.neighbors4().iter().any(|n| ext.contains(*n));
    let comp = winding_components(&open, c)
        .into_iter()
        .filter(|w| w.winds)
        .find(|w| w.sites.iter().any(|&s| facing(s)))?;
    let mut sites: Vec<Site> = comp.sites.into_iter().filter(|&s| facing(s)).collect();
    sites.sort_by_key(|s| (s.y, s.x));

    // interior: annulus sites cut off from the rim by the circuit
    let wall: SiteSet = sites.iter().copied().collect();
    let mut outside = SiteSet::new();
    for s in annulus.outer_layer().iter().filter(|s| !wall.contains(*s)) {
        outside.insert(s);
        queue.push_back(s);
    }
    while let Some(s) = queue.pop_front() {
        for n in s.neighbors4() {
            if annulus.contains(n) && !wall.contains(n) && outside.insert(n) {
                queue.push_back(n);
            }
        }
    }
    let interior = annulus
        .sites()
        .filter(|s| !wall.contains(*s) && !outside.contains(*s))
        .collect();
    Some(Contour { sites, interior })
}

pub fn outermost_plus_contour_of(config: &SpinConfig, annulus: &Annulus) -> Option<Contour> {
    let plus: SiteSet = config
        .graph
        .sites()
        .iter()
        .zip(&config.spins)
        .filter(|p| *p.1 == 1)
        .map(|p| *p.0)
        .collect();
    outermost_plus_contour(&plus, annulus)
}
