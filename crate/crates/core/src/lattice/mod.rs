//! Finite sublattices of Z²: sites, boxes, annuli, rectangles and graph distances.

mod cover;
mod graph;
mod site_set;

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub use cover::{cover_annulus, enlarge, Block, Enlargement, Shape};
pub use graph::{Link, RegionGraph};
pub use site_set::SiteSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Right, up, left, down.
    #[inline]
    pub fn neighbors4(self) -> [Site; 4] {
        let Site { x, y } = self;
        [
            Site::new(x + 1, y),
            Site::new(x, y + 1),
            Site::new(x - 1, y),
            Site::new(x, y - 1),
        ]
    }

    #[inline]
    pub fn neighbors8(self) -> [Site; 8] {
        let Site { x, y } = self;
        [
            Site::new(x + 1, y),
            Site::new(x + 1, y + 1),
            Site::new(x, y + 1),
            Site::new(x - 1, y + 1),
            Site::new(x - 1, y),
            Site::new(x - 1, y - 1),
            Site::new(x, y - 1),
            Site::new(x + 1, y - 1),
        ]
    }

    #[inline]
    pub fn l1(self, o: Site) -> u32 {
        self.x.abs_diff(o.x) + self.y.abs_diff(o.y)
    }

    #[inline]
    pub fn linf(self, o: Site) -> u32 {
        self.x.abs_diff(o.x).max(self.y.abs_diff(o.y))
    }
}

/// Raster order: rows bottom to top, left to right within a row.
impl Ord for Site {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.y, self.x).cmp(&(o.y, o.x))
    }
}

impl PartialOrd for Site {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// `Λ_N(c) = {v : |v − c|_∞ ≤ N}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxRegion {
    pub center: Site,
    pub radius: u32,
}

impl BoxRegion {
    pub const fn new(center: Site, radius: u32) -> Self {
        Self { center, radius }
    }

    pub const fn centered(radius: u32) -> Self {
        Self {
            center: Site::ORIGIN,
            radius,
        }
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        s.linf(self.center) <= self.radius
    }

    /// Number of sites per side.
    pub fn width(&self) -> u32 {
        2 * self.radius + 1
    }

    pub fn len(&self) -> usize {
        (self.width() as usize).pow(2)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sites in raster order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        let r = self.radius as i32;
        let c = self.center;
        (-r..=r).flat_map(move |dy| (-r..=r).map(move |dx| Site::new(c.x + dx, c.y + dy)))
    }

    pub fn to_set(&self) -> SiteSet {
        SiteSet::from_box(self)
    }

    /// Concentric box of another radius.
    pub fn with_radius(&self, radius: u32) -> BoxRegion {
        BoxRegion::new(self.center, radius)
    }

    /// `∂Λ`: the ring at distance `radius + 1` without its four corners.
    pub fn boundary(&self) -> SiteSet {
        boundary(&self.to_set())
    }

    /// Raster index of a contained site.
    #[inline]
    pub fn index_of(&self, s: Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let r = self.radius as i32;
        let w = self.width() as usize;
        Some((s.y - self.center.y + r) as usize * w + (s.x - self.center.x + r) as usize)
    }
}

/// Sites at ℓ∞ distance exactly `r` from `c`, clockwise from the top-right corner.
pub fn shell_clockwise(c: Site, r: u32) -> Vec<Site> {
    if r == 0 {
        return vec![c];
    }
    let r = r as i32;
    let mut out = Vec::with_capacity(8 * r as usize);
    // right side going down, bottom going left, left side going up, top going right
    for k in 0..2 * r {
        out.push(Site::new(c.x + r, c.y + r - k));
    }
    for k in 0..2 * r {
        out.push(Site::new(c.x + r - k, c.y - r));
    }
    for k in 0..2 * r {
        out.push(Site::new(c.x - r, c.y - r + k));
    }
    for k in 0..2 * r {
        out.push(Site::new(c.x - r + k, c.y + r));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annulus {
    pub outer: BoxRegion,
    pub inner: BoxRegion,
}

impl Annulus {
    pub fn new(outer: BoxRegion, inner: BoxRegion) -> Result<Self> {
        if outer.center != inner.center {
            return Err(LabError::Geometry(
                "annulus boxes must be concentric".into(),
            ));
        }
        if inner.radius >= outer.radius {
            return Err(LabError::Geometry(format!(
                "inner radius {} not below outer radius {}",
                inner.radius, outer.radius
            )));
        }
        Ok(Self { outer, inner })
    }

    /// `Λ_outer \ Λ_inner` about the origin.
    pub fn centered(outer: u32, inner: u32) -> Result<Self> {
        Self::new(BoxRegion::centered(outer), BoxRegion::centered(inner))
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        self.outer.contains(s) && !self.inner.contains(s)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.outer.sites().filter(move |s| !self.inner.contains(*s))
    }

    pub fn to_set(&self) -> SiteSet {
        self.sites().collect()
    }

    pub fn len(&self) -> usize {
        self.outer.len() - self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Annulus sites adjacent to the inner box.
    pub fn inner_layer(&self) -> SiteSet {
        self.sites()
            .filter(|s| s.linf(self.inner.center) == self.inner.radius + 1)
            .collect()
    }

    /// Outermost layer of the annulus.
    pub fn outer_layer(&self) -> SiteSet {
        self.sites()
            .filter(|s| s.linf(self.outer.center) == self.outer.radius)
            .collect()
    }
}

/// Closed rectangle, possibly rotated; sites belong when their centers lie inside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub center: (f64, f64),
    pub half_lengths: (f64, f64),
    pub angle: f64,
}

const RECT_SLACK: f64 = 1e-9;

impl Rectangle {
    pub fn new(center: (f64, f64), half_lengths: (f64, f64), angle: f64) -> Self {
        Self {
            center,
            half_lengths,
            angle,
        }
    }

    /// Axis-parallel rectangle covering the sites `x0..=x1`, `y0..=y1`.
    pub fn axis_aligned(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        Self {
            center: ((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0),
            half_lengths: ((x1 - x0) as f64 / 2.0, (y1 - y0) as f64 / 2.0),
            angle: 0.0,
        }
    }

    /// Coordinates in the rectangle's own frame.
    #[inline]
    fn local(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.angle.sin_cos();
        let dx = px - self.center.0;
        let dy = py - self.center.1;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    pub fn contains(&self, v: Site) -> bool {
        let (u, w) = self.local(v.x as f64, v.y as f64);
        u.abs() <= self.half_lengths.0 + RECT_SLACK && w.abs() <= self.half_lengths.1 + RECT_SLACK
    }

    /// `ℓ_A`, the longer side length.
    pub fn longer_side(&self) -> f64 {
        2.0 * self.half_lengths.0.max(self.half_lengths.1)
    }

    pub fn shorter_side(&self) -> f64 {
        2.0 * self.half_lengths.0.min(self.half_lengths.1)
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.longer_side() / self.shorter_side()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.half_lengths.0 > 0.0 && self.half_lengths.1 > 0.0)
    }

    /// Largest ℓ∞ offset of a rectangle point from the center.
    pub fn linf_extent(&self) -> f64 {
        let (s, c) = self.angle.sin_cos();
        let (a, b) = self.half_lengths;
        (a * c.abs() + b * s.abs()).max(a * s.abs() + b * c.abs())
    }

    fn to_world(&self, u: f64, w: f64) -> (f64, f64) {
        let (s, c) = self.angle.sin_cos();
        (self.center.0 + c * u - s * w, self.center.1 + s * u + c * w)
    }

    /// The two shorter sides as segments.
    pub fn short_sides(&self) -> [((f64, f64), (f64, f64)); 2] {
        let (a, b) = self.half_lengths;
        if a >= b {
            [
                (self.to_world(-a, -b), self.to_world(-a, b)),
                (self.to_world(a, -b), self.to_world(a, b)),
            ]
        } else {
            [
                (self.to_world(-a, -b), self.to_world(a, -b)),
                (self.to_world(-a, b), self.to_world(a, b)),
            ]
        }
    }

    /// Sites inside, in raster order.
    pub fn sites(&self) -> Vec<Site> {
        let e = self.linf_extent() + 1.0;
        let (cx, cy) = self.center;
        let (x0, x1) = ((cx - e).floor() as i32, (cx + e).ceil() as i32);
        let (y0, y1) = ((cy - e).floor() as i32, (cy + e).ceil() as i32);
        let mut out = Vec::new();
        for y in y0..=y1 {
            for x in x0..=x1 {
                let s = Site::new(x, y);
                if self.contains(s) {
                    out.push(s);
                }
            }
        }
        out
    }
}

/// True when the ℓ∞ distance from `v` to segment `pq` is below 1.
pub fn linf_near_segment(v: Site, p: (f64, f64), q: (f64, f64)) -> bool {
    // clip the segment against the open square (v − 1, v + 1)²
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for (a, d, c) in [(p.0, q.0 - p.0, v.x as f64), (p.1, q.1 - p.1, v.y as f64)] {
        if d.abs() < 1e-15 {
            if (a - c).abs() >= 1.0 {
                return false;
            }
            continue;
        }
        let t1 = (c - 1.0 - a) / d;
        let t2 = (c + 1.0 - a) / d;
        let (t1, t2) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        lo = lo.max(t1);
        hi = hi.min(t2);
    }
    // both bounds are open, so a single shared parameter value is not enough
    lo < hi
}

/// `{v ∉ region : ∃u ∈ region, |u − v|₁ = 1}`.
pub fn boundary(region: &SiteSet) -> SiteSet {
    let mut out = SiteSet::new();
    for s in region.iter() {
        for n in s.neighbors4() {
            if !region.contains(n) {
                out.insert(n);
            }
        }
    }
    out
}

/// Ordered edges `⟨u, v⟩` with `u ∈ a`, `v ∈ b`, `u ∼ v`.
pub fn edge_set(a: &SiteSet, b: &SiteSet) -> Vec<(Site, Site)> {
    let mut out = Vec::new();
    for u in a.iter() {
        for v in u.neighbors4() {
            if b.contains(v) {
                out.push((u, v));
            }
        }
    }
    out
}

/// Graph distance with `∞` for unreachable targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Distance {
    Finite(u32),
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Distance::Infinite
    }
}

/// Distance between `a1` and `a2` in the subgraph induced by `carrier`.
pub fn intrinsic_distance(carrier: &SiteSet, a1: &SiteSet, a2: &SiteSet) -> Distance {
    let mut dist = SiteSet::new();
    let mut queue = VecDeque::new();
    for s in a1.iter().filter(|s| carrier.contains(*s)) {
        if a2.contains(s) {
            return Distance::Finite(0);
        }
        dist.insert(s);
        queue.push_back((s, 0u32));
    }
    while let Some((s, d)) = queue.pop_front() {
        for n in s.neighbors4() {
            if carrier.contains(n) && !dist.contains(n) {
                if a2.contains(n) {
                    return Distance::Finite(d + 1);
                }
                dist.insert(n);
                queue.push_back((n, d + 1));
            }
        }
    }
    Distance::Infinite
}

/// Sites of `carrier` joined to `sources ∩ carrier` by a 4-path inside `carrier`.
pub fn reachable(carrier: &SiteSet, sources: &SiteSet) -> SiteSet {
    let mut seen = SiteSet::new();
    let mut stack: Vec<Site> = sources.iter().filter(|s| carrier.contains(*s)).collect();
    for &s in &stack {
        seen.insert(s);
    }
    while let Some(s) = stack.pop() {
        for n in s.neighbors4() {
            if carrier.contains(n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen
}

/// 4-connected components of a site set, each in raster order of discovery.
pub fn components4(set: &SiteSet) -> Vec<Vec<Site>> {
    let mut seen = SiteSet::new();
    let mut out = Vec::new();
    for s in set.iter() {
        if seen.contains(s) {
            continue;
        }
        seen.insert(s);
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            let u = comp[i];
            i += 1;
            for n in u.neighbors4() {
                if set.contains(n) && seen.insert(n) {
                    comp.push(n);
                }
            }
        }
        out.push(comp);
    }
    out
}
