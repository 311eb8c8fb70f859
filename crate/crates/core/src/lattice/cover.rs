use serde::{Deserialize, Serialize};

use super::{BoxRegion, Rectangle, Site, SiteSet};
use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Enlargement {
    /// Side `32 ℓ`.
    Large,
    /// Side `4 ℓ`.
    Big,
    /// Side `2 ℓ`.
    Doubled,
}

impl Enlargement {
    pub fn factor(self) -> u32 {
        match self {
            Enlargement::Large => 32,
            Enlargement::Big => 4,
            Enlargement::Doubled => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Box(BoxRegion),
    Rect(Rectangle),
}

impl Shape {
    pub fn contains(&self, s: Site) -> bool {
        match self {
            Shape::Box(b) => b.contains(s),
            Shape::Rect(r) => r.contains(s),
        }
    }

    /// Longer side length `ℓ`.
    pub fn side(&self) -> f64 {
        match self {
            Shape::Box(b) => 2.0 * b.radius as f64,
            Shape::Rect(r) => r.longer_side(),
        }
    }
}

/// Axis-parallel box concentric with `shape` whose side is `factor × ℓ`.
///
/// Rectangle centers are rounded to the nearest site; the radius is widened only
/// when a tiny rectangle would otherwise poke out of its own enlargement.
pub fn enlarge(shape: &Shape, factor: Enlargement) -> BoxRegion {
    match shape {
        Shape::Box(b) => BoxRegion::new(b.center, b.radius * factor.factor()),
        Shape::Rect(r) => {
            let c = Site::new(r.center.0.round() as i32, r.center.1.round() as i32);
            let nominal = (factor.factor() as f64 * r.longer_side() / 2.0).ceil();
            let off = (r.center.0 - c.x as f64)
                .abs()
                .max((r.center.1 - c.y as f64).abs());
            let needed = (r.linf_extent() + off).floor();
            BoxRegion::new(c, nominal.max(needed) as u32)
        }
    }
}

/// Square block of `side × side` sites with lower-left corner `(x0, y0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub x0: i32,
    pub y0: i32,
    pub side: u32,
}

impl Block {
    pub fn contains(&self, s: Site) -> bool {
        s.x >= self.x0
            && s.y >= self.y0
            && s.x < self.x0 + self.side as i32
            && s.y < self.y0 + self.side as i32
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        let n = self.side as i32;
        (0..n).flat_map(move |dy| (0..n).map(move |dx| Site::new(self.x0 + dx, self.y0 + dy)))
    }

    pub fn to_set(&self) -> SiteSet {
        self.sites().collect()
    }

    /// Concentric block whose side is `factor × side`.
    pub fn enlarged(&self, factor: Enlargement) -> Result<Block> {
        let side = self.side * factor.factor();
        let grow = side - self.side;
        if grow % 2 != 0 {
            return Err(LabError::Geometry(format!(
                "block of side {} has no concentric enlargement of side {side}",
                self.side
            )));
        }
        Ok(Block {
            x0: self.x0 - (grow / 2) as i32,
            y0: self.y0 - (grow / 2) as i32,
            side,
        })
    }

    /// Smallest centered box containing the block.
    pub fn bounding_box(&self) -> BoxRegion {
        let r = self
            .x0
            .abs()
            .max(self.y0.abs())
            .max((self.x0 + self.side as i32 - 1).abs())
            .max((self.y0 + self.side as i32 - 1).abs());
        BoxRegion::centered(r as u32)
    }
}

/// Centers covering `lo..=hi` with windows of half-width `w`.
fn cover_1d(lo: i32, hi: i32, w: i32) -> Vec<i32> {
    let mut out = Vec::new();
    let mut c = lo + w;
    loop {
        let c_eff = c.min(hi - w).max(lo + w.min(hi - lo));
        out.push(c_eff);
        if c_eff + w >= hi {
            break;
        }
        c += 2 * w + 1;
    }
    out.dedup();
    out
}

/// Tiles `Λ_w(c)` covering `Λ_{N/2} \ Λ_{N/4}` (origin-centered), each with its
/// `Big` enlargement inside `Λ_N` and disjoint from `Λ_{N/8}`.
pub fn cover_annulus(n: u32, tile_radius: u32) -> Result<Vec<BoxRegion>> {
    if n < 32 || !n.is_power_of_two() {
        return Err(LabError::Geometry(format!(
            "N = {n} must be a power of two ≥ 32"
        )));
    }
    if tile_radius == 0 {
        return Err(LabError::Geometry("tile radius must be positive".into()));
    }
    let (a, b, w) = ((n / 4 + 1) as i32, (n / 2) as i32, tile_radius as i32);
    let radial = cover_1d(a, b, w);
    let across = cover_1d(-b, b, w);
    let side = cover_1d(-(a - 1), a - 1, w);
    let mut tiles = Vec::new();
    for &r in &radial {
        for &t in &across {
            tiles.push(Site::new(t, r));
            tiles.push(Site::new(t, -r));
        }
        for &t in &side {
            tiles.push(Site::new(r, t));
            tiles.push(Site::new(-r, t));
        }
    }
    let tiles: Vec<BoxRegion> = tiles
        .into_iter()
        .map(|c| BoxRegion::new(c, tile_radius))
        .collect();
    let outer = BoxRegion::centered(n);
    let core = BoxRegion::centered(n / 8);
    for t in &tiles {
        let big = enlarge(&Shape::Box(*t), Enlargement::Big);
        let fits = big.center.linf(Site::ORIGIN) + big.radius <= outer.radius;
        let clear = big.center.linf(Site::ORIGIN) > big.radius + core.radius;
        if !fits || !clear {
            return Err(LabError::Geometry(format!(
                "tile at ({}, {}) radius {tile_radius}: Big enlargement violates the cover constraints at N = {n}",
                t.center.x, t.center.y
            )));
        }
    }
    Ok(tiles)
}
