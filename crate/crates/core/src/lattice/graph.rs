use super::{boundary, BoxRegion, Site, SiteSet};

/// Neighbor of a region site: another region site or a boundary site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    Site(u32),
    Boundary(u32),
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct FrameIndex {
    x0: i32,
    y0: i32,
    width: u32,
    height: u32,
    slots: Vec<u32>,
}

impl FrameIndex {
    fn build(sites: &[Site]) -> Self {
        if sites.is_empty() {
            return Self {
                x0: 0,
                y0: 0,
                width: 0,
                height: 0,
                slots: Vec::new(),
            };
        }
        let x0 = sites.iter().map(|s| s.x).min().unwrap();
        let y0 = sites.iter().map(|s| s.y).min().unwrap();
        let width = (sites.iter().map(|s| s.x).max().unwrap() - x0 + 1) as u32;
        let height = (sites.iter().map(|s| s.y).max().unwrap() - y0 + 1) as u32;
        let mut slots = vec![NONE; (width * height) as usize];
        for (i, s) in sites.iter().enumerate() {
            slots[(s.y - y0) as usize * width as usize + (s.x - x0) as usize] = i as u32;
        }
        Self {
            x0,
            y0,
            width,
            height,
            slots,
        }
    }

    #[inline]
    fn get(&self, s: Site) -> Option<usize> {
        let dx = s.x.wrapping_sub(self.x0);
        let dy = s.y.wrapping_sub(self.y0);
        if dx < 0 || dy < 0 || dx as u32 >= self.width || dy as u32 >= self.height {
            return None;
        }
        let v = self.slots[dy as usize * self.width as usize + dx as usize];
        (v != NONE).then_some(v as usize)
    }
}

/// A finite region with indexed sites, indexed boundary and the lattice edges between them.
#[derive(Clone, Debug)]
pub struct RegionGraph {
    sites: Vec<Site>,
    index: FrameIndex,
    links: Vec<[Link; 4]>,
    boundary: Vec<Site>,
    bindex: FrameIndex,
    edges: Vec<(u32, u32)>,
    boundary_edges: Vec<(u32, u32)>,
}

impl RegionGraph {
    pub fn new(region: &SiteSet) -> Self {
        let sites = region.to_vec();
        let index = FrameIndex::build(&sites);
        let boundary = boundary(region).to_vec();
        let bindex = FrameIndex::build(&boundary);
        let mut links = Vec::with_capacity(sites.len());
        let mut edges = Vec::new();
        let mut boundary_edges = Vec::new();
        for (i, s) in sites.iter().enumerate() {
            let mut l = [Link::Site(0); 4];
            for (d, n) in s.neighbors4().into_iter().enumerate() {
                l[d] = match index.get(n) {
                    Some(j) => {
                        if j > i {
                            edges.push((i as u32, j as u32));
                        }
                        Link::Site(j as u32)
                    }
                    None => {
                        let b = bindex
                            .get(n)
                            .expect("boundary covers all outside neighbors");
                        boundary_edges.push((i as u32, b as u32));
                        Link::Boundary(b as u32)
                    }
                };
            }
            links.push(l);
        }
        Self {
            sites,
            index,
            links,
            boundary,
            bindex,
            edges,
            boundary_edges,
        }
    }

    pub fn from_box(b: &BoxRegion) -> Self {
        Self::new(&b.to_set())
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    #[inline]
    pub fn site(&self, i: usize) -> Site {
        self.sites[i]
    }

    #[inline]
    pub fn index_of(&self, s: Site) -> Option<usize> {
        self.index.get(s)
    }

    #[inline]
    pub fn links(&self, i: usize) -> &[Link; 4] {
        &self.links[i]
    }

    pub fn boundary_sites(&self) -> &[Site] {
        &self.boundary
    }

    #[inline]
    pub fn boundary_index(&self, s: Site) -> Option<usize> {
        self.bindex.get(s)
    }

    /// Interior edges, each unordered pair once.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Pairs (region site, boundary site) for every lattice edge leaving the region.
    pub fn boundary_edges(&self) -> &[(u32, u32)] {
        &self.boundary_edges
    }

    pub fn site_set(&self) -> SiteSet {
        self.sites.iter().copied().collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.sites.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for l in &self.links[i] {
                if let Link::Site(j) = *l {
                    let j = j as usize;
                    if !seen[j] {
                        seen[j] = true;
                        count += 1;
                        stack.push(j);
                    }
                }
            }
        }
        count == self.len()
    }

    /// True when the region is a full axis-parallel rectangle of sites.
    pub fn rectangle_dims(&self) -> Option<(Site, u32, u32)> {
        let (w, h) = (self.index.width, self.index.height);
        ((w as usize * h as usize) == self.len() && !self.is_empty())
            .then(|| (Site::new(self.index.x0, self.index.y0), w, h))
    }
}
