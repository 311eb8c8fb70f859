use super::{BoxRegion, Site};

/// Finite site set stored as a bitmap over its bounding frame; the frame grows on insert.
#[derive(Clone, Debug, Default)]
pub struct SiteSet {
    x0: i32,
    y0: i32,
    width: u32,
    height: u32,
    bits: Vec<bool>,
    len: usize,
}

impl SiteSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty set with a preallocated frame `[x0, x0+w) × [y0, y0+h)`.
    pub fn with_frame(x0: i32, y0: i32, width: u32, height: u32) -> Self {
        Self {
            x0,
            y0,
            width,
            height,
            bits: vec![false; (width * height) as usize],
            len: 0,
        }
    }

    pub fn from_box(b: &BoxRegion) -> Self {
        let w = b.width();
        let mut s = Self::with_frame(
            b.center.x - b.radius as i32,
            b.center.y - b.radius as i32,
            w,
            w,
        );
        s.bits.iter_mut().for_each(|x| *x = true);
        s.len = (w * w) as usize;
        s
    }

    #[inline]
    fn slot(&self, s: Site) -> Option<usize> {
        let dx = s.x.wrapping_sub(self.x0);
        let dy = s.y.wrapping_sub(self.y0);
        if dx < 0 || dy < 0 || dx as u32 >= self.width || dy as u32 >= self.height {
            None
        } else {
            Some(dy as usize * self.width as usize + dx as usize)
        }
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        self.slot(s).is_some_and(|i| self.bits[i])
    }

    fn grow_to(&mut self, s: Site) {
        if self.width == 0 {
            *self = Self::with_frame(s.x - 4, s.y - 4, 9, 9);
            return;
        }
        let x0 = self.x0.min(s.x - 4);
        let y0 = self.y0.min(s.y - 4);
        let x1 = (self.x0 + self.width as i32).max(s.x + 5);
        let y1 = (self.y0 + self.height as i32).max(s.y + 5);
        let mut next = Self::with_frame(x0, y0, (x1 - x0) as u32, (y1 - y0) as u32);
        for v in self.iter() {
            let i = next.slot(v).unwrap();
            next.bits[i] = true;
        }
        next.len = self.len;
        *self = next;
    }

    /// Returns true when the site was not already present.
    pub fn insert(&mut self, s: Site) -> bool {
        let i = match self.slot(s) {
            Some(i) => i,
            None => {
                self.grow_to(s);
                self.slot(s).unwrap()
            }
        };
        if self.bits[i] {
            false
        } else {
            self.bits[i] = true;
            self.len += 1;
            true
        }
    }

    pub fn remove(&mut self, s: Site) -> bool {
        match self.slot(s) {
            Some(i) if self.bits[i] => {
                self.bits[i] = false;
                self.len -= 1;
                true
            }
            _ => false,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sites in raster order.
    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| Site::new(self.x0 + (i % w) as i32, self.y0 + (i / w) as i32))
    }

    pub fn to_vec(&self) -> Vec<Site> {
        self.iter().collect()
    }

    pub fn union(&self, o: &SiteSet) -> SiteSet {
        let mut out = self.clone();
        out.extend(o.iter());
        out
    }

    pub fn intersection(&self, o: &SiteSet) -> SiteSet {
        self.iter().filter(|s| o.contains(*s)).collect()
    }

    pub fn difference(&self, o: &SiteSet) -> SiteSet {
        self.iter().filter(|s| !o.contains(*s)).collect()
    }

    pub fn is_subset(&self, o: &SiteSet) -> bool {
        self.iter().all(|s| o.contains(s))
    }

    pub fn is_disjoint(&self, o: &SiteSet) -> bool {
        self.iter().all(|s| !o.contains(s))
    }

    pub fn filter(&self, f: impl Fn(Site) -> bool) -> SiteSet {
        self.iter().filter(|s| f(*s)).collect()
    }
}

impl PartialEq for SiteSet {
    fn eq(&self, o: &Self) -> bool {
        self.len == o.len && self.is_subset(o)
    }
}

impl Eq for SiteSet {}

impl FromIterator<Site> for SiteSet {
    fn from_iter<I: IntoIterator<Item = Site>>(iter: I) -> Self {
        let sites: Vec<Site> = iter.into_iter().collect();
        if sites.is_empty() {
            return Self::new();
        }
        let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        for s in &sites {
            x0 = x0.min(s.x);
            y0 = y0.min(s.y);
            x1 = x1.max(s.x);
            y1 = y1.max(s.y);
        }
        let mut set = Self::with_frame(x0, y0, (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32);
        set.extend(sites);
        set
    }
}

impl Extend<Site> for SiteSet {
    fn extend<I: IntoIterator<Item = Site>>(&mut self, iter: I) {
        for s in iter {
            self.insert(s);
        }
    }
}
