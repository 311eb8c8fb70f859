#![allow(dead_code)]

use std::collections::HashMap;

use rfim_core::{Site, SiteSet};

/// Coordinate-level Hamiltonian, independent of the indexed region graph.
pub struct Brute {
    pub sites: Vec<Site>,
    pub field: HashMap<Site, f64>,
    pub boundary: HashMap<Site, i8>,
}

impl Brute {
    pub fn new(
        region: &SiteSet,
        field: impl Fn(Site) -> f64,
        boundary: impl Fn(Site) -> i8,
    ) -> Self {
        let sites = region.to_vec();
        let mut b = HashMap::new();
        for s in &sites {
            for n in [
                Site::new(s.x + 1, s.y),
                Site::new(s.x - 1, s.y),
                Site::new(s.x, s.y + 1),
                Site::new(s.x, s.y - 1),
            ] {
                if !region.contains(n) {
                    b.insert(n, boundary(n));
                }
            }
        }
        let field = sites.iter().map(|&s| (s, field(s))).collect();
        Self {
            sites,
            field,
            boundary: b,
        }
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        let at: HashMap<Site, i8> = self
            .sites
            .iter()
            .copied()
            .zip(spins.iter().copied())
            .collect();
        let mut e = 0.0;
        for (&s, &v) in &at {
            e -= self.field[&s] * v as f64;
            for n in [Site::new(s.x + 1, s.y), Site::new(s.x, s.y + 1)] {
                if let Some(&w) = at.get(&n) {
                    e -= (v * w) as f64;
                }
            }
            for n in [
                Site::new(s.x + 1, s.y),
                Site::new(s.x - 1, s.y),
                Site::new(s.x, s.y + 1),
                Site::new(s.x, s.y - 1),
            ] {
                if let Some(&t) = self.boundary.get(&n) {
                    e -= (v * t) as f64;
                }
            }
        }
        e
    }

    pub fn spins(&self, k: usize) -> Vec<i8> {
        (0..self.sites.len())
            .map(|i| if k >> i & 1 == 1 { 1 } else { -1 })
            .collect()
    }

    /// `(spins, weight)` over all states, weights normalized.
    pub fn distribution(&self, beta: f64) -> Vec<(Vec<i8>, f64)> {
        let n = self.sites.len();
        let raw: Vec<(Vec<i8>, f64)> = (0..1usize << n)
            .map(|k| {
                let s = self.spins(k);
                let w = -beta * self.energy(&s);
                (s, w)
            })
            .collect();
        let m = raw.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = raw.iter().map(|p| (p.1 - m).exp()).sum();
        raw.into_iter()
            .map(|(s, w)| (s, (w - m).exp() / z))
            .collect()
    }

    pub fn log_z(&self, beta: f64, keep: impl Fn(&[i8]) -> bool) -> f64 {
        let n = self.sites.len();
        let ws: Vec<f64> = (0..1usize << n)
            .map(|k| self.spins(k))
            .filter(|s| keep(s))
            .map(|s| -beta * self.energy(&s))
            .collect();
        let m = ws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + ws.iter().map(|w| (w - m).exp()).sum::<f64>().ln()
    }

    pub fn index(&self, s: Site) -> usize {
        self.sites.iter().position(|&t| t == s).unwrap()
    }
}

/// Deterministic pseudo-normal values for test fields.
pub fn test_field(seed: u64, eps: f64) -> impl Fn(Site) -> f64 {
    move |s| eps * rfim_core::field::standard_normal_at(seed, s)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
