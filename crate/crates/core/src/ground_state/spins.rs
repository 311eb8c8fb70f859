use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::FieldSample;
use crate::lattice::{Link, RegionGraph, Site};
use crate::num::Real;

/// ±1 spins on a region plus the boundary values they were computed against.
///
/// Boundary entries are indexed like `graph.boundary_sites()`; `0` encodes a free
/// (zero-strength) boundary site.
#[derive(Clone, Debug)]
pub struct SpinConfig {
    pub graph: Arc<RegionGraph>,
    pub spins: Vec<i8>,
    pub boundary: Vec<i8>,
}

impl PartialEq for SpinConfig {
    fn eq(&self, o: &Self) -> bool {
        self.spins == o.spins
            && self.boundary == o.boundary
            && self.graph.sites() == o.graph.sites()
    }
}

impl SpinConfig {
    pub fn new(graph: Arc<RegionGraph>, spins: Vec<i8>, boundary: Vec<i8>) -> Result<Self> {
        check_boundary(&graph, &boundary)?;
        if spins.len() != graph.len() || spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(LabError::InvalidParameter(
                "spins must be ±1 on every region site".into(),
            ));
        }
        Ok(Self {
            graph,
            spins,
            boundary,
        })
    }

    pub fn uniform(graph: Arc<RegionGraph>, spin: i8, boundary: Vec<i8>) -> Result<Self> {
        let n = graph.len();
        Self::new(graph, vec![spin; n], boundary)
    }

    pub fn spin_at(&self, s: Site) -> Option<i8> {
        self.graph.index_of(s).map(|i| self.spins[i])
    }

    /// Rows `x, y, spin`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,spin\n");
        for (s, v) in self.graph.sites().iter().zip(&self.spins) {
            out.push_str(&format!("{},{},{}\n", s.x, s.y, v));
        }
        out
    }

    pub fn run_length(&self) -> RunLength {
        RunLength::encode(&self.spins)
    }
}

/// Run-length bitmap over the raster order: first spin and alternating run lengths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLength {
    pub first: i8,
    pub runs: Vec<u32>,
}

impl RunLength {
    pub fn encode(spins: &[i8]) -> Self {
        let mut runs = Vec::new();
        let first = spins.first().copied().unwrap_or(1);
        let mut cur = first;
        let mut len = 0u32;
        for &s in spins {
            if s == cur {
                len += 1;
            } else {
                runs.push(len);
                cur = s;
                len = 1;
            }
        }
        if len > 0 {
            runs.push(len);
        }
        Self { first, runs }
    }

    pub fn decode(&self) -> Vec<i8> {
        let mut out = Vec::new();
        let mut cur = self.first;
        for &r in &self.runs {
            out.extend(std::iter::repeat(cur).take(r as usize));
            cur = -cur;
        }
        out
    }
}

pub(crate) fn check_boundary(graph: &RegionGraph, boundary: &[i8]) -> Result<()> {
    if boundary.len() != graph.boundary_sites().len()
        || boundary.iter().any(|b| !(-1..=1).contains(b))
    {
        return Err(LabError::InvalidParameter(format!(
            "boundary needs {} values in {{-1,0,1}}, got {}",
            graph.boundary_sites().len(),
            boundary.len()
        )));
    }
    Ok(())
}

/// Boundary with every site set to `value`.
pub fn uniform_boundary(graph: &RegionGraph, value: i8) -> Vec<i8> {
    vec![value; graph.boundary_sites().len()]
}

pub fn boundary_from_fn(graph: &RegionGraph, f: impl Fn(Site) -> i8) -> Vec<i8> {
    graph.boundary_sites().iter().map(|&s| f(s)).collect()
}

/// `Σ_{v∼u, v∈∂} τ_v + h_u`, the spin-independent part of the local field.
pub fn external_terms<R: Real>(graph: &RegionGraph, h: &[R], boundary: &[i8]) -> Vec<R> {
    (0..graph.len())
        .map(|i| {
            let mut a = h[i];
            for l in graph.links(i) {
                if let Link::Boundary(b) = *l {
                    a = a + R::of(boundary[b as usize] as f64);
                }
            }
            a
        })
        .collect()
}

/// `−(Σ σ_uσ_v + Σ σ_u τ_v + Σ σ_u h_u)`, each lattice pair counted once.
pub fn energy<R: Real>(graph: &RegionGraph, spins: &[i8], boundary: &[i8], h: &[R]) -> R {
    let mut pair = 0i64;
    for &(u, v) in graph.edges() {
        pair += (spins[u as usize] * spins[v as usize]) as i64;
    }
    for &(u, b) in graph.boundary_edges() {
        pair += (spins[u as usize] * boundary[b as usize]) as i64;
    }
    let field: R = spins
        .iter()
        .zip(h)
        .map(|(&s, &x)| R::of(s as f64) * x)
        .sum();
    -(R::of(pair as f64) + field)
}

pub fn hamiltonian<R: Real>(config: &SpinConfig, field: &FieldSample<R>) -> Result<R> {
    let h = field.on_graph(&config.graph)?;
    Ok(energy(&config.graph, &config.spins, &config.boundary, &h))
}
