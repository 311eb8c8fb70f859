//! Random-field Ising laboratory on Z².
//!
//! Exact ground states, exact and perfect-sampled Gibbs measures, the adaptive and
//! breadth-first couplings, and disagreement-percolation metrics, with an experiment
//! harness on top. Numeric kernels are generic over [`Real`]; the aliases below fix
//! them to `f64`.

pub mod cftp;
pub mod couplings;
pub mod error;
pub mod experiments;
pub mod field;
pub mod gibbs;
pub mod ground_state;
pub mod lattice;
pub mod num;
pub mod percolation;
pub mod rng;
pub mod stats;

pub use error::{LabError, Result};
pub use lattice::{Annulus, BoxRegion, Distance, Rectangle, RegionGraph, Site, SiteSet};
pub use num::Real;

/// Double-precision field.
pub type Field = field::FieldSample<f64>;
pub type Perturbation = field::PerturbationSpec<f64>;
pub type GroundState = ground_state::GroundState<f64>;
