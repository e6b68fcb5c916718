//! Global and geographically weighted (GW) error diagnostics for predicted
//! versus reference values at point locations.
//!
//! The crate computes msd, mae, rmse and correlation both globally and as
//! bi-square kernel weighted local statistics over a regular grid, tests the
//! local values with Monte Carlo permutations, and measures spatial
//! autocorrelation of the deviations with Moran's I.
//!
//! ```
//! use std::collections::BTreeSet;
//! use gwdiag::{diagnostics, model, synth};
//!
//! let data = synth::generate(synth::Scenario::Null, 200, 1).unwrap();
//! let grid = model::EvaluationGrid::covering(&data.samples, 0.05, 20).unwrap();
//! let kernel = model::KernelSpec::adaptive_fraction(0.10).unwrap();
//! let kinds = BTreeSet::from([model::DiagnosticKind::GwMae]);
//! let surfaces = diagnostics::evaluate_surfaces(
//!     &data.samples, &grid, &kernel, &kinds, &Default::default(),
//! ).unwrap();
//! assert_eq!(surfaces[0].values.len(), grid.n_cells());
//! ```

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod spatial;
pub mod synth;

pub use error::{Error, Result};
