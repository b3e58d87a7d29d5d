//! Lattice-point counts of `Z^d` in dilated, translated hypercubes, the
//! limit laws of the normalised error term, and a seeded Monte Carlo engine
//! comparing the two.
//!
//! * [`lattice`]: exact counts, error term, `Delta(t, X)` and its envelope.
//! * [`laws`]: limit characteristic functions with derived densities and CDFs.
//! * [`sampling`]: reproducible batches, KS distances, empirical CFs.
//! * [`io`]: CSV/JSON emission used by the `lattice-box` binary.
//! * [`verify`]: the self-check suites behind `lattice-box verify`.

pub mod error;
pub mod io;
pub mod lattice;
pub mod laws;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::{BoxSpec, LatticeCountResult, Translation};
pub use laws::{CurveKind, CurveTable, DiagonalLimitLaw, IidUniformLimitLaw, LimitLaw};
pub use sampling::{ComparisonReport, RhoSpec, SampleBatch, Scenario};
