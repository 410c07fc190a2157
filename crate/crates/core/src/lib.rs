//! Quantum Fisher information (QFI) and quantum Cramér-Rao bounds for the
//! spacing `d` of a one-dimensional array of Gaussian light emitters that is
//! homogeneously stretched about its centre.
//!
//! The crate is organised by computational route:
//!
//! - [`geometry`]: source positions, stretched positions and their
//!   `d`-derivatives.
//! - [`closed_form`]: closed-form QFI for single-photon, coherent, thermal,
//!   odd/even entangled and NOON-like optimal sources in the clear-separation
//!   regime, plus the QCRB.
//! - [`overlap`]: exact QFI for overlapping single-photon sources. The
//!   bosonic permutation sums are evaluated either by direct enumeration or
//!   through permanents of minors of the pair-overlap matrix.
//! - [`oracle`]: independent numerical routes (fidelity finite differences,
//!   truncated series, generator moments) used to cross-check the above.
//! - [`estimator`]: photon-counting classical Fisher information, the pure
//!   state SLD and the moments of the optimal estimator.
//!
//! Lengths are in one arbitrary consistent unit; every QFI carries units of
//! inverse length squared.

pub mod closed_form;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod numeric;
pub mod oracle;
pub mod overlap;

pub use closed_form::{qcrb, MeanPhotons, Method, QfiResult, SourceModel};
pub use error::{Error, Result};
pub use geometry::{Deformation, EmitterArray};
pub use overlap::{Engine, EngineConfig};
