//! Classical scattering for the cubic nonlinear Klein–Gordon equation on a
//! periodic lattice, and the coherent-state (Wick) kernels built from the
//! classical wave operators.

pub mod ensemble;
pub mod error;
pub mod evolution;
pub mod field;
pub mod fit;
pub mod fock;
pub mod grid;
pub mod perturbative;
pub mod scattering;
pub mod snapshot;
pub mod spectral;
pub mod structure;
pub mod tolerances;
pub mod verify;
pub mod wick;

pub use error::{Error, Result};
pub use evolution::{IntegratorParams, SplittingOrder};
pub use field::{ComplexProfile, PhaseSpacePoint, RealField};
pub use fock::{CoherentCombo, FockBasis, MultiIndex};
pub use grid::{Grid, GridSpec};
pub use scattering::MatchingParams;
pub use snapshot::Snapshot;
pub use wick::KernelValue;
