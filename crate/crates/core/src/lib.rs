//! Simulation toolkit for a four-level amplification-without-inversion scheme.
//!
//! The probe response is computed three independent ways:
//!
//! * [`lindblad`]: density-matrix evolution and the Liouvillian steady state,
//! * [`mcwf`] + [`periods`]: quantum-jump trajectories and the statistics of
//!   the coherent periods between jumps,
//! * [`semianalytic`]: closed-form period probabilities built from amplitude
//!   integrals of the non-hermitian propagator.
//!
//! [`sweep`] drives all three over parameter grids and writes CSV.
//!
//! Units: ħ = 1 and every rate, Rabi frequency and detuning is an angular
//! frequency. Internally everything is expressed in units of γ₂₁.

pub mod error;
pub mod hamiltonian;
pub mod lindblad;
pub mod linalg;
pub mod mcwf;
pub mod periods;
pub mod quadrature;
pub mod scheme;
pub mod semianalytic;
pub mod sweep;

pub use error::{Error, Result};
pub use hamiltonian::{JumpChannel, JumpLabel, Level};
pub use lindblad::DensityMatrix4;
pub use linalg::{ComplexMatrix4, StateVector4};
pub use scheme::{SchemeParams, Units};

/// Version string stamped into CSV metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
