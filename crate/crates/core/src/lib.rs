//! Numerical laboratory for a superconducting wire array with combinatorial
//! gauge symmetry.
//!
//! The array couples four "matter" wires to four "gauge" wires at every site
//! of a square lattice through Josephson junctions whose signs follow a 4×4
//! Hadamard matrix. The crate covers every computable layer of that system:
//!
//! - [`hadamard`]: the sign matrix, its monomial automorphism group, and the
//!   gauge transformations it generates.
//! - [`lattice`]: torus geometry and star/plaquette incidence.
//! - [`classical`]: Josephson energy, the tethered ground-state manifold, and
//!   zero-barrier plaquette flip paths.
//! - [`loops`]: fully-packed loop coverings, the ℤ₂ loop gas, the loop
//!   fugacity integral, and Metropolis sampling.
//! - [`pauli`] / [`quantum`]: sparse spin operators, the effective stabilizer
//!   Hamiltonian with its combinatorial spectrum oracle, the WXY spin model,
//!   and the WKB flip-amplitude scaling.
//! - [`circuit`]: asymmetric DC-SQUID potentials, flux calibration, and the
//!   single-site capacitance matrix.
//!
//! All floating-point math is generic over the [`scalar::Real`] scalar;
//! concrete `f64` aliases for the main entry types live at the crate root.
//! Exact statements (Hadamard orthogonality, automorphism checks, GF(2)
//! counting, Pauli algebra cancellations) use integer arithmetic throughout.

pub mod circuit;
pub mod classical;
pub mod error;
pub mod hadamard;
pub mod lattice;
pub mod linalg;
pub mod loops;
pub mod pauli;
pub mod quantum;
pub mod rng;
pub mod scalar;

pub use error::{CoreError, FailureKind};
pub use scalar::Real;

/// Default scalar used by the command-line tools and acceptance fixtures.
pub type Scalar = f64;

pub type PhaseConfig64 = classical::PhaseConfig<f64>;
pub type CouplingParams64 = classical::CouplingParams<f64>;
pub type SitePhases64 = classical::SitePhases<f64>;
pub type LoopStatistics64 = loops::LoopStatistics<f64>;
pub type McConfig64 = loops::McConfig<f64>;
pub type StabilizerModelParams64 = quantum::StabilizerModelParams<f64>;
pub type SpinOperatorMatrix64 = pauli::SpinOperatorMatrix<f64>;
pub type WkbParams64 = quantum::WkbParams<f64>;
pub type SquidParams64 = circuit::SquidParams<f64>;
pub type SiteCapacitances64 = circuit::SiteCapacitances<f64>;
pub type ChargeVector64 = circuit::ChargeVector<f64>;
