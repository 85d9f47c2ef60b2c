//! Simulation and analysis of entangled two-mode Schrödinger cat states
//! generated conditionally in a two-cavity, three-atom cavity-QED circuit.
//!
//! The crate is organised bottom-up:
//!
//! - [`coherent`]: exact algebra over finite superpositions of multimode
//!   coherent states tensored with three-level atomic registers.
//! - [`protocol`]: Ramsey pulses, dispersive cavity evolution, the full
//!   three-atom sequence, conditional projection, and the tabulated
//!   reference states.
//! - [`entanglement`]: orthogonalised 2×2 reduced density matrices, the
//!   general Gram-matrix entropy oracle, and parameter sweeps.
//! - [`wigner`]: reduced single-mode Wigner functions (coherent-dyad kernel
//!   and the closed-form antipodal expression), negativity and lobe
//!   diagnostics, and field export.
//! - [`fock`]: truncated number-basis oracle used for cross-validation.
//! - [`validate`]: the cross-module check suite behind `efsc validate`.

pub mod angle;
pub mod coherent;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod protocol;
pub mod sweep;
pub mod validate;
pub mod wigner;

pub use num_complex::Complex64 as C64;

pub use coherent::{AtomLabel, BasisTerm, CoherentLabel, Level, SuperState};
pub use entanglement::{BipartiteDecomposition, EntropyResult, ReducedDensity2};
pub use error::{Error, Result};
pub use protocol::{ConditionalResult, MeasurementOutcome, ProtocolConfig};
pub use wigner::{PhaseSpaceGrid, WignerField};
