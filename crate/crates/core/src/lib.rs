//! Bucket-brigade tree state preparation.
//!
//! Synthesizes layered circuits that load an arbitrary amplitude vector into
//! an output register through a binary tree of routing qubits, simulates them
//! under local depolarizing noise with a sparse product-state simulator, and
//! estimates Clifford+T resources.

pub mod amplitude;
pub mod architecture;
pub mod circuit;
pub mod dense;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod noise;
pub mod plan;
pub mod resources;
pub mod robustness;
pub mod sim;
pub mod synth;

pub use amplitude::{build_tree, AmplitudeTree, RotationParams, RotationTable, TargetState};
pub use architecture::{Architecture, QubitId, Role, Variant};
pub use circuit::{Circuit, Gate, GateKind, ResourceMetrics};
pub use error::{Error, Result};
pub use exec::Execution;
pub use linalg::{Mat2, C64};
pub use noise::{ErrorConfig, NoiseParams, Pauli};
pub use plan::{LayerOp, Plan};
pub use sim::SparseState;
