//! Classical spin lattices under piecewise Floquet drives.
//!
//! Exact stroboscopic evolution, the leading-order prethermal Hamiltonian,
//! Metropolis sampling and the observables used to diagnose prethermal
//! time crystals.

pub mod analysis;
pub mod coupling;
pub mod effective;
pub mod error;
pub mod floquet;
pub mod hamiltonian;
pub mod lattice;
pub mod models;
pub mod record;
pub mod rng;
pub mod state;
pub mod stats;
pub mod thermal;
pub mod vec3;

pub use coupling::{CouplingKernel, KernelKind};
pub use error::{Error, Result};
pub use floquet::{DriveProtocol, FloquetEvolver, KickSpec, Segment};
pub use hamiltonian::{CompiledHamiltonian, StaticHamiltonian, TermSet};
pub use lattice::{Boundary, LatticeSpec};
pub use record::{Recorder, TrajectoryRecord};
pub use state::SpinState;
pub use vec3::{Axis, Mat3, Vec3};
