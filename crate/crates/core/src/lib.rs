//! Simulation and exact-oracle toolkit for symmetric Neuhauser-Pacala spin
//! systems and lattice Wright-Fisher diffusions, together with their duals.
//!
//! Numeric routines are generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the common double-precision instantiation.

pub mod diffusion;
pub mod dualspin;
pub mod error;
pub mod exact;
pub mod kernel;
pub mod meanfield;
pub mod momdual;
pub mod replicate;
pub mod scalar;
pub mod spin;
pub mod stats;
pub mod stream;
mod sumtree;
pub mod walkers;

pub use error::{Error, Result};
pub use kernel::{local_frequency, Geometry, Kernel, SpinConfig};
pub use scalar::Scalar;
pub use stats::McEstimate;
pub use walkers::{ParticleState, WalkerKind};
pub use stream::{derive_stream, StreamRng};

pub type Kernel64 = kernel::Kernel<f64>;
pub type Kernel32 = kernel::Kernel<f32>;
pub type NpParams64 = spin::NpParams<f64>;
pub type NpParams32 = spin::NpParams<f32>;
pub type Migration64 = diffusion::Migration<f64>;
pub type Migration32 = diffusion::Migration<f32>;
pub type DiffusionParams64 = diffusion::DiffusionParams<f64>;
pub type DiffusionParams32 = diffusion::DiffusionParams<f32>;
pub type DiffusionState64 = diffusion::DiffusionState<f64>;
pub type DiffusionState32 = diffusion::DiffusionState<f32>;
pub type LvParams64 = meanfield::LvParams<f64>;
pub type LvParams32 = meanfield::LvParams<f32>;

/// Version string embedded in every report.
pub const VERSION: &str = concat!("ipsd ", env!("CARGO_PKG_VERSION"));
