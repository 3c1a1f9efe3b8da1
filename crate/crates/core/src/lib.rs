//! Multi-frequency inverse source problem for the Helmholtz equation.
//!
//! Given the wavefield `u(x, k)` on the boundary of a square (and optionally
//! its normal derivative on the top edge) for `k` in a band, recover the
//! spatial source `f(x)` in `Δu + k² n²(x) u = g(k) f(x)`. The method expands
//! `v = u / g` in an orthonormal exponential-polynomial basis of `L²(k_lo, k_hi)`,
//! eliminates `f`, and solves the resulting coupled elliptic system for the
//! coefficient fields by quasi-reversibility.
//!
//! The numerical core is generic over [`Real`]; the sparse factorizations
//! work in `f64`. Concrete `f64` aliases live at the crate root.

pub mod basis;
pub mod error;
pub mod forward;
pub mod grid;
pub mod harness;
pub mod io;
pub mod pipeline;
pub mod qrm;
pub mod reconstruction;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};
pub use scalar::Real;

pub use faer::c64;

pub type Basis = basis::BasisSet<f64>;
pub type Grid = grid::GridSpec<f64>;
pub type RealField = grid::ScalarField<f64>;
pub type WaveField = grid::ComplexField<f64>;
pub type Sweep = forward::FrequencySweep<f64>;
pub type Traces = forward::BoundaryTraces<f64>;
pub type FourierData = pipeline::FourierBoundaryData<f64>;
pub type System = qrm::QrmSystem<f64>;
