//! Certified computation of blowup energy limits for singular SU(n+1) Toda
//! systems.
//!
//! The crate has three layers:
//!
//! * [`numeric`] — exact rationals, dyadic interval arithmetic and radical
//!   expression trees with certified sign determination,
//! * [`conic`] / [`closure`] — the energy curve Γ for a parameter pair
//!   (μ₁, μ₂) and the worklist closure that enumerates the finite set
//!   Σ(μ₁, μ₂) of admissible energy limits,
//! * [`quantization`] / [`radial`] — Cartan-matrix energy algebra for general
//!   SU(n+1) and an adaptive radial ODE integrator whose trajectories realize
//!   points of Σ through energy plateaus.

pub mod closure;
pub mod conic;
pub mod numeric;
pub mod quantization;
pub mod radial;

pub use closure::{ClosureError, ClosureOptions, SigmaSet};
pub use conic::{Axis, Conic, ConicError, Provenance, SigmaPoint};
pub use numeric::{Cmp, NumericError, Rational, RealScalar};
pub use quantization::{CartanMatrix, EnergyVector, GammaVector};
pub use radial::{RadialError, RadialProblem, Trajectory};
