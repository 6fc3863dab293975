//! Small-gain certification for countably infinite networks of ODE subsystems.
//!
//! The crate works on finite descriptions of infinite networks
//! ([`network::NetworkGenerator`]), derives per-subsystem Lyapunov gain data
//! ([`gains::GainData`]), brackets the spectral radius of the infinite gain
//! operator `Ψ = Λ⁻¹Γ` on `ℓ¹` ([`operator`]), and, when `r(Ψ) < 1`, builds a
//! verified scaling vector `μ` and decay rate `λ∞` for the composite Lyapunov
//! function `V(x) = Σ μᵢ Vᵢ(xᵢ)` ([`certificate`]). Finite truncations can be
//! integrated and checked against the certificate ([`sim`]).
//!
//! All suprema over the infinite index set are exact: coefficient rules are
//! eventually periodic (or monotone power laws), so every `sup`/`inf` reduces
//! to a finite scan.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod certificate;
pub mod error;
pub mod gains;
pub mod linalg;
mod math;
pub mod network;
pub mod operator;
pub mod scenarios;
pub mod seq;
pub mod sim;

pub use error::{Error, Result};
