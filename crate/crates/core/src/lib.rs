//! Spectra of diagonally perturbed bilateral weighted shift operators
//! `T = S_n + D` on `ℓ²(ℤ)`.
//!
//! A point `λ` belongs to `σ(T)` when the forward and backward growth rates
//! `R⁺(λ)`, `R⁻(λ)` of the window quotients of `T - λ` are both at least 1
//! (only `R⁺` matters when `S` is not invertible). The crate evaluates those
//! rates exactly where closed forms exist, scans the complex plane with
//! adaptive refinement, builds explicit resolvent series off the spectrum,
//! and cross-checks everything against finite truncations.

pub mod cli;
pub mod error;
pub mod extreal;
pub mod operator;
pub mod oracle;
pub mod radii;
pub mod sequence;
pub mod series;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use operator::ShiftModel;
pub use radii::{RadiiEvaluator, RadiusEstimate, RadiusMethod};
pub use sequence::SequenceSpec;
