//! Mixed Poisson distributions `MPo(ρX)`.
//!
//! * [`combinatorics`]: exact Stirling-type counts and the centered Poisson
//!   moment polynomials `m_s(x)`, with a brute-force set-partition oracle.
//! * [`mixing`]: the catalogue of mixing laws `X`.
//! * [`mixed_poisson`]: pmf, coupled sampling and exact moments of `MPo(ρX)`,
//!   plus the multivariate model.
//! * [`limit_lab`]: Monte Carlo experiments for the ρ → ∞ limit behaviour.

pub mod combinatorics;
pub mod error;
pub mod limit_lab;
pub mod mixed_poisson;
pub mod mixing;
pub mod quadrature;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};
pub use mixed_poisson::{CoupledSample, JointMixing, MixedPoissonModel, MultiMixedPoissonModel};
pub use mixing::{MixingDistribution, MixingKind};
