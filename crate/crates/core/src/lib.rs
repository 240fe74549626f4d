//! Asymptotic mutual information of N-hop MIMO relay networks.
//!
//! A source with `k_0` antennas talks to a destination with `k_N` antennas
//! through `N-1` amplify/precode-and-forward relay levels. Every hop is a
//! Kronecker-correlated Rayleigh channel `H_i = C_r^{1/2} Θ_i C_t^{1/2}` and
//! every level applies a linear precoder `P_i`. As all antenna counts grow
//! with fixed ratios, the per-source-antenna mutual information
//! `log2 det(I + η G G^H) / k_0` of the composed channel
//! `G = H_N P_{N-1} ... H_1 P_0` concentrates on a deterministic value that
//! depends only on channel statistics. This crate computes that value by
//! solving the associated (N+1)-equation fixed-point system, builds the
//! precoders whose singular vectors align with the correlation eigenbases,
//! and cross-checks everything against seeded finite-size simulation and
//! numerical free-probability (S-transform) identities.
//!
//! Module map:
//! - [`matrix`]: dense complex matrix primitives (Hermitian eigendecomposition,
//!   PSD square roots, seeded Gaussian sampling, Toeplitz builders).
//! - [`channel`]: the hop model, channel draws, the end-to-end composition,
//!   and instantaneous / Monte Carlo mutual information.
//! - [`precoding`]: optimal singular-vector precoders, equal-power scaling
//!   coefficients, and the closed-form transmit power audit.
//! - [`freeprob`]: empirical spectra, Stieltjes / Υ / S transforms, and the
//!   numerical verification surface for the product relations they satisfy.
//! - [`asymptotic`]: the fixed-point solver, the asymptotic mutual
//!   information, and closed-form scenario paths (i.i.d., uncorrelated
//!   multi-hop, exponential correlation with elliptic integrals, one-sided).

pub mod asymptotic;
pub mod channel;
pub mod freeprob;
pub mod matrix;
pub mod precoding;

mod error;
mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rng::RngState;
