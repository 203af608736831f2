//! Exact higher-order moments `E[X_A]` for zero-mean Gaussian vectors,
//! Gaussian location mixtures and generalized hyperbolic vectors.
//!
//! The crate is organised bottom-up:
//!
//! - [`combinatorics`]: multi-indices, pairings and position subsets.
//! - [`gaussian`]: covariance matrices and the Isserlis/Wick sum.
//! - [`mixtures`]: location mixtures `X = μ + ζ` with arbitrary mixing laws.
//! - [`special`]: `K_ν(x)`, the generalized inverse Gaussian law and its moments.
//! - [`hyperbolic`]: normal variance-mean mixtures `X = μ + σ²Δβ + σΔ^{1/2}ζ`.
//! - [`sampling`]: reproducible Monte Carlo samplers and moment estimators.
//!
//! Component indices are 0-based inside the library. Use
//! [`MultiIndex::from_one_based`] at input boundaries.

pub mod combinatorics;
mod error;
pub mod gaussian;
pub mod hyperbolic;
mod linalg;
pub mod mixtures;
pub mod quadrature;
pub mod sampling;
pub mod special;

pub use combinatorics::{
    canonical_key, enumerate_pairings, enumerate_subsets, MultiIndex, MultisetKey, Pairing,
    SubsetSelection,
};
pub use error::{Error, Result};
pub use gaussian::{wick_moment, wick_moment_memoized, CovarianceMatrix, Summation, WickCache};
pub use hyperbolic::{gig_orders_needed, hyperbolic_moment, DetPolicy, HyperbolicModel};
pub use mixtures::{
    location_mixture_moment, location_mixture_moment_independent, mixing_moment,
    LocationMixtureModel, MixingDistribution,
};
pub use sampling::{
    estimate_moment, estimate_moments, sample_gaussian, sample_gig, sample_hyperbolic,
    sample_location_mixture, GaussianSampler, GigSampler, HyperbolicSampler,
    LocationMixtureSampler, MomentEstimate, RandomStream, VectorSampler,
};
pub use special::{bessel_k, gig_density, gig_moment, gig_moment_quadrature, GigParams};
