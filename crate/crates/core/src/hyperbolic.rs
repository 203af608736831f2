//! Generalized hyperbolic vectors `X = μ + σ²γ + σ Δ^{1/2} ζ`, `γ = Δβ`,
//! with `σ² ~ GIG(ψ, χ, λ)` independent of the standard Gaussian `ζ`.
//!
//! Conditionally on `σ²`, `X` is Gaussian with mean `μ + σ²γ` and covariance
//! `σ²Δ`. Expanding over position subsets `T ⊂ S ⊂ A` with `|S| = 2l+ε`,
//! `|T| = p` gives
//!
//! ```text
//! E[X_A] = Σ_{l,p} Σ_{T⊂S⊂A} μ_T γ_{S∖T} m_{N+l-p+ε} Wick_Δ(A∖S)
//! ```
//!
//! where `m_k = E[σ^{2k}]`. The `σ²` power counts `|A∖S|/2` from the Gaussian
//! part plus `|S∖T|` from the drift, so orders up to `2N+ε = |A|` occur.

use crate::combinatorics::{binomial, enumerate_subsets, pairing_count, positions_key, MultiIndex};
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, WickCache};
use crate::special::{gig_moments, GigParams};

/// Allowed deviation of `det Δ` from 1.
pub const DET_TOLERANCE: f64 = 1e-8;

/// What to do when `|det Δ - 1|` exceeds [`DET_TOLERANCE`]. The moment
/// algebra never uses the determinant; it is a parameterisation convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetPolicy {
    #[default]
    Strict,
    /// Accept any symmetric positive definite `Δ`; callers can inspect
    /// [`HyperbolicModel::det_deviation`] to warn.
    Lenient,
}

#[derive(Debug, Clone)]
pub struct HyperbolicModel {
    mu: Vec<f64>,
    beta: Vec<f64>,
    delta: CovarianceMatrix,
    gig: GigParams,
    gamma: Vec<f64>,
}

impl HyperbolicModel {
    /// Builds the model with the strict determinant check.
    pub fn new(mu: Vec<f64>, beta: Vec<f64>, delta: CovarianceMatrix, gig: GigParams) -> Result<Self> {
        Self::with_policy(mu, beta, delta, gig, DetPolicy::Strict)
    }

    pub fn with_policy(
        mu: Vec<f64>,
        beta: Vec<f64>,
        delta: CovarianceMatrix,
        gig: GigParams,
        policy: DetPolicy,
    ) -> Result<Self> {
        let d = delta.dimension();
        for v in [&mu, &beta] {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("hyperbolic location or skew vector"));
            }
        }
        let min = delta.min_eigenvalue();
        if min.is_nan() || min <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        let det = delta.determinant();
        if policy == DetPolicy::Strict && (det - 1.0).abs() > DET_TOLERANCE {
            return Err(Error::Determinant {
                det,
                tolerance: DET_TOLERANCE,
            });
        }
        let gamma = (0..d)
            .map(|i| (0..d).map(|j| delta.get(i, j) * beta[j]).sum())
            .collect();
        Ok(Self {
            mu,
            beta,
            delta,
            gig,
            gamma,
        })
    }

    pub fn dimension(&self) -> usize {
        self.delta.dimension()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn delta(&self) -> &CovarianceMatrix {
        &self.delta
    }

    pub fn gig(&self) -> &GigParams {
        &self.gig
    }

    /// `γ = Δβ`.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `|det Δ - 1|`.
    pub fn det_deviation(&self) -> f64 {
        (self.delta.determinant() - 1.0).abs()
    }
}

/// Highest GIG moment order used for an index: `|A| = 2N+ε`, reached at
/// `l = N`, `p = 0`.
pub fn gig_orders_needed(index: &MultiIndex) -> usize {
    index.len()
}

/// `E[X_A]` for a generalized hyperbolic vector.
pub fn hyperbolic_moment(model: &HyperbolicModel, index: &MultiIndex) -> Result<f64> {
    index.check_dimension(model.dimension())?;
    let moments = gig_moments(&model.gig, gig_orders_needed(index) as u32)?;
    variance_mean_mixture_moment(&model.mu, &model.gamma, &model.delta, &moments, index)
}

/// The same expansion for an arbitrary scalar mixing variable, given its
/// moments `scale_moments[k] = E[(σ²)^k]` for `k = 0..=|A|`.
///
/// With `scale_moments[k] = s^k` this is the moment of the Gaussian with mean
/// `location + s·drift` and covariance `s·cov`.
pub fn variance_mean_mixture_moment(
    location: &[f64],
    drift: &[f64],
    cov: &CovarianceMatrix,
    scale_moments: &[f64],
    index: &MultiIndex,
) -> Result<f64> {
    let d = cov.dimension();
    index.check_dimension(d)?;
    for v in [location, drift] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
    }
    let n = index.len();
    if scale_moments.len() <= n {
        return Err(Error::InvalidParameter(format!(
            "need scale moments up to order {n}, got {}",
            scale_moments.len().saturating_sub(1)
        )));
    }
    let half = index.half_len();
    let eps = index.parity();
    let entries = index.entries();
    let mut cache = WickCache::new();
    let mut total = 0.0;
    for l in 0..=half {
        let s_len = 2 * l + eps;
        for s in enumerate_subsets(n, s_len) {
            let wick = cache.get_or_compute(positions_key(index, s.complement()), cov)?;
            let sp = s.positions();
            let mut inner = 0.0;
            for p in 0..=s_len {
                let m = scale_moments[half + l + eps - p];
                for t in enumerate_subsets(s_len, p) {
                    let mu_t = t.positions().iter().fold(1.0, |acc, &i| acc * location[entries[sp[i]]]);
                    let gamma_rest = t.complement().iter().fold(1.0, |acc, &i| acc * drift[entries[sp[i]]]);
                    inner += mu_t * gamma_rest * m;
                }
            }
            total += inner * wick;
        }
    }
    Ok(total)
}

/// Number of products folded by [`hyperbolic_moment`] for `|A| = n`.
pub fn term_count(n: usize) -> u128 {
    (n % 2..=n)
        .step_by(2)
        .map(|s| binomial(n, s) * (1u128 << s) * pairing_count(n - s))
        .sum()
}
