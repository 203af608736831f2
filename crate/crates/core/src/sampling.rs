//! Monte Carlo oracles: samplers for every model family and a reproducible,
//! thread-count independent moment estimator.
//!
//! Randomness comes from ChaCha20. A [`RandomStream`] fixes the key (from the
//! seed) and the ChaCha stream id; the estimator splits the work into fixed
//! chunks and jumps each chunk to its own block of `2^36` words, so chunks
//! never overlap and can be generated on any thread. Chunk statistics are
//! merged in chunk order, which makes the result bitwise independent of the
//! number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::combinatorics::MultiIndex;
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::hyperbolic::HyperbolicModel;
use crate::linalg;
use crate::mixtures::{Law, LocationMixtureModel};
use crate::special::{gig_cdf_sorted, ln_bessel_k, GigParams};

/// Samples per estimator chunk.
pub const CHUNK_SIZE: u64 = 8192;
const CHUNK_WORD_SHIFT: u32 = 36;
/// Smallest acceptance probability the GIG sampler will run with.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Generator positioned at the start of the block reserved for `chunk`.
    pub fn chunk_rng(&self, chunk: u64) -> ChaCha20Rng {
        let mut rng = self.rng();
        rng.set_word_pos(u128::from(chunk) << CHUNK_WORD_SHIFT);
        rng
    }
}

/// A distribution over `R^d` that can fill a buffer with one draw.
pub trait VectorSampler: Sync {
    fn dimension(&self) -> usize;
    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]);

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        self.sample_into(rng, &mut out);
        out
    }
}

/// `N(0, R)` via a pivoted Cholesky factor, so singular `R` is accepted.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    dim: usize,
    factor: Vec<f64>,
}

impl GaussianSampler {
    pub fn new(cov: &CovarianceMatrix) -> Result<Self> {
        let dim = cov.dimension();
        Ok(Self {
            dim,
            factor: linalg::pivoted_cholesky(dim, cov.as_slice(), 1e-12)?,
        })
    }
}

impl VectorSampler for GaussianSampler {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let g: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        linalg::mat_vec(self.dim, &self.factor, &g, out);
    }
}

pub fn sample_gaussian<R: Rng + ?Sized>(cov: &CovarianceMatrix, rng: &mut R) -> Result<Vec<f64>> {
    Ok(GaussianSampler::new(cov)?.sample(rng))
}

#[derive(Debug, Clone)]
enum Location {
    Fixed(Vec<f64>),
    Signed(Vec<f64>),
    Atoms { locations: Vec<Vec<f64>>, cumulative: Vec<f64> },
}

/// `μ + ζ` with `μ` drawn from the mixing law.
#[derive(Debug, Clone)]
pub struct LocationMixtureSampler {
    location: Location,
    noise: GaussianSampler,
}

impl LocationMixtureSampler {
    /// Fails with [`Error::UnsupportedSampling`] for oracle-defined mixing.
    pub fn new(model: &LocationMixtureModel) -> Result<Self> {
        let location = match &model.mixing().law {
            Law::Deterministic(m) => Location::Fixed(m.clone()),
            Law::Bernoulli(mu) => Location::Signed(mu.clone()),
            Law::Atoms {
                locations,
                probabilities,
            } => {
                let mut acc = 0.0;
                let cumulative = probabilities
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                Location::Atoms {
                    locations: locations.clone(),
                    cumulative,
                }
            }
            Law::Oracle(_) => return Err(Error::UnsupportedSampling),
        };
        Ok(Self {
            location,
            noise: GaussianSampler::new(model.noise())?,
        })
    }
}

impl VectorSampler for LocationMixtureSampler {
    fn dimension(&self) -> usize {
        self.noise.dim
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let (loc, sign) = match &self.location {
            Location::Fixed(m) => (m, 1.0),
            Location::Signed(mu) => (mu, if rng.random::<bool>() { 1.0 } else { -1.0 }),
            Location::Atoms {
                locations,
                cumulative,
            } => {
                let u: f64 = rng.random();
                let i = cumulative.iter().position(|&c| u < c).unwrap_or(locations.len() - 1);
                (&locations[i], 1.0)
            }
        };
        self.noise.sample_into(rng, out);
        for (o, m) in out.iter_mut().zip(loc) {
            *o += sign * m;
        }
    }
}

pub fn sample_location_mixture<R: Rng + ?Sized>(model: &LocationMixtureModel, rng: &mut R) -> Result<Vec<f64>> {
    Ok(LocationMixtureSampler::new(model)?.sample(rng))
}

/// Exact GIG sampler by the ratio-of-uniforms method.
///
/// Draws are made from the standardized law `GIG(ω, ω, |λ|)`, `ω = √(ψχ)`;
/// negative `λ` is handled through `1/Y` and the result is scaled by
/// `√(χ/ψ)`. With `g` the density kernel divided by its value at the mode
/// `m`, the acceptance region is `{(u, v): 0 < u ≤ √g(v/u + c)}` inside the
/// rectangle `[0, 1] × [v⁻, v⁺]`. Two envelopes are built, one shifted to the
/// mode (`c = m`) and one unshifted (`c = 0`), and the one with the higher
/// acceptance probability `K_λ(ω) e^{-ln g(m)} / area` is used. The shifted
/// envelope wins for `λ ≥ 1` or large `ω`; the unshifted one stays efficient
/// as `ω → 0` with `λ < 1`.
#[derive(Debug, Clone)]
pub struct GigSampler {
    lambda: f64,
    omega: f64,
    invert: bool,
    scale: f64,
    mode: f64,
    ln_kernel_at_mode: f64,
    shift: f64,
    v_minus: f64,
    v_plus: f64,
    acceptance: f64,
}

impl GigSampler {
    pub fn new(params: &GigParams) -> Result<Self> {
        let lambda = params.lambda().abs();
        let omega = params.omega();
        let a = lambda - 1.0;
        let r = (a * a + omega * omega).sqrt();
        let mode = if a >= 0.0 { (a + r) / omega } else { omega / (r - a) };
        let mut s = Self {
            lambda,
            omega,
            invert: params.lambda() < 0.0,
            scale: params.scale(),
            mode,
            ln_kernel_at_mode: 0.0,
            shift: 0.0,
            v_minus: 0.0,
            v_plus: 0.0,
            acceptance: 0.0,
        };
        s.ln_kernel_at_mode = s.ln_kernel(mode);

        // unshifted: max of x√g(x) has a closed form
        let x_star = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
        let plain_v = x_star * (0.5 * s.ln_g(x_star)).exp();

        let right = s.extremum_right();
        let left = s.extremum_left();
        let shifted = (
            (left - mode) * (0.5 * s.ln_g(left)).exp(),
            (right - mode) * (0.5 * s.ln_g(right)).exp(),
        );

        // area of the acceptance region = ½∫g = K_λ(ω) e^{-ln kernel(m)}
        let region = (ln_bessel_k(lambda, omega)? - s.ln_kernel_at_mode).exp();
        let acc_plain = region / plain_v;
        let acc_shift = region / (shifted.1 - shifted.0);
        if acc_shift >= acc_plain {
            s.shift = mode;
            s.v_minus = shifted.0;
            s.v_plus = shifted.1;
            s.acceptance = acc_shift;
        } else {
            s.v_plus = plain_v;
            s.acceptance = acc_plain;
        }
        if s.acceptance.is_nan() || s.acceptance < MIN_ACCEPTANCE {
            return Err(Error::PoorAcceptance {
                acceptance: s.acceptance,
            });
        }
        Ok(s)
    }

    /// Theoretical probability that one proposal is accepted.
    pub fn acceptance_probability(&self) -> f64 {
        self.acceptance
    }

    pub fn uses_mode_shift(&self) -> bool {
        self.shift != 0.0
    }

    fn ln_kernel(&self, x: f64) -> f64 {
        (self.lambda - 1.0) * x.ln() - 0.5 * self.omega * (x + 1.0 / x)
    }

    fn ln_g(&self, x: f64) -> f64 {
        self.ln_kernel(x) - self.ln_kernel_at_mode
    }

    /// Sign of d/dx [ln|x - m| + ln g(x)/2].
    fn slope(&self, x: f64) -> f64 {
        let dh = (self.lambda - 1.0) / x - 0.5 * self.omega + 0.5 * self.omega / (x * x);
        1.0 / (x - self.mode) + 0.5 * dh
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        // slope(lo) > 0 > slope(hi)
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn extremum_right(&self) -> f64 {
        let mut step = self.mode.max(1.0);
        while self.slope(self.mode + step) > 0.0 {
            step *= 2.0;
        }
        self.bisect(self.mode, self.mode + step)
    }

    fn extremum_left(&self) -> f64 {
        let mut lo = 0.5 * self.mode;
        while self.slope(lo) <= 0.0 {
            lo *= 0.5;
        }
        self.bisect(lo, self.mode)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u = 1.0 - rng.random::<f64>();
            let v = self.v_minus + (self.v_plus - self.v_minus) * rng.random::<f64>();
            let x = v / u + self.shift;
            if x > 0.0 && 2.0 * u.ln() <= self.ln_g(x) {
                let y = if self.invert { 1.0 / x } else { x };
                return self.scale * y;
            }
        }
    }
}

pub fn sample_gig<R: Rng + ?Sized>(params: &GigParams, rng: &mut R) -> Result<f64> {
    Ok(GigSampler::new(params)?.sample(rng))
}

/// `μ + σ²γ + σ Δ^{1/2} ζ` with `Δ^{1/2}` the symmetric square root.
#[derive(Debug, Clone)]
pub struct HyperbolicSampler {
    mu: Vec<f64>,
    gamma: Vec<f64>,
    sqrt_delta: Vec<f64>,
    gig: GigSampler,
}

impl HyperbolicSampler {
    pub fn new(model: &HyperbolicModel) -> Result<Self> {
        let d = model.dimension();
        Ok(Self {
            mu: model.mu().to_vec(),
            gamma: model.gamma().to_vec(),
            sqrt_delta: linalg::symmetric_sqrt(d, model.delta().as_slice()),
            gig: GigSampler::new(model.gig())?,
        })
    }

    pub fn gig_sampler(&self) -> &GigSampler {
        &self.gig
    }
}

impl VectorSampler for HyperbolicSampler {
    fn dimension(&self) -> usize {
        self.mu.len()
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.mu.len();
        let s2 = self.gig.sample(rng);
        let s = s2.sqrt();
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        linalg::mat_vec(d, &self.sqrt_delta, &z, out);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.mu[i] + s2 * self.gamma[i] + s * *o;
        }
    }
}

pub fn sample_hyperbolic<R: Rng + ?Sized>(model: &HyperbolicModel, rng: &mut R) -> Result<Vec<f64>> {
    Ok(HyperbolicSampler::new(model)?.sample(rng))
}

/// Sample mean of a monomial with its standard error `sd / √n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
}

impl MomentEstimate {
    /// `(exact - value) / std_error`.
    pub fn z_score(&self, exact: f64) -> f64 {
        let diff = exact - self.value;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise merge.
    fn merge(self, other: Welford) -> Welford {
        if self.n == 0 {
            return other;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Welford {
            n,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * w,
        }
    }
}

/// Estimates several monomials from one stream of `n` draws.
///
/// `threads <= 1` runs on the calling thread; otherwise a dedicated rayon pool
/// of that size is used. The output does not depend on `threads`.
pub fn estimate_moments<S: VectorSampler>(
    sampler: &S,
    indices: &[MultiIndex],
    n: u64,
    stream: RandomStream,
    threads: usize,
) -> Result<Vec<MomentEstimate>> {
    if n < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 samples, got {n}")));
    }
    for index in indices {
        index.check_dimension(sampler.dimension())?;
    }
    let chunks = n.div_ceil(CHUNK_SIZE);
    let run_chunk = |c: u64| -> Vec<Welford> {
        let mut rng = stream.chunk_rng(c);
        let count = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
        let mut acc = vec![Welford::default(); indices.len()];
        let mut x = vec![0.0; sampler.dimension()];
        for _ in 0..count {
            sampler.sample_into(&mut rng, &mut x);
            for (a, index) in acc.iter_mut().zip(indices) {
                a.push(index.monomial(&x));
            }
        }
        debug_assert!(rng.get_word_pos() - (u128::from(c) << CHUNK_WORD_SHIFT) < 1 << CHUNK_WORD_SHIFT);
        acc
    };
    let per_chunk: Vec<Vec<Welford>> = if threads <= 1 {
        (0..chunks).map(run_chunk).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| (0..chunks).into_par_iter().map(run_chunk).collect())
    };
    let mut totals = vec![Welford::default(); indices.len()];
    for chunk in per_chunk {
        for (t, c) in totals.iter_mut().zip(chunk) {
            *t = t.merge(c);
        }
    }
    Ok(totals
        .into_iter()
        .map(|w| MomentEstimate {
            value: w.mean,
            std_error: (w.m2 / (w.n - 1) as f64).sqrt() / (w.n as f64).sqrt(),
            n: w.n,
        })
        .collect())
}

pub fn estimate_moment<S: VectorSampler>(
    sampler: &S,
    index: &MultiIndex,
    n: u64,
    stream: RandomStream,
    threads: usize,
) -> Result<MomentEstimate> {
    Ok(estimate_moments(sampler, std::slice::from_ref(index), n, stream, threads)?[0])
}

/// Kolmogorov–Smirnov statistic of sorted samples against CDF values at them.
pub fn ks_statistic(cdf_at_sorted: &[f64]) -> f64 {
    let n = cdf_at_sorted.len() as f64;
    cdf_at_sorted
        .iter()
        .enumerate()
        .map(|(i, &f)| ((i + 1) as f64 / n - f).max(f - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov critical value `√(-ln(α/2)/2) / √n`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-0.5 * (0.5 * alpha).ln()).sqrt() / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct KsOutcome {
    pub statistic: f64,
    pub critical: f64,
    pub acceptance: f64,
}

impl KsOutcome {
    pub fn passed(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// Draws `n` GIG variates and compares them with the quadrature CDF.
pub fn gig_ks_test(params: &GigParams, n: usize, alpha: f64, stream: RandomStream) -> Result<KsOutcome> {
    let sampler = GigSampler::new(params)?;
    let mut rng = stream.rng();
    let mut xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let cdf = gig_cdf_sorted(params, &xs)?;
    Ok(KsOutcome {
        statistic: ks_statistic(&cdf),
        critical: ks_critical_value(n, alpha),
        acceptance: sampler.acceptance_probability(),
    })
}
