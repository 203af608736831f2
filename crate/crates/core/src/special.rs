//! Modified Bessel function `K_ν`, the generalized inverse Gaussian law and
//! its moments.
//!
//! `K_ν(x) = ∫_0^∞ exp(-x cosh t) cosh(νt) dt`. The integrand already decays
//! double-exponentially in `t`, so the plain trapezoidal rule on `[0, ∞)`
//! converges geometrically as the step is halved; no series or asymptotic
//! branches are used. Everything is carried in log space, which keeps large
//! orders at small arguments representable.
//!
//! The GIG moment oracle ([`gig_moment_quadrature`]) uses adaptive
//! Gauss–Kronrod on a log axis, so it shares no quadrature rule with `K_ν`.

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadOptions};

/// Terms below `peak · 1e-320` end the trapezoidal sum.
const LN_TRUNCATION: f64 = -736.8272081;
const BESSEL_REL_TOL: f64 = 1e-14;
const BESSEL_MAX_LEVELS: usize = 30;

fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln K_ν(x)` for `x > 0`.
pub fn ln_bessel_k(nu: f64, x: f64) -> Result<f64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("K_ν(x) needs finite x > 0, got {x}")));
    }
    if !nu.is_finite() {
        return Err(Error::Domain(format!("K_ν(x) needs a finite order, got {nu}")));
    }
    let nu = nu.abs();
    let phi = |t: f64| -x * t.cosh() + ln_cosh(nu * t);

    // φ'(t) = -x sinh t + ν tanh(νt) has at most one positive root, and none
    // when ν² <= x.
    let t_peak = if nu * nu <= x {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0_f64, (nu / x).asinh());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if -x * mid.sinh() + nu * (nu * mid).tanh() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let phi_peak = phi(t_peak);
    let curvature = (x * t_peak.cosh() - nu * nu / (nu * t_peak).cosh().powi(2)).abs();
    let width = if curvature > 0.0 { curvature.sqrt().recip() } else { 1.0 };

    // Σ exp(φ(t_k) - φ*) over t_k = (first + j·stride)·h, past the peak until
    // the truncation threshold.
    let strided_sum = |h: f64, first: usize, stride: usize| -> f64 {
        let mut sum = 0.0;
        let mut k = first;
        loop {
            let t = k as f64 * h;
            let rel = phi(t) - phi_peak;
            if t > t_peak && rel < LN_TRUNCATION {
                break;
            }
            sum += rel.exp();
            k += stride;
        }
        sum
    };

    let mut h = (0.5 * width).min(0.5);
    let mut total = h * (0.5 * (phi(0.0) - phi_peak).exp() + strided_sum(h, 1, 1));
    for level in 0..BESSEL_MAX_LEVELS {
        h *= 0.5;
        let refined = 0.5 * total + h * strided_sum(h, 1, 2);
        let converged = (refined - total).abs() <= BESSEL_REL_TOL * refined;
        total = refined;
        if converged && level >= 1 {
            return Ok(phi_peak + total.ln());
        }
    }
    Err(Error::QuadratureFailure {
        intervals: BESSEL_MAX_LEVELS,
        error_estimate: f64::NAN,
    })
}

/// Modified Bessel function of the second kind `K_ν(x)`, `x > 0`, any real
/// order. `K_{-ν} = K_ν` exactly. Returns [`Error::Overflow`] rather than
/// infinity when the value is not representable.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    let ln = ln_bessel_k(nu, x)?;
    if ln > f64::MAX.ln() {
        return Err(Error::Overflow(format!("K_{nu}({x}) = exp({ln:.3})")));
    }
    Ok(ln.exp())
}

/// Parameters of `GIG(ψ, χ, λ)`, density proportional to
/// `x^{λ-1} exp(-(χ/x + ψx)/2)` on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    psi: f64,
    chi: f64,
    lambda: f64,
}

impl GigParams {
    /// Requires `ψ > 0`, `χ > 0` and finite `λ`. The Gamma and inverse-Gamma
    /// boundary cases are not accepted.
    pub fn new(psi: f64, chi: f64, lambda: f64) -> Result<Self> {
        if !(psi > 0.0 && psi.is_finite()) {
            return Err(Error::InvalidParameter(format!("GIG ψ must be finite and > 0, got {psi}")));
        }
        if !(chi > 0.0 && chi.is_finite()) {
            return Err(Error::InvalidParameter(format!("GIG χ must be finite and > 0, got {chi}")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("GIG λ must be finite, got {lambda}")));
        }
        Ok(Self { psi, chi, lambda })
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `ω = √(ψχ)`, the Bessel argument.
    pub fn omega(&self) -> f64 {
        (self.psi * self.chi).sqrt()
    }

    /// `√(χ/ψ)`: `X / √(χ/ψ)` follows `GIG(ω, ω, λ)`.
    pub fn scale(&self) -> f64 {
        (self.chi / self.psi).sqrt()
    }

    pub fn mode(&self) -> f64 {
        let a = self.lambda - 1.0;
        let r = (a * a + self.psi * self.chi).sqrt();
        if a >= 0.0 {
            (a + r) / self.psi
        } else {
            self.chi / (r - a)
        }
    }

    /// Log of the normalizing constant `(ψ/χ)^{λ/2} / (2 K_λ(√(ψχ)))`.
    pub fn ln_normalizer(&self) -> Result<f64> {
        Ok(0.5 * self.lambda * (self.psi / self.chi).ln()
            - std::f64::consts::LN_2
            - ln_bessel_k(self.lambda, self.omega())?)
    }

    fn ln_kernel(&self, x: f64) -> f64 {
        (self.lambda - 1.0) * x.ln() - 0.5 * (self.chi / x + self.psi * x)
    }
}

/// GIG density at `x > 0`.
pub fn gig_density(params: &GigParams, x: f64) -> Result<f64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("GIG density needs finite x > 0, got {x}")));
    }
    Ok((params.ln_normalizer()? + params.ln_kernel(x)).exp())
}

/// `m_l = E[σ^{2l}] = (ψ/χ)^{-l/2} K_{λ+l}(√(ψχ)) / K_λ(√(ψχ))`, each Bessel
/// value evaluated directly. `m_0 = 1` exactly.
pub fn gig_moment(params: &GigParams, l: u32) -> Result<f64> {
    if l == 0 {
        return Ok(1.0);
    }
    let w = params.omega();
    let ln = 0.5 * l as f64 * (params.chi / params.psi).ln() + ln_bessel_k(params.lambda + l as f64, w)?
        - ln_bessel_k(params.lambda, w)?;
    if ln > f64::MAX.ln() {
        return Err(Error::Overflow(format!("GIG moment of order {l} = exp({ln:.3})")));
    }
    Ok(ln.exp())
}

/// `m_0, …, m_max` in one pass.
///
/// Orders with `λ + l < 0` are evaluated directly. From the first
/// non-negative order on, two direct evaluations seed the upward recurrence
/// `K_{ν+1} = K_{ν-1} + (2ν/ω) K_ν`, whose terms are all positive there.
pub fn gig_moments(params: &GigParams, max_order: u32) -> Result<Vec<f64>> {
    let w = params.omega();
    let lam = params.lambda;
    let ln_k_lam = ln_bessel_k(lam, w)?;
    let ratio = |l: u32| -> Result<f64> { Ok((ln_bessel_k(lam + l as f64, w)? - ln_k_lam).exp()) };

    // r_l = K_{λ+l} / K_λ
    let first_nonneg = if lam >= 0.0 { 0 } else { (-lam).ceil() as u32 };
    let mut r = Vec::with_capacity(max_order as usize + 1);
    for l in 0..=max_order {
        let v = if l == 0 {
            1.0
        } else if l <= first_nonneg + 1 {
            ratio(l)?
        } else {
            let nu = lam + (l - 1) as f64;
            r[l as usize - 2] + 2.0 * nu / w * r[l as usize - 1]
        };
        r.push(v);
    }
    let s = params.chi / params.psi;
    let mut out = Vec::with_capacity(r.len());
    for (l, rl) in r.into_iter().enumerate() {
        let m = if l == 0 { 1.0 } else { s.powf(0.5 * l as f64) * rl };
        if !m.is_finite() {
            return Err(Error::Overflow(format!("GIG moment of order {l}")));
        }
        out.push(m);
    }
    Ok(out)
}

/// Log-axis integrand `x^{l} f(x) · x` at `x = e^u`, centred on its peak.
struct LogAxis {
    a: f64,
    psi: f64,
    chi: f64,
    u_peak: f64,
    ln_peak: f64,
}

impl LogAxis {
    fn new(params: &GigParams, power: f64) -> Self {
        // exponent of e^u is λ + power; ln g(u) is strictly concave
        let a = params.lambda + power;
        let r = (a * a + params.psi * params.chi).sqrt();
        let x_peak = if a >= 0.0 { (a + r) / params.psi } else { params.chi / (r - a) };
        let u_peak = x_peak.ln();
        let mut axis = Self {
            a,
            psi: params.psi,
            chi: params.chi,
            u_peak,
            ln_peak: 0.0,
        };
        axis.ln_peak = axis.ln_g(u_peak);
        axis
    }

    fn ln_g(&self, u: f64) -> f64 {
        self.a * u - 0.5 * (self.chi * (-u).exp() + self.psi * u.exp())
    }

    fn rel(&self, u: f64) -> f64 {
        (self.ln_g(u) - self.ln_peak).exp()
    }

    /// `[lo, hi]` outside of which the integrand is below `e^{-60}` of its peak.
    fn bracket(&self) -> (f64, f64) {
        let reach = |dir: f64| {
            let mut step = 1.0;
            while self.ln_g(self.u_peak + dir * step) - self.ln_peak > -60.0 {
                step *= 1.5;
            }
            self.u_peak + dir * step
        };
        (reach(-1.0), reach(1.0))
    }
}

fn quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// `∫_0^∞ x^l f(x) dx` by adaptive Gauss–Kronrod on `u = ln x`. Independent
/// of [`gig_moment`]'s Bessel ratio apart from the density's normalizing
/// constant.
pub fn gig_moment_quadrature(params: &GigParams, l: u32) -> Result<f64> {
    let axis = LogAxis::new(params, l as f64);
    let (lo, hi) = axis.bracket();
    let q = quadrature::integrate(|u| axis.rel(u), lo, hi, quad_options())?;
    Ok((params.ln_normalizer()? + axis.ln_peak).exp() * q.value)
}

/// GIG distribution function at each of the sorted points `xs`, by
/// integrating the density between consecutive points.
pub fn gig_cdf_sorted(params: &GigParams, xs: &[f64]) -> Result<Vec<f64>> {
    if xs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("CDF points must be sorted".into()));
    }
    if xs.first().is_some_and(|&x| x.is_nan() || x <= 0.0) {
        return Err(Error::Domain("CDF points must be positive".into()));
    }
    let axis = LogAxis::new(params, 0.0);
    let (lo, hi) = axis.bracket();
    let scale = (params.ln_normalizer()? + axis.ln_peak).exp();
    let mut out = Vec::with_capacity(xs.len());
    let mut u_prev = lo;
    let mut acc = 0.0;
    for &x in xs {
        let u = x.ln().clamp(lo, hi);
        if u > u_prev {
            let opts = QuadOptions {
                abs_tol: 1e-15 / scale,
                ..quad_options()
            };
            acc += quadrature::integrate(|v| axis.rel(v), u_prev, u, opts)?.value;
            u_prev = u;
        }
        out.push((scale * acc).min(1.0));
    }
    Ok(out)
}

pub fn gig_cdf(params: &GigParams, x: f64) -> Result<f64> {
    Ok(gig_cdf_sorted(params, &[x])?[0])
}
