#![allow(dead_code)]

use isserlis::quadrature::{integrate, QuadOptions};
use isserlis::{gig_density, CovarianceMatrix, GigParams, HyperbolicModel, MultiIndex};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

/// Probabilists' Gauss–Hermite rule (weights sum to 1) by Golub–Welsch.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let nodes = eig.eigenvalues.iter().copied().collect();
    let weights = (0..n).map(|i| eig.eigenvectors[(0, i)].powi(2)).collect();
    (nodes, weights)
}

fn sqrt_psd(cov: &CovarianceMatrix) -> DMatrix<f64> {
    let d = cov.dimension();
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, cov.as_slice()));
    let s = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * s * eig.eigenvectors.transpose()
}

/// `E f(m + R^{1/2} z)` on a tensor Gauss–Hermite grid; exact for
/// polynomials of total degree below `2 * nodes`.
pub fn gaussian_expectation(mean: &[f64], cov: &CovarianceMatrix, nodes: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let d = mean.len();
    let root = sqrt_psd(cov);
    let (z, w) = gauss_hermite(nodes);
    let mut digits = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let weight: f64 = digits.iter().map(|&k| w[k]).product();
        for i in 0..d {
            x[i] = mean[i] + (0..d).map(|j| root[(i, j)] * z[digits[j]]).sum::<f64>();
        }
        total += weight * f(&x);
        let mut pos = 0;
        loop {
            if pos == d {
                return total;
            }
            digits[pos] += 1;
            if digits[pos] < nodes {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

pub fn gh_moment(index: &MultiIndex, mean: &[f64], cov: &CovarianceMatrix) -> f64 {
    gaussian_expectation(mean, cov, index.len() / 2 + 1, |x| index.monomial(x))
}

/// `E|X_A|`-style magnitude used to scale tolerances against cancellation.
pub fn gh_abs_moment(index: &MultiIndex, mean: &[f64], cov: &CovarianceMatrix) -> f64 {
    gaussian_expectation(mean, cov, 8, |x| index.monomial(x).abs())
}

/// Hyperbolic moment by integrating the conditional Gaussian moment against
/// the GIG density, in `u = ln σ²` over unit panels.
pub fn hyperbolic_oracle(model: &HyperbolicModel, index: &MultiIndex) -> f64 {
    let d = model.dimension();
    let conditional = |w: f64| {
        let mean: Vec<f64> = (0..d).map(|i| model.mu()[i] + w * model.gamma()[i]).collect();
        gh_moment(index, &mean, &model.delta().scaled(w))
    };
    let g = |u: f64| {
        let w = u.exp();
        let dens = gig_density(model.gig(), w).unwrap();
        if dens == 0.0 {
            0.0
        } else {
            dens * w * conditional(w)
        }
    };
    let opts = QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        max_intervals: 500,
    };
    let centre = model.gig().scale().ln();
    (-40..40)
        .map(|k| integrate(g, centre + k as f64, centre + k as f64 + 1.0, opts).unwrap().value)
        .sum()
}

pub fn random_cov<R: Rng>(rng: &mut R, d: usize) -> CovarianceMatrix {
    let b: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut data = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            data[i * d + j] = (0..d).map(|k| b[i * d + k] * b[j * d + k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
        }
    }
    CovarianceMatrix::new(d, data).unwrap()
}

/// `Δ` with unit determinant.
pub fn random_unit_det<R: Rng>(rng: &mut R, d: usize) -> CovarianceMatrix {
    let r = random_cov(rng, d);
    let c = r.determinant().powf(-1.0 / d as f64);
    r.scaled(c)
}

pub fn random_index<R: Rng>(rng: &mut R, d: usize, len: usize) -> MultiIndex {
    MultiIndex::new((0..len).map(|_| rng.random_range(0..d)).collect(), d).unwrap()
}

pub fn gig_grid() -> Vec<GigParams> {
    let mut out = Vec::new();
    for psi in [0.5, 1.0, 2.0, 5.0] {
        for chi in [0.5, 1.0, 2.0, 5.0] {
            for lambda in [-2.0, -0.5, 0.0, 0.5, 3.0] {
                out.push(GigParams::new(psi, chi, lambda).unwrap());
            }
        }
    }
    out
}

pub fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(f64::MIN_POSITIVE)
}
