mod common;

use common::*;
use isserlis::{
    gig_moment, hyperbolic_moment, location_mixture_moment, wick_moment, CovarianceMatrix, GigParams,
    HyperbolicModel, LocationMixtureModel, MixingDistribution, MultiIndex,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[test]
fn gauss_hermite_rule_is_exact_for_univariate_moments() {
    let cov = CovarianceMatrix::new(1, vec![2.0]).unwrap();
    for n in 0..=6 {
        let a = MultiIndex::new(vec![0; 2 * n], 1).unwrap();
        let want = (1..2 * n).step_by(2).product::<usize>() as f64 * 2f64.powi(n as i32);
        assert!(close(gh_moment(&a, &[0.0], &cov), want, want, 1e-12));
    }
}

#[test]
fn wick_matches_gauss_hermite() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for _ in 0..300 {
        let d = rng.random_range(1..=3);
        let len = rng.random_range(0..=8);
        let cov = random_cov(&mut rng, d);
        let a = random_index(&mut rng, d, len);
        let zero = vec![0.0; d];
        let got = wick_moment(&a, &cov).unwrap();
        let want = gh_moment(&a, &zero, &cov);
        let scale = gh_abs_moment(&a, &zero, &cov);
        assert!(close(got, want, scale, 1e-11), "{a} {got} {want}");
    }
}

#[test]
fn location_mixture_matches_gauss_hermite_over_atoms() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for _ in 0..200 {
        let d = rng.random_range(1..=3);
        let len = rng.random_range(0..=7);
        let cov = random_cov(&mut rng, d);
        let atoms = rng.random_range(1..=4);
        let locations: Vec<Vec<f64>> = (0..atoms)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let raw: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let head: f64 = probs[..atoms - 1].iter().sum();
        probs[atoms - 1] = 1.0 - head;
        let a = random_index(&mut rng, d, len);
        let model = LocationMixtureModel::new(
            MixingDistribution::discrete(locations.clone(), probs.clone()).unwrap(),
            cov.clone(),
        )
        .unwrap();
        let got = location_mixture_moment(&model, &a).unwrap();
        let mut want = 0.0;
        let mut scale = 0.0;
        for (m, p) in locations.iter().zip(&probs) {
            want += p * gh_moment(&a, m, &cov);
            scale += p * gh_abs_moment(&a, m, &cov);
        }
        assert!(close(got, want, scale, 1e-11), "{a} {got} {want}");
    }
}

#[test]
fn hyperbolic_matches_conditional_integration() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let grid = gig_grid();
    for case in 0..40 {
        let d = rng.random_range(1..=3);
        let len = rng.random_range(1..=5);
        let gig = grid[case * 2];
        let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let beta: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
        let model = HyperbolicModel::new(mu, beta, random_unit_det(&mut rng, d), gig).unwrap();
        let a = random_index(&mut rng, d, len);
        let got = hyperbolic_moment(&model, &a).unwrap();
        let want = hyperbolic_oracle(&model, &a);
        let scale = want.abs().max(gig_moment(&gig, len as u32).unwrap().powf(0.5));
        assert!(close(got, want, scale, 1e-9), "case {case} {a}: {got} vs {want}");
    }
}

#[test]
fn published_fixtures() {
    let r = CovarianceMatrix::new(
        4,
        vec![
            2.0, 0.3, -0.4, 0.5, //
            0.3, 1.5, 0.2, -0.1, //
            -0.4, 0.2, 1.8, 0.6, //
            0.5, -0.1, 0.6, 2.2,
        ],
    )
    .unwrap();
    let g = |i: usize, j: usize| r.get(i - 1, j - 1);
    let a = MultiIndex::from_one_based(&[1, 2, 3, 4], 4).unwrap();
    let want = g(1, 2) * g(3, 4) + g(1, 3) * g(2, 4) + g(1, 4) * g(2, 3);
    assert!(close(wick_moment(&a, &r).unwrap(), want, want.abs(), 1e-14));
    let a = MultiIndex::from_one_based(&[1, 1, 2, 4], 4).unwrap();
    let want = g(1, 1) * g(2, 4) + 2.0 * g(1, 2) * g(1, 4);
    assert!(close(wick_moment(&a, &r).unwrap(), want, want.abs(), 1e-14));

    // univariate Bernoulli mixture: E X^4 = μ^4 + 6μ^2σ^2 + 3σ^4
    let (mu, s2) = (1.5_f64, 0.7_f64);
    let model = LocationMixtureModel::new(
        MixingDistribution::bernoulli(vec![mu]).unwrap(),
        CovarianceMatrix::new(1, vec![s2]).unwrap(),
    )
    .unwrap();
    let a = MultiIndex::from_one_based(&[1, 1, 1, 1], 1).unwrap();
    let want = mu.powi(4) + 6.0 * mu * mu * s2 + 3.0 * s2 * s2;
    assert!(close(location_mixture_moment(&model, &a).unwrap(), want, want, 1e-14));
}

#[test]
fn hyperbolic_univariate_fourth_moment() {
    // μ = 0, β = 0: X = σ ζ, so E X^4 = 3 E σ^4
    let gig = GigParams::new(2.0, 1.0, 0.5).unwrap();
    let model = HyperbolicModel::new(vec![0.0], vec![0.0], CovarianceMatrix::identity(1).unwrap(), gig).unwrap();
    let a = MultiIndex::from_one_based(&[1, 1, 1, 1], 1).unwrap();
    let want = 3.0 * gig_moment(&gig, 2).unwrap();
    assert!(close(hyperbolic_moment(&model, &a).unwrap(), want, want, 1e-14));
}
