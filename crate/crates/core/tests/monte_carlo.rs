mod common;

use common::*;
use isserlis::sampling::{gig_ks_test, HyperbolicSampler, LocationMixtureSampler};
use isserlis::{
    estimate_moments, hyperbolic_moment, location_mixture_moment, wick_moment, GaussianSampler, HyperbolicModel,
    LocationMixtureModel, MixingDistribution, MultiIndex, RandomStream,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const N: u64 = 200_000;

fn indices<R: Rng>(rng: &mut R, d: usize) -> Vec<MultiIndex> {
    (1..=5).map(|len| random_index(rng, d, len)).collect()
}

fn check(exact: &[f64], est: &[isserlis::MomentEstimate]) {
    for (e, m) in exact.iter().zip(est) {
        assert!(m.z_score(*e).abs() <= 5.0, "exact {e}, estimate {m:?}");
    }
}

#[test]
fn gaussian_concordance() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    for d in 1..=3 {
        let cov = random_cov(&mut rng, d);
        let ix = indices(&mut rng, d);
        let exact: Vec<f64> = ix.iter().map(|a| wick_moment(a, &cov).unwrap()).collect();
        let est = estimate_moments(&GaussianSampler::new(&cov).unwrap(), &ix, N, RandomStream::new(1, d as u64), 2).unwrap();
        check(&exact, &est);
    }
}

#[test]
fn location_mixture_concordance() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for d in 1..=3 {
        let cov = random_cov(&mut rng, d);
        let mixing = MixingDistribution::discrete(
            vec![vec![1.0; d], vec![-0.5; d], (0..d).map(|i| i as f64 - 1.0).collect()],
            vec![0.3, 0.5, 0.2],
        )
        .unwrap();
        let model = LocationMixtureModel::new(mixing, cov).unwrap();
        let ix = indices(&mut rng, d);
        let exact: Vec<f64> = ix.iter().map(|a| location_mixture_moment(&model, a).unwrap()).collect();
        let est = estimate_moments(&LocationMixtureSampler::new(&model).unwrap(), &ix, N, RandomStream::new(2, d as u64), 2).unwrap();
        check(&exact, &est);
    }
}

#[test]
fn hyperbolic_concordance() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let grid = gig_grid();
    for d in 1..=3 {
        let gig = grid[17 * d];
        let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let beta: Vec<f64> = (0..d).map(|_| rng.random_range(-0.3..0.3)).collect();
        let model = HyperbolicModel::new(mu, beta, random_unit_det(&mut rng, d), gig).unwrap();
        let ix = indices(&mut rng, d);
        let exact: Vec<f64> = ix.iter().map(|a| hyperbolic_moment(&model, a).unwrap()).collect();
        let est = estimate_moments(&HyperbolicSampler::new(&model).unwrap(), &ix, N, RandomStream::new(3, d as u64), 2).unwrap();
        check(&exact, &est);
    }
}

#[test]
fn gig_sampler_passes_ks_on_grid() {
    for (k, p) in gig_grid().iter().enumerate() {
        let out = gig_ks_test(p, 100_000, 1e-3, RandomStream::new(4, k as u64)).unwrap();
        assert!(out.passed(), "{p:?}: {out:?}");
    }
}
