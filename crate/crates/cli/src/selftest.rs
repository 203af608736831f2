//! Deterministic property suites behind `isserlis selftest`.
//!
//! Every suite draws its random cases from ChaCha20 seeded by the run seed,
//! and the Monte Carlo suite uses the thread-count independent estimator, so
//! the rendered table is a pure function of the seed. No timings are printed.

use std::fmt::Write as _;

use isserlis::combinatorics::{binomial, pairing_count};
use isserlis::hyperbolic::variance_mean_mixture_moment;
use isserlis::special::gig_moments;
use isserlis::{
    bessel_k, enumerate_pairings, enumerate_subsets, estimate_moments, gig_moment, gig_moment_quadrature,
    hyperbolic_moment, location_mixture_moment, location_mixture_moment_independent, wick_moment, CovarianceMatrix,
    GaussianSampler, GigParams, HyperbolicModel, HyperbolicSampler, LocationMixtureModel, LocationMixtureSampler,
    MixingDistribution, MultiIndex, RandomStream,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::record::{ResultRecord, Timing};
use crate::run::{agreement, Z_BAND};
use crate::spec::{ModelKind, ProblemSpec};

/// Deliberate corruptions used to check that the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    AsymmetricCovariance,
}

#[derive(Debug, Clone, Copy)]
pub struct SelftestConfig {
    pub seed: u64,
    pub threads: usize,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            cases: 0,
            max_error: 0.0,
            tolerance,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, label: impl FnOnce() -> String, error: f64) {
        self.cases += 1;
        if error.is_nan() || error > self.tolerance {
            self.failures.push(format!("{}: error {error:.3e}", label()));
        }
        if error > self.max_error || error.is_nan() {
            self.max_error = error;
        }
    }

    fn fail(&mut self, message: String) {
        self.cases += 1;
        self.failures.push(message);
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    let s = scale.abs();
    if s == 0.0 {
        (a - b).abs()
    } else {
        (a - b).abs() / s
    }
}

fn random_rows(rng: &mut ChaCha20Rng, d: usize) -> Vec<Vec<f64>> {
    let b: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| b[i * d + k] * b[j * d + k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 })
                .collect()
        })
        .collect()
}

fn random_cov(rng: &mut ChaCha20Rng, d: usize) -> CovarianceMatrix {
    CovarianceMatrix::from_rows(&random_rows(rng, d)).expect("Gram matrix is a covariance")
}

fn abs_cov(r: &CovarianceMatrix) -> CovarianceMatrix {
    CovarianceMatrix::symmetric(r.dimension(), r.as_slice().iter().map(|v| v.abs()).collect()).unwrap()
}

fn random_index(rng: &mut ChaCha20Rng, d: usize, len: usize) -> MultiIndex {
    MultiIndex::new((0..len).map(|_| rng.random_range(0..d)).collect(), d).unwrap()
}

fn unit_det(r: CovarianceMatrix) -> CovarianceMatrix {
    let c = r.determinant().powf(-1.0 / r.dimension() as f64);
    r.scaled(c)
}

fn gig_grid() -> Vec<GigParams> {
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

fn pairing_counts() -> SuiteReport {
    let mut s = SuiteReport::new("pairing-counts", 0.0);
    for n in (0..=12).step_by(2) {
        let positions: Vec<usize> = (0..n).collect();
        let got = enumerate_pairings(&positions).map(|p| p.count() as u128).unwrap_or(u128::MAX);
        s.check(|| format!("pairings of {n}"), (got != pairing_count(n)) as u8 as f64);
    }
    for n in 0..=12 {
        for k in 0..=n {
            let got = enumerate_subsets(n, k).count() as u128;
            s.check(|| format!("C({n},{k})"), (got != binomial(n, k)) as u8 as f64);
        }
    }
    s
}

fn wick_fixtures(rng: &mut ChaCha20Rng, fault: Option<Fault>) -> SuiteReport {
    let mut s = SuiteReport::new("wick-fixtures", 1e-12);
    let a = MultiIndex::from_one_based(&[1, 2, 3, 4], 4).unwrap();
    let b = MultiIndex::from_one_based(&[1, 1, 2, 4], 4).unwrap();
    for case in 0..100 {
        let mut rows = random_rows(rng, 4);
        if fault == Some(Fault::AsymmetricCovariance) && case == 0 {
            rows[0][1] += 0.25;
        }
        let r = match CovarianceMatrix::from_rows(&rows) {
            Ok(r) => r,
            Err(e) => {
                s.fail(format!("case {case}: covariance rejected: {e}"));
                continue;
            }
        };
        let g = |i: usize, j: usize| r.get(i - 1, j - 1);
        let want = g(1, 2) * g(3, 4) + g(1, 3) * g(2, 4) + g(1, 4) * g(2, 3);
        let scale = (g(1, 2) * g(3, 4)).abs() + (g(1, 3) * g(2, 4)).abs() + (g(1, 4) * g(2, 3)).abs();
        s.check(|| format!("case {case} (1,2,3,4)"), rel(wick_moment(&a, &r).unwrap(), want, scale));
        let want = g(1, 1) * g(2, 4) + 2.0 * g(1, 2) * g(1, 4);
        let scale = (g(1, 1) * g(2, 4)).abs() + (2.0 * g(1, 2) * g(1, 4)).abs();
        s.check(|| format!("case {case} (1,1,2,4)"), rel(wick_moment(&b, &r).unwrap(), want, scale));
    }
    s
}

fn univariate(rng: &mut ChaCha20Rng) -> SuiteReport {
    let mut s = SuiteReport::new("univariate-closed-form", 1e-12);
    for n in 0..=6usize {
        let v = rng.random_range(0.2..3.0);
        let r = CovarianceMatrix::new(1, vec![v]).unwrap();
        let a = MultiIndex::new(vec![0; 2 * n], 1).unwrap();
        let want = pairing_count(2 * n) as f64 * v.powi(n as i32);
        s.check(|| format!("N = {n}"), rel(wick_moment(&a, &r).unwrap(), want, want));
    }
    s
}

fn mixture_reductions(rng: &mut ChaCha20Rng) -> SuiteReport {
    let mut s = SuiteReport::new("mixture-reductions", 1e-12);
    for case in 0..100 {
        let d = rng.random_range(1..=4);
        let r = random_cov(rng, d);
        let len = rng.random_range(0..=7);
        let a = random_index(rng, d, len);
        let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let neg: Vec<f64> = mu.iter().map(|v| -v).collect();

        let zero = LocationMixtureModel::new(MixingDistribution::deterministic(vec![0.0; d]).unwrap(), r.clone()).unwrap();
        let w = wick_moment(&a, &r).unwrap();
        let bound = wick_moment(&a, &abs_cov(&r)).unwrap();
        s.check(|| format!("case {case} zero location {a}"), rel(location_mixture_moment(&zero, &a).unwrap(), w, bound));

        let bern = LocationMixtureModel::new(MixingDistribution::bernoulli(mu.clone()).unwrap(), r.clone()).unwrap();
        let atoms = LocationMixtureModel::new(
            MixingDistribution::discrete(vec![mu.clone(), neg], vec![0.5, 0.5]).unwrap(),
            r.clone(),
        )
        .unwrap();
        let x = location_mixture_moment(&bern, &a).unwrap();
        let y = location_mixture_moment(&atoms, &a).unwrap();
        let shifted = LocationMixtureModel::new(
            MixingDistribution::deterministic(mu.iter().map(|v| v.abs()).collect()).unwrap(),
            abs_cov(&r),
        )
        .unwrap();
        let scale = location_mixture_moment(&shifted, &a).unwrap();
        s.check(|| format!("case {case} bernoulli vs atoms {a}"), rel(x, y, scale));
        if a.len() % 2 == 1 {
            s.check(|| format!("case {case} bernoulli odd {a}"), x.abs());
        }
    }
    s
}

fn formula_agreement(rng: &mut ChaCha20Rng) -> SuiteReport {
    let mut s = SuiteReport::new("mixture-formula-agreement", 1e-12);
    for case in 0..100 {
        let d = rng.random_range(1..=5);
        let r = random_cov(rng, d);
        let marginals: Vec<Vec<(f64, f64)>> = (0..d)
            .map(|_| {
                let p = rng.random_range(0.05..0.95);
                vec![(rng.random_range(-2.0..2.0), p), (rng.random_range(-2.0..2.0), 1.0 - p)]
            })
            .collect();
        let model = LocationMixtureModel::new(MixingDistribution::product_of_marginals(&marginals).unwrap(), r).unwrap();
        let len = rng.random_range(0..=d);
        let mut comps: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            comps.swap(i, rng.random_range(0..=i));
        }
        let a = MultiIndex::new(comps[..len].to_vec(), d).unwrap();
        let x = location_mixture_moment(&model, &a).unwrap();
        let y = location_mixture_moment_independent(&model, &a).unwrap();
        s.check(|| format!("case {case} {a}"), rel(x, y, x.abs().max(1.0)));
    }
    s
}

fn bessel_identities() -> SuiteReport {
    let mut s = SuiteReport::new("bessel-identities", 1e-10);
    let pi = std::f64::consts::PI;
    for k in 0..=25 {
        let x = 10f64.powf(-3.0 + 5.0 * k as f64 / 25.0);
        let half = (pi / (2.0 * x)).sqrt() * (-x).exp();
        s.check(|| format!("K_1/2({x:e})"), rel(bessel_k(0.5, x).unwrap(), half, half));
        let three_half = half * (1.0 + 1.0 / x);
        s.check(|| format!("K_3/2({x:e})"), rel(bessel_k(1.5, x).unwrap(), three_half, three_half));
        for nu in [0.0, 0.3, 1.0, 2.5, 7.0, 12.75] {
            let (Ok(lo), Ok(mid), Ok(hi)) = (bessel_k(nu - 1.0, x), bessel_k(nu, x), bessel_k(nu + 1.0, x)) else {
                continue;
            };
            s.check(|| format!("recurrence nu={nu} x={x:e}"), rel(hi, lo + 2.0 * nu / x * mid, hi));
            let sym = bessel_k(-nu, x).unwrap().to_bits() != mid.to_bits();
            s.check(|| format!("symmetry nu={nu} x={x:e}"), sym as u8 as f64);
        }
    }
    s
}

fn gig_checks() -> SuiteReport {
    let mut s = SuiteReport::new("gig-moments", 1e-8);
    for p in gig_grid() {
        let label = format!("psi={} chi={} lambda={}", p.psi(), p.chi(), p.lambda());
        s.check(|| format!("{label} m0"), (gig_moment(&p, 0).unwrap() != 1.0) as u8 as f64);
        let m = gig_moments(&p, 8).unwrap();
        for l in [1, 4, 8] {
            let q = gig_moment_quadrature(&p, l).unwrap();
            s.check(|| format!("{label} quadrature l={l}"), rel(m[l as usize], q, q));
        }
        let (psi, chi, lam) = (p.psi(), p.chi(), p.lambda());
        for l in 1..8 {
            let want = chi / psi * m[l - 1] + 2.0 * (lam + l as f64) / psi * m[l];
            s.check(|| format!("{label} recurrence l={l}"), rel(m[l + 1], want, m[l + 1]));
        }
    }
    s
}

fn frozen_scale(rng: &mut ChaCha20Rng) -> SuiteReport {
    let mut s = SuiteReport::new("hyperbolic-frozen-scale", 1e-10);
    for case in 0..50 {
        let d = rng.random_range(1..=3);
        let delta = random_cov(rng, d);
        let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gamma: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: f64 = rng.random_range(0.1..3.0);
        let len = rng.random_range(0..=6);
        let a = random_index(rng, d, len);
        let powers: Vec<f64> = (0..=a.len()).map(|k| w.powi(k as i32)).collect();
        let x = variance_mean_mixture_moment(&mu, &gamma, &delta, &powers, &a).unwrap();
        let shifted: Vec<f64> = (0..d).map(|i| mu[i] + w * gamma[i]).collect();
        let model =
            LocationMixtureModel::new(MixingDistribution::deterministic(shifted).unwrap(), delta.scaled(w)).unwrap();
        let y = location_mixture_moment(&model, &a).unwrap();
        let abs_mean: Vec<f64> = (0..d).map(|i| mu[i].abs() + w * gamma[i].abs()).collect();
        let bound = LocationMixtureModel::new(
            MixingDistribution::deterministic(abs_mean).unwrap(),
            abs_cov(&delta.scaled(w)),
        )
        .unwrap();
        let scale = location_mixture_moment(&bound, &a).unwrap();
        s.check(|| format!("case {case} {a}"), rel(x, y, scale));
    }
    s
}

fn documents() -> SuiteReport {
    let mut s = SuiteReport::new("document-round-trip", 0.0);
    let spec_text = r#"{"spec_version": 1, "model": "location_mixture", "dimension": 2, "index_set": [1, 2, 2],
        "params": {"covariance": [[1, 0.3], [0.3, 2]],
                   "mixing": {"kind": "discrete", "locations": [[1, -1], [0.5, 2]], "probabilities": [0.25, 0.75]}}}"#;
    let spec = match ProblemSpec::from_json(spec_text) {
        Ok(spec) => spec,
        Err(e) => {
            s.fail(format!("spec parse: {e}"));
            return s;
        }
    };
    let reparsed = ProblemSpec::from_json(&spec.to_json());
    s.check(|| "spec round trip".into(), (reparsed.ok().as_ref() != Some(&spec)) as u8 as f64);
    let record = ResultRecord {
        model: ModelKind::LocationMixture,
        index_set: spec.index_set.clone(),
        exact: 1.0 / 3.0,
        terms: 4,
        mc: None,
        agreement: None,
        timing: Timing {
            exact_ms: 0.0,
            mc_ms: None,
        },
    };
    let back = ResultRecord::from_json(&record.to_json());
    s.check(|| "record round trip".into(), (back.ok().as_ref() != Some(&record)) as u8 as f64);
    s
}

fn monte_carlo(rng: &mut ChaCha20Rng, seed: u64, threads: usize) -> SuiteReport {
    const SAMPLES: u64 = 100_000;
    let mut s = SuiteReport::new("monte-carlo", Z_BAND);
    let d = 2;
    let indices: Vec<MultiIndex> = (1..=4).map(|len| random_index(rng, d, len)).collect();
    let r = random_cov(rng, d);
    let mixture = LocationMixtureModel::new(
        MixingDistribution::discrete(vec![vec![1.0, -0.5], vec![-0.5, 0.25]], vec![1.0 / 3.0, 2.0 / 3.0]).unwrap(),
        r.clone(),
    )
    .unwrap();
    let hyper = HyperbolicModel::new(vec![0.2, -0.1], vec![0.3, 0.1], unit_det(r.clone()), gig_grid()[27]).unwrap();

    let mut judge = |family: &str, exact: Vec<f64>, est: isserlis::Result<Vec<isserlis::MomentEstimate>>| match est {
        Ok(est) => {
            for ((a, e), m) in indices.iter().zip(exact).zip(est) {
                let z = agreement(e, &m).z.map_or(f64::INFINITY, f64::abs);
                s.check(|| format!("{family} {a}"), z);
            }
        }
        Err(err) => s.fail(format!("{family}: {err}")),
    };
    let stream = |id| RandomStream::new(seed, id);
    judge(
        "gaussian",
        indices.iter().map(|a| wick_moment(a, &r).unwrap()).collect(),
        estimate_moments(&GaussianSampler::new(&r).unwrap(), &indices, SAMPLES, stream(1), threads),
    );
    judge(
        "location_mixture",
        indices.iter().map(|a| location_mixture_moment(&mixture, a).unwrap()).collect(),
        estimate_moments(&LocationMixtureSampler::new(&mixture).unwrap(), &indices, SAMPLES, stream(2), threads),
    );
    judge(
        "hyperbolic",
        indices.iter().map(|a| hyperbolic_moment(&hyper, a).unwrap()).collect(),
        estimate_moments(&HyperbolicSampler::new(&hyper).unwrap(), &indices, SAMPLES, stream(3), threads),
    );
    s
}

pub fn run_selftest(cfg: SelftestConfig) -> Vec<SuiteReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    vec![
        pairing_counts(),
        wick_fixtures(&mut rng, cfg.fault),
        univariate(&mut rng),
        mixture_reductions(&mut rng),
        formula_agreement(&mut rng),
        bessel_identities(),
        gig_checks(),
        frozen_scale(&mut rng),
        documents(),
        monte_carlo(&mut rng, cfg.seed, cfg.threads),
    ]
}

pub fn render(seed: u64, reports: &[SuiteReport]) -> String {
    let mut out = String::new();
    writeln!(out, "isserlis selftest, seed {seed}").unwrap();
    writeln!(out, "{:<26} {:>6} {:>11} {:>11}  status", "suite", "cases", "max error", "tolerance").unwrap();
    for r in reports {
        writeln!(
            out,
            "{:<26} {:>6} {:>11.3e} {:>11.3e}  {}",
            r.name,
            r.cases,
            r.max_error,
            r.tolerance,
            if r.passed() { "PASS" } else { "FAIL" }
        )
        .unwrap();
        for f in r.failures.iter().take(10) {
            writeln!(out, "    {f}").unwrap();
        }
        if r.failures.len() > 10 {
            writeln!(out, "    ... {} more", r.failures.len() - 10).unwrap();
        }
    }
    let passed = reports.iter().filter(|r| r.passed()).count();
    writeln!(out, "{passed}/{} suites passed", reports.len()).unwrap();
    out
}
