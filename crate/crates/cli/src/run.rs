//! Dispatch from a spec to the moment engines and the Monte Carlo check.

use std::time::Instant;

use isserlis::gaussian::{self, wick_moment_with};
use isserlis::hyperbolic::{self, DET_TOLERANCE};
use isserlis::mixtures::{self, location_mixture_moment_cached};
use isserlis::{
    estimate_moment, hyperbolic_moment, location_mixture_moment_independent, GaussianSampler, HyperbolicSampler,
    LocationMixtureSampler, MomentEstimate, RandomStream, VectorSampler, WickCache,
};
use thiserror::Error;

use crate::record::{Agreement, McSummary, ResultRecord, Timing, Verdict};
use crate::spec::{Formula, Model, ModelKind, ProblemSpec, SpecError};

/// Half-width of the acceptance band in standard errors.
pub const Z_BAND: f64 = 5.0;
/// Above this `se / |exact|` the Monte Carlo check is reported inconclusive.
pub const INCONCLUSIVE_RELATIVE_SE: f64 = 0.5;
/// Hard ceiling for `--max-index-size`; term counts beyond it are astronomical.
pub const MAX_INDEX_SIZE_CEILING: usize = 40;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Spec(#[from] SpecError),

    #[error(
        "refusing |A| = {len} (max index size {max}): about {terms:.3e} terms would be folded; \
         raise --max-index-size to proceed"
    )]
    SizeGuard { len: usize, max: usize, terms: f64 },

    #[error("{0}")]
    Engine(#[from] isserlis::Error),

    #[error("invalid option: {0}")]
    Option(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::SizeGuard { .. } => 3,
            _ => 2,
        }
    }
}

fn double_factorial_f64(n: usize) -> f64 {
    // (n-1)!! for even n, 0 for odd n
    if n % 2 == 1 {
        return 0.0;
    }
    (1..n).step_by(2).map(|k| k as f64).product()
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// Floating-point term estimate, usable for any `n`.
pub fn estimated_terms(kind: ModelKind, n: usize) -> f64 {
    match kind {
        ModelKind::Gaussian => double_factorial_f64(n),
        ModelKind::LocationMixture => (n % 2..=n)
            .step_by(2)
            .map(|s| binomial_f64(n, s) * double_factorial_f64(n - s))
            .sum(),
        ModelKind::Hyperbolic => (n % 2..=n)
            .step_by(2)
            .map(|s| binomial_f64(n, s) * 2f64.powi(s as i32) * double_factorial_f64(n - s))
            .sum(),
    }
}

fn check_size(spec: &ProblemSpec) -> Result<(), RunError> {
    let max = spec.options.max_index_size;
    if max > MAX_INDEX_SIZE_CEILING {
        return Err(RunError::Option(format!(
            "max index size {max} exceeds the ceiling {MAX_INDEX_SIZE_CEILING}"
        )));
    }
    let len = spec.index_set.len();
    if len > max {
        return Err(RunError::SizeGuard {
            len,
            max,
            terms: estimated_terms(spec.kind(), len),
        });
    }
    Ok(())
}

/// Non-fatal remarks about a spec, e.g. a lenient determinant check.
pub fn warnings(spec: &ProblemSpec) -> Vec<String> {
    let mut out = Vec::new();
    if let Ok(Model::Hyperbolic(m)) = spec.build() {
        if m.det_deviation() > DET_TOLERANCE {
            out.push(format!(
                "warning: |det Δ - 1| = {:.3e} exceeds {DET_TOLERANCE:e}; Δ is used as given (pass --strict-det to reject)",
                m.det_deviation()
            ));
        }
    }
    out
}

fn exact_value(spec: &ProblemSpec, model: &Model) -> Result<(f64, u128), RunError> {
    let index = spec.index();
    let n = index.len();
    let summation = spec.options.summation.into();
    Ok(match model {
        Model::Gaussian(cov) => (wick_moment_with(&index, cov, summation)?, gaussian::term_count(n)),
        Model::LocationMixture(m, Formula::General) => (
            location_mixture_moment_cached(m, &index, &mut WickCache::with_summation(summation))?,
            mixtures::term_count(n),
        ),
        Model::LocationMixture(m, Formula::Independent) => {
            (location_mixture_moment_independent(m, &index)?, mixtures::term_count(n))
        }
        Model::Hyperbolic(m) => (hyperbolic_moment(m, &index)?, hyperbolic::term_count(n)),
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Exact moment with term count and timing.
pub fn run_moment(spec: &ProblemSpec) -> Result<ResultRecord, RunError> {
    check_size(spec)?;
    let model = spec.build()?;
    let start = Instant::now();
    let (exact, terms) = exact_value(spec, &model)?;
    Ok(ResultRecord {
        model: spec.kind(),
        index_set: spec.index_set.clone(),
        exact,
        terms,
        mc: None,
        agreement: None,
        timing: Timing {
            exact_ms: elapsed_ms(start),
            mc_ms: None,
        },
    })
}

/// Judges an estimate against the exact value.
pub fn agreement(exact: f64, est: &MomentEstimate) -> Agreement {
    let z = Some(est.z_score(exact)).filter(|z| z.is_finite());
    // an exact zero is structural and is always z-tested
    let relative_se = (exact != 0.0).then(|| est.std_error / exact.abs());
    let verdict = if relative_se.is_some_and(|r| r > INCONCLUSIVE_RELATIVE_SE) {
        Verdict::Inconclusive
    } else if z.is_some_and(|z| z.abs() <= Z_BAND) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Agreement {
        z,
        relative_se,
        verdict,
    }
}

fn estimate<S: VectorSampler>(
    sampler: &S,
    spec: &ProblemSpec,
    stream: RandomStream,
    threads: usize,
) -> Result<MomentEstimate, RunError> {
    Ok(estimate_moment(sampler, &spec.index(), spec.options.samples, stream, threads)?)
}

/// Exact moment plus a Monte Carlo estimate from `options.samples` draws of
/// stream `(options.seed, 0)`.
pub fn run_verify(spec: &ProblemSpec, threads: usize) -> Result<ResultRecord, RunError> {
    check_size(spec)?;
    let model = spec.build()?;
    let start = Instant::now();
    let (exact, terms) = exact_value(spec, &model)?;
    let exact_ms = elapsed_ms(start);

    let start = Instant::now();
    let stream = RandomStream::new(spec.options.seed, 0);
    let est = match &model {
        Model::Gaussian(cov) => estimate(&GaussianSampler::new(cov)?, spec, stream, threads)?,
        Model::LocationMixture(m, _) => estimate(&LocationMixtureSampler::new(m)?, spec, stream, threads)?,
        Model::Hyperbolic(m) => estimate(&HyperbolicSampler::new(m)?, spec, stream, threads)?,
    };
    let mc_ms = elapsed_ms(start);

    Ok(ResultRecord {
        model: spec.kind(),
        index_set: spec.index_set.clone(),
        exact,
        terms,
        mc: Some(McSummary {
            value: est.value,
            std_error: est.std_error,
            samples: est.n,
            seed: spec.options.seed,
        }),
        agreement: Some(agreement(exact, &est)),
        timing: Timing {
            exact_ms,
            mc_ms: Some(mc_ms),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> ProblemSpec {
        ProblemSpec::from_json(text).unwrap()
    }

    #[test]
    fn term_estimates_match_exact_counts() {
        for n in 0..=12 {
            assert_eq!(estimated_terms(ModelKind::Gaussian, n), gaussian::term_count(n) as f64);
            assert_eq!(estimated_terms(ModelKind::LocationMixture, n), mixtures::term_count(n) as f64);
            assert_eq!(estimated_terms(ModelKind::Hyperbolic, n), hyperbolic::term_count(n) as f64);
        }
    }

    #[test]
    fn size_guard_reports_term_estimate() {
        let s = spec(
            r#"{"spec_version": 1, "model": "gaussian", "dimension": 1,
                "index_set": [1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1],
                "params": {"covariance": [[1]]}}"#,
        );
        let err = run_moment(&s).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        match err {
            RunError::SizeGuard { len, max, terms } => {
                assert_eq!((len, max), (22, 20));
                assert_eq!(terms, 13_749_310_575.0);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn hyperbolic_quadratic_case() {
        let s = spec(
            r#"{"spec_version": 1, "model": "hyperbolic", "dimension": 1, "index_set": [1, 1],
                "params": {"mu": [0.7], "beta": [-0.4], "delta": [[1]], "psi": 2, "chi": 1.5, "lambda": -0.5}}"#,
        );
        let Model::Hyperbolic(m) = s.build().unwrap() else { unreachable!() };
        let m1 = isserlis::gig_moment(m.gig(), 1).unwrap();
        let m2 = isserlis::gig_moment(m.gig(), 2).unwrap();
        let (mu, g) = (0.7, -0.4);
        let want = mu * mu + 2.0 * mu * g * m1 + g * g * m2 + m1;
        let got = run_moment(&s).unwrap().exact;
        assert!((got - want).abs() < 1e-14 * want.abs());
    }

    #[test]
    fn structural_zero_is_z_tested() {
        let est = MomentEstimate {
            value: 0.3,
            std_error: 0.01,
            n: 1000,
        };
        assert_eq!(agreement(0.0, &est).verdict, Verdict::Fail);
        assert_eq!(agreement(0.0, &MomentEstimate { value: 0.01, ..est }).verdict, Verdict::Pass);
        assert_eq!(agreement(0.015, &est).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn lenient_determinant_warns() {
        let s = spec(
            r#"{"spec_version": 1, "model": "hyperbolic", "dimension": 1, "index_set": [1],
                "params": {"mu": [0], "beta": [0], "delta": [[2]], "psi": 1, "chi": 1, "lambda": 1}}"#,
        );
        assert_eq!(warnings(&s).len(), 1);
    }
}
