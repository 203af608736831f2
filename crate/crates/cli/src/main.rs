use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isserlis::special::ln_bessel_k;
use isserlis_cli::record::{ResultRecord, Verdict, CSV_HEADER};
use isserlis_cli::run::{run_moment, run_verify, warnings, RunError};
use isserlis_cli::selftest::{render, run_selftest, Fault, SelftestConfig};
use isserlis_cli::spec::{read_specs, ProblemSpec};

/// Exact higher-order moments of Gaussian, location-mixture and generalized
/// hyperbolic vectors.
///
/// Exit codes: 0 success, 1 verification failure, 2 input error, 3 size-guard
/// refusal.
#[derive(Parser)]
#[command(name = "isserlis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute E[X_A] exactly for each spec in the file.
    Moment(MomentArgs),
    /// Compute E[X_A] and check it against a Monte Carlo estimate.
    Verify(VerifyArgs),
    /// Run the built-in property suites.
    Selftest(SelftestArgs),
    /// Evaluate K_nu(x) directly.
    Bessel {
        #[arg(long, allow_negative_numbers = true)]
        nu: f64,
        #[arg(long)]
        x: f64,
    },
}

#[derive(Args)]
struct MomentArgs {
    /// Spec file (JSON, one document or an array); `-` reads stdin.
    #[arg(long)]
    spec: String,
    /// Emit CSV rows instead of JSON documents.
    #[arg(long)]
    csv: bool,
    /// Reject hyperbolic models whose det Δ is not 1.
    #[arg(long)]
    strict_det: bool,
    /// Refuse index sets longer than this.
    #[arg(long)]
    max_index_size: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: MomentArgs,
    /// Monte Carlo draws; overrides `options.samples` in every spec
    #[arg(long)]
    samples: Option<u64>,
    /// RNG seed; overrides `options.seed` in every spec
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    AsymmetricCovariance,
}

fn load(args: &MomentArgs, seed: Option<u64>, samples: Option<u64>) -> Result<Vec<ProblemSpec>, RunError> {
    let mut specs = read_specs(&args.spec)?;
    for spec in &mut specs {
        let o = &mut spec.options;
        o.strict_det |= args.strict_det;
        o.max_index_size = args.max_index_size.unwrap_or(o.max_index_size);
        o.seed = seed.unwrap_or(o.seed);
        o.samples = samples.unwrap_or(o.samples);
        // strictness may have changed
        spec.build()?;
    }
    Ok(specs)
}

fn emit(out: &mut impl Write, csv: bool, record: &ResultRecord) {
    let line = if csv { record.to_csv_row() } else { record.to_json() };
    writeln!(out, "{line}").expect("write to stdout");
}

fn run_batch(args: &MomentArgs, specs: &[ProblemSpec], mut run: impl FnMut(&ProblemSpec) -> Result<ResultRecord, RunError>) -> u8 {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if args.csv {
        writeln!(out, "{CSV_HEADER}").expect("write to stdout");
    }
    let mut code = 0;
    for (i, spec) in specs.iter().enumerate() {
        for w in warnings(spec) {
            eprintln!("[{i}] {w}");
        }
        match run(spec) {
            Ok(record) => {
                match record.verdict() {
                    Some(Verdict::Fail) => code = code.max(1),
                    Some(Verdict::Inconclusive) => eprintln!(
                        "[{i}] warning: standard error exceeds half the exact value; Monte Carlo check inconclusive"
                    ),
                    _ => {}
                }
                emit(&mut out, args.csv, &record);
            }
            Err(e) => {
                eprintln!("[{i}] error: {e}");
                code = code.max(e.exit_code() as u8);
            }
        }
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Moment(args) => match load(&args, None, None) {
            Ok(specs) => run_batch(&args, &specs, run_moment),
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code() as u8
            }
        },
        Command::Verify(args) => match load(&args.common, args.seed, args.samples) {
            Ok(specs) => run_batch(&args.common, &specs, |s| run_verify(s, args.threads)),
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code() as u8
            }
        },
        Command::Selftest(args) => {
            let cfg = SelftestConfig {
                seed: args.seed,
                threads: args.threads,
                fault: args.inject_fault.map(|FaultArg::AsymmetricCovariance| Fault::AsymmetricCovariance),
            };
            let reports = run_selftest(cfg);
            print!("{}", render(cfg.seed, &reports));
            if reports.iter().all(|r| r.passed()) {
                0
            } else {
                1
            }
        }
        Command::Bessel { nu, x } => match ln_bessel_k(nu, x) {
            Ok(ln_k) => {
                let k = ln_k.exp();
                let doc = serde_json::json!({
                    "nu": nu,
                    "x": x,
                    "k": k.is_finite().then_some(k),
                    "ln_k": ln_k,
                });
                println!("{doc}");
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
    };
    ExitCode::from(code)
}
