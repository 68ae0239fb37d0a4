use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qmean_core::criteria::{self, Criterion};
use qmean_core::estimators::{Estimator, PartialFnSpec};
use qmean_core::measures::MeasureFamily;
use qmean_core::poly::min_degree_lp;
use qmean_core::report;
use qmean_core::suite::{self, SuiteOutcome};
use qmean_core::{Error, WeightClass};

const P_FLOOR: f64 = 8.0 / (PI * PI);

#[derive(Parser, Debug)]
#[command(
    name = "qmean",
    version,
    about = "Exact error tables and bound checks for Boolean-mean estimators"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "QMEAN_PARALLELISM", global = true)]
    parallelism: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One row per (n, M) for an estimator under an error criterion.
    ErrorTable(ErrorTableArgs),
    /// Run one of the reproducible checks.
    Check(CheckArgs),
    /// Smallest degree of a polynomial separating weights k1 and k2.
    DegreeLp(DegreeLpArgs),
    /// Print exact outcome distributions.
    DistDump(DistDumpArgs),
    /// Print a measure's class probabilities.
    MeasureDump(MeasureDumpArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EstimatorKind {
    Ae,
    AeOracle,
    MedianReps,
    Constant,
    Bernoulli,
}

#[derive(Args, Debug)]
struct EstimatorArgs {
    #[arg(long, value_enum)]
    estimator: EstimatorKind,
    /// Repetitions for median-reps.
    #[arg(long)]
    r: Option<usize>,
    /// Round estimates to the nearest count k/n (ae, median-reps).
    #[arg(long)]
    round_count: bool,
}

impl EstimatorArgs {
    fn build(&self) -> Result<Estimator, Error> {
        let bad = |flag: &str| {
            Err(Error::Domain(format!(
                "{flag} is not valid for estimator {:?}",
                self.estimator
            )))
        };
        if self.r.is_some() && self.estimator != EstimatorKind::MedianReps {
            return bad("--r");
        }
        let rounds = matches!(
            self.estimator,
            EstimatorKind::Ae | EstimatorKind::MedianReps
        );
        if self.round_count && !rounds {
            return bad("--round-count");
        }
        Ok(match self.estimator {
            EstimatorKind::Ae => Estimator::AmplitudeEstimation {
                round_to_count: self.round_count,
            },
            EstimatorKind::AeOracle => Estimator::AmplitudeOracle,
            EstimatorKind::MedianReps => {
                let reps = self
                    .r
                    .ok_or_else(|| Error::Domain("--r is required for median-reps".into()))?;
                if reps == 0 {
                    return Err(Error::Domain("--r must be positive".into()));
                }
                Estimator::MedianOfReps {
                    reps,
                    round_to_count: self.round_count,
                }
            }
            EstimatorKind::Constant => Estimator::ConstantHalf,
            EstimatorKind::Bernoulli => Estimator::ClassicalBernoulli,
        })
    }
}

#[derive(Args, Debug)]
struct ErrorTableArgs {
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Input sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Budgets: counter size M, or sample count T for bernoulli.
    #[arg(
        long = "M",
        visible_alias = "T",
        value_delimiter = ',',
        required = true
    )]
    budgets: Vec<usize>,
    /// worst-prob | avg-prob | worst-expected | avg-expected
    #[arg(long)]
    criterion: String,
    /// uniform-inputs | uniform-means | path to a measure file
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Multiply values by n (count accuracy).
    #[arg(long)]
    count_scaled: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Exit with status 3 if the check fails.
    #[arg(long, global = true)]
    assert: bool,
    #[command(subcommand)]
    kind: CheckKind,
}

#[derive(Subcommand, Debug)]
enum CheckKind {
    /// Constant-½ error ratio to (2πn)^(-1/2).
    ConstAlg {
        #[arg(long, default_value_t = 4096)]
        n: usize,
    },
    /// Central binomial lower bound over a range of n.
    Lemma61 {
        #[arg(long, default_value_t = 4)]
        n_min: usize,
        #[arg(long, default_value_t = 2000)]
        n_max: usize,
    },
    /// Closed-form AE distribution against the unitary simulation.
    AeExact {
        #[arg(long, default_value_t = 32)]
        n_max: usize,
        #[arg(long = "M", value_delimiter = ',', default_values_t = [2, 4, 8, 16, 32, 64])]
        budgets: Vec<usize>,
    },
    /// Count-rounded AE has zero worst error.
    ZeroError {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long = "M", default_value_t = 76)]
        budget: usize,
        #[arg(long, default_value_t = P_FLOOR)]
        p: f64,
    },
    /// Average error against the lower-bound floor shape.
    Floors {
        #[arg(long, default_value = "uniform-inputs")]
        measure: String,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long = "M", value_delimiter = ',', default_values_t = [8, 16, 32, 64, 128, 256, 512])]
        budgets: Vec<usize>,
        #[arg(long, default_value_t = P_FLOOR)]
        p: f64,
        /// Lower ratio to require (default: the recorded constant).
        #[arg(long)]
        c0: Option<f64>,
    },
    /// Quantile error against the Markov bound from the expected error.
    Markov {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// M times the worst expected error of the median of AE runs.
    MedianShape {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long = "M", value_delimiter = ',', default_values_t = [8, 16, 32, 64, 128])]
        budgets: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        r: usize,
        /// Upper constant to require (default: the recorded constant).
        #[arg(long)]
        constant: Option<f64>,
    },
    /// Acceptance polynomials have degree at most twice the query count.
    DegreeLaw {
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long = "M-max", default_value_t = 8)]
        m_max: usize,
    },
    /// LP degree monotonicity and the fitted constant against the closed form.
    DegreeLp {
        #[arg(long, value_delimiter = ',', default_values_t = [20, 40])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.49)]
        c: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.45, 0.49])]
        c_grid: Vec<f64>,
    },
    /// Failure probabilities of the AE thresholding distinguisher.
    Distinguisher {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long = "M", default_value_t = 32)]
        budget: usize,
        #[arg(long, default_value_t = 0.81)]
        p: f64,
        #[arg(long, default_value_t = 4)]
        min_gap: usize,
    },
}

#[derive(Args, Debug)]
struct DegreeLpArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k1: usize,
    #[arg(long)]
    k2: usize,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    c: f64,
}

#[derive(Args, Debug)]
struct DistDumpArgs {
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long)]
    n: usize,
    /// Weights to dump (default: all).
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long = "M", visible_alias = "T")]
    budget: usize,
}

#[derive(Args, Debug)]
struct MeasureDumpArgs {
    #[arg(long)]
    measure: String,
    #[arg(long)]
    n: usize,
}

enum Failure {
    Config(String),
    Runtime(String),
    CheckFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::WeightOutOfRange { .. } | Error::MeasureFile { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

/// Any failure to read the measure is a configuration error.
fn parse_measure(spec: &str) -> Result<MeasureFamily, Failure> {
    MeasureFamily::parse(spec).map_err(|e| config(format!("--measure {spec}: {e}")))
}

fn error_table(args: &ErrorTableArgs, format: Format) -> Result<String, Failure> {
    let est = args.estimator.build()?;
    let criterion = Criterion::parse(&args.criterion)
        .filter(|c| !matches!(c, Criterion::Quantile | Criterion::ExpectedLq))
        .ok_or_else(|| {
            config(format!(
                "--criterion {} is not one of worst-prob, avg-prob, worst-expected, avg-expected",
                args.criterion
            ))
        })?;
    let level = if criterion.is_probabilistic() {
        if args.q.is_some() {
            return Err(config(format!(
                "--q is not valid for criterion {criterion}"
            )));
        }
        args.p
            .ok_or_else(|| config(format!("--p is required for criterion {criterion}")))?
    } else {
        if args.p.is_some() {
            return Err(config(format!(
                "--p is not valid for criterion {criterion}"
            )));
        }
        args.q
            .ok_or_else(|| config(format!("--q is required for criterion {criterion}")))?
    };
    let family = match (&args.measure, criterion.is_average()) {
        (Some(m), true) => Some(parse_measure(m)?),
        (None, true) => {
            return Err(config(format!(
                "--measure is required for criterion {criterion}"
            )))
        }
        (Some(_), false) => {
            return Err(config(format!(
                "--measure is not valid for criterion {criterion}"
            )))
        }
        (None, false) => None,
    };
    let mut rows = Vec::new();
    for &n in &args.n {
        let mu = family.as_ref().map(|f| f.build(n)).transpose()?;
        for &m in &args.budgets {
            let mut r = criteria::evaluate(criterion, est, n, m, level, mu.as_ref())?;
            if args.count_scaled {
                r = criteria::count_scaled(&r)?;
            }
            rows.push(r);
        }
    }
    Ok(match format {
        Format::Csv => report::error_reports_csv(&rows),
        Format::Json => report::error_reports_json(&rows)?,
    })
}

fn run_check(kind: &CheckKind) -> Result<SuiteOutcome, Failure> {
    Ok(match kind {
        CheckKind::ConstAlg { n } => suite::const_alg(*n)?,
        CheckKind::Lemma61 { n_min, n_max } => suite::lemma61(*n_min, *n_max)?,
        CheckKind::AeExact { n_max, budgets } => suite::ae_exact(*n_max, budgets)?,
        CheckKind::ZeroError { n, budget, p } => suite::zero_error(*n, *budget, *p)?,
        CheckKind::Floors {
            measure,
            n,
            budgets,
            p,
            c0,
        } => suite::floors(parse_measure(measure)?, *n, budgets, *p, *c0)?,
        CheckKind::Markov { samples, seed } => suite::markov(*samples, *seed)?,
        CheckKind::MedianShape {
            n,
            budgets,
            r,
            constant,
        } => suite::median_shape(*n, budgets, *r, *constant)?,
        CheckKind::DegreeLaw { n_max, m_max } => suite::degree_law(*n_max, *m_max)?,
        CheckKind::DegreeLp { n, c, c_grid } => suite::degree_lp(n, *c, c_grid)?,
        CheckKind::Distinguisher {
            n,
            budget,
            p,
            min_gap,
        } => suite::distinguisher_check(*n, *budget, *p, *min_gap)?,
    })
}

fn degree_lp(args: &DegreeLpArgs, format: Format) -> Result<String, Failure> {
    let w = min_degree_lp(PartialFnSpec::new(args.n, args.k1, args.k2)?, args.c)?;
    Ok(match format {
        Format::Csv => report::witness_csv(&w),
        Format::Json => report::witness_json(&w)?,
    })
}

fn dist_dump(args: &DistDumpArgs, format: Format) -> Result<String, Failure> {
    let est = args.estimator.build()?;
    let ks: Vec<usize> = if args.k.is_empty() {
        (0..=args.n).collect()
    } else {
        args.k.clone()
    };
    let dists = ks
        .iter()
        .map(|&k| est.distribution(WeightClass::new(args.n, k)?, args.budget))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match format {
        Format::Csv => report::distributions_csv(&dists),
        Format::Json => report::distributions_json(&dists)?,
    })
}

fn measure_dump(args: &MeasureDumpArgs, format: Format) -> Result<String, Failure> {
    let mu = parse_measure(&args.measure)?.build(args.n)?;
    Ok(match format {
        Format::Csv => report::measure_csv(&mu)?,
        Format::Json => report::measure_json(&mu)?,
    })
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.parallelism {
        if threads == 0 {
            return Err(config("--parallelism must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let output = cli.output.as_ref();
    match &cli.command {
        Command::ErrorTable(args) => emit(&error_table(args, cli.format)?, output),
        Command::Check(args) => {
            let outcome = run_check(&args.kind)?;
            let text = match cli.format {
                Format::Csv => outcome.csv(),
                Format::Json => outcome.json()?,
            };
            emit(&text, output)?;
            eprintln!(
                "{} {}: {}",
                outcome.name,
                if outcome.passed { "passed" } else { "FAILED" },
                outcome.summary
            );
            if args.assert && !outcome.passed {
                return Err(Failure::CheckFailed);
            }
            Ok(())
        }
        Command::DegreeLp(args) => emit(&degree_lp(args, cli.format)?, output),
        Command::DistDump(args) => emit(&dist_dump(args, cli.format)?, output),
        Command::MeasureDump(args) => emit(&measure_dump(args, cli.format)?, output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::CheckFailed) => ExitCode::from(3),
    }
}
