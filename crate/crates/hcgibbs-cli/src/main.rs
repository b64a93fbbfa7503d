//! `hcgibbs` — phase diagrams, boundary laws, Markov chains and samplers
//! for the hard-core model with countable spin set on Cayley trees.

mod reports;
mod reproduce;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hcgibbs_core::{
    boundary, chain, simulate, ActivitySpec, Branch, Error as CoreError, LambdaInput, Measure,
    ParityFilter, SeriesSum,
};
use reports::{BoundaryReport, ChainReport, LawReport, ParityStats, SimulateReport};

#[derive(Parser)]
#[command(
    name = "hcgibbs",
    version,
    about = "Hard-core model with countable spin set on Cayley trees: \
             phase regimes, boundary laws, tree-indexed Markov chains and samplers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the phase regime and report all fixed points
    Phase(PhaseArgs),
    /// Materialize boundary laws with sums, residuals and normalisability
    BoundaryLaw(BoundaryArgs),
    /// Build a transition kernel and its stationary distribution
    Chain(ChainArgs),
    /// Sample admissible configurations and report occupation statistics
    Simulate(SimulateArgs),
    /// Re-run the five published worked examples and verify their values
    Reproduce(ReproduceArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Text,
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    Mu0,
    Mu1,
    Mu2,
}

impl fmt::Display for MeasureArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureArg::Mu0 => write!(f, "mu0"),
            MeasureArg::Mu1 => write!(f, "mu1"),
            MeasureArg::Mu2 => write!(f, "mu2"),
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Tree order k (the theory needs k >= 2)
    #[arg(long, default_value_t = 2)]
    k: u32,

    /// Root-residual and series-tail tolerance
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,

    /// Output format
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    out: OutFormat,
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Activity-spec JSON file
    #[arg(long, conflicts_with = "lambda")]
    activities: Option<PathBuf>,

    /// Total activity given inline instead of an activity file
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct BoundaryArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Activity-spec JSON file
    #[arg(long)]
    activities: PathBuf,

    /// Which measure's law(s) to materialize
    #[arg(long, value_enum, default_value_t = MeasureArg::Mu0)]
    measure: MeasureArg,

    /// Report components for 0 < |i| <= RANGE
    #[arg(long, default_value_t = 8)]
    range: u32,
}

#[derive(Args)]
struct ChainArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Activity-spec JSON file
    #[arg(long)]
    activities: PathBuf,

    /// Which measure's chain to build
    #[arg(long, value_enum, default_value_t = MeasureArg::Mu0)]
    measure: MeasureArg,

    /// Truncation window half-width N (auto-chosen from the tolerance when
    /// omitted)
    #[arg(long)]
    truncate: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Activity-spec JSON file
    #[arg(long)]
    activities: PathBuf,

    /// Which measure to sample from
    #[arg(long, value_enum, default_value_t = MeasureArg::Mu0)]
    measure: MeasureArg,

    /// Ball radius
    #[arg(long, default_value_t = 6)]
    depth: u32,

    /// Number of independent samples
    #[arg(long, default_value_t = 1000)]
    samples: u64,

    /// Base seed; sample i uses seed + i
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Example number 1..=5; all five when omitted
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    example: Option<u8>,

    /// Output format
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    out: OutFormat,
}

/// CLI failure with its process exit code.
#[derive(Debug)]
enum CliError {
    Core(CoreError),
    Io(PathBuf, std::io::Error),
    Parse(PathBuf, serde_json::Error),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Parse(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// 2 for usage/domain problems, 3 for numerical failures.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                CoreError::Domain(_) | CoreError::InvalidSpec(_) | CoreError::MixedSamples(_) => 2,
                CoreError::Divergence(_)
                | CoreError::TruncationTooSmall { .. }
                | CoreError::ScanFailed { .. } => 3,
            },
            CliError::Io(..) | CliError::Parse(..) | CliError::Usage(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Phase(args) => cmd_phase(args),
        Command::BoundaryLaw(args) => cmd_boundary_law(args),
        Command::Chain(args) => cmd_chain(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Reproduce(args) => cmd_reproduce(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_spec(path: &Path) -> Result<ActivitySpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let spec: ActivitySpec =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(path.to_path_buf(), e))?;
    spec.validate()?;
    Ok(spec)
}

/// A spec flagged divergent defines no measure; commands that need laws
/// reject it up front (the `phase` command reports `no_measure` instead).
fn reject_divergent(spec: &ActivitySpec) -> Result<(), CliError> {
    if spec.is_divergent() {
        return Err(CliError::Usage(
            "the activity spec is flagged divergent, so no Gibbs measure exists; \
             run `phase` to see the classification"
                .into(),
        ));
    }
    Ok(())
}

fn cmd_phase(args: PhaseArgs) -> Result<ExitCode, CliError> {
    let common = &args.common;
    let input = match (&args.activities, args.lambda) {
        (Some(path), None) => {
            let spec = load_spec(path)?;
            if spec.is_divergent() {
                LambdaInput::Divergent
            } else {
                LambdaInput::Finite(spec.sum(common.tol)?)
            }
        }
        (None, Some(lambda)) => {
            LambdaInput::Finite(SeriesSum { value: lambda, tail_bound: 0.0, terms_used: 0 })
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --activities or --lambda is required".into(),
            ))
        }
    };
    let report = hcgibbs_core::classify(common.k, input, common.tol)?;

    match common.out {
        OutFormat::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        OutFormat::Csv => {
            println!("field,value");
            println!("k,{}", report.k);
            println!("lambda,{}", report.lambda.map(|v| v.to_string()).unwrap_or_default());
            println!("lambda_cr,{}", report.lambda_cr);
            println!("regime,{}", regime_str(report.regime));
            println!("a0,{}", report.a0.map(|v| v.to_string()).unwrap_or_default());
            let (lo, hi) = report
                .pair
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .unwrap_or_default();
            println!("pair_low,{lo}");
            println!("pair_high,{hi}");
        }
        OutFormat::Text => {
            println!("k         = {}", report.k);
            match report.lambda {
                Some(l) => println!("Lambda    = {l}"),
                None => println!("Lambda    = divergent"),
            }
            println!("Lambda_cr = {}", report.lambda_cr);
            println!("regime    = {}", regime_str(report.regime));
            if let Some(a0) = report.a0 {
                println!(
                    "A0        = {a0}  (residual {:.2e})",
                    report.residuals.ti.unwrap_or(0.0)
                );
            }
            if let Some((a, b)) = report.pair {
                println!(
                    "pair      = ({a}, {b})  (residuals {:.2e}, {:.2e})",
                    report.residuals.pair_low.unwrap_or(0.0),
                    report.residuals.pair_high.unwrap_or(0.0)
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Laws backing the requested measure: the TI law alone, or the oriented
/// even/odd pair.
fn resolve_measure(
    spec: &ActivitySpec,
    k: u32,
    measure: MeasureArg,
    tol: f64,
) -> Result<Measure, CliError> {
    reject_divergent(spec)?;
    match measure {
        MeasureArg::Mu0 => Ok(Measure::TranslationInvariant(boundary::ti_law(spec, k, tol)?)),
        MeasureArg::Mu1 | MeasureArg::Mu2 => {
            let pair = boundary::periodic_pair(spec, k, tol)?.ok_or_else(|| {
                CliError::Usage(format!(
                    "no {measure} measure: the activity sum lies at or below the critical \
                     threshold, so the unique periodic measure is mu0"
                ))
            })?;
            let branch = if measure == MeasureArg::Mu1 { Branch::Mu1 } else { Branch::Mu2 };
            Ok(Measure::Periodic { pair, branch })
        }
    }
}

fn law_report(
    spec: &ActivitySpec,
    law: &hcgibbs_core::BoundaryLaw,
    role: &str,
    range: u32,
    tol: f64,
) -> Result<LawReport, CliError> {
    let sum = law.sum(tol.max(1e-12))?;
    let norm = law.normalisability(1e-9)?;
    let residual = law.consistency_residual(tol.max(1e-12))?;
    let mut values = std::collections::BTreeMap::new();
    for i in 1..=range as i64 {
        values.insert(i, law.z(i));
        values.insert(-i, law.z(-i));
    }
    let _ = spec;
    Ok(LawReport {
        role: role.to_string(),
        built_from: law.built_from(),
        sum: sum.value,
        sum_tail_bound: sum.tail_bound,
        normalisable: norm.normalisable,
        consistency_residual: residual,
        values,
    })
}

fn cmd_boundary_law(args: BoundaryArgs) -> Result<ExitCode, CliError> {
    let common = &args.common;
    let spec = load_spec(&args.activities)?;
    let measure = resolve_measure(&spec, common.k, args.measure, common.tol)?;
    let lambda = spec.sum(common.tol)?.value;

    let laws = match &measure {
        Measure::TranslationInvariant(law) => {
            vec![law_report(&spec, law, "ti", args.range, common.tol)?]
        }
        Measure::Periodic { pair, branch } => {
            let oriented = match branch {
                Branch::Mu1 => pair.clone(),
                Branch::Mu2 => pair.swapped(),
            };
            // The pair residual couples both laws; report it on each.
            let pair_residual = oriented.consistency_residual(common.tol)?;
            let mut even = law_report(&spec, oriented.even(), "even", args.range, common.tol)?;
            let mut odd = law_report(&spec, oriented.odd(), "odd", args.range, common.tol)?;
            even.consistency_residual = pair_residual;
            odd.consistency_residual = pair_residual;
            vec![even, odd]
        }
    };
    let report = BoundaryReport {
        k: common.k,
        measure: args.measure.to_string(),
        lambda,
        laws,
        support_note: spec.support_note().map(str::to_string),
    };

    match common.out {
        OutFormat::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        OutFormat::Csv => {
            println!("role,index,value");
            for law in &report.laws {
                for (i, z) in &law.values {
                    println!("{},{i},{z}", law.role);
                }
            }
        }
        OutFormat::Text => {
            println!("measure {} at k = {}, Lambda = {}", report.measure, report.k, report.lambda);
            if let Some(note) = &report.support_note {
                println!("note: {note}");
            }
            for law in &report.laws {
                println!(
                    "law [{}]: built from {}, sum = {} (tail {:.1e}), normalisable = {}, \
                     consistency residual = {:.2e}",
                    law.role,
                    law.built_from,
                    law.sum,
                    law.sum_tail_bound,
                    law.normalisable,
                    law.consistency_residual
                );
                for (i, z) in &law.values {
                    println!("  z({i}) = {z}");
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_chain(args: ChainArgs) -> Result<ExitCode, CliError> {
    let common = &args.common;
    let spec = load_spec(&args.activities)?;
    let measure = resolve_measure(&spec, common.k, args.measure, common.tol)?;

    let (kernel, dist) = match &measure {
        Measure::TranslationInvariant(law) => {
            let n = match args.truncate {
                Some(n) => n,
                None => chain::required_truncation(&spec, law, common.tol)?,
            };
            (
                chain::build_ti_kernel(&spec, law, n, common.tol)?,
                chain::stationary_ti(&spec, law, common.tol)?,
            )
        }
        Measure::Periodic { pair, branch } => {
            let oriented = match branch {
                Branch::Mu1 => pair.clone(),
                Branch::Mu2 => pair.swapped(),
            };
            let n = match args.truncate {
                Some(n) => n,
                None => chain::required_truncation(&spec, oriented.even(), common.tol)?
                    .max(chain::required_truncation(&spec, oriented.odd(), common.tol)?),
            };
            (
                chain::build_periodic_kernel(&spec, &oriented, n, common.tol)?,
                chain::stationary_periodic(&spec, &oriented, common.tol)?,
            )
        }
    };
    let report = ChainReport::build(common.k, args.measure.to_string(), &kernel, &dist);

    match common.out {
        OutFormat::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        OutFormat::Csv => {
            println!("# row_zero");
            println!("index,value");
            for (i, v) in report.spins.iter().zip(&report.row_zero) {
                println!("{i},{v}");
            }
            if let Some(row) = &report.off_zero_row {
                println!("# off_zero_row");
                println!("index,value");
                for (i, v) in report.spins.iter().zip(row) {
                    println!("{i},{v}");
                }
            }
            println!("# stationary");
            println!("index,value");
            for (i, v) in report.spins.iter().zip(&report.stationary) {
                println!("{i},{v}");
            }
        }
        OutFormat::Text => {
            println!(
                "{} kernel for {} (k = {}), truncation N = {}",
                report.kind, report.measure, report.k, report.truncation
            );
            match report.s_tilde {
                Some(st) => println!("S = {}, S~ = {st}", report.s),
                None => println!("S = {}", report.s),
            }
            println!("row-sum error        = {:.2e}", report.row_sum_error);
            println!("stationarity residual = {:.2e}", report.stationarity_residual);
            let center = report.truncation as usize;
            println!("stationary x(0)  = {}", report.stationary[center]);
            for j in [1i64, -1, 2, -2] {
                let idx = (j + report.truncation as i64) as usize;
                println!("stationary x({j}) = {}", report.stationary[idx]);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("HCGIBBS_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => builder = builder.num_threads(n),
            _ => eprintln!("warning: ignoring invalid HCGIBBS_THREADS value {raw:?}"),
        }
    }
    builder.build().expect("thread pool construction cannot fail")
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, CliError> {
    use rayon::prelude::*;

    let common = &args.common;
    let spec = load_spec(&args.activities)?;
    let measure = resolve_measure(&spec, common.k, args.measure, common.tol)?;
    let sampler = simulate::Sampler::new(&measure, common.tol)?;

    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }

    // Single-sample CSV export prints the raw configuration records.
    if common.out == OutFormat::Csv && args.samples == 1 {
        let sample = sampler.sample(args.depth, args.seed)?;
        println!("level,index,spin");
        for (level, index, spin) in sample.records() {
            println!("{level},{index},{spin}");
        }
        return Ok(ExitCode::SUCCESS);
    }

    #[derive(Default)]
    struct Pooled {
        even: simulate::MarginalCounts,
        odd: simulate::MarginalCounts,
        all: simulate::MarginalCounts,
        inadmissible: u64,
    }

    let pool = thread_pool();
    let pooled = pool.install(|| {
        (0..args.samples)
            .into_par_iter()
            .map(|i| {
                let sample = sampler
                    .sample(args.depth, args.seed.wrapping_add(i))
                    .expect("sampling cannot fail after sampler construction");
                let mut p = Pooled::default();
                p.even.add_sample(&sample, ParityFilter::Even);
                p.odd.add_sample(&sample, ParityFilter::Odd);
                p.all.add_sample(&sample, ParityFilter::All);
                p.inadmissible = u64::from(!sample.admissible());
                p
            })
            .reduce(Pooled::default, |a, b| Pooled {
                even: a.even.merge(b.even),
                odd: a.odd.merge(b.odd),
                all: a.all.merge(b.all),
                inadmissible: a.inadmissible + b.inadmissible,
            })
    });

    let stats = |parity: &str, counts: &simulate::MarginalCounts| ParityStats {
        parity: parity.to_string(),
        freq: counts
            .frequencies()
            .into_iter()
            .map(|(spin, f)| (spin.to_string(), f))
            .collect(),
    };
    let ball = simulate::TreeBall::new(common.k, args.depth)?;
    let report = SimulateReport {
        k: common.k,
        measure: args.measure.to_string(),
        depth: args.depth,
        samples: args.samples,
        seed: args.seed,
        vertices_per_sample: ball.vertex_count(),
        all_admissible: pooled.inadmissible == 0,
        stats: vec![
            stats("even", &pooled.even),
            stats("odd", &pooled.odd),
            stats("all", &pooled.all),
        ],
    };

    match common.out {
        OutFormat::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        OutFormat::Csv => {
            println!("parity,spin,freq");
            for ps in &report.stats {
                for (spin, f) in &ps.freq {
                    println!("{},{spin},{f}", ps.parity);
                }
            }
        }
        OutFormat::Text => {
            println!(
                "{} samples of V_{} (k = {}, {} vertices each) from {}, base seed {}",
                report.samples,
                report.depth,
                report.k,
                report.vertices_per_sample,
                report.measure,
                report.seed
            );
            println!("all admissible: {}", report.all_admissible);
            for ps in &report.stats {
                let zero = ps.freq.get("0").copied().unwrap_or(0.0);
                println!("parity {:<5} vacancy frequency = {zero:.6}", ps.parity);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<ExitCode, CliError> {
    let report = reproduce::run(args.example)?;
    match args.out {
        OutFormat::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        OutFormat::Csv => {
            println!("example,name,got,expected,tol,pass,informational");
            for ex in &report.examples {
                for row in &ex.rows {
                    println!(
                        "{},{},{},{},{},{},{}",
                        ex.example,
                        row.name.replace(',', ";"),
                        row.got,
                        row.expected,
                        row.tol.map(|t| t.to_string()).unwrap_or_default(),
                        row.pass,
                        row.informational
                    );
                }
            }
        }
        OutFormat::Text => print!("{}", reproduce::render_text(&report)),
    }
    Ok(if report.all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn regime_str(regime: hcgibbs_core::Regime) -> &'static str {
    match regime {
        hcgibbs_core::Regime::NoMeasure => "no_measure",
        hcgibbs_core::Regime::UniqueTi => "unique_ti",
        hcgibbs_core::Regime::ThreePeriodic => "three_periodic",
    }
}
