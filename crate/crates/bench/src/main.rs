use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rcg_bench::report::{read_records, write_profile};
use rcg_bench::{
    emit_report, performance_profile, run_suite, BenchError, Metric, ProfileCurve, RunRecord,
    SolverSpec, SuiteConfig,
};
use rcg_core::cg::{BetaRule, SolverConfig, DEFAULT_MU};
use rcg_core::linesearch::{LineSearchConfig, Strategy};
use rcg_core::objectives::ProblemKind;
use serde::Deserialize;

#[derive(Parser)]
#[command(
    version,
    about = "Benchmark Riemannian conjugate gradient solvers and draw performance profiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver grid and write records plus profiles for every metric.
    Run(RunArgs),
    /// Compute one metric's performance profile from saved records.
    Profile {
        #[arg(long, default_value = "iterations")]
        metric: String,
        /// records.jsonl or records.csv
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write records and profiles for every metric from saved records.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags of `run`. Each may also be given in the JSON config file; flags
/// take precedence.
#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
struct RunArgs {
    /// JSON file with any of the options below.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Problem kinds: rayleigh, brockett, completion, off_diag.
    #[arg(long, value_delimiter = ',')]
    problems: Option<Vec<String>>,
    /// β rules: fr, prp, hs, dy, hybrid1, hybrid2, hz, sd.
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<String>>,
    /// Line searches: backtracking, strong_wolfe, random_armijo.
    #[arg(long, value_delimiter = ',')]
    linesearch: Option<Vec<String>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    /// Fills every unset flag from `other`.
    fn or(self, other: RunArgs) -> RunArgs {
        RunArgs {
            config: self.config,
            problems: self.problems.or(other.problems),
            solvers: self.solvers.or(other.solvers),
            linesearch: self.linesearch.or(other.linesearch),
            reps: self.reps.or(other.reps),
            seed: self.seed.or(other.seed),
            tol: self.tol.or(other.tol),
            max_iters: self.max_iters.or(other.max_iters),
            c1: self.c1.or(other.c1),
            c2: self.c2.or(other.c2),
            mu: self.mu.or(other.mu),
            out: self.out.or(other.out),
        }
    }

    fn into_suite(self) -> Result<(SuiteConfig, PathBuf), BenchError> {
        fn parse_all<T: std::str::FromStr>(
            v: Option<Vec<String>>,
            default: Vec<T>,
        ) -> Result<Vec<T>, T::Err> {
            v.map_or(Ok(default), |v| {
                v.iter().map(|s| s.trim().parse()).collect()
            })
        }
        let kinds: Vec<ProblemKind> = parse_all(self.problems, ProblemKind::ALL.to_vec())?;
        let rules: Vec<BetaRule> = parse_all(self.solvers, BetaRule::BENCHMARK.to_vec())?;
        let strategies: Vec<Strategy> = parse_all(
            self.linesearch,
            vec![Strategy::Backtracking, Strategy::StrongWolfe],
        )?;
        let defaults = SolverConfig::default();
        let linesearch = LineSearchConfig {
            c1: self.c1.unwrap_or(defaults.linesearch.c1),
            c2: self.c2.unwrap_or(defaults.linesearch.c2),
            ..defaults.linesearch
        };
        let mut suite = SuiteConfig::standard(
            &kinds,
            SolverSpec::grid(&rules, &strategies),
            self.reps.unwrap_or(100),
            self.seed.unwrap_or(0),
        );
        suite.mu = self.mu.unwrap_or(DEFAULT_MU);
        suite.base = SolverConfig {
            linesearch,
            tol: self.tol.unwrap_or(defaults.tol),
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            ..defaults
        };
        Ok((
            suite,
            self.out.unwrap_or_else(|| PathBuf::from("bench-out")),
        ))
    }
}

fn all_profiles(records: &[RunRecord]) -> Result<Vec<ProfileCurve>, BenchError> {
    let mut curves = Vec::new();
    for metric in Metric::ALL {
        curves.extend(performance_profile(records, metric)?);
    }
    Ok(curves)
}

fn report(records: &[RunRecord], out: &Path) -> Result<(), BenchError> {
    let curves = all_profiles(records)?;
    for path in emit_report(&curves, records, out)? {
        println!("wrote {}", path.display());
    }
    println!("fraction solved:");
    for c in curves.iter().filter(|c| c.metric == Metric::Iterations) {
        println!("  {:<28} {:.3}", c.solver_id, c.limit());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run(args) => {
            let args = match &args.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    let file: RunArgs =
                        serde_json::from_str(&text).map_err(|source| BenchError::Json {
                            path: path.clone(),
                            source,
                        })?;
                    args.or(file)
                }
                None => args,
            };
            let (suite, out) = args.into_suite()?;
            eprintln!(
                "running {} problems x {} reps x {} solvers = {} runs",
                suite.problems.len(),
                suite.reps,
                suite.solvers.len(),
                suite.len()
            );
            let records = run_suite(&suite)?;
            report(&records, &out)
        }
        Command::Profile { metric, input, out } => {
            let metric: Metric = metric.parse()?;
            let records = read_records(&input)?;
            let curves = performance_profile(&records, metric)?;
            std::fs::create_dir_all(&out).map_err(|source| BenchError::Io {
                path: out.clone(),
                source,
            })?;
            for path in write_profile(&curves, metric, &out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Report { input, out } => report(&read_records(&input)?, &out),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
