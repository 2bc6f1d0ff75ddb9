use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use l2gap_core::bounds::{BoundConfig, Verdict};
use l2gap_core::isoperimetry::CONDUCTANCE_POS_TOL;
use l2gap_core::verify::{run_suite, Suite};
use l2gap_core::zoo::{lazy, perturb_support_preserving, ZooSpec};
use l2gap_core::{SearchConfig, Strategy};

use l2gap_cli::input::{self, load};
use l2gap_cli::report::{self, Settings};

const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "l2gap", version, about = "Spectral gap certificates for finite Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full report: constants, spectrum and every certificate.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the certification pipeline. Exit 0 = gap, 3 = no gap, 4 = undecided.
    Certify {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Isoperimetric and reversibility constants at the given orders.
    Constants {
        file: PathBuf,
        /// Comma-separated orders.
        #[arg(long = "n", value_delimiter = ',', default_value = "1,2")]
        orders: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Write a named chain as a chain file.
    Zoo(ZooArgs),
    /// Run a property suite over seeded random chains. Exit 1 on any violation.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 6)]
    n_max: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Exact)]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Conductance values at or below this count as zero.
    #[arg(long, default_value_t = CONDUCTANCE_POS_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Exact,
    Heuristic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct ZooArgs {
    /// paper-example, haggstrom, two-state, cycle, random-stochastic or random-reversible.
    name: String,
    #[arg(long, default_value_t = 6)]
    levels: usize,
    #[arg(long, default_value_t = 0.3)]
    a: f64,
    #[arg(long, default_value_t = 0.2)]
    b: f64,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    sparsity: f64,
    /// Mix with the identity: `ε I + (1 − ε) P`.
    #[arg(long)]
    lazy: Option<f64>,
    /// Support-preserving perturbation of size `ε`, seeded by `--seed`.
    #[arg(long)]
    perturb: Option<f64>,
    /// Output path; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let strategy = match self.strategy {
            StrategyArg::Exact => Strategy::Exact,
            StrategyArg::Heuristic => Strategy::LocalSearch(SearchConfig::with_seed(self.seed)),
        };
        let cfg = BoundConfig {
            kappa: self.kappa,
            n_max: self.n_max,
            strategy,
            tol: self.tol,
            ..BoundConfig::default()
        };
        cfg.validate()?;
        Ok(Settings { cfg, seed: self.seed })
    }

    fn render(&self, value: &Value) -> String {
        match self.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Text => report::to_text(value),
        }
    }
}

fn zoo_spec(args: &ZooArgs) -> Result<ZooSpec> {
    Ok(match args.name.as_str() {
        "paper-example" => ZooSpec::PaperExample,
        "haggstrom" => ZooSpec::Haggstrom { levels: args.levels },
        "two-state" => ZooSpec::TwoState { a: args.a, b: args.b },
        "cycle" => ZooSpec::Cycle { m: args.m },
        "random-stochastic" => ZooSpec::RandomStochastic {
            dim: args.dim,
            seed: args.seed,
            sparsity: args.sparsity,
        },
        "random-reversible" => ZooSpec::RandomReversible {
            dim: args.dim,
            seed: args.seed,
        },
        other => bail!("unknown zoo chain {other:?}"),
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze { file, common } => {
            let settings = common.settings()?;
            let value = report::analyze(&load(&file)?, &settings)?;
            print!("{}", common.render(&value));
            Ok(0)
        }
        Command::Certify { file, common } => {
            let settings = common.settings()?;
            let (value, verdict) = report::certify_report(&load(&file)?, &settings)?;
            print!("{}", common.render(&value));
            Ok(match verdict {
                Verdict::HasGap => 0,
                Verdict::NoGapWitness => 3,
                Verdict::Undecided => 4,
            })
        }
        Command::Constants { file, orders, common } => {
            if orders.contains(&0) {
                bail!("orders must be at least 1");
            }
            let settings = common.settings()?;
            let value = report::constants_report(&load(&file)?, &settings, &orders)?;
            print!("{}", common.render(&value));
            Ok(0)
        }
        Command::Zoo(args) => {
            let mut kernel = zoo_spec(&args)?.build()?;
            if let Some(eps) = args.perturb {
                kernel = perturb_support_preserving(&kernel, eps, args.seed)?;
            }
            if let Some(eps) = args.lazy {
                kernel = lazy(&kernel, eps)?;
            }
            let mut text = serde_json::to_string_pretty(&input::to_json(&kernel))?;
            text.push('\n');
            write_out(args.output.as_deref(), &text)?;
            Ok(0)
        }
        Command::Verify { suite, trials, common } => {
            let suite: Suite = suite.parse()?;
            let settings = common.settings()?;
            let outcome = run_suite(suite, common.seed, trials, &settings.cfg)?;
            let value = report::verify_json(&outcome, common.seed, trials, &settings);
            print!("{}", common.render(&value));
            for v in &outcome.violations {
                eprintln!("violation [{}] {}: {}", v.check, v.chain, v.detail);
            }
            Ok(if outcome.passed() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
