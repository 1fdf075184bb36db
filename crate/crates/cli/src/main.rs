mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Hecke eigenforms, L-values and shifted-moment experiments.
#[derive(Debug, Parser)]
#[command(name = "lmoment", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads. `LMOMENT_THREADS` applies when this is absent.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for every sampling probe.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Constant standing in for the O(1) terms of the GRH bounds.
    #[arg(long = "slack-C", global = true, default_value_t = lmoment::harper::DEFAULT_SLACK_C)]
    pub slack_c: f64,
    /// Ladder cutoff: 𝓙 counts the α_i below 10^{-T}.
    #[arg(long = "T", global = true, default_value_t = 1.0)]
    pub t_cut: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltinSet {
    Level1,
    All,
}

/// Where a family comes from.
#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub builtin_set: Option<BuiltinSet>,
    /// Built-in form ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub id: Vec<String>,
    /// Coefficient files.
    #[arg(long, num_args = 1..)]
    pub forms: Vec<PathBuf>,
    /// Coefficients generated per built-in form.
    #[arg(long, default_value_t = lmoment::forms::DEFAULT_N_MAX)]
    pub n_max: usize,
}

/// Exponents, shifts and height exponent of the moment.
#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,1")]
    pub a: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,-1")]
    pub t: Vec<f64>,
    #[arg(long = "A", default_value_t = 1.0)]
    pub big_a: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write coefficient files for built-in forms.
    GenForms {
        /// Built-in form ids, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        id: Vec<String>,
        #[arg(long, default_value_t = lmoment::forms::DEFAULT_N_MAX)]
        n_max: usize,
    },
    /// Run the property suites; exits 1 when any check fails.
    Verify {
        #[command(flatten)]
        family: FamilyArgs,
        /// Suites to run; all when absent.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        /// Points for the Mertens suite.
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    },
    /// Evaluate L(σ+it, f).
    Lvalue {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
        t: Vec<f64>,
    },
    /// Shifted moment over a family.
    Moment {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        spec: SpecArgs,
        /// Attribute each form to its S(j) bucket.
        #[arg(long)]
        buckets: bool,
        /// Level of the ladder used for the buckets; the family level when absent.
        #[arg(long = "N")]
        big_n: Option<u64>,
    },
    /// Bucket labels, threshold margins, window sums and GRH-bound margins.
    Harper {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long = "N")]
        big_n: Option<u64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Lengths x for the GRH-bound margins.
        #[arg(long, value_delimiter = ',', default_value = "50,100,500")]
        x: Vec<f64>,
    },
    /// Explicit part of the Petersson average.
    Petersson {
        #[arg(long)]
        kappa: u32,
        #[arg(long)]
        level: u64,
        #[arg(long)]
        n: u64,
        #[arg(long = "Y", default_value_t = 1.0)]
        y: f64,
        #[arg(long)]
        c_max: Option<u64>,
        /// Family whose Σ λ(n) is compared with the explicit part.
        #[command(flatten)]
        family: FamilyArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.source);
            ExitCode::from(e.code)
        }
    }
}
