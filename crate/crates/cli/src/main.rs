use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kmerco::plan::{DEFAULT_ALPHA, DEFAULT_FPP, DEFAULT_HASHES, DEFAULT_SEED};
use kmerco::{SequenceFormat, DEFAULT_TAU};

mod commands;
mod error;

#[derive(Parser, Debug)]
#[command(name = "kmerco", version, about = "K-mer counting and classification with a packed-counter Bloom filter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print filter dimensions for a k-mer count without building anything
    Plan {
        /// Number of k-mers the filter is sized for
        #[arg(long, short = 'n')]
        n: u64,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Insertion phase: build the filter and the distinct k-mer list
    Count {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        filter: FilterArgs,
        /// Size the filter for this many k-mers instead of pre-scanning the input
        #[arg(long)]
        expected_n: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Classification phase: split a distinct list into trustworthy and erroneous k-mers
    Classify {
        /// Filter written by `count`
        #[arg(long, default_value = "filter.kmco")]
        filter: PathBuf,
        /// Distinct list written by `count`
        #[arg(long, default_value = "distinct.txt")]
        distinct: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU, value_parser = clap::value_parser!(u64).range(1..))]
        tau: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Exact counts and exact classification
    Oracle {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_TAU, value_parser = clap::value_parser!(u64).range(1..))]
        tau: u64,
        /// Seed deciding canonical forms; match the filter's seed to compare lists
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run count, classify and oracle, then write a comparison report
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long, default_value_t = DEFAULT_TAU, value_parser = clap::value_parser!(u64).range(1..))]
        tau: u64,
        #[arg(long)]
        expected_n: Option<u64>,
        /// Dataset name in the report (defaults to the first input's file name)
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print a filter file's plan and fill statistics
    Info {
        filter: PathBuf,
    },
    /// Write synthetic reads as FASTA
    Simulate {
        #[arg(long, default_value_t = 10_000)]
        genome_len: usize,
        #[arg(long, default_value_t = 5_000)]
        reads: usize,
        #[arg(long, default_value_t = 100)]
        read_len: usize,
        #[arg(long, default_value_t = 0.001)]
        error_rate: f64,
        #[arg(long, default_value_t = 0.0)]
        n_rate: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file ("-" for stdout)
        #[arg(long, short, default_value = "-")]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Sequence files (FASTA, FASTQ or one sequence per line; gzip is detected)
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// K-mer length
    #[arg(long, short, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    format: Format,
    /// Skip malformed records instead of stopping
    #[arg(long)]
    skip_bad_records: bool,
}

#[derive(Args, Debug, Clone, Copy)]
struct FilterArgs {
    /// Target false positive probability
    #[arg(long, default_value_t = DEFAULT_FPP)]
    fpp: f64,
    /// Counter width in bits
    #[arg(long, default_value_t = DEFAULT_ALPHA, value_parser = clap::value_parser!(u8).range(5..=16))]
    alpha: u8,
    /// Hash functions per k-mer
    #[arg(long, default_value_t = DEFAULT_HASHES, value_parser = clap::value_parser!(u8).range(1..))]
    hashes: u8,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Format {
    Fasta,
    Fastq,
    Lines,
    Auto,
}

impl From<Format> for SequenceFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Fasta => SequenceFormat::Fasta,
            Format::Fastq => SequenceFormat::Fastq,
            Format::Lines => SequenceFormat::Lines,
            Format::Auto => SequenceFormat::Auto,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kmerco: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
