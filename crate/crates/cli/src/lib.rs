//! Command-line front end for the `sbtd` library.

pub mod commands;
pub mod document;
pub mod error;
pub mod spec;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "sbtd", version, about = "Condition numbers of structured block term decompositions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Direct,
    Compressed,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    IllcondBtd,
    RandomCpd,
    RandomBtd,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Condition number of a decomposition stored as JSON.
    Cond {
        #[arg(long)]
        decomp: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Compressed)]
        method: MethodArg,
        /// Absolute threshold below which σ_min counts as zero.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Exit with status 2 when the decomposition is ill-posed.
        #[arg(long)]
        fail_on_illposed: bool,
    },
    /// Write a synthetic decomposition.
    Gen {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model parameter, repeatable (e.g. `n=100`, `dims=5x5x5`).
        #[arg(long = "param", value_parser = spec::parse_param)]
        params: Vec<(String, String)>,
        #[arg(long)]
        out: PathBuf,
        /// Inflated copy (illcond-btd only).
        #[arg(long)]
        out_inflated: Option<PathBuf>,
    },
    /// Check compression invariance of κ on random instances.
    Verify {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instances with larger κ are skipped.
        #[arg(long, default_value_t = 1e8)]
        max_kappa: f64,
        #[arg(long, default_value_t = 1e-8)]
        rel_tol: f64,
        /// Draw near-singular two-block instances instead.
        #[arg(long)]
        adversarial: bool,
    },
    /// Time the direct and compressed computations.
    Bench {
        /// Ambient shape, repeatable (e.g. `60x40x40`).
        #[arg(long = "dims", required = true)]
        dims: Vec<String>,
        /// `cpd:R`, or blocks such as `2x2x1,2x2x1` or `2x2x1*2`.
        #[arg(long)]
        ranks: String,
        #[arg(long, default_value_t = 3)]
        repeat: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Perturbation amplification ratios against κ.
    Probe {
        #[arg(long)]
        decomp: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also probe along the most sensitive direction and check that its
        /// ratio equals κ.
        #[arg(long)]
        inject_singular: bool,
    },
}

/// Runs a parsed command, writing records to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> CliResult<()> {
    match cli.command {
        Command::Cond {
            decomp,
            method,
            tol,
            format,
            fail_on_illposed,
        } => commands::cond(&decomp, method, tol, format, fail_on_illposed, out),
        Command::Gen {
            model,
            seed,
            params,
            out: path,
            out_inflated,
        } => commands::gen(model, seed, &params, &path, out_inflated.as_deref()),
        Command::Verify {
            trials,
            seed,
            max_kappa,
            rel_tol,
            adversarial,
        } => commands::verify(trials, seed, max_kappa, rel_tol, adversarial, out),
        Command::Bench {
            dims,
            ranks,
            repeat,
            seed,
        } => commands::bench(&dims, &ranks, repeat, seed, out),
        Command::Probe {
            decomp,
            samples,
            seed,
            inject_singular,
        } => commands::probe(&decomp, samples, seed, inject_singular, out),
    }
}
