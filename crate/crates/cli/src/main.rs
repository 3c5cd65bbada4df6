//! `mzq`: build and certify sampling families, fit approximations and quadrature rules, and
//! run convergence sweeps.
//!
//! Exit codes: 0 ok, 1 numerical failure, 2 certification failure, 3 output exists without
//! `--force`, 4 unreadable or malformed input, 5 invalid parameters or spec.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mzq_core::DomainKind;

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "mzq", version, about = "Marcinkiewicz-Zygmund sampling, least-lq approximation and quadrature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Interval,
    Disk,
    Sphere2,
}

impl From<DomainArg> for DomainKind {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Interval => DomainKind::Interval,
            DomainArg::Disk => DomainKind::Disk,
            DomainArg::Sphere2 => DomainKind::Sphere2,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a certified layer from a maximal (gamma/n)-separated set.
    BuildFamily {
        #[arg(long, value_enum)]
        domain: DomainArg,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Recompute the MZ constants of a layer for a given q.
    Certify {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        /// Random polynomials used to estimate the constants when q != 2.
        #[arg(long, default_value_t = 200)]
        ensemble: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the updated layer here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Approximate a test function on one or more layers and report the errors.
    Approx {
        #[arg(long = "family", required = true)]
        families: Vec<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        /// `packet` or a witness name (see `witness-list`).
        #[arg(long, default_value = "packet")]
        testfn: String,
        /// Packet smoothness.
        #[arg(long, default_value_t = 3.0)]
        r: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = mzq_core::testfns::DEFAULT_PACKET_DEGREE)]
        packet_degree: usize,
        /// CSV, or JSON when the name ends in `.json`; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Build the least-squares quadrature rule of a layer.
    Quad {
        #[arg(long)]
        family: PathBuf,
        /// Also integrate `packet` or a witness and report the error.
        #[arg(long)]
        testfn: Option<String>,
        #[arg(long, default_value_t = 3.0)]
        r: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = mzq_core::testfns::DEFAULT_PACKET_DEGREE)]
        packet_degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Run a convergence sweep from a JSON spec; prints `slope=<value>`.
    Convergence {
        spec: PathBuf,
        /// CSV table; defaults to the spec's `csv` field, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the closed-form test functions.
    WitnessList {
        #[arg(long, value_enum, default_value = "disk")]
        domain: DomainArg,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    mzq_core::oracle::order_override()?;
    match cli.command {
        Command::BuildFamily {
            domain,
            mu,
            n,
            gamma,
            seed,
            out,
            force,
        } => commands::build_family(domain.into(), mu, n, gamma, seed, &out, force),
        Command::Certify {
            family,
            q,
            ensemble,
            seed,
            out,
            force,
        } => commands::certify(&family, q, ensemble, seed, out.as_deref(), force),
        Command::Approx {
            families,
            q,
            testfn,
            r,
            seed,
            packet_degree,
            out,
            force,
        } => commands::approx(
            &families,
            q,
            &commands::TestFn::parse(&testfn, r, seed, packet_degree),
            out.as_deref(),
            force,
        ),
        Command::Quad {
            family,
            testfn,
            r,
            seed,
            packet_degree,
            out,
            force,
        } => commands::quad(
            &family,
            testfn.map(|t| commands::TestFn::parse(&t, r, seed, packet_degree)).as_ref(),
            out.as_deref(),
            force,
        ),
        Command::Convergence { spec, out, force, jobs } => {
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            commands::convergence(&spec, out.as_deref(), force, jobs)
        }
        Command::WitnessList { domain, mu } => commands::witness_list(domain.into(), mu),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(5) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("mzq: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
