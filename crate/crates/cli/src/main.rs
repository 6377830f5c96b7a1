//! `aigsense`: exact AIG synthesis, one-bit repair and mutation-graph checks.
//!
//! Exit codes: 0 success (or bound holds), 1 usage or input error,
//! 2 only an upper bound (or nothing) was established, 3 bound violated,
//! 4 the store does not cover every class.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aigsense_core::store::STORE_ENV;
use output::Format;

#[derive(Parser)]
#[command(name = "aigsense", version, about = "Exact AIG sizes, repair gadgets and NPN mutation graphs")]
struct Cli {
    /// Machine output format on stdout; `table` prints the human table instead.
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,

    /// Result store (JSON lines).
    #[arg(long, env = STORE_ENV, global = true)]
    store: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, default_value_t = 1, global = true)]
    jobs: usize,

    /// Do not echo the human table on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Enum,
    CnfExport,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value = "enum")]
    backend: BackendArg,
    /// Time limit per gate count, in seconds.
    #[arg(long, default_value_t = 3600)]
    budget_secs: u64,
    /// Largest gate count to try.
    #[arg(long, default_value_t = 12)]
    max_gates: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum AIG size of one table, or of every class with --campaign.
    Synth {
        /// Truth table in hex, row 0 in the least significant bit.
        tt: Option<String>,
        #[arg(short)]
        n: usize,
        #[command(flatten)]
        search: SearchArgs,
        /// Work through every NPN class of `n`, resuming from the store.
        #[arg(long)]
        campaign: bool,
        /// Depth of the class sweep that precedes per-class search in a campaign.
        #[arg(long, default_value_t = 8)]
        sweep_depth: usize,
        /// With cnf-export: only this gate count.
        #[arg(long)]
        k: Option<usize>,
        /// With cnf-export: directory for the DIMACS files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// List the NPN classes of `n`-input functions.
    Classify {
        #[arg(short)]
        n: usize,
    },
    /// Mutation graph of the classes in the store.
    Graph {
        #[arg(short)]
        n: usize,
    },
    /// Check |opt(a) - opt(b)| <= n on every mutation edge.
    Verify {
        #[arg(short)]
        n: usize,
    },
    /// Delta histogram in the layout delta / edges / percent.
    Report {
        #[arg(short)]
        n: usize,
    },
    /// Flip truth-table rows of an AIGER circuit with the repair gadget.
    Repair {
        /// ASCII AIGER input.
        input: PathBuf,
        /// Row to flip.
        #[arg(long, conflicts_with = "target", required_unless_present = "target")]
        flip: Option<usize>,
        /// Target truth table in hex; every differing row is flipped.
        #[arg(long)]
        target: Option<String>,
        /// Write the repaired circuit here.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Store exact sizes of every function with n <= 3 from the brute-force oracle.
    Oracle {
        #[arg(short)]
        n: usize,
    },
    /// Read a SAT solver model for an exported CNF and rebuild the circuit;
    /// with a store, the witness is appended there.
    Decode {
        /// Solver output file.
        model: PathBuf,
        #[arg(short)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Table the CNF was generated for.
        #[arg(long)]
        tt: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let ctx = commands::Context {
        store: cli.store.clone(),
        jobs: cli.jobs,
    };
    let result = match cli.command {
        Command::Synth {
            tt,
            n,
            search,
            campaign,
            sweep_depth,
            k,
            out_dir,
        } => {
            if campaign {
                commands::campaign(&ctx, n, &search, sweep_depth)
            } else {
                match tt {
                    Some(tt) => commands::synth(&ctx, &tt, n, &search, k, &out_dir),
                    None => Err(anyhow::anyhow!("synth needs a truth table or --campaign")),
                }
            }
        }
        Command::Classify { n } => commands::classify(n),
        Command::Graph { n } => commands::graph(&ctx, n),
        Command::Verify { n } => commands::verify(&ctx, n),
        Command::Report { n } => commands::report(&ctx, n),
        Command::Repair {
            input,
            flip,
            target,
            output,
        } => commands::repair(&input, flip, target.as_deref(), output.as_deref()),
        Command::Oracle { n } => commands::oracle(&ctx, n),
        Command::Decode { model, n, k, tt } => commands::decode(&ctx, &model, n, k, &tt),
    };
    match result {
        Ok(outcome) => {
            if let Err(e) = outcome.emit(cli.format, cli.quiet) {
                if e.kind() == std::io::ErrorKind::BrokenPipe {
                    return ExitCode::from(outcome.code as u8);
                }
                eprintln!("aigsense: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("aigsense: {e:#}");
            ExitCode::from(1)
        }
    }
}
