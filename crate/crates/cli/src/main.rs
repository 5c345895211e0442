use std::io::{self, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

mod commands;
mod table;

use commands::{CliError, Outcome};

#[derive(Parser)]
#[command(
    name = "reallot",
    version,
    about = "Pair-efficiency and Pareto-efficiency checks for housing markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Mode {
    Sp,
    Sd,
}

#[derive(Subcommand)]
enum Command {
    /// Check an allocation for pair-efficiency, Pareto-efficiency and individual rationality.
    Check {
        instance: PathBuf,
        allocation: PathBuf,
        #[arg(long)]
        pair: bool,
        #[arg(long)]
        pareto: bool,
        #[arg(long)]
        ir: bool,
    },
    /// Scan a domain for pair-efficient allocations that are Pareto-dominated.
    #[command(group(ArgGroup::new("scope").required(true).args(["exhaustive", "random"])))]
    Verify {
        /// sp, sd, all, union, or a comma list such as sp,sd,sp
        #[arg(long)]
        domain: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        exhaustive: bool,
        /// Number of sampled profiles
        #[arg(long, value_name = "TRIALS")]
        random: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Build a pair-efficient but dominated allocation around a preference outside SP or SD.
    Synth {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Ranking, best first, e.g. "h2 h3 h1"
        #[arg(long)]
        pref: String,
        /// Prior order over houses, lowest first (default h1 ... hn)
        #[arg(long)]
        order: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// Pick the designated agents and the bystander matching at random
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for instance.txt, mu.txt and nu.txt
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run top trading cycles and print the allocation file.
    Ttc { instance: PathBuf },
    /// Count pair-efficient and Pareto-efficient allocations.
    #[command(group(ArgGroup::new("source").required(true).args(["instance", "random"])))]
    Count {
        instance: Option<PathBuf>,
        /// Number of random unrestricted profiles
        #[arg(long, value_name = "TRIALS", requires = "n")]
        random: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the preferences of a domain, one per line.
    #[command(group(ArgGroup::new("family").required(true).args(["sp", "sd", "all"])))]
    Enum {
        #[arg(long)]
        sp: bool,
        #[arg(long)]
        sd: bool,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        order: Option<String>,
    },
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let color = io::stdout().is_terminal();
    match cli.command {
        Command::Check {
            instance,
            allocation,
            pair,
            pareto,
            ir,
        } => {
            let all = !(pair || pareto || ir);
            commands::check(
                &instance,
                &allocation,
                pair || all,
                pareto || all,
                ir || all,
                out,
            )
        }
        Command::Verify {
            domain,
            n,
            exhaustive: _,
            random,
            seed,
            jobs,
        } => commands::verify(&domain, n, random, seed, jobs, out),
        Command::Synth {
            mode,
            pref,
            order,
            n,
            seed,
            out: dir,
        } => commands::synth(
            mode,
            &pref,
            order.as_deref(),
            n,
            seed,
            dir.as_deref(),
            color,
            out,
        ),
        Command::Ttc { instance } => commands::ttc(&instance, out),
        Command::Count {
            instance,
            random,
            n,
            seed,
        } => match instance {
            Some(path) => commands::count_file(&path, out),
            None => commands::count_random(random.unwrap_or(0), n.unwrap_or(0), seed, out),
        },
        Command::Enum {
            sp,
            sd,
            all: _,
            m,
            order,
        } => commands::enumerate(sp, sd, m, order.as_deref(), out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = run(cli, &mut out);
    let _ = out.flush();
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
