//! Command-line front-end: loads scenario files, runs the verifiers and
//! writes deterministic JSON reports. Exit codes carry the verdict (see
//! [`crate::report`]); a short human-readable summary goes to stderr.

mod commands;
mod file;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::report::{Semantics, EXIT_USAGE};

pub use commands::{cmd_chain, cmd_invariants, cmd_scenarios, cmd_verify, forged_illegal_state, Overrides};
pub use file::{Budgets, FileError, ModelSpec, Pilot, ScenarioFile, StartFamily};

#[derive(Debug, Parser)]
#[command(name = "timebound", version, about = "Time-bound verification for randomized algorithms")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override the seed of the scenario file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the number of simulated runs per start.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Override the time semantics of the scenario file.
    #[arg(long, global = true, value_enum)]
    pub semantics: Option<Semantics>,
    /// Override the node budget of the exact solver.
    #[arg(long, global = true)]
    pub budget_nodes: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every statement and scenario of a scenario file.
    Verify { file: PathBuf },
    /// Compose the statements of a scenario file and bound the expected time.
    Chain { file: PathBuf },
    /// Check the resource invariant on reachable states of a ring.
    Invariants {
        /// Ring size.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Sample random walks of this length instead of exploring every
        /// reachable state (the default for rings of at most 4 processes).
        #[arg(long)]
        depth: Option<usize>,
        /// Number of random walks when sampling.
        #[arg(long, default_value_t = 1000)]
        walks: u64,
        /// States an exhaustive exploration may visit.
        #[arg(long, default_value_t = 10_000_000)]
        budget_states: usize,
        /// Adds a hand-made state violating the invariant (detector test).
        #[arg(long, hide = true)]
        inject_illegal: bool,
    },
    /// List the registered progress scenarios, optionally solving them.
    Scenarios {
        /// Ring size for `--run`.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Solve every scenario and report the values.
        #[arg(long)]
        run: bool,
    },
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: String,
    pub summary: String,
    pub code: i32,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            semantics: self.semantics,
            budget_nodes: self.budget_nodes,
        }
    }
}

/// Runs a parsed command. Errors are invalid inputs (exit 64).
pub fn execute(cli: &Cli) -> Result<Output, FileError> {
    let ov = cli.overrides();
    match &cli.command {
        Command::Verify { file } => cmd_verify(&ScenarioFile::load(file)?, &ov),
        Command::Chain { file } => cmd_chain(&ScenarioFile::load(file)?),
        Command::Invariants {
            n,
            depth,
            walks,
            budget_states,
            inject_illegal,
        } => cmd_invariants(*n, *depth, *walks, *budget_states, ov.seed.unwrap_or(0), *inject_illegal),
        Command::Scenarios { n, run } => cmd_scenarios(*n, *run, &ov),
    }
}

/// Parses `args`, runs the command, writes the report and the summary, and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out = match execute(&cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &out.json).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .write_all(out.json.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    eprint!("{}", out.summary);
    out.code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_flags_parse_after_the_subcommand() {
        let cli = Cli::try_parse_from(["timebound", "verify", "x.json", "--seed", "7", "--semantics", "deadline"])
            .unwrap();
        assert_eq!(cli.seed, Some(7));
        assert_eq!(cli.semantics, Some(Semantics::Deadline));
        assert!(matches!(cli.command, Command::Verify { .. }));
    }

    #[test]
    fn bad_usage_exits_64() {
        assert_eq!(run(["timebound", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["timebound", "verify", "/nonexistent/file.json"]), EXIT_USAGE);
    }
}
