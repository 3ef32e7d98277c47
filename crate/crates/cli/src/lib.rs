//! The `effint` command line tool as a library: argument parsing, command
//! dispatch and report rendering. [`run`] does everything except writing
//! to the terminal, so tests can drive it directly.

pub mod commands;
pub mod config;
pub mod gallery;
pub mod report;

use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use effint::measure::Precision;

use report::{FlagsEcho, Outcome};

#[derive(Parser, Debug)]
#[command(name = "effint", version, about = "Checks, constructions and reports for effective-interval systems")]
pub struct Cli {
    #[command(flatten)]
    pub opts: Opts,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every command.
#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// Absolute tolerance for masses and energies.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Recursion depth for Cantor staircases.
    #[arg(long, global = true, default_value_t = 40)]
    pub depth: u32,
    /// Members of each infinite family inspected before tail bounds are used.
    #[arg(long = "prefix-depth", global = true, default_value_t = 32)]
    pub prefix_depth: usize,
    /// Relative tolerance for numeric comparisons.
    #[arg(long = "rel-tol", global = true, default_value_t = 1e-6)]
    pub rel_tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for sampled witnesses.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for independent sub-evaluations.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Add wall-clock time to the report.
    #[arg(long, global = true)]
    pub timing: bool,
}

impl Default for Opts {
    fn default() -> Opts {
        Opts { tol: 1e-9, depth: 40, prefix_depth: 32, rel_tol: 1e-6, format: Format::Json, seed: 0, threads: 1, timing: false }
    }
}

impl Opts {
    pub fn precision(&self) -> Precision {
        Precision { tol: self.tol, cantor_depth: self.depth, prefix: self.prefix_depth, ..Precision::default() }
    }

    pub fn echo(&self) -> FlagsEcho {
        FlagsEcho { tol: self.tol, depth: self.depth, prefix_depth: self.prefix_depth, rel_tol: self.rel_tol, seed: self.seed }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
}

/// Configuration arguments are paths or `builtin:<name>`.
#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Check that a configuration describes an effective system.
    Validate { config: String },
    /// Is CANDIDATE a subspace of PARENT?
    CheckSubspace { candidate: String, parent: String },
    /// Do two systems have the same intervals and scale measures?
    CheckEqual { first: String, second: String },
    /// Restrict scale measures by a named shrink specification.
    Shrink {
        config: String,
        #[arg(long)]
        shrink: String,
    },
    /// Merge the tight classes.
    MergeMinimal { config: String },
    /// Merge the loose classes.
    MergeMaximal { config: String },
    /// Merge along a named pre-merging plan.
    MergePlan {
        config: String,
        #[arg(long)]
        plan: String,
    },
    /// Shrink, merge tight classes, then apply a plan.
    Pipeline {
        config: String,
        #[arg(long)]
        shrink: Option<String>,
        #[arg(long)]
        plan: Option<String>,
    },
    /// The subspace generated by a generator scale.
    FSubspace {
        config: String,
        #[arg(long)]
        generator: String,
    },
    /// Does a generator scale give a special standard core?
    CoreCheck {
        config: String,
        #[arg(long)]
        generator: String,
    },
    /// Build a generator scale giving a core and verify it.
    ConstructCore { config: String },
    /// Do two generator scales give the same subspace?
    SameSubspace {
        config: String,
        #[arg(long)]
        first: String,
        #[arg(long)]
        second: String,
    },
    /// Energy of a test function.
    Energy {
        #[arg(long)]
        system: String,
        /// Tent through (A, 0), (B, 1), (C, 0).
        #[arg(long, num_args = 3, value_names = ["A", "B", "C"], allow_negative_numbers = true)]
        tent: Option<Vec<String>>,
        /// A test function named in the configuration.
        #[arg(long, conflicts_with = "tent")]
        function: Option<String>,
    },
    /// Reproduce a gallery entry with expected-versus-observed checks.
    Gallery {
        id: Option<String>,
        #[arg(long, conflicts_with = "id")]
        all: bool,
    },
    /// Print the configuration of a built-in system.
    Export { name: String },
    /// Print the JSON schema of configuration files.
    Schema,
}

/// What a run printed and how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Outcome::Error.exit_code() } else { 0 };
            let text = e.render().to_string();
            return if e.use_stderr() {
                RunOutput { stdout: String::new(), stderr: text, code }
            } else {
                RunOutput { stdout: text, stderr: String::new(), code }
            };
        }
    };
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> RunOutput {
    match &cli.command {
        Command::Export { name } => match config::builtin_config(name) {
            Some(c) => RunOutput { stdout: config::to_json(&c), stderr: String::new(), code: 0 },
            None => RunOutput { stdout: String::new(), stderr: format!("unknown built-in system {name:?}\n"), code: Outcome::Error.exit_code() },
        },
        Command::Schema => RunOutput { stdout: config::schema_json(), stderr: String::new(), code: 0 },
        command => {
            let start = Instant::now();
            let mut report = commands::execute(command, &cli.opts);
            if cli.opts.timing {
                report.timing_ms = Some((start.elapsed().as_secs_f64() * 1e6).round() / 1e3);
            }
            let stderr = report.error.as_ref().map(|e| format!("error: {e}\n")).unwrap_or_default();
            RunOutput { stdout: report.to_json(), stderr, code: report.exit_code() }
        }
    }
}
