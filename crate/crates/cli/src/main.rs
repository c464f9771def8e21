use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ptel::explorer::{PointSet, TransitionGraph};
use ptel::formula::{expand_derived, nnf_with, parse_formula, NnfOptions};
use ptel::proof::{FuzzConfig, Kernel};
use ptel_cli::run::{self, RunOptions};
use ptel_cli::{load_program, load_proofs, load_spec, CliError, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "ptel", version, about = "Temporal-epistemic checking of shared-memory programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every directive of a spec file against a program.
    Check {
        program: PathBuf,
        spec: PathBuf,
        /// Override an initial shared value, e.g. `victim=1`.
        #[arg(long = "init", value_name = "VAR=VALUE")]
        inits: Vec<String>,
        /// Run only the named directive (repeatable).
        #[arg(long = "only", value_name = "NAME")]
        only: Vec<String>,
        /// Exploration budget in scheduling-tree nodes or graph states.
        #[arg(long, default_value_t = ptel::explorer::DEFAULT_NODE_CAP)]
        node_cap: usize,
    },
    /// Dump the bounded point set or the reachable transition graph.
    Explore {
        program: PathBuf,
        #[arg(long, conflicts_with = "graph", required_unless_present = "graph")]
        depth: Option<usize>,
        #[arg(long)]
        graph: bool,
        #[arg(long = "init", value_name = "VAR=VALUE")]
        inits: Vec<String>,
        #[arg(long, default_value_t = ptel::explorer::DEFAULT_NODE_CAP)]
        node_cap: usize,
    },
    /// Check a proof script, optionally cross-checking it on random models.
    Prove {
        script: PathBuf,
        #[arg(long)]
        fuzz: bool,
        #[arg(long, default_value_t = 100)]
        models: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Test switch: let `prev` drop its `Y true` side condition.
        #[arg(long, hide = true)]
        seeded_prev_bug: bool,
    },
    /// Print the negation normal form of a formula.
    Nnf {
        formula: String,
        /// Unfoldings of a negated `S` before leaving an `nsince` residual.
        #[arg(long, default_value_t = 3)]
        unfold_depth: usize,
        /// Program supplying variable domains for `chg`, `frame` and the like.
        #[arg(long)]
        program: Option<PathBuf>,
    },
    /// Evaluate a formula at one explicit point.
    Trace {
        program: PathBuf,
        /// Comma-separated thread names, e.g. `T0,T1,T0`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        labels: Vec<String>,
        #[arg(long)]
        eval: String,
        /// Position in the prefix; defaults to its end.
        #[arg(long)]
        index: Option<usize>,
        /// Depth of the model knowledge is evaluated in; defaults to the prefix length.
        #[arg(long)]
        depth: Option<usize>,
        /// Spec file whose definitions the formula may use.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Named constraint from the spec file.
        #[arg(long, requires = "spec")]
        constraint: Option<String>,
        #[arg(long = "init", value_name = "VAR=VALUE")]
        inits: Vec<String>,
        #[arg(long, default_value_t = ptel::explorer::DEFAULT_NODE_CAP)]
        node_cap: usize,
    },
}

/// Print to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn status(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn execute(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Check {
            program,
            spec,
            inits,
            only,
            node_cap,
        } => {
            let p = load_program(&program, &inits)?;
            let s = load_spec(&spec)?;
            let opts = RunOptions {
                node_cap,
                only: (!only.is_empty()).then_some(only),
            };
            let report = run::run_spec(&p, &s, &opts)?;
            emit(&json(&report));
            Ok(status(report.ok()))
        }
        Command::Explore {
            program,
            depth,
            graph,
            inits,
            node_cap,
        } => {
            let p = load_program(&program, &inits)?;
            if graph {
                emit(TransitionGraph::reachable(&p, None, node_cap)?.render(&p).trim_end());
            } else {
                let ps = PointSet::explore(&p, depth.unwrap_or(0), None, node_cap)?;
                emit(run::render_points(&p, &ps).trim_end());
            }
            Ok(EXIT_OK)
        }
        Command::Prove {
            script,
            fuzz,
            models,
            seed,
            seeded_prev_bug,
        } => {
            let ds = load_proofs(&script)?;
            let cfg = FuzzConfig {
                models,
                seed,
                ..FuzzConfig::default()
            };
            let report = run::prove(&ds, Kernel { seeded_prev_bug }, fuzz.then_some(&cfg));
            emit(&json(&report));
            Ok(status(report.ok()))
        }
        Command::Nnf {
            formula,
            unfold_depth,
            program,
        } => {
            let f = parse_formula(&formula)?;
            let core = match program {
                Some(path) => expand_derived(&f, &load_program(&path, &[])?)?,
                None => expand_derived(&f, &ptel::formula::NoDomains)?,
            };
            let opts = NnfOptions {
                unfold_depth,
                allow_residual: true,
            };
            emit(&nnf_with(&core, opts)?.to_string());
            Ok(EXIT_OK)
        }
        Command::Trace {
            program,
            labels,
            eval,
            index,
            depth,
            spec,
            constraint,
            inits,
            node_cap,
        } => {
            let p = load_program(&program, &inits)?;
            let s = spec.as_deref().map(load_spec).transpose()?.unwrap_or_default();
            let f = s.resolve(&parse_formula(&eval)?)?;
            let cons = run::constraint(&p, &s, constraint.as_deref())?;
            let labels: Vec<String> = labels.into_iter().filter(|l| !l.is_empty()).collect();
            let report = run::trace(&p, &labels, index, &f, depth, cons.as_ref(), node_cap)?;
            emit(&json(&report));
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(EXIT_USAGE as u8);
        }
        Err(e) => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
