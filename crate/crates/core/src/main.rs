use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pfd_core::faulttree::build_case_tree;
use pfd_core::markov::build_generator;
use pfd_core::model::{check_validity, load_case};
use pfd_core::petri::build_case_net;
use pfd_core::report::{self, Format, RunOptions};
use pfd_core::{CaseId, Error, Method, SafetyParams};

const EXIT_INPUT: u8 = 1;
const EXIT_ENGINE: u8 = 2;
const EXIT_REPRODUCE: u8 = 3;

#[derive(Parser)]
#[command(name = "pfd", version, about = "PFDavg of M-out-of-N safety subsystems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
#[group(required = true, multiple = false)]
struct CaseSource {
    /// Built-in case: i, ii, iii, iv, v, vi or all.
    #[arg(long)]
    case: Option<String>,
    /// Parameter set as a flat JSON object.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Analytic,
    Faulttree,
    Markov,
    Petri,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Faulttree,
    Markov,
    Petri,
}

#[derive(Subcommand)]
enum Command {
    /// Compute PFDavg with one or all engines.
    Run {
        #[command(flatten)]
        source: CaseSource,
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
        /// Monte Carlo histories for the Petri engine.
        #[arg(long, default_value_t = pfd_core::petri::DEFAULT_HISTORIES)]
        histories: u64,
        #[arg(long, env = "PFD_SEED", default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the validity conditions of the closed-form equations.
    Validate {
        #[command(flatten)]
        source: CaseSource,
    },
    /// Rerun the built-in cases and compare with the reference results.
    Reproduce {
        /// Skip the Monte Carlo checks (the slow part of the suite).
        #[arg(long)]
        skip_petri: bool,
        #[arg(long, default_value_t = pfd_core::petri::DEFAULT_HISTORIES)]
        histories: u64,
        #[arg(long, env = "PFD_SEED", default_value_t = 42)]
        seed: u64,
    },
    /// Print the fault tree, Markov graph or Petri net built for a case.
    Dump {
        #[command(flatten)]
        source: CaseSource,
        #[arg(long, value_enum)]
        model: ModelArg,
    },
}

fn load_cases(source: &CaseSource) -> pfd_core::Result<Vec<(String, SafetyParams)>> {
    if let Some(path) = &source.input {
        let text = fs::read_to_string(path)?;
        let params: SafetyParams = serde_json::from_str(&text)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".into());
        return Ok(vec![(name, params)]);
    }
    let case = source.case.as_deref().unwrap_or("all");
    if case.eq_ignore_ascii_case("all") {
        return Ok(CaseId::ALL
            .into_iter()
            .map(|id| (id.to_string(), load_case(id)))
            .collect());
    }
    let id: CaseId = case.parse()?;
    Ok(vec![(id.to_string(), load_case(id))])
}

fn methods(arg: MethodArg) -> Vec<Method> {
    match arg {
        MethodArg::Analytic => vec![Method::Analytic],
        MethodArg::Faulttree => vec![Method::FaultTree],
        MethodArg::Markov => vec![Method::Markov],
        MethodArg::Petri => vec![Method::Petri],
        MethodArg::All => Method::ALL.to_vec(),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Engine { .. }
        | Error::FaultTree(_)
        | Error::MissingEventProbability(_)
        | Error::NonConvergent { .. }
        | Error::NonStochastic(_)
        | Error::InvalidNet(_)
        | Error::Livelock { .. }
        | Error::TooManyAborted { .. } => EXIT_ENGINE,
        _ => EXIT_INPUT,
    }
}

fn write_output(out: Option<&PathBuf>, doc: &str) -> pfd_core::Result<()> {
    match out {
        Some(path) => fs::write(path, doc)?,
        None => std::io::stdout().write_all(doc.as_bytes())?,
    }
    Ok(())
}

fn execute(command: Command) -> pfd_core::Result<u8> {
    match command {
        Command::Run {
            source,
            method,
            histories,
            seed,
            format,
            out,
        } => {
            let cases = load_cases(&source)?;
            let opts = RunOptions { histories, seed };
            let methods = methods(method);
            let rows = cases
                .iter()
                .map(|(name, p)| report::run_case(name, p, &methods, opts))
                .collect::<pfd_core::Result<Vec<_>>>()?;
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            write_output(out.as_ref(), &report::emit(&rows, format)?)?;
            Ok(0)
        }
        Command::Validate { source } => {
            for (name, p) in load_cases(&source)? {
                let warnings = check_validity(&p);
                if warnings.is_empty() {
                    println!("case {name}: ok");
                }
                for w in warnings {
                    println!("case {name}: WARNING {w}");
                }
            }
            Ok(0)
        }
        Command::Reproduce {
            skip_petri,
            histories,
            seed,
        } => {
            let mut checks = report::reproduce_deterministic()?;
            if !skip_petri {
                for id in CaseId::ALL {
                    checks.extend(report::reproduce_petri_case(id, RunOptions { histories, seed })?);
                }
            }
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            println!("{} checks, {failed} failed", checks.len());
            Ok(if failed == 0 { 0 } else { EXIT_REPRODUCE })
        }
        Command::Dump { source, model } => {
            for (name, p) in load_cases(&source)? {
                println!("# case {name} ({})", p.architecture());
                let text = match model {
                    ModelArg::Faulttree => build_case_tree(&p)?.render(),
                    ModelArg::Markov => build_generator(&p)?.render(),
                    ModelArg::Petri => build_case_net(&p)?.render(),
                };
                print!("{text}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
