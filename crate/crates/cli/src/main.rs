use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use tm_core::dsl::{self, scenario, SourceFile};
use tm_core::dynamics::{self, SimOptions};
use tm_core::passes::{self, PassConfig};
use tm_core::{export, Level, Model, Role, ValidateOptions};

/// Thinging-machine model toolkit.
#[derive(Debug, Parser)]
#[command(name = "tm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse, validate and check event regions.
    Check {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Report flow-adjacency and trigger problems as warnings.
        #[arg(long)]
        lenient: bool,
    },
    /// Apply simplification rules and print the resulting model.
    Simplify {
        input: PathBuf,
        #[arg(long, default_value = "S1")]
        level: Level,
        /// Roles removed at S3 (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "actor,message")]
        eliminate: Vec<Role>,
        #[command(flatten)]
        out: Output,
    },
    /// Simplify to S3 and print the ER schema as JSON.
    Project {
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Run the chronology against a scenario and print the trace as JSON.
    Simulate {
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        /// Override every repeat block's iteration bound.
        #[arg(long, value_name = "N")]
        max_iter: Option<u32>,
        #[command(flatten)]
        out: Output,
    },
    /// Render the model as a Graphviz digraph.
    ExportDot {
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Project the model and emit CREATE TABLE statements.
    ExportSql {
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Print the canonical JSON dump of the model.
    Dump {
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    /// Model or scenario problems, failed expectations: exit 1.
    Diagnostics,
    /// Missing files and other environment errors: exit 2.
    Usage(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<SourceFile> {
    SourceFile::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path) -> Result<Model, Failure> {
    let src = read(path)?;
    dsl::parse(&src).map_err(|diags| {
        for d in diags {
            eprintln!("{}", d.render(&src.path));
        }
        Failure::Diagnostics
    })
}

fn write(out: &Output, text: &str) -> Result<(), Failure> {
    match &out.output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).context("cannot write to stdout")?;
        }
    }
    Ok(())
}

fn diagnostics(e: impl std::fmt::Display) -> Failure {
    eprintln!("{e}");
    Failure::Diagnostics
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Check { inputs, lenient } => {
            let opts = if lenient { ValidateOptions::lenient() } else { ValidateOptions::default() };
            let mut failed = false;
            for path in &inputs {
                let model = match load(path) {
                    Ok(m) => m,
                    Err(Failure::Diagnostics) => {
                        failed = true;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let report = tm_core::validate_with(&model, opts).merge(dynamics::check_regions(&model));
                for v in &report.violations {
                    eprintln!("{}: {v}", path.display());
                }
                if report.is_clean() {
                    println!("{}: ok", path.display());
                } else {
                    failed = true;
                }
            }
            if failed {
                Err(Failure::Diagnostics)
            } else {
                Ok(())
            }
        }
        Command::Simplify { input, level, eliminate, out } => {
            let model = load(&input)?;
            let config = PassConfig { level, elimination_set: eliminate };
            let simplified = passes::simplify(&model, &config).map_err(diagnostics)?;
            write(&out, &dsl::print(&simplified))
        }
        Command::Project { input, out } => {
            let model = load(&input)?;
            let schema = passes::project(&model).map_err(diagnostics)?;
            write(&out, &(schema.dump() + "\n"))
        }
        Command::Simulate { input, scenario: scn_path, max_iter, out } => {
            let model = load(&input)?;
            let src = read(&scn_path)?;
            let scn = scenario::parse_scenario(&src).map_err(|diags| {
                for d in diags {
                    eprintln!("{}", d.render(&src.path));
                }
                Failure::Diagnostics
            })?;
            let trace = dynamics::simulate_with(&model, &scn, SimOptions { max_iter_override: max_iter })
                .map_err(diagnostics)?;
            write(&out, &(trace.dump() + "\n"))?;
            let mut failed = false;
            for msg in dynamics::check_expectations(&trace, &scn) {
                eprintln!("{}: expectation failed: {msg}", src.path);
                failed = true;
            }
            // Cardinality is only meaningful when the model projects.
            if let Ok(schema) = passes::project(&model) {
                for v in &dynamics::cardinality_check(&trace, &schema).violations {
                    eprintln!("{}: {v}", src.path);
                    failed = true;
                }
            }
            if failed {
                Err(Failure::Diagnostics)
            } else {
                Ok(())
            }
        }
        Command::ExportDot { input, out } => {
            let model = load(&input)?;
            write(&out, &export::to_dot(&model))
        }
        Command::ExportSql { input, out } => {
            let model = load(&input)?;
            let schema = passes::project(&model).map_err(diagnostics)?;
            let ddl = export::to_sql(&schema).map_err(diagnostics)?;
            write(&out, &ddl.to_string())
        }
        Command::Dump { input, out } => {
            let model = load(&input)?;
            write(&out, &(model.dump() + "\n"))
        }
    }
}
