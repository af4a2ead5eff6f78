use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynkin::app::{self, Overrides};
use dynkin::catalog::PRESETS;
use dynkin::config::Config;
use dynkin::error::Error;
use dynkin::report::{canonical_json, violations_document};

#[derive(Parser)]
#[command(
    name = "dynkin",
    version,
    about = "Perpetual Dynkin games on one-dimensional diffusions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write the curve and report.
    Solve {
        #[command(flatten)]
        input: Input,
        /// Also run every invariant suite; exit 3 on a violation.
        #[arg(long)]
        check: bool,
    },
    /// Solve, then run the Monte Carlo stage.
    Simulate {
        #[command(flatten)]
        input: Input,
    },
    /// Solve and run every invariant suite; exit 3 on a violation.
    Check {
        #[command(flatten)]
        input: Input,
    },
    /// Catalog entries.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
}

#[derive(Args)]
struct Input {
    /// Problem file.
    config: Option<PathBuf>,
    /// Use a catalog entry with default settings instead of a file.
    #[arg(long, conflicts_with = "config")]
    catalog: Option<String>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write only this format.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

impl Input {
    fn config(self) -> Result<Config, Error> {
        let mut c = match (&self.config, &self.catalog) {
            (Some(p), _) => Config::load(p)?,
            (None, Some(name)) => Config::parse(&format!("[payoff]\ncatalog = {name}\n"))?,
            (None, None) => {
                return Err(Error::Config {
                    line: 0,
                    message: "give a config file or --catalog NAME".into(),
                })
            }
        };
        Overrides {
            grid_points: self.grid_points,
            x_min: self.x_min,
            x_max: self.x_max,
            seed: self.seed,
            paths: self.paths,
            output: self.output,
            format: self.format,
        }
        .apply(&mut c)?;
        Ok(c)
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn finish(run: &app::SolveRun) -> Result<(), Error> {
    for p in app::emit(run)? {
        eprintln!("wrote {}", p.display());
    }
    if run.solved.truncation_warning {
        eprintln!(
            "warning: bracket gap {:e} exceeds the threshold; widen the grid",
            run.solved.envelope.bracket_gap_rel
        );
    }
    Ok(())
}

fn checked(run: &app::SolveRun) -> ExitCode {
    let v = run.solved.self_check();
    if v.is_empty() {
        ExitCode::SUCCESS
    } else {
        print!("{}", canonical_json(&violations_document(&v)));
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Catalog {
            action: CatalogAction::List,
        } => {
            for p in PRESETS {
                println!("{:<20} {}", p.name, p.description);
            }
            return ExitCode::SUCCESS;
        }
        Command::Solve { input, check } => input.config().and_then(|c| {
            let run = app::run_all(&c)?;
            finish(&run)?;
            Ok(if check {
                checked(&run)
            } else {
                ExitCode::SUCCESS
            })
        }),
        Command::Simulate { input } => input.config().and_then(|mut c| {
            c.mc.enabled = true;
            let run = app::run_all(&c)?;
            finish(&run)?;
            let mc = &run.document["mc"];
            eprintln!(
                "R(tau*, gamma*) = {} +- {} (V = {}, tol_disc = {}), probe: {}",
                mc["estimate"]["mean"],
                mc["estimate"]["stderr"],
                mc["value"],
                mc["tol_disc"],
                mc["probe"]["conclusion"]
            );
            Ok(ExitCode::SUCCESS)
        }),
        Command::Check { input } => input.config().and_then(|c| {
            let run = app::run_solve(&c)?;
            Ok(checked(&run))
        }),
    };
    result.unwrap_or_else(fail)
}
