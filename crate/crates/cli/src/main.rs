use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crossflux_cli::channel::channel_mesh;
use crossflux_cli::convergence::convergence_study;
use crossflux_cli::run::run_scenario;
use crossflux_cli::scenario::ScenarioFile;
use crossflux_cli::{init_threads, CliError};
use crossflux_core::mesh::{check_admissibility, load_mesh, save_mesh, DEFAULT_ORTHOGONALITY_TOL};

#[derive(Parser)]
#[command(name = "crossflux", version, about = "Finite-volume solver for volume-filling ion transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run { config: PathBuf },
    /// Check a mesh file for admissibility.
    CheckMesh {
        mesh: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORTHOGONALITY_TOL)]
        tol: f64,
    },
    /// Convergence study against a finer reference level.
    Converge {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        levels: Vec<u32>,
        #[arg(long = "ref", default_value_t = 3)]
        reference: u32,
        /// Snapshot steps; defaults to the scenario's snapshot steps.
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
        /// Write the table as CSV here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the hourglass channel mesh at a refinement level.
    MakeChannelMesh {
        #[arg(long)]
        level: u32,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Run { config } => {
            let out = run_scenario(&config)?;
            println!(
                "{}: {} after {} steps, outputs in {}",
                out.manifest.name,
                out.manifest.stop_reason,
                out.manifest.steps,
                out.out_dir.display()
            );
        }
        Command::CheckMesh { mesh, tol } => {
            let mesh = load_mesh(&mesh)?;
            let report = check_admissibility(&mesh, tol);
            println!(
                "cells {}  edges {}  dirichlet {}  orthogonality defect {:e}  zeta {:.4}",
                mesh.num_cells(),
                mesh.num_edges(),
                mesh.num_dirichlet(),
                report.max_orthogonality_defect,
                report.zeta
            );
            if let Some(e) = report.to_error() {
                return Err(e.into());
            }
            println!("admissible");
        }
        Command::Converge { config, levels, reference, steps, output } => {
            let (scenario, _) = ScenarioFile::load(&config)?;
            let steps = steps.unwrap_or_else(|| scenario.output.snapshot_steps.clone());
            let table = convergence_study(&scenario, &levels, reference, &steps)?;
            match output {
                Some(p) => std::fs::write(&p, table.to_csv()).map_err(|e| CliError::io(&p, e))?,
                None => print!("{}", table.to_csv()),
            }
        }
        Command::MakeChannelMesh { level, output } => {
            let mesh = channel_mesh(level)?;
            save_mesh(&mesh, &output)?;
            println!("{} cells written to {}", mesh.num_cells(), output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
