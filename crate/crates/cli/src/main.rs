//! `csp`: energies, relaxation, local search, basin hopping and batch
//! experiments for ionic crystal structures.

mod experiment;
mod inputs;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use csp_core::search;
use csp_core::{
    depth_energy, is_feasible, local_search, random_feasible, relax, io, Convention,
    DepthEvaluator, ImageShell, NeighborhoodSpec, RelaxSettings, SearchSettings,
};
use serde::Serialize;

use inputs::{CliResult, Failure};

#[derive(Parser)]
#[command(name = "csp", version, about = "Crystal structure prediction with depth-k lattice energies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Force-field JSON; the bundled Sr/Ti/O/Y table when omitted.
    #[arg(long)]
    forcefield: Option<PathBuf>,
    /// Write the main result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Neighborhood {
    Axes,
    KIonSwap,
    KSwap,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    BasinHopping,
    AxesBh,
}

#[derive(Subcommand)]
enum Command {
    /// Depth-k energy of a structure.
    Energy {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
        depth: u32,
        /// Count each pair once instead of from both ends.
        #[arg(long)]
        conventional: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Gradient descent at fixed cell.
    Relax {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
        depth: u32,
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
        report_depth: u32,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-3)]
        grad_tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Greedy descent over a combinatorial neighborhood.
    LocalSearch {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, value_enum)]
        neighborhood: Neighborhood,
        /// Ions moved per step for k-ion-swap and k-swap.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Grid step in Å for axes and k-swap.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
        depth: u32,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Basin hopping from random starts, optionally with an axes stage.
    Search {
        #[arg(long, value_enum, default_value = "basin-hopping")]
        mode: Mode,
        /// `srtio3`, `y2ti2o7` or a composition JSON file.
        #[arg(long, default_value = "srtio3")]
        composition: String,
        #[arg(long)]
        formula_units: Option<u32>,
        /// `a,b,c` or `a,b,c,alpha,beta,gamma`; cubic at perovskite density when omitted.
        #[arg(long)]
        cell: Option<String>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        patience: usize,
        #[arg(long, default_value_t = 200)]
        max_relaxations: usize,
        /// Axes grid step in Å; a fifth of the shortest cell length when omitted.
        #[arg(long)]
        delta: Option<f64>,
        /// Relaxation depth.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
        depth: u32,
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
        k_report: u32,
        /// Stop once the best energy reaches this (eV).
        #[arg(long)]
        target: Option<f64>,
        /// Metropolis temperature (eV).
        #[arg(long)]
        temperature: Option<f64>,
        /// Perturb the current structure by this amplitude (Å) instead of drawing fresh starts.
        #[arg(long)]
        perturb: Option<f64>,
        /// Also write one CSV row per relaxation.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Batch experiment from a JSON config; writes CSVs and prints the summary.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Random feasible structure.
    Generate {
        #[arg(long, default_value = "srtio3")]
        composition: String,
        #[arg(long)]
        formula_units: Option<u32>,
        #[arg(long)]
        cell: Option<String>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_attempts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data")
}

fn composition_and_cell(
    name: &str,
    formula_units: Option<u32>,
    cell: Option<&str>,
) -> CliResult<(csp_core::Composition, csp_core::UnitCell)> {
    let mut comp = inputs::composition(name, Path::new("."))?;
    if let Some(z) = formula_units {
        comp.formula_units = z;
    }
    comp.validate()
        .map_err(|e| Failure::Usage(format!("--composition: {e}")))?;
    let cell = match cell {
        Some(spec) => inputs::parse_cell(spec)?,
        None => inputs::default_cell(&comp),
    };
    Ok((comp, cell))
}

#[derive(Serialize)]
struct RelaxSummary {
    initial_energy: f64,
    final_energy: f64,
    report: csp_core::EnergyReport,
    iterations: usize,
    converged: bool,
    max_gradient: f64,
    structure: csp_core::Structure,
}

#[derive(Serialize)]
struct LocalSearchSummary {
    initial_energy: f64,
    final_energy: f64,
    steps: usize,
    at_minimum: bool,
    energy_trace: Vec<f64>,
    structure: csp_core::Structure,
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Energy { structure, depth, conventional, common } => {
            let s = inputs::structure(&structure)?;
            let ff = inputs::forcefield(common.forcefield.as_deref())?;
            if !is_feasible(&s, &ImageShell::new(1)) {
                eprintln!("warning: {} violates the hard-sphere constraint", structure.display());
            }
            let report = if conventional {
                DepthEvaluator::new(&s, &ff, depth)?
                    .with_convention(Convention::Conventional)
                    .report(&s)?
            } else {
                depth_energy(&s, &ff, depth)?
            };
            emit(common.out.as_deref(), &to_json(&report))
        }
        Command::Relax { structure, depth, report_depth, max_iters, grad_tol, common } => {
            let s = inputs::structure(&structure)?;
            let ff = inputs::forcefield(common.forcefield.as_deref())?;
            let settings = RelaxSettings {
                depth,
                report_depth,
                max_iters,
                grad_tol,
                ..RelaxSettings::default()
            };
            settings.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let r = relax(&s, &ff, &settings)?;
            let summary = RelaxSummary {
                initial_energy: r.energy_trace[0],
                final_energy: r.final_relax_energy(),
                report: r.energy,
                iterations: r.iterations,
                converged: r.converged,
                max_gradient: r.max_gradient,
                structure: r.structure,
            };
            emit(common.out.as_deref(), &to_json(&summary))
        }
        Command::LocalSearch { structure, neighborhood, k, delta, depth, max_steps, common } => {
            let s = inputs::structure(&structure)?;
            let ff = inputs::forcefield(common.forcefield.as_deref())?;
            let need_delta = || delta.ok_or_else(|| Failure::Usage("--delta is required for this neighborhood".into()));
            let spec = match neighborhood {
                Neighborhood::Axes => NeighborhoodSpec::axes(need_delta()?),
                Neighborhood::KIonSwap => NeighborhoodSpec::k_ion_swap(k),
                Neighborhood::KSwap => NeighborhoodSpec::k_swap(k, need_delta()?),
            };
            spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let r = local_search(&s, &spec, &ff, depth, max_steps)?;
            let summary = LocalSearchSummary {
                initial_energy: r.energy_trace[0],
                final_energy: *r.energy_trace.last().expect("trace holds the start"),
                steps: r.steps,
                at_minimum: r.at_minimum,
                energy_trace: r.energy_trace,
                structure: r.structure,
            };
            emit(common.out.as_deref(), &to_json(&summary))
        }
        Command::Search {
            mode,
            composition,
            formula_units,
            cell,
            seed,
            patience,
            max_relaxations,
            delta,
            depth,
            k_report,
            target,
            temperature,
            perturb,
            csv,
            common,
        } => {
            let (comp, cell) = composition_and_cell(&composition, formula_units, cell.as_deref())?;
            let ff = inputs::forcefield(common.forcefield.as_deref())?;
            let mut settings = match mode {
                Mode::BasinHopping => SearchSettings::basin_hopping(seed),
                Mode::AxesBh => SearchSettings::axes_bh(seed, delta.unwrap_or(cell.min_length() / 5.0)),
            };
            settings.patience = patience;
            settings.max_relaxations = max_relaxations;
            settings.relax.depth = depth;
            settings.k_report = k_report;
            settings.target_energy = target;
            settings.temperature = temperature;
            settings.perturb = perturb;
            settings.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let record = search::run(cell, &comp, &ff, &settings)?;
            if let Some(path) = csv {
                let mode = record.settings.mode;
                let rows = record.iterations.iter().map(|it| experiment::IterationRow::new(mode, seed, it));
                experiment::write_csv(&path, rows)?;
            }
            emit(common.out.as_deref(), &record.to_json())
        }
        Command::Experiment { config, out, seed } => experiment::run_file(&config, out.as_deref(), seed),
        Command::Generate { composition, formula_units, cell, seed, max_attempts, out } => {
            let (comp, cell) = composition_and_cell(&composition, formula_units, cell.as_deref())?;
            let s = random_feasible(cell, &comp, seed, max_attempts)?;
            emit(out.as_deref(), &io::structure_to_json(&s))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code() as u8)
        }
    }
}
