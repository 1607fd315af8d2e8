use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use vcqds::commands;
use vcqds::io;
use vcqds::plan::{resolve, Overrides, PlanFile, Resolved};
use vcqds::{CliError, Result};

/// Kicked quantum dynamics: variational propagation during the kick, Cartan
/// fast-forwarding afterwards.
#[derive(Parser)]
#[command(name = "vcqds", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cartan factorization of H0: writes factorization.txt and cartan_report.json.
    Cartan(Common),
    /// Hybrid run: one `t,value` CSV per observable plus field.csv.
    Evolve(Common),
    /// Spectra from an evolve output directory, or from plain `t,value` files.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Plain series to transform instead of a plan's outputs.
        #[arg(long, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Damping rate for `--input` transforms.
        #[arg(long, default_value_t = 0.01)]
        damping: f64,
    },
    /// 2x3 Ising lattice: variational vs exact nearest-neighbour correlation for J/d in {1, 2, 0.5, 0.25}.
    ReproduceFig2(Common),
    /// Molecular kick on the bundled active-space model and its absorption spectrum.
    ReproduceFig3(Common),
    /// Two-site Heisenberg kick and susceptibilities.
    ReproduceFig5(Common),
    /// Four-site Heisenberg kick and magnon spectra.
    ReproduceFig6(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Plan file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in model: ising2x3, heisenberg2, heisenberg4.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    j: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    /// Pauli-sum Hamiltonian file (with --dipole).
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
    #[arg(long)]
    dipole: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    e0: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Time step of the variational phase.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_total: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also run the dense reference and write it under exact/.
    #[arg(long)]
    with_exact: bool,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            e0: self.e0,
            gamma: self.gamma,
            dt: self.dt,
            t_total: self.t_total,
            seed: self.seed,
            with_exact: self.with_exact,
            output_dir: self.output_dir.clone(),
        }
    }

    fn resolve(&self) -> Result<Resolved> {
        let mut p = match &self.config {
            Some(path) => PlanFile::load(path)?,
            None => PlanFile::default(),
        };
        if self.model.is_some() || self.hamiltonian.is_some() {
            p.model = self.model.clone();
            p.hamiltonian_file = self.hamiltonian.as_deref().map(io::absolute);
            p.dipole_file = self.dipole.as_deref().map(io::absolute);
        }
        if self.j.is_some() {
            p.j = self.j;
        }
        if self.d.is_some() {
            p.d = self.d;
        }
        for f in [&p.hamiltonian_file, &p.dipole_file].into_iter().flatten() {
            if !f.exists() {
                return Err(CliError::Io {
                    path: f.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                });
            }
        }
        p.apply(&self.overrides());
        resolve(p)
    }
}

fn print<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn threads() -> Result<()> {
    let Ok(v) = std::env::var("VCQDS_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Input(format!("VCQDS_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    threads()?;
    match cli.command {
        Command::Cartan(c) => {
            let (report, _) = commands::cartan(&c.resolve()?)?;
            print(&report);
        }
        Command::Evolve(c) => {
            let (report, _) = commands::evolve(&c.resolve()?)?;
            print(&report);
        }
        Command::Spectrum { common, input, damping } => {
            let report = if input.is_empty() {
                commands::spectrum(&common.resolve()?)?
            } else {
                let out = io::absolute(&common.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")));
                commands::spectrum_of_files(&input, damping, &out)?
            };
            print(&report);
        }
        Command::ReproduceFig2(c) => {
            let out = io::absolute(&c.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")).join("fig2"));
            let rows = commands::reproduce_fig2(&out, &[1.0, 2.0, 0.5, 0.25], c.dt.unwrap_or(0.005), c.t_total.unwrap_or(5.0))?;
            print(&rows);
        }
        Command::ReproduceFig3(c) => print(&commands::reproduce_fig3(&c.overrides())?),
        Command::ReproduceFig5(c) => print(&commands::reproduce_fig5(&c.overrides())?),
        Command::ReproduceFig6(c) => print(&commands::reproduce_fig6(&c.overrides())?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
