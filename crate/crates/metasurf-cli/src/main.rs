//! `metasurf` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver error,
//! 4 optimization hit its iteration cap (with `--strict`).

use clap::{Args, Parser, Subcommand};
use metasurf::config::RunConfig;
use metasurf::{io, workflow, Error};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "metasurf", version, about = "Two-scale acoustic metasurface solver and optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// INI configuration file (a previous run's manifest.ini works too).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides `[output] dir`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Run all loops on the calling thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the cell problems and write the homogenized coefficients.
    Homogenize(Common),
    /// Solve the macroscale problem for a coefficient file.
    MacroSolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        coefficients: PathBuf,
    },
    /// Compare homogenized and full-array solutions over a wavenumber range.
    Sweep(Common),
    /// Level-set topology optimization of the cell.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Exit with code 4 if the convergence criterion is not met.
        #[arg(long)]
        strict: bool,
    },
    /// Check the topological derivative against inclusion insertion.
    TdCheck {
        #[command(flatten)]
        common: Common,
        /// Probe point in cell units as `y1,y2`; repeatable. Replaces the
        /// configured probes.
        #[arg(long, value_parser = parse_point)]
        probe: Vec<[f64; 2]>,
    },
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [a, b] => Ok([a, b]),
        _ => Err(format!("expected y1,y2, got `{s}`")),
    }
}

enum Failure {
    Config(String),
    Solver(String),
    NotConverged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

fn load(c: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(o) = &c.output {
        cfg.output_dir = o.clone();
    }
    cfg.serial |= c.serial;
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Homogenize(c) => {
            let cfg = load(&c)?;
            let h = workflow::homogenize(&cfg)?;
            let k = h.coeffs;
            println!("A11 = {:?}\nB1 = {:?}\nKinv = {:?}\nF = {:?}", k.a11, k.b1, k.kinv, k.f);
            println!("wrote {} and {}", h.coefficients_csv.display(), h.cell_vtk.display());
        }
        Command::MacroSolve { common, coefficients } => {
            let cfg = load(&common)?;
            let coeffs = io::read_coefficients(&coefficients).map_err(|e| Failure::Config(e.to_string()))?;
            let r = workflow::macro_solve(&cfg, &coeffs)?;
            for (tag, power, norm) in &r.fluxes {
                println!("{:<8} power {power:.6e} W/m  ∫|P|² {norm:.6e}", tag.name());
            }
            println!("power imbalance {:.3e} of incident", r.imbalance);
        }
        Command::Sweep(c) => {
            let cfg = load(&c)?;
            let s = workflow::sweep(&cfg)?;
            let worst = s.rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
            println!("{} frequencies, max relative error {worst:.4}, reference/homogenized DOFs {:.1}", s.rows.len(), s.dof_ratio);
            match s.window {
                Some(w) => println!("resonance window k0 ∈ [{}, {}], peak {:.4} at {}", w.k_lo, w.k_hi, w.peak_err, w.k_peak),
                None => println!("no resonance window above {}", cfg.resonance_level),
            }
        }
        Command::Optimize { common, strict } => {
            let cfg = load(&common)?;
            let st = workflow::optimize(&cfg)?;
            let last = st.history.last().expect("at least one iteration");
            println!(
                "{} iterations, J = {:.6}, B1 = {:.4}, converged = {}",
                st.iteration, last.value.j, last.coeffs.b1, st.converged
            );
            if strict && !st.converged {
                return Err(Failure::NotConverged);
            }
        }
        Command::TdCheck { common, probe } => {
            let mut cfg = load(&common)?;
            if !probe.is_empty() {
                cfg.td_probes = probe;
            }
            for t in workflow::td_check(&cfg)? {
                println!(
                    "({}, {}) {:?}: D_T J = {:.6e}, perturbation = {:.6e}, rel. error {:.4}",
                    t.point[0],
                    t.point[1],
                    t.direction,
                    t.predicted,
                    t.observed,
                    t.rel_err()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::NotConverged) => {
            eprintln!("error: iteration cap reached before convergence");
            ExitCode::from(4)
        }
    }
}
