use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anisokin_core::anisotropy::DirectorPreset;
use anisokin_core::config::SimConfig;
use anisokin_core::coupler::{kappa_sweep, run};
use anisokin_core::energy::{audit_ledger, EnergyLedger};
use anisokin_core::linalg::SolverKind;
use anisokin_core::mms::{np_mms, poisson_mms, MmsLevel};
use anisokin_core::regularizers::{build_dense_robin, build_dense_stokes, resolvent_suite, OperatorKind, SUITE_KAPPAS};
use anisokin_core::surface::{surface_check, write_check_csv, CurveKind, Differencing};
use anisokin_core::{Error, Grid, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "anisokin", version, about = "Anisotropic electrokinetic flow simulator and verification lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    Poisson,
    Np,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a config file.
    Run { config: PathBuf },
    /// Convergence study with manufactured or analytic solutions.
    Mms {
        #[arg(value_enum)]
        study: Study,
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        grids: Vec<usize>,
    },
    /// Replay and check a ledger CSV.
    Audit {
        ledger: PathBuf,
        /// Domain area, for the entropy lower bound.
        #[arg(long, default_value_t = 1.0)]
        area: f64,
    },
    /// Distances to the unregularized run for several kappas.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
        kappas: Vec<f64>,
    },
    /// Resolvent property suite on a dense operator.
    ResolventSuite {
        #[arg(long, default_value = "robin")]
        kind: String,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value = "zero")]
        preset: String,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tangential calculus identities on a closed curve (CSV on stdout).
    SurfaceCheck {
        #[arg(long, default_value = "circle")]
        curve: String,
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[arg(long, default_value = "spectral")]
        method: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_levels(out: &mut impl Write, levels: &[MmsLevel]) -> Result<()> {
    writeln!(out, "n,h,error,order")?;
    for l in levels {
        let order = l.order.map_or(String::new(), |p| format!("{p:.4}"));
        writeln!(out, "{},{:e},{:e},{order}", l.n, l.h, l.error)?;
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match cmd {
        Command::Run { config } => {
            let outcome = run(SimConfig::load(&config)?)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&outcome.summary)?)?;
        }
        Command::Mms { study, grids } => {
            let levels = match study {
                Study::Poisson => poisson_mms(&grids, 0.9, 1.5, SolverKind::Cholesky)?,
                Study::Np => np_mms(&grids, 0.5, 1e-3)?,
            };
            print_levels(&mut out, &levels)?;
        }
        Command::Audit { ledger, area } => {
            let l = EnergyLedger::load(&ledger)?;
            let rep = audit_ledger(&l, area)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&rep)?)?;
            let scale = l.rows.iter().map(|r| r.energy_reg().abs()).fold(1.0, f64::max);
            if rep.column_mismatch > 1e-9 * scale {
                return Err(Error::Invariant(format!("residual column disagrees with replay by {:.3e}", rep.column_mismatch)));
            }
            if rep.mass_drift > 1e-12 {
                return Err(Error::Invariant(format!("mass drift {:.3e}", rep.mass_drift)));
            }
            if rep.min_c < -1e-14 {
                return Err(Error::Invariant(format!("negative concentration {:.3e}", rep.min_c)));
            }
            if !rep.entropy_floor_ok {
                return Err(Error::Invariant("entropy below its lower bound".into()));
            }
        }
        Command::Sweep { config, kappas } => {
            let rep = kappa_sweep(&SimConfig::load(&config)?, &kappas)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&rep)?)?;
        }
        Command::ResolventSuite { kind, n, preset, tau, trials, seed } => {
            let kind: OperatorKind = kind.parse()?;
            let grid = Grid::unit(n)?;
            let a = match kind {
                OperatorKind::Stokes => build_dense_stokes(grid)?,
                OperatorKind::RobinLaplacian => {
                    let preset: DirectorPreset = preset.parse()?;
                    build_dense_robin(&anisokin_core::anisotropy::DirectorField::preset(preset, grid, 0.5, 0.5)?, tau)?
                }
            };
            let rep = resolvent_suite(&a, &SUITE_KAPPAS, trials, seed)?;
            rep.write_csv(&mut out)?;
            eprintln!("growth constant {:.6e}, smooth slope {:.4}", rep.growth_constant, rep.smooth_slope);
            if !rep.passed() {
                return Err(Error::Invariant(rep.failures.join("; ")));
            }
        }
        Command::SurfaceCheck { curve, samples, method, seed } => {
            let curve: CurveKind = curve.parse()?;
            let method: Differencing = method.parse()?;
            let rows = surface_check(curve, samples, method, seed)?;
            write_check_csv(&rows, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
