//! `symctl` command-line front end.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 input error, 3 synthesis
//! failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::clifford::build_vector_basis;
use crate::error::{Error, Result};
use crate::json;
use crate::propagator::{evolve_piecewise_sampled, ControlStep, PiecewiseControl, StateVector};
use crate::synth::{bell_states, check_connected, synthesize_transfer_with, ControlSet, SynthConfig};
use crate::system::{
    controllability_verdict, controllability_verdict_with_tol, ControlSystem, SystemDescription,
    Verdict, SPECTRUM_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SYNTH_FAILED: i32 = 3;

/// Relative norm error accepted for command-line states.
const STATE_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "symctl", version, about = "Controllability analysis and pulse synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the main result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lie closure of the drift and couplings.
    Close { system: PathBuf },
    /// Controllability verdict.
    Analyze {
        system: PathBuf,
        /// Spectrum symmetry tolerance.
        #[arg(long, default_value_t = SPECTRUM_TOL)]
        tol: f64,
    },
    /// Propagate a state under piecewise-constant fields; CSV output.
    Simulate { system: PathBuf, control: PathBuf },
    /// Pulse sequence taking `--source` to `--target` ("re:im,re:im,...").
    Synth {
        system: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        source: String,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Accepted infidelity.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, env = "SYMCTL_SEED", default_value_t = 0)]
        seed: u64,
        /// Template length (default 3N).
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
    },
    /// The four Bell states of the two-qubit frame.
    Bell,
}

/// Control file for `simulate`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlFile {
    /// Defaults to `ψ₀`.
    #[serde(default)]
    initial: Option<StateVector>,
    #[serde(default)]
    substeps: Option<usize>,
    steps: Vec<ControlStep>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, out, err),
        Err(e) => {
            let _ = write!(err, "{e}");
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, err) {
        Ok((code, body)) => match emit(cli.output.as_deref(), &body, out) {
            Ok(()) => code,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_INPUT
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn emit(path: Option<&Path>, body: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => out.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn load_system(path: &Path) -> Result<ControlSystem> {
    SystemDescription::load(path)?.build()
}

fn dispatch(cli: &Cli, err: &mut dyn Write) -> Result<(i32, String)> {
    match &cli.command {
        Command::Close { system } => cmd_close(&load_system(system)?, err),
        Command::Analyze { system, tol } => cmd_analyze(&load_system(system)?, *tol, err),
        Command::Simulate { system, control } => cmd_simulate(&load_system(system)?, control, err),
        Command::Synth { system, source, target, tol, seed, blocks, restarts } => {
            let config = SynthConfig {
                blocks: *blocks,
                restarts: *restarts,
                seed: *seed,
                target_infidelity: *tol,
                ..SynthConfig::default()
            };
            cmd_synth(&load_system(system)?, source, target, &config, err)
        }
        Command::Bell => cmd_bell(),
    }
}

fn cmd_close(system: &ControlSystem, err: &mut dyn Write) -> Result<(i32, String)> {
    let report = controllability_verdict(system)?;
    let body = match &report.closure {
        Some(c) => {
            if c.saturated {
                writeln!(err, "warning: closure stopped at the dimension cap")?;
            }
            writeln!(err, "dim={} cartan={} label={}", c.algebra_dim, c.cartan_dim, c.label)?;
            json::to_string(c)?
        }
        None => {
            writeln!(err, "dim=0 cartan=0 label={}", report.label)?;
            json::to_string(&serde_json::json!({"dim": 0, "cartan_dim": 0, "label": report.label}))?
        }
    };
    Ok((EXIT_OK, body + "\n"))
}

fn cmd_analyze(system: &ControlSystem, tol: f64, err: &mut dyn Write) -> Result<(i32, String)> {
    let report = controllability_verdict_with_tol(system, tol)?;
    if report.saturated {
        writeln!(err, "warning: closure stopped at the dimension cap")?;
    }
    writeln!(err, "{}", report.verdict.as_str())?;
    let code = if report.verdict == Verdict::SpSufficient { EXIT_OK } else { EXIT_NEGATIVE };
    Ok((code, json::to_string(&report)? + "\n"))
}

fn cmd_simulate(system: &ControlSystem, control: &Path, err: &mut dyn Write) -> Result<(i32, String)> {
    let text = std::fs::read_to_string(control)?;
    let file: ControlFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("control file: {e}")))?;
    let x0 = match file.initial {
        Some(x) => x,
        None => StateVector::basis(system.levels(), 0)?,
    };
    let traj = evolve_piecewise_sampled(
        system,
        &PiecewiseControl::new(file.steps),
        &x0,
        file.substeps.unwrap_or(1),
    )?;
    writeln!(err, "norm drift: {:e}", traj.norm_drift())?;
    Ok((EXIT_OK, traj.to_csv()))
}

fn cmd_synth(
    system: &ControlSystem,
    source: &str,
    target: &str,
    config: &SynthConfig,
    err: &mut dyn Write,
) -> Result<(i32, String)> {
    let source = StateVector::parse(source, STATE_NORM_TOL)?;
    let target = StateVector::parse(target, STATE_NORM_TOL)?;
    check_connected(system)?;
    let verdict = controllability_verdict(system)?.verdict;
    if verdict != Verdict::SpSufficient {
        writeln!(err, "{}", verdict.as_str())?;
        return Ok((EXIT_NEGATIVE, String::new()));
    }
    let set = ControlSet::for_system(system)?;
    let result = synthesize_transfer_with(&set, &source, &target, config)?;
    writeln!(
        err,
        "fidelity={} steps={} restarts={}",
        json::fmt_f64(result.sequence.achieved_fidelity),
        result.sequence.steps.len(),
        result.restarts_used
    )?;
    let code = if result.converged {
        EXIT_OK
    } else {
        writeln!(err, "error: fidelity target not reached")?;
        EXIT_SYNTH_FAILED
    };
    Ok((code, json::to_string(&result.sequence)? + "\n"))
}

fn cmd_bell() -> Result<(i32, String)> {
    let states = bell_states(&build_vector_basis(5, 2)?)?;
    Ok((EXIT_OK, json::to_string(&states)? + "\n"))
}

/// Entry point for the binary.
pub fn main_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
