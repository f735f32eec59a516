//! polsim — command-line front end for the polarization-qubit toolkit.
//!
//! Subcommands cover the full bench workflow: waveplate-angle synthesis,
//! photon-count simulation, maximum-likelihood state reconstruction,
//! process application and tomography, sphere projections, and the
//! distinguishable-state census.
//!
//! Conventions: angles in flags and files are degrees and path
//! differences are micrometers (the library works in radians and meters).
//! Every stochastic subcommand takes an explicit `--seed` and reruns are
//! byte-identical; there is no implicit entropy. Output files are staged
//! and renamed into place so a failed run never leaves partial artifacts.

mod commands;
mod experiments;
mod outio;
mod svg;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Radii of the standard uncertainty profile through the ball.
const DEFAULT_PROFILE_RADII: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Parser)]
#[command(
    name = "polsim",
    version,
    about = "Polarization-qubit workbench: synthesis, counting, tomography, process maps",
    after_help = "Angles in flags and files are degrees; optical path differences are \
                  micrometers. Stochastic subcommands require --seed and rerun \
                  byte-identically; outputs are written atomically (temp then rename)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub run: RunFlags,
}

/// Flags shared across subcommands. Each subcommand documents which of
/// these it consumes and what its defaults are.
#[derive(Args)]
pub struct RunFlags {
    /// RNG seed; required by every stochastic subcommand (no implicit
    /// entropy). Noiseless runs (--exact-expectation) may omit it.
    #[arg(long, global = true, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Expected photon total: summed over the four analysis settings for
    /// state work, incident per probe setting for sqpt.
    #[arg(long, global = true, value_name = "N")]
    pub counts: Option<f64>,

    /// Monte-Carlo repetitions (records for simulate-counts, trials per
    /// state elsewhere).
    #[arg(long, global = true, value_name = "K")]
    pub trials: Option<usize>,

    /// Replace Poisson sampling with rounded expectations (noiseless).
    #[arg(long, global = true)]
    pub exact_expectation: bool,

    /// Relative sinusoidal source-drift amplitude in [0, 0.005]; 0
    /// disables drift. Default 0.005 for simulate-counts and the
    /// state-fidelity experiment, 0 (Poisson-limited) elsewhere.
    #[arg(long, global = true, value_name = "A")]
    pub drift_amplitude: Option<f64>,

    /// Output file (directory for experiment). Subcommands with a single
    /// artifact print to stdout when this is omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Solve the waveplate angles reaching a target state and report
    /// them (degrees) with the fidelity the ideal bench achieves.
    Synth {
        /// Target state JSON: {"re","im"} matrix or {"rH","rD","rR"}.
        target: PathBuf,
        /// Quantize angles to the 0.1-degree motor grid before scoring.
        #[arg(long)]
        round_angles: bool,
    },
    /// Simulate photon-count records for a state (CSV, one row per trial).
    SimulateCounts {
        /// State JSON file.
        state: PathBuf,
    },
    /// Maximum-likelihood state reconstruction from a counts CSV; emits
    /// one JSON report per record (an array when the CSV has several).
    Tomo {
        /// Counts CSV with header N0,N1,N2,N3,duration_s.
        #[arg(value_name = "COUNTS_CSV")]
        counts_csv: PathBuf,
    },
    /// Fidelity between two state files.
    Fidelity {
        state_a: PathBuf,
        state_b: PathBuf,
    },
    /// Pass a state through a catalog process, a chi-matrix file, or an
    /// optical-element train; emits the output state with its survival
    /// weight.
    ProcessApply {
        /// Input state JSON file.
        state: PathBuf,
        #[command(flatten)]
        source: ApplySource,
    },
    /// Simulated standard process tomography of a known process; emits
    /// the reconstructed chi matrix (probe diagnostics on stderr).
    Sqpt {
        #[command(flatten)]
        source: ProcessSource,
    },
    /// Image of the pure-state sphere under a process: CSV mapping, plus
    /// an SVG equirectangular projection when writing to a file.
    SphereMap {
        #[command(flatten)]
        source: ProcessSource,
        /// Mesh resolution LATxLON (minimum 2x4).
        #[arg(long, default_value = "25x50", value_parser = parse_resolution, value_name = "LATxLON")]
        resolution: (usize, usize),
    },
    /// Reconstruction-uncertainty profile across the ball and the
    /// distinguishable-state estimate (writes --out CSV plus a .json
    /// sibling).
    Distinguish {
        /// Profile radii in [0, 1], comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = DEFAULT_PROFILE_RADII)]
        radii: Vec<f64>,
        /// Sphere-packing fraction applied to the census.
        #[arg(long, default_value_t = polsim::distinguish::DEFAULT_PACKING_FRACTION)]
        packing_fraction: f64,
    },
    /// Uncertainty-patch geometry (centers, semi-axes, axis directions)
    /// along the profile, for external sphere plots.
    SpherePatches {
        /// Profile radii in [0, 1], comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = DEFAULT_PROFILE_RADII)]
        radii: Vec<f64>,
        /// Semi-axis magnification for visibility (plot-time choice).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Run a canned bench experiment: artifacts into --out DIR plus one
    /// pass/fail summary line per criterion on stdout.
    Experiment { name: ExperimentName },
}

/// Where a process comes from: the built-in catalog or a chi-matrix file.
#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct ProcessSource {
    /// Catalog name: hadamard, polarizer_H, coherent_partial_polarizer,
    /// incoherent_partial_polarizer, decoherer_HV.
    #[arg(long, value_name = "NAME")]
    pub process: Option<String>,
    /// Chi-matrix JSON file.
    #[arg(long, value_name = "FILE")]
    pub chi: Option<PathBuf>,
}

/// Process sources accepted by process-apply; element trains are applied
/// with the bench spectrum (702 nm / 10 nm FWHM gaussian).
#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct ApplySource {
    /// Catalog name (see sqpt --help for the list).
    #[arg(long, value_name = "NAME")]
    pub process: Option<String>,
    /// Chi-matrix JSON file.
    #[arg(long, value_name = "FILE")]
    pub chi: Option<PathBuf>,
    /// Optical-element train JSON (waveplates, decoherers, partial
    /// polarizers).
    #[arg(long, value_name = "FILE")]
    pub elements: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    /// Repeated synthesize-count-reconstruct cycles on five reference
    /// targets; reports median reconstruction fidelity.
    StateFidelity,
    /// Uncertainty ellipsoids along the radial profile and the
    /// distinguishable-state census.
    Ellipsoids,
    /// Process tomography of the whole catalog against its analytic
    /// chi matrices.
    SqptCatalog,
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (lat, lon) = s
        .split_once(['x', 'X', ','])
        .ok_or_else(|| format!("expected LATxLON, got {s:?}"))?;
    let lat = lat
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("latitude count {:?}: {e}", lat.trim()))?;
    let lon = lon
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("longitude count {:?}: {e}", lon.trim()))?;
    Ok((lat, lon))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("polsim: {err}");
            ExitCode::from(err.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_parser_accepts_common_separators() {
        assert_eq!(parse_resolution("25x50"), Ok((25, 50)));
        assert_eq!(parse_resolution("4X8"), Ok((4, 8)));
        assert_eq!(parse_resolution("12, 24"), Ok((12, 24)));
        assert!(parse_resolution("25").is_err());
        assert!(parse_resolution("ax5").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
