//! Subcommand implementations and the error-to-exit-code mapping.
//!
//! Every command follows the same shape: load and validate inputs, do all
//! numeric work, then emit the staged artifacts. Nothing is written
//! before validation succeeds.

use crate::outio::{emit, write_atomic};
use crate::{svg, ApplySource, Cli, Command, ProcessSource, RunFlags};
use polsim::optics::coherence_length;
use polsim::{
    apply_elements, apply_kraus, canonical_process, canonical_processes, chi_from_json,
    chi_to_json, count_records_from_csv, count_records_to_csv, elements_from_json,
    ellipsoid_profile_with, fidelity, forward_pipeline, kraus_from_chi, mle_reconstruct,
    normalization_for_total, patches_to_csv, profile_to_csv, simulate_counts_with, sphere_map,
    sphere_map_to_csv, state_from_json, synth_angles, to_pretty_json, tomography_result_to_json,
    CountRecord, CountingConfig, DensityMatrix, DriftModel, KrausSet, Spectrum, SynthesisReport,
    UncertaintyEllipsoid,
};
use serde::Serialize;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

/// Failure classes mapped onto process exit codes: 2 usage, 3 validation
/// (bad input contents, domain violations, I/O), 4 numerical
/// non-convergence.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Validation(msg) | CliError::Numeric(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl From<polsim::Error> for CliError {
    fn from(err: polsim::Error) -> Self {
        match err {
            polsim::Error::SynthesisStalled { .. }
            | polsim::Error::TooFewTrials { .. }
            | polsim::Error::DegenerateTParams => CliError::Numeric(err.to_string()),
            _ => CliError::Validation(err.to_string()),
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let flags = &cli.run;
    match &cli.command {
        Command::Synth {
            target,
            round_angles,
        } => synth(flags, target, *round_angles),
        Command::SimulateCounts { state } => simulate(flags, state),
        Command::Tomo { counts_csv } => tomo(flags, counts_csv),
        Command::Fidelity { state_a, state_b } => fidelity_cmd(flags, state_a, state_b),
        Command::ProcessApply { state, source } => process_apply(flags, state, source),
        Command::Sqpt { source } => sqpt(flags, source),
        Command::SphereMap { source, resolution } => sphere_map_cmd(flags, source, *resolution),
        Command::Distinguish {
            radii,
            packing_fraction,
        } => distinguish(flags, radii, *packing_fraction),
        Command::SpherePatches { radii, scale } => sphere_patches(flags, radii, *scale),
        Command::Experiment { name } => crate::experiments::run(flags, *name),
    }
}

/// Bench source: gaussian spectrum, 702 nm center, 10 nm FWHM.
pub fn bench_spectrum() -> Spectrum {
    Spectrum::gaussian(702e-9, 10e-9).expect("bench spectrum is valid")
}

/// Decoherer path difference used when scoring synthesis solutions:
/// 20 coherence lengths, deep in the fully decohered regime.
pub fn synthesis_opd(spectrum: &Spectrum) -> f64 {
    20.0 * coherence_length(spectrum)
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<DensityMatrix, CliError> {
    state_from_json(&read_file(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Resolve --process/--chi into an operator set.
fn load_kraus(process: Option<&str>, chi: Option<&Path>) -> Result<KrausSet, CliError> {
    if let Some(name) = process {
        return canonical_process(name).ok_or_else(|| {
            let catalog: Vec<&str> = canonical_processes().iter().map(|p| p.name).collect();
            CliError::Usage(format!(
                "unknown process {name:?}; catalog: {}",
                catalog.join(", ")
            ))
        });
    }
    let path = chi.expect("clap guarantees one process source");
    let chi = chi_from_json(&read_file(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    kraus_from_chi(&chi).map_err(CliError::from)
}

pub fn require_seed(flags: &RunFlags, what: &str) -> Result<u64, CliError> {
    flags
        .seed
        .ok_or_else(|| CliError::Usage(format!("{what} is stochastic; --seed is required")))
}

/// Seed for a counting run: noiseless (--exact-expectation) runs are
/// deterministic and default to seed 0, sampled runs must name one.
pub fn seed_for_counting(flags: &RunFlags, what: &str) -> Result<u64, CliError> {
    if flags.exact_expectation {
        Ok(flags.seed.unwrap_or(0))
    } else {
        require_seed(flags, what)
    }
}

pub fn require_counts(flags: &RunFlags, what: &str) -> Result<f64, CliError> {
    let counts = flags
        .counts
        .ok_or_else(|| CliError::Usage(format!("{what} needs --counts")))?;
    if !(counts.is_finite() && counts > 0.0) {
        return Err(CliError::Validation(format!(
            "--counts must be finite and > 0, got {counts}"
        )));
    }
    Ok(counts)
}

/// Translate --drift-amplitude: absent keeps the subcommand default,
/// zero disables drift, anything else is a sinusoidal amplitude checked
/// against the 0.5% bench bound.
pub fn drift_from_flag(flag: Option<f64>, default: DriftModel) -> Result<DriftModel, CliError> {
    match flag {
        None => Ok(default),
        Some(0.0) => Ok(DriftModel::none()),
        Some(a) => DriftModel::sinusoidal(a).map_err(CliError::from),
    }
}

pub fn counting_config(drift: DriftModel, exact_expectation: bool) -> CountingConfig {
    CountingConfig {
        drift,
        exact_expectation,
        ..CountingConfig::default()
    }
}

/// Motor-grid quantization: the rotation stages land on 0.1 degrees.
fn round_to_motor(deg: f64) -> f64 {
    (deg * 10.0).round() / 10.0
}

fn synth(flags: &RunFlags, target_path: &Path, round_angles: bool) -> Result<(), CliError> {
    let target = load_state(target_path)?;
    let spectrum = bench_spectrum();
    let mut report = SynthesisReport::new(&synth_angles(&target), 0.0);
    if round_angles {
        report.theta1_deg = round_to_motor(report.theta1_deg);
        report.theta2_deg = round_to_motor(report.theta2_deg);
        report.theta3_deg = round_to_motor(report.theta3_deg);
    }
    let produced = forward_pipeline(&report.angles(), &spectrum, synthesis_opd(&spectrum));
    report.forward_fidelity = fidelity(&produced, &target);
    emit(flags.out.as_deref(), &to_pretty_json(&report))
}

fn simulate(flags: &RunFlags, state_path: &Path) -> Result<(), CliError> {
    let rho = load_state(state_path)?;
    let counts_total = require_counts(flags, "simulate-counts")?;
    let seed = seed_for_counting(flags, "simulate-counts")?;
    let trials = flags.trials.unwrap_or(1);
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let drift = drift_from_flag(flags.drift_amplitude, DriftModel::default())?;
    let config = counting_config(drift, flags.exact_expectation);
    let mean = normalization_for_total(&rho, counts_total);
    let records: Vec<CountRecord> = (0..trials)
        .map(|k| simulate_counts_with(&rho, mean, &config, seed.wrapping_add(k as u64)))
        .collect::<polsim::Result<_>>()?;
    emit(flags.out.as_deref(), &count_records_to_csv(&records))
}

fn tomo(flags: &RunFlags, counts_path: &Path) -> Result<(), CliError> {
    let text = read_file(counts_path)?;
    let records = count_records_from_csv(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", counts_path.display())))?;
    if records.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no data rows",
            counts_path.display()
        )));
    }
    for (idx, record) in records.iter().enumerate() {
        if record.normalization() == 0 {
            return Err(CliError::Validation(format!(
                "{}: record {}: N0 + N1 = 0, the normalization is undefined",
                counts_path.display(),
                idx + 1
            )));
        }
    }
    let reports: Vec<String> = records
        .iter()
        .map(|r| mle_reconstruct(r).map(|fit| tomography_result_to_json(&fit)))
        .collect::<polsim::Result<_>>()?;
    let payload = if reports.len() == 1 {
        reports.into_iter().next().expect("one report")
    } else {
        json_array(&reports)
    };
    emit(flags.out.as_deref(), &payload)
}

/// Join pretty-printed JSON objects into a pretty array, preserving each
/// object's own key order.
fn json_array(entries: &[String]) -> String {
    let mut out = String::from("[\n");
    for (idx, entry) in entries.iter().enumerate() {
        let indented: Vec<String> = entry.trim_end().lines().map(|l| format!("  {l}")).collect();
        out.push_str(&indented.join("\n"));
        if idx + 1 < entries.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    out
}

#[derive(Serialize)]
struct FidelityReport {
    fidelity: f64,
}

fn fidelity_cmd(flags: &RunFlags, path_a: &Path, path_b: &Path) -> Result<(), CliError> {
    let rho_a = load_state(path_a)?;
    let rho_b = load_state(path_b)?;
    let report = FidelityReport {
        fidelity: fidelity(&rho_a, &rho_b),
    };
    emit(flags.out.as_deref(), &to_pretty_json(&report))
}

/// State JSON with the survival weight alongside; state-consuming
/// subcommands ignore the extra field, so outputs chain directly.
#[derive(Serialize)]
struct WeightedStateReport {
    re: [[f64; 2]; 2],
    im: [[f64; 2]; 2],
    weight: f64,
}

impl WeightedStateReport {
    fn new(rho: &DensityMatrix, weight: f64) -> Self {
        let m = rho.matrix();
        Self {
            re: [
                [m[(0, 0)].re, m[(0, 1)].re],
                [m[(1, 0)].re, m[(1, 1)].re],
            ],
            im: [
                [m[(0, 0)].im, m[(0, 1)].im],
                [m[(1, 0)].im, m[(1, 1)].im],
            ],
            weight,
        }
    }
}

fn process_apply(flags: &RunFlags, state_path: &Path, source: &ApplySource) -> Result<(), CliError> {
    let rho = load_state(state_path)?;
    let (out_state, weight) = if let Some(path) = &source.elements {
        let elements = elements_from_json(&read_file(path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        apply_elements(&rho, &elements, &bench_spectrum())?
    } else {
        let kraus = load_kraus(source.process.as_deref(), source.chi.as_deref())?;
        apply_kraus(&kraus, &rho)?
    };
    let report = WeightedStateReport::new(&out_state, weight);
    emit(flags.out.as_deref(), &to_pretty_json(&report))
}

fn sqpt(flags: &RunFlags, source: &ProcessSource) -> Result<(), CliError> {
    let kraus = load_kraus(source.process.as_deref(), source.chi.as_deref())?;
    let counts = require_counts(flags, "sqpt")?;
    let seed = seed_for_counting(flags, "sqpt")?;
    let drift = drift_from_flag(flags.drift_amplitude, DriftModel::none())?;
    let config = counting_config(drift, flags.exact_expectation);
    let outcome = polsim::sqpt_end_to_end_with(&kraus, counts, &config, seed)?;
    for (idx, label) in ["H", "V", "D", "R"].iter().enumerate() {
        if outcome.low_confidence[idx] {
            eprintln!(
                "polsim: probe {label} detected nothing (weight {:.3}); its row carries no information",
                outcome.input_weights[idx]
            );
        }
    }
    emit(flags.out.as_deref(), &chi_to_json(&outcome.chi))
}

fn sphere_map_cmd(
    flags: &RunFlags,
    source: &ProcessSource,
    resolution: (usize, usize),
) -> Result<(), CliError> {
    let kraus = load_kraus(source.process.as_deref(), source.chi.as_deref())?;
    let map = sphere_map(&kraus, resolution)?;
    let csv = sphere_map_to_csv(&map);
    match flags.out.as_deref() {
        None => emit(None, &csv),
        Some(path) => {
            let svg_path = sibling_with_extension(path, "svg")?;
            let drawing = svg::sphere_map_svg(&map);
            write_atomic(path, &csv)?;
            write_atomic(&svg_path, &drawing)
        }
    }
}

/// Companion-artifact path: same stem, different extension. Rejects an
/// --out that already carries the companion's extension.
fn sibling_with_extension(path: &Path, ext: &str) -> Result<PathBuf, CliError> {
    let sibling = path.with_extension(ext);
    if sibling == *path {
        return Err(CliError::Usage(format!(
            "--out {} collides with the {ext} artifact written alongside; choose another extension",
            path.display()
        )));
    }
    Ok(sibling)
}

/// Shared front half of the profile subcommands and the ellipsoids
/// experiment: radii, trials, counts and counting model resolved from
/// the flags (trials default 10, counts 300,000, drift off).
pub fn profile_from_flags(
    flags: &RunFlags,
    radii: &[f64],
    what: &str,
) -> Result<Vec<UncertaintyEllipsoid>, CliError> {
    let counts = flags.counts.unwrap_or(300_000.0);
    if !(counts.is_finite() && counts > 0.0) {
        return Err(CliError::Validation(format!(
            "--counts must be finite and > 0, got {counts}"
        )));
    }
    let trials = flags.trials.unwrap_or(10);
    let seed = seed_for_counting(flags, what)?;
    let drift = drift_from_flag(flags.drift_amplitude, DriftModel::none())?;
    let config = counting_config(drift, flags.exact_expectation);
    Ok(ellipsoid_profile_with(radii, trials, counts, &config, seed)?)
}

fn distinguish(flags: &RunFlags, radii: &[f64], packing_fraction: f64) -> Result<(), CliError> {
    let out = flags.out.as_deref().ok_or_else(|| {
        CliError::Usage("distinguish writes two artifacts; --out FILE.csv is required".into())
    })?;
    let json_path = sibling_with_extension(out, "json")?;
    let profile = profile_from_flags(flags, radii, "distinguish")?;
    let estimate = polsim::count_distinguishable(&profile, packing_fraction)?;
    write_atomic(out, &profile_to_csv(&profile))?;
    write_atomic(&json_path, &to_pretty_json(&estimate))
}

fn sphere_patches(flags: &RunFlags, radii: &[f64], scale: f64) -> Result<(), CliError> {
    let profile = profile_from_flags(flags, radii, "sphere-patches")?;
    let csv = patches_to_csv(&profile, scale)?;
    emit(flags.out.as_deref(), &csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_flag_maps_to_models() {
        assert_eq!(
            drift_from_flag(None, DriftModel::default()).unwrap(),
            DriftModel::default()
        );
        assert_eq!(
            drift_from_flag(None, DriftModel::none()).unwrap(),
            DriftModel::none()
        );
        assert_eq!(
            drift_from_flag(Some(0.0), DriftModel::default()).unwrap(),
            DriftModel::none()
        );
        let model = drift_from_flag(Some(0.002), DriftModel::none()).unwrap();
        assert_eq!(model.relative_amplitude(), 0.002);
        let err = drift_from_flag(Some(0.02), DriftModel::none()).unwrap_err();
        assert_eq!(err.code(), 3);
    }

    #[test]
    fn motor_rounding_hits_tenths() {
        assert_eq!(round_to_motor(22.4501), 22.5);
        assert_eq!(round_to_motor(-0.04), -0.0);
        assert_eq!(round_to_motor(13.349), 13.3);
    }

    #[test]
    fn json_array_preserves_entry_layout() {
        let entries = vec!["{\n  \"a\": 1\n}\n".to_string(), "{\n  \"b\": 2\n}\n".to_string()];
        let joined = json_array(&entries);
        assert_eq!(joined, "[\n  {\n    \"a\": 1\n  },\n  {\n    \"b\": 2\n  }\n]\n");
    }

    #[test]
    fn sibling_extension_rejects_collisions() {
        assert_eq!(
            sibling_with_extension(Path::new("map.csv"), "svg").unwrap(),
            PathBuf::from("map.svg")
        );
        assert!(sibling_with_extension(Path::new("map.svg"), "svg").is_err());
    }

    #[test]
    fn error_codes_follow_the_contract() {
        assert_eq!(CliError::Usage(String::new()).code(), 2);
        assert_eq!(CliError::Validation(String::new()).code(), 3);
        assert_eq!(CliError::Numeric(String::new()).code(), 4);
        let converted: CliError = polsim::Error::TooFewTrials {
            converged: 1,
            trials: 5,
        }
        .into();
        assert_eq!(converted.code(), 4);
        let converted: CliError = polsim::Error::EmptyNormalization.into();
        assert_eq!(converted.code(), 3);
    }
}
