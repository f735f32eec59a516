//! File formats: JSON for states, process matrices and reports; CSV for
//! count records, sphere maps, uncertainty profiles and patch geometry.
//!
//! Conventions in files: angles in degrees, lengths in micrometers,
//! matrices as separate real and imaginary nested arrays. Emitters end
//! with a newline and print floats in shortest round-trip form, so
//! reruns with identical inputs are byte-identical.

use std::fmt::Write as _;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::counting::CountRecord;
use crate::distinguish::{UncertaintyEllipsoid, ELLIPSOID_SIGMA_FACTOR};
use crate::error::{Error, Result};
use crate::optics::ElementDescription;
use crate::process::{ChiMatrix, SphereMap};
use crate::state::{poincare_from_rho, rho_from_poincare, DensityMatrix, PoincareVector};
use crate::synthesis::SynthesisAngles;
use crate::tomography::TomographyResult;

/// Basis identifier recorded in (and required of) process-matrix files.
pub const CHI_BASIS_TAG: &str = "pauli-eq5";
/// Header of count-record CSV files.
pub const COUNTS_CSV_HEADER: &str = "N0,N1,N2,N3,duration_s";
/// Header of sphere-map CSV files.
pub const SPHERE_MAP_CSV_HEADER: &str = "in_rH,in_rD,in_rR,out_rH,out_rD,out_rR,weight";
/// Header of uncertainty-profile CSV files (standard deviations, not
/// semi-axes; multiply by 1.69 to recover the ellipsoid).
pub const PROFILE_CSV_HEADER: &str = "radius,sigma_radial,sigma_t1,sigma_t2";
/// Header of patch-geometry CSV files.
pub const PATCHES_CSV_HEADER: &str = "center_rH,center_rD,center_rR,semi_radial,semi_t1,semi_t2,\
axis_radial_rH,axis_radial_rD,axis_radial_rR,axis_t1_rH,axis_t1_rD,axis_t1_rR,\
axis_t2_rH,axis_t2_rD,axis_t2_rR";

fn from_json_str<T: DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Parse {
        line: e.line(),
        reason: e.to_string(),
    })
}

/// Pretty-prints any serializable value with a trailing newline.
pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize)]
struct Matrix2Json {
    re: [[f64; 2]; 2],
    im: [[f64; 2]; 2],
}

impl Matrix2Json {
    fn pack(m: &Matrix2<Complex64>) -> Self {
        Self {
            re: [[m[(0, 0)].re, m[(0, 1)].re], [m[(1, 0)].re, m[(1, 1)].re]],
            im: [[m[(0, 0)].im, m[(0, 1)].im], [m[(1, 0)].im, m[(1, 1)].im]],
        }
    }

    fn unpack(&self) -> Matrix2<Complex64> {
        Matrix2::from_fn(|i, j| Complex64::new(self.re[i][j], self.im[i][j]))
    }
}

/// A state file is either a matrix object {"re", "im"} or a Poincare
/// object {"rH", "rD", "rR"}.
#[derive(Deserialize)]
#[serde(untagged)]
enum StateFile {
    Matrix(Matrix2Json),
    Poincare(PoincareVector),
}

/// Parses a state from either accepted JSON form, validating physicality.
pub fn state_from_json(s: &str) -> Result<DensityMatrix> {
    match from_json_str::<StateFile>(s)? {
        StateFile::Matrix(m) => DensityMatrix::from_matrix(m.unpack()),
        StateFile::Poincare(r) => rho_from_poincare(&r),
    }
}

/// Serializes a state in the canonical matrix form.
pub fn state_to_json(rho: &DensityMatrix) -> String {
    to_pretty_json(&Matrix2Json::pack(&rho.matrix()))
}

#[derive(Serialize, Deserialize)]
struct ChiJson {
    basis: String,
    re: [[f64; 4]; 4],
    im: [[f64; 4]; 4],
}

/// Serializes a process matrix with its basis tag.
pub fn chi_to_json(chi: &ChiMatrix) -> String {
    let m = chi.matrix();
    let mut re = [[0.0; 4]; 4];
    let mut im = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            re[i][j] = m[(i, j)].re;
            im[i][j] = m[(i, j)].im;
        }
    }
    to_pretty_json(&ChiJson {
        basis: CHI_BASIS_TAG.to_owned(),
        re,
        im,
    })
}

/// Parses a process matrix, rejecting any basis tag other than
/// [`CHI_BASIS_TAG`] and revalidating the matrix invariants.
pub fn chi_from_json(s: &str) -> Result<ChiMatrix> {
    let file: ChiJson = from_json_str(s)?;
    if file.basis != CHI_BASIS_TAG {
        return Err(Error::ChiBasis { found: file.basis });
    }
    ChiMatrix::new(Matrix4::from_fn(|i, j| {
        Complex64::new(file.re[i][j], file.im[i][j])
    }))
}

/// Parses a JSON array of bench-element descriptions.
pub fn elements_from_json(s: &str) -> Result<Vec<ElementDescription>> {
    from_json_str(s)
}

/// Serializes bench-element descriptions.
pub fn elements_to_json(elements: &[ElementDescription]) -> String {
    to_pretty_json(&elements)
}

/// Writes count records as CSV with the standard header.
pub fn count_records_to_csv(records: &[CountRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(COUNTS_CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n[0], r.n[1], r.n[2], r.n[3], r.duration_s
        )
        .expect("string write");
    }
    out
}

/// Parses count-record CSV. The header line is required verbatim; blank
/// lines are skipped; `expected_total` is re-derived as N0 + N1 since the
/// file does not carry it.
pub fn count_records_from_csv(s: &str) -> Result<Vec<CountRecord>> {
    let mut records = Vec::new();
    let mut saw_header = false;
    for (idx, raw_line) in s.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if !saw_header {
            if line != COUNTS_CSV_HEADER {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected header {COUNTS_CSV_HEADER:?}, got {line:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let mut n = [0u64; 4];
        for (slot, (label, field)) in n
            .iter_mut()
            .zip(["N0", "N1", "N2", "N3"].iter().zip(&fields))
        {
            *slot = field.parse::<u64>().map_err(|e| Error::Parse {
                line: line_no,
                reason: format!("{label}: {e}"),
            })?;
        }
        let duration_s = fields[4].parse::<f64>().map_err(|e| Error::Parse {
            line: line_no,
            reason: format!("duration_s: {e}"),
        })?;
        if !(duration_s.is_finite() && duration_s >= 0.0) {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("duration_s {duration_s} must be finite and >= 0"),
            });
        }
        records.push(CountRecord {
            n,
            duration_s,
            expected_total: (n[0] + n[1]) as f64,
        });
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 1,
            reason: format!("empty input; expected header {COUNTS_CSV_HEADER:?}"),
        });
    }
    Ok(records)
}

/// Writes a sphere map as CSV (input point, output point, weight).
pub fn sphere_map_to_csv(map: &SphereMap) -> String {
    let mut out = String::with_capacity(64 * (map.samples.len() + 1));
    out.push_str(SPHERE_MAP_CSV_HEADER);
    out.push('\n');
    for s in &map.samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.input.r_h, s.input.r_d, s.input.r_r, s.output.r_h, s.output.r_d, s.output.r_r,
            s.weight
        )
        .expect("string write");
    }
    out
}

/// Writes an uncertainty profile as CSV of per-direction standard
/// deviations against mean radius (semi-axes divided by 1.69).
pub fn profile_to_csv(profile: &[UncertaintyEllipsoid]) -> String {
    let mut out = String::with_capacity(48 * (profile.len() + 1));
    out.push_str(PROFILE_CSV_HEADER);
    out.push('\n');
    for e in profile {
        writeln!(
            out,
            "{},{},{},{}",
            e.mean_r.norm(),
            e.radial_semiaxis / ELLIPSOID_SIGMA_FACTOR,
            e.transverse_semiaxes[0] / ELLIPSOID_SIGMA_FACTOR,
            e.transverse_semiaxes[1] / ELLIPSOID_SIGMA_FACTOR,
        )
        .expect("string write");
    }
    out
}

/// Writes ellipsoid patch geometry (center, semi-axes, axis directions)
/// as CSV. `scale` multiplies the semi-axes for magnified plots and must
/// be positive and finite.
pub fn patches_to_csv(profile: &[UncertaintyEllipsoid], scale: f64) -> Result<String> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Parse {
            line: 0,
            reason: format!("patch scale {scale} must be finite and > 0"),
        });
    }
    let mut out = String::with_capacity(160 * (profile.len() + 1));
    out.push_str(PATCHES_CSV_HEADER);
    out.push('\n');
    for e in profile {
        let c = e.mean_r.to_array();
        write!(
            out,
            "{},{},{},{},{},{}",
            c[0],
            c[1],
            c[2],
            scale * e.radial_semiaxis,
            scale * e.transverse_semiaxes[0],
            scale * e.transverse_semiaxes[1],
        )
        .expect("string write");
        for axis in &e.axes_directions {
            write!(out, ",{},{},{}", axis[0], axis[1], axis[2]).expect("string write");
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct TomographyReport {
    rho: Matrix2Json,
    r: PoincareVector,
    likelihood: f64,
    iterations: usize,
    converged: bool,
}

/// Serializes a reconstruction: the state in matrix form, its Poincare
/// coordinates, the residual likelihood and convergence diagnostics.
pub fn tomography_result_to_json(result: &TomographyResult) -> String {
    to_pretty_json(&TomographyReport {
        rho: Matrix2Json::pack(&result.rho.matrix()),
        r: poincare_from_rho(&result.rho),
        likelihood: result.residual_likelihood,
        iterations: result.iterations,
        converged: result.converged,
    })
}

/// File form of a synthesis solution: plate angles in degrees plus the
/// fidelity the ideal bench achieves at those angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    pub theta3_deg: f64,
    pub forward_fidelity: f64,
}

impl SynthesisReport {
    pub fn new(angles: &SynthesisAngles, forward_fidelity: f64) -> Self {
        Self {
            theta1_deg: angles.theta1.to_degrees(),
            theta2_deg: angles.theta2.to_degrees(),
            theta3_deg: angles.theta3.to_degrees(),
            forward_fidelity,
        }
    }

    pub fn angles(&self) -> SynthesisAngles {
        SynthesisAngles::new(
            self.theta1_deg.to_radians(),
            self.theta2_deg.to_radians(),
            self.theta3_deg.to_radians(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::simulate_counts;
    use crate::counting::DriftModel;
    use crate::process::{canonical_process, chi_from_kraus, sphere_map};
    use crate::state::fidelity;
    use approx::assert_relative_eq;

    #[test]
    fn state_json_round_trips_matrix_form() {
        let rho = DensityMatrix::right_circular();
        let json = state_to_json(&rho);
        assert!(json.contains("\"re\"") && json.contains("\"im\""));
        assert!(json.ends_with('\n'));
        let back = state_from_json(&json).unwrap();
        assert!(fidelity(&rho, &back) >= 1.0 - 1e-12);
    }

    #[test]
    fn state_json_accepts_poincare_form() {
        let rho = state_from_json(r#"{"rH": 0.2, "rD": 0.6, "rR": 0.1}"#).unwrap();
        let r = poincare_from_rho(&rho);
        assert_relative_eq!(r.r_h, 0.2, epsilon = 1e-12);
        assert_relative_eq!(r.r_d, 0.6, epsilon = 1e-12);
        assert_relative_eq!(r.r_r, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn state_json_rejects_invalid_inputs() {
        // Unphysical radius.
        assert!(matches!(
            state_from_json(r#"{"rH": 1.0, "rD": 1.0, "rR": 0.0}"#).unwrap_err(),
            Error::RadiusTooLarge { .. }
        ));
        // Trace off by far.
        let bad = r#"{"re": [[0.9, 0.0], [0.0, 0.9]], "im": [[0.0, 0.0], [0.0, 0.0]]}"#;
        assert!(matches!(
            state_from_json(bad).unwrap_err(),
            Error::TraceNotOne { .. }
        ));
        // Malformed JSON reports a line.
        let err = state_from_json("{\n  \"rH\": oops\n}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn chi_json_round_trips_and_checks_basis() {
        let chi = chi_from_kraus(&canonical_process("hadamard").unwrap());
        let json = chi_to_json(&chi);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["basis"], "pauli-eq5");
        assert_relative_eq!(value["re"][1][3].as_f64().unwrap(), 0.5, epsilon = 1e-12);
        let back = chi_from_json(&json).unwrap();
        assert!((chi.matrix() - back.matrix()).norm() < 1e-12);

        let wrong = json.replace("pauli-eq5", "other-basis");
        assert!(matches!(
            chi_from_json(&wrong).unwrap_err(),
            Error::ChiBasis { found } if found == "other-basis"
        ));
    }

    #[test]
    fn element_json_covers_all_kinds() {
        let json = r#"[
            {"kind": "hwp", "theta_deg": 22.5},
            {"kind": "qwp", "theta_deg": -45.0},
            {"kind": "decoherer", "opd_um": 500.0},
            {"kind": "decoherer", "opd_um": 100.0, "basis": 45.0},
            {"kind": "partial_polarizer", "tH": 1.0, "tV": 0.5}
        ]"#;
        let elements = elements_from_json(json).unwrap();
        assert_eq!(elements.len(), 5);
        assert_eq!(elements[0], ElementDescription::Hwp { theta_deg: 22.5 });
        assert_eq!(
            elements[2],
            ElementDescription::Decoherer {
                opd_um: 500.0,
                basis: 0.0
            }
        );
        assert_eq!(
            elements[4],
            ElementDescription::PartialPolarizer { t_h: 1.0, t_v: 0.5 }
        );
        let back = elements_from_json(&elements_to_json(&elements)).unwrap();
        assert_eq!(back, elements);

        assert!(matches!(
            elements_from_json(r#"[{"kind": "prism", "angle": 3}]"#).unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn counts_csv_round_trip() {
        let records = vec![
            simulate_counts(
                &DensityMatrix::diagonal(),
                50_000.0,
                &DriftModel::default(),
                1,
            )
            .unwrap(),
            simulate_counts(
                &DensityMatrix::identity_mixed(),
                20_000.0,
                &DriftModel::default(),
                2,
            )
            .unwrap(),
        ];
        let csv = count_records_to_csv(&records);
        assert!(csv.starts_with("N0,N1,N2,N3,duration_s\n"));
        let back = count_records_from_csv(&csv).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.n, b.n);
            assert_eq!(a.duration_s, b.duration_s);
            assert_eq!(b.expected_total, (a.n[0] + a.n[1]) as f64);
        }
    }

    #[test]
    fn counts_csv_parse_errors_carry_line_numbers() {
        assert!(matches!(
            count_records_from_csv("").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        assert!(matches!(
            count_records_from_csv("a,b,c\n").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        let bad_row = "N0,N1,N2,N3,duration_s\n1,2,3,4,100\n1,2,nope,4,100\n";
        let err = count_records_from_csv(bad_row).unwrap_err();
        match err {
            Error::Parse { line, reason } => {
                assert_eq!(line, 3);
                assert!(reason.contains("N2"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            count_records_from_csv("N0,N1,N2,N3,duration_s\n1,2,3\n").unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
    }

    #[test]
    fn sphere_map_csv_has_header_and_all_samples() {
        let map = sphere_map(&canonical_process("hadamard").unwrap(), (2, 4)).unwrap();
        let csv = sphere_map_to_csv(&map);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SPHERE_MAP_CSV_HEADER);
        assert_eq!(lines.len(), 1 + 2 * 4 + 6);
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 7);
        }
    }

    #[test]
    fn profile_csv_stores_standard_deviations() {
        let e = UncertaintyEllipsoid {
            mean_r: PoincareVector::new(0.6, 0.0, 0.0),
            radial_semiaxis: 1.69 * 0.002,
            transverse_semiaxes: [1.69 * 0.003, 1.69 * 0.004],
            axes_directions: [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]],
        };
        let csv = profile_to_csv(&[e]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PROFILE_CSV_HEADER);
        let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
        assert_relative_eq!(fields[0], 0.6, epsilon = 1e-12);
        assert_relative_eq!(fields[1], 0.002, epsilon = 1e-12);
        assert_relative_eq!(fields[2], 0.003, epsilon = 1e-12);
        assert_relative_eq!(fields[3], 0.004, epsilon = 1e-12);
    }

    #[test]
    fn patches_csv_applies_scale() {
        let e = UncertaintyEllipsoid {
            mean_r: PoincareVector::new(0.0, 0.5, 0.0),
            radial_semiaxis: 0.01,
            transverse_semiaxes: [0.02, 0.03],
            axes_directions: [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
        };
        let csv = patches_to_csv(&[e], 5.0).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PATCHES_CSV_HEADER);
        let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 15);
        assert_relative_eq!(fields[3], 0.05, epsilon = 1e-12);
        assert_relative_eq!(fields[4], 0.10, epsilon = 1e-12);
        assert_relative_eq!(fields[5], 0.15, epsilon = 1e-12);
        assert!(patches_to_csv(&[], 0.0).is_err());
    }

    #[test]
    fn tomography_report_has_the_agreed_keys() {
        let result = crate::tomography::mle_reconstruct(&CountRecord {
            n: [40, 60, 80, 55],
            duration_s: 100.0,
            expected_total: 100.0,
        })
        .unwrap();
        let json = tomography_result_to_json(&result);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["rho", "r", "likelihood", "iterations", "converged"] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        assert!(value["rho"].get("re").is_some());
        assert!(value["r"].get("rH").is_some());
    }

    #[test]
    fn synthesis_report_round_trips_degrees() {
        let angles = SynthesisAngles::new(0.1, -0.2, 0.3);
        let report = SynthesisReport::new(&angles, 0.999_999);
        assert_relative_eq!(report.theta1_deg, 0.1_f64.to_degrees(), epsilon = 1e-12);
        let back = report.angles();
        assert_relative_eq!(back.theta1, 0.1, epsilon = 1e-12);
        assert_relative_eq!(back.theta2, -0.2, epsilon = 1e-12);
        assert_relative_eq!(back.theta3, 0.3, epsilon = 1e-12);
        let json = to_pretty_json(&report);
        let parsed: SynthesisReport = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, report);
    }
}
