//! CSV serialization of profiles, scans, counts, and states.
//!
//! All numeric output uses Rust's shortest round-trip float formatting, so a
//! written file parses back to bit-identical values and identical runs
//! produce byte-identical files. Lines starting with `#` are comments;
//! writers use them for provenance (seed, fit summary) and readers skip
//! them.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::polarization::BiphotonState;
use crate::scan::{ScanPoint, ScanResult};
use crate::spectra::{FrequencyGrid, SpectralProfile};

/// Write a spectral profile as `frequency_thz,amp_re,amp_im`.
pub fn write_profile_csv<W: Write>(mut w: W, profile: &SpectralProfile) -> Result<()> {
    writeln!(w, "frequency_thz,amp_re,amp_im")?;
    let grid = profile.grid();
    for (i, a) in profile.amplitude().iter().enumerate() {
        writeln!(w, "{},{},{}", grid.frequency(i), a.re, a.im)?;
    }
    Ok(())
}

/// Read a profile written by [`write_profile_csv`]. The grid is
/// reconstructed from the frequency column, which must be uniformly spaced.
pub fn read_profile_csv<R: BufRead>(r: R) -> Result<SpectralProfile> {
    let mut frequencies = Vec::new();
    let mut amplitude = Vec::new();
    for (row, _) in parse_rows(r, &["frequency_thz", "amp_re", "amp_im"])? {
        frequencies.push(row[0]);
        amplitude.push(Complex64::new(row[1], row[2]));
    }
    if frequencies.len() < 2 {
        return Err(CoreError::Parse("profile needs at least two rows".into()));
    }
    let n = frequencies.len();
    let span = frequencies[n - 1] - frequencies[0];
    let center = 0.5 * (frequencies[0] + frequencies[n - 1]);
    let grid = FrequencyGrid::new(center, span, n)?;
    let step = grid.step_thz();
    for (i, &f) in frequencies.iter().enumerate() {
        if (f - grid.frequency(i)).abs() > 1e-9 * step.max(1.0) {
            return Err(CoreError::Parse(format!(
                "frequency column is not uniformly spaced near row {i}"
            )));
        }
    }
    SpectralProfile::from_amplitudes(grid, amplitude)
}

/// Write a scan as `<control_label>,rate,uncertainty` with provenance
/// comments for the seed and the fitted summary.
pub fn write_scan_csv<W: Write>(mut w: W, scan: &ScanResult) -> Result<()> {
    if let Some(seed) = scan.seed {
        writeln!(w, "# seed = {seed}")?;
    }
    if let Some(fit) = &scan.fit {
        write!(
            w,
            "# fit: baseline = {}, visibility = {}",
            fit.baseline, fit.visibility
        )?;
        if let Some(sigma) = fit.visibility_sigma {
            write!(w, " +- {sigma}")?;
        }
        writeln!(w, ", center = {}, width = {}", fit.center, fit.width)?;
    }
    writeln!(w, "{},rate,uncertainty", scan.control_label)?;
    for p in &scan.points {
        writeln!(w, "{},{},{}", p.control, p.rate, p.uncertainty)?;
    }
    Ok(())
}

/// Read the data rows of a scan CSV. Comments (and with them the fit
/// summary) are skipped: the fit belongs to the run that produced the file,
/// not to the file itself.
pub fn read_scan_csv<R: BufRead>(r: R) -> Result<ScanResult> {
    let mut lines = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        lines.push(line);
    }
    if lines.len() < 2 {
        return Err(CoreError::Parse("scan file has no data rows".into()));
    }
    let header: Vec<&str> = lines[0].split(',').map(str::trim).collect();
    if header.len() != 3 || header[1] != "rate" || header[2] != "uncertainty" {
        return Err(CoreError::Parse(format!(
            "expected header '<control>,rate,uncertainty', got '{}'",
            lines[0]
        )));
    }
    let control_label = header[0].to_string();
    let mut points = Vec::with_capacity(lines.len() - 1);
    for (i, line) in lines[1..].iter().enumerate() {
        let row = parse_numeric_row(line, 3)
            .map_err(|e| CoreError::Parse(format!("scan row {}: {e}", i + 1)))?;
        points.push(ScanPoint {
            control: row[0],
            rate: row[1],
            uncertainty: row[2],
        });
    }
    Ok(ScanResult {
        control_label,
        points,
        seed: None,
        fit: None,
    })
}

/// Write count records as `category,count`.
pub fn write_counts_csv<W: Write>(
    mut w: W,
    records: &[crate::detection::CountRecord],
) -> Result<()> {
    writeln!(w, "category,count")?;
    for r in records {
        writeln!(w, "{},{}", r.category, r.count)?;
    }
    Ok(())
}

const STATE_HEADER: [&str; 10] = [
    "hh_re",
    "hh_im",
    "hv_re",
    "hv_im",
    "vh_re",
    "vh_im",
    "vv_re",
    "vv_im",
    "walkoff_ps",
    "channel_delay_ps",
];

/// Write a pair state as a single CSV row: the four complex amplitudes in
/// `HH,HV,VH,VV` order (re/im pairs) followed by the two accumulated delays.
pub fn write_state_csv<W: Write>(mut w: W, state: &BiphotonState) -> Result<()> {
    writeln!(w, "{}", STATE_HEADER.join(","))?;
    for a in state.amplitudes() {
        write!(w, "{},{},", a.re, a.im)?;
    }
    writeln!(w, "{},{}", state.walkoff_ps(), state.channel_delay_ps())?;
    Ok(())
}

/// Read a state written by [`write_state_csv`].
pub fn read_state_csv<R: BufRead>(r: R) -> Result<BiphotonState> {
    let rows = parse_rows(r, &STATE_HEADER)?;
    let [(row, _)] = rows.as_slice() else {
        return Err(CoreError::Parse(format!(
            "state file must have exactly one data row, found {}",
            rows.len()
        )));
    };
    let amplitudes = [
        Complex64::new(row[0], row[1]),
        Complex64::new(row[2], row[3]),
        Complex64::new(row[4], row[5]),
        Complex64::new(row[6], row[7]),
    ];
    Ok(BiphotonState::from_amplitudes(amplitudes)?
        .with_walkoff_ps(row[8])
        .with_channel_delay_ps(row[9]))
}

/// Write a plain-text report of `key = value` lines.
pub fn write_report<W: Write>(mut w: W, entries: &[(String, String)]) -> Result<()> {
    for (key, value) in entries {
        writeln!(w, "{key} = {value}")?;
    }
    Ok(())
}

/// Parse all data rows of a CSV with the given expected header, skipping
/// comments and blank lines. Returns each row with its 1-based line number.
fn parse_rows<R: BufRead>(r: R, header: &[&str]) -> Result<Vec<(Vec<f64>, usize)>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields != header {
                return Err(CoreError::Parse(format!(
                    "expected header '{}', got '{trimmed}'",
                    header.join(",")
                )));
            }
            header_seen = true;
            continue;
        }
        let row = parse_numeric_row(trimmed, header.len())
            .map_err(|e| CoreError::Parse(format!("line {}: {e}", lineno + 1)))?;
        rows.push((row, lineno + 1));
    }
    if !header_seen {
        return Err(CoreError::Parse("file has no header".into()));
    }
    Ok(rows)
}

fn parse_numeric_row(line: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != n {
        return Err(format!("expected {n} fields, got {}", fields.len()));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| format!("'{f}' is not a number"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::Polarization;
    use crate::spectra::make_source_spectrum;

    fn sample_profile() -> SpectralProfile {
        let grid = FrequencyGrid::around_wavelength_nm(1540.2, 6.0, 512).unwrap();
        make_source_spectrum(Polarization::H, 1540.2, 0.85, &grid).unwrap()
    }

    #[test]
    fn profile_round_trips_bit_exactly() {
        let profile = sample_profile();
        let mut buffer = Vec::new();
        write_profile_csv(&mut buffer, &profile).unwrap();
        let back = read_profile_csv(buffer.as_slice()).unwrap();
        assert_eq!(profile.amplitude(), back.amplitude());
        assert_eq!(profile.grid().len(), back.grid().len());
        assert!((profile.grid().center_thz() - back.grid().center_thz()).abs() < 1e-9);
    }

    #[test]
    fn scan_round_trips_bit_exactly() {
        let scan = ScanResult {
            control_label: "control_ps".into(),
            points: vec![
                ScanPoint {
                    control: -1.0,
                    rate: 0.497,
                    uncertainty: 0.01,
                },
                ScanPoint {
                    control: 0.0,
                    rate: 1.0 / 3.0,
                    uncertainty: 0.011,
                },
                ScanPoint {
                    control: 1.0,
                    rate: 0.5031,
                    uncertainty: 0.0097,
                },
            ],
            seed: Some(17),
            fit: None,
        };
        let mut buffer = Vec::new();
        write_scan_csv(&mut buffer, &scan).unwrap();
        let back = read_scan_csv(buffer.as_slice()).unwrap();
        assert_eq!(back.control_label, "control_ps");
        assert_eq!(back.points, scan.points);
    }

    #[test]
    fn scan_comments_carry_seed_and_fit() {
        let scan = ScanResult {
            control_label: "control_rad".into(),
            points: vec![
                ScanPoint {
                    control: 0.0,
                    rate: 0.5,
                    uncertainty: 0.0,
                };
                6
            ],
            seed: Some(99),
            fit: Some(crate::scan::ScanFit {
                baseline: 0.5,
                visibility: 0.94,
                visibility_sigma: Some(0.002),
                center: 0.0,
                width: 3.5,
                flat: false,
            }),
        };
        let mut buffer = Vec::new();
        write_scan_csv(&mut buffer, &scan).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert!(text.contains("# seed = 99"));
        assert!(text.contains("visibility = 0.94 +- 0.002"));
        assert!(text.starts_with("#"));
    }

    #[test]
    fn state_and_counts_writers_emit_expected_shapes() {
        let mut buffer = Vec::new();
        write_state_csv(&mut buffer, &BiphotonState::psi_plus()).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "hh_re,hh_im,hv_re,hv_im,vh_re,vh_im,vv_re,vv_im,walkoff_ps,channel_delay_ps"
        );
        assert_eq!(
            lines[1],
            "0,0,0.7071067811865476,0,0.7071067811865476,0,0,0,0,0"
        );

        let mut buffer = Vec::new();
        write_counts_csv(
            &mut buffer,
            &[crate::detection::CountRecord {
                category: "coincidences".into(),
                count: 532,
            }],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buffer).unwrap(),
            "category,count\ncoincidences,532\n"
        );
    }

    #[test]
    fn state_round_trips_with_its_delays() {
        let state = BiphotonState::psi_phi(0.37)
            .with_walkoff_ps(-0.016)
            .with_channel_delay_ps(22_000.0);
        let mut buffer = Vec::new();
        write_state_csv(&mut buffer, &state).unwrap();
        let back = read_state_csv(buffer.as_slice()).unwrap();
        assert_eq!(state.amplitudes(), back.amplitudes());
        assert_eq!(back.walkoff_ps(), -0.016);
        assert_eq!(back.channel_delay_ps(), 22_000.0);

        // Two data rows are rejected.
        let mut doubled = Vec::new();
        write_state_csv(&mut doubled, &state).unwrap();
        let mut text = String::from_utf8(doubled).unwrap();
        let row = text.lines().nth(1).unwrap().to_string();
        text.push_str(&row);
        text.push('\n');
        assert!(read_state_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn malformed_files_are_rejected_with_context() {
        let err = read_profile_csv("wrong,header,here\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CoreError::Parse(_)), "{err:?}");

        let err =
            read_scan_csv("delay_ps,rate,uncertainty\n0.0,abc,0.0\n".as_bytes()).unwrap_err();
        match err {
            CoreError::Parse(msg) => assert!(msg.contains("abc"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }

        // Non-uniform frequency spacing.
        let err = read_profile_csv(
            "frequency_thz,amp_re,amp_im\n1,0,0\n2,0,0\n4,0,0\n".as_bytes(),
        )
        .unwrap_err();
        assert!(matches!(err, CoreError::Parse(_)));
    }
}
