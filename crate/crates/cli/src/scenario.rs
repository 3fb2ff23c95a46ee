//! Scenario execution: turn a validated [`ExperimentConfig`] into output
//! files. Everything is computed first and written afterwards, so a failing
//! run never leaves partial outputs behind, and the same config + seed
//! produces byte-identical files regardless of thread count.

use std::fs;
use std::path::{Path, PathBuf};

use biphoton_core::bell::{run_bell, BellRun, FRINGE_OMEGA_PER_HWP_DEG};
use biphoton_core::detection::{
    brightness_to_pair_rate, expected_rates, raw_and_net_visibility, VisibilityPair,
};
use biphoton_core::interference::{delay_scan_curve, phase_scan_curve};
use biphoton_core::io::{write_profile_csv, write_report, write_scan_csv, write_state_csv};
use biphoton_core::spectra::{midpoint_intensity_crossing, same_side_probability};
use biphoton_core::{
    BellSettings, CoreError, CountingConfig, FitModel, HomConfig, ScanCurve, ScanResult,
};

use crate::config::{ExperimentConfig, Scenario};
use crate::error::{CliError, Result};

/// Everything a run produces, still in memory.
pub struct RunOutput {
    /// Output files as `(name, content)`, manifest first.
    pub files: Vec<(String, Vec<u8>)>,
    /// Human-readable result lines for the terminal.
    pub summary: Vec<String>,
}

/// The manifest written next to every run's outputs: the fully resolved
/// configuration stamped with the tool version. It is itself a valid config,
/// so re-running from it reproduces the run.
fn manifest(config: &ExperimentConfig, seed: Option<u64>) -> Result<(String, Vec<u8>)> {
    let mut resolved = config.clone();
    resolved.seed = seed;
    resolved.tool_version = Some(env!("CARGO_PKG_VERSION").to_string());
    Ok(("manifest.toml".into(), resolved.to_toml_string()?.into_bytes()))
}

fn runtime(e: CoreError) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Execute a validated configuration. Call [`ExperimentConfig::validate`]
/// first; errors past that point are runtime errors.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    // A seed only means something when Poisson draws happen.
    let seed = if config.scenario.samples() && config.counting.is_some() {
        config.seed
    } else {
        None
    };
    let mut output = match config.scenario {
        Scenario::Spectrum => run_spectrum(config)?,
        Scenario::HomScan => run_hom_scan(config, seed)?,
        Scenario::PhaseScan => run_phase_scan(config, seed)?,
        Scenario::BellFringe => run_bell_scenario(config, seed, false)?,
        Scenario::Chsh => run_bell_scenario(config, seed, true)?,
        Scenario::Budget => run_budget(config)?,
    };
    output.files.insert(0, manifest(config, seed)?);
    Ok(output)
}

/// Execute and write all outputs into `out_dir`. Returns the written paths.
pub fn write_run(config: &ExperimentConfig, out_dir: &Path) -> Result<(Vec<PathBuf>, Vec<String>)> {
    let output = execute(config)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut written = Vec::with_capacity(output.files.len());
    for (name, content) in &output.files {
        let path = out_dir.join(name);
        fs::write(&path, content)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }
    Ok((written, output.summary))
}

fn csv_of_profile(profile: &biphoton_core::SpectralProfile) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_profile_csv(&mut buf, profile).map_err(runtime)?;
    Ok(buf)
}

fn csv_of_scan(scan: &ScanResult) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_scan_csv(&mut buf, scan).map_err(runtime)?;
    Ok(buf)
}

fn report_file(entries: &[(String, String)]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_report(&mut buf, entries).map_err(runtime)?;
    Ok(buf)
}

fn entry(key: &str, value: impl ToString) -> (String, String) {
    (key.into(), value.to_string())
}

fn run_spectrum(config: &ExperimentConfig) -> Result<RunOutput> {
    let (source_h, source_v, filter_plus, filter_minus) = config.build_spectra()?;
    let crossing =
        midpoint_intensity_crossing(&filter_plus, &filter_minus).map_err(runtime)?;
    let same_side = same_side_probability(&source_h, &source_v, &filter_plus, &filter_minus)
        .map_err(runtime)?;
    let (spec_plus, spec_minus) = config.filter_specs();

    let entries = vec![
        entry("degeneracy_nm", config.source.degeneracy_nm),
        entry("source_fwhm_nm", config.source.fwhm_nm),
        entry("filter_plus_center_nm", spec_plus.center_nm),
        entry("filter_minus_center_nm", spec_minus.center_nm),
        entry("filter_fwhm_ghz", config.filters.bandwidth_fwhm_ghz),
        entry("filter_shape_order", config.filters.shape_order),
        entry("crossing_intensity", crossing),
        entry("same_side_probability", same_side),
    ];
    let files = vec![
        ("source_h.csv".into(), csv_of_profile(&source_h)?),
        ("source_v.csv".into(), csv_of_profile(&source_v)?),
        ("filter_plus.csv".into(), csv_of_profile(&filter_plus)?),
        ("filter_minus.csv".into(), csv_of_profile(&filter_minus)?),
        ("report.txt".into(), report_file(&entries)?),
    ];
    let summary = vec![
        format!("channel crossing intensity = {crossing:.5}"),
        format!("same-side leakage probability = {same_side:.6}"),
    ];
    Ok(RunOutput { files, summary })
}

fn hom_config(config: &ExperimentConfig) -> Result<HomConfig> {
    Ok(HomConfig {
        state: config.build_state()?,
        profiles: config.build_profiles()?,
        range: config.build_range(),
        device_visibility: config.scan.device_visibility,
        counting: config.build_counting(),
    })
}

/// Run one curve to a scan result: a seed draws counts, otherwise the scan
/// is the ideal probability curve.
fn realize(curve: &ScanCurve, seed: Option<u64>) -> Result<ScanResult> {
    match seed {
        Some(s) => curve.sample(s).map_err(runtime),
        None => Ok(curve.ideal_result()),
    }
}

/// The fit model of a *sampled* curve in observed-rate units, for the
/// accidental-subtraction refit.
fn rate_model(curve: &ScanCurve) -> Result<Option<FitModel>> {
    Ok(match curve.model {
        Some(FitModel::Dip { .. }) => curve
            .sampled_baseline_rate()
            .map_err(runtime)?
            .map(|baseline| FitModel::Dip { baseline }),
        Some(FitModel::Peak { .. }) => curve
            .sampled_baseline_rate()
            .map_err(runtime)?
            .map(|baseline| FitModel::Peak { baseline }),
        Some(fringe @ FitModel::Fringe { .. }) => Some(fringe),
        None => None,
    })
}

/// Fit-summary report entries shared by the scan scenarios, plus raw/net
/// visibilities when the scan was counted.
fn scan_entries(
    scan: &ScanResult,
    curve: &ScanCurve,
    counting: Option<&CountingConfig>,
    seed: Option<u64>,
) -> Result<(Vec<(String, String)>, Vec<String>)> {
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    if let Some(s) = seed {
        entries.push(entry("seed", s));
    }
    let Some(fit) = &scan.fit else {
        return Ok((entries, vec!["scan produced no usable fit".into()]));
    };
    entries.push(entry("baseline", fit.baseline));
    entries.push(entry("visibility", fit.visibility));
    if let Some(sigma) = fit.visibility_sigma {
        entries.push(entry("visibility_sigma", sigma));
    }
    entries.push(entry("center", fit.center));
    entries.push(entry("width", fit.width));
    entries.push(entry("flat", fit.flat));
    summary.push(format!(
        "fit: center = {:.4}, visibility = {:.4}, baseline = {:.4}",
        fit.center, fit.visibility, fit.baseline
    ));

    if let (Some(counting), Some(_)) = (counting, seed) {
        let accidentals = expected_rates(counting, 0.0)
            .map_err(runtime)?
            .accidental_coincidences;
        if let Some(model) = rate_model(curve)? {
            let VisibilityPair { raw, net, clamped } =
                raw_and_net_visibility(scan, model, accidentals).map_err(runtime)?;
            entries.push(entry("accidental_rate_per_s", accidentals));
            entries.push(entry("visibility_raw", raw));
            entries.push(entry("visibility_net", net));
            entries.push(entry("net_clamped", clamped));
            summary.push(format!("visibility: raw = {raw:.4}, net = {net:.4}"));
        }
    }
    Ok((entries, summary))
}

fn run_hom_scan(config: &ExperimentConfig, seed: Option<u64>) -> Result<RunOutput> {
    let hom = hom_config(config)?;
    let curve = delay_scan_curve(&hom).map_err(runtime)?;
    let scan = realize(&curve, seed)?;
    let (entries, summary) = scan_entries(&scan, &curve, hom.counting.as_ref(), seed)?;

    let mut state_csv = Vec::new();
    write_state_csv(&mut state_csv, &hom.state).map_err(runtime)?;
    let files = vec![
        ("scan.csv".into(), csv_of_scan(&scan)?),
        ("state.csv".into(), state_csv),
        ("report.txt".into(), report_file(&entries)?),
    ];
    Ok(RunOutput { files, summary })
}

fn run_phase_scan(config: &ExperimentConfig, seed: Option<u64>) -> Result<RunOutput> {
    let hom = hom_config(config)?;
    let sweep = &config.phase;
    let step = (sweep.stop_rad - sweep.start_rad) / (sweep.points - 1) as f64;
    let phases: Vec<f64> = (0..sweep.points)
        .map(|i| sweep.start_rad + step * i as f64)
        .collect();
    let curve = phase_scan_curve(&hom, sweep.tau_ps, &phases).map_err(runtime)?;
    let scan = realize(&curve, seed)?;
    let (mut entries, summary) = scan_entries(&scan, &curve, hom.counting.as_ref(), seed)?;
    entries.insert(0, entry("tau_ps", sweep.tau_ps));

    let mut state_csv = Vec::new();
    write_state_csv(&mut state_csv, &hom.state).map_err(runtime)?;
    let files = vec![
        ("scan.csv".into(), csv_of_scan(&scan)?),
        ("state.csv".into(), state_csv),
        ("report.txt".into(), report_file(&entries)?),
    ];
    Ok(RunOutput { files, summary })
}

fn bell_settings(config: &ExperimentConfig) -> Result<BellSettings> {
    Ok(BellSettings {
        state: config.build_state()?,
        alice_analyzers_deg: config.bell.alice_analyzers_deg,
        bob_hwp_start_deg: config.bell.bob_start_deg,
        bob_hwp_step_deg: config.bell.bob_step_deg,
        bob_hwp_points: config.bell.bob_points,
        chsh: config.chsh_angles(),
        visibility_factor: config.bell.visibility_factor,
        counting: config.build_counting(),
    })
}

fn run_bell_scenario(
    config: &ExperimentConfig,
    seed: Option<u64>,
    with_chsh: bool,
) -> Result<RunOutput> {
    let settings = bell_settings(config)?;
    let run: BellRun = run_bell(&settings, seed).map_err(runtime)?;

    let mut files = Vec::new();
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    if let Some(s) = seed {
        entries.push(entry("seed", s));
    }

    let accidentals = match &settings.counting {
        Some(counting) => Some(
            expected_rates(counting, 0.0)
                .map_err(runtime)?
                .accidental_coincidences,
        ),
        None => None,
    };
    let model = FitModel::Fringe {
        omega: FRINGE_OMEGA_PER_HWP_DEG,
    };
    let mut raw_sum = 0.0;
    let mut net_sum = 0.0;
    for (i, fringe) in run.fringes.iter().enumerate() {
        let name = format!("fringe_{}.csv", i + 1);
        let alice = run.alice_analyzers_deg[i];
        entries.push(entry(&format!("fringe_{}_alice_deg", i + 1), alice));
        entries.push((format!("fringe_{}_file", i + 1), name.clone()));
        if let (Some(acc), Some(_)) = (accidentals, seed) {
            let pair = raw_and_net_visibility(fringe, model, acc).map_err(runtime)?;
            entries.push(entry(&format!("fringe_{}_visibility_raw", i + 1), pair.raw));
            entries.push(entry(&format!("fringe_{}_visibility_net", i + 1), pair.net));
            raw_sum += pair.raw;
            net_sum += pair.net;
        } else if let Some(fit) = &fringe.fit {
            entries.push(entry(&format!("fringe_{}_visibility", i + 1), fit.visibility));
            raw_sum += fit.visibility;
            net_sum += fit.visibility;
        }
        files.push((name, csv_of_scan(fringe)?));
    }
    let n = run.fringes.len() as f64;
    entries.push(entry("mean_visibility_raw", raw_sum / n));
    entries.push(entry("mean_visibility_net", net_sum / n));
    if let Some(acc) = accidentals {
        entries.push(entry("accidental_rate_per_s", acc));
    }
    summary.push(format!(
        "fringe visibility: raw = {:.4}, net = {:.4} (mean over {} settings)",
        raw_sum / n,
        net_sum / n,
        run.fringes.len()
    ));

    if with_chsh {
        let labels = ["e_ab", "e_ab_prime", "e_a_prime_b", "e_a_prime_b_prime"];
        for (label, correlation) in labels.iter().zip(&run.correlations) {
            entries.push(entry(label, correlation.value));
            entries.push(entry(&format!("{label}_sigma"), correlation.sigma));
        }
        entries.push(entry("s", run.chsh_fringes.s));
        entries.push(entry("sigma_s", run.chsh_fringes.sigma));
        entries.push(entry(
            "sigmas_of_violation",
            run.chsh_fringes.violation_significance(),
        ));
        entries.push(entry("s_state", run.chsh_state));
        summary.push(format!(
            "S = {:.4} ± {:.4} ({:.1} sigma above the local bound)",
            run.chsh_fringes.s,
            run.chsh_fringes.sigma,
            run.chsh_fringes.violation_significance()
        ));
    }

    files.push(("report.txt".into(), report_file(&entries)?));
    Ok(RunOutput { files, summary })
}

fn run_budget(config: &ExperimentConfig) -> Result<RunOutput> {
    let budget = &config.budget;
    // Validation guarantees the counting section exists.
    let counting = config
        .build_counting()
        .expect("budget scenario is validated to carry a counting chain");
    let produced = brightness_to_pair_rate(
        budget.brightness_pairs_per_s_mw_ghz,
        budget.pump_power_mw,
        budget.collection_bandwidth_ghz,
    )
    .map_err(runtime)?;
    // Push the produced rate through the configured loss chain and compare
    // at the fringe maximum (joint probability 1/2).
    let budgeted = CountingConfig {
        pair_rate: produced,
        ..counting
    };
    let rates = expected_rates(&budgeted, 0.5).map_err(runtime)?;
    let discrepancy = rates.true_coincidences / budget.reference_rate_per_s;

    let entries = vec![
        entry("produced_pairs_per_s", produced),
        entry("detected_pair_rate_per_s", budgeted.detected_pair_rate()),
        entry("expected_coincidences_per_s", rates.true_coincidences),
        entry("accidental_rate_per_s", rates.accidental_coincidences),
        entry("singles_plus_per_s", rates.singles[0]),
        entry("singles_minus_per_s", rates.singles[1]),
        entry("reference_rate_per_s", budget.reference_rate_per_s),
        entry("discrepancy_factor", discrepancy),
    ];
    let summary = vec![format!(
        "budget: {produced:.3e} pairs/s produced, {:.0}/s expected at the \
         detectors vs {:.0}/s observed — factor {discrepancy:.1} unaccounted",
        rates.true_coincidences, budget.reference_rate_per_s
    )];
    Ok(RunOutput {
        files: vec![("report.txt".into(), report_file(&entries)?)],
        summary,
    })
}
