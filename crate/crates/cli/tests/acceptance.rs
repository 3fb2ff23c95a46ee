//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see the lines for passing
//! criteria). The criteria pin the simulator to the recorded bench values:
//! dip placement and compensation, ideal and counted visibilities, Bell
//! fringe contrast, the CHSH values, filter isolation, channel-delay
//! invariance, ensemble statistics, and bit-level determinism.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use biphoton_core::bell::{run_bell, FRINGE_OMEGA_PER_HWP_DEG};
use biphoton_core::detection::{expected_rates, raw_and_net_visibility, simulate_counts};
use biphoton_core::interference::{
    channel_delay_sweep, delay_scan, delay_scan_curve, pmf_length_for_compensation,
};
use biphoton_core::spectra::same_side_probability;
use biphoton_core::streams::stream_rng;
use biphoton_core::{
    BellSettings, BiphotonState, ChshEstimate, FitModel, FrequencyGrid, HomConfig, ScanCurve,
    SpectralProfile,
};
use biphoton_cli::presets::preset;
use biphoton_cli::{ExperimentConfig, Scenario};

/// Print the per-criterion verdict line, then enforce it.
fn verdict(criterion: usize, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("acceptance criterion {criterion}: {word} — {detail}");
    assert!(pass, "criterion {criterion}: {detail}");
}

/// The delay-scan arrangement of a published preset, optionally stripped of
/// its counting chain.
fn hom_config(name: &str, counted: bool) -> HomConfig {
    let mut config = preset(name).unwrap();
    if !counted {
        config.counting = None;
    }
    HomConfig {
        state: config.build_state().unwrap(),
        profiles: config.build_profiles().unwrap(),
        range: config.build_range(),
        device_visibility: config.scan.device_visibility,
        counting: config.build_counting(),
    }
}

#[test]
fn criterion_1_fitted_dip_centers() {
    let mut pass = true;
    let mut details = Vec::new();
    for (name, target, tolerance) in [("paper-no-pmf", -4.40, 0.05), ("paper-pmf", 0.0, 0.05)] {
        let config = hom_config(name, true);
        let started = Instant::now();
        let scan = delay_scan(&config, Some(42)).unwrap();
        let elapsed = started.elapsed().as_secs_f64();
        let center = scan.fit.unwrap().center;
        pass &= (center - target).abs() < tolerance && elapsed < 5.0;
        details.push(format!("{name} center {center:+.3} ps in {elapsed:.2} s"));
    }
    verdict(1, pass, &details.join(", "));
}

#[test]
fn criterion_2_ideal_visibilities_and_phase_complementarity() {
    let mut dip = hom_config("ideal", false);
    let mut peak_config = preset("ideal").unwrap();
    peak_config.state.phase_rad = std::f64::consts::PI;
    let peak = HomConfig {
        state: peak_config.build_state().unwrap(),
        profiles: peak_config.build_profiles().unwrap(),
        range: peak_config.build_range(),
        device_visibility: 1.0,
        counting: None,
    };
    dip.device_visibility = 1.0;

    let dip_curve = delay_scan_curve(&dip).unwrap();
    let peak_curve = delay_scan_curve(&peak).unwrap();
    let dip_vis = dip_curve.ideal_result().fit.unwrap().visibility;
    let peak_vis = peak_curve.ideal_result().fit.unwrap().visibility;

    // The two phase settings are complementary interference channels: their
    // coincidence probabilities must sum to one at every delay.
    let worst_sum = dip_curve
        .probabilities
        .iter()
        .zip(&peak_curve.probabilities)
        .map(|(a, b)| (a + b - 1.0).abs())
        .fold(0.0, f64::max);

    let pass = (dip_vis - 1.0).abs() < 1e-3 && (peak_vis - 1.0).abs() < 1e-3 && worst_sum < 1e-9;
    verdict(
        2,
        pass,
        &format!(
            "ideal dip visibility {dip_vis:.6}, peak visibility {peak_vis:.6}, \
             worst |p(0)+p(pi)-1| = {worst_sum:.2e}"
        ),
    );
}

/// Rate-unit fit model matching a counted curve's feature direction.
fn rate_model(curve: &ScanCurve) -> FitModel {
    let baseline = curve.sampled_baseline_rate().unwrap().unwrap();
    match curve.model.unwrap() {
        FitModel::Dip { .. } => FitModel::Dip { baseline },
        FitModel::Peak { .. } => FitModel::Peak { baseline },
        FitModel::Fringe { omega } => FitModel::Fringe { omega },
    }
}

#[test]
fn criterion_3_counted_visibility_bands() {
    let started = Instant::now();
    // (preset, raw band, net band or None); bands are the recorded values
    // with their quoted uncertainties.
    let cases = [
        ("paper-pmf", (0.89, 0.99), None),
        ("paper-dip", (0.81, 0.91), Some((0.88, 1.00))),
        ("paper-peak", (0.81, 0.91), Some((0.88, 1.00))),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, raw_band, net_band) in cases {
        let config = hom_config(name, true);
        let counting = config.counting.clone().unwrap();
        let accidentals = expected_rates(&counting, 0.0).unwrap().accidental_coincidences;
        let curve = delay_scan_curve(&config).unwrap();
        let model = rate_model(&curve);
        let (mut raw_in, mut net_in) = (0, 0);
        for seed in 0..100 {
            let scan = curve.sample(seed).unwrap();
            let pair = raw_and_net_visibility(&scan, model, accidentals).unwrap();
            if pair.raw > raw_band.0 && pair.raw < raw_band.1 {
                raw_in += 1;
            }
            if let Some(band) = net_band {
                if pair.net > band.0 && pair.net < band.1 {
                    net_in += 1;
                }
            }
        }
        pass &= raw_in >= 95;
        details.push(format!("{name} raw {raw_in}/100"));
        if net_band.is_some() {
            pass &= net_in >= 95;
            details.push(format!("{name} net {net_in}/100"));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    pass &= elapsed < 60.0;
    details.push(format!("{elapsed:.1} s"));
    verdict(3, pass, &details.join(", "));
}

#[test]
fn criterion_4_bell_fringe_visibility_bands() {
    let counting = preset("paper-bell").unwrap().build_counting().unwrap();
    let accidentals = expected_rates(&counting, 0.0).unwrap().accidental_coincidences;
    let settings = BellSettings {
        visibility_factor: 0.993,
        counting: Some(counting),
        ..BellSettings::ideal(BiphotonState::psi_plus())
    };
    let model = FitModel::Fringe {
        omega: FRINGE_OMEGA_PER_HWP_DEG,
    };
    let (mut raw_in, mut net_in) = (0, 0);
    for seed in 0..100 {
        let run = run_bell(&settings, Some(seed)).unwrap();
        let pairs: Vec<_> = run
            .fringes
            .iter()
            .map(|f| raw_and_net_visibility(f, model, accidentals).unwrap())
            .collect();
        let mean_raw = pairs.iter().map(|p| p.raw).sum::<f64>() / pairs.len() as f64;
        let mean_net = pairs.iter().map(|p| p.net).sum::<f64>() / pairs.len() as f64;
        if (mean_raw - 0.973).abs() < 0.006 {
            raw_in += 1;
        }
        if (mean_net - 0.995).abs() < 0.008 {
            net_in += 1;
        }
    }
    let pass = raw_in >= 95 && net_in >= 95;
    verdict(
        4,
        pass,
        &format!("mean fringe visibility raw {raw_in}/100 in 97.3±0.6, net {net_in}/100 in 99.5±0.8"),
    );
}

#[test]
fn criterion_5_chsh_values() {
    let ideal = run_bell(&BellSettings::ideal(BiphotonState::psi_plus()), None).unwrap();
    let bound = 2.0 * 2.0_f64.sqrt();
    let state_exact = (ideal.chsh_state - bound).abs() < 1e-9;
    let fringes_exact = (ideal.chsh_fringes.s - bound).abs() < 1e-9;

    let recorded = [
        ChshEstimate { s: 2.806, sigma: 0.005 },
        ChshEstimate { s: 2.824, sigma: 0.007 },
    ];
    let significances: Vec<f64> = recorded.iter().map(|e| e.violation_significance()).collect();
    let violations = significances.iter().all(|&s| s > 100.0);

    let pass = state_exact && fringes_exact && violations;
    verdict(
        5,
        pass,
        &format!(
            "ideal S = {:.9} (state) / {:.9} (fringes), recorded violations {:.1}σ and {:.1}σ",
            ideal.chsh_state, ideal.chsh_fringes.s, significances[0], significances[1]
        ),
    );
}

#[test]
fn criterion_6_filter_isolation() {
    // The published filter pair.
    let config = ExperimentConfig::new(Scenario::Spectrum);
    let (source_h, source_v, plus, minus) = config.build_spectra().unwrap();
    let leakage = same_side_probability(&source_h, &source_v, &plus, &minus).unwrap();

    // Disjoint rectangular passbands on a flat source: no frequency reaches
    // both outputs, so the same-side probability must vanish identically.
    let grid = FrequencyGrid::new(194.645, 0.8, 4096).unwrap();
    let center = 194.645;
    let rect = |lo: f64, hi: f64| -> SpectralProfile {
        let amplitude: Vec<f64> = (0..grid.len())
            .map(|i| {
                let f = grid.frequency(i);
                if f >= lo && f <= hi {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        SpectralProfile::from_real(grid.clone(), amplitude).unwrap()
    };
    let flat = rect(f64::NEG_INFINITY, f64::INFINITY);
    let rect_plus = rect(center + 0.10, center + 0.30);
    let rect_minus = rect(center - 0.30, center - 0.10);
    let disjoint = same_side_probability(&flat, &flat, &rect_plus, &rect_minus).unwrap();

    let pass = leakage > 0.0 && leakage < 0.0025 && disjoint == 0.0;
    verdict(
        6,
        pass,
        &format!("preset filter leakage {leakage:.2e} < 2.5e-3, disjoint rectangles {disjoint:.1e}"),
    );
}

#[test]
fn criterion_7_channel_delay_invariance() {
    let config = hom_config("paper-pmf", false);
    let mut worst = 0.0_f64;
    for tau_ps in [-4.40, -0.016, 0.0, 3.7] {
        let probs = channel_delay_sweep(&config, tau_ps, &[0.0, 22_000.0]).unwrap();
        worst = worst.max((probs[1] - probs[0]).abs());
    }
    let pass = worst < 1e-12;
    verdict(
        7,
        pass,
        &format!("coincidence probability spread {worst:.2e} between 0 and 22 ns channel delay"),
    );
}

#[test]
fn criterion_8_derived_values_and_ensemble_statistics() {
    // Closed-form anchors. The unit suites check these throughout the
    // workspace; re-assert the load-bearing ones here.
    let length = pmf_length_for_compensation(4.40, 1.38).unwrap();
    let length_ok = (length - 4.40 / 1.38).abs() < 1e-12;
    let rates = expected_rates(&preset("paper-dip").unwrap().build_counting().unwrap(), 0.5)
        .unwrap();
    let rates_ok = (rates.true_coincidences - 500.0).abs() < 1e-9
        && (rates.accidental_coincidences - 32.4).abs() < 1e-9;

    // Monte Carlo: the ensemble mean of simulated coincidence counts over
    // 10⁴ seeds must sit within 3σ of the analytic expectation.
    let counting = preset("paper-bell").unwrap().build_counting().unwrap();
    let expected = expected_rates(&counting, 0.5).unwrap().total_coincidences()
        * counting.integration_time_s;
    let seeds = 10_000u64;
    let mut sum = 0.0;
    for seed in 0..seeds {
        let mut rng = stream_rng(0, seed);
        let records = simulate_counts(&counting, 0.5, &mut rng).unwrap();
        sum += records
            .iter()
            .find(|r| r.category == "coincidences")
            .unwrap()
            .count as f64;
    }
    let mean = sum / seeds as f64;
    let sigma_of_mean = (expected / seeds as f64).sqrt();
    let pull = (mean - expected) / sigma_of_mean;
    let mc_ok = pull.abs() < 3.0;

    let pass = length_ok && rates_ok && mc_ok;
    verdict(
        8,
        pass,
        &format!(
            "compensation length {length:.4} m, dip-bench rates ({:.1}, {:.1})/s, \
             Monte Carlo pull {pull:+.2}σ over 10⁴ seeds",
            rates.true_coincidences, rates.accidental_coincidences
        ),
    );
}

/// All regular files in a directory as sorted (name, bytes) pairs.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|entry| {
            let entry = entry.unwrap();
            (
                entry.file_name().into_string().unwrap(),
                std::fs::read(entry.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_9_deterministic_outputs() {
    let dir = tempfile::TempDir::new().unwrap();
    let config_path = dir.path().join("config.toml");
    let config = preset("paper-dip").unwrap();
    std::fs::write(&config_path, config.to_toml_string().unwrap()).unwrap();

    let run = |out: &PathBuf, threads: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_biphoton"))
            .env_remove("BIPHOTON_OUT")
            .env("RAYON_NUM_THREADS", threads)
            .args(["run", "--config", config_path.to_str().unwrap()])
            .args(["--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    run(&a, "8");
    run(&b, "8");
    run(&c, "1");

    let (snap_a, snap_b, snap_c) = (snapshot(&a), snapshot(&b), snapshot(&c));
    let pass = snap_a == snap_b && snap_a == snap_c;
    verdict(
        9,
        pass,
        &format!(
            "{} files byte-identical across repeated runs and thread counts 1 and 8",
            snap_a.len()
        ),
    );
}
