//! Published configurations: the bench's recorded operating points plus an
//! ideal-limit and an upgraded-detector variant. Every preset is a fully
//! resolved [`ExperimentConfig`] — `preset show` output runs as-is.

use biphoton_core::detection::DetectorParams;

use crate::config::{
    CountingSection, DetectorSection, ExperimentConfig, Scenario,
};
use crate::error::{CliError, Result};

/// Preset names with one-line descriptions, in `preset list` order.
pub const PRESETS: [(&str, &str); 9] = [
    (
        "ideal",
        "noiseless delay scan, no walk-off: textbook dip at zero delay",
    ),
    (
        "paper-no-pmf",
        "delay scan straight out of the waveguide, APD counting chain",
    ),
    (
        "paper-pmf",
        "delay scan with the compensation fiber spliced in",
    ),
    (
        "paper-dip",
        "compensated scan at phase 0 with the lossy phase-shifter arm",
    ),
    (
        "paper-peak",
        "compensated scan at phase pi: coincidence peak instead of dip",
    ),
    (
        "paper-phase",
        "phase-shifter sweep at fixed delay: dip-to-peak fringe",
    ),
    (
        "paper-bell",
        "four polarization fringes and the correlation sum, APD counting",
    ),
    (
        "paper-budget",
        "pair-rate budget against the recorded coincidence rate",
    ),
    (
        "sc-detector",
        "correlation sum with superconducting detectors, 1 ns window",
    ),
];

/// Free-running + gated APD pair watching the plain interference dip.
fn apd_dip_counting() -> CountingSection {
    CountingSection {
        pair_rate: 8.0e4,
        link_transmission: [0.5, 0.5],
        coincidence_window_ns: 20.0,
        integration_time_s: 1.0,
        detector_plus: DetectorSection::from_params(&DetectorParams::free_running_apd()),
        detector_minus: DetectorSection::from_params(&DetectorParams::gated_apd()),
    }
}

/// The phase-shifter arrangement: pump turned up, one arm heavily lossy.
/// The peak top is the noisiest spot on any of the scans, so this bench
/// integrates longer per point than the plain dip.
fn phase_arm_counting() -> CountingSection {
    CountingSection {
        pair_rate: 8.0e5,
        link_transmission: [0.5, 0.05],
        integration_time_s: 4.0,
        ..apd_dip_counting()
    }
}

/// Two free-running APDs for the polarization-analysis fringes.
fn bell_counting() -> CountingSection {
    CountingSection {
        pair_rate: 2.2e5,
        link_transmission: [0.5, 0.5],
        coincidence_window_ns: 20.0,
        integration_time_s: 10.0,
        detector_plus: DetectorSection::from_params(&DetectorParams::free_running_apd()),
        detector_minus: DetectorSection::from_params(&DetectorParams::free_running_apd()),
    }
}

/// Resolve a preset by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let mut config = match name {
        "ideal" => ExperimentConfig::new(Scenario::HomScan),
        "paper-no-pmf" => {
            let mut c = ExperimentConfig::new(Scenario::HomScan);
            c.source.waveguide_walkoff_ps = 4.40;
            c.scan.device_visibility = 0.947;
            c.counting = Some(apd_dip_counting());
            c
        }
        "paper-pmf" => {
            let mut c = preset("paper-no-pmf")?;
            c.source.pmf_length_m = 3.2;
            c
        }
        "paper-dip" => {
            let mut c = preset("paper-pmf")?;
            c.scan.device_visibility = 0.94;
            c.counting = Some(phase_arm_counting());
            c
        }
        "paper-peak" => {
            let mut c = preset("paper-dip")?;
            c.state.phase_rad = std::f64::consts::PI;
            c
        }
        "paper-phase" => {
            let mut c = preset("paper-dip")?;
            c.scenario = Scenario::PhaseScan;
            c.state.phase_rad = 0.0;
            c
        }
        "paper-bell" => {
            let mut c = ExperimentConfig::new(Scenario::Chsh);
            c.bell.visibility_factor = 0.993;
            c.counting = Some(bell_counting());
            c
        }
        "paper-budget" => {
            let mut c = ExperimentConfig::new(Scenario::Budget);
            c.counting = Some(bell_counting());
            c
        }
        "sc-detector" => {
            let mut c = preset("paper-bell")?;
            let sc = DetectorSection::from_params(&DetectorParams::superconducting());
            if let Some(counting) = c.counting.as_mut() {
                counting.detector_plus = sc.clone();
                counting.detector_minus = sc;
                counting.coincidence_window_ns = 1.0;
            }
            c
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown preset '{other}'; run `preset list` for the published names"
            )))
        }
    };
    if config.scenario.samples() && config.counting.is_some() {
        config.seed = Some(42);
    }
    Ok(config)
}
