//! Typed experiment configuration.
//!
//! The on-disk format is TOML with one section per stage of the bench;
//! parsing is strict — an unknown key anywhere is an error, so a typo can
//! never silently fall back to a default. Every section has full defaults,
//! and a serialized config always writes them out, so the emitted form is
//! self-describing: the run manifest is itself a valid configuration.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use biphoton_core::detection::DetectorParams;
use biphoton_core::interference::DelayScanRange;
use biphoton_core::polarization::{apply_sequence, BiphotonState, OpticalElement};
use biphoton_core::spectra::{
    make_dwdm_filter, make_source_spectrum_shaped, validate_filter_pair, SourceShape,
};
use biphoton_core::{
    BandRole, ChshAngles, CountingConfig, DetectorMode, FilterSpec, FrequencyGrid,
    KernelProfiles, Polarization, SpectralProfile,
};

use crate::error::{CliError, Result};

/// Which measurement the run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Emit the source and filter spectra plus the channel-leakage report.
    Spectrum,
    /// Sweep the birefringent delay and fit the interference feature.
    HomScan,
    /// Hold the delay and sweep the phase-shifter setting.
    PhaseScan,
    /// Measure the four polarization-correlation fringes.
    BellFringe,
    /// The four fringes plus the correlation sum and its significance.
    Chsh,
    /// Compare the pair-rate budget against a reference coincidence rate.
    Budget,
}

impl Scenario {
    /// Whether the scenario draws Poisson counts when a counting chain is
    /// configured (and therefore needs a seed).
    pub fn samples(self) -> bool {
        !matches!(self, Scenario::Spectrum | Scenario::Budget)
    }
}

/// The emission line and the birefringent elements it passes through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    /// Degeneracy wavelength, nm.
    pub degeneracy_nm: f64,
    /// Intensity FWHM of the emission line, nm.
    pub fwhm_nm: f64,
    /// Line shape: `gaussian` or `sinc_squared`.
    pub shape: ShapeName,
    /// H-vs-V group delay picked up in the source waveguide, ps.
    pub waveguide_walkoff_ps: f64,
    /// Differential group delay of the compensation fiber, ps per meter.
    pub pmf_dgd_ps_per_m: f64,
    /// Installed compensation-fiber length, m (0 = no fiber).
    pub pmf_length_m: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self {
            degeneracy_nm: 1540.2,
            fwhm_nm: 0.85,
            shape: ShapeName::Gaussian,
            waveguide_walkoff_ps: 0.0,
            pmf_dgd_ps_per_m: 1.38,
            pmf_length_m: 0.0,
        }
    }
}

/// Serializable name for the source line shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeName {
    Gaussian,
    SincSquared,
}

impl From<ShapeName> for SourceShape {
    fn from(name: ShapeName) -> Self {
        match name {
            ShapeName::Gaussian => SourceShape::Gaussian,
            ShapeName::SincSquared => SourceShape::SincSquared,
        }
    }
}

/// The demultiplexer pair and the frequency grid everything is computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiltersSection {
    /// 100 GHz-grid channel number of the `+` (high-wavelength) output.
    pub plus_channel: u32,
    /// Channel number of the `-` (low-wavelength) output.
    pub minus_channel: u32,
    /// Intensity-transmission FWHM of each passband, GHz.
    pub bandwidth_fwhm_ghz: f64,
    /// Super-Gaussian order of the passband (1 = plain Gaussian).
    pub shape_order: f64,
    /// Width of the simulation grid, nm.
    pub grid_span_nm: f64,
    /// Number of grid points.
    pub grid_points: usize,
}

impl Default for FiltersSection {
    fn default() -> Self {
        Self {
            plus_channel: 46,
            minus_channel: 47,
            bandwidth_fwhm_ghz: 62.0,
            shape_order: 2.0,
            grid_span_nm: 6.0,
            grid_points: 4096,
        }
    }
}

/// The pair state entering the analyzers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateSection {
    /// Phase-shifter setting on the `|HV⟩`/`|VH⟩` superposition, rad
    /// (0 = symmetric, π = antisymmetric).
    pub phase_rad: f64,
    /// Common fiber delay on the `+` channel, ps.
    pub channel_delay_ps: f64,
}

impl Default for StateSection {
    fn default() -> Self {
        Self {
            phase_rad: 0.0,
            channel_delay_ps: 0.0,
        }
    }
}

/// Delay-scan grid and apparatus contrast for the interference scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub start_ps: f64,
    pub stop_ps: f64,
    pub points: usize,
    /// Contrast factor for unmodeled imperfections, 0..=1.
    pub device_visibility: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        let range = DelayScanRange::default();
        Self {
            start_ps: range.start_ps,
            stop_ps: range.stop_ps,
            points: range.n_points,
            device_visibility: 1.0,
        }
    }
}

/// Phase-shifter sweep for the `phase_scan` scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSection {
    /// Birefringent delay held during the sweep, ps.
    pub tau_ps: f64,
    pub start_rad: f64,
    pub stop_rad: f64,
    pub points: usize,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            tau_ps: 0.0,
            start_rad: 0.0,
            stop_rad: 2.0 * std::f64::consts::PI,
            points: 73,
        }
    }
}

/// Polarization-analysis settings for the `bell_fringe` and `chsh`
/// scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BellSection {
    /// Alice's four analyzer angles, degrees.
    pub alice_analyzers_deg: [f64; 4],
    /// Bob's half-wave-plate grid.
    pub bob_start_deg: f64,
    pub bob_step_deg: f64,
    pub bob_points: usize,
    /// Fringe contrast of the apparatus, 0..=1.
    pub visibility_factor: f64,
    /// Correlation-sum analysis angles, degrees.
    pub chsh_a_deg: f64,
    pub chsh_a_prime_deg: f64,
    pub chsh_b_deg: f64,
    pub chsh_b_prime_deg: f64,
}

impl Default for BellSection {
    fn default() -> Self {
        let chsh = ChshAngles::default();
        Self {
            alice_analyzers_deg: [0.0, 90.0, 45.0, -45.0],
            bob_start_deg: 0.0,
            bob_step_deg: 2.5,
            bob_points: 73,
            visibility_factor: 1.0,
            chsh_a_deg: chsh.a_deg,
            chsh_a_prime_deg: chsh.a_prime_deg,
            chsh_b_deg: chsh.b_deg,
            chsh_b_prime_deg: chsh.b_prime_deg,
        }
    }
}

/// Inputs of the `budget` scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    /// Source brightness, pairs per second per mW per GHz.
    pub brightness_pairs_per_s_mw_ghz: f64,
    /// Pump power coupled into the source, mW.
    pub pump_power_mw: f64,
    /// Collected bandwidth, GHz.
    pub collection_bandwidth_ghz: f64,
    /// Observed coincidence rate the budget is compared against, per second.
    pub reference_rate_per_s: f64,
}

impl Default for BudgetSection {
    fn default() -> Self {
        Self {
            brightness_pairs_per_s_mw_ghz: 2.0e4,
            pump_power_mw: 2.5,
            collection_bandwidth_ghz: 100.0,
            reference_rate_per_s: 1100.0,
        }
    }
}

/// One detector of the counting chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    /// `free_running` or `gated`.
    pub mode: ModeName,
    /// Detection efficiency, 0..=1.
    pub efficiency: f64,
    /// Dark events per nanosecond (per open nanosecond when gated).
    pub dark_rate_per_ns: f64,
    /// Free-form description carried into reports.
    pub label: String,
}

/// Serializable name for the detector mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    FreeRunning,
    Gated,
}

impl DetectorSection {
    fn to_params(&self) -> DetectorParams {
        DetectorParams {
            mode: match self.mode {
                ModeName::FreeRunning => DetectorMode::FreeRunning,
                ModeName::Gated => DetectorMode::Gated,
            },
            efficiency: self.efficiency,
            dark_rate_per_ns: self.dark_rate_per_ns,
            label: self.label.clone(),
        }
    }

    /// Section mirroring a core detector description.
    pub fn from_params(params: &DetectorParams) -> Self {
        Self {
            mode: match params.mode {
                DetectorMode::FreeRunning => ModeName::FreeRunning,
                DetectorMode::Gated => ModeName::Gated,
            },
            efficiency: params.efficiency,
            dark_rate_per_ns: params.dark_rate_per_ns,
            label: params.label.clone(),
        }
    }
}

/// The counting chain. The section is optional: leaving it out runs the
/// scenario noiselessly on ideal probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingSection {
    /// Photon pairs per second entering the two analysis arms.
    pub pair_rate: f64,
    /// Passive transmission of the `+` and `-` arms.
    pub link_transmission: [f64; 2],
    /// Coincidence window, ns.
    #[serde(default = "default_window_ns")]
    pub coincidence_window_ns: f64,
    /// Integration time per scan point, s.
    #[serde(default = "default_integration_s")]
    pub integration_time_s: f64,
    pub detector_plus: DetectorSection,
    pub detector_minus: DetectorSection,
}

fn default_window_ns() -> f64 {
    1.0
}

fn default_integration_s() -> f64 {
    1.0
}

impl CountingSection {
    pub fn to_counting(&self) -> CountingConfig {
        CountingConfig {
            pair_rate: self.pair_rate,
            link_transmission: self.link_transmission,
            detectors: [self.detector_plus.to_params(), self.detector_minus.to_params()],
            coincidence_window_ns: self.coincidence_window_ns,
            integration_time_s: self.integration_time_s,
        }
    }
}

/// A full experiment description. Scalar fields first, then one table per
/// bench stage; every scenario reads only the sections it needs, but all of
/// them are validated and all are written back out when serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Seed for the Poisson draws; required whenever a sampling scenario
    /// has a counting chain. The `--seed` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Version of the tool that wrote this file (set in run manifests,
    /// ignored on input so a manifest can be re-run as a config).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_version: Option<String>,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub filters: FiltersSection,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub phase: PhaseSection,
    #[serde(default)]
    pub bell: BellSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counting: Option<CountingSection>,
}

impl ExperimentConfig {
    /// Minimal config for `scenario` with every knob at its default.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: None,
            tool_version: None,
            source: SourceSection::default(),
            filters: FiltersSection::default(),
            state: StateSection::default(),
            scan: ScanSection::default(),
            phase: PhaseSection::default(),
            bell: BellSection::default(),
            budget: BudgetSection::default(),
            counting: None,
        }
    }

    /// Parse a TOML string, rejecting unknown keys.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
    }

    /// Read and parse a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// Serialize with every section resolved.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Runtime(e.to_string()))
    }

    /// The simulation grid.
    pub fn build_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::around_wavelength_nm(
            self.source.degeneracy_nm,
            self.filters.grid_span_nm,
            self.filters.grid_points,
        )
        .map_err(validation)
    }

    /// Source envelopes and filter passbands, in the order
    /// (source H, source V, filter `+`, filter `-`).
    pub fn build_spectra(
        &self,
    ) -> Result<(SpectralProfile, SpectralProfile, SpectralProfile, SpectralProfile)> {
        let grid = self.build_grid()?;
        let shape = SourceShape::from(self.source.shape);
        let source_h = make_source_spectrum_shaped(
            Polarization::H,
            self.source.degeneracy_nm,
            self.source.fwhm_nm,
            shape,
            &grid,
        )
        .map_err(validation)?;
        let source_v = make_source_spectrum_shaped(
            Polarization::V,
            self.source.degeneracy_nm,
            self.source.fwhm_nm,
            shape,
            &grid,
        )
        .map_err(validation)?;
        let (spec_plus, spec_minus) = self.filter_specs();
        validate_filter_pair(&spec_plus, &spec_minus).map_err(validation)?;
        let filter_plus = make_dwdm_filter(&spec_plus, &grid).map_err(validation)?;
        let filter_minus = make_dwdm_filter(&spec_minus, &grid).map_err(validation)?;
        Ok((source_h, source_v, filter_plus, filter_minus))
    }

    /// The two demultiplexer passband descriptions.
    pub fn filter_specs(&self) -> (FilterSpec, FilterSpec) {
        let mut plus = FilterSpec::itu(self.filters.plus_channel, BandRole::HighWavelength);
        let mut minus = FilterSpec::itu(self.filters.minus_channel, BandRole::LowWavelength);
        for spec in [&mut plus, &mut minus] {
            spec.bandwidth_fwhm_ghz = self.filters.bandwidth_fwhm_ghz;
            spec.shape_order = self.filters.shape_order;
        }
        (plus, minus)
    }

    /// The four filtered spectra feeding the interference kernel.
    pub fn build_profiles(&self) -> Result<KernelProfiles> {
        let (source_h, source_v, filter_plus, filter_minus) = self.build_spectra()?;
        KernelProfiles::from_source_and_filters(
            &source_h,
            &source_v,
            &filter_plus,
            &filter_minus,
        )
        .map_err(validation)
    }

    /// The pair state with all configured elements applied: phase shifter,
    /// waveguide walk-off, compensation fiber, channel delay.
    pub fn build_state(&self) -> Result<BiphotonState> {
        let elements = [
            OpticalElement::SbPhase {
                phase_rad: self.state.phase_rad,
            },
            OpticalElement::BirefringentDelay {
                delta_ps: self.source.waveguide_walkoff_ps,
            },
            OpticalElement::BirefringentDelay {
                delta_ps: -self.source.pmf_dgd_ps_per_m * self.source.pmf_length_m,
            },
            OpticalElement::ChannelDelay {
                delta_ps: self.state.channel_delay_ps,
            },
        ];
        apply_sequence(&BiphotonState::psi_plus(), &elements).map_err(validation)
    }

    /// The delay-scan grid.
    pub fn build_range(&self) -> DelayScanRange {
        DelayScanRange {
            start_ps: self.scan.start_ps,
            stop_ps: self.scan.stop_ps,
            n_points: self.scan.points,
        }
    }

    /// The counting chain, if one is configured.
    pub fn build_counting(&self) -> Option<CountingConfig> {
        self.counting.as_ref().map(CountingSection::to_counting)
    }

    /// The correlation-sum angles.
    pub fn chsh_angles(&self) -> ChshAngles {
        ChshAngles {
            a_deg: self.bell.chsh_a_deg,
            a_prime_deg: self.bell.chsh_a_prime_deg,
            b_deg: self.bell.chsh_b_deg,
            b_prime_deg: self.bell.chsh_b_prime_deg,
        }
    }

    /// Check everything the configured scenario will touch, without running
    /// it. Validation is total: a config that passes cannot reach a
    /// precondition failure inside the simulation modules.
    pub fn validate(&self) -> Result<()> {
        // Sections every scenario reads.
        self.build_spectra()?;
        self.build_state()?;
        if let Some(counting) = self.build_counting() {
            counting.validate().map_err(validation)?;
        }
        if self.scenario.samples() && self.counting.is_some() && self.seed.is_none() {
            return Err(CliError::Validation(
                "a counting chain is configured but no seed is set; \
                 add `seed = N` or pass --seed"
                    .into(),
            ));
        }

        match self.scenario {
            Scenario::Spectrum => {}
            Scenario::HomScan => self.validate_scan()?,
            Scenario::PhaseScan => self.validate_phase()?,
            Scenario::BellFringe | Scenario::Chsh => self.validate_bell()?,
            Scenario::Budget => self.validate_budget()?,
        }
        Ok(())
    }

    // Mirrors the scan engine's range checks so validation stays free of
    // side effects and kernel evaluations.
    fn validate_scan(&self) -> Result<()> {
        let scan = &self.scan;
        if !(scan.start_ps.is_finite() && scan.stop_ps.is_finite()) {
            return Err(CliError::Validation("scan range must be finite".into()));
        }
        if scan.stop_ps <= scan.start_ps {
            return Err(CliError::Validation(format!(
                "scan range must ascend, got [{}, {}]",
                scan.start_ps, scan.stop_ps
            )));
        }
        if scan.points < 5 {
            return Err(CliError::Validation(format!(
                "scan needs at least 5 points, got {}",
                scan.points
            )));
        }
        if !(0.0..=1.0).contains(&scan.device_visibility) {
            return Err(CliError::Validation(format!(
                "device visibility must be in [0, 1], got {}",
                scan.device_visibility
            )));
        }
        Ok(())
    }

    fn validate_phase(&self) -> Result<()> {
        self.validate_scan()?;
        let phase = &self.phase;
        if !(phase.tau_ps.is_finite()
            && phase.start_rad.is_finite()
            && phase.stop_rad.is_finite())
        {
            return Err(CliError::Validation("phase sweep must be finite".into()));
        }
        if phase.stop_rad <= phase.start_rad {
            return Err(CliError::Validation(format!(
                "phase sweep must ascend, got [{}, {}]",
                phase.start_rad, phase.stop_rad
            )));
        }
        if phase.points < 5 {
            return Err(CliError::Validation(format!(
                "phase sweep needs at least 5 points, got {}",
                phase.points
            )));
        }
        Ok(())
    }

    fn validate_bell(&self) -> Result<()> {
        let bell = &self.bell;
        for angle in bell
            .alice_analyzers_deg
            .iter()
            .chain([&bell.bob_start_deg, &bell.bob_step_deg])
            .chain([
                &bell.chsh_a_deg,
                &bell.chsh_a_prime_deg,
                &bell.chsh_b_deg,
                &bell.chsh_b_prime_deg,
            ])
        {
            if !angle.is_finite() {
                return Err(CliError::Validation("analysis angles must be finite".into()));
            }
        }
        if bell.bob_points < 5 {
            return Err(CliError::Validation(format!(
                "Bob's grid needs at least 5 settings, got {}",
                bell.bob_points
            )));
        }
        if !(bell.bob_step_deg > 0.0) {
            return Err(CliError::Validation("Bob's grid step must be positive".into()));
        }
        let span = bell.bob_step_deg * (bell.bob_points - 1) as f64;
        if span < 90.0 {
            return Err(CliError::Validation(format!(
                "Bob's grid spans {span}° of plate rotation; a full fringe \
                 period (90°) is required"
            )));
        }
        if !(0.0..=1.0).contains(&bell.visibility_factor) {
            return Err(CliError::Validation(format!(
                "visibility factor must be in [0, 1], got {}",
                bell.visibility_factor
            )));
        }
        // Each correlation reads two fringes: Alice at the analysis angle
        // and at its complement. Make sure both were measured.
        let covered = |target: f64| {
            bell.alice_analyzers_deg.iter().any(|&a| {
                let d = (a - target).rem_euclid(180.0);
                d.abs() < 1e-9 || (d - 180.0).abs() < 1e-9
            })
        };
        for alice in [bell.chsh_a_deg, bell.chsh_a_prime_deg] {
            for target in [alice, alice + 90.0] {
                if !covered(target) {
                    return Err(CliError::Validation(format!(
                        "correlation angles need a fringe with Alice at {target}° \
                         (modulo 180°); add it to alice_analyzers_deg"
                    )));
                }
            }
        }
        Ok(())
    }

    fn validate_budget(&self) -> Result<()> {
        let budget = &self.budget;
        for (name, value) in [
            ("brightness_pairs_per_s_mw_ghz", budget.brightness_pairs_per_s_mw_ghz),
            ("pump_power_mw", budget.pump_power_mw),
            ("collection_bandwidth_ghz", budget.collection_bandwidth_ghz),
            ("reference_rate_per_s", budget.reference_rate_per_s),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(CliError::Validation(format!(
                    "budget {name} must be positive, got {value}"
                )));
            }
        }
        if self.counting.is_none() {
            return Err(CliError::Validation(
                "the budget scenario needs a [counting] section for the loss chain"
                    .into(),
            ));
        }
        Ok(())
    }
}

fn validation(e: biphoton_core::CoreError) -> CliError {
    CliError::Validation(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config = ExperimentConfig::from_toml_str("scenario = \"hom_scan\"").unwrap();
        assert_eq!(config.scenario, Scenario::HomScan);
        assert_eq!(config.source.degeneracy_nm, 1540.2);
        assert_eq!(config.filters.plus_channel, 46);
        assert_eq!(config.scan.points, 501);
        assert!(config.counting.is_none());
        config.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        for text in [
            "scenario = \"hom_scan\"\nbanana = 1",
            "scenario = \"hom_scan\"\n[source]\nfwmh_nm = 0.85",
            "scenario = \"hom_scan\"\n[scan]\nstep_ps = 0.1",
            "scenario = \"hom_scan\"\n[bell]\nbob_stop_deg = 180.0",
        ] {
            let err = ExperimentConfig::from_toml_str(text).unwrap_err();
            assert_eq!(err.exit_code(), 1, "accepted: {text}");
        }
    }

    #[test]
    fn serialized_config_round_trips() {
        let mut config = ExperimentConfig::new(Scenario::Chsh);
        config.seed = Some(7);
        config.tool_version = Some("0.1.0".into());
        config.counting = Some(CountingSection {
            pair_rate: 2.2e5,
            link_transmission: [0.5, 0.5],
            coincidence_window_ns: 20.0,
            integration_time_s: 10.0,
            detector_plus: DetectorSection::from_params(&DetectorParams::free_running_apd()),
            detector_minus: DetectorSection::from_params(&DetectorParams::free_running_apd()),
        });
        let text = config.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn sampling_scenarios_demand_a_seed_with_counting() {
        let mut config = ExperimentConfig::new(Scenario::HomScan);
        config.counting = Some(CountingSection {
            pair_rate: 8.0e4,
            link_transmission: [0.5, 0.5],
            coincidence_window_ns: 20.0,
            integration_time_s: 1.0,
            detector_plus: DetectorSection::from_params(&DetectorParams::free_running_apd()),
            detector_minus: DetectorSection::from_params(&DetectorParams::gated_apd()),
        });
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
        config.seed = Some(1);
        config.validate().unwrap();
    }

    #[test]
    fn degenerate_scan_ranges_fail_validation() {
        let mut config = ExperimentConfig::new(Scenario::HomScan);
        config.scan.stop_ps = config.scan.start_ps;
        assert_eq!(config.validate().unwrap_err().exit_code(), 1);

        let mut config = ExperimentConfig::new(Scenario::HomScan);
        config.scan.points = 0;
        assert_eq!(config.validate().unwrap_err().exit_code(), 1);
    }

    #[test]
    fn correlation_angles_must_be_covered_by_alice() {
        let mut config = ExperimentConfig::new(Scenario::Chsh);
        config.bell.chsh_a_deg = 30.0;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("Alice"), "{err}");
    }

    #[test]
    fn detector_modes_and_shapes_use_snake_case_names() {
        let text = r#"
scenario = "bell_fringe"
seed = 3

[source]
shape = "sinc_squared"

[counting]
pair_rate = 1000.0
link_transmission = [0.5, 0.5]

[counting.detector_plus]
mode = "free_running"
efficiency = 0.2
dark_rate_per_ns = 1e-6
label = "free-running APD"

[counting.detector_minus]
mode = "gated"
efficiency = 0.25
dark_rate_per_ns = 1e-5
label = "gated APD"
"#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(config.source.shape, ShapeName::SincSquared);
        let counting = config.build_counting().unwrap();
        assert_eq!(counting.detectors[0].mode, DetectorMode::FreeRunning);
        assert_eq!(counting.detectors[1].mode, DetectorMode::Gated);
        // The optional chain fields fall back to their defaults.
        assert_eq!(counting.coincidence_window_ns, 1.0);
        assert_eq!(counting.integration_time_s, 1.0);
    }

    #[test]
    fn budget_scenario_requires_a_counting_section() {
        let config = ExperimentConfig::new(Scenario::Budget);
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("counting"), "{err}");
    }
}
