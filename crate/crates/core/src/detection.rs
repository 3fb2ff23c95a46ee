//! Detector models, expected count rates, and Poisson count sampling.
//!
//! Two photons leave the demultiplexer on separate fibers and end on one
//! detector each. The model tracks, per arm, the passive link transmission
//! and a detector with a quantum efficiency and a dark-count rate; telecom
//! avalanche photodiodes are available free-running or gated (opened only on
//! a trigger from the partner arm, which suppresses dark counts by the duty
//! cycle), and superconducting detectors are free-running with darks several
//! orders of magnitude lower.
//!
//! Singles are referenced to the full photon flux in each arm — monitor
//! counts before polarization analysis — while the joint analyzer projection
//! enters only the coincidence probability. Accidental coincidences follow
//! the usual product of uncorrelated rates over the coincidence window, with
//! gated detectors contributing the rate they show *while open*.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{CoreError, Result};
use crate::scan::{fit_scan, FitModel, ScanPoint, ScanResult};

/// Readout scheme of one detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorMode {
    /// Armed continuously.
    FreeRunning,
    /// Opened for one coincidence window per trigger from the partner arm.
    /// At most one detector of a pair can be gated.
    Gated,
}

/// Efficiency and noise figures of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorParams {
    pub mode: DetectorMode,
    /// Photon detection efficiency, 0..=1.
    pub efficiency: f64,
    /// Dark-count probability per nanosecond of *active* time.
    pub dark_rate_per_ns: f64,
    /// Human-readable tag carried into reports, e.g. `free-running APD`.
    pub label: String,
}

impl DetectorParams {
    /// Telecom avalanche photodiode in free-running mode.
    pub fn free_running_apd() -> Self {
        Self {
            mode: DetectorMode::FreeRunning,
            efficiency: 0.20,
            dark_rate_per_ns: 1e-6,
            label: "free-running APD".into(),
        }
    }

    /// Telecom avalanche photodiode gated by the partner arm. Gating allows
    /// a higher bias (more efficiency) at a higher dark rate per open
    /// nanosecond, which the short duty cycle more than repays.
    pub fn gated_apd() -> Self {
        Self {
            mode: DetectorMode::Gated,
            efficiency: 0.25,
            dark_rate_per_ns: 1e-5,
            label: "gated APD".into(),
        }
    }

    /// Superconducting nanowire detector: free-running with darks reduced by
    /// three orders of magnitude.
    pub fn superconducting() -> Self {
        Self {
            mode: DetectorMode::FreeRunning,
            efficiency: 0.20,
            dark_rate_per_ns: 1e-9,
            label: "superconducting nanowire".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(CoreError::InvalidParameter(format!(
                "detector efficiency must be in [0, 1], got {}",
                self.efficiency
            )));
        }
        if !(self.dark_rate_per_ns >= 0.0 && self.dark_rate_per_ns.is_finite()) {
            return Err(CoreError::InvalidParameter(format!(
                "dark rate must be non-negative, got {} per ns",
                self.dark_rate_per_ns
            )));
        }
        Ok(())
    }
}

/// Everything needed to turn a coincidence probability into count rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingConfig {
    /// Photon pairs per second entering the two analysis arms.
    pub pair_rate: f64,
    /// Passive transmission of each arm (fibers, filters, connectors),
    /// excluding the detector efficiency. Order: `+` arm, `-` arm.
    pub link_transmission: [f64; 2],
    /// The two detectors, in the same arm order.
    pub detectors: [DetectorParams; 2],
    /// Coincidence window, ns.
    pub coincidence_window_ns: f64,
    /// Integration time per scan point, s.
    pub integration_time_s: f64,
}

impl CountingConfig {
    /// Validate every field; called by all rate computations.
    pub fn validate(&self) -> Result<()> {
        if !(self.pair_rate.is_finite() && self.pair_rate >= 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "pair rate must be non-negative, got {}",
                self.pair_rate
            )));
        }
        for t in self.link_transmission {
            if !(0.0..=1.0).contains(&t) {
                return Err(CoreError::InvalidParameter(format!(
                    "link transmission must be in [0, 1], got {t}"
                )));
            }
        }
        for d in &self.detectors {
            d.validate()?;
        }
        if self.detectors.iter().all(|d| d.mode == DetectorMode::Gated) {
            return Err(CoreError::InvalidParameter(
                "both detectors gated: nothing is left to produce the trigger".into(),
            ));
        }
        if !(self.coincidence_window_ns > 0.0 && self.coincidence_window_ns.is_finite()) {
            return Err(CoreError::InvalidParameter(format!(
                "coincidence window must be positive, got {} ns",
                self.coincidence_window_ns
            )));
        }
        if !(self.integration_time_s > 0.0 && self.integration_time_s.is_finite()) {
            return Err(CoreError::InvalidParameter(format!(
                "integration time must be positive, got {} s",
                self.integration_time_s
            )));
        }
        Ok(())
    }

    /// Detected-pair rate with both analyzers wide open: the scale every
    /// coincidence probability multiplies.
    pub fn detected_pair_rate(&self) -> f64 {
        self.pair_rate
            * self.link_transmission[0]
            * self.link_transmission[1]
            * self.detectors[0].efficiency
            * self.detectors[1].efficiency
    }
}

/// Expected rates for one scan point, all in events per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedRates {
    /// Observed singles per arm, darks included.
    pub singles: [f64; 2],
    /// Coincidences from actual pairs: `detected_pair_rate × probability`.
    pub true_coincidences: f64,
    /// Accidental coincidences from uncorrelated events.
    pub accidental_coincidences: f64,
}

impl ExpectedRates {
    /// Everything the coincidence counter registers.
    pub fn total_coincidences(&self) -> f64 {
        self.true_coincidences + self.accidental_coincidences
    }
}

/// Expected singles, true-coincidence, and accidental rates for a joint
/// detection probability `probability` (the analyzer projection).
pub fn expected_rates(config: &CountingConfig, probability: f64) -> Result<ExpectedRates> {
    config.validate()?;
    if !(0.0..=1.0 + 1e-12).contains(&probability) {
        return Err(CoreError::InvalidParameter(format!(
            "coincidence probability must be in [0, 1], got {probability}"
        )));
    }
    let window_s = self_window_s(config);
    // Photon detection rate per arm, before darks and before gating.
    let real: [f64; 2] = [0, 1].map(|i| {
        config.pair_rate * config.link_transmission[i] * config.detectors[i].efficiency
    });
    // Rate each detector shows while it is active. For accidental purposes a
    // gated detector contributes its open-time rate, not its duty-cycled
    // average: accidentals only happen while the gate is open, and the gate
    // is open exactly one window per trigger.
    let active_rate: [f64; 2] =
        [0, 1].map(|i| real[i] + config.detectors[i].dark_rate_per_ns * 1e9);

    let mut singles = [0.0; 2];
    for i in 0..2 {
        let j = 1 - i;
        singles[i] = match config.detectors[i].mode {
            DetectorMode::FreeRunning => active_rate[i],
            DetectorMode::Gated => {
                // The partner (free-running) arm triggers the gate; real
                // photons register only when the partner saw the same pair,
                // and darks only accumulate during open gates.
                let trigger_rate =
                    real[j] + config.detectors[j].dark_rate_per_ns * 1e9;
                let pair_conditional =
                    real[i] * config.link_transmission[j] * config.detectors[j].efficiency;
                let dark_in_gates = trigger_rate
                    * config.coincidence_window_ns
                    * config.detectors[i].dark_rate_per_ns;
                pair_conditional + dark_in_gates
            }
        };
    }

    let true_coincidences = config.detected_pair_rate() * probability;
    let accidental_coincidences = active_rate[0] * active_rate[1] * window_s;
    Ok(ExpectedRates {
        singles,
        true_coincidences,
        accidental_coincidences,
    })
}

fn self_window_s(config: &CountingConfig) -> f64 {
    config.coincidence_window_ns * 1e-9
}

/// One category of a simulated counting record.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    /// Category name, e.g. `singles_plus`.
    pub category: String,
    /// Poisson-drawn counts over the integration time.
    pub count: u64,
}

/// Draw one Poisson count for a mean that may be zero.
pub fn draw_poisson<R: Rng>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "Poisson mean must be non-negative, got {mean}"
        )));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| CoreError::InvalidParameter(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Simulate one integration-time exposure: Poisson counts for both singles
/// channels and the coincidence channel. The three draws are independent —
/// the correlation between singles and coincidences is far below the scale
/// of anything fitted here.
pub fn simulate_counts<R: Rng>(
    config: &CountingConfig,
    probability: f64,
    rng: &mut R,
) -> Result<Vec<CountRecord>> {
    let rates = expected_rates(config, probability)?;
    let t = config.integration_time_s;
    let records = vec![
        CountRecord {
            category: "singles_plus".into(),
            count: draw_poisson(rates.singles[0] * t, rng)?,
        },
        CountRecord {
            category: "singles_minus".into(),
            count: draw_poisson(rates.singles[1] * t, rng)?,
        },
        CountRecord {
            category: "coincidences".into(),
            count: draw_poisson(rates.total_coincidences() * t, rng)?,
        },
    ];
    Ok(records)
}

/// Pairs per second from a source brightness, pump power, and collection
/// bandwidth.
pub fn brightness_to_pair_rate(
    pairs_per_s_mw_ghz: f64,
    pump_power_mw: f64,
    bandwidth_ghz: f64,
) -> Result<f64> {
    for (name, v) in [
        ("brightness", pairs_per_s_mw_ghz),
        ("pump power", pump_power_mw),
        ("bandwidth", bandwidth_ghz),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "{name} must be non-negative, got {v}"
            )));
        }
    }
    Ok(pairs_per_s_mw_ghz * pump_power_mw * bandwidth_ghz)
}

/// Remove the accidental floor from a fitted raw visibility.
///
/// A flat accidental rate lifts the baseline without touching the feature
/// amplitude, so the corrected contrast is
/// `raw × total_baseline / (total_baseline - accidentals)`, where both rates
/// are in the same units as the fitted scan. Fails when the accidentals
/// exceed the observed baseline.
pub fn net_visibility(raw: f64, total_baseline: f64, accidentals: f64) -> Result<f64> {
    if !(total_baseline > 0.0 && accidentals >= 0.0) {
        return Err(CoreError::InvalidParameter(
            "baseline must be positive and accidentals non-negative".into(),
        ));
    }
    let true_baseline = total_baseline - accidentals;
    if true_baseline <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "accidental rate {accidentals} exceeds the observed baseline {total_baseline}"
        )));
    }
    Ok(raw * total_baseline / true_baseline)
}

/// Visibility of a counted scan before and after accidental subtraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityPair {
    /// Contrast fitted from the counts as recorded.
    pub raw: f64,
    /// Contrast refitted after removing the accidental rate from each point.
    pub net: f64,
    /// Set when the subtraction drove at least one point below zero and the
    /// point was clamped; the net fit is then slightly biased upward near
    /// the clamp.
    pub clamped: bool,
}

/// Fit a scan's visibility twice: once on the recorded rates and once after
/// subtracting a flat accidental rate from every point.
///
/// `accidental_rate` must be in the scan's own rate units (events per
/// second, i.e. accidental counts over the integration time divided by that
/// time). Counts cannot go negative, so corrected points are clamped at zero
/// and the clamp is flagged. Anchored dip/peak baselines are lowered by the
/// subtracted rate so the net contrast is measured against the corrected
/// baseline; fringe fits re-estimate their mean level from the data.
pub fn raw_and_net_visibility(
    scan: &ScanResult,
    model: FitModel,
    accidental_rate: f64,
) -> Result<VisibilityPair> {
    if !(accidental_rate >= 0.0 && accidental_rate.is_finite()) {
        return Err(CoreError::InvalidParameter(format!(
            "accidental rate must be non-negative, got {accidental_rate}"
        )));
    }
    let raw = fit_scan(&scan.points, model)?.visibility;
    let mut clamped = false;
    let corrected: Vec<ScanPoint> = scan
        .points
        .iter()
        .map(|p| {
            let rate = p.rate - accidental_rate;
            if rate < 0.0 {
                clamped = true;
            }
            ScanPoint {
                rate: rate.max(0.0),
                ..*p
            }
        })
        .collect();
    let net_model = match model {
        FitModel::Dip { baseline } => FitModel::Dip {
            baseline: baseline - accidental_rate,
        },
        FitModel::Peak { baseline } => FitModel::Peak {
            baseline: baseline - accidental_rate,
        },
        FitModel::Fringe { omega } => FitModel::Fringe { omega },
    };
    let net = fit_scan(&corrected, net_model)?.visibility;
    Ok(VisibilityPair { raw, net, clamped })
}
