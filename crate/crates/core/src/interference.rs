//! Two-photon interference scans: coincidence dips, peaks, and phase fringes.
//!
//! After the demultiplexer, the pair is in a cross-polarized state of the
//! `ψ(φ)` class and the two photons travel distinct channels. Projecting
//! both onto the same diagonal analyzer erases the polarization label, so
//! the `|HV⟩` and `|VH⟩` two-photon amplitudes interfere. Their overlap as a
//! function of the birefringent (H-vs-V) delay `τ` is the spectral kernel
//! `G(τ)`; the coincidence probability of the analyzer pair is
//!
//! ```text
//! p(τ) = ½ · [1 - v · κ · Re(e^{iφ} G(τ + walkoff))]
//! ```
//!
//! with `κ = 2|a_HV||a_VH| / (|a_HV|² + |a_VH|²)` the balance of the two
//! amplitudes, `φ` their relative phase, and `v ≤ 1` an empirical contrast
//! for everything the model does not track (alignment, residual
//! distinguishability). `φ = 0` digs a dip to zero, `φ = π` raises the
//! mirror-image peak to one, and intermediate phases trade the two off —
//! the pair statistics move continuously between bosonic and fermionic
//! coalescence behavior.
//!
//! A common delay on one *channel* (both polarizations alike, e.g. a long
//! fiber before one detector) multiplies both interfering amplitudes by the
//! same spectral phase and therefore cancels from `p(τ)` identically; the
//! module keeps the parameter so the invariance can be demonstrated rather
//! than assumed.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::detection::CountingConfig;
use crate::error::{CoreError, Result};
use crate::polarization::{BiphotonState, Polarization};
use crate::scan::{FitModel, ScanCurve, ScanResult};
use crate::spectra::{filtered_profile, interference_kernel, SpectralProfile};

/// The four filtered single-photon spectra feeding the interference kernel:
/// each polarization behind each demultiplexer output.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelProfiles {
    plus_h: SpectralProfile,
    plus_v: SpectralProfile,
    minus_h: SpectralProfile,
    minus_v: SpectralProfile,
}

impl KernelProfiles {
    /// Wrap four explicit profiles (all on one grid).
    pub fn new(
        plus_h: SpectralProfile,
        plus_v: SpectralProfile,
        minus_h: SpectralProfile,
        minus_v: SpectralProfile,
    ) -> Result<Self> {
        for p in [&plus_v, &minus_h, &minus_v] {
            if p.grid() != plus_h.grid() {
                return Err(CoreError::GridMismatch(
                    "kernel profiles must share one grid".into(),
                ));
            }
        }
        Ok(Self {
            plus_h,
            plus_v,
            minus_h,
            minus_v,
        })
    }

    /// Build the four profiles from the two source envelopes and the two
    /// demultiplexer channels.
    pub fn from_source_and_filters(
        source_h: &SpectralProfile,
        source_v: &SpectralProfile,
        filter_plus: &SpectralProfile,
        filter_minus: &SpectralProfile,
    ) -> Result<Self> {
        Self::new(
            filtered_profile(source_h, filter_plus)?,
            filtered_profile(source_v, filter_plus)?,
            filtered_profile(source_h, filter_minus)?,
            filtered_profile(source_v, filter_minus)?,
        )
    }

    /// Apply a common fiber delay to the `+` channel: every spectral sample
    /// of both polarizations picks up `e^{-i 2π f τ}`.
    pub fn with_channel_delay(&self, delay_ps: f64) -> Result<Self> {
        if !delay_ps.is_finite() {
            return Err(CoreError::NonFinite("channel delay"));
        }
        let delayed = |p: &SpectralProfile| -> Result<SpectralProfile> {
            let grid = *p.grid();
            let amplitude = p
                .amplitude()
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    a * Complex64::from_polar(
                        1.0,
                        -2.0 * std::f64::consts::PI * grid.frequency(i) * delay_ps,
                    )
                })
                .collect();
            SpectralProfile::from_amplitudes(grid, amplitude)
        };
        Ok(Self {
            plus_h: delayed(&self.plus_h)?,
            plus_v: delayed(&self.plus_v)?,
            minus_h: self.minus_h.clone(),
            minus_v: self.minus_v.clone(),
        })
    }

    /// The spectral overlap kernel at birefringent delay `tau_ps`.
    pub fn kernel(&self, tau_ps: f64) -> Result<Complex64> {
        interference_kernel(&self.plus_h, &self.plus_v, &self.minus_h, &self.minus_v, tau_ps)
    }
}

/// Uniform range of birefringent delays for a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayScanRange {
    pub start_ps: f64,
    pub stop_ps: f64,
    pub n_points: usize,
}

impl Default for DelayScanRange {
    fn default() -> Self {
        // Wide enough that the two-photon coherence of flat-top-filtered
        // light (which rings out to ~20 ps) has decayed to the percent level
        // at the scan ends, at the 0.1 ps step the interference beat needs.
        Self {
            start_ps: -25.0,
            stop_ps: 25.0,
            n_points: 501,
        }
    }
}

impl DelayScanRange {
    /// The scan's control values, ascending.
    pub fn points(&self) -> Vec<f64> {
        let step = (self.stop_ps - self.start_ps) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| self.start_ps + step * i as f64)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.start_ps.is_finite() && self.stop_ps.is_finite()) {
            return Err(CoreError::NonFinite("scan range"));
        }
        if self.stop_ps <= self.start_ps {
            return Err(CoreError::InvalidParameter(format!(
                "scan range must ascend, got [{}, {}]",
                self.start_ps, self.stop_ps
            )));
        }
        if self.n_points < 5 {
            return Err(CoreError::InvalidParameter(format!(
                "scan needs at least 5 points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }
}

/// Full description of a two-photon interference measurement.
///
/// The H-vs-V walk-off and any `+`-channel fiber delay are read from the
/// state's accumulated metadata: prepare the state by applying
/// [`crate::polarization::OpticalElement::BirefringentDelay`] /
/// [`crate::polarization::OpticalElement::ChannelDelay`] (or the
/// `with_*` builders) before the scan. The scan delay adds to the walk-off,
/// so the interference feature centers at `τ = -walkoff`.
#[derive(Debug, Clone)]
pub struct HomConfig {
    /// Pair polarization state entering the analyzers, delays included.
    /// Must be of the cross-polarized `ψ(φ)` class: `|HH⟩`/`|VV⟩`
    /// components are not part of this measurement's model.
    pub state: BiphotonState,
    /// Filtered spectra driving the overlap kernel.
    pub profiles: KernelProfiles,
    /// Delay range swept by the birefringent element.
    pub range: DelayScanRange,
    /// Contrast factor for unmodeled imperfections, 0..=1.
    pub device_visibility: f64,
    /// Counting chain for noisy scans; `None` for ideal probabilities.
    pub counting: Option<CountingConfig>,
}

impl HomConfig {
    fn validate(&self) -> Result<()> {
        self.range.validate()?;
        if !(0.0..=1.0).contains(&self.device_visibility) {
            return Err(CoreError::InvalidParameter(format!(
                "device visibility must be in [0, 1], got {}",
                self.device_visibility
            )));
        }
        if !self.state.walkoff_ps().is_finite() || !self.state.channel_delay_ps().is_finite() {
            return Err(CoreError::NonFinite("state delay metadata"));
        }
        if let Some(c) = &self.counting {
            c.validate()?;
        }
        Ok(())
    }
}

/// Interference parameters extracted from a `ψ(φ)`-class state: the
/// amplitude-balance factor `κ` and relative phase `φ`.
fn state_interference_terms(state: &BiphotonState) -> Result<(f64, f64)> {
    let normalized = state.normalized()?;
    let hv = normalized.amplitude(Polarization::H, Polarization::V);
    let vh = normalized.amplitude(Polarization::V, Polarization::H);
    let hh = normalized.amplitude(Polarization::H, Polarization::H);
    let vv = normalized.amplitude(Polarization::V, Polarization::V);
    if hh.norm() > 1e-9 || vv.norm() > 1e-9 {
        return Err(CoreError::InvalidParameter(
            "delay scans are defined for cross-polarized pair states; \
             |HH⟩/|VV⟩ components found"
                .into(),
        ));
    }
    let denom = hv.norm_sqr() + vh.norm_sqr();
    if denom < 1e-12 {
        return Err(CoreError::ZeroProfile(
            "state has no |HV⟩/|VH⟩ amplitude to interfere".into(),
        ));
    }
    let kappa = 2.0 * hv.norm() * vh.norm() / denom;
    let phase = if kappa > 0.0 { (vh * hv.conj()).arg() } else { 0.0 };
    Ok((kappa, phase))
}

/// Coincidence probability of the diagonal analyzer pair at scan delay
/// `tau_ps`.
pub fn coincidence_probability(config: &HomConfig, tau_ps: f64) -> Result<f64> {
    config.validate()?;
    let (kappa, phase) = state_interference_terms(&config.state)?;
    let profiles = config.profiles.with_channel_delay(config.state.channel_delay_ps())?;
    let g = profiles.kernel(tau_ps + config.state.walkoff_ps())?;
    probability_from_kernel(g, kappa, phase, config.device_visibility)
}

fn probability_from_kernel(g: Complex64, kappa: f64, phase: f64, visibility: f64) -> Result<f64> {
    let interference = (Complex64::from_polar(1.0, phase) * g).re;
    let p = 0.5 * (1.0 - visibility * kappa * interference);
    if !p.is_finite() {
        return Err(CoreError::NonFinite("coincidence probability"));
    }
    // Rounding can push an exact zero infinitesimally negative.
    Ok(p.clamp(0.0, 1.0))
}

/// Compute the ideal delay-scan curve: one kernel evaluation per point,
/// parallelized over points. Sampling noisy realizations from the returned
/// [`ScanCurve`] is cheap.
pub fn delay_scan_curve(config: &HomConfig) -> Result<ScanCurve> {
    config.validate()?;
    let (kappa, phase) = state_interference_terms(&config.state)?;
    let profiles = config.profiles.with_channel_delay(config.state.channel_delay_ps())?;
    let controls = config.range.points();
    let probabilities = controls
        .par_iter()
        .map(|&tau| {
            let g = profiles.kernel(tau + config.state.walkoff_ps())?;
            probability_from_kernel(g, kappa, phase, config.device_visibility)
        })
        .collect::<Result<Vec<f64>>>()?;
    // Dip for phases near zero, peak for phases near π, no feature when the
    // interference term is quenched.
    let contrast = config.device_visibility * kappa * phase.cos();
    let model = if contrast.abs() < 1e-9 {
        None
    } else if contrast > 0.0 {
        Some(FitModel::Dip { baseline: 0.5 })
    } else {
        Some(FitModel::Peak { baseline: 0.5 })
    };
    Ok(ScanCurve {
        control_label: "control_ps".into(),
        controls,
        probabilities,
        model,
        counting: config.counting.clone(),
    })
}

/// Run a delay scan end to end: ideal when `seed` is `None`, one noisy
/// realization otherwise.
pub fn delay_scan(config: &HomConfig, seed: Option<u64>) -> Result<ScanResult> {
    let curve = delay_scan_curve(config)?;
    match seed {
        None => Ok(curve.ideal_result()),
        Some(s) => curve.sample(s),
    }
}

/// Compute the fringe obtained by holding the delay at `tau_ps` and sweeping
/// the phase-shifter setting over `phases_rad` on top of the state's own
/// phase. The kernel is evaluated once; the fringe is analytic in the phase.
pub fn phase_scan_curve(
    config: &HomConfig,
    tau_ps: f64,
    phases_rad: &[f64],
) -> Result<ScanCurve> {
    config.validate()?;
    if phases_rad.len() < 5 {
        return Err(CoreError::InvalidParameter(
            "phase scan needs at least 5 settings".into(),
        ));
    }
    if phases_rad.iter().any(|p| !p.is_finite()) {
        return Err(CoreError::NonFinite("phase settings"));
    }
    let (kappa, phase0) = state_interference_terms(&config.state)?;
    let profiles = config.profiles.with_channel_delay(config.state.channel_delay_ps())?;
    let g = profiles.kernel(tau_ps + config.state.walkoff_ps())?;
    let probabilities = phases_rad
        .iter()
        .map(|&phi| {
            probability_from_kernel(
                g * Complex64::from_polar(1.0, phi),
                kappa,
                phase0,
                config.device_visibility,
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScanCurve {
        control_label: "control_rad".into(),
        controls: phases_rad.to_vec(),
        probabilities,
        model: Some(FitModel::Fringe { omega: 1.0 }),
        counting: config.counting.clone(),
    })
}

/// Coincidence probability at fixed `tau_ps` for each `+`-channel fiber
/// delay in `delays_ps` — all equal by construction of the physics; the
/// function exists so that claim can be checked numerically.
pub fn channel_delay_sweep(
    config: &HomConfig,
    tau_ps: f64,
    delays_ps: &[f64],
) -> Result<Vec<f64>> {
    delays_ps
        .iter()
        .map(|&d| {
            let mut c = config.clone();
            c.state = config.state.clone().with_channel_delay_ps(d);
            coincidence_probability(&c, tau_ps)
        })
        .collect()
}

/// Fiber length (m) whose birefringent delay cancels a waveguide walk-off,
/// given the fiber's differential group delay per meter. Both arguments are
/// magnitudes; the fiber is spliced with its axes crossed relative to the
/// waveguide.
pub fn pmf_length_for_compensation(
    waveguide_walkoff_ps: f64,
    fiber_walkoff_ps_per_m: f64,
) -> Result<f64> {
    if !(waveguide_walkoff_ps.is_finite() && fiber_walkoff_ps_per_m.is_finite()) {
        return Err(CoreError::NonFinite("walk-off parameters"));
    }
    if fiber_walkoff_ps_per_m <= 0.0 {
        return Err(CoreError::InvalidParameter(
            "fiber walk-off per meter must be positive".into(),
        ));
    }
    Ok(waveguide_walkoff_ps / fiber_walkoff_ps_per_m)
}

/// Net H-vs-V delay after a waveguide with `waveguide_walkoff_ps` and a
/// crossed-axes compensation fiber of `length_m`.
pub fn net_walkoff_ps(
    waveguide_walkoff_ps: f64,
    fiber_walkoff_ps_per_m: f64,
    length_m: f64,
) -> f64 {
    waveguide_walkoff_ps - fiber_walkoff_ps_per_m * length_m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{
        make_dwdm_filter, make_source_spectrum, BandRole, FilterSpec, FrequencyGrid,
    };
    use approx::assert_abs_diff_eq;

    const DEGENERACY_NM: f64 = 1540.2;

    fn nominal_profiles() -> KernelProfiles {
        let grid = FrequencyGrid::around_wavelength_nm(DEGENERACY_NM, 6.0, 4096).unwrap();
        let h = make_source_spectrum(Polarization::H, DEGENERACY_NM, 0.85, &grid).unwrap();
        let v = make_source_spectrum(Polarization::V, DEGENERACY_NM, 0.85, &grid).unwrap();
        let plus = make_dwdm_filter(&FilterSpec::itu(46, BandRole::HighWavelength), &grid).unwrap();
        let minus = make_dwdm_filter(&FilterSpec::itu(47, BandRole::LowWavelength), &grid).unwrap();
        KernelProfiles::from_source_and_filters(&h, &v, &plus, &minus).unwrap()
    }

    fn ideal_config(walkoff_ps: f64) -> HomConfig {
        HomConfig {
            state: BiphotonState::psi_plus().with_walkoff_ps(walkoff_ps),
            profiles: nominal_profiles(),
            range: DelayScanRange::default(),
            device_visibility: 1.0,
            counting: None,
        }
    }

    #[test]
    fn symmetric_state_digs_a_full_dip_at_minus_walkoff() {
        let config = ideal_config(-0.016);
        let result = delay_scan(&config, None).unwrap();
        let fit = result.fit.expect("ideal dip must fit");
        assert_abs_diff_eq!(fit.visibility, 1.0, epsilon = 1e-4);
        // The lobe-shape fit carries a few femtoseconds of model mismatch
        // (the lobe is a beat under an envelope, not a Gaussian), far inside
        // the 0.1 ps scan step.
        assert_abs_diff_eq!(fit.center, 0.016, epsilon = 5e-3);
        // The bottom itself reaches zero.
        let p0 = coincidence_probability(&config, 0.016).unwrap();
        assert!(p0 < 1e-9, "dip bottom at {p0}");
    }

    #[test]
    fn antisymmetric_state_mirrors_the_dip_into_a_peak() {
        let mut config = ideal_config(0.0);
        config.state = BiphotonState::psi_minus();
        let result = delay_scan(&config, None).unwrap();
        let fit = result.fit.expect("ideal peak must fit");
        assert_abs_diff_eq!(fit.visibility, 1.0, epsilon = 1e-4);
        let p0 = coincidence_probability(&config, 0.0).unwrap();
        assert_abs_diff_eq!(p0, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn symmetric_and_antisymmetric_scans_sum_to_one() {
        let dip = delay_scan(&ideal_config(0.0), None).unwrap();
        let mut peak_config = ideal_config(0.0);
        peak_config.state = BiphotonState::psi_minus();
        let peak = delay_scan(&peak_config, None).unwrap();
        for (d, p) in dip.points.iter().zip(&peak.points) {
            assert_abs_diff_eq!(d.rate + p.rate, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn baseline_settles_to_one_half_far_from_the_feature() {
        let config = ideal_config(0.0);
        for tau in [config.range.start_ps, config.range.stop_ps] {
            let p = coincidence_probability(&config, tau).unwrap();
            assert_abs_diff_eq!(p, 0.5, epsilon = 0.02);
        }
    }

    #[test]
    fn device_visibility_scales_the_contrast() {
        let mut config = ideal_config(0.0);
        config.device_visibility = 0.94;
        let p0 = coincidence_probability(&config, 0.0).unwrap();
        assert_abs_diff_eq!(p0, 0.5 * (1.0 - 0.94), epsilon = 1e-9);
    }

    #[test]
    fn quarter_phase_flattens_the_scan() {
        let mut config = ideal_config(0.0);
        config.state = BiphotonState::psi_phi(std::f64::consts::FRAC_PI_2);
        let curve = delay_scan_curve(&config).unwrap();
        assert!(curve.model.is_none(), "quadrature phase should have no dip/peak model");
        // Not exactly flat — the kernel's imaginary part still moves — but
        // symmetric about ½ at the feature center.
        let p = coincidence_probability(&config, 0.0).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn dip_center_tracks_added_birefringent_delay_linearly() {
        use crate::polarization::{apply_element, OpticalElement};
        // Prepare the state through the element path (as a real setup
        // would) rather than poking the metadata directly.
        let mut centers = Vec::new();
        let deltas = [-5.0, -2.5, 0.0, 2.5, 5.0];
        for &d in &deltas {
            let mut config = ideal_config(0.0);
            config.state = apply_element(
                &config.state,
                &OpticalElement::BirefringentDelay { delta_ps: d },
            )
            .unwrap();
            let result = delay_scan(&config, None).unwrap();
            centers.push(result.fit.unwrap().center);
        }
        // Least-squares slope of center vs added delay. The scan delay and
        // the element delay enter the kernel as a sum, so the feature moves
        // opposite to the added delay: slope -1.
        let n = deltas.len() as f64;
        let mx = deltas.iter().sum::<f64>() / n;
        let my = centers.iter().sum::<f64>() / n;
        let sxy: f64 = deltas.iter().zip(&centers).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = deltas.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        assert_abs_diff_eq!(slope, -1.0, epsilon = 0.01);
    }

    #[test]
    fn baseline_is_exact_a_hundred_coherence_times_out() {
        // The interference lobe is ~4 ps wide; a hundred times beyond it the
        // kernel has no support left and only the ½ baseline remains.
        let config = ideal_config(0.0);
        for tau in [-400.0, 400.0] {
            let p = coincidence_probability(&config, tau).unwrap();
            assert_abs_diff_eq!(p, 0.5, epsilon = 1e-3);
        }
    }

    #[test]
    fn channel_delay_leaves_the_probability_unchanged() {
        let config = ideal_config(0.0);
        let probabilities =
            channel_delay_sweep(&config, 1.3, &[0.0, 5.0, 470.0, 3200.0, 22_000.0]).unwrap();
        let spread = probabilities
            .iter()
            .fold(f64::MIN, |a, &b| a.max(b))
            - probabilities.iter().fold(f64::MAX, |a, &b| a.min(b));
        assert!(spread.abs() < 1e-12, "channel-delay spread {spread}");
    }

    #[test]
    fn hh_or_vv_components_are_rejected() {
        let mut config = ideal_config(0.0);
        config.state = BiphotonState::from_amplitudes([
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
        ])
        .unwrap();
        assert!(delay_scan(&config, None).is_err());
    }

    #[test]
    fn phase_scan_produces_a_unit_visibility_fringe() {
        let config = ideal_config(-0.016);
        let phases: Vec<f64> = (0..64)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / 64.0)
            .collect();
        // Hold the delay at the dip center so |G| = 1.
        let curve = phase_scan_curve(&config, 0.016, &phases).unwrap();
        let result = curve.ideal_result();
        let fit = result.fit.expect("fringe must fit");
        assert_abs_diff_eq!(fit.visibility, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.baseline, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn compensation_arithmetic_matches_hand_values() {
        // 4.40 ps of waveguide walk-off against 1.38 ps/m of fiber: 3.19 m
        // cancels it; the 3.2 m actually spliced leaves -0.016 ps.
        let length = pmf_length_for_compensation(4.40, 1.38).unwrap();
        assert_abs_diff_eq!(length, 3.1884, epsilon = 1e-3);
        let residual = net_walkoff_ps(4.40, 1.38, 3.2);
        assert_abs_diff_eq!(residual, -0.016, epsilon = 1e-12);
        assert!(residual.abs() < 0.05);
    }

    #[test]
    fn sampled_scan_is_reproducible() {
        use crate::detection::DetectorParams;
        let mut config = ideal_config(-0.016);
        config.device_visibility = 0.94;
        config.counting = Some(CountingConfig {
            pair_rate: 8.0e4,
            link_transmission: [0.5, 0.5],
            detectors: [
                DetectorParams::free_running_apd(),
                DetectorParams::gated_apd(),
            ],
            coincidence_window_ns: 20.0,
            integration_time_s: 1.0,
        });
        let a = delay_scan(&config, Some(7)).unwrap();
        let b = delay_scan(&config, Some(7)).unwrap();
        assert_eq!(a, b);
        let fit = a.fit.expect("noisy dip fits");
        // One realization of the count-rate dip: contrast near 0.93 once
        // accidentals take their bite out of 0.94.
        assert!((fit.visibility - 0.933).abs() < 0.08, "raw visibility {}", fit.visibility);
    }
}
