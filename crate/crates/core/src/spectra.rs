//! Emission spectra, demultiplexing filters, and the spectral overlap kernel.
//!
//! The source emits photon pairs whose frequencies are strictly anticorrelated
//! about half the (monochromatic) pump frequency: if one photon sits at a
//! detuning `Δ` from the degeneracy frequency, its partner sits at `-Δ`. All
//! spectral quantities therefore live on a single one-dimensional
//! [`FrequencyGrid`] whose center is the degeneracy frequency; the partner of
//! grid point `i` is the mirrored point `n-1-i`.
//!
//! Amplitudes are stored per grid point. Source envelopes are normalized so
//! the intensity `|a|²` integrates to one (trapezoidal rule); filter profiles
//! are *amplitude transmissions* in `[0, 1]` peaking at 1 on the channel
//! center. Frequencies are in THz, widths in GHz where noted, wavelengths in
//! nm, delays in ps.

use num_complex::Complex64;

use crate::constants::{
    channel_frequency_thz, frequency_to_wavelength, frequency_width_to_wavelength,
    wavelength_to_frequency, wavelength_width_to_frequency,
};
use crate::error::{CoreError, Result};
use crate::polarization::Polarization;

/// Minimum number of grid points across any requested spectral feature
/// (source FWHM or filter FWHM). Coarser grids are rejected.
pub const MIN_POINTS_PER_FEATURE: usize = 8;

/// Uniform frequency grid, centered on the pair-degeneracy frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    center_thz: f64,
    span_thz: f64,
    n_points: usize,
}

impl FrequencyGrid {
    /// Build a grid from a center frequency (THz), full span (THz), and point
    /// count. The span must be positive and smaller than twice the center
    /// (all frequencies positive); at least two points are required.
    pub fn new(center_thz: f64, span_thz: f64, n_points: usize) -> Result<Self> {
        if !center_thz.is_finite() || !span_thz.is_finite() {
            return Err(CoreError::NonFinite("frequency grid bounds"));
        }
        if span_thz <= 0.0 {
            return Err(CoreError::InvalidGrid(format!(
                "span must be positive, got {span_thz} THz"
            )));
        }
        if n_points < 2 {
            return Err(CoreError::InvalidGrid(format!(
                "need at least 2 points, got {n_points}"
            )));
        }
        if center_thz - span_thz / 2.0 <= 0.0 {
            return Err(CoreError::InvalidGrid(format!(
                "grid reaches non-positive frequencies (center {center_thz} THz, span {span_thz} THz)"
            )));
        }
        Ok(Self {
            center_thz,
            span_thz,
            n_points,
        })
    }

    /// Build a grid centered on a vacuum wavelength, with the span given as a
    /// wavelength width (nm) converted to frequency at the center.
    pub fn around_wavelength_nm(center_nm: f64, span_nm: f64, n_points: usize) -> Result<Self> {
        let center = wavelength_to_frequency(center_nm);
        let span = wavelength_width_to_frequency(span_nm, center_nm);
        Self::new(center, span, n_points)
    }

    /// Degeneracy (center) frequency in THz. Frequency anticorrelation mirrors
    /// grid points about this value.
    pub fn center_thz(&self) -> f64 {
        self.center_thz
    }

    /// Full span in THz.
    pub fn span_thz(&self) -> f64 {
        self.span_thz
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.n_points
    }

    /// True if the grid is degenerate (never constructed, kept for API hygiene).
    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Spacing between adjacent points in THz.
    pub fn step_thz(&self) -> f64 {
        self.span_thz / (self.n_points - 1) as f64
    }

    /// Frequency of point `i` in THz.
    pub fn frequency(&self, i: usize) -> f64 {
        self.center_thz - self.span_thz / 2.0 + self.step_thz() * i as f64
    }

    /// All grid frequencies in THz, ascending.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.frequency(i)).collect()
    }

    /// Index of the point mirrored about the grid center (the frequency of
    /// the partner photon under strict anticorrelation).
    pub fn mirror(&self, i: usize) -> usize {
        self.n_points - 1 - i
    }

    /// True if `f_thz` lies inside the grid.
    pub fn contains(&self, f_thz: f64) -> bool {
        let half = self.span_thz / 2.0;
        f_thz >= self.center_thz - half && f_thz <= self.center_thz + half
    }

    /// Trapezoidal quadrature weight of point `i` (THz).
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_points - 1 {
            self.step_thz() / 2.0
        } else {
            self.step_thz()
        }
    }

    /// A grid with the same center and span but twice as many intervals.
    /// Used by convergence checks.
    pub fn doubled(&self) -> Self {
        Self {
            center_thz: self.center_thz,
            span_thz: self.span_thz,
            n_points: 2 * self.n_points - 1,
        }
    }
}

/// Complex spectral amplitude sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    grid: FrequencyGrid,
    amplitude: Vec<Complex64>,
}

impl SpectralProfile {
    /// Wrap an explicit amplitude vector. The vector length must match the grid.
    pub fn from_amplitudes(grid: FrequencyGrid, amplitude: Vec<Complex64>) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(CoreError::GridMismatch(format!(
                "amplitude has {} samples for a {}-point grid",
                amplitude.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, amplitude })
    }

    /// Convenience constructor for real amplitudes.
    pub fn from_real(grid: FrequencyGrid, amplitude: Vec<f64>) -> Result<Self> {
        Self::from_amplitudes(
            grid,
            amplitude.into_iter().map(|a| Complex64::new(a, 0.0)).collect(),
        )
    }

    /// Grid this profile is sampled on.
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Amplitude samples.
    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    /// Intensity `|a|²` at point `i`.
    pub fn intensity(&self, i: usize) -> f64 {
        self.amplitude[i].norm_sqr()
    }

    /// Trapezoidal integral of the intensity over the grid (1/THz·THz = 1 for
    /// normalized profiles).
    pub fn intensity_integral(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.grid.weight(i) * self.intensity(i))
            .sum()
    }

    /// Scale the amplitude so that the intensity integrates to one.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.intensity_integral();
        if total <= 0.0 || !total.is_finite() {
            return Err(CoreError::ZeroProfile(
                "cannot normalize a profile with zero intensity".into(),
            ));
        }
        let scale = total.sqrt().recip();
        Ok(Self {
            grid: self.grid,
            amplitude: self.amplitude.iter().map(|a| a * scale).collect(),
        })
    }

    /// Full width at half maximum of the intensity, in THz, located by linear
    /// interpolation between grid points. Fails if either half-maximum
    /// crossing lies outside the grid.
    pub fn measured_intensity_fwhm_thz(&self) -> Result<f64> {
        let n = self.grid.len();
        let (peak_idx, peak) = (0..n)
            .map(|i| (i, self.intensity(i)))
            .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        if peak <= 0.0 {
            return Err(CoreError::ZeroProfile("profile has no intensity peak".into()));
        }
        let half = peak / 2.0;
        let crossing = |mut i: usize, step: isize| -> Result<f64> {
            loop {
                let j = i as isize + step;
                if j < 0 || j as usize >= n {
                    return Err(CoreError::OutsideGrid(
                        "half-maximum crossing lies outside the grid".into(),
                    ));
                }
                let j = j as usize;
                let (a, b) = (self.intensity(i), self.intensity(j));
                if b <= half {
                    let t = (a - half) / (a - b);
                    return Ok(self.grid.frequency(i)
                        + t * (self.grid.frequency(j) - self.grid.frequency(i)));
                }
                i = j;
            }
        };
        let left = crossing(peak_idx, -1)?;
        let right = crossing(peak_idx, 1)?;
        Ok(right - left)
    }

    /// The measured intensity FWHM converted to a wavelength width (nm) at
    /// the profile's peak frequency.
    pub fn measured_intensity_fwhm_nm(&self) -> Result<f64> {
        let fwhm_thz = self.measured_intensity_fwhm_thz()?;
        let peak_idx = (0..self.grid.len())
            .max_by(|&a, &b| self.intensity(a).total_cmp(&self.intensity(b)))
            .expect("grid is non-empty");
        Ok(frequency_width_to_wavelength(
            fwhm_thz,
            self.grid.frequency(peak_idx),
        ))
    }
}

fn ensure_same_grid(profiles: &[&SpectralProfile], context: &str) -> Result<()> {
    for pair in profiles.windows(2) {
        if pair[0].grid != pair[1].grid {
            return Err(CoreError::GridMismatch(context.into()));
        }
    }
    Ok(())
}

/// Line shape used for the source emission envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceShape {
    /// Gaussian intensity profile (default).
    Gaussian,
    /// `sinc²` intensity profile, the natural shape of a uniform conversion
    /// region; the amplitude keeps the sign of the sinc lobes.
    SincSquared,
}

/// Position of the first half-maximum of `sinc²(x)`, used to scale the
/// `sinc²` envelope to a requested FWHM.
const SINC_SQ_HALF_MAX: f64 = 1.391_557_377_204_213;

/// Emission envelope of one polarization mode of the source.
///
/// `center_nm` is the vacuum wavelength of the line center and `fwhm_nm` the
/// full width at half maximum of the *intensity* spectrum, both in nm; the
/// envelope is built on `grid` (converted to frequency at the line center)
/// and normalized to unit intensity integral. The `polarization` argument
/// names which emission mode the envelope describes — the two modes of the
/// source overlap almost perfectly, so any difference between them enters
/// only through the numeric parameters passed here.
pub fn make_source_spectrum(
    polarization: Polarization,
    center_nm: f64,
    fwhm_nm: f64,
    grid: &FrequencyGrid,
) -> Result<SpectralProfile> {
    make_source_spectrum_shaped(polarization, center_nm, fwhm_nm, SourceShape::Gaussian, grid)
}

/// [`make_source_spectrum`] with an explicit line shape.
pub fn make_source_spectrum_shaped(
    polarization: Polarization,
    center_nm: f64,
    fwhm_nm: f64,
    shape: SourceShape,
    grid: &FrequencyGrid,
) -> Result<SpectralProfile> {
    if !(center_nm.is_finite() && fwhm_nm.is_finite()) {
        return Err(CoreError::NonFinite("source center or width"));
    }
    if fwhm_nm <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "source FWHM must be positive, got {fwhm_nm} nm"
        )));
    }
    let center_thz = wavelength_to_frequency(center_nm);
    let fwhm_thz = wavelength_width_to_frequency(fwhm_nm, center_nm);
    if !grid.contains(center_thz) {
        return Err(CoreError::OutsideGrid(format!(
            "{polarization:?} emission center {center_thz:.4} THz lies outside the grid"
        )));
    }
    let points_across = fwhm_thz / grid.step_thz();
    if (points_across as usize) < MIN_POINTS_PER_FEATURE {
        return Err(CoreError::GridTooCoarse(format!(
            "{polarization:?} emission FWHM of {fwhm_thz:.4} THz spans only {points_across:.1} grid steps \
             (need at least {MIN_POINTS_PER_FEATURE})"
        )));
    }
    let amplitude: Vec<f64> = match shape {
        SourceShape::Gaussian => {
            // Intensity FWHM = fwhm_thz  =>  amplitude std of 2σ where
            // σ = FWHM / (2√(2 ln 2)) is the intensity standard deviation.
            let sigma = fwhm_thz / (2.0 * (2.0 * f64::ln(2.0)).sqrt());
            (0..grid.len())
                .map(|i| {
                    let d = grid.frequency(i) - center_thz;
                    (-d * d / (4.0 * sigma * sigma)).exp()
                })
                .collect()
        }
        SourceShape::SincSquared => {
            let beta = 2.0 * SINC_SQ_HALF_MAX / fwhm_thz;
            (0..grid.len())
                .map(|i| {
                    let x = beta * (grid.frequency(i) - center_thz);
                    if x.abs() < 1e-12 {
                        1.0
                    } else {
                        x.sin() / x
                    }
                })
                .collect()
        }
    };
    SpectralProfile::from_real(*grid, amplitude)?.normalized()
}

/// Which side of the degeneracy a demultiplexing channel serves, labeled by
/// wavelength as on the hardware: `+` is the high-wavelength (low-frequency)
/// channel, `-` the low-wavelength (high-frequency) one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandRole {
    /// `+` output: wavelength above degeneracy, frequency below it.
    HighWavelength,
    /// `-` output: wavelength below degeneracy, frequency above it.
    LowWavelength,
}

/// Default intensity FWHM of a 100 GHz-spaced demultiplexing channel, in GHz.
///
/// The passband of a flat-top demux filter is narrower than the channel
/// spacing. This width and edge order put the intensity crossing of two
/// adjacent channels near 1%. Same-side routing of a pair is dominated not
/// by that crossing but by pairs born near the degeneracy frequency, which
/// sits only half the channel spacing from either passband center; the
/// passband must have decayed hard by that detuning, which argues for a
/// narrow width over a steeper edge (a steeper edge at fixed crossing is
/// *wider* at the degeneracy point and leaks more).
pub const DEFAULT_DWDM_FWHM_GHZ: f64 = 62.0;

/// Default super-Gaussian order of the demux passband edge.
pub const DEFAULT_DWDM_ORDER: f64 = 2.0;

/// Description of one demultiplexing filter channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    /// Channel center as a vacuum wavelength, nm.
    pub center_nm: f64,
    /// Intensity-transmission FWHM, GHz.
    pub bandwidth_fwhm_ghz: f64,
    /// Super-Gaussian order of the passband (1 = plain Gaussian; higher is
    /// flatter-topped with steeper edges).
    pub shape_order: f64,
    /// Which side of the degeneracy this channel serves.
    pub role: BandRole,
}

impl FilterSpec {
    /// Filter centered on telecom channel `channel` of the 100 GHz grid, with
    /// the default flat-top passband.
    pub fn itu(channel: u32, role: BandRole) -> Self {
        Self {
            center_nm: frequency_to_wavelength(channel_frequency_thz(channel)),
            bandwidth_fwhm_ghz: DEFAULT_DWDM_FWHM_GHZ,
            shape_order: DEFAULT_DWDM_ORDER,
            role,
        }
    }

    /// Channel center frequency in THz.
    pub fn center_thz(&self) -> f64 {
        wavelength_to_frequency(self.center_nm)
    }
}

/// Check that a `+`/`-` filter pair is labeled consistently: the `+` channel
/// must sit at the higher wavelength (lower frequency).
pub fn validate_filter_pair(plus: &FilterSpec, minus: &FilterSpec) -> Result<()> {
    if plus.role != BandRole::HighWavelength || minus.role != BandRole::LowWavelength {
        return Err(CoreError::InvalidParameter(
            "filter pair must be (high-wavelength `+`, low-wavelength `-`)".into(),
        ));
    }
    if plus.center_nm <= minus.center_nm {
        return Err(CoreError::InvalidParameter(format!(
            "`+` channel must sit above the `-` channel in wavelength, got {} nm vs {} nm",
            plus.center_nm, minus.center_nm
        )));
    }
    Ok(())
}

/// Amplitude transmission of a demux channel on `grid`.
///
/// The transmission peaks at exactly 1 on the channel center and falls as a
/// super-Gaussian whose *intensity* FWHM is `bandwidth_fwhm_ghz`. The grid
/// must contain the channel center with a margin of one full FWHM on each
/// side, and resolve the FWHM with at least [`MIN_POINTS_PER_FEATURE`] points.
pub fn make_dwdm_filter(spec: &FilterSpec, grid: &FrequencyGrid) -> Result<SpectralProfile> {
    if !(spec.center_nm.is_finite()
        && spec.bandwidth_fwhm_ghz.is_finite()
        && spec.shape_order.is_finite())
    {
        return Err(CoreError::NonFinite("filter parameters"));
    }
    if spec.bandwidth_fwhm_ghz <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "filter bandwidth must be positive, got {} GHz",
            spec.bandwidth_fwhm_ghz
        )));
    }
    if spec.shape_order < 1.0 {
        return Err(CoreError::InvalidParameter(format!(
            "filter shape order must be at least 1, got {}",
            spec.shape_order
        )));
    }
    let center = spec.center_thz();
    let fwhm_thz = spec.bandwidth_fwhm_ghz / 1000.0;
    for edge in [center - fwhm_thz, center + fwhm_thz] {
        if !grid.contains(edge) {
            return Err(CoreError::OutsideGrid(format!(
                "filter passband around {center:.4} THz (±{fwhm_thz:.4} THz) extends beyond the grid"
            )));
        }
    }
    let points_across = fwhm_thz / grid.step_thz();
    if (points_across as usize) < MIN_POINTS_PER_FEATURE {
        return Err(CoreError::GridTooCoarse(format!(
            "filter FWHM of {fwhm_thz:.4} THz spans only {points_across:.1} grid steps \
             (need at least {MIN_POINTS_PER_FEATURE})"
        )));
    }
    // Intensity T = exp(-ln2 · (2δ/FWHM)^(2n)); the amplitude is √T.
    let amplitude: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = 2.0 * (grid.frequency(i) - center) / fwhm_thz;
            (-0.5 * f64::ln(2.0) * x.abs().powf(2.0 * spec.shape_order)).exp()
        })
        .collect();
    SpectralProfile::from_real(*grid, amplitude)
}

/// Pointwise product of a source envelope and a filter's amplitude
/// transmission: the spectrum of the photon flux behind the filter.
pub fn filtered_profile(
    source: &SpectralProfile,
    filter: &SpectralProfile,
) -> Result<SpectralProfile> {
    ensure_same_grid(&[source, filter], "filtered_profile requires one shared grid")?;
    let amplitude = source
        .amplitude()
        .iter()
        .zip(filter.amplitude())
        .map(|(s, t)| s * t)
        .collect();
    SpectralProfile::from_amplitudes(*source.grid(), amplitude)
}

/// Fraction of the source intensity transmitted by the filter.
pub fn transmitted_fraction(source: &SpectralProfile, filter: &SpectralProfile) -> Result<f64> {
    let total = source.intensity_integral();
    if total <= 0.0 {
        return Err(CoreError::ZeroProfile("source carries no intensity".into()));
    }
    Ok(filtered_profile(source, filter)?.intensity_integral() / total)
}

/// Intensity transmission of the two filters at their crossing point: the
/// grid point between the two channel centers where the transmissions are
/// closest to equal. This is the "overlap" figure quoted for adjacent demux
/// channels.
pub fn midpoint_intensity_crossing(
    filter_plus: &SpectralProfile,
    filter_minus: &SpectralProfile,
) -> Result<f64> {
    ensure_same_grid(
        &[filter_plus, filter_minus],
        "crossing point requires one shared grid",
    )?;
    let peak_of = |p: &SpectralProfile| {
        (0..p.grid().len())
            .max_by(|&a, &b| p.intensity(a).total_cmp(&p.intensity(b)))
            .expect("grid is non-empty")
    };
    let (a, b) = (peak_of(filter_plus), peak_of(filter_minus));
    let (lo, hi) = (a.min(b), a.max(b));
    if hi - lo < 2 {
        return Err(CoreError::InvalidParameter(
            "filters peak at the same grid location; no crossing between them".into(),
        ));
    }
    let best = (lo + 1..hi)
        .min_by(|&i, &j| {
            let di = (filter_plus.intensity(i) - filter_minus.intensity(i)).abs();
            let dj = (filter_plus.intensity(j) - filter_minus.intensity(j)).abs();
            di.total_cmp(&dj)
        })
        .expect("crossing range is non-empty");
    Ok(0.5 * (filter_plus.intensity(best) + filter_minus.intensity(best)))
}

/// Probability that both photons of a pair exit through the *same*
/// demultiplexer output, relative to all pairs that exit at all.
///
/// Each photon is routed by frequency through the physical filter cascade:
/// it is transmitted into the `+` output with probability `T₊(f)`, and the
/// complement hits the `-` filter, so it reaches the `-` output with
/// probability `(1 - T₊(f))·T₋(f)`. The partner frequency is mirrored about
/// the grid center (strict anticorrelation with a monochromatic pump), with
/// the pair weighted by the joint emission intensity
/// `|sₕ(f)·sᵥ(f_mirror)|²`.
pub fn same_side_probability(
    source_h: &SpectralProfile,
    source_v: &SpectralProfile,
    filter_plus: &SpectralProfile,
    filter_minus: &SpectralProfile,
) -> Result<f64> {
    ensure_same_grid(
        &[source_h, source_v, filter_plus, filter_minus],
        "same-side probability requires one shared grid",
    )?;
    let grid = source_h.grid();
    let n = grid.len();
    let route = |i: usize| -> (f64, f64) {
        let t_plus = filter_plus.intensity(i).min(1.0);
        let t_minus = filter_minus.intensity(i).min(1.0);
        (t_plus, (1.0 - t_plus) * t_minus)
    };
    let (mut same, mut total) = (0.0, 0.0);
    for i in 0..n {
        let m = grid.mirror(i);
        let weight = grid.weight(i) * source_h.intensity(i) * source_v.intensity(m);
        if weight == 0.0 {
            continue;
        }
        let (p_plus, p_minus) = route(i);
        let (q_plus, q_minus) = route(m);
        same += weight * (p_plus * q_plus + p_minus * q_minus);
        total += weight * (p_plus + p_minus) * (q_plus + q_minus);
    }
    if total <= 0.0 {
        return Err(CoreError::ZeroProfile(
            "filters transmit none of the joint spectrum".into(),
        ));
    }
    Ok(same / total)
}

/// Normalized overlap of the two two-photon spectral amplitudes that
/// interfere in a polarization Hong-Ou-Mandel measurement, with a relative
/// delay `tau_ps` applied to one polarization.
///
/// The profiles are the four filtered single-photon envelopes: polarization
/// H or V behind the `+` channel (indexed by the `+` photon's frequency) and
/// behind the `-` channel. With strict frequency anticorrelation the two
/// interfering pair amplitudes are `A₁(Δ) = p₊ₕ(f₀+Δ)·p₋ᵥ(f₀-Δ)` and
/// `A₂(Δ) = p₊ᵥ(f₀+Δ)·p₋ₕ(f₀-Δ)`; delaying polarization H by `τ` leaves the
/// relative phase `e^{-i4πΔτ}` between them, so
///
/// ```text
/// G(τ) = ∫ A₁*(Δ) A₂(Δ) e^{-i4πΔτ} dΔ / √(∫|A₁|² ∫|A₂|²)
/// ```
///
/// By Cauchy-Schwarz `|G(τ)| ≤ 1`, with `G(0) = 1` exactly when the two pair
/// amplitudes are identical up to a global phase. For real profiles
/// `G(-τ) = conj(G(τ))`. Because the two channels sit at different center
/// frequencies, `G` carries an oscillation near twice the channel detuning
/// under a decaying envelope — the coincidence-rate beat of two-photon
/// interference between photons of different colors.
pub fn interference_kernel(
    plus_h: &SpectralProfile,
    plus_v: &SpectralProfile,
    minus_h: &SpectralProfile,
    minus_v: &SpectralProfile,
    tau_ps: f64,
) -> Result<Complex64> {
    if !tau_ps.is_finite() {
        return Err(CoreError::NonFinite("kernel delay"));
    }
    ensure_same_grid(
        &[plus_h, plus_v, minus_h, minus_v],
        "interference kernel requires one shared grid",
    )?;
    let grid = plus_h.grid();
    let n = grid.len();
    let mut overlap = Complex64::new(0.0, 0.0);
    let (mut norm1, mut norm2) = (0.0, 0.0);
    for i in 0..n {
        let m = grid.mirror(i);
        let a1 = plus_h.amplitude()[i] * minus_v.amplitude()[m];
        let a2 = plus_v.amplitude()[i] * minus_h.amplitude()[m];
        let w = grid.weight(i);
        let detuning = grid.frequency(i) - grid.center_thz();
        let phase = -4.0 * std::f64::consts::PI * detuning * tau_ps;
        overlap += w * a1.conj() * a2 * Complex64::from_polar(1.0, phase);
        norm1 += w * a1.norm_sqr();
        norm2 += w * a2.norm_sqr();
    }
    if norm1 <= 0.0 || norm2 <= 0.0 {
        return Err(CoreError::ZeroProfile(
            "one of the two-photon amplitudes vanishes on the grid".into(),
        ));
    }
    Ok(overlap / (norm1 * norm2).sqrt())
}
