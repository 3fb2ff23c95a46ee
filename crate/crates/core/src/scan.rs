//! Shared containers for scan data and fitted scan summaries.
//!
//! Every scenario that sweeps a control — birefringent delay, phase-shifter
//! setting, or analyzer angle — produces a [`ScanResult`]: a list of
//! [`ScanPoint`]s plus an optional [`ScanFit`] summarizing the feature the
//! scan resolved. The fit strategy depends on the expected curve shape,
//! selected through [`FitModel`].

use crate::detection::{draw_poisson, expected_rates, CountingConfig};
use crate::error::{CoreError, Result};
use crate::fit::{
    boxcar, fit_anchored_gaussian, fit_sinusoid, main_lobe_bounds, refine_extremum,
};
use crate::streams::stream_rng;

/// One sampled point of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    /// Control value: delay in ps, phase in radians, or waveplate angle in
    /// degrees, depending on the scan.
    pub control: f64,
    /// Observed rate. Noiseless scans report a probability; counting scans
    /// report coincidences per second.
    pub rate: f64,
    /// One-sigma uncertainty of `rate`; zero for noiseless scans.
    pub uncertainty: f64,
}

/// Expected shape of a scan curve, with the analytically known baseline for
/// feature fits anchored rather than fitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitModel {
    /// A coincidence dip below `baseline`.
    Dip { baseline: f64 },
    /// A coincidence peak above `baseline`.
    Peak { baseline: f64 },
    /// A sinusoidal fringe with `omega` radians per control unit.
    Fringe { omega: f64 },
}

/// Fitted summary of a scan feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanFit {
    /// Baseline the feature is measured against: the anchored value for dips
    /// and peaks, the fitted mean level for fringes and flat scans.
    pub baseline: f64,
    /// Feature contrast. For a dip, `(baseline - minimum) / baseline`
    /// (1 for a dip reaching zero); for a peak, `(maximum - baseline) /
    /// baseline`; for a fringe, `amplitude / mean`.
    pub visibility: f64,
    /// Standard error of the visibility when point uncertainties are known.
    pub visibility_sigma: Option<f64>,
    /// Feature location: extremum position for dips and peaks, control of a
    /// fringe maximum for fringes.
    pub center: f64,
    /// Feature width: FWHM of the fitted dip or peak lobe; one full period
    /// for fringes.
    pub width: f64,
    /// Set when the scan showed no feature to fit (a zero-contrast curve):
    /// visibility is 0 by construction, and `center` (the scan midpoint) and
    /// `width` (zero) are placeholders rather than fitted values.
    pub flat: bool,
}

/// Summary of a featureless scan: zero visibility against the mean level.
fn flat_fit(points: &[ScanPoint], baseline: Option<f64>) -> ScanFit {
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.rate).sum::<f64>() / n;
    let baseline = baseline.unwrap_or(mean);
    let noisy = points.iter().any(|p| p.uncertainty > 0.0);
    let visibility_sigma = (noisy && baseline > 0.0).then(|| {
        let var: f64 = points.iter().map(|p| p.uncertainty * p.uncertainty).sum();
        var.sqrt() / n / baseline
    });
    ScanFit {
        baseline,
        visibility: 0.0,
        visibility_sigma,
        center: (points[0].control + points[points.len() - 1].control) / 2.0,
        width: 0.0,
        flat: true,
    }
}

/// Whether the scan is consistent with a constant at `baseline`: exact (to
/// rounding) for noiseless data, within Poisson scatter for counted data.
fn is_flat(points: &[ScanPoint], baseline: f64) -> bool {
    let noisy = points.iter().any(|p| p.uncertainty > 0.0);
    if noisy {
        let chi2: f64 = points
            .iter()
            .map(|p| {
                let r = (p.rate - baseline) / p.uncertainty.max(f64::MIN_POSITIVE);
                r * r
            })
            .sum();
        (chi2 / points.len() as f64) < 3.0
    } else {
        points
            .iter()
            .all(|p| (p.rate - baseline).abs() <= 1e-9 * baseline.abs().max(1.0))
    }
}

/// A completed scan: samples, provenance, and the fitted summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// Name of the control column, e.g. `delay_ps`, `phase_rad`, `hwp_deg`.
    pub control_label: String,
    /// Sampled points in control order.
    pub points: Vec<ScanPoint>,
    /// Seed used for the noise draws; `None` for noiseless scans.
    pub seed: Option<u64>,
    /// Fitted feature summary; `None` when the curve shows no feature.
    pub fit: Option<ScanFit>,
}

impl ScanResult {
    /// Control values in point order.
    pub fn controls(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.control).collect()
    }

    /// Rates in point order.
    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate).collect()
    }
}

/// Fit a scan curve according to `model`.
///
/// Dips and peaks are summarized in two steps: the extremum value comes from
/// a local quadratic vertex fit (robust to noise and to beating side lobes),
/// and the center and width come from a baseline-anchored Gaussian fitted to
/// the main lobe only. Fringes use a weighted linear sinusoid fit.
pub fn fit_scan(points: &[ScanPoint], model: FitModel) -> Result<ScanFit> {
    if points.len() < 5 {
        return Err(CoreError::FitFailed("too few scan points to fit".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.control).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.rate).collect();
    let noisy = points.iter().any(|p| p.uncertainty > 0.0);
    let sigmas_vec: Vec<f64> = points.iter().map(|p| p.uncertainty).collect();
    let sigmas = noisy.then_some(sigmas_vec.as_slice());

    match model {
        FitModel::Dip { baseline } | FitModel::Peak { baseline } => {
            if !(baseline.is_finite() && baseline > 0.0) {
                return Err(CoreError::FitFailed(
                    "dip and peak fits need a positive baseline".into(),
                ));
            }
            let maximize = matches!(model, FitModel::Peak { .. });
            match fit_feature(&xs, &ys, sigmas, baseline, maximize) {
                Ok(fit) => Ok(fit),
                // A zero-contrast curve has no lobe to fit; report it as
                // such instead of failing.
                Err(_) if is_flat(points, baseline) => Ok(flat_fit(points, Some(baseline))),
                Err(e) => Err(e),
            }
        }
        FitModel::Fringe { omega } => {
            let fit = fit_sinusoid(&xs, &ys, sigmas, omega)?;
            if !(fit.offset > 0.0) {
                return Err(CoreError::FitFailed(
                    "fringe fit found a non-positive mean level".into(),
                ));
            }
            Ok(ScanFit {
                baseline: fit.offset,
                visibility: fit.visibility(),
                visibility_sigma: Some(fit.visibility_sigma()),
                // Control value of the nearest fringe maximum to zero.
                center: -fit.phase_rad / omega,
                width: 2.0 * std::f64::consts::PI / omega,
                flat: false,
            })
        }
    }
}

/// Dip/peak fit pipeline: quadratic vertex for the contrast, anchored
/// Gaussian on the main lobe for the shape.
///
/// On noiseless data the vertex is read from the tightest window around the
/// raw extremum, which reproduces the curve value exactly. On counted data
/// that recipe is biased: the raw argmax is the largest upward fluctuation,
/// so the vertex inherits a selection bias of order one standard error.
/// There the extremum index is picked from a boxcar-smoothed copy of the
/// curve instead, and the vertex window is widened to a fixed fraction of
/// the main lobe — a least-squares parabola over a window chosen
/// independently of the point noise is an unbiased read of the lobe top and
/// pools enough points to tame the shot noise.
fn fit_feature(
    xs: &[f64],
    ys: &[f64],
    sigmas: Option<&[f64]>,
    baseline: f64,
    maximize: bool,
) -> Result<ScanFit> {
    let pick = |vals: &[f64]| -> usize {
        if maximize {
            (0..vals.len()).max_by(|&i, &j| vals[i].total_cmp(&vals[j]))
        } else {
            (0..vals.len()).min_by(|&i, &j| vals[i].total_cmp(&vals[j]))
        }
        .expect("non-empty scan")
    };
    let raw_extremum = pick(ys);
    let (extremum, half_window, lo, hi) = if sigmas.is_some() {
        let smooth = boxcar(ys, (ys.len() / 16).clamp(1, 3));
        let smoothed_extremum = pick(&smooth);
        let (lo, hi) = main_lobe_bounds(&smooth, baseline, smoothed_extremum);
        let half_window = ((hi - lo + 1) / 4).clamp(2, 20);
        (smoothed_extremum, half_window, lo, hi)
    } else {
        let (lo, hi) = main_lobe_bounds(ys, baseline, raw_extremum);
        (raw_extremum, 2, lo, hi)
    };
    let vertex = refine_extremum(xs, ys, sigmas, extremum, half_window, maximize)?;
    let visibility = if maximize {
        (vertex.y - baseline) / baseline
    } else {
        (baseline - vertex.y) / baseline
    };
    let visibility_sigma = vertex.y_variance.map(|v| v.sqrt() / baseline);

    // Shape parameters from the main lobe only; the quadratic vertex
    // already fixed the contrast.
    let (lo, hi) = if hi - lo + 1 < 4 {
        (extremum.saturating_sub(3), (extremum + 3).min(ys.len() - 1))
    } else {
        (lo, hi)
    };
    let feature = fit_anchored_gaussian(
        &xs[lo..=hi],
        &ys[lo..=hi],
        sigmas.map(|s| &s[lo..=hi]),
        baseline,
    )?;
    Ok(ScanFit {
        baseline,
        visibility,
        visibility_sigma,
        center: feature.center,
        width: feature.fwhm(),
        flat: false,
    })
}

/// Ideal scan curve plus everything needed to sample noisy realizations of
/// it cheaply.
///
/// Computing the underlying physics (one interference kernel per point) is
/// the expensive half of a scan; drawing Poisson counts on top of it is
/// nearly free. Splitting the two lets ensemble studies reuse one curve for
/// hundreds of seeds.
#[derive(Debug, Clone)]
pub struct ScanCurve {
    /// Name of the control column for the resulting [`ScanResult`]s.
    pub control_label: String,
    /// Control values in scan order.
    pub controls: Vec<f64>,
    /// Ideal coincidence probability at each control value.
    pub probabilities: Vec<f64>,
    /// Fit model in probability units; `None` for curves with no feature.
    pub model: Option<FitModel>,
    /// Counting chain for noisy sampling; `None` restricts the curve to
    /// ideal results.
    pub counting: Option<CountingConfig>,
}

impl ScanCurve {
    /// The noiseless scan: rates are probabilities, uncertainties zero.
    /// A curve declared featureless (`model: None`) gets the flat summary;
    /// a fit that fails on pathological data leaves `fit` empty rather than
    /// failing the scan.
    pub fn ideal_result(&self) -> ScanResult {
        let points: Vec<ScanPoint> = self
            .controls
            .iter()
            .zip(&self.probabilities)
            .map(|(&control, &p)| ScanPoint {
                control,
                rate: p,
                uncertainty: 0.0,
            })
            .collect();
        let fit = match self.model {
            Some(m) => fit_scan(&points, m).ok(),
            None => Some(flat_fit(&points, None)),
        };
        ScanResult {
            control_label: self.control_label.clone(),
            points,
            seed: None,
            fit,
        }
    }

    /// One noisy realization: per-point Poisson counts over the configured
    /// integration time, reported as rates per second. Each point draws from
    /// its own random stream of `seed`, so results do not depend on
    /// evaluation order.
    pub fn sample(&self, seed: u64) -> Result<ScanResult> {
        let counting = self.counting.as_ref().ok_or_else(|| {
            CoreError::InvalidParameter(
                "sampling a scan requires a counting configuration".into(),
            )
        })?;
        counting.validate()?;
        let t = counting.integration_time_s;
        let scale = counting.detected_pair_rate();
        // The accidental rate does not depend on the analyzer projection.
        let accidentals = expected_rates(counting, 0.0)?.accidental_coincidences;
        let mut points = Vec::with_capacity(self.controls.len());
        for (i, (&control, &p)) in self.controls.iter().zip(&self.probabilities).enumerate() {
            let mean = (scale * p + accidentals) * t;
            let count = draw_poisson(mean, &mut stream_rng(seed, i as u64))?;
            points.push(ScanPoint {
                control,
                rate: count as f64 / t,
                uncertainty: (count.max(1) as f64).sqrt() / t,
            });
        }
        let model = self.model.map(|m| match m {
            FitModel::Dip { baseline } => FitModel::Dip {
                baseline: baseline * scale + accidentals,
            },
            FitModel::Peak { baseline } => FitModel::Peak {
                baseline: baseline * scale + accidentals,
            },
            FitModel::Fringe { omega } => FitModel::Fringe { omega },
        });
        let fit = match model {
            Some(m) => fit_scan(&points, m).ok(),
            None => Some(flat_fit(&points, None)),
        };
        Ok(ScanResult {
            control_label: self.control_label.clone(),
            points,
            seed: Some(seed),
            fit,
        })
    }

    /// Expected observed baseline rate (per second) of the sampled scan:
    /// the anchored fit baseline in count units, accidentals included.
    pub fn sampled_baseline_rate(&self) -> Result<Option<f64>> {
        let Some(counting) = self.counting.as_ref() else {
            return Ok(None);
        };
        let accidentals = expected_rates(counting, 0.0)?.accidental_coincidences;
        Ok(match self.model {
            Some(FitModel::Dip { baseline } | FitModel::Peak { baseline }) => {
                Some(baseline * counting.detected_pair_rate() + accidentals)
            }
            _ => None,
        })
    }
}
