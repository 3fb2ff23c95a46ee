//! Curve-fitting routines for scan data.
//!
//! Three fitters cover everything the measurement chain produces:
//!
//! * a local quadratic vertex fit that refines the value of an extremum from
//!   the few samples around it — robust to the beating that delay scans show
//!   away from their center, and unbiased under point-wise noise where a raw
//!   `min`/`max` would select downward fluctuations;
//! * a baseline-anchored Gaussian fit (Levenberg-Marquardt) over the main
//!   lobe of a dip or peak, which supplies its center and width;
//! * a weighted linear least-squares sinusoid fit for polarization fringes.
//!
//! All solvers are dense 3×3 problems solved in place; uncertainties come
//! from the usual linearized covariance `(JᵀWJ)⁻¹`.

use crate::error::{CoreError, Result};

/// Solve `a · x = b` for a 3×3 system by Gaussian elimination with partial
/// pivoting.
pub(crate) fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-14 {
            return Err(CoreError::FitFailed("singular normal equations".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::FitFailed("non-finite solution".into()));
    }
    Ok(x)
}

/// Invert a symmetric 3×3 matrix by solving against the identity.
pub(crate) fn invert3(a: [[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let mut inv = [[0.0; 3]; 3];
    for (col, inv_col) in [(0, 0), (1, 1), (2, 2)] {
        let mut e = [0.0; 3];
        e[col] = 1.0;
        let x = solve3(a, e)?;
        for row in 0..3 {
            inv[row][inv_col] = x[row];
        }
    }
    Ok(inv)
}

/// Result of a local quadratic fit around an extremum.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticVertex {
    /// Control value of the refined extremum.
    pub x: f64,
    /// Refined extremum value.
    pub y: f64,
    /// Variance of `y` propagated from point uncertainties, when supplied.
    pub y_variance: Option<f64>,
}

/// Refine the extremum near index `idx` by a weighted least-squares parabola
/// over `idx ± half_window` samples (clamped to the data range). Falls back
/// to the raw sample when the parabola's curvature points the wrong way or
/// its vertex leaves the window.
pub fn refine_extremum(
    xs: &[f64],
    ys: &[f64],
    sigmas: Option<&[f64]>,
    idx: usize,
    half_window: usize,
    maximize: bool,
) -> Result<QuadraticVertex> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(CoreError::FitFailed(
            "need at least three points to refine an extremum".into(),
        ));
    }
    let lo = idx.saturating_sub(half_window);
    let hi = (idx + half_window + 1).min(xs.len());
    if hi - lo < 3 {
        return Err(CoreError::FitFailed("extremum window too small".into()));
    }
    let x0 = xs[idx];
    // Weighted normal equations for y = p0 + p1·u + p2·u², u = x - x0.
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for i in lo..hi {
        let u = xs[i] - x0;
        let w = match sigmas {
            Some(s) if s[i] > 0.0 => 1.0 / (s[i] * s[i]),
            _ => 1.0,
        };
        let basis = [1.0, u, u * u];
        for r in 0..3 {
            for c in 0..3 {
                ata[r][c] += w * basis[r] * basis[c];
            }
            atb[r] += w * basis[r] * ys[i];
        }
    }
    let p = solve3(ata, atb)?;
    let fallback = QuadraticVertex {
        x: xs[idx],
        y: ys[idx],
        y_variance: sigmas.map(|s| s[idx] * s[idx]),
    };
    let curvature_ok = if maximize { p[2] < 0.0 } else { p[2] > 0.0 };
    if !curvature_ok || p[2].abs() < 1e-300 {
        return Ok(fallback);
    }
    let u_vertex = -p[1] / (2.0 * p[2]);
    if u_vertex + x0 < xs[lo] || u_vertex + x0 > xs[hi - 1] {
        return Ok(fallback);
    }
    let y_vertex = p[0] - p[1] * p[1] / (4.0 * p[2]);
    let y_variance = match sigmas {
        Some(_) => {
            // y* = p0 - p1²/(4 p2): delta method on the coefficient covariance.
            let cov = invert3(ata)?;
            let g = [
                1.0,
                -p[1] / (2.0 * p[2]),
                p[1] * p[1] / (4.0 * p[2] * p[2]),
            ];
            let mut var = 0.0;
            for r in 0..3 {
                for c in 0..3 {
                    var += g[r] * cov[r][c] * g[c];
                }
            }
            Some(var.max(0.0))
        }
        None => None,
    };
    Ok(QuadraticVertex {
        x: x0 + u_vertex,
        y: y_vertex,
        y_variance,
    })
}

/// Boxcar-smoothed copy of `ys` with the given half-width (window of
/// `2·half + 1` points, truncated at the array edges).
///
/// Used to pick extremum *locations* on counted data without letting shot
/// noise select the largest upward fluctuation; fitted values are always
/// read from the raw samples.
pub fn boxcar(ys: &[f64], half: usize) -> Vec<f64> {
    (0..ys.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(ys.len() - 1);
            ys[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Contiguous window around an extremum where the deviation from the
/// baseline keeps the extremum's sign and stays above a small fraction of
/// its magnitude — the main lobe of a beating scan curve.
pub fn main_lobe_bounds(ys: &[f64], baseline: f64, extremum: usize) -> (usize, usize) {
    let dev = ys[extremum] - baseline;
    let floor = 0.02 * dev.abs();
    let keeps_lobe = |y: f64| {
        let d = y - baseline;
        d.signum() == dev.signum() && d.abs() > floor
    };
    let mut lo = extremum;
    while lo > 0 && keeps_lobe(ys[lo - 1]) {
        lo -= 1;
    }
    let mut hi = extremum;
    while hi + 1 < ys.len() && keeps_lobe(ys[hi + 1]) {
        hi += 1;
    }
    (lo, hi)
}

/// Baseline-anchored Gaussian feature `y = B + d·exp(-(x-c)²/(2w²))` with
/// the baseline `B` held fixed; `d` is negative for a dip.
#[derive(Debug, Clone, Copy)]
pub struct GaussianFeature {
    /// Anchored baseline.
    pub baseline: f64,
    /// Signed depth of the feature at its center.
    pub depth: f64,
    /// Center of the feature in control units.
    pub center: f64,
    /// Gaussian width parameter `w`.
    pub width: f64,
}

impl GaussianFeature {
    /// Full width at half maximum of the feature.
    pub fn fwhm(&self) -> f64 {
        2.0 * (2.0 * f64::ln(2.0)).sqrt() * self.width.abs()
    }

    /// Model value at `x`.
    pub fn predict(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        self.baseline + self.depth * (-0.5 * u * u).exp()
    }
}

/// Fit the anchored Gaussian to `(xs, ys)` by Levenberg-Marquardt, weighting
/// by `1/σ²` when uncertainties are given. The data should already be
/// restricted to the feature's main lobe (see [`main_lobe_bounds`]); the
/// baseline is supplied by the caller, not fitted.
pub fn fit_anchored_gaussian(
    xs: &[f64],
    ys: &[f64],
    sigmas: Option<&[f64]>,
    baseline: f64,
) -> Result<GaussianFeature> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(CoreError::FitFailed(
            "need at least four points to fit a feature".into(),
        ));
    }
    let weight = |i: usize| -> f64 {
        match sigmas {
            Some(s) if s[i] > 0.0 => 1.0 / (s[i] * s[i]),
            _ => 1.0,
        }
    };
    // Initial guess from the most extreme deviation.
    let ext = (0..ys.len())
        .max_by(|&i, &j| (ys[i] - baseline).abs().total_cmp(&(ys[j] - baseline).abs()))
        .expect("non-empty data");
    let span = xs[xs.len() - 1] - xs[0];
    if span <= 0.0 {
        return Err(CoreError::FitFailed("control values must increase".into()));
    }
    let mut depth = ys[ext] - baseline;
    if depth.abs() < 1e-9 * baseline.abs().max(1.0) {
        return Err(CoreError::FitFailed(
            "scan shows no feature above the baseline".into(),
        ));
    }
    let mut center = xs[ext];
    let mut width = span / 4.0;

    let cost_of = |d: f64, c: f64, w: f64| -> f64 {
        (0..xs.len())
            .map(|i| {
                let u = (xs[i] - c) / w;
                let r = ys[i] - baseline - d * (-0.5 * u * u).exp();
                weight(i) * r * r
            })
            .sum()
    };
    let mut lambda = 1e-3;
    let mut cost = cost_of(depth, center, width);
    for _ in 0..200 {
        // Build JᵀWJ and JᵀWr for the current parameters.
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for i in 0..xs.len() {
            let u = (xs[i] - center) / width;
            let e = (-0.5 * u * u).exp();
            let r = ys[i] - baseline - depth * e;
            let j = [e, depth * e * u / width, depth * e * u * u / width];
            let w = weight(i);
            for a in 0..3 {
                for b in 0..3 {
                    jtj[a][b] += w * j[a] * j[b];
                }
                jtr[a] += w * j[a] * r;
            }
        }
        let mut damped = jtj;
        for d in 0..3 {
            damped[d][d] *= 1.0 + lambda;
            damped[d][d] += 1e-300;
        }
        let step = match solve3(damped, jtr) {
            Ok(s) => s,
            Err(_) => {
                lambda *= 10.0;
                if lambda > 1e12 {
                    return Err(CoreError::FitFailed("feature fit diverged".into()));
                }
                continue;
            }
        };
        let trial = (
            depth + step[0],
            center + step[1],
            (width + step[2]).abs().max(1e-9 * span),
        );
        let trial_cost = cost_of(trial.0, trial.1, trial.2);
        if trial_cost.is_finite() && trial_cost <= cost {
            let improvement = cost - trial_cost;
            depth = trial.0;
            center = trial.1;
            width = trial.2;
            cost = trial_cost;
            lambda = (lambda * 0.3).max(1e-12);
            if improvement < 1e-14 * (cost + 1e-30) {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    if !(depth.is_finite() && center.is_finite() && width.is_finite()) {
        return Err(CoreError::FitFailed("feature fit produced non-finite parameters".into()));
    }
    Ok(GaussianFeature {
        baseline,
        depth,
        center,
        width,
    })
}

/// Sinusoid fitted to fringe data: `y = offset + amplitude·cos(ωx + phase)`,
/// with `ω` fixed by the geometry of the analyzer (radians per control unit).
#[derive(Debug, Clone, Copy)]
pub struct SinusoidFit {
    /// Mean level of the fringe.
    pub offset: f64,
    /// Non-negative fringe amplitude.
    pub amplitude: f64,
    /// Phase at zero control, radians.
    pub phase_rad: f64,
    /// Angular frequency in radians per control unit (an input, echoed back).
    pub omega: f64,
    /// Covariance of `(offset, a, b)` where `a cos ωx + b sin ωx` is the
    /// linear parameterization of the sinusoid.
    pub covariance: [[f64; 3]; 3],
    linear_ab: [f64; 2],
}

impl SinusoidFit {
    /// Model value at control `x`.
    pub fn predict(&self, x: f64) -> f64 {
        self.offset + self.amplitude * (self.omega * x + self.phase_rad).cos()
    }

    /// Fringe visibility `amplitude / offset`.
    pub fn visibility(&self) -> f64 {
        self.amplitude / self.offset
    }

    /// Standard error of the visibility, by the delta method on the linear
    /// coefficients.
    pub fn visibility_sigma(&self) -> f64 {
        let (a, b) = (self.linear_ab[0], self.linear_ab[1]);
        let c1 = self.amplitude.max(1e-300);
        let c0 = self.offset;
        // V = √(a²+b²)/c0, gradient in (c0, a, b).
        let g = [-c1 / (c0 * c0), a / (c1 * c0), b / (c1 * c0)];
        let mut var = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                var += g[r] * self.covariance[r][c] * g[c];
            }
        }
        var.max(0.0).sqrt()
    }

    /// Standard error of the offset.
    pub fn offset_sigma(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }
}

/// Weighted linear least-squares fit of `offset + a·cos(ωx) + b·sin(ωx)`.
///
/// With per-point uncertainties the covariance is `(XᵀWX)⁻¹`; without, the
/// unit-weight covariance is scaled by the reduced chi-square so the errors
/// reflect the scatter actually present.
pub fn fit_sinusoid(
    xs: &[f64],
    ys: &[f64],
    sigmas: Option<&[f64]>,
    omega: f64,
) -> Result<SinusoidFit> {
    if xs.len() != ys.len() || xs.len() < 5 {
        return Err(CoreError::FitFailed(
            "need at least five points to fit a fringe".into(),
        ));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(CoreError::FitFailed("fringe frequency must be positive".into()));
    }
    let mut xtx = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    for i in 0..xs.len() {
        let w = match sigmas {
            Some(s) if s[i] > 0.0 => 1.0 / (s[i] * s[i]),
            _ => 1.0,
        };
        let basis = [1.0, (omega * xs[i]).cos(), (omega * xs[i]).sin()];
        for r in 0..3 {
            for c in 0..3 {
                xtx[r][c] += w * basis[r] * basis[c];
            }
            xty[r] += w * basis[r] * ys[i];
        }
    }
    let p = solve3(xtx, xty)?;
    let mut covariance = invert3(xtx)?;
    if sigmas.is_none() {
        // Unit weights: scale by the reduced chi-square.
        let chi2: f64 = (0..xs.len())
            .map(|i| {
                let model = p[0] + p[1] * (omega * xs[i]).cos() + p[2] * (omega * xs[i]).sin();
                (ys[i] - model).powi(2)
            })
            .sum();
        let scale = chi2 / (xs.len() - 3) as f64;
        for row in &mut covariance {
            for v in row {
                *v *= scale;
            }
        }
    }
    let amplitude = (p[1] * p[1] + p[2] * p[2]).sqrt();
    let phase_rad = (-p[2]).atan2(p[1]);
    Ok(SinusoidFit {
        offset: p[0],
        amplitude,
        phase_rad,
        omega,
        covariance,
        linear_ab: [p[1], p[2]],
    })
}
