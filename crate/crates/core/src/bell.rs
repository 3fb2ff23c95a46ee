//! Polarization correlation fringes and the CHSH inequality.
//!
//! One analyzer (Alice, on the `+` channel) is held at a fixed angle while
//! the other (Bob, on the `-` channel) rotates a half-wave plate through a
//! grid of settings; the coincidence rate traces a sinusoidal fringe with
//! two periods per half-turn of the plate. Four such fringes — Alice at
//! H, V, D, A — determine the correlation coefficient `E(a, b)` at any pair
//! of analysis angles through the fitted fringe models, and from four
//! correlations the CHSH magnitude
//!
//! ```text
//! S = |E(a, b) - E(a, b') + E(a', b) + E(a', b')|
//! ```
//!
//! (the combination's sign carries only angle conventions, so the magnitude
//! is what the inequality bounds). Local realistic statistics obey `S ≤ 2`;
//! the maximally entangled pair state reaches `S = 2√2` at the right angles,
//! and a fringe visibility `V` scales the whole combination to `S = 2√2·V`.
//! The same `S` is also computed directly from the quantum state as an
//! independent route.

use rand::Rng;

use crate::detection::CountingConfig;
use crate::error::{CoreError, Result};
use crate::fit::{fit_sinusoid, SinusoidFit};
use crate::polarization::{joint_detection_probability, BiphotonState};
use crate::scan::{FitModel, ScanCurve, ScanResult};
use crate::streams::stream_rng;

/// Fringe angular frequency per degree of half-wave-plate rotation: the
/// analyzer direction turns twice as fast as the plate, and the coincidence
/// rate is quadratic in the projection, giving four fringe periods per full
/// plate turn.
pub const FRINGE_OMEGA_PER_HWP_DEG: f64 = 4.0 * std::f64::consts::PI / 180.0;

/// The four analysis angles of a CHSH measurement, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshAngles {
    pub a_deg: f64,
    pub a_prime_deg: f64,
    pub b_deg: f64,
    pub b_prime_deg: f64,
}

impl Default for ChshAngles {
    /// Angles that maximize `|S|` for the symmetric pair state `ψ⁺`:
    /// Alice at 0°/45°, Bob at -22.5°/-67.5°. (The textbook set with Bob at
    /// +22.5°/+67.5° maximizes for the antisymmetric state instead and
    /// yields S = 0 for `ψ⁺`.)
    fn default() -> Self {
        Self {
            a_deg: 0.0,
            a_prime_deg: 45.0,
            b_deg: -22.5,
            b_prime_deg: -67.5,
        }
    }
}

/// A CHSH value with its propagated uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshEstimate {
    /// CHSH magnitude `|E(a,b) - E(a,b') + E(a',b) + E(a',b')|`.
    pub s: f64,
    /// One-sigma uncertainty of `s`.
    pub sigma: f64,
}

impl ChshEstimate {
    /// Number of standard deviations by which `S` exceeds the local bound
    /// of 2.
    pub fn violation_significance(&self) -> f64 {
        (self.s - 2.0) / self.sigma
    }
}

/// A correlation coefficient with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub sigma: f64,
}

/// Correlation coefficient `E(alpha, beta)` of the state at the given
/// analysis angles, from the four joint outcome probabilities.
pub fn correlation(state: &BiphotonState, alpha_deg: f64, beta_deg: f64) -> Result<f64> {
    let p_pp = joint_detection_probability(state, alpha_deg, beta_deg)?;
    let p_po = joint_detection_probability(state, alpha_deg, beta_deg + 90.0)?;
    let p_op = joint_detection_probability(state, alpha_deg + 90.0, beta_deg)?;
    let p_oo = joint_detection_probability(state, alpha_deg + 90.0, beta_deg + 90.0)?;
    let total = p_pp + p_po + p_op + p_oo;
    if total <= 0.0 {
        return Err(CoreError::ZeroProfile(
            "state carries no probability at these analyzers".into(),
        ));
    }
    Ok((p_pp + p_oo - p_po - p_op) / total)
}

/// CHSH magnitude straight from the quantum state — the reference value
/// the fringe-based estimate is checked against.
pub fn chsh_from_state(state: &BiphotonState, angles: &ChshAngles) -> Result<f64> {
    let e_ab = correlation(state, angles.a_deg, angles.b_deg)?;
    let e_ab2 = correlation(state, angles.a_deg, angles.b_prime_deg)?;
    let e_a2b = correlation(state, angles.a_prime_deg, angles.b_deg)?;
    let e_a2b2 = correlation(state, angles.a_prime_deg, angles.b_prime_deg)?;
    Ok((e_ab - e_ab2 + e_a2b + e_a2b2).abs())
}

/// Combine four measured correlations `[E(a,b), E(a,b'), E(a',b), E(a',b')]`
/// into a CHSH estimate with root-sum-square error. Taking the magnitude
/// leaves the propagated sigma unchanged for any significant violation.
pub fn chsh_from_correlations(correlations: &[Correlation; 4]) -> ChshEstimate {
    let s = (correlations[0].value - correlations[1].value
        + correlations[2].value
        + correlations[3].value)
        .abs();
    let sigma = correlations
        .iter()
        .map(|c| c.sigma * c.sigma)
        .sum::<f64>()
        .sqrt();
    ChshEstimate { s, sigma }
}

/// One fringe measurement: Alice fixed, Bob's half-wave plate swept.
#[derive(Debug, Clone)]
pub struct FringeConfig {
    /// Alice's analysis angle, degrees.
    pub alice_analyzer_deg: f64,
    /// Bob's half-wave-plate settings, degrees.
    pub bob_hwp_degrees: Vec<f64>,
    /// Contrast of the oscillating part of the fringe (source and analysis
    /// imperfections), 0..=1. Scales the fringe about its mean, leaving the
    /// mean rate unchanged.
    pub visibility_factor: f64,
    /// Counting chain for noisy fringes.
    pub counting: Option<CountingConfig>,
}

/// Mean of the joint probability over one full analyzer period of Bob —
/// the fringe's DC level. A uniform average over equally spaced analyzer
/// angles is exact for the trigonometric polynomial the Born rule produces.
fn fringe_mean(state: &BiphotonState, alice_deg: f64) -> Result<f64> {
    let n = 64;
    let mut total = 0.0;
    for k in 0..n {
        let beta = 180.0 * k as f64 / n as f64;
        total += joint_detection_probability(state, alice_deg, beta)?;
    }
    Ok(total / n as f64)
}

/// Compute the ideal fringe curve for one Alice setting.
pub fn fringe_curve(state: &BiphotonState, config: &FringeConfig) -> Result<ScanCurve> {
    if config.bob_hwp_degrees.len() < 5 {
        return Err(CoreError::InvalidParameter(
            "fringe needs at least 5 half-wave-plate settings".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.visibility_factor) {
        return Err(CoreError::InvalidParameter(format!(
            "visibility factor must be in [0, 1], got {}",
            config.visibility_factor
        )));
    }
    if let Some(c) = &config.counting {
        c.validate()?;
    }
    let mean = fringe_mean(state, config.alice_analyzer_deg)?;
    let probabilities = config
        .bob_hwp_degrees
        .iter()
        .map(|&theta| {
            let p = joint_detection_probability(state, config.alice_analyzer_deg, 2.0 * theta)?;
            Ok(mean + config.visibility_factor * (p - mean))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScanCurve {
        control_label: "control_deg".into(),
        controls: config.bob_hwp_degrees.clone(),
        probabilities,
        model: Some(FitModel::Fringe {
            omega: FRINGE_OMEGA_PER_HWP_DEG,
        }),
        counting: config.counting.clone(),
    })
}

/// Full Bell measurement: four fringes, correlations, and CHSH both ways.
#[derive(Debug, Clone)]
pub struct BellSettings {
    /// Pair state under test.
    pub state: BiphotonState,
    /// Alice's four analysis angles: each CHSH setting and its complement
    /// must appear (modulo 180°). The default H, V, D, A set covers the
    /// default [`ChshAngles`].
    pub alice_analyzers_deg: [f64; 4],
    /// Bob's half-wave-plate grid.
    pub bob_hwp_start_deg: f64,
    pub bob_hwp_step_deg: f64,
    pub bob_hwp_points: usize,
    /// CHSH analysis angles.
    pub chsh: ChshAngles,
    /// Fringe contrast of the apparatus.
    pub visibility_factor: f64,
    /// Counting chain; `None` for ideal fringes.
    pub counting: Option<CountingConfig>,
}

impl BellSettings {
    /// Noiseless measurement of `state` with unit contrast and the default
    /// angle sets.
    pub fn ideal(state: BiphotonState) -> Self {
        Self {
            state,
            alice_analyzers_deg: [0.0, 90.0, 45.0, -45.0],
            bob_hwp_start_deg: 0.0,
            bob_hwp_step_deg: 2.5,
            bob_hwp_points: 73,
            chsh: ChshAngles::default(),
            visibility_factor: 1.0,
            counting: None,
        }
    }

    /// Bob's half-wave-plate settings.
    pub fn bob_grid(&self) -> Vec<f64> {
        (0..self.bob_hwp_points)
            .map(|i| self.bob_hwp_start_deg + self.bob_hwp_step_deg * i as f64)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.bob_hwp_points < 5 {
            return Err(CoreError::InvalidParameter(
                "Bob's grid needs at least 5 settings".into(),
            ));
        }
        if !(self.bob_hwp_step_deg > 0.0) {
            return Err(CoreError::InvalidParameter(
                "Bob's grid step must be positive".into(),
            ));
        }
        let span = self.bob_hwp_step_deg * (self.bob_hwp_points - 1) as f64;
        if span < 90.0 {
            return Err(CoreError::InvalidParameter(format!(
                "Bob's grid spans {span}° of plate rotation; a full fringe period (90°) is required"
            )));
        }
        Ok(())
    }
}

/// Everything a Bell measurement produces.
#[derive(Debug, Clone)]
pub struct BellRun {
    /// The four fringes, in the order of `alice_analyzers_deg`.
    pub fringes: Vec<ScanResult>,
    /// Alice's angle for each fringe.
    pub alice_analyzers_deg: [f64; 4],
    /// The four CHSH correlations `[E(a,b), E(a,b'), E(a',b), E(a',b')]`
    /// extracted from the fitted fringes.
    pub correlations: [Correlation; 4],
    /// CHSH angles used.
    pub chsh_angles: ChshAngles,
    /// CHSH from the fringe fits, with propagated uncertainty.
    pub chsh_fringes: ChshEstimate,
    /// CHSH straight from the state — the no-apparatus reference.
    pub chsh_state: f64,
}

/// Angles equal as analyzer directions (modulo 180°).
fn same_analyzer(a_deg: f64, b_deg: f64) -> bool {
    let d = (a_deg - b_deg).rem_euclid(180.0);
    d.abs() < 1e-9 || (d - 180.0).abs() < 1e-9
}

/// Correlation at `(alice, bob)` from two fitted fringes: the fringe taken
/// at Alice's angle and the one at its complement. The four rates entering
/// `E` are read off the fitted models at Bob's angle and its complement.
fn correlation_from_fits(
    fits: &[(f64, SinusoidFit)],
    alice_deg: f64,
    bob_deg: f64,
) -> Result<Correlation> {
    let find = |angle: f64| -> Result<&SinusoidFit> {
        fits.iter()
            .find(|(a, _)| same_analyzer(*a, angle))
            .map(|(_, f)| f)
            .ok_or_else(|| {
                CoreError::InvalidParameter(format!(
                    "no fringe was measured with Alice at {angle}°"
                ))
            })
    };
    let direct = find(alice_deg)?;
    let complement = find(alice_deg + 90.0)?;
    // Half-wave-plate settings probing Bob's angle and its complement.
    let x1 = bob_deg / 2.0;
    let x2 = (bob_deg + 90.0) / 2.0;
    let n_dir = [direct.predict(x1), direct.predict(x2)];
    let n_cmp = [complement.predict(x1), complement.predict(x2)];
    let numerator = n_dir[0] + n_cmp[1] - n_dir[1] - n_cmp[0];
    let denominator = n_dir[0] + n_dir[1] + n_cmp[0] + n_cmp[1];
    if denominator <= 0.0 {
        return Err(CoreError::FitFailed(
            "fitted fringes give a non-positive total rate".into(),
        ));
    }
    let value = numerator / denominator;

    // Error propagation: E depends on each fit through its value at x1 and
    // x2; within one fit those two predictions share the coefficient
    // covariance, and the two fits are independent data sets.
    let omega = direct.omega;
    let basis = |x: f64| [1.0, (omega * x).cos(), (omega * x).sin()];
    let (g1, g2) = (basis(x1), basis(x2));
    let mut variance = 0.0;
    for (fit, sign) in [(direct, 1.0), (complement, -1.0)] {
        // Gradient of E wrt this fit's linear coefficients:
        // numerator gets sign·(g1 - g2), denominator gets (g1 + g2).
        let mut grad = [0.0; 3];
        for k in 0..3 {
            grad[k] = (sign * (g1[k] - g2[k]) - value * (g1[k] + g2[k])) / denominator;
        }
        for r in 0..3 {
            for c in 0..3 {
                variance += grad[r] * fit.covariance[r][c] * grad[c];
            }
        }
    }
    Ok(Correlation {
        value,
        sigma: variance.max(0.0).sqrt(),
    })
}

/// Run the full Bell measurement: four fringes (ideal or Poisson-sampled),
/// fringe fits, the four CHSH correlations, and both CHSH routes.
pub fn run_bell(settings: &BellSettings, seed: Option<u64>) -> Result<BellRun> {
    settings.validate()?;
    let bob_grid = settings.bob_grid();
    let mut fringes = Vec::with_capacity(4);
    let mut fits: Vec<(f64, SinusoidFit)> = Vec::with_capacity(4);
    for (k, &alice) in settings.alice_analyzers_deg.iter().enumerate() {
        let config = FringeConfig {
            alice_analyzer_deg: alice,
            bob_hwp_degrees: bob_grid.clone(),
            visibility_factor: settings.visibility_factor,
            counting: settings.counting.clone(),
        };
        let curve = fringe_curve(&settings.state, &config)?;
        let result = match seed {
            None => curve.ideal_result(),
            // Each fringe draws from its own derived seed so the four
            // measurements are statistically independent.
            Some(s) => curve.sample(stream_rng(s, 0xF21 + k as u64).gen())?,
        };
        let xs: Vec<f64> = result.points.iter().map(|p| p.control).collect();
        let ys: Vec<f64> = result.points.iter().map(|p| p.rate).collect();
        let noisy = result.points.iter().any(|p| p.uncertainty > 0.0);
        let sigmas: Vec<f64> = result.points.iter().map(|p| p.uncertainty).collect();
        let fit = fit_sinusoid(
            &xs,
            &ys,
            noisy.then_some(sigmas.as_slice()),
            FRINGE_OMEGA_PER_HWP_DEG,
        )?;
        fits.push((alice, fit));
        fringes.push(result);
    }

    let angles = settings.chsh;
    let correlations = [
        correlation_from_fits(&fits, angles.a_deg, angles.b_deg)?,
        correlation_from_fits(&fits, angles.a_deg, angles.b_prime_deg)?,
        correlation_from_fits(&fits, angles.a_prime_deg, angles.b_deg)?,
        correlation_from_fits(&fits, angles.a_prime_deg, angles.b_prime_deg)?,
    ];
    let chsh_fringes = chsh_from_correlations(&correlations);
    let chsh_state = chsh_from_state(&settings.state, &angles)?;
    Ok(BellRun {
        fringes,
        alice_analyzers_deg: settings.alice_analyzers_deg,
        correlations,
        chsh_angles: angles,
        chsh_fringes,
        chsh_state,
    })
}
