//! Two-photon polarization states and the optical elements acting on them.
//!
//! The pair state lives in the four-dimensional space spanned by
//! `|HH⟩, |HV⟩, |VH⟩, |VV⟩`, where the first letter is the polarization of
//! the photon in the `+` (high-wavelength) channel and the second that of the
//! photon in the `-` channel. Waveplates, fiber polarization controllers, and
//! the phase shifter act as 2×2 Jones matrices on one channel (or both);
//! polarizing beam splitters act as non-unitary projections whose surviving
//! squared norm is the joint detection probability.
//!
//! Angles cross the API in degrees and phases in radians, matching how the
//! corresponding knobs are labeled on the bench.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Linear polarization label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    /// Horizontal.
    H,
    /// Vertical.
    V,
}

impl Polarization {
    fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

/// Which channel an element acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// The `+` (high-wavelength) channel.
    Plus,
    /// The `-` (low-wavelength) channel.
    Minus,
    /// Both channels see the same element (e.g. a common fiber rotation).
    Both,
}

/// Joint polarization state of one photon pair.
///
/// Amplitudes are stored in the basis order `[HH, HV, VH, VV]`; the state is
/// not forced to unit norm, so projected states can carry their detection
/// probability in the norm.
///
/// Two classical numbers ride along with the four amplitudes: the pair's
/// accumulated H-versus-V group delay (`walkoff_ps`) and the extra
/// propagation delay of the `+` channel relative to the `-` channel
/// (`channel_delay_ps`). Keeping them as metadata instead of expanding the
/// Hilbert space with temporal modes is exact for the two-contribution states
/// produced here: the temporal-overlap correction is a single multiplicative
/// kernel, applied where the spectra are known.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonState {
    amplitudes: [Complex64; 4],
    walkoff_ps: f64,
    channel_delay_ps: f64,
}

impl BiphotonState {
    /// Basis labels in storage order, `(plus, minus)`.
    pub const BASIS: [(Polarization, Polarization); 4] = [
        (Polarization::H, Polarization::H),
        (Polarization::H, Polarization::V),
        (Polarization::V, Polarization::H),
        (Polarization::V, Polarization::V),
    ];

    /// Build a state from explicit amplitudes in `[HH, HV, VH, VV]` order,
    /// with no accumulated delays.
    pub fn from_amplitudes(amplitudes: [Complex64; 4]) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(CoreError::NonFinite("state amplitudes"));
        }
        Ok(Self {
            amplitudes,
            walkoff_ps: 0.0,
            channel_delay_ps: 0.0,
        })
    }

    /// Copy of `self` with new amplitudes and the delay metadata kept.
    fn with_amplitudes(&self, amplitudes: [Complex64; 4]) -> Self {
        Self {
            amplitudes,
            walkoff_ps: self.walkoff_ps,
            channel_delay_ps: self.channel_delay_ps,
        }
    }

    /// The entangled state `(|HV⟩ + e^{iφ}|VH⟩)/√2` produced by recombining
    /// the cross-polarized pair with relative phase `φ` (radians).
    pub fn psi_phi(phase_rad: f64) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amplitudes: [
                Complex64::new(0.0, 0.0),
                Complex64::new(r, 0.0),
                Complex64::from_polar(r, phase_rad),
                Complex64::new(0.0, 0.0),
            ],
            walkoff_ps: 0.0,
            channel_delay_ps: 0.0,
        }
    }

    /// The symmetric Bell state `(|HV⟩ + |VH⟩)/√2`.
    pub fn psi_plus() -> Self {
        Self::psi_phi(0.0)
    }

    /// The antisymmetric Bell state `(|HV⟩ - |VH⟩)/√2`.
    pub fn psi_minus() -> Self {
        Self::psi_phi(std::f64::consts::PI)
    }

    /// Separable state with the given single-photon Jones vectors in the `+`
    /// and `-` channels.
    pub fn product(plus: [Complex64; 2], minus: [Complex64; 2]) -> Result<Self> {
        Self::from_amplitudes([
            plus[0] * minus[0],
            plus[0] * minus[1],
            plus[1] * minus[0],
            plus[1] * minus[1],
        ])
    }

    /// Amplitude of the basis component with the `+` photon at `plus` and the
    /// `-` photon at `minus`.
    pub fn amplitude(&self, plus: Polarization, minus: Polarization) -> Complex64 {
        self.amplitudes[2 * plus.index() + minus.index()]
    }

    /// All four amplitudes in `[HH, HV, VH, VV]` order.
    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    /// Squared norm — the total probability carried by the state.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescale to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= 0.0 || !n.is_finite() {
            return Err(CoreError::ZeroProfile(
                "cannot normalize a zero-amplitude state".into(),
            ));
        }
        let s = n.sqrt().recip();
        let mut amplitudes = self.amplitudes;
        for a in &mut amplitudes {
            *a *= s;
        }
        Ok(self.with_amplitudes(amplitudes))
    }

    /// Accumulated group delay between the pair's H and V components, ps.
    pub fn walkoff_ps(&self) -> f64 {
        self.walkoff_ps
    }

    /// Accumulated extra delay of the `+` channel over the `-` channel, ps.
    pub fn channel_delay_ps(&self) -> f64 {
        self.channel_delay_ps
    }

    /// Same state with the H-versus-V delay set to `ps`.
    pub fn with_walkoff_ps(mut self, ps: f64) -> Self {
        self.walkoff_ps = ps;
        self
    }

    /// Same state with the channel delay set to `ps`.
    pub fn with_channel_delay_ps(mut self, ps: f64) -> Self {
        self.channel_delay_ps = ps;
        self
    }

    /// Squared overlap `|⟨other|self⟩|²` between unit-normalized versions of
    /// the two states.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let a = self.normalized()?;
        let b = other.normalized()?;
        let ip: Complex64 = a
            .amplitudes
            .iter()
            .zip(&b.amplitudes)
            .map(|(x, y)| y.conj() * x)
            .sum();
        Ok(ip.norm_sqr())
    }

    /// Phase of the `|VH⟩` amplitude relative to `|HV⟩` — the `φ` of a
    /// `ψ(φ)`-class state. Undefined (error) when either amplitude vanishes.
    pub fn relative_phase(&self) -> Result<f64> {
        let hv = self.amplitude(Polarization::H, Polarization::V);
        let vh = self.amplitude(Polarization::V, Polarization::H);
        if hv.norm() < 1e-12 || vh.norm() < 1e-12 {
            return Err(CoreError::InvalidParameter(
                "relative phase undefined: an |HV⟩ or |VH⟩ amplitude vanishes".into(),
            ));
        }
        Ok((vh * hv.conj()).arg())
    }
}

/// One element of the polarization chain.
#[derive(Debug, Clone, PartialEq)]
pub enum OpticalElement {
    /// Half-wave plate with its fast axis at `angle_deg` from horizontal.
    Hwp { angle_deg: f64, target: Target },
    /// Quarter-wave plate with its fast axis at `angle_deg` from horizontal.
    Qwp { angle_deg: f64, target: Target },
    /// Proper rotation of the polarization plane by `angle_deg` — the model
    /// of an ideal fiber polarization controller.
    Rotation { angle_deg: f64, target: Target },
    /// Arbitrary single-photon unitary, validated on application.
    Unitary {
        matrix: [[Complex64; 2]; 2],
        target: Target,
    },
    /// Birefringent phase shifter in the `+` channel: multiplies that
    /// channel's `V` amplitude by `e^{iφ}`. This is the knob that moves the
    /// pair state continuously between its symmetric (`φ = 0`) and
    /// antisymmetric (`φ = π`) forms.
    SbPhase { phase_rad: f64 },
    /// Polarizing beam splitter on each channel, keeping the `plus` output
    /// port on the `+` channel and the `minus` port on the `-` channel.
    /// Non-unitary: the surviving squared norm is the joint probability of
    /// one photon exiting each selected port.
    PbsProject {
        plus: Polarization,
        minus: Polarization,
    },
    /// Birefringent segment adding `delta_ps` to the pair's H-versus-V group
    /// delay: positive for the generating waveguide, negative for a
    /// compensation fiber spliced with its axes rotated by 90°. Amplitudes
    /// are untouched; the temporal-overlap penalty this delay causes is
    /// applied where the photon spectra are known.
    BirefringentDelay { delta_ps: f64 },
    /// Extra propagation delay of the `+` channel relative to the `-`
    /// channel (e.g. a fiber spool before recombination). Every surviving
    /// pair contribution carries exactly one photon per channel, so this
    /// multiplies all amplitudes by one common spectral phase and can never
    /// move a detection probability — it is tracked only so downstream code
    /// can verify that invariance.
    ChannelDelay { delta_ps: f64 },
}

fn rotation_matrix(angle_rad: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = angle_rad.sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

fn matmul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Jones matrix of a half-wave plate with fast axis at `angle_deg`.
pub fn hwp_matrix(angle_deg: f64) -> [[Complex64; 2]; 2] {
    let two_theta = 2.0 * angle_deg.to_radians();
    let (s, c) = two_theta.sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(-c, 0.0)],
    ]
}

/// Jones matrix of a quarter-wave plate with fast axis at `angle_deg`.
pub fn qwp_matrix(angle_deg: f64) -> [[Complex64; 2]; 2] {
    let theta = angle_deg.to_radians();
    let retarder = [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)],
    ];
    matmul(&matmul(&rotation_matrix(theta), &retarder), &rotation_matrix(-theta))
}

/// Largest absolute entry of `U†U - 1`, used to validate user-supplied
/// matrices.
fn unitarity_deviation(u: &[[Complex64; 2]; 2]) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let mut e = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                e += u[k][i].conj() * u[k][j];
            }
            if i == j {
                e -= 1.0;
            }
            dev = dev.max(e.norm());
        }
    }
    dev
}

const UNITARITY_TOLERANCE: f64 = 1e-9;

fn apply_one_sided(
    state: &BiphotonState,
    u: &[[Complex64; 2]; 2],
    target: Target,
) -> BiphotonState {
    let a = state.amplitudes();
    let apply_plus = |a: &[Complex64; 4]| -> [Complex64; 4] {
        [
            u[0][0] * a[0] + u[0][1] * a[2],
            u[0][0] * a[1] + u[0][1] * a[3],
            u[1][0] * a[0] + u[1][1] * a[2],
            u[1][0] * a[1] + u[1][1] * a[3],
        ]
    };
    let apply_minus = |a: &[Complex64; 4]| -> [Complex64; 4] {
        [
            u[0][0] * a[0] + u[0][1] * a[1],
            u[1][0] * a[0] + u[1][1] * a[1],
            u[0][0] * a[2] + u[0][1] * a[3],
            u[1][0] * a[2] + u[1][1] * a[3],
        ]
    };
    let amplitudes = match target {
        Target::Plus => apply_plus(a),
        Target::Minus => apply_minus(a),
        Target::Both => apply_minus(&apply_plus(a)),
    };
    state.with_amplitudes(amplitudes)
}

/// Apply a single element to the state.
///
/// Unitary elements preserve the norm; [`OpticalElement::PbsProject`] does
/// not — it zeroes every basis component not matching the selected output
/// ports, so the squared norm after projection is the joint detection
/// probability.
pub fn apply_element(state: &BiphotonState, element: &OpticalElement) -> Result<BiphotonState> {
    match element {
        OpticalElement::Hwp { angle_deg, target } => {
            if !angle_deg.is_finite() {
                return Err(CoreError::NonFinite("waveplate angle"));
            }
            Ok(apply_one_sided(state, &hwp_matrix(*angle_deg), *target))
        }
        OpticalElement::Qwp { angle_deg, target } => {
            if !angle_deg.is_finite() {
                return Err(CoreError::NonFinite("waveplate angle"));
            }
            Ok(apply_one_sided(state, &qwp_matrix(*angle_deg), *target))
        }
        OpticalElement::Rotation { angle_deg, target } => {
            if !angle_deg.is_finite() {
                return Err(CoreError::NonFinite("rotation angle"));
            }
            Ok(apply_one_sided(
                state,
                &rotation_matrix(angle_deg.to_radians()),
                *target,
            ))
        }
        OpticalElement::Unitary { matrix, target } => {
            if matrix
                .iter()
                .flatten()
                .any(|e| !e.re.is_finite() || !e.im.is_finite())
            {
                return Err(CoreError::NonFinite("unitary matrix entries"));
            }
            let deviation = unitarity_deviation(matrix);
            if deviation > UNITARITY_TOLERANCE {
                return Err(CoreError::NonUnitary { deviation });
            }
            Ok(apply_one_sided(state, matrix, *target))
        }
        OpticalElement::SbPhase { phase_rad } => {
            if !phase_rad.is_finite() {
                return Err(CoreError::NonFinite("phase shifter setting"));
            }
            let f = Complex64::from_polar(1.0, *phase_rad);
            let a = state.amplitudes();
            Ok(state.with_amplitudes([a[0], a[1], f * a[2], f * a[3]]))
        }
        OpticalElement::PbsProject { plus, minus } => {
            let mut amplitudes = [Complex64::new(0.0, 0.0); 4];
            let keep = 2 * plus.index() + minus.index();
            amplitudes[keep] = state.amplitudes()[keep];
            Ok(state.with_amplitudes(amplitudes))
        }
        OpticalElement::BirefringentDelay { delta_ps } => {
            if !delta_ps.is_finite() {
                return Err(CoreError::NonFinite("birefringent delay"));
            }
            let mut out = state.clone();
            out.walkoff_ps += delta_ps;
            Ok(out)
        }
        OpticalElement::ChannelDelay { delta_ps } => {
            if !delta_ps.is_finite() {
                return Err(CoreError::NonFinite("channel delay"));
            }
            let mut out = state.clone();
            out.channel_delay_ps += delta_ps;
            Ok(out)
        }
    }
}

/// Apply a chain of elements left to right.
pub fn apply_sequence(state: &BiphotonState, elements: &[OpticalElement]) -> Result<BiphotonState> {
    let mut current = state.clone();
    for element in elements {
        current = apply_element(&current, element)?;
    }
    Ok(current)
}

/// Joint probability of finding the `+` photon in port `plus` and the `-`
/// photon in port `minus` of the two beam splitters, together with the
/// normalized post-measurement state. For a zero-probability outcome the
/// collapsed state is `None`.
pub fn pbs_project(
    state: &BiphotonState,
    plus: Polarization,
    minus: Polarization,
) -> Result<(f64, Option<BiphotonState>)> {
    let projected = apply_element(state, &OpticalElement::PbsProject { plus, minus })?;
    let p = projected.norm_sqr();
    if p <= f64::EPSILON * f64::EPSILON {
        Ok((p, None))
    } else {
        Ok((p, Some(projected.normalized()?)))
    }
}

/// Analyzer chain for a joint polarization measurement along `alpha_deg` on
/// the `+` channel and `beta_deg` on the `-` channel: a half-wave plate at
/// half the analysis angle in front of each beam splitter maps the analysis
/// direction onto the transmitted (`H`) port.
pub fn analyzer_projector(alpha_deg: f64, beta_deg: f64) -> Vec<OpticalElement> {
    vec![
        OpticalElement::Hwp {
            angle_deg: alpha_deg / 2.0,
            target: Target::Plus,
        },
        OpticalElement::Hwp {
            angle_deg: beta_deg / 2.0,
            target: Target::Minus,
        },
        OpticalElement::PbsProject {
            plus: Polarization::H,
            minus: Polarization::H,
        },
    ]
}

/// Probability that both analyzers fire when set to `alpha_deg` and
/// `beta_deg` (transmitted ports on both channels).
pub fn joint_detection_probability(
    state: &BiphotonState,
    alpha_deg: f64,
    beta_deg: f64,
) -> Result<f64> {
    let out = apply_sequence(state, &analyzer_projector(alpha_deg, beta_deg))?;
    Ok(out.norm_sqr())
}
