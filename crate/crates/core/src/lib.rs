//! Numerical model of a fiber-coupled polarization-entangled photon-pair
//! source and the measurement chain around it.
//!
//! The source is a type-II parametric down-converter pumped by a monochromatic
//! laser: it emits cross-polarized photon pairs whose optical frequencies are
//! strictly anticorrelated about half the pump frequency. A pair of
//! complementary telecom demultiplexing filters splits each pair into a
//! high-wavelength (`+`) and a low-wavelength (`-`) channel, which turns the
//! cross-polarized pair into a polarization-entangled two-photon state. The
//! crate models, in order:
//!
//! * [`spectra`] — emission envelopes, filter transmissions, the
//!   frequency-anticorrelated joint spectrum, and the spectral overlap kernel
//!   that controls two-photon interference;
//! * [`polarization`] — the two-photon polarization state and the wave plates,
//!   phase shifters, and birefringent delays acting on it;
//! * [`interference`] — coincidence probabilities and delay scans
//!   (Hong-Ou-Mandel dips and peaks, birefringence compensation);
//! * [`detection`] — detector efficiency and dark counts, expected singles /
//!   coincidence / accidental rates, seeded Poisson count records, raw and
//!   noise-corrected visibilities;
//! * [`bell`] — polarization correlations, analyzer fringes, and the CHSH
//!   Bell parameter.
//!
//! Unit conventions used throughout: optical frequencies in THz, delays in
//! ps (THz and ps are conjugate: a phase is `2π · f_THz · τ_ps`), wavelengths
//! in nm, filter widths in GHz, angles in degrees at API boundaries, count
//! rates in 1/s.

pub mod bell;
pub mod constants;
pub mod detection;
pub mod error;
pub mod fit;
pub mod interference;
pub mod io;
pub mod polarization;
pub mod scan;
pub mod spectra;
pub mod streams;

pub use bell::{BellRun, BellSettings, ChshAngles, ChshEstimate, Correlation, FringeConfig};
pub use detection::{
    CountRecord, CountingConfig, DetectorMode, DetectorParams, ExpectedRates, VisibilityPair,
};
pub use error::CoreError;
pub use interference::{DelayScanRange, HomConfig, KernelProfiles};
pub use polarization::{BiphotonState, OpticalElement, Polarization, Target};
pub use scan::{FitModel, ScanCurve, ScanFit, ScanPoint, ScanResult};
pub use spectra::{BandRole, FilterSpec, FrequencyGrid, SourceShape, SpectralProfile};
