//! Physical constants and telecom-grid helpers.

/// Speed of light expressed in nm·THz (i.e. `λ[nm] · f[THz] = C_NM_THZ`).
pub const C_NM_THZ: f64 = 299_792.458;

/// Base frequency of the 100 GHz telecom channel grid, in THz.
/// Channel `n` sits at `190.0 + 0.1·n` THz.
pub const CHANNEL_GRID_BASE_THZ: f64 = 190.0;

/// Spacing of the telecom channel grid, in THz.
pub const CHANNEL_GRID_STEP_THZ: f64 = 0.1;

/// Center frequency of telecom channel `n` (100 GHz grid), in THz.
pub fn channel_frequency_thz(channel: u32) -> f64 {
    CHANNEL_GRID_BASE_THZ + CHANNEL_GRID_STEP_THZ * f64::from(channel)
}

/// Convert a vacuum wavelength in nm to an optical frequency in THz.
pub fn wavelength_to_frequency(lambda_nm: f64) -> f64 {
    C_NM_THZ / lambda_nm
}

/// Convert an optical frequency in THz to a vacuum wavelength in nm.
pub fn frequency_to_wavelength(f_thz: f64) -> f64 {
    C_NM_THZ / f_thz
}

/// Convert a small wavelength width (nm) around `lambda_nm` to a frequency
/// width in THz, to first order (`Δf = c·Δλ/λ²`).
pub fn wavelength_width_to_frequency(delta_lambda_nm: f64, lambda_nm: f64) -> f64 {
    C_NM_THZ * delta_lambda_nm / (lambda_nm * lambda_nm)
}

/// Convert a small frequency width (THz) around `f_thz` to a wavelength width
/// in nm, to first order.
pub fn frequency_width_to_wavelength(delta_f_thz: f64, f_thz: f64) -> f64 {
    C_NM_THZ * delta_f_thz / (f_thz * f_thz)
}
