//! Unit conventions shared by every module.
//!
//! Angular frequency is carried in rad/ps and lengths in μm, so wavenumbers
//! come out in rad/μm and group slowness in ps/μm.

use std::f64::consts::PI;

/// Speed of light in vacuum, μm/ps.
pub const SPEED_OF_LIGHT: f64 = 299.792_458;

/// Angular frequency (rad/ps) of light with the given vacuum wavelength (nm).
pub fn omega_from_wavelength_nm(wavelength_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (wavelength_nm * 1e-3)
}

/// Vacuum wavelength (nm) of light with the given angular frequency (rad/ps).
pub fn wavelength_nm_from_omega(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega * 1e3
}

/// Vacuum wavelength (μm) of light with the given angular frequency (rad/ps).
pub fn wavelength_um_from_omega(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega
}

/// Angular-frequency width of a band of `width_nm` centred on `center_nm`,
/// taken as the exact frequency difference between the two band edges.
pub fn omega_width_from_wavelength(center_nm: f64, width_nm: f64) -> f64 {
    omega_from_wavelength_nm(center_nm - 0.5 * width_nm)
        - omega_from_wavelength_nm(center_nm + 0.5 * width_nm)
}
