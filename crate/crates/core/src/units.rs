//! Physical constants and the handful of unit conversions used at the
//! input boundary.
//!
//! Everything inside the crate is SI. Dipole strengths may be given in
//! Debye² and temperatures in Kelvin; they are converted once, on load.

use crate::{Error, Result};

/// CODATA-2018 constant set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Speed of light in vacuum (m/s).
    pub c: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Vacuum permeability (H/m).
    pub mu0: f64,
    /// One Debye in C·m.
    pub debye: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    c: 299_792_458.0,
    eps0: 8.854_187_812_8e-12,
    mu0: 1.256_637_062_12e-6,
    debye: 3.335_64e-30,
};

pub const HBAR: f64 = CONSTANTS.hbar;
pub const K_B: f64 = CONSTANTS.k_b;
pub const C: f64 = CONSTANTS.c;
pub const EPS0: f64 = CONSTANTS.eps0;
pub const MU0: f64 = CONSTANTS.mu0;
pub const DEBYE: f64 = CONSTANTS.debye;

/// `k_B T / ħ` in rad/s.
pub fn thermal_frequency(temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    Ok(K_B * temperature / HBAR)
}

/// Spacing of the Matsubara ladder, `2π k_B T / ħ`.
pub fn matsubara_spacing(temperature: f64) -> Result<f64> {
    Ok(2.0 * std::f64::consts::PI * thermal_frequency(temperature)?)
}

pub fn debye2_to_si(d2_debye2: f64) -> f64 {
    d2_debye2 * DEBYE * DEBYE
}

pub fn si_to_debye2(d2: f64) -> f64 {
    d2 / (DEBYE * DEBYE)
}

pub(crate) fn check_temperature(temperature: f64) -> Result<()> {
    if temperature.is_finite() && temperature >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "temperature must be finite and non-negative, got {temperature} K"
        )))
    }
}
