//! Unit conventions.
//!
//! Frequencies and energies are wavenumbers (cm^-1), times are femtoseconds,
//! temperatures are kelvin. Every conversion between them goes through
//! [`PhysicalConstants`].

use std::f64::consts::PI;

/// Speed of light in cm/fs.
const SPEED_OF_LIGHT_CM_PER_FS: f64 = 2.997_924_58e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Second radiation constant hc/k_B in cm K.
    pub radiation_constant_c2: f64,
    /// Phase accumulated per fs by a 1 cm^-1 oscillation (2 pi c), rad/fs.
    pub phase_per_cm1_fs: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    radiation_constant_c2: 1.438_776_877,
    phase_per_cm1_fs: 2.0 * PI * SPEED_OF_LIGHT_CM_PER_FS,
};

/// Phase factor kappa such that exp(-i kappa omega t) with omega in cm^-1 and t in fs.
#[inline]
pub fn kappa() -> f64 {
    CONSTANTS.phase_per_cm1_fs
}

/// Inverse temperature in cm (i.e. (cm^-1)^-1).
#[inline]
pub fn beta_from_kelvin(temperature: f64) -> f64 {
    CONSTANTS.radiation_constant_c2 / temperature
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_match_codata() {
        assert!((CONSTANTS.radiation_constant_c2 - 1.438_776_9).abs() < 1e-7);
        assert!((CONSTANTS.phase_per_cm1_fs - 1.883_651_567_3e-4).abs() < 1e-13);
    }

    #[test]
    fn beta_at_room_temperature() {
        let beta = beta_from_kelvin(300.0);
        assert!((1.0 / beta - 208.5).abs() < 0.1);
    }
}
