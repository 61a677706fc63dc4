//! Physical constants (CODATA 2018 exact/recommended values) and the unit
//! conversions used at configuration boundaries. Everything inside the crate
//! is SI.

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const AMU: f64 = 1.660_539_066_60e-27;
/// 1 Debye in C·m.
pub const DEBYE: f64 = 1e-21 / SPEED_OF_LIGHT;
/// Coulomb constant 1/(4πε₀).
pub const COULOMB_K: f64 = 1.0 / (4.0 * std::f64::consts::PI * EPSILON_0);

pub const GHZ: f64 = 1e9;
pub const MHZ: f64 = 1e6;
pub const KHZ: f64 = 1e3;

/// Polarizability volume in Å³ to SI polarizability (C·m²·V⁻¹).
pub fn polarizability_from_a3(volume_a3: f64) -> f64 {
    4.0 * std::f64::consts::PI * EPSILON_0 * volume_a3 * 1e-30
}

/// SI polarizability (C·m²·V⁻¹) to polarizability volume in Å³.
pub fn polarizability_to_a3(alpha: f64) -> f64 {
    alpha / (4.0 * std::f64::consts::PI * EPSILON_0 * 1e-30)
}

/// Temperature equivalent of a frequency, h·f/k_B.
pub fn hz_to_kelvin(f: f64) -> f64 {
    PLANCK * f / BOLTZMANN
}

pub fn kelvin_to_hz(t: f64) -> f64 {
    BOLTZMANN * t / PLANCK
}
