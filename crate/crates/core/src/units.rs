//! Physical constants (exact SI values) and unit converters.
//!
//! Quantities are stored in SI internally: hertz for frequencies, kelvin for
//! temperatures, joules for energies. Gap energies cross the API in μeV.

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Impedance of free space, Ω.
pub const Z0_FREE_SPACE: f64 = 376.73;
/// Single-spin density of states at the Fermi level of aluminium, (J·m³)⁻¹.
pub const NU0_ALUMINIUM: f64 = 0.73e47;
/// Default pad gap Δ₀ of thick aluminium films, μeV.
pub const DELTA0_DEFAULT_UEV: f64 = 180.0;

/// One microelectronvolt in joules.
pub const UEV: f64 = 1e-6 * ELEMENTARY_CHARGE;

pub const GHZ: f64 = 1e9;
pub const MHZ: f64 = 1e6;
pub const MK: f64 = 1e-3;
pub const US: f64 = 1e-6;

#[inline]
pub fn uev_to_joule(e_uev: f64) -> f64 {
    e_uev * UEV
}

#[inline]
pub fn joule_to_uev(e: f64) -> f64 {
    e / UEV
}

/// Frequency E/h of an energy given in μeV. 1 μeV ≈ 0.241 798 9 GHz.
#[inline]
pub fn uev_to_hz(e_uev: f64) -> f64 {
    e_uev * UEV / PLANCK
}

#[inline]
pub fn hz_to_uev(f: f64) -> f64 {
    f * PLANCK / UEV
}

#[inline]
pub fn hz_to_joule(f: f64) -> f64 {
    f * PLANCK
}

/// Thermal energy k_B·T in joules.
#[inline]
pub fn kt_joule(t_k: f64) -> f64 {
    BOLTZMANN * t_k
}

/// Thermal energy k_B·T expressed as a frequency k_B·T/h.
#[inline]
pub fn kt_hz(t_k: f64) -> f64 {
    BOLTZMANN * t_k / PLANCK
}

#[inline]
pub fn angular(f_hz: f64) -> f64 {
    std::f64::consts::TAU * f_hz
}
