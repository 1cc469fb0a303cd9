//! Physical constants, CODATA 2018 recommended values (NIST SP 961, May 2019).
//!
//! Everything is SI. Derived quantities are computed from the exact
//! defining constants so that identities such as `λ = h / (γ m v)` hold to
//! rounding error rather than to the digits of a tabulated value.

/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planck constant (J·s), exact.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Elementary charge (C), exact.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Electron rest mass (kg).
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

/// Electron rest energy m_e c² in eV (≈ 510 998.950 eV).
pub const ELECTRON_REST_ENERGY_EV: f64 =
    ELECTRON_MASS * SPEED_OF_LIGHT * SPEED_OF_LIGHT / ELEMENTARY_CHARGE;

/// h·c in eV·nm (≈ 1239.841 98 eV·nm).
pub const HC_EV_NM: f64 = PLANCK * SPEED_OF_LIGHT / ELEMENTARY_CHARGE * 1e9;

pub const NM: f64 = 1e-9;
pub const PM: f64 = 1e-12;
