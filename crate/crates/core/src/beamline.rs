//! Relativistic electron-beam quantities and closed-form beam physics.
//!
//! Lengths cross the API in the unit named by the function (pm for
//! wavelengths, nm for lengths); energies in eV.

use crate::constants::{
    ELECTRON_MASS, ELECTRON_REST_ENERGY_EV, ELEMENTARY_CHARGE, HBAR, HC_EV_NM, SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn check_voltage(voltage_v: f64) -> Result<()> {
    if voltage_v.is_finite() && voltage_v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "accelerating voltage must be positive, got {voltage_v} V"
        )))
    }
}

/// Relativistic de Broglie wavelength in pm.
pub fn electron_wavelength(voltage_v: f64) -> Result<f64> {
    check_voltage(voltage_v)?;
    let e = voltage_v;
    let pc_ev = (e * (e + 2.0 * ELECTRON_REST_ENERGY_EV)).sqrt();
    Ok(HC_EV_NM / pc_ev * 1e3)
}

/// Lorentz factor γ = 1 + eV/(m c²).
pub fn lorentz_factor(voltage_v: f64) -> Result<f64> {
    check_voltage(voltage_v)?;
    Ok(1.0 + voltage_v / ELECTRON_REST_ENERGY_EV)
}

/// Electron speed in m/s.
pub fn electron_velocity(voltage_v: f64) -> Result<f64> {
    check_voltage(voltage_v)?;
    // β = √(t(t+2))/(1+t) with t = eV/E₀; avoids 1 - 1/γ² cancellation at low voltage.
    let t = voltage_v / ELECTRON_REST_ENERGY_EV;
    let beta = (t * (t + 2.0)).sqrt() / (1.0 + t);
    Ok(SPEED_OF_LIGHT * beta)
}

/// Lorentz factor of an electron moving at `velocity_m_per_s`.
pub fn lorentz_factor_from_velocity(velocity_m_per_s: f64) -> f64 {
    let beta = velocity_m_per_s / SPEED_OF_LIGHT;
    1.0 / ((1.0 - beta) * (1.0 + beta)).sqrt()
}

/// Thickness-to-phase interaction constant C_E in rad·V⁻¹·nm⁻¹.
///
/// A specimen of mean inner potential `V` and thickness `t` imparts a phase
/// `C_E · V · t`.
pub fn interaction_constant(voltage_v: f64) -> Result<f64> {
    let lambda_nm = electron_wavelength(voltage_v)? * 1e-3;
    let e0 = ELECTRON_REST_ENERGY_EV;
    let e = voltage_v;
    Ok(2.0 * PI / (lambda_nm * voltage_v) * (e0 + e) / (2.0 * e0 + e))
}

/// Larmor angular frequency Ω = eB/2m in rad/s, signed with `b_tesla`.
pub fn larmor_frequency(b_tesla: f64) -> f64 {
    ELEMENTARY_CHARGE * b_tesla / (2.0 * ELECTRON_MASS)
}

/// Transverse energy of the Landau state (p, ℓ) in eV:
/// ε = ħΩ(2p + ℓ + |ℓ| + 1).
pub fn landau_energy(p: i64, ell: i64, b_tesla: f64) -> Result<f64> {
    if p < 0 {
        return Err(Error::Domain(format!(
            "radial index p must be non-negative, got {p}"
        )));
    }
    let quanta = (2 * p + ell + ell.abs() + 1) as f64;
    let hbar_omega_ev = HBAR * larmor_frequency(b_tesla) / ELEMENTARY_CHARGE;
    Ok(hbar_omega_ev * quanta)
}

/// Axial distance in nm between successive passes of one helical wavefront
/// sheet through the same azimuth: |ℓ|·λ.
pub fn wavefront_step_length(ell: i64, wavelength_pm: f64) -> Result<f64> {
    if ell == 0 {
        return Err(Error::Domain(
            "ell = 0 has no helical wavefront".to_string(),
        ));
    }
    Ok(ell.unsigned_abs() as f64 * wavelength_pm * 1e-3)
}

/// Electron beam constants, all derived from the accelerating voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    pub accelerating_voltage_v: f64,
    pub wavelength_pm: f64,
    pub velocity_m_per_s: f64,
    pub interaction_constant_rad_per_v_nm: f64,
}

impl BeamParams {
    pub fn new(accelerating_voltage_v: f64) -> Result<Self> {
        Ok(Self {
            accelerating_voltage_v,
            wavelength_pm: electron_wavelength(accelerating_voltage_v)?,
            velocity_m_per_s: electron_velocity(accelerating_voltage_v)?,
            interaction_constant_rad_per_v_nm: interaction_constant(accelerating_voltage_v)?,
        })
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_pm * 1e-3
    }

    pub fn lorentz_factor(&self) -> f64 {
        1.0 + self.accelerating_voltage_v / ELECTRON_REST_ENERGY_EV
    }

    /// Thickness in nm that gives a phase of `phase_rad` in a material of
    /// mean inner potential `v_mip_v`.
    pub fn thickness_for_phase(&self, phase_rad: f64, v_mip_v: f64) -> Result<f64> {
        if !(v_mip_v > 0.0) {
            return Err(Error::Domain(format!(
                "mean inner potential must be positive, got {v_mip_v} V"
            )));
        }
        Ok(phase_rad / (self.interaction_constant_rad_per_v_nm * v_mip_v))
    }
}

/// Axial magnetic field of a lens. The sign encodes direction along the optic axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LensField {
    pub b_tesla: f64,
}

impl LensField {
    pub fn new(b_tesla: f64) -> Result<Self> {
        if !b_tesla.is_finite() {
            return Err(Error::Domain("lens field must be finite".to_string()));
        }
        Ok(Self { b_tesla })
    }

    pub fn larmor_frequency(&self) -> f64 {
        larmor_frequency(self.b_tesla)
    }
}
