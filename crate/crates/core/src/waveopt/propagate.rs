//! Free-space propagation: angular spectrum, paraxial Fresnel transfer
//! function, single-step Fresnel with output rescaling, and Fraunhofer.

use super::fft::{centered_unitary, signed_bin, Direction, Fft2};
use super::field::ComplexField;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact scalar transfer function exp(i(k_z − k)dz). Unitary on the grid.
    AngularSpectrum,
    /// Paraxial transfer function exp(−iπλ dz f²), same grid in and out.
    FresnelTransfer,
    /// Single-step Fresnel integral for long distances. Output pitch is
    /// λ·dz/(n·pitch).
    FresnelRescaled,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::AngularSpectrum => "angular_spectrum",
            Method::FresnelTransfer => "fresnel_transfer",
            Method::FresnelRescaled => "fresnel_rescaled",
        }
    }
}

/// A validated propagation step for one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPlan {
    pub dz_nm: f64,
    pub method: Method,
    /// Output pitch / input pitch, for the rescaling method only.
    pub output_rescale: Option<f64>,
}

/// Largest |dz| for which the transfer-function phase changes by less than
/// π between adjacent Fourier samples: n·pitch²/λ.
pub fn max_transfer_dz_nm(field: &ComplexField) -> f64 {
    field.n as f64 * field.pitch_nm * field.pitch_nm / field.wavelength_nm()
}

impl PropagationPlan {
    pub fn new(field: &ComplexField, dz_nm: f64, method: Method) -> Result<Self> {
        if !dz_nm.is_finite() {
            return Err(Error::Domain(format!("dz must be finite, got {dz_nm}")));
        }
        let limit = max_transfer_dz_nm(field);
        if field.pitch_nm < field.wavelength_nm() {
            return Err(Error::Sampling {
                reason: format!(
                    "pitch {} nm is below the wavelength; evanescent components on grid",
                    field.pitch_nm
                ),
                max_dz_nm: 0.0,
            });
        }
        match method {
            Method::AngularSpectrum | Method::FresnelTransfer => {
                if dz_nm.abs() > limit {
                    return Err(Error::Sampling {
                        reason: format!(
                            "|dz| = {:.6e} nm aliases the {} transfer function",
                            dz_nm.abs(),
                            method.name()
                        ),
                        max_dz_nm: limit,
                    });
                }
                Ok(Self {
                    dz_nm,
                    method,
                    output_rescale: None,
                })
            }
            Method::FresnelRescaled => {
                if dz_nm < limit {
                    return Err(Error::Sampling {
                        reason: format!(
                            "dz = {dz_nm:.6e} nm undersamples the input chirp of single-step Fresnel; \
                             it needs dz ≥ {limit:.6e} nm (use a transfer-function method below that)"
                        ),
                        max_dz_nm: limit,
                    });
                }
                let out_pitch = field.wavelength_nm() * dz_nm / (field.n as f64 * field.pitch_nm);
                Ok(Self {
                    dz_nm,
                    method,
                    output_rescale: Some(out_pitch / field.pitch_nm),
                })
            }
        }
    }

    /// The default propagator: angular spectrum.
    pub fn angular_spectrum(field: &ComplexField, dz_nm: f64) -> Result<Self> {
        Self::new(field, dz_nm, Method::AngularSpectrum)
    }
}

/// Propagate by `plan.dz_nm`. Returns a new field; the z tag advances by dz.
pub fn fresnel_propagate(field: &ComplexField, plan: &PropagationPlan) -> Result<ComplexField> {
    // re-validate in case the plan was built for another grid
    let checked = PropagationPlan::new(field, plan.dz_nm, plan.method)?;
    if plan.dz_nm == 0.0 {
        return Ok(field.clone());
    }
    match checked.method {
        Method::AngularSpectrum | Method::FresnelTransfer => {
            Ok(transfer(field, checked.dz_nm, checked.method))
        }
        Method::FresnelRescaled => Ok(single_step(field, checked.dz_nm)),
    }
}

fn transfer(field: &ComplexField, dz: f64, method: Method) -> ComplexField {
    let n = field.n;
    let lambda = field.wavelength_nm();
    let k = 2.0 * PI / lambda;
    let dk = 2.0 * PI / (n as f64 * field.pitch_nm);
    let kx: Vec<f64> = (0..n).map(|i| signed_bin(i, n) * dk).collect();

    let mut data = field.samples.clone();
    Fft2::new(n, Direction::Forward).process(&mut data);
    let norm = 1.0 / (n * n) as f64;
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let ky = kx[i];
        for (j, v) in row.iter_mut().enumerate() {
            let kt2 = kx[j] * kx[j] + ky * ky;
            let phase = match method {
                // k_z − k = −k_t²/(k + k_z), free of cancellation
                Method::AngularSpectrum => {
                    let kz = (k * k - kt2).max(0.0).sqrt();
                    -kt2 / (k + kz) * dz
                }
                _ => -kt2 / (2.0 * k) * dz,
            };
            *v *= Complex64::from_polar(norm, phase);
        }
    });
    Fft2::new(n, Direction::Inverse).process(&mut data);
    ComplexField {
        samples: data,
        z_nm: field.z_nm + dz,
        ..field.clone_metric()
    }
}

fn single_step(field: &ComplexField, dz: f64) -> ComplexField {
    let n = field.n;
    let lambda = field.wavelength_nm();
    let p1 = field.pitch_nm;
    let p2 = lambda * dz / (n as f64 * p1);
    let g = field.grid();
    let a1 = PI / (lambda * dz);
    let mut data = field.samples.clone();
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let y = g.coord(i);
        for (j, v) in row.iter_mut().enumerate() {
            let x = g.coord(j);
            *v *= Complex64::from_polar(1.0, a1 * (x * x + y * y));
        }
    });
    centered_unitary(&mut data, n, Direction::Forward);
    // −i from 1/(iλz); the DFT is unitary and the pitch change keeps Σ|u|²·pitch².
    let amp = p1 / p2;
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let y = (i as f64 - (n / 2) as f64) * p2;
        for (j, v) in row.iter_mut().enumerate() {
            let x = (j as f64 - (n / 2) as f64) * p2;
            *v *= Complex64::from_polar(amp, a1 * (x * x + y * y) - PI / 2.0);
        }
    });
    ComplexField {
        samples: data,
        pitch_nm: p2,
        z_nm: field.z_nm + dz,
        ..field.clone_metric()
    }
}

/// Nominal camera length used when none is given (1 m).
pub const NOMINAL_CAMERA_LENGTH_NM: f64 = 1e9;

/// Far-field (Fraunhofer) pattern as a centered unitary DFT.
///
/// The output pitch is λ·L/(n·pitch) for camera length L, so an output
/// sample at index offset m corresponds to the scattering angle
/// m·λ/(n·pitch). Total power Σ|u|²·pitch² is preserved.
pub fn fraunhofer(field: &ComplexField, camera_length_nm: f64) -> Result<ComplexField> {
    if !(camera_length_nm > 0.0) {
        return Err(Error::Domain(format!(
            "camera length must be positive, got {camera_length_nm}"
        )));
    }
    let n = field.n;
    let out_pitch = field.wavelength_nm() * camera_length_nm / (n as f64 * field.pitch_nm);
    let mut data = field.samples.clone();
    centered_unitary(&mut data, n, Direction::Forward);
    let s = field.pitch_nm / out_pitch;
    data.par_iter_mut().for_each(|v| *v *= s);
    Ok(ComplexField {
        samples: data,
        pitch_nm: out_pitch,
        camera_length_nm: Some(camera_length_nm),
        ..field.clone_metric()
    })
}

/// Inverse of [`fraunhofer`]: back to the object plane.
pub fn inverse_fraunhofer(far: &ComplexField) -> Result<ComplexField> {
    let l = far
        .camera_length_nm
        .ok_or_else(|| Error::Domain("field carries no camera length".to_string()))?;
    let n = far.n;
    let near_pitch = far.wavelength_nm() * l / (n as f64 * far.pitch_nm);
    let mut data = far.samples.clone();
    centered_unitary(&mut data, n, Direction::Inverse);
    let s = far.pitch_nm / near_pitch;
    data.par_iter_mut().for_each(|v| *v *= s);
    Ok(ComplexField {
        samples: data,
        pitch_nm: near_pitch,
        camera_length_nm: None,
        ..far.clone_metric()
    })
}

/// Scattering angle per far-field sample, in rad.
pub fn angular_pitch_rad(far: &ComplexField) -> Option<f64> {
    far.camera_length_nm.map(|l| far.pitch_nm / l)
}

impl ComplexField {
    pub(crate) fn clone_metric(&self) -> ComplexField {
        ComplexField {
            n: self.n,
            pitch_nm: self.pitch_nm,
            wavelength_pm: self.wavelength_pm,
            z_nm: self.z_nm,
            camera_length_nm: self.camera_length_nm,
            samples: Vec::new(),
        }
    }
}
