//! Orbital-angular-momentum diagnostics and the knife-edge rotation
//! measurement.

mod fit;
mod knife_edge;
mod orders;
mod rings;
mod rotation;

pub use fit::{fit_mean_oam, MeanOamFit, Pchip};
pub use knife_edge::{
    beam_at_waist, default_annuli, knife_edge_run, knife_edge_scan, rotation_curve, BeamModel,
    CurveRow, Halo, HologramOrderBeam, KnifeEdgeGeometry, KnifeEdgeRun, RotationCurve, ScanPoint,
};
pub use orders::{diffraction_order_efficiencies, isolate_order, OrderEfficiencies, OrderPower};
pub use rotation::{measure_rotation, Annulus, RotationMeasurement, AZIMUTHAL_BINS};

use crate::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE, HBAR};
use crate::error::{Error, Result};
use crate::format::fmt_sig9;
use crate::waveopt::ComplexField;
use rings::RingSampler;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::io::Write;

/// Power per integer ℓ over a closed range.
#[derive(Debug, Clone, PartialEq)]
pub struct OamSpectrum {
    pub ell_min: i64,
    pub ell_max: i64,
    /// `power[i]` belongs to ℓ = ell_min + i. Sums to 1 unless the field is null.
    pub power: Vec<f64>,
    /// Fraction of the sampled azimuthal power that falls inside the range.
    pub coverage: f64,
    pub warning: Option<String>,
}

impl OamSpectrum {
    pub fn get(&self, ell: i64) -> f64 {
        if ell < self.ell_min || ell > self.ell_max {
            0.0
        } else {
            self.power[(ell - self.ell_min) as usize]
        }
    }

    pub fn ells(&self) -> impl Iterator<Item = i64> + '_ {
        self.ell_min..=self.ell_max
    }

    /// ℓ with the largest power.
    pub fn peak(&self) -> i64 {
        let mut best = self.ell_min;
        for ell in self.ells() {
            if self.get(ell) > self.get(best) {
                best = ell;
            }
        }
        best
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "ell,power_fraction")?;
        for ell in self.ells() {
            writeln!(out, "{ell},{}", fmt_sig9(self.get(ell)))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Azimuthal Fourier decomposition on rings about `center_nm` (the optical
/// axis when `None`).
///
/// a_ℓ(ρ) = (1/2π)∮u(ρ, θ)e^{−iℓθ}dθ is evaluated on rings 1 pixel apart from
/// 2 pixels out to the grid edge, and P_ℓ = Σ|a_ℓ(ρ)|²ρΔρ.
pub fn oam_spectrum(
    field: &ComplexField,
    ell_min: i64,
    ell_max: i64,
    center_nm: Option<(f64, f64)>,
) -> Result<OamSpectrum> {
    if ell_min > ell_max {
        return Err(Error::Domain(format!(
            "empty OAM range [{ell_min}, {ell_max}]"
        )));
    }
    let center = match center_nm {
        Some(c) => c,
        None => {
            let (cx, cy) = field.centroid_nm();
            if cx.hypot(cy) > field.pitch_nm {
                return Err(Error::Domain(format!(
                    "field centroid ({cx:.3}, {cy:.3}) nm is more than one pixel off axis; \
                     supply an explicit center"
                )));
            }
            (0.0, 0.0)
        }
    };
    let span = ell_min.unsigned_abs().max(ell_max.unsigned_abs()) as usize;
    let sampler = RingSampler::new(field, center, span)?;
    let bins = sampler.bins;
    let plan = FftPlanner::new().plan_fft_forward(bins);
    let mut by_bin = vec![0.0; bins];
    let mut ring = Vec::with_capacity(bins);
    for &r in &sampler.radii_px {
        sampler.sample_complex(field, r, &mut ring);
        plan.process(&mut ring);
        let norm = 1.0 / (bins * bins) as f64;
        for (acc, v) in by_bin.iter_mut().zip(&ring) {
            *acc += v.norm_sqr() * norm * r;
        }
    }
    let total: f64 = by_bin.iter().sum();
    let bin_of = |ell: i64| ell.rem_euclid(bins as i64) as usize;
    let mut power: Vec<f64> = (ell_min..=ell_max).map(|l| by_bin[bin_of(l)]).collect();
    let inside: f64 = power.iter().sum();
    let (coverage, warning) = if total > 0.0 {
        let c = inside / total;
        let w = (c < 0.99).then(|| {
            format!(
                "OAM range [{ell_min}, {ell_max}] holds only {:.2}% of the azimuthal power",
                100.0 * c
            )
        });
        (c, w)
    } else {
        (1.0, None)
    };
    if inside > 0.0 {
        power.iter_mut().for_each(|p| *p /= inside);
    }
    Ok(OamSpectrum {
        ell_min,
        ell_max,
        power,
        coverage,
        warning,
    })
}

/// ⟨L⟩ = Σℓ·P_ℓ in units of ħ.
pub fn mean_oam(spectrum: &OamSpectrum) -> f64 {
    spectrum.ells().map(|l| l as f64 * spectrum.get(l)).sum()
}

/// Radius of maximal azimuthally averaged intensity about the optical axis,
/// refined to sub-pixel precision with a parabola through the peak.
pub fn rim_radius(field: &ComplexField) -> Result<f64> {
    let profile = radial_profile(field)?;
    let (imax, &vmax) = profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::NotARing)?;
    if imax == 0 || !(vmax > 0.0) {
        return Err(Error::NotARing);
    }
    let mut r = imax as f64;
    if imax + 1 < profile.len() {
        let (a, b, c) = (profile[imax - 1], profile[imax], profile[imax + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            r += 0.5 * (a - c) / denom;
        }
    }
    Ok(r * field.pitch_nm)
}

/// Azimuthally averaged intensity at integer pixel radii 0, 1, 2, …
pub fn radial_profile(field: &ComplexField) -> Result<Vec<f64>> {
    let sampler = RingSampler::new(field, (0.0, 0.0), 0)?;
    let intensity = field.intensity();
    let max_r = sampler.max_radius_px.floor() as usize;
    let mut ring = Vec::with_capacity(sampler.bins);
    Ok((0..=max_r)
        .map(|r| {
            sampler.sample_real(&intensity, field.n, r as f64, &mut ring);
            ring.iter().sum::<f64>() / ring.len() as f64
        })
        .collect())
}

/// Rayleigh range π·r_rim²/(λ·ell_ref) in nm; `ell_ref = 1000` is the
/// operational definition used for the ℓ = 1000 beam.
pub fn rayleigh_range(r_rim_nm: f64, wavelength_pm: f64, ell_ref: i64) -> Result<f64> {
    if !(r_rim_nm > 0.0) || !(wavelength_pm > 0.0) || ell_ref <= 0 {
        return Err(Error::Domain(format!(
            "rayleigh range needs positive inputs, got r = {r_rim_nm} nm, λ = {wavelength_pm} pm, ell_ref = {ell_ref}"
        )));
    }
    Ok(PI * r_rim_nm * r_rim_nm / (wavelength_pm * 1e-3 * ell_ref as f64))
}

/// The two terms of the semiclassical rotation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalRotation {
    /// eB/2m·Δz/v.
    pub larmor_rad: f64,
    /// sign·L/(m r²)·Δz/v.
    pub orbital_rad: f64,
    pub total_rad: f64,
}

/// θ = (eB/2m ± L/(m r²))·Δz/v with the electron rest mass.
///
/// `sign = +1` makes positive L add to the rotation of a positive field B.
pub fn semiclassical_rotation(
    l_hbar: f64,
    r_nm: f64,
    b_tesla: f64,
    dz_nm: f64,
    velocity_m_per_s: f64,
    sign: i8,
) -> Result<SemiclassicalRotation> {
    semiclassical_rotation_with_mass(
        l_hbar,
        r_nm,
        b_tesla,
        dz_nm,
        velocity_m_per_s,
        sign,
        ELECTRON_MASS,
    )
}

/// As [`semiclassical_rotation`] with an explicit mass, e.g. γ·m_e for the
/// relativistic momentum p = γ·m·v.
pub fn semiclassical_rotation_with_mass(
    l_hbar: f64,
    r_nm: f64,
    b_tesla: f64,
    dz_nm: f64,
    velocity_m_per_s: f64,
    sign: i8,
    mass_kg: f64,
) -> Result<SemiclassicalRotation> {
    if !(r_nm > 0.0) {
        return Err(Error::Domain(format!(
            "radius must be positive, got {r_nm} nm"
        )));
    }
    if !(velocity_m_per_s > 0.0) {
        return Err(Error::Domain(format!(
            "velocity must be positive, got {velocity_m_per_s} m/s"
        )));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::Domain(format!("sign must be ±1, got {sign}")));
    }
    let t = dz_nm * 1e-9 / velocity_m_per_s;
    let r = r_nm * 1e-9;
    let larmor_rad = ELEMENTARY_CHARGE * b_tesla / (2.0 * mass_kg) * t;
    let orbital_rad = sign as f64 * l_hbar * HBAR / (mass_kg * r * r) * t;
    Ok(SemiclassicalRotation {
        larmor_rad,
        orbital_rad,
        total_rad: larmor_rad + orbital_rad,
    })
}
