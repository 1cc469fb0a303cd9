//! Exit wave of an illuminated hologram in the phase-object approximation.

use super::{profile_of_phase, CentralHole, HologramSpec};
use crate::beamline::BeamParams;
use crate::error::{Error, Result};
use crate::netpbm::Image8;
use crate::waveopt::{ComplexField, Grid};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::{PI, TAU};

/// Transmission function on an `n × n` grid of pitch `field_pitch_nm`.
///
/// Inside the patterned annulus the amplitude is 1 and the phase is
/// C_E·V_mip·t₀·t(ρ, θ). The central hole is transparent with zero phase or
/// opaque, per `spec.central_hole`. Outside the pattern radius the support
/// film is opaque.
pub fn transmission_function(
    spec: &HologramSpec,
    beam: &BeamParams,
    v_mip_v: f64,
    t0_nm: f64,
    n: usize,
    field_pitch_nm: f64,
) -> Result<ComplexField> {
    let setup = Setup::new(spec, beam, v_mip_v, t0_nm, n, field_pitch_nm)?;
    let threshold = spec.duty_threshold();
    Ok(ComplexField::from_fn(setup.grid, |x, y| {
        setup.in_pattern(x, y).unwrap_or_else(|| {
            let t = profile_of_phase(
                setup.ell * y.atan2(x) + setup.k * x,
                spec.profile,
                threshold,
            );
            Complex64::from_polar(1.0, setup.depth * t)
        })
    }))
}

/// Transmission function of a rasterized pattern: the thickness at each
/// field sample is that of the pattern pixel containing it, scaled to [0, 1]
/// by `maxval`. The pattern is centered on the grid with pixel pitch
/// `pattern_pitch_nm`; `spec` supplies the aperture and central hole.
#[allow(clippy::too_many_arguments)]
pub fn transmission_from_pattern(
    pattern: &Image8,
    pattern_pitch_nm: f64,
    spec: &HologramSpec,
    beam: &BeamParams,
    v_mip_v: f64,
    t0_nm: f64,
    n: usize,
    field_pitch_nm: f64,
) -> Result<ComplexField> {
    if !(pattern_pitch_nm > 0.0) {
        return Err(Error::Invalid {
            field: "pattern_pitch",
            reason: format!("{pattern_pitch_nm} nm must be positive"),
        });
    }
    if pattern.data.len() != pattern.width * pattern.height {
        return Err(Error::Domain(
            "pattern data does not match its dimensions".into(),
        ));
    }
    let setup = Setup::new(spec, beam, v_mip_v, t0_nm, n, field_pitch_nm)?;
    let (w, h) = (pattern.width as f64, pattern.height as f64);
    let scale = 1.0 / pattern.maxval.max(1) as f64;
    Ok(ComplexField::from_fn(setup.grid, |x, y| {
        setup.in_pattern(x, y).unwrap_or_else(|| {
            let col = (x / pattern_pitch_nm + w / 2.0).floor();
            let row = (h / 2.0 - y / pattern_pitch_nm).floor();
            let t = if col >= 0.0 && col < w && row >= 0.0 && row < h {
                pattern.data[row as usize * pattern.width + col as usize] as f64 * scale
            } else {
                0.0
            };
            Complex64::from_polar(1.0, setup.depth * t)
        })
    }))
}

/// Exit wave restricted to the diffraction orders the grid can carry.
#[derive(Debug, Clone)]
pub struct BandLimitedTransmission {
    pub field: ComplexField,
    /// Power of the unfiltered exit wave, nm².
    pub transmitted_power: f64,
    /// Highest order |m| kept.
    pub max_order: u32,
}

/// Transmission function expanded as Σ_m c_m·e^{i·m·f} over the orders whose
/// largest local wavenumber |m|·(k + |ℓ|/r_ex) stays below the grid Nyquist
/// limit π/pitch. Orders beyond it would leave the simulated far-field window;
/// sampling the groove profile pointwise would fold them back onto it.
pub fn transmission_function_band_limited(
    spec: &HologramSpec,
    beam: &BeamParams,
    v_mip_v: f64,
    t0_nm: f64,
    n: usize,
    field_pitch_nm: f64,
) -> Result<BandLimitedTransmission> {
    let setup = Setup::new(spec, beam, v_mip_v, t0_nm, n, field_pitch_nm)?;
    let k_max = setup.k + spec.order_ring_radius_k();
    let max_order = ((PI / field_pitch_nm) / k_max).ceil() as i64 - 1;
    let max_order = max_order.max(0) as usize;
    let coeffs = series_coefficients(spec, setup.depth, max_order);
    let field = ComplexField::from_fn(setup.grid, |x, y| {
        setup.in_pattern(x, y).unwrap_or_else(|| {
            let e = Complex64::from_polar(1.0, setup.ell * y.atan2(x) + setup.k * x);
            let mut acc = coeffs[max_order];
            let (mut up, mut down) = (e, e.conj());
            for m in 1..=max_order {
                acc += coeffs[max_order + m] * up + coeffs[max_order - m] * down;
                up *= e;
                down *= e.conj();
            }
            acc
        })
    });
    let (r_out2, r_in2) = (setup.r_out2, setup.r_in2);
    let g = setup.grid;
    let open_hole = spec.central_hole == CentralHole::Open;
    let pixels: usize = (0..n)
        .map(|i| {
            let y = g.coord(i);
            (0..n)
                .filter(|&j| {
                    let x = g.coord(j);
                    let r2 = x * x + y * y;
                    r2 <= r_out2 && (r2 >= r_in2 || open_hole)
                })
                .count()
        })
        .sum();
    Ok(BandLimitedTransmission {
        field,
        transmitted_power: pixels as f64 * field_pitch_nm * field_pitch_nm,
        max_order: max_order as u32,
    })
}

/// Fourier coefficients c_{−M..=M} of exp(i·depth·t(f)) over one period of f.
fn series_coefficients(spec: &HologramSpec, depth: f64, max_order: usize) -> Vec<Complex64> {
    const SAMPLES: usize = 1 << 14;
    let threshold = spec.duty_threshold();
    let mut buf: Vec<Complex64> = (0..SAMPLES)
        .map(|j| {
            let f = TAU * (j as f64 + 0.5) / SAMPLES as f64;
            Complex64::from_polar(1.0, depth * profile_of_phase(f, spec.profile, threshold))
        })
        .collect();
    FftPlanner::new()
        .plan_fft_forward(SAMPLES)
        .process(&mut buf);
    // buf[m] = Σ_j g(f_j)·e^{−i·m·2πj/N}; undo the half-sample offset
    let scale = 1.0 / SAMPLES as f64;
    let m = max_order as i64;
    (-m..=m)
        .map(|o| {
            let idx = o.rem_euclid(SAMPLES as i64) as usize;
            buf[idx] * scale * Complex64::from_polar(1.0, -PI * o as f64 / SAMPLES as f64)
        })
        .collect()
}

struct Setup {
    grid: Grid,
    depth: f64,
    r_out2: f64,
    r_in2: f64,
    hole: Complex64,
    ell: f64,
    k: f64,
}

impl Setup {
    fn new(
        spec: &HologramSpec,
        beam: &BeamParams,
        v_mip_v: f64,
        t0_nm: f64,
        n: usize,
        field_pitch_nm: f64,
    ) -> Result<Self> {
        spec.validate()?;
        if !(t0_nm >= 0.0 && t0_nm.is_finite()) {
            return Err(Error::Domain(format!(
                "thickness t0 = {t0_nm} nm must be non-negative"
            )));
        }
        if !v_mip_v.is_finite() {
            return Err(Error::Domain(format!(
                "mean inner potential {v_mip_v} V is not finite"
            )));
        }
        let grid = Grid::new(n, field_pitch_nm, beam.wavelength_pm)?;
        if (n as f64) * field_pitch_nm < 2.0 * spec.pattern_radius_nm() {
            return Err(Error::Domain(format!(
                "grid of {n} × {field_pitch_nm} nm cannot hold a pattern of radius {} µm",
                spec.pattern_radius_um
            )));
        }
        Ok(Self {
            grid,
            depth: beam.interaction_constant_rad_per_v_nm * v_mip_v * t0_nm,
            r_out2: spec.pattern_radius_nm().powi(2),
            r_in2: spec.exclusion_radius_nm().powi(2),
            hole: match spec.central_hole {
                CentralHole::Open => Complex64::new(1.0, 0.0),
                CentralHole::Blocked => Complex64::new(0.0, 0.0),
            },
            ell: spec.ell as f64,
            k: spec.k_carrier(),
        })
    }

    /// Transmission outside the patterned annulus, `None` inside it.
    #[inline]
    fn in_pattern(&self, x: f64, y: f64) -> Option<Complex64> {
        let r2 = x * x + y * y;
        if r2 > self.r_out2 {
            Some(Complex64::new(0.0, 0.0))
        } else if r2 < self.r_in2 {
            Some(self.hole)
        } else {
            None
        }
    }
}
