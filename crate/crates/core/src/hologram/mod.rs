//! Off-axis pitchfork phase holograms.
//!
//! The grating phase is f(ρ, θ) = ℓθ + ρ·k·cos θ with k = 2π/d_c and θ
//! measured from the carrier direction (+x). In Cartesian form that is
//! f = ℓ·atan2(y, x) + k·x, which is what the rasterizer evaluates.

mod fabric;
mod raster;
mod transmission;

pub use fabric::{fabricability_report, FabricabilityReport, HistogramBin, SpacingSample};
pub use raster::{
    raster_dimensions, rasterize, rasterize_into, rasterize_with, write_pattern, PatternBitmap,
    PatternFormat, PatternOutput, RasterOptions, DEFAULT_TILE_SIZE,
};
pub use transmission::{
    transmission_from_pattern, transmission_function, transmission_function_band_limited,
    BandLimitedTransmission,
};

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrooveProfile {
    #[default]
    Rectangular,
    Sinusoidal,
    Blazed,
}

impl GrooveProfile {
    /// Number of thickness levels written to a bitmap.
    pub fn levels(&self) -> u16 {
        match self {
            GrooveProfile::Rectangular => 2,
            _ => 256,
        }
    }
}

/// What fills the unpatterned central disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralHole {
    /// Transparent, zero thickness.
    #[default]
    Open,
    /// Covered by an opaque layer.
    Blocked,
}

fn default_duty() -> f64 {
    0.5
}

fn default_phase_depth() -> f64 {
    PI
}

/// Geometry and groove parameters of a pitchfork hologram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HologramSpec {
    /// Topological charge imprinted on the +1 order.
    pub ell: i64,
    /// d_c = 2π/k_carrier.
    pub carrier_period_nm: f64,
    pub pattern_radius_um: f64,
    #[serde(default)]
    pub exclusion_radius_um: f64,
    /// Fraction of a period occupied by the thick level (rectangular only).
    #[serde(default = "default_duty")]
    pub duty: f64,
    #[serde(default)]
    pub profile: GrooveProfile,
    /// Target peak-to-trough phase.
    #[serde(default = "default_phase_depth")]
    pub phase_depth_rad: f64,
    pub pixel_pitch_nm: f64,
    #[serde(default)]
    pub central_hole: CentralHole,
}

impl HologramSpec {
    /// A 50% rectangular π-phase hologram with an open center.
    pub fn new(
        ell: i64,
        carrier_period_nm: f64,
        pattern_radius_um: f64,
        exclusion_radius_um: f64,
        pixel_pitch_nm: f64,
    ) -> Self {
        Self {
            ell,
            carrier_period_nm,
            pattern_radius_um,
            exclusion_radius_um,
            duty: 0.5,
            profile: GrooveProfile::Rectangular,
            phase_depth_rad: PI,
            pixel_pitch_nm,
            central_hole: CentralHole::Open,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.carrier_period_nm) {
            return Err(invalid("carrier_period", "must be positive"));
        }
        if !pos(self.pattern_radius_um) {
            return Err(invalid("pattern_radius", "must be positive"));
        }
        if !(self.exclusion_radius_um.is_finite() && self.exclusion_radius_um >= 0.0) {
            return Err(invalid("exclusion_radius", "must be non-negative"));
        }
        if self.exclusion_radius_um >= self.pattern_radius_um {
            return Err(invalid(
                "exclusion_radius",
                format!(
                    "{} µm must be smaller than pattern_radius {} µm",
                    self.exclusion_radius_um, self.pattern_radius_um
                ),
            ));
        }
        if !pos(self.pixel_pitch_nm) {
            return Err(invalid("pixel_pitch", "must be positive"));
        }
        if self.pixel_pitch_nm >= self.carrier_period_nm / 4.0 {
            return Err(invalid(
                "pixel_pitch",
                format!(
                    "{} nm gives fewer than 4 samples per carrier period of {} nm",
                    self.pixel_pitch_nm, self.carrier_period_nm
                ),
            ));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(invalid("duty", format!("{} is outside (0, 1)", self.duty)));
        }
        if !(self.phase_depth_rad > 0.0 && self.phase_depth_rad <= TAU) {
            return Err(invalid(
                "phase_depth",
                format!("{} rad is outside (0, 2π]", self.phase_depth_rad),
            ));
        }
        Ok(())
    }

    pub fn k_carrier(&self) -> f64 {
        TAU / self.carrier_period_nm
    }

    pub fn pattern_radius_nm(&self) -> f64 {
        self.pattern_radius_um * 1e3
    }

    pub fn exclusion_radius_nm(&self) -> f64 {
        self.exclusion_radius_um * 1e3
    }

    /// Threshold on sin f for the rectangular profile; exactly 0 at 50% duty.
    pub(crate) fn duty_threshold(&self) -> f64 {
        if self.duty == 0.5 {
            0.0
        } else {
            (PI * self.duty).cos()
        }
    }

    /// Largest azimuthal wavenumber |ℓ|/ρ present in the patterned annulus,
    /// which sets the radius of each diffraction order in k-space.
    pub fn order_ring_radius_k(&self) -> f64 {
        let rho_min = self.exclusion_radius_nm().max(self.pixel_pitch_nm);
        self.ell.unsigned_abs() as f64 / rho_min
    }
}

/// f(ρ, θ) = ℓθ + ρ·k·cos θ.
pub fn grating_phase(rho_nm: f64, theta_rad: f64, spec: &HologramSpec) -> f64 {
    spec.ell as f64 * theta_rad + rho_nm * spec.k_carrier() * theta_rad.cos()
}

/// Thickness as a fraction of t₀ for a given grating phase.
#[inline]
pub fn profile_of_phase(f: f64, profile: GrooveProfile, threshold: f64) -> f64 {
    match profile {
        GrooveProfile::Rectangular => {
            let s = f.sin();
            if threshold == 0.0 {
                // ½(1 + sign(sin f)), sign(0) = 0; zeros within rounding of f count as 0
                let s = if s.abs() <= 4.0 * f64::EPSILON * f.abs().max(1.0) {
                    0.0
                } else {
                    s
                };
                0.5 * (1.0 + sign(s))
            } else if s > threshold {
                1.0
            } else {
                0.0
            }
        }
        GrooveProfile::Sinusoidal => 0.5 * (1.0 + f.sin()),
        GrooveProfile::Blazed => f.rem_euclid(TAU) / TAU,
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Thickness profile in [0, 1] at polar position (ρ, θ).
pub fn thickness_profile(rho_nm: f64, theta_rad: f64, spec: &HologramSpec) -> f64 {
    profile_of_phase(
        grating_phase(rho_nm, theta_rad, spec),
        spec.profile,
        spec.duty_threshold(),
    )
}

/// |∇f| in rad/nm at (ρ, θ).
pub fn phase_gradient_norm(rho_nm: f64, theta_rad: f64, spec: &HologramSpec) -> f64 {
    let k = spec.k_carrier();
    let (s, c) = theta_rad.sin_cos();
    let radial = k * c;
    let azimuthal = (spec.ell as f64 - rho_nm * k * s) / rho_nm;
    radial.hypot(azimuthal)
}

/// Local separation between hologram lines, d = π/|∇f|, in nm.
///
/// Returns `f64::INFINITY` where the gradient vanishes (the stationary point).
pub fn local_line_spacing(rho_nm: f64, theta_rad: f64, spec: &HologramSpec) -> Result<f64> {
    if !(rho_nm > 0.0) {
        return Err(Error::Domain(format!(
            "line spacing is undefined at rho = {rho_nm}"
        )));
    }
    let g = phase_gradient_norm(rho_nm, theta_rad, spec);
    let scale = spec.k_carrier() + spec.ell.unsigned_abs() as f64 / rho_nm;
    if g <= 1e-12 * scale {
        Ok(f64::INFINITY)
    } else {
        Ok(PI / g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Saddle,
    Minimum,
    Maximum,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoint {
    pub rho_nm: f64,
    pub theta_rad: f64,
    /// Root found numerically from a seed offset from the analytic point.
    pub numerical_rho_nm: f64,
    pub numerical_theta_rad: f64,
    pub kind: CriticalKind,
}

impl StationaryPoint {
    pub fn xy_nm(&self) -> (f64, f64) {
        (
            self.rho_nm * self.theta_rad.cos(),
            self.rho_nm * self.theta_rad.sin(),
        )
    }

    /// Distance between the analytic and numerical roots.
    pub fn discrepancy_nm(&self) -> f64 {
        let (x0, y0) = self.xy_nm();
        let x1 = self.numerical_rho_nm * self.numerical_theta_rad.cos();
        let y1 = self.numerical_rho_nm * self.numerical_theta_rad.sin();
        (x1 - x0).hypot(y1 - y0)
    }
}

/// Cartesian gradient of f = ℓ·atan2(y, x) + k·x.
pub fn cartesian_gradient(x: f64, y: f64, spec: &HologramSpec) -> (f64, f64) {
    let l = spec.ell as f64;
    let r2 = x * x + y * y;
    (spec.k_carrier() - l * y / r2, l * x / r2)
}

/// Cartesian Hessian (f_xx, f_xy, f_yy) of the grating phase.
pub fn cartesian_hessian(x: f64, y: f64, spec: &HologramSpec) -> (f64, f64, f64) {
    let l = spec.ell as f64;
    let r2 = x * x + y * y;
    let r4 = r2 * r2;
    (
        2.0 * l * x * y / r4,
        l * (y * y - x * x) / r4,
        -2.0 * l * x * y / r4,
    )
}

fn classify(hxx: f64, hxy: f64, hyy: f64) -> CriticalKind {
    let det = hxx * hyy - hxy * hxy;
    let scale = hxx.abs().max(hxy.abs()).max(hyy.abs()).powi(2);
    if det.abs() <= 1e-12 * scale {
        CriticalKind::Degenerate
    } else if det < 0.0 {
        CriticalKind::Saddle
    } else if hxx > 0.0 {
        CriticalKind::Minimum
    } else {
        CriticalKind::Maximum
    }
}

/// Locate the point where ∇f = 0.
///
/// The analytic answer is ρ* = |ℓ|/k at θ* = ±π/2 (sign of ℓ). It is
/// cross-checked by Newton iteration on a finite-difference gradient of f,
/// started a few pixels away; the two must agree within one pixel pitch.
pub fn find_stationary_point(spec: &HologramSpec) -> Result<StationaryPoint> {
    if spec.ell == 0 {
        return Err(Error::NoStationaryPoint);
    }
    let k = spec.k_carrier();
    let rho = spec.ell.unsigned_abs() as f64 / k;
    let theta = if spec.ell > 0 { FRAC_PI_2 } else { -FRAC_PI_2 };
    let (x0, y0) = (0.0, rho * theta.signum());

    let offset = (2.0 * spec.pixel_pitch_nm).min(0.2 * rho);
    let (xn, yn) = newton_on_numeric_gradient(spec, x0 + offset, y0 - 0.75 * offset);
    let numerical_rho = xn.hypot(yn);
    let numerical_theta = yn.atan2(xn);
    let discrepancy = (xn - x0).hypot(yn - y0);
    if !(discrepancy <= spec.pixel_pitch_nm) {
        return Err(Error::Domain(format!(
            "numerical stationary point misses the analytic one by {discrepancy} nm"
        )));
    }
    let (hxx, hxy, hyy) = cartesian_hessian(x0, y0, spec);
    Ok(StationaryPoint {
        rho_nm: rho,
        theta_rad: theta,
        numerical_rho_nm: numerical_rho,
        numerical_theta_rad: numerical_theta,
        kind: classify(hxx, hxy, hyy),
    })
}

fn newton_on_numeric_gradient(spec: &HologramSpec, mut x: f64, mut y: f64) -> (f64, f64) {
    let f = |x: f64, y: f64| spec.ell as f64 * y.atan2(x) + spec.k_carrier() * x;
    let scale = x.hypot(y).max(spec.pixel_pitch_nm);
    let h = 1e-4 * scale;
    let grad = |x: f64, y: f64| {
        (
            (f(x + h, y) - f(x - h, y)) / (2.0 * h),
            (f(x, y + h) - f(x, y - h)) / (2.0 * h),
        )
    };
    for _ in 0..50 {
        let (gx, gy) = grad(x, y);
        // Jacobian of the numeric gradient, by differencing it again
        let (gxx1, gyx1) = grad(x + h, y);
        let (gxx0, gyx0) = grad(x - h, y);
        let (gxy1, gyy1) = grad(x, y + h);
        let (gxy0, gyy0) = grad(x, y - h);
        let a = (gxx1 - gxx0) / (2.0 * h);
        let b = (gxy1 - gxy0) / (2.0 * h);
        let c = (gyx1 - gyx0) / (2.0 * h);
        let d = (gyy1 - gyy0) / (2.0 * h);
        let det = a * d - b * c;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = (d * gx - b * gy) / det;
        let dy = (-c * gx + a * gy) / det;
        x -= dx;
        y -= dy;
        if dx.hypot(dy) < 1e-9 * scale {
            break;
        }
    }
    (x, y)
}
