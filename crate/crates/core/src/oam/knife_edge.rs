//! Knife-edge rotation experiment: block half of a vortex beam at one plane,
//! propagate to a later plane and measure how far the shadow has turned.

use super::rotation::{measure_rotation, Annulus, RotationMeasurement};
use super::{rayleigh_range, rim_radius};
use crate::beamline::BeamParams;
use crate::error::{Error, Result};
use crate::format::fmt_sig9;
use crate::hologram::{transmission_function, HologramSpec};
use crate::waveopt::fft::{centered_unitary, Direction};
use crate::waveopt::{
    apply_half_plane_block, fresnel_propagate, larmor_angle, lg_mode, rotate, ComplexField, Grid,
    Method, PropagationPlan,
};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

/// OAM-free illumination around the beam whose aperture shadow reveals the
/// rigid (Larmor) image rotation far from the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halo {
    /// Amplitude relative to the peak beam amplitude at the aperture plane.
    pub relative_amplitude: f64,
    /// Band edges as fractions of the grid half-width.
    pub inner_fraction: f64,
    pub outer_fraction: f64,
}

impl Default for Halo {
    fn default() -> Self {
        Self {
            relative_amplitude: 0.1,
            inner_fraction: 0.6,
            outer_fraction: 0.97,
        }
    }
}

impl Halo {
    const TAPER: f64 = 0.04;

    /// Raised-cosine band profile at radius `r` on a grid of half-width `h`.
    fn window(&self, r: f64, h: f64) -> f64 {
        let (a, b, t) = (
            self.inner_fraction * h,
            self.outer_fraction * h,
            Self::TAPER * h,
        );
        if r < a || r > b {
            0.0
        } else if r < a + t {
            0.5 * (1.0 - (PI * (r - a) / t).cos())
        } else if r > b - t {
            0.5 * (1.0 - (PI * (b - r) / t).cos())
        } else {
            1.0
        }
    }
}

/// The diffraction order of a hologram as a beam source.
#[derive(Debug, Clone, PartialEq)]
pub struct HologramOrderBeam {
    /// Hologram geometry; `ell` is replaced by the charge of each run.
    pub spec: HologramSpec,
    /// Grid on which the hologram exit wave is computed.
    pub grid_n: usize,
    pub pitch_nm: f64,
    pub v_mip_v: f64,
    /// Sinc interpolation factor from far-field samples to analysis pixels.
    pub upsample: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BeamModel {
    /// LG_{0,ℓ} whose rim radius equals the geometry's reference rim radius.
    LaguerreGauss,
    /// The +1 order of a pitchfork hologram, cropped from its far field.
    HologramOrder(Box<HologramOrderBeam>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnifeEdgeGeometry {
    pub grid_n: usize,
    pub pitch_nm: f64,
    pub voltage_v: f64,
    /// Rim radius of the beam at its waist, and the ℓ used in z_R.
    pub rim_radius_nm: f64,
    pub ell_ref: i64,
    pub aperture_z_over_zr: f64,
    pub analysis_z_over_zr: f64,
    /// Azimuth of the knife edge; the side with sin(φ − edge) < 0 is blocked.
    pub edge_azimuth_rad: f64,
    pub b_tesla: f64,
    pub halo: Option<Halo>,
    /// Measurement annuli; [`default_annuli`] when `None`.
    pub annuli: Option<Vec<Annulus>>,
    pub beam: BeamModel,
}

impl KnifeEdgeGeometry {
    /// A 2048² grid at 300 kV with a 1 µm rim radius and z_R referred to
    /// ℓ = 100, aperture at z/z_R = 0.5 and analysis at z/z_R = 2.
    pub fn desk_scale() -> Self {
        Self {
            grid_n: 2048,
            pitch_nm: 10.0,
            voltage_v: 300e3,
            rim_radius_nm: 1000.0,
            ell_ref: 100,
            aperture_z_over_zr: 0.5,
            analysis_z_over_zr: 2.0,
            edge_azimuth_rad: 0.0,
            b_tesla: 0.0,
            halo: Some(Halo::default()),
            annuli: None,
            beam: BeamModel::LaguerreGauss,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.grid_n, self.pitch_nm, 1.0)?;
        if !(self.rim_radius_nm > 0.0) {
            return Err(Error::Invalid {
                field: "rim_radius",
                reason: format!("{} nm must be positive", self.rim_radius_nm),
            });
        }
        if self.ell_ref <= 0 {
            return Err(Error::Invalid {
                field: "ell_ref",
                reason: format!("{} must be positive", self.ell_ref),
            });
        }
        if !(self.aperture_z_over_zr >= 0.0 && self.analysis_z_over_zr > self.aperture_z_over_zr) {
            return Err(Error::Invalid {
                field: "analysis_z_over_zr",
                reason: format!(
                    "analysis plane z/z_R = {} must lie beyond the aperture at {}",
                    self.analysis_z_over_zr, self.aperture_z_over_zr
                ),
            });
        }
        if let Some(h) = &self.halo {
            if !(h.relative_amplitude >= 0.0
                && 0.0 < h.inner_fraction
                && h.inner_fraction < h.outer_fraction
                && h.outer_fraction <= 1.0)
            {
                return Err(Error::Invalid {
                    field: "halo",
                    reason: "needs amplitude ≥ 0 and 0 < inner < outer ≤ 1".into(),
                });
            }
        }
        Ok(())
    }

    pub fn half_extent_nm(&self) -> f64 {
        0.5 * self.grid_n as f64 * self.pitch_nm
    }
}

/// Inner annulus [0.25, 2]·r_rim for the vortex and an outer annulus
/// [0.8, 0.92] of the half-width for the far shadow.
pub fn default_annuli(rim_radius_nm: f64, half_extent_nm: f64) -> Vec<Annulus> {
    let outer = Annulus::new(0.8 * half_extent_nm, 0.92 * half_extent_nm);
    let inner = Annulus::new(
        0.25 * rim_radius_nm,
        (2.0 * rim_radius_nm).min(outer.r_inner_nm),
    );
    if inner.r_outer_nm > inner.r_inner_nm {
        vec![inner, outer]
    } else {
        vec![outer]
    }
}

/// Beam at its waist plane, normalized to unit power, and its rim radius.
pub fn beam_at_waist(ell: i64, geo: &KnifeEdgeGeometry) -> Result<(ComplexField, f64)> {
    let beam = BeamParams::new(geo.voltage_v)?;
    let grid = Grid::new(geo.grid_n, geo.pitch_nm, beam.wavelength_pm)?;
    match &geo.beam {
        BeamModel::LaguerreGauss => {
            let w = geo.rim_radius_nm * (2.0 / ell.unsigned_abs().max(1) as f64).sqrt();
            Ok((lg_mode(ell, 0, w, grid)?, geo.rim_radius_nm))
        }
        BeamModel::HologramOrder(h) => {
            let field = hologram_order(ell, h, &beam, grid)?;
            let rim = if ell == 0 {
                geo.rim_radius_nm
            } else {
                rim_radius(&field)?
            };
            Ok((field, rim))
        }
    }
}

fn hologram_order(
    ell: i64,
    h: &HologramOrderBeam,
    beam: &BeamParams,
    grid: Grid,
) -> Result<ComplexField> {
    let mut spec = h.spec.clone();
    spec.ell = ell;
    let t0 = beam.thickness_for_phase(spec.phase_depth_rad, h.v_mip_v)?;
    let exit = transmission_function(&spec, beam, h.v_mip_v, t0, h.grid_n, h.pitch_nm)?;
    let n = h.grid_n;
    let mut far = exit.samples;
    centered_unitary(&mut far, n, Direction::Forward);

    // the +1 order sits one order spacing to the right of the zero frequency
    let spacing = n as f64 * h.pitch_nm / spec.carrier_period_nm;
    let c = (spacing.floor() as usize) & !1;
    let col0 = n / 2 + spacing.round() as usize;
    if c < 4 || col0 + c / 2 > n {
        return Err(Error::Config(format!(
            "hologram grid of {n} × {} nm cannot isolate the +1 order (spacing {spacing:.2} samples)",
            h.pitch_nm
        )));
    }
    let m = c * h.upsample.max(1);
    if m > grid.n {
        return Err(Error::Config(format!(
            "upsampled order of {m} px does not fit the {}-px analysis grid",
            grid.n
        )));
    }
    let mut crop = vec![Complex64::new(0.0, 0.0); c * c];
    for a in 0..c {
        let src = (n / 2 - c / 2 + a) * n + col0 - c / 2;
        crop[a * c..(a + 1) * c].copy_from_slice(&far[src..src + c]);
    }
    drop(far);

    // band-limited interpolation: pad the spectrum of the crop
    centered_unitary(&mut crop, c, Direction::Forward);
    let mut padded = vec![Complex64::new(0.0, 0.0); m * m];
    for a in 0..c {
        let dst = (m / 2 - c / 2 + a) * m + m / 2 - c / 2;
        padded[dst..dst + c].copy_from_slice(&crop[a * c..(a + 1) * c]);
    }
    centered_unitary(&mut padded, m, Direction::Inverse);

    let mut field = ComplexField::zeros(grid);
    let off = grid.n / 2 - m / 2;
    for a in 0..m {
        let dst = (off + a) * grid.n + off;
        field.samples[dst..dst + m].copy_from_slice(&padded[a * m..(a + 1) * m]);
    }
    field.normalize();
    Ok(field)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnifeEdgeRun {
    pub ell: i64,
    pub rim_radius_nm: f64,
    pub z_r_nm: f64,
    pub aperture_z_nm: f64,
    pub analysis_z_nm: f64,
    pub method: Method,
    pub larmor_angle_rad: f64,
    pub measurement: RotationMeasurement,
    /// Blocked field at the aperture plane.
    pub before: ComplexField,
    /// Field at the analysis plane, Larmor rotation included.
    pub after: ComplexField,
}

/// Blocked field at the aperture plane with its rim radius and z_R.
struct ApertureField {
    before: ComplexField,
    rim: f64,
    z_r: f64,
    velocity: f64,
}

fn aperture_field(ell: i64, geo: &KnifeEdgeGeometry) -> Result<ApertureField> {
    geo.validate()?;
    let beam = BeamParams::new(geo.voltage_v)?;
    let (waist, rim) = beam_at_waist(ell, geo)?;
    let z_r = rayleigh_range(rim, beam.wavelength_pm, geo.ell_ref)?;
    let z_a = geo.aperture_z_over_zr * z_r;
    let mut at_aperture =
        fresnel_propagate(&waist, &PropagationPlan::angular_spectrum(&waist, z_a)?)?;
    drop(waist);
    if let Some(halo) = &geo.halo {
        let amp = halo.relative_amplitude * at_aperture.max_intensity().sqrt();
        let h = geo.half_extent_nm();
        let g = at_aperture.grid();
        let band = ComplexField::from_fn(g, |x, y| {
            Complex64::new(amp * halo.window(x.hypot(y), h), 0.0)
        });
        at_aperture.add_scaled(&band, Complex64::new(1.0, 0.0))?;
    }
    let before = apply_half_plane_block(&at_aperture, geo.edge_azimuth_rad);
    Ok(ApertureField {
        before,
        rim,
        z_r,
        velocity: beam.velocity_m_per_s,
    })
}

/// Propagate the blocked field to `z_over_zr`, apply the Larmor rotation and
/// measure. Returns the field there, the method, the Larmor angle and the
/// measurement.
fn analyze_at(
    ap: &ApertureField,
    geo: &KnifeEdgeGeometry,
    z_over_zr: f64,
) -> Result<(ComplexField, Method, f64, RotationMeasurement)> {
    let dz = (z_over_zr - geo.aperture_z_over_zr) * ap.z_r;
    let plan = PropagationPlan::angular_spectrum(&ap.before, dz)?;
    let propagated = fresnel_propagate(&ap.before, &plan)?;
    let larmor = larmor_angle(geo.b_tesla, dz, ap.velocity);
    let after = rotate(&propagated, larmor);
    drop(propagated);
    let annuli = geo
        .annuli
        .clone()
        .unwrap_or_else(|| default_annuli(ap.rim, geo.half_extent_nm()));
    let mut measurement = measure_rotation(&ap.before, &after, &annuli)?;
    measurement.z_over_zr = Some(z_over_zr);
    Ok((after, plan.method, larmor, measurement))
}

/// Run the knife-edge experiment for charge `ell`.
pub fn knife_edge_run(ell: i64, geo: &KnifeEdgeGeometry) -> Result<KnifeEdgeRun> {
    let ap = aperture_field(ell, geo)?;
    let (after, method, larmor, measurement) = analyze_at(&ap, geo, geo.analysis_z_over_zr)?;
    Ok(KnifeEdgeRun {
        ell,
        rim_radius_nm: ap.rim,
        z_r_nm: ap.z_r,
        aperture_z_nm: geo.aperture_z_over_zr * ap.z_r,
        analysis_z_nm: geo.analysis_z_over_zr * ap.z_r,
        method,
        larmor_angle_rad: larmor,
        measurement,
        before: ap.before,
        after,
    })
}

/// One analysis plane of a [`knife_edge_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub z_over_zr: f64,
    pub method: Method,
    pub larmor_angle_rad: f64,
    pub measurement: RotationMeasurement,
}

/// Rotation of the knife-edge shadow at several analysis planes, each
/// measured against the aperture plane.
pub fn knife_edge_scan(
    ell: i64,
    geo: &KnifeEdgeGeometry,
    z_over_zr: &[f64],
) -> Result<Vec<ScanPoint>> {
    let ap = aperture_field(ell, geo)?;
    z_over_zr
        .iter()
        .map(|&z| {
            let (_, method, larmor, measurement) = analyze_at(&ap, geo, z)?;
            Ok(ScanPoint {
                z_over_zr: z,
                method,
                larmor_angle_rad: larmor,
                measurement,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub ell: i64,
    /// Gouy component of the measured rotation; NaN when the run failed.
    pub rotation_rad: f64,
    pub larmor_rad: f64,
    pub z_over_zr: f64,
    pub method: Option<Method>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationCurve {
    pub rows: Vec<CurveRow>,
    /// Rotation strictly monotone in ℓ over the successful rows.
    pub monotone: bool,
}

impl RotationCurve {
    /// (ℓ, rotation) for every successful row, sorted by ℓ.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut p: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.error.is_none())
            .map(|r| (r.ell as f64, r.rotation_rad))
            .collect();
        p.sort_by(|a, b| a.0.total_cmp(&b.0));
        p
    }

    pub fn rotation(&self, ell: i64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.ell == ell && r.error.is_none())
            .map(|r| r.rotation_rad)
    }

    /// Columns ell, rotation_rad, z_over_zR, method.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "ell,rotation_rad,z_over_zR,method")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                r.ell,
                fmt_sig9(r.rotation_rad),
                fmt_sig9(r.z_over_zr),
                r.method.map(|m| m.name()).unwrap_or("failed")
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

fn strictly_monotone(points: &[(f64, f64)]) -> bool {
    if points.len() < 2 {
        return true;
    }
    let up = points[1].1 > points[0].1;
    points
        .windows(2)
        .all(|w| if up { w[1].1 > w[0].1 } else { w[1].1 < w[0].1 })
}

/// Knife-edge rotation for each ℓ. Entries run in parallel; a failed entry
/// keeps its error message and a NaN rotation.
pub fn rotation_curve(ells: &[i64], geo: &KnifeEdgeGeometry) -> RotationCurve {
    let rows: Vec<CurveRow> = ells
        .par_iter()
        .map(|&ell| match knife_edge_run(ell, geo) {
            Ok(run) => CurveRow {
                ell,
                rotation_rad: run.measurement.gouy_component_rad,
                larmor_rad: run.measurement.larmor_component_rad,
                z_over_zr: geo.analysis_z_over_zr,
                method: Some(run.method),
                error: None,
            },
            Err(e) => CurveRow {
                ell,
                rotation_rad: f64::NAN,
                larmor_rad: f64::NAN,
                z_over_zr: geo.analysis_z_over_zr,
                method: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let mut curve = RotationCurve {
        rows,
        monotone: false,
    };
    curve.monotone = strictly_monotone(&curve.points());
    curve
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_geometry() -> KnifeEdgeGeometry {
        KnifeEdgeGeometry {
            grid_n: 512,
            pitch_nm: 10.0,
            rim_radius_nm: 400.0,
            ell_ref: 30,
            ..KnifeEdgeGeometry::desk_scale()
        }
    }

    #[test]
    fn halo_window_shape() {
        let h = Halo::default();
        assert_eq!(h.window(0.5, 1.0), 0.0);
        assert_eq!(h.window(0.8, 1.0), 1.0);
        assert_eq!(h.window(0.99, 1.0), 0.0);
        assert!((h.window(0.62, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parity_and_zero_charge() {
        let geo = small_geometry();
        let curve = rotation_curve(&[-12, 0, 12], &geo);
        for r in &curve.rows {
            assert!(r.error.is_none(), "{:?}", r.error);
        }
        let p = curve.rotation(12).unwrap();
        let m = curve.rotation(-12).unwrap();
        let z = curve.rotation(0).unwrap();
        assert!(p > 0.0, "{p}");
        assert!((p + m).abs() < 0.02 * p, "{p} {m}");
        assert!(z.abs() < 0.02 * p, "{z}");
        assert!(curve.monotone);
    }

    #[test]
    fn validation_and_error_rows() {
        let mut geo = small_geometry();
        geo.analysis_z_over_zr = 0.1;
        assert!(geo.validate().is_err());
        let mut geo = small_geometry();
        geo.rim_radius_nm = 1e4;
        let c = rotation_curve(&[5], &geo);
        assert!(c.rows[0].error.is_some());
        assert!(c.rows[0].rotation_rad.is_nan());
    }
}
