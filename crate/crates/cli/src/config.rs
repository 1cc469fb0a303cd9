//! Run configuration: TOML file plus `--section.key=value` overrides.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use vortexholo::hologram::{CentralHole, GrooveProfile, HologramSpec, DEFAULT_TILE_SIZE};

/// A configuration problem; reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub hologram: HologramSection,
    pub beam: BeamSection,
    pub synth: SynthSection,
    pub simulate: SimulateSection,
    pub gouy: GouySection,
    pub fit: FitSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            hologram: HologramSection::default(),
            beam: BeamSection::default(),
            synth: SynthSection::default(),
            simulate: SimulateSection::default(),
            gouy: GouySection::default(),
            fit: FitSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HologramSection {
    pub ell: i64,
    pub carrier_period_nm: f64,
    pub pattern_radius_um: f64,
    pub exclusion_radius_um: f64,
    pub pixel_pitch_nm: f64,
    pub profile: GrooveProfile,
    pub duty: f64,
    pub phase_depth_rad: f64,
    pub central_hole: CentralHole,
}

impl Default for HologramSection {
    fn default() -> Self {
        Self {
            ell: 10,
            carrier_period_nm: 100.0,
            pattern_radius_um: 5.0,
            exclusion_radius_um: 0.5,
            pixel_pitch_nm: 4.0,
            profile: GrooveProfile::Rectangular,
            duty: 0.5,
            phase_depth_rad: PI,
            central_hole: CentralHole::Open,
        }
    }
}

impl HologramSection {
    pub fn spec(&self) -> HologramSpec {
        let mut s = HologramSpec::new(
            self.ell,
            self.carrier_period_nm,
            self.pattern_radius_um,
            self.exclusion_radius_um,
            self.pixel_pitch_nm,
        );
        s.profile = self.profile;
        s.duty = self.duty;
        s.phase_depth_rad = self.phase_depth_rad;
        s.central_hole = self.central_hole;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    pub accelerating_voltage_v: f64,
    /// Mean inner potential of the membrane, V.
    pub v_mip_v: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            accelerating_voltage_v: 300e3,
            v_mip_v: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub output_dir: PathBuf,
    pub tile_size: usize,
    pub min_feature_nm: f64,
    pub fabric_samples: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out/synth"),
            tile_size: DEFAULT_TILE_SIZE,
            min_feature_nm: 20.0,
            fabric_samples: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rendering {
    /// Keep only the diffraction orders the grid can carry.
    BandLimited,
    /// Evaluate the groove profile at each grid point.
    Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub output_dir: PathBuf,
    pub grid_n: usize,
    /// Field sampling pitch; the hologram pixel pitch when absent.
    pub field_pitch_nm: Option<f64>,
    /// Membrane thickness; from the hologram phase depth when absent.
    pub thickness_nm: Option<f64>,
    pub rendering: Rendering,
    /// Rasterized pattern to use instead of evaluating the hologram spec.
    pub pattern_file: Option<PathBuf>,
    /// Pixel pitch of `pattern_file`; the hologram pixel pitch when absent.
    pub pattern_pitch_nm: Option<f64>,
    pub max_order: u32,
    /// Zero the 0th-order box in the intensity image.
    pub beam_stop: bool,
    /// Extra ℓ range around ±max_order·|ℓ| in the per-order spectra.
    pub ell_margin: i64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out/simulate"),
            grid_n: 1024,
            field_pitch_nm: None,
            thickness_nm: None,
            rendering: Rendering::BandLimited,
            pattern_file: None,
            pattern_pitch_nm: None,
            max_order: 3,
            beam_stop: false,
            ell_margin: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GouyBeam {
    LaguerreGauss,
    HologramOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GouySection {
    pub output_dir: PathBuf,
    pub ells: Vec<i64>,
    pub grid_n: usize,
    pub pitch_nm: f64,
    pub rim_radius_nm: f64,
    pub ell_ref: i64,
    pub aperture_z_over_zr: f64,
    pub analysis_z_over_zr: f64,
    /// Planes of the rotation-vs-z table.
    pub z_points: Vec<f64>,
    pub b_tesla: f64,
    pub edge_azimuth_rad: f64,
    pub halo: bool,
    pub beam: GouyBeam,
    /// Grid for the hologram exit wave when `beam = "hologram_order"`.
    pub hologram_grid_n: usize,
    pub hologram_upsample: usize,
    /// Also run −ℓ for the first nonzero ℓ.
    pub parity_check: bool,
    /// Charge whose before/after intensities are written; the first ℓ when absent.
    pub snapshot_ell: Option<i64>,
}

impl Default for GouySection {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out/gouy"),
            ells: vec![20, 40],
            grid_n: 2048,
            pitch_nm: 10.0,
            rim_radius_nm: 1000.0,
            ell_ref: 100,
            aperture_z_over_zr: 0.5,
            analysis_z_over_zr: 2.0,
            z_points: vec![0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
            b_tesla: 0.0,
            edge_azimuth_rad: 0.0,
            halo: true,
            beam: GouyBeam::LaguerreGauss,
            hologram_grid_n: 2048,
            hologram_upsample: 1,
            parity_check: true,
            snapshot_ell: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub output_dir: PathBuf,
    pub measured_rotation_rad: Option<f64>,
    pub curve_csv: Option<PathBuf>,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out/fit"),
            measured_rotation_rad: None,
            curve_csv: None,
        }
    }
}

impl RunConfig {
    /// Read `path` (if any), apply overrides of the form `section.key=value`
    /// and deserialize.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                text.parse::<toml::Table>()
                    .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError(format!("config: {e}")))?;
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Parse `section.key=value`; the value is read as a TOML value and falls
/// back to a plain string.
fn apply_override(table: &mut toml::Table, text: &str) -> Result<()> {
    let Some((path, raw)) = text.split_once('=') else {
        bail!(ConfigError(format!(
            "override {text:?} is not of the form section.key=value"
        )));
    };
    let keys: Vec<&str> = path.split('.').collect();
    if keys.len() < 2 || keys.iter().any(|k| k.is_empty()) {
        bail!(ConfigError(format!(
            "override key {path:?} must be section.key"
        )));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError(format!("override {path:?}: {k} is not a section")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}
