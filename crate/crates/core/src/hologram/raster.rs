//! Tiled, streaming rasterization of hologram patterns.

use super::{profile_of_phase, GrooveProfile, HologramSpec};
use crate::error::{Error, Result};
use crate::netpbm::{PbmWriter, PgmWriter, RowSink};
use rayon::prelude::*;
use std::io::Write;

pub const DEFAULT_TILE_SIZE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterOptions {
    /// Side of a square tile; a tile budget is `tile_size²` pixels.
    pub tile_size: usize,
}

impl Default for RasterOptions {
    fn default() -> Self {
        Self {
            tile_size: DEFAULT_TILE_SIZE,
        }
    }
}

/// An in-memory pattern, one level index per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternBitmap {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch_nm: f64,
    pub levels: u16,
    pub data: Vec<u8>,
    /// Pattern center in pixel coordinates (column, row).
    pub origin: (f64, f64),
}

impl PatternBitmap {
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }
}

impl RowSink for PatternBitmap {
    fn write_rows(&mut self, rows: &[u8], _width: usize) -> Result<()> {
        self.data.extend_from_slice(rows);
        Ok(())
    }
}

/// Width and height in pixels, ⌈2R/pitch⌉ each.
pub fn raster_dimensions(spec: &HologramSpec) -> (usize, usize) {
    let n = (2.0 * spec.pattern_radius_nm() / spec.pixel_pitch_nm).ceil() as usize;
    (n, n)
}

struct RowGeometry {
    width: usize,
    height: usize,
    pitch: f64,
    k: f64,
    ell: f64,
    r_out2: f64,
    r_in2: f64,
    profile: GrooveProfile,
    threshold: f64,
}

impl RowGeometry {
    fn new(spec: &HologramSpec) -> Self {
        let (width, height) = raster_dimensions(spec);
        Self {
            width,
            height,
            pitch: spec.pixel_pitch_nm,
            k: spec.k_carrier(),
            ell: spec.ell as f64,
            r_out2: spec.pattern_radius_nm().powi(2),
            r_in2: spec.exclusion_radius_nm().powi(2),
            profile: spec.profile,
            threshold: spec.duty_threshold(),
        }
    }

    /// Fill `out` with row `i`, columns `j0..j0 + out.len()`.
    fn fill(&self, i: usize, j0: usize, out: &mut [u8]) {
        // pixel centers; y grows upward so no center lies on the carrier axis
        let y = (self.height as f64 / 2.0 - i as f64 - 0.5) * self.pitch;
        let half_w = self.width as f64 / 2.0;
        for (dj, v) in out.iter_mut().enumerate() {
            let x = ((j0 + dj) as f64 + 0.5 - half_w) * self.pitch;
            let r2 = x * x + y * y;
            *v = if r2 > self.r_out2 || r2 < self.r_in2 {
                0
            } else {
                let f = self.ell * y.atan2(x) + self.k * x;
                let t = profile_of_phase(f, self.profile, self.threshold);
                match self.profile {
                    GrooveProfile::Rectangular => (t > 0.5) as u8,
                    _ => (t * 255.0).round() as u8,
                }
            };
        }
    }
}

/// Rasterize `spec` band by band into `sink`.
///
/// Each band holds at most `tile_size²` pixels and is split into
/// `tile_size`-wide tiles that are evaluated in parallel. Output is the same
/// for every tile size.
pub fn rasterize_into<S: RowSink>(
    spec: &HologramSpec,
    opts: RasterOptions,
    sink: &mut S,
) -> Result<()> {
    spec.validate()?;
    let geo = RowGeometry::new(spec);
    let (width, height) = (geo.width, geo.height);
    let budget = opts.tile_size.saturating_mul(opts.tile_size);
    if opts.tile_size == 0 || budget < width {
        return Err(Error::Config(format!(
            "tile budget of {budget} pixels is smaller than one {width}-pixel row"
        )));
    }
    let band_rows = (budget / width).clamp(1, height.max(1));
    let tile_w = opts.tile_size.min(width);
    let mut band = vec![0u8; band_rows * width];
    let mut i0 = 0;
    while i0 < height {
        let rows = band_rows.min(height - i0);
        let buf = &mut band[..rows * width];
        buf.par_chunks_mut(width).enumerate().for_each(|(di, row)| {
            row.par_chunks_mut(tile_w)
                .enumerate()
                .for_each(|(t, tile)| geo.fill(i0 + di, t * tile_w, tile));
        });
        sink.write_rows(buf, width)?;
        i0 += rows;
    }
    Ok(())
}

/// Rasterize into memory with the default tile size.
pub fn rasterize(spec: &HologramSpec) -> Result<PatternBitmap> {
    rasterize_with(spec, RasterOptions::default())
}

pub fn rasterize_with(spec: &HologramSpec, opts: RasterOptions) -> Result<PatternBitmap> {
    spec.validate()?;
    let (width, height) = raster_dimensions(spec);
    let mut bmp = PatternBitmap {
        width,
        height,
        pixel_pitch_nm: spec.pixel_pitch_nm,
        levels: spec.profile.levels(),
        data: Vec::with_capacity(width * height),
        origin: (width as f64 / 2.0, height as f64 / 2.0),
    };
    rasterize_into(spec, opts, &mut bmp)?;
    Ok(bmp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternFormat {
    /// Binary PBM, two levels.
    Pbm,
    /// Binary 8-bit PGM.
    Pgm,
}

impl PatternFormat {
    pub fn for_profile(profile: GrooveProfile) -> Self {
        if profile.levels() == 2 {
            PatternFormat::Pbm
        } else {
            PatternFormat::Pgm
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            PatternFormat::Pbm => "pbm",
            PatternFormat::Pgm => "pgm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternOutput {
    pub width: usize,
    pub height: usize,
    pub levels: u16,
    pub format: PatternFormat,
    /// Hex SHA-256 of the whole image file.
    pub sha256: String,
}

/// Stream the pattern as PBM or PGM (chosen by the profile) into `out`.
pub fn write_pattern<W: Write>(
    spec: &HologramSpec,
    opts: RasterOptions,
    out: W,
) -> Result<PatternOutput> {
    spec.validate()?;
    let (width, height) = raster_dimensions(spec);
    let format = PatternFormat::for_profile(spec.profile);
    let sha256 = match format {
        PatternFormat::Pbm => {
            let mut w = PbmWriter::new(out, width, height)?;
            rasterize_into(spec, opts, &mut w)?;
            w.finish()?.0
        }
        PatternFormat::Pgm => {
            let mut w = PgmWriter::new(out, width, height)?;
            rasterize_into(spec, opts, &mut w)?;
            w.finish()?.0
        }
    };
    Ok(PatternOutput {
        width,
        height,
        levels: spec.profile.levels(),
        format,
        sha256,
    })
}
