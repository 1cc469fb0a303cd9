//! Field export: 16-bit intensity images and raw complex dumps.
//!
//! Raw complex files start with a text header of `key = value` lines:
//!
//! ```text
//! # vortexholo complex field v1
//! n = 256
//! pitch_nm = 1
//! wavelength_pm = 1.96874
//! z_nm = 0
//! camera_length_nm = none
//! encoding = f64le-interleaved
//! end_header
//! ```
//!
//! followed by n² (re, im) pairs of little-endian IEEE-754 doubles, row-major.

use super::field::{ComplexField, Grid};
use crate::error::{Error, Result};
use crate::format::fmt_sig9;
use crate::netpbm::write_pgm16;
use num_complex::Complex64;
use std::io::{BufRead, Write};

const MAGIC: &str = "# vortexholo complex field v1";

/// Linear scaling applied when writing intensity images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityScale {
    /// Intensity mapped to 65535.
    pub full_scale: f64,
}

/// Write |u|² as a 16-bit PGM, scaled linearly so the maximum maps to 65535.
/// A masked region (value `false` in `keep`) is written as zero.
pub fn write_intensity_pgm16<W: Write>(
    field: &ComplexField,
    keep: Option<&[bool]>,
    out: W,
) -> Result<(IntensityScale, String)> {
    let mut intensity = field.intensity();
    if let Some(mask) = keep {
        for (v, &k) in intensity.iter_mut().zip(mask) {
            if !k {
                *v = 0.0;
            }
        }
    }
    let full_scale = intensity.iter().cloned().fold(0.0, f64::max);
    let data: Vec<u16> = intensity
        .iter()
        .map(|&v| {
            if full_scale > 0.0 {
                (v / full_scale * 65535.0).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            }
        })
        .collect();
    let hash = write_pgm16(out, field.n, field.n, &data)?;
    Ok((IntensityScale { full_scale }, hash))
}

pub fn write_complex_raw<W: Write>(field: &ComplexField, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "n = {}", field.n)?;
    writeln!(out, "pitch_nm = {}", fmt_sig9(field.pitch_nm))?;
    writeln!(out, "wavelength_pm = {}", fmt_sig9(field.wavelength_pm))?;
    writeln!(out, "z_nm = {}", fmt_sig9(field.z_nm))?;
    match field.camera_length_nm {
        Some(l) => writeln!(out, "camera_length_nm = {}", fmt_sig9(l))?,
        None => writeln!(out, "camera_length_nm = none")?,
    }
    writeln!(out, "encoding = f64le-interleaved")?;
    writeln!(out, "end_header")?;
    let mut buf = Vec::with_capacity(field.n * 16);
    for row in field.samples.chunks(field.n) {
        buf.clear();
        for v in row {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_complex_raw<R: BufRead>(mut input: R) -> Result<ComplexField> {
    let bad = |m: &str| Error::Io(format!("complex field header: {m}"));
    let mut line = String::new();
    input.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(bad("missing magic line"));
    }
    let mut n = None;
    let mut pitch = None;
    let mut wavelength = None;
    let mut z = 0.0;
    let mut camera = None;
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Err(bad("unterminated header"));
        }
        let l = line.trim_end();
        if l == "end_header" {
            break;
        }
        let (k, v) = l.split_once(" = ").ok_or_else(|| bad(l))?;
        let num = || v.parse::<f64>().map_err(|_| bad(l));
        match k {
            "n" => n = Some(v.parse::<usize>().map_err(|_| bad(l))?),
            "pitch_nm" => pitch = Some(num()?),
            "wavelength_pm" => wavelength = Some(num()?),
            "z_nm" => z = num()?,
            "camera_length_nm" if v != "none" => camera = Some(num()?),
            _ => {}
        }
    }
    let grid = Grid::new(
        n.ok_or_else(|| bad("n"))?,
        pitch.ok_or_else(|| bad("pitch_nm"))?,
        wavelength.ok_or_else(|| bad("wavelength_pm"))?,
    )?;
    let mut bytes = vec![0u8; grid.n * grid.n * 16];
    input.read_exact(&mut bytes)?;
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let mut f = ComplexField::from_samples(grid, samples)?;
    f.z_nm = z;
    f.camera_length_nm = camera;
    Ok(f)
}
