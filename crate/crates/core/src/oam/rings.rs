//! Sampling of a Cartesian grid on concentric rings.

use crate::error::{Error, Result};
use crate::waveopt::ComplexField;
use num_complex::Complex64;
use std::f64::consts::TAU;

pub(crate) const MIN_BINS: usize = 1024;
const FIRST_RING_PX: f64 = 2.0;

pub(crate) struct RingSampler {
    pub bins: usize,
    /// Center in fractional pixel coordinates (column, row).
    pub center_px: (f64, f64),
    pub max_radius_px: f64,
    /// Ring radii in pixels, 1 pixel apart from 2 pixels outward.
    pub radii_px: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl RingSampler {
    /// `ell_span` is the largest |ℓ| of interest; the azimuthal bin count
    /// grows so that it stays well resolved.
    pub fn new(field: &ComplexField, center_nm: (f64, f64), ell_span: usize) -> Result<Self> {
        Self::with_bins(
            field.n,
            field.pitch_nm,
            center_nm,
            MIN_BINS.max((4 * ell_span).next_power_of_two()),
        )
    }

    pub fn with_bins(n: usize, pitch_nm: f64, center_nm: (f64, f64), bins: usize) -> Result<Self> {
        let half = (n / 2) as f64;
        let cx = half + center_nm.0 / pitch_nm;
        let cy = half + center_nm.1 / pitch_nm;
        let last = (n - 1) as f64;
        let max_radius_px = cx.min(cy).min(last - cx).min(last - cy);
        if !(max_radius_px >= FIRST_RING_PX) {
            return Err(Error::Domain(format!(
                "ring center ({:.3}, {:.3}) nm leaves no room for rings on the grid",
                center_nm.0, center_nm.1
            )));
        }
        let count = (max_radius_px - FIRST_RING_PX).floor() as usize + 1;
        let radii_px = (0..count).map(|k| FIRST_RING_PX + k as f64).collect();
        let (sin, cos) = (0..bins)
            .map(|b| (TAU * b as f64 / bins as f64).sin_cos())
            .unzip();
        Ok(Self {
            bins,
            center_px: (cx, cy),
            max_radius_px,
            radii_px,
            cos,
            sin,
        })
    }

    #[inline]
    fn point(&self, r: f64, b: usize) -> (f64, f64) {
        (
            self.center_px.0 + r * self.cos[b],
            self.center_px.1 + r * self.sin[b],
        )
    }

    pub fn sample_complex(&self, field: &ComplexField, r: f64, out: &mut Vec<Complex64>) {
        out.clear();
        out.extend((0..self.bins).map(|b| {
            let (c, rw) = self.point(r, b);
            field.sample_bilinear(c, rw)
        }));
    }

    pub fn sample_real(&self, data: &[f64], n: usize, r: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.bins).map(|b| {
            let (c, rw) = self.point(r, b);
            bilinear_real(data, n, c, rw)
        }));
    }
}

/// Bilinear interpolation of a real n×n image; zero outside.
#[inline]
pub(crate) fn bilinear_real(data: &[f64], n: usize, col: f64, row: f64) -> f64 {
    let c0 = col.floor();
    let r0 = row.floor();
    let fx = col - c0;
    let fy = row - r0;
    let (c0, r0) = (c0 as isize, r0 as isize);
    let n = n as isize;
    let get = |r: isize, c: isize| {
        if r < 0 || c < 0 || r >= n || c >= n {
            0.0
        } else {
            data[(r * n + c) as usize]
        }
    };
    get(r0, c0) * (1.0 - fx) * (1.0 - fy)
        + get(r0, c0 + 1) * fx * (1.0 - fy)
        + get(r0 + 1, c0) * (1.0 - fx) * fy
        + get(r0 + 1, c0 + 1) * fx * fy
}
