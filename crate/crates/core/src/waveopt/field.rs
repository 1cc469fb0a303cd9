use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;

/// Sampling metric shared by fields on the same grid.
///
/// The optical axis passes through pixel (n/2, n/2). Pixel (row i, column j)
/// sits at x = (j − n/2)·pitch, y = (i − n/2)·pitch; azimuths are measured
/// counterclockwise from +x in that (x, y) frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub pitch_nm: f64,
    pub wavelength_pm: f64,
}

impl Grid {
    pub fn new(n: usize, pitch_nm: f64, wavelength_pm: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Domain(format!(
                "grid side must be a power of two, got {n}"
            )));
        }
        if !(pitch_nm > 0.0 && pitch_nm.is_finite()) {
            return Err(Error::Domain(format!(
                "pitch must be positive, got {pitch_nm} nm"
            )));
        }
        if !(wavelength_pm > 0.0 && wavelength_pm.is_finite()) {
            return Err(Error::Domain(format!(
                "wavelength must be positive, got {wavelength_pm} pm"
            )));
        }
        Ok(Self {
            n,
            pitch_nm,
            wavelength_pm,
        })
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_pm * 1e-3
    }

    /// Physical half-width of the grid in nm.
    pub fn half_extent_nm(&self) -> f64 {
        0.5 * self.n as f64 * self.pitch_nm
    }

    #[inline]
    pub fn coord(&self, index: usize) -> f64 {
        (index as f64 - (self.n / 2) as f64) * self.pitch_nm
    }
}

/// A sampled complex scalar wavefunction on a square power-of-two grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub n: usize,
    pub pitch_nm: f64,
    pub wavelength_pm: f64,
    /// Axial position tag.
    pub z_nm: f64,
    /// Set on far-field patterns: the nominal camera length used to convert
    /// scattering angles into the `pitch_nm` scale.
    pub camera_length_nm: Option<f64>,
    pub samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            n: grid.n,
            pitch_nm: grid.pitch_nm,
            wavelength_pm: grid.wavelength_pm,
            z_nm: 0.0,
            camera_length_nm: None,
            samples: vec![Complex64::new(0.0, 0.0); grid.n * grid.n],
        }
    }

    pub fn from_samples(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n * grid.n {
            return Err(Error::Domain(format!(
                "expected {} samples, got {}",
                grid.n * grid.n,
                samples.len()
            )));
        }
        Ok(Self {
            samples,
            ..Self::zeros_like_metric(grid)
        })
    }

    fn zeros_like_metric(grid: Grid) -> Self {
        Self {
            n: grid.n,
            pitch_nm: grid.pitch_nm,
            wavelength_pm: grid.wavelength_pm,
            z_nm: 0.0,
            camera_length_nm: None,
            samples: Vec::new(),
        }
    }

    /// Evaluate `f(x_nm, y_nm)` at every sample.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let n = grid.n;
        let mut samples = vec![Complex64::new(0.0, 0.0); n * n];
        samples.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let y = grid.coord(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(grid.coord(j), y);
            }
        });
        Self {
            samples,
            ..Self::zeros_like_metric(grid)
        }
    }

    pub fn grid(&self) -> Grid {
        Grid {
            n: self.n,
            pitch_nm: self.pitch_nm,
            wavelength_pm: self.wavelength_pm,
        }
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_pm * 1e-3
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.samples[row * self.n + col]
    }

    /// P = Σ|u|²·pitch².
    pub fn power(&self) -> f64 {
        let s: f64 = self.samples.par_iter().map(|v| v.norm_sqr()).sum();
        s * self.pitch_nm * self.pitch_nm
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.par_iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn max_intensity(&self) -> f64 {
        self.samples
            .iter()
            .map(|v| v.norm_sqr())
            .fold(0.0, f64::max)
    }

    pub fn scale(&mut self, c: Complex64) {
        self.samples.par_iter_mut().for_each(|v| *v *= c);
    }

    /// Rescale to unit total power. A null field is left untouched.
    pub fn normalize(&mut self) {
        let p = self.power();
        if p > 0.0 {
            self.scale(Complex64::new(1.0 / p.sqrt(), 0.0));
        }
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.samples.par_iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.n != other.n
            || self.pitch_nm != other.pitch_nm
            || self.wavelength_pm != other.wavelength_pm
        {
            return Err(Error::GridMismatch(format!(
                "({}, {} nm, {} pm) vs ({}, {} nm, {} pm)",
                self.n,
                self.pitch_nm,
                self.wavelength_pm,
                other.n,
                other.pitch_nm,
                other.wavelength_pm
            )));
        }
        Ok(())
    }

    /// self += c·other.
    pub fn add_scaled(&mut self, other: &Self, c: Complex64) -> Result<()> {
        self.check_same_grid(other)?;
        self.samples
            .par_iter_mut()
            .zip(other.samples.par_iter())
            .for_each(|(a, b)| *a += c * b);
        Ok(())
    }

    /// Intensity-weighted centroid in nm relative to the optical axis.
    pub fn centroid_nm(&self) -> (f64, f64) {
        let g = self.grid();
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut s = 0.0;
        for i in 0..self.n {
            let y = g.coord(i);
            for j in 0..self.n {
                let w = self.samples[i * self.n + j].norm_sqr();
                sx += w * g.coord(j);
                sy += w * y;
                s += w;
            }
        }
        if s == 0.0 {
            (0.0, 0.0)
        } else {
            (sx / s, sy / s)
        }
    }

    /// Bilinear interpolation at fractional pixel coordinates (column, row).
    /// Outside the grid the field is zero.
    #[inline]
    pub fn sample_bilinear(&self, col: f64, row: f64) -> Complex64 {
        let n = self.n as isize;
        let c0 = col.floor();
        let r0 = row.floor();
        let fx = col - c0;
        let fy = row - r0;
        let c0 = c0 as isize;
        let r0 = r0 as isize;
        let get = |r: isize, c: isize| -> Complex64 {
            if r < 0 || c < 0 || r >= n || c >= n {
                Complex64::new(0.0, 0.0)
            } else {
                self.samples[(r * n + c) as usize]
            }
        };
        get(r0, c0) * ((1.0 - fx) * (1.0 - fy))
            + get(r0, c0 + 1) * (fx * (1.0 - fy))
            + get(r0 + 1, c0) * ((1.0 - fx) * fy)
            + get(r0 + 1, c0 + 1) * (fx * fy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_requires_power_of_two() {
        assert!(Grid::new(100, 1.0, 2.0).is_err());
        assert!(Grid::new(128, 0.0, 2.0).is_err());
        assert!(Grid::new(128, 1.0, 2.0).is_ok());
    }

    #[test]
    fn mismatched_grids_refuse_to_combine() {
        let a = ComplexField::zeros(Grid::new(16, 1.0, 2.0).unwrap());
        let mut b = ComplexField::zeros(Grid::new(16, 2.0, 2.0).unwrap());
        assert!(matches!(
            b.add_scaled(&a, Complex64::new(1.0, 0.0)),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn normalize_gives_unit_power() {
        let g = Grid::new(32, 0.5, 2.0).unwrap();
        let mut f = ComplexField::from_fn(g, |x, y| Complex64::new(x, y + 1.0));
        f.normalize();
        assert!((f.power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bilinear_hits_samples_exactly() {
        let g = Grid::new(8, 1.0, 2.0).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::new(x * 3.0 + y, 0.0));
        assert_eq!(f.sample_bilinear(3.0, 5.0), f.at(5, 3));
        // linear functions are reproduced between samples
        let v = f.sample_bilinear(3.25, 5.5);
        assert!((v.re - (g.coord(0) + 3.25) * 3.0 - (g.coord(0) + 5.5)).abs() < 1e-12);
    }
}
