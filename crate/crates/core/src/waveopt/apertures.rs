//! Masks and rigid image transforms applied in a single plane.

use super::field::ComplexField;
use crate::beamline::larmor_frequency;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;

/// Knife edge through the optical axis.
///
/// The edge runs along the azimuth `edge_azimuth_rad`; points whose azimuth
/// φ satisfies sin(φ − edge) < 0 are blocked. Samples lying exactly on the
/// edge line, the axis sample included, keep half amplitude.
pub fn apply_half_plane_block(field: &ComplexField, edge_azimuth_rad: f64) -> ComplexField {
    let (s, c) = edge_azimuth_rad.sin_cos();
    let n = field.n;
    let half = (n / 2) as f64;
    let mut out = field.clone();
    out.samples
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let y = i as f64 - half;
            for (j, v) in row.iter_mut().enumerate() {
                match side_of_edge(j as f64 - half, y, s, c) {
                    Side::Blocked => *v = Complex64::new(0.0, 0.0),
                    Side::Edge => *v *= 0.5,
                    Side::Open => {}
                }
            }
        });
    out
}

#[derive(Debug, PartialEq, Eq)]
enum Side {
    Open,
    Edge,
    Blocked,
}

#[inline]
fn side_of_edge(x: f64, y: f64, s: f64, c: f64) -> Side {
    // cross product of edge direction with the position vector
    let cross = c * y - s * x;
    let scale = x.abs() + y.abs();
    if cross.abs() <= 1e-12 * scale || (x == 0.0 && y == 0.0) {
        Side::Edge
    } else if cross < 0.0 {
        Side::Blocked
    } else {
        Side::Open
    }
}

/// Zero the field outside a disk of `radius_nm` centered at `center_nm`
/// (offsets from the optical axis).
pub fn apply_circular_aperture(
    field: &ComplexField,
    radius_nm: f64,
    center_nm: (f64, f64),
) -> Result<ComplexField> {
    if !(radius_nm > 0.0) {
        return Err(Error::Domain(format!(
            "aperture radius must be positive, got {radius_nm}"
        )));
    }
    let g = field.grid();
    let n = field.n;
    let r2 = radius_nm * radius_nm;
    let mut out = field.clone();
    out.samples
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let dy = g.coord(i) - center_nm.1;
            for (j, v) in row.iter_mut().enumerate() {
                let dx = g.coord(j) - center_nm.0;
                if dx * dx + dy * dy > r2 {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        });
    Ok(out)
}

/// Rigid rotation of the sampled image by `angle_rad` (counterclockwise)
/// about the optical axis, with bilinear resampling.
pub fn rotate(field: &ComplexField, angle_rad: f64) -> ComplexField {
    if angle_rad == 0.0 {
        return field.clone();
    }
    let n = field.n;
    let half = (n / 2) as f64;
    let (s, c) = angle_rad.sin_cos();
    let mut samples = vec![Complex64::new(0.0, 0.0); n * n];
    samples.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let y = i as f64 - half;
        for (j, v) in row.iter_mut().enumerate() {
            let x = j as f64 - half;
            // source point R(−α)·(x, y)
            let xs = c * x + s * y;
            let ys = -s * x + c * y;
            *v = field.sample_bilinear(xs + half, ys + half);
        }
    });
    ComplexField {
        samples,
        ..field.clone_metric()
    }
}

/// Larmor angle Ω·dz/v in rad for a lens field `b_tesla`, `dz_nm` of travel
/// at `velocity_m_per_s`.
pub fn larmor_angle(b_tesla: f64, dz_nm: f64, velocity_m_per_s: f64) -> f64 {
    larmor_frequency(b_tesla) * dz_nm * 1e-9 / velocity_m_per_s
}

/// Image rotation from a uniform axial lens field over `dz_nm`.
///
/// This treats the Larmor term as a rigid rotation added to free
/// propagation, not as a solution of the paraxial equation in a field.
pub fn apply_larmor_rotation(
    field: &ComplexField,
    b_tesla: f64,
    dz_nm: f64,
    velocity_m_per_s: f64,
) -> ComplexField {
    rotate(field, larmor_angle(b_tesla, dz_nm, velocity_m_per_s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveopt::field::Grid;

    fn blob(n: usize) -> ComplexField {
        let g = Grid::new(n, 1.0, 2.0).unwrap();
        ComplexField::from_fn(g, |x, y| {
            let r2 = x * x + y * y;
            Complex64::from_polar((-r2 / 60.0).exp(), 0.1 * x)
        })
    }

    #[test]
    fn half_plane_is_idempotent_off_edge_and_complementary() {
        let f = blob(32);
        for &a in &[0.0, 0.3, 1.0, 2.5, -0.7] {
            let once = apply_half_plane_block(&f, a);
            let twice = apply_half_plane_block(&once, a);
            let comp = apply_half_plane_block(&once, a + std::f64::consts::PI);
            let (s, c) = f64::sin_cos(a);
            for i in 0..32 {
                for j in 0..32 {
                    let (x, y) = (j as f64 - 16.0, i as f64 - 16.0);
                    if side_of_edge(x, y, s, c) == Side::Edge {
                        assert_eq!(once.at(i, j), f.at(i, j) * 0.5);
                        continue;
                    }
                    assert_eq!(twice.at(i, j), once.at(i, j));
                    assert_eq!(comp.at(i, j), Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn half_plane_halves_symmetric_power() {
        let g = Grid::new(64, 1.0, 2.0).unwrap();
        let f = ComplexField::from_fn(g, |x, y| {
            Complex64::new((-(x * x + y * y) / 100.0).exp(), 0.0)
        });
        let b = apply_half_plane_block(&f, 0.0);
        // one edge row (y = 0) of power is the allowed slack
        let edge_row: f64 = (0..64).map(|j| f.at(32, j).norm_sqr()).sum();
        assert!((b.power() - 0.5 * f.power()).abs() <= edge_row);
    }

    #[test]
    fn circular_aperture_limits() {
        let f = blob(32);
        let big = apply_circular_aperture(&f, 100.0, (0.0, 0.0)).unwrap();
        assert_eq!(big, f);
        let tiny = apply_circular_aperture(&f, 1e-6, (0.3, 0.3)).unwrap();
        assert_eq!(tiny.power(), 0.0);
        assert!(apply_circular_aperture(&f, 0.0, (0.0, 0.0)).is_err());
    }

    #[test]
    fn larmor_angle_example() {
        // 1.7588e11 rad/s × 1 mm / 2.328e8 m/s
        let a = larmor_angle(2.0, 1e6, 2.328e8);
        assert!((a / 0.7554 - 1.0).abs() < 2e-4, "{a}");
    }

    #[test]
    fn zero_field_rotation_is_identity() {
        let f = blob(32);
        assert_eq!(apply_larmor_rotation(&f, 0.0, 1e6, 2e8), f);
    }

    #[test]
    fn rotation_then_inverse() {
        let g = Grid::new(256, 1.0, 2.0).unwrap();
        let f = ComplexField::from_fn(g, |x, y| {
            let r2 = x * x + y * y;
            Complex64::new((-r2 / 900.0).exp() * (1.0 + 0.5 * (x / 30.0).tanh()), 0.0)
        });
        let a = 0.37;
        let back = rotate(&rotate(&f, a), -a);
        let rms: f64 = (back
            .samples
            .iter()
            .zip(&f.samples)
            .map(|(u, v)| (u - v).norm_sqr())
            .sum::<f64>()
            / f.samples.iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sqrt();
        assert!(rms < 1e-3, "{rms}");
        assert!((rotate(&f, a).power() / f.power() - 1.0).abs() < 1e-3);
    }
}
