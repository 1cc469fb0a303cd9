use super::field::{ComplexField, Grid};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Generalized Laguerre polynomial L_p^a(x) by the three-term recurrence.
pub fn laguerre(p: u32, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if p == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..p {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Laguerre-Gauss mode LG_{p,ℓ} at its waist plane, normalized to unit power
/// on the grid:
///
/// u ∝ (√2 r/w)^|ℓ| · L_p^|ℓ|(2r²/w²) · exp(−r²/w²) · exp(iℓφ).
pub fn lg_mode(ell: i64, p: u32, waist_nm: f64, grid: Grid) -> Result<ComplexField> {
    if !(waist_nm >= 4.0 * grid.pitch_nm) {
        return Err(Error::Domain(format!(
            "waist {waist_nm} nm is not resolvable at pitch {} nm (need ≥ 4 samples)",
            grid.pitch_nm
        )));
    }
    let m = ell.unsigned_abs() as f64;
    // rms radius of the mode is w·√((2p + |ℓ| + 1)/2); keep three waists of margin
    let extent = waist_nm * (((2 * p) as f64 + m + 1.0).sqrt() + 3.0);
    if extent > grid.half_extent_nm() {
        return Err(Error::Domain(format!(
            "mode of waist {waist_nm} nm with ℓ = {ell}, p = {p} does not fit the grid half-width {} nm",
            grid.half_extent_nm()
        )));
    }
    let w2 = waist_nm * waist_nm;
    let ell_f = ell as f64;
    let mut field = ComplexField::from_fn(grid, |x, y| {
        let r2 = x * x + y * y;
        let s = 2.0 * r2 / w2;
        let radial = if r2 == 0.0 {
            if m == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            // (√2 r/w)^|ℓ| e^{−r²/w²} in log space so that large |ℓ| cannot overflow
            (0.5 * m * s.ln() - 0.5 * s).exp()
        };
        let amp = radial * laguerre(p, m, s);
        Complex64::from_polar(amp, ell_f * y.atan2(x))
    });
    field.normalize();
    Ok(field)
}

/// Rim radius w·√(|ℓ|/2) of an LG_{0,ℓ} mode.
pub fn lg_rim_radius(ell: i64, waist_nm: f64) -> f64 {
    waist_nm * (ell.unsigned_abs() as f64 / 2.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_low_orders() {
        let x = 0.7;
        let a = 2.0;
        assert_eq!(laguerre(0, a, x), 1.0);
        assert!((laguerre(1, a, x) - (1.0 + a - x)).abs() < 1e-15);
        let l2 = 0.5 * (x * x - 2.0 * (a + 2.0) * x + (a + 1.0) * (a + 2.0));
        assert!((laguerre(2, a, x) - l2).abs() < 1e-13);
    }

    #[test]
    fn unit_power_and_resolvability() {
        let g = Grid::new(128, 1.0, 2.0).unwrap();
        for (ell, p) in [(0, 0), (3, 1), (-5, 2), (12, 0)] {
            let f = lg_mode(ell, p, 6.0, g).unwrap();
            assert!((f.power() - 1.0).abs() < 1e-8);
        }
        assert!(lg_mode(1, 0, 3.0, g).is_err());
        assert!(lg_mode(40, 0, 30.0, g).is_err());
    }

    #[test]
    fn gaussian_peaks_on_axis() {
        let g = Grid::new(64, 1.0, 2.0).unwrap();
        let f = lg_mode(0, 0, 6.0, g).unwrap();
        let center = f.at(32, 32).norm_sqr();
        assert!((f.max_intensity() - center).abs() < 1e-15);
    }
}
