//! ⟨L⟩ estimation by monotone inversion of a rotation-vs-ℓ curve.

use super::rotation::AZIMUTHAL_BINS;
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Domain(
                "interpolation needs at least two points".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotone);
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = s[0];
            d[1] = s[0];
        } else {
            for i in 1..n - 1 {
                if s[i - 1] * s[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], s[0], s[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k => (k - 1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (u2, u3) = (u * u, u * u * u);
        (2.0 * u3 - 3.0 * u2 + 1.0) * self.y[i]
            + (u3 - 2.0 * u2 + u) * h * self.d[i]
            + (-2.0 * u3 + 3.0 * u2) * self.y[i + 1]
            + (u3 - u2) * h * self.d[i + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let u2 = u * u;
        ((6.0 * u2 - 6.0 * u) * self.y[i]
            + (3.0 * u2 - 4.0 * u + 1.0) * h * self.d[i]
            + (-6.0 * u2 + 6.0 * u) * self.y[i + 1]
            + (3.0 * u2 - 2.0 * u) * h * self.d[i + 1])
            / h
    }
}

fn end_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanOamFit {
    pub l_hat: f64,
    /// One-sigma, from half an azimuthal bin through the local inverse slope.
    pub sigma: f64,
    /// Measured rotation minus the curve evaluated at `l_hat`.
    pub residual_rad: f64,
}

/// Invert a rotation curve given as (ℓ, rotation) points.
///
/// Rotation must be strictly monotone in ℓ over the points supplied.
pub fn fit_mean_oam(measured_rad: f64, curve: &[(f64, f64)]) -> Result<MeanOamFit> {
    let mut pts: Vec<(f64, f64)> = curve.iter().copied().filter(|p| p.1.is_finite()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 2 {
        return Err(Error::Domain(
            "rotation curve needs at least two points".into(),
        ));
    }
    let increasing = pts[1].1 > pts[0].1;
    if pts
        .windows(2)
        .any(|w| !(w[1].0 > w[0].0) || (w[1].1 > w[0].1) != increasing || w[1].1 == w[0].1)
    {
        return Err(Error::NonMonotone);
    }
    let forward = Pchip::new(
        pts.iter().map(|p| p.0).collect(),
        pts.iter().map(|p| p.1).collect(),
    )?;
    let mut inv: Vec<(f64, f64)> = pts.iter().map(|p| (p.1, p.0)).collect();
    inv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let inverse = Pchip::new(
        inv.iter().map(|p| p.0).collect(),
        inv.iter().map(|p| p.1).collect(),
    )?;
    let (lo, hi) = inverse.domain();
    if !(measured_rad >= lo && measured_rad <= hi) {
        return Err(Error::Extrapolation {
            measured: measured_rad,
            lo,
            hi,
        });
    }
    let l_hat = inverse.eval(measured_rad);
    let half_bin = PI / AZIMUTHAL_BINS as f64;
    let sigma = half_bin * inverse.derivative(measured_rad).abs();
    Ok(MeanOamFit {
        l_hat,
        sigma,
        residual_rad: measured_rad - forward.eval(l_hat),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn curve() -> Vec<(f64, f64)> {
        (-8..=8)
            .map(|k| {
                let l = 200.0 * k as f64;
                (l, 1e-3 * l + 1e-7 * l * l.abs())
            })
            .collect()
    }

    #[test]
    fn round_trip_on_nodes() {
        let c = curve();
        for &(l, r) in &c {
            let f = fit_mean_oam(r, &c).unwrap();
            assert!((f.l_hat - l).abs() < 1e-9, "{l}: {}", f.l_hat);
            assert!(f.residual_rad.abs() < 1e-12);
            assert!(f.sigma > 0.0);
        }
    }

    #[test]
    fn out_of_hull_and_non_monotone() {
        let c = curve();
        assert!(matches!(
            fit_mean_oam(10.0, &c),
            Err(Error::Extrapolation { .. })
        ));
        let bad = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)];
        assert_eq!(fit_mean_oam(0.2, &bad), Err(Error::NonMonotone));
    }

    #[test]
    fn sigma_follows_slope() {
        let lin: Vec<(f64, f64)> = (0..5).map(|k| (k as f64 * 10.0, k as f64 * 0.01)).collect();
        let f = fit_mean_oam(0.015, &lin).unwrap();
        assert!((f.l_hat - 15.0).abs() < 1e-9);
        assert!((f.sigma - PI / 1024.0 * 1000.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn pchip_preserves_monotonicity(ys in proptest::collection::vec(0.01f64..5.0, 3..12), t in 0.0f64..1.0) {
            let mut acc = 0.0;
            let y: Vec<f64> = ys.iter().map(|d| { acc += d; acc }).collect();
            let x: Vec<f64> = (0..y.len()).map(|i| i as f64).collect();
            let p = Pchip::new(x.clone(), y.clone()).unwrap();
            let a = t * (y.len() - 1) as f64;
            let b = (a + 0.01).min((y.len() - 1) as f64);
            prop_assert!(p.eval(b) >= p.eval(a) - 1e-12);
            prop_assert!(p.eval(a) >= y[0] - 1e-12 && p.eval(a) <= *y.last().unwrap() + 1e-12);
        }
    }
}
