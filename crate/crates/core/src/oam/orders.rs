//! Diffraction-order bookkeeping in the far field of a grating.

use crate::error::{Error, Result};
use crate::format::fmt_sig9;
use crate::waveopt::{inverse_fraunhofer, ComplexField};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderPower {
    pub order: i32,
    /// Share of the total far-field power inside the order's box.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEfficiencies {
    pub orders: Vec<OrderPower>,
    pub total_power: f64,
}

impl OrderEfficiencies {
    pub fn get(&self, order: i32) -> Option<f64> {
        self.orders
            .iter()
            .find(|o| o.order == order)
            .map(|o| o.fraction)
    }

    pub fn sum(&self) -> f64 {
        self.orders.iter().map(|o| o.fraction).sum()
    }

    /// Fractions re-expressed relative to `transmitted_power` (nm²) instead
    /// of the far-field total, for exit waves that omit orders beyond the grid.
    pub fn relative_to(&self, transmitted_power: f64) -> Result<Self> {
        if !(transmitted_power > 0.0) {
            return Err(Error::Domain(format!(
                "transmitted power must be positive, got {transmitted_power}"
            )));
        }
        let scale = self.total_power / transmitted_power;
        Ok(Self {
            orders: self
                .orders
                .iter()
                .map(|o| OrderPower {
                    order: o.order,
                    fraction: o.fraction * scale,
                })
                .collect(),
            total_power: transmitted_power,
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "order,power_fraction")?;
        for o in &self.orders {
            writeln!(out, "{},{}", o.order, fmt_sig9(o.fraction))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Transverse wavenumber per far-field sample, rad/nm.
fn k_pitch(far: &ComplexField) -> Result<f64> {
    let l = far.camera_length_nm.ok_or_else(|| {
        Error::Domain("diffraction orders need a far-field pattern (no camera length set)".into())
    })?;
    Ok(TAU * far.pitch_nm / (far.wavelength_nm() * l))
}

/// Which order's box a far-field sample belongs to, if any.
struct OrderBoxes {
    dk: f64,
    k_carrier: f64,
    cos: f64,
    sin: f64,
    half: f64,
}

impl OrderBoxes {
    fn new(far: &ComplexField, direction_rad: f64, k_carrier: f64) -> Result<Self> {
        let (sin, cos) = direction_rad.sin_cos();
        Ok(Self {
            dk: k_pitch(far)?,
            k_carrier,
            cos,
            sin,
            half: (far.n / 2) as f64,
        })
    }

    /// Order index m whose box [m·k − k/2, m·k + k/2) along the carrier and
    /// [−k/2, k/2) across it contains sample (row, col).
    #[inline]
    fn order_of(&self, row: usize, col: usize) -> Option<i32> {
        let kx = (col as f64 - self.half) * self.dk;
        let ky = (row as f64 - self.half) * self.dk;
        let along = (kx * self.cos + ky * self.sin) / self.k_carrier;
        let across = (-kx * self.sin + ky * self.cos) / self.k_carrier;
        if !(-0.5..0.5).contains(&across) {
            return None;
        }
        Some((along + 0.5).floor() as i32)
    }
}

/// Power fractions of orders −max_order..=max_order in square boxes of side
/// k_carrier centered at m·k_carrier along the carrier direction.
///
/// `ring_radius_k` is the radius (rad/nm) of one order in k-space; orders
/// overlap unless k_carrier > 2·ring_radius_k.
pub fn diffraction_order_efficiencies(
    far: &ComplexField,
    carrier_direction_rad: f64,
    k_carrier: f64,
    ring_radius_k: f64,
    max_order: u32,
) -> Result<OrderEfficiencies> {
    if !(k_carrier > 0.0) {
        return Err(Error::Domain(format!(
            "carrier wavenumber must be positive, got {k_carrier}"
        )));
    }
    if !(k_carrier > 2.0 * ring_radius_k) {
        return Err(Error::OverlappingOrders {
            min_k_carrier: 2.0 * ring_radius_k,
        });
    }
    let boxes = OrderBoxes::new(far, carrier_direction_rad, k_carrier)?;
    let n = far.n;
    let m = max_order as i32;
    let width = (2 * m + 1) as usize;
    let (sums, total) = far
        .samples
        .par_chunks(n)
        .enumerate()
        .map(|(i, row)| {
            let mut acc = vec![0.0; width];
            let mut t = 0.0;
            for (j, v) in row.iter().enumerate() {
                let p = v.norm_sqr();
                t += p;
                if let Some(o) = boxes.order_of(i, j) {
                    if o.abs() <= m {
                        acc[(o + m) as usize] += p;
                    }
                }
            }
            (acc, t)
        })
        .reduce(
            || (vec![0.0; width], 0.0),
            |(mut a, ta), (b, tb)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, ta + tb)
            },
        );
    let orders = (-m..=m)
        .map(|o| OrderPower {
            order: o,
            fraction: if total > 0.0 {
                sums[(o + m) as usize] / total
            } else {
                0.0
            },
        })
        .collect();
    Ok(OrderEfficiencies {
        orders,
        total_power: total * far.pitch_nm * far.pitch_nm,
    })
}

/// Object-plane field of a single diffraction order with its carrier tilt
/// removed, so that it is centered in k-space and can be decomposed into OAM
/// components about the axis.
pub fn isolate_order(
    far: &ComplexField,
    order: i32,
    carrier_direction_rad: f64,
    k_carrier: f64,
) -> Result<ComplexField> {
    let boxes = OrderBoxes::new(far, carrier_direction_rad, k_carrier)?;
    let n = far.n;
    let mut masked = far.clone();
    masked
        .samples
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                if boxes.order_of(i, j) != Some(order) {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        });
    let mut near = inverse_fraunhofer(&masked)?;
    let g = near.grid();
    let kx = order as f64 * k_carrier * boxes.cos;
    let ky = order as f64 * k_carrier * boxes.sin;
    near.samples
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let y = g.coord(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v *= Complex64::from_polar(1.0, -(kx * g.coord(j) + ky * y));
            }
        });
    Ok(near)
}
