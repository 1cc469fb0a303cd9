//! Image rotation between two planes from azimuthal intensity profiles.

use super::rings::{RingSampler, MIN_BINS};
use crate::error::{Error, Result};
use crate::waveopt::ComplexField;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Azimuthal bins per annulus profile.
pub const AZIMUTHAL_BINS: usize = MIN_BINS;
/// Zero-padding factor applied to the cross-correlation spectrum.
const UPSAMPLE: usize = 8;
/// Annuli holding less than this share of the power are skipped.
const MIN_ANNULUS_POWER: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub r_inner_nm: f64,
    pub r_outer_nm: f64,
}

impl Annulus {
    pub fn new(r_inner_nm: f64, r_outer_nm: f64) -> Self {
        Self {
            r_inner_nm,
            r_outer_nm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationMeasurement {
    pub annuli: Vec<Annulus>,
    /// Counterclockwise rotation per annulus; `None` where the annulus was
    /// skipped for lack of power.
    pub delta_theta_rad: Vec<Option<f64>>,
    pub z_over_zr: Option<f64>,
    /// Rotation of the outermost annulus when more than one is given.
    pub larmor_component_rad: f64,
    /// Mean rotation of the inner annuli minus the Larmor component.
    pub gouy_component_rad: f64,
    pub warnings: Vec<String>,
}

/// Measure how far `after` is rotated relative to `before` in each annulus.
///
/// Each annulus is reduced to a profile Σ_r I(r, θ)·r over 1024 azimuthal
/// bins. The rotation is the lag maximizing the circular cross-correlation
/// of the mean-subtracted profiles, located on an 8× interpolated lag axis
/// and refined by maximizing the trigonometric interpolant of the
/// correlation within one interpolated bin. With two or more annuli the outermost one
/// is taken as the Larmor reference.
pub fn measure_rotation(
    before: &ComplexField,
    after: &ComplexField,
    annuli: &[Annulus],
) -> Result<RotationMeasurement> {
    before.check_same_grid(after)?;
    if annuli.is_empty() {
        return Err(Error::Domain("no annuli given".into()));
    }
    let mut sorted = annuli.to_vec();
    sorted.sort_by(|a, b| a.r_inner_nm.total_cmp(&b.r_inner_nm));
    for a in &sorted {
        if !(a.r_inner_nm >= 0.0 && a.r_outer_nm > a.r_inner_nm) {
            return Err(Error::Domain(format!(
                "annulus [{}, {}] nm is empty",
                a.r_inner_nm, a.r_outer_nm
            )));
        }
    }
    for w in sorted.windows(2) {
        if w[1].r_inner_nm < w[0].r_outer_nm {
            return Err(Error::Domain(format!(
                "annuli [{}, {}] and [{}, {}] nm overlap",
                w[0].r_inner_nm, w[0].r_outer_nm, w[1].r_inner_nm, w[1].r_outer_nm
            )));
        }
    }
    let sampler = RingSampler::with_bins(before.n, before.pitch_nm, (0.0, 0.0), AZIMUTHAL_BINS)?;
    let ib = before.intensity();
    let ia = after.intensity();
    let total_b: f64 = ib.iter().sum();
    let total_a: f64 = ia.iter().sum();

    let mut warnings = Vec::new();
    let mut deltas = Vec::with_capacity(sorted.len());
    for a in &sorted {
        let (pb, share_b) = annulus_profile(&sampler, &ib, before, a);
        let (pa, share_a) = annulus_profile(&sampler, &ia, after, a);
        let share = (share_b / total_b).min(share_a / total_a);
        if !(share >= MIN_ANNULUS_POWER) {
            warnings.push(format!(
                "annulus [{:.1}, {:.1}] nm holds {:.3}% of the power; skipped",
                a.r_inner_nm,
                a.r_outer_nm,
                100.0 * if share.is_finite() { share } else { 0.0 }
            ));
            deltas.push(None);
            continue;
        }
        deltas.push(Some(correlation_lag(&pb, &pa)));
    }

    let (larmor, inner): (f64, &[Option<f64>]) = if sorted.len() >= 2 {
        let (last, rest) = deltas.split_last().unwrap();
        match last {
            Some(l) => (*l, rest),
            None => {
                warnings.push("outermost annulus skipped; Larmor component set to 0".into());
                (0.0, rest)
            }
        }
    } else {
        (0.0, &deltas[..])
    };
    let valid: Vec<f64> = inner.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::Domain(
            "no inner annulus carries enough power to measure a rotation".into(),
        ));
    }
    let mean = valid.iter().sum::<f64>() / valid.len() as f64;
    Ok(RotationMeasurement {
        annuli: sorted,
        delta_theta_rad: deltas,
        z_over_zr: None,
        larmor_component_rad: larmor,
        gouy_component_rad: mean - larmor,
        warnings,
    })
}

/// Azimuthal profile Σ_r I·r and the annulus power in pixel units.
fn annulus_profile(
    sampler: &RingSampler,
    intensity: &[f64],
    field: &ComplexField,
    a: &Annulus,
) -> (Vec<f64>, f64) {
    let bins = sampler.bins;
    let r0 = a.r_inner_nm / field.pitch_nm;
    let r1 = (a.r_outer_nm / field.pitch_nm).min(sampler.max_radius_px);
    let mut profile = vec![0.0; bins];
    let mut ring = Vec::with_capacity(bins);
    let mut r = r0.ceil().max(1.0);
    while r <= r1 {
        sampler.sample_real(intensity, field.n, r, &mut ring);
        for (p, v) in profile.iter_mut().zip(&ring) {
            *p += v * r;
        }
        r += 1.0;
    }
    let power = profile.iter().sum::<f64>() * TAU / bins as f64;
    (profile, power)
}

/// Lag τ in (−π, π] maximizing Σ_θ b(θ)·a(θ + τ).
fn correlation_lag(before: &[f64], after: &[f64]) -> f64 {
    let m = before.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let to_spectrum = |p: &[f64]| {
        let mean = p.iter().sum::<f64>() / m as f64;
        let mut v: Vec<Complex64> = p.iter().map(|&x| Complex64::new(x - mean, 0.0)).collect();
        fwd.process(&mut v);
        v
    };
    let b = to_spectrum(before);
    let a = to_spectrum(after);
    let big = m * UPSAMPLE;
    let mut spec = vec![Complex64::new(0.0, 0.0); big];
    for k in 0..m / 2 {
        spec[k] = a[k] * b[k].conj();
        if k > 0 {
            spec[big - k] = a[m - k] * b[m - k].conj();
        }
    }
    let cross = spec.clone();
    planner.plan_fft_inverse(big).process(&mut spec);
    let (j, _) = spec
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.re.total_cmp(&y.1.re))
        .unwrap();
    let step = TAU / big as f64;
    let coarse = j as f64 * step;
    // the profiles' correlation is a trigonometric polynomial; maximize it
    // continuously within one interpolated bin of the coarse peak
    let harmonics: Vec<(f64, Complex64)> = (1..m / 2).map(|k| (k as f64, cross[k])).collect();
    let corr = |tau: f64| -> f64 {
        harmonics
            .iter()
            .map(|&(k, x)| (x * Complex64::from_polar(1.0, k * tau)).re)
            .sum()
    };
    let mut tau = golden_max(corr, coarse - step, coarse + step);
    tau = tau.rem_euclid(TAU);
    if tau > PI {
        tau -= TAU;
    }
    tau
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
