//! Fabricability of a pattern: where lines become narrower than the writer
//! can resolve.

use super::{local_line_spacing, HologramSpec};
use crate::error::{Error, Result};
use crate::format::fmt_sig9;
use std::f64::consts::TAU;
use std::io::Write;

const HISTOGRAM_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingSample {
    pub rho_nm: f64,
    pub theta_rad: f64,
    pub spacing_nm: f64,
    pub line_width_nm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo_nm: f64,
    /// Upper edge; the last bin is open-ended and has `hi_nm = +inf`.
    pub hi_nm: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FabricabilityReport {
    pub min_feature_nm: f64,
    pub min_local_spacing_nm: f64,
    pub min_line_width_nm: f64,
    pub violating_area_fraction: f64,
    pub histogram: Vec<HistogramBin>,
    /// Equal-area samples over the patterned annulus.
    pub samples: Vec<SpacingSample>,
}

/// Narrower of the thick line and the gap in one local period 2d.
fn line_width(spacing: f64, duty: f64) -> f64 {
    2.0 * duty.min(1.0 - duty) * spacing
}

/// Sample the line spacing on an equal-area polar grid of
/// `samples_per_axis²` points over the annulus.
pub fn fabricability_report(
    spec: &HologramSpec,
    min_feature_nm: f64,
    samples_per_axis: usize,
) -> Result<FabricabilityReport> {
    spec.validate()?;
    if !(min_feature_nm >= 0.0 && min_feature_nm.is_finite()) {
        return Err(Error::Invalid {
            field: "min_feature",
            reason: format!("{min_feature_nm} must be non-negative"),
        });
    }
    if samples_per_axis == 0 {
        return Err(Error::Invalid {
            field: "samples_per_axis",
            reason: "must be positive".into(),
        });
    }
    let n = samples_per_axis;
    let r_in2 = spec.exclusion_radius_nm().powi(2);
    let r_out2 = spec.pattern_radius_nm().powi(2);
    let mut samples = Vec::with_capacity(n * n);
    for a in 0..n {
        let rho = (r_in2 + (a as f64 + 0.5) / n as f64 * (r_out2 - r_in2)).sqrt();
        for b in 0..n {
            let theta = (b as f64 + 0.5) / n as f64 * TAU;
            let spacing = local_line_spacing(rho, theta, spec)?;
            samples.push(SpacingSample {
                rho_nm: rho,
                theta_rad: theta,
                spacing_nm: spacing,
                line_width_nm: line_width(spacing, spec.duty),
            });
        }
    }
    let min_local_spacing_nm = samples
        .iter()
        .map(|s| s.spacing_nm)
        .fold(f64::INFINITY, f64::min);
    let min_line_width_nm = samples
        .iter()
        .map(|s| s.line_width_nm)
        .fold(f64::INFINITY, f64::min);
    let violating = samples
        .iter()
        .filter(|s| s.line_width_nm < min_feature_nm)
        .count();
    let violating_area_fraction = violating as f64 / samples.len() as f64;
    let histogram = histogram(&samples, min_local_spacing_nm, 4.0 * spec.carrier_period_nm);
    Ok(FabricabilityReport {
        min_feature_nm,
        min_local_spacing_nm,
        min_line_width_nm,
        violating_area_fraction,
        histogram,
        samples,
    })
}

fn histogram(samples: &[SpacingSample], lo: f64, cap: f64) -> Vec<HistogramBin> {
    let lo = lo.floor().min(cap);
    let width = ((cap - lo) / HISTOGRAM_BINS as f64).max(f64::MIN_POSITIVE);
    let mut bins: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|b| HistogramBin {
            lo_nm: lo + b as f64 * width,
            hi_nm: lo + (b + 1) as f64 * width,
            count: 0,
        })
        .collect();
    bins.push(HistogramBin {
        lo_nm: lo + HISTOGRAM_BINS as f64 * width,
        hi_nm: f64::INFINITY,
        count: 0,
    });
    for s in samples {
        let b = ((s.spacing_nm - lo) / width).floor();
        let idx = if b.is_finite() && b >= 0.0 {
            (b as usize).min(HISTOGRAM_BINS)
        } else {
            HISTOGRAM_BINS
        };
        bins[idx].count += 1;
    }
    bins
}

impl FabricabilityReport {
    /// CSV with a `#`-prefixed summary block followed by one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# min_feature_nm = {}", fmt_sig9(self.min_feature_nm))?;
        writeln!(
            out,
            "# min_local_spacing_nm = {}",
            fmt_sig9(self.min_local_spacing_nm)
        )?;
        writeln!(
            out,
            "# min_line_width_nm = {}",
            fmt_sig9(self.min_line_width_nm)
        )?;
        writeln!(
            out,
            "# violating_area_fraction = {}",
            fmt_sig9(self.violating_area_fraction)
        )?;
        for b in &self.histogram {
            writeln!(
                out,
                "# spacing_histogram [{}, {}) = {}",
                fmt_sig9(b.lo_nm),
                fmt_sig9(b.hi_nm),
                b.count
            )?;
        }
        writeln!(out, "rho_nm,theta_rad,spacing_nm,line_width_nm")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_sig9(s.rho_nm),
                fmt_sig9(s.theta_rad),
                fmt_sig9(s.spacing_nm),
                fmt_sig9(s.line_width_nm)
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn uniform_grating_is_all_or_nothing() {
        let s = HologramSpec::new(0, 100.0, 5.0, 1.0, 10.0);
        let r = fabricability_report(&s, 49.0, 32).unwrap();
        assert_eq!(r.violating_area_fraction, 0.0);
        assert!((r.min_line_width_nm - 50.0).abs() < 1e-9);
        let r = fabricability_report(&s, 51.0, 32).unwrap();
        assert_eq!(r.violating_area_fraction, 1.0);
    }

    #[test]
    fn zero_feature_never_violates() {
        let s = HologramSpec::new(1000, 130.0, 30.0, 2.0, 10.0);
        let r = fabricability_report(&s, 0.0, 64).unwrap();
        assert_eq!(r.violating_area_fraction, 0.0);
        assert!(r.min_line_width_nm <= r.min_local_spacing_nm);
        assert_eq!(r.histogram.iter().map(|b| b.count).sum::<usize>(), 64 * 64);
    }

    #[test]
    fn minimum_spacing_respects_closed_form_bound() {
        // |∇f| ≤ k + |ℓ|/ρ, with equality at θ = −π/2 sign(ℓ)
        let s = HologramSpec::new(1000, 130.0, 30.0, 2.0, 10.0);
        let r = fabricability_report(&s, 33.0, 256).unwrap();
        let rho0 = r.samples[0].rho_nm;
        let bound = PI / (s.k_carrier() + 1000.0 / rho0);
        assert!(r.min_local_spacing_nm >= bound * (1.0 - 1e-12));
        assert!(r.min_local_spacing_nm < bound * 1.01);
        assert!(r.violating_area_fraction > 0.0 && r.violating_area_fraction < 1.0);
    }

    #[test]
    fn narrow_duty_shrinks_lines() {
        let mut s = HologramSpec::new(0, 100.0, 5.0, 1.0, 10.0);
        s.duty = 0.3;
        let r = fabricability_report(&s, 1.0, 8).unwrap();
        assert!((r.min_line_width_nm - 30.0).abs() < 1e-9);
    }

    #[test]
    fn csv_layout() {
        let s = HologramSpec::new(3, 100.0, 1.0, 0.1, 10.0);
        let r = fabricability_report(&s, 10.0, 4).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "rho_nm,theta_rad,spacing_nm,line_width_nm");
        assert_eq!(body.len(), 17);
    }
}
