//! The four subcommands.

use crate::config::{ConfigError, GouyBeam, Rendering, RunConfig};
use crate::output::OutputDir;
use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufReader, Write};
use vortexholo::beamline::BeamParams;
use vortexholo::format::fmt_sig9;
use vortexholo::hologram::{
    fabricability_report, transmission_from_pattern, transmission_function,
    transmission_function_band_limited, write_pattern, HologramSpec, PatternFormat, RasterOptions,
};
use vortexholo::netpbm::read_image8;
use vortexholo::oam::{
    diffraction_order_efficiencies, fit_mean_oam, isolate_order, knife_edge_run, knife_edge_scan,
    mean_oam, oam_spectrum, BeamModel, Halo, HologramOrderBeam, KnifeEdgeGeometry, ScanPoint,
};
use vortexholo::waveopt::export::write_intensity_pgm16;
use vortexholo::waveopt::{fraunhofer, ComplexField, NOMINAL_CAMERA_LENGTH_NM};
use vortexholo::Error;

/// Some entries of a batch failed; outputs were written with them flagged.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct PartialRun(pub String);

/// 0 ok, 2 validation, 3 numerical or sampling, 4 fit domain, 1 otherwise.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<ConfigError>() || cause.is::<csv::Error>() {
            return 2;
        }
        if cause.is::<PartialRun>() {
            return 3;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Invalid { .. }
                | Error::Config(_)
                | Error::Domain(_)
                | Error::GridMismatch(_)
                | Error::OverlappingOrders { .. } => 2,
                Error::Sampling { .. } | Error::NotARing | Error::NoStationaryPoint => 3,
                Error::Extrapolation { .. } | Error::NonMonotone => 4,
                Error::Io(_) => 1,
            };
        }
    }
    1
}

#[derive(Serialize)]
struct SynthSummary {
    pattern_file: String,
    width: usize,
    height: usize,
    levels: u16,
    pixel_pitch_nm: f64,
    sha256: String,
    min_local_spacing_nm: f64,
    min_line_width_nm: f64,
    violating_area_fraction: f64,
    spec: HologramSpec,
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.hologram.spec();
    spec.validate()?;
    let out = OutputDir::create(&cfg.synth.output_dir)?;
    let name = format!(
        "pattern.{}",
        PatternFormat::for_profile(spec.profile).extension()
    );
    let opts = RasterOptions {
        tile_size: cfg.synth.tile_size,
    };
    let pattern = write_pattern(&spec, opts, out.writer(&name)?)?;
    let report = fabricability_report(&spec, cfg.synth.min_feature_nm, cfg.synth.fabric_samples)?;
    report.write_csv(out.writer("fabricability.csv")?)?;
    let summary = SynthSummary {
        pattern_file: name,
        width: pattern.width,
        height: pattern.height,
        levels: pattern.levels,
        pixel_pitch_nm: spec.pixel_pitch_nm,
        sha256: pattern.sha256.clone(),
        min_local_spacing_nm: report.min_local_spacing_nm,
        min_line_width_nm: report.min_line_width_nm,
        violating_area_fraction: report.violating_area_fraction,
        spec,
    };
    out.write_metadata("pattern.toml", "synth", "ok", &summary, cfg)?;
    println!(
        "{} {}x{} sha256 {}",
        summary.pattern_file, pattern.width, pattern.height, pattern.sha256
    );
    Ok(())
}

#[derive(Serialize)]
struct OrderSummary {
    order: i32,
    power_fraction: f64,
    mean_oam: f64,
    peak_ell: i64,
}

#[derive(Serialize)]
struct SimulateSummary {
    rendering: String,
    thickness_nm: f64,
    grid_n: usize,
    field_pitch_nm: f64,
    transmitted_power_nm2: f64,
    orders_rendered: Option<u32>,
    intensity_full_scale: f64,
    beam_stop: bool,
    orders: Vec<OrderSummary>,
}

/// Far-field samples inside the 0th-order box, |k_x|, |k_y| < k_carrier/2.
fn zero_order_mask(far: &ComplexField, k_carrier: f64) -> Vec<bool> {
    let n = far.n;
    let l = far.camera_length_nm.unwrap_or(NOMINAL_CAMERA_LENGTH_NM);
    let dk = TAU * far.pitch_nm / (far.wavelength_nm() * l);
    let half = k_carrier / 2.0;
    let c = (n / 2) as f64;
    (0..n * n)
        .map(|idx| {
            let kx = ((idx % n) as f64 - c) * dk;
            let ky = ((idx / n) as f64 - c) * dk;
            !(kx.abs() < half && ky.abs() < half)
        })
        .collect()
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.hologram.spec();
    spec.validate()?;
    let sim = &cfg.simulate;
    let beam = BeamParams::new(cfg.beam.accelerating_voltage_v)?;
    let v_mip = cfg.beam.v_mip_v;
    let pitch = sim.field_pitch_nm.unwrap_or(spec.pixel_pitch_nm);
    let t0 = match sim.thickness_nm {
        Some(t) => t,
        None => beam.thickness_for_phase(spec.phase_depth_rad, v_mip)?,
    };
    let n = sim.grid_n;
    let (exit, transmitted, orders_rendered, rendering) = if let Some(path) = &sim.pattern_file {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let img = read_image8(BufReader::new(file))?;
        let pattern_pitch = sim.pattern_pitch_nm.unwrap_or(spec.pixel_pitch_nm);
        let f = transmission_from_pattern(&img, pattern_pitch, &spec, &beam, v_mip, t0, n, pitch)?;
        let p = f.power();
        (f, p, None, "pattern_file")
    } else {
        match sim.rendering {
            Rendering::Point => {
                let f = transmission_function(&spec, &beam, v_mip, t0, n, pitch)?;
                let p = f.power();
                (f, p, None, "point")
            }
            Rendering::BandLimited => {
                let b = transmission_function_band_limited(&spec, &beam, v_mip, t0, n, pitch)?;
                (
                    b.field,
                    b.transmitted_power,
                    Some(b.max_order),
                    "band_limited",
                )
            }
        }
    };
    let far = fraunhofer(&exit, NOMINAL_CAMERA_LENGTH_NM)?;
    drop(exit);
    let k = spec.k_carrier();
    let eff =
        diffraction_order_efficiencies(&far, 0.0, k, spec.order_ring_radius_k(), sim.max_order)?
            .relative_to(transmitted)?;

    let out = OutputDir::create(&sim.output_dir)?;
    let mask = sim.beam_stop.then(|| zero_order_mask(&far, k));
    let (scale, _) = write_intensity_pgm16(&far, mask.as_deref(), out.writer("far_field.pgm")?)?;
    eff.write_csv(out.writer("efficiencies.csv")?)?;

    let span = sim.max_order as i64 * spec.ell.abs() + sim.ell_margin.max(0);
    let orders: Vec<i32> = (-(sim.max_order as i32)..=sim.max_order as i32).collect();
    let spectra = orders
        .iter()
        .map(|&m| {
            let near = isolate_order(&far, m, 0.0, k)?;
            oam_spectrum(&near, -span, span, Some((0.0, 0.0)))
        })
        .collect::<vortexholo::Result<Vec<_>>>()?;
    let mut w = out.writer("oam_spectrum.csv")?;
    writeln!(w, "order,ell,power_fraction")?;
    for (m, s) in orders.iter().zip(&spectra) {
        for ell in s.ells() {
            writeln!(w, "{m},{ell},{}", fmt_sig9(s.get(ell)))?;
        }
    }
    w.flush()?;

    let summary = SimulateSummary {
        rendering: rendering.to_string(),
        thickness_nm: t0,
        grid_n: n,
        field_pitch_nm: pitch,
        transmitted_power_nm2: transmitted,
        orders_rendered,
        intensity_full_scale: scale.full_scale,
        beam_stop: sim.beam_stop,
        orders: orders
            .iter()
            .zip(&spectra)
            .map(|(&m, s)| OrderSummary {
                order: m,
                power_fraction: eff.get(m).unwrap_or(0.0),
                mean_oam: mean_oam(s),
                peak_ell: s.peak(),
            })
            .collect(),
    };
    out.write_metadata("run.toml", "simulate", "ok", &summary, cfg)?;
    for o in &summary.orders {
        println!(
            "order {:>3}: P = {}, <L> = {}",
            o.order,
            fmt_sig9(o.power_fraction),
            fmt_sig9(o.mean_oam)
        );
    }
    Ok(())
}

fn knife_edge_geometry(cfg: &RunConfig) -> Result<KnifeEdgeGeometry> {
    let g = &cfg.gouy;
    let beam = match g.beam {
        GouyBeam::LaguerreGauss => BeamModel::LaguerreGauss,
        GouyBeam::HologramOrder => {
            let spec = cfg.hologram.spec();
            spec.validate()?;
            BeamModel::HologramOrder(Box::new(HologramOrderBeam {
                pitch_nm: spec.pixel_pitch_nm,
                spec,
                grid_n: g.hologram_grid_n,
                v_mip_v: cfg.beam.v_mip_v,
                upsample: g.hologram_upsample,
            }))
        }
    };
    let geo = KnifeEdgeGeometry {
        grid_n: g.grid_n,
        pitch_nm: g.pitch_nm,
        voltage_v: cfg.beam.accelerating_voltage_v,
        rim_radius_nm: g.rim_radius_nm,
        ell_ref: g.ell_ref,
        aperture_z_over_zr: g.aperture_z_over_zr,
        analysis_z_over_zr: g.analysis_z_over_zr,
        edge_azimuth_rad: g.edge_azimuth_rad,
        b_tesla: g.b_tesla,
        halo: g.halo.then(Halo::default),
        annuli: None,
        beam,
    };
    geo.validate()?;
    Ok(geo)
}

#[derive(Serialize)]
struct ParityCheck {
    ell: i64,
    rotation_rad: f64,
    mirror_rotation_rad: f64,
    /// |θ(ℓ) + θ(−ℓ)| / |θ(ℓ)|.
    defect: f64,
}

#[derive(Serialize)]
struct GouySummary {
    aperture_z_over_zr: f64,
    analysis_z_over_zr: f64,
    monotone: bool,
    failed: Vec<String>,
    snapshot_ell: Option<i64>,
    snapshot_z_r_nm: Option<f64>,
    parity: Option<ParityCheck>,
}

fn analysis_point<'a>(points: &'a [ScanPoint], z: f64) -> Option<&'a ScanPoint> {
    points.iter().find(|p| p.z_over_zr == z)
}

pub fn gouy(cfg: &RunConfig) -> Result<()> {
    let g = &cfg.gouy;
    if g.ells.is_empty() {
        return Err(ConfigError("gouy.ells must list at least one charge".into()).into());
    }
    let geo = knife_edge_geometry(cfg)?;
    let za = g.analysis_z_over_zr;
    let mut planes = g.z_points.clone();
    if !planes.contains(&za) {
        planes.push(za);
    }

    let mut jobs: Vec<(i64, &'static str)> = g.ells.iter().map(|&l| (l, "curve")).collect();
    let parity_ell = g.ells.iter().copied().find(|&l| l != 0);
    if let Some(l) = parity_ell.filter(|l| g.parity_check && !g.ells.contains(&-l)) {
        jobs.push((-l, "parity_check"));
    }
    let results: Vec<(i64, &str, vortexholo::Result<Vec<ScanPoint>>)> = jobs
        .par_iter()
        .map(|&(ell, kind)| {
            let z: &[f64] = if kind == "curve" { &planes } else { &[za] };
            (ell, kind, knife_edge_scan(ell, &geo, z))
        })
        .collect();

    let out = OutputDir::create(&g.output_dir)?;
    let mut failed = Vec::new();
    let mut curve = out.writer("curve.csv")?;
    writeln!(curve, "ell,rotation_rad,larmor_rad,z_over_zR,method,kind")?;
    let mut vs_z = out.writer("rotation_vs_z.csv")?;
    writeln!(vs_z, "ell,z_over_zR,delta_theta_inner_rad,larmor_component_rad,gouy_component_rad,larmor_expected_rad")?;
    let mut rotation_at = Vec::new();
    for (ell, kind, r) in &results {
        match r {
            Ok(points) => {
                let p = analysis_point(points, za).expect("analysis plane is scanned");
                let m = &p.measurement;
                writeln!(
                    curve,
                    "{ell},{},{},{},{},{kind}",
                    fmt_sig9(m.gouy_component_rad),
                    fmt_sig9(m.larmor_component_rad),
                    fmt_sig9(za),
                    p.method.name()
                )?;
                rotation_at.push((*ell, m.gouy_component_rad));
                if *kind == "curve" {
                    for p in points {
                        let m = &p.measurement;
                        let inner = m
                            .delta_theta_rad
                            .first()
                            .copied()
                            .flatten()
                            .unwrap_or(f64::NAN);
                        writeln!(
                            vs_z,
                            "{ell},{},{},{},{},{}",
                            fmt_sig9(p.z_over_zr),
                            fmt_sig9(inner),
                            fmt_sig9(m.larmor_component_rad),
                            fmt_sig9(m.gouy_component_rad),
                            fmt_sig9(p.larmor_angle_rad)
                        )?;
                    }
                }
            }
            Err(e) => {
                writeln!(curve, "{ell},nan,nan,{},failed,{kind}", fmt_sig9(za))?;
                failed.push(format!("ell = {ell}: {e}"));
            }
        }
    }
    curve.flush()?;
    vs_z.flush()?;

    let mut sorted: Vec<(i64, f64)> = rotation_at
        .iter()
        .copied()
        .filter(|(l, _)| g.ells.contains(l))
        .collect();
    sorted.sort_by_key(|p| p.0);
    let monotone = sorted.len() < 2 || {
        let up = sorted[1].1 > sorted[0].1;
        sorted
            .windows(2)
            .all(|w| (w[1].1 > w[0].1) == up && w[1].1 != w[0].1)
    };
    let parity = parity_ell.and_then(|l| {
        let a = rotation_at.iter().find(|p| p.0 == l)?.1;
        let b = rotation_at.iter().find(|p| p.0 == -l)?.1;
        Some(ParityCheck {
            ell: l,
            rotation_rad: a,
            mirror_rotation_rad: b,
            defect: (a + b).abs() / a.abs(),
        })
    });

    let snapshot_ell = g.snapshot_ell.unwrap_or(g.ells[0]);
    let mut snapshot_z_r = None;
    match knife_edge_run(snapshot_ell, &geo) {
        Ok(run) => {
            write_intensity_pgm16(&run.before, None, out.writer("before.pgm")?)?;
            write_intensity_pgm16(&run.after, None, out.writer("after.pgm")?)?;
            snapshot_z_r = Some(run.z_r_nm);
        }
        Err(e) => failed.push(format!("snapshot ell = {snapshot_ell}: {e}")),
    }

    let status = if failed.is_empty() { "ok" } else { "partial" };
    let summary = GouySummary {
        aperture_z_over_zr: g.aperture_z_over_zr,
        analysis_z_over_zr: za,
        monotone,
        failed: failed.clone(),
        snapshot_ell: Some(snapshot_ell),
        snapshot_z_r_nm: snapshot_z_r,
        parity,
    };
    out.write_metadata("run.toml", "gouy", status, &summary, cfg)?;
    for (ell, rot) in &rotation_at {
        println!("ell {ell:>6}: rotation {} rad", fmt_sig9(*rot));
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(PartialRun(format!(
            "{} entries failed: {}",
            failed.len(),
            failed.join("; ")
        ))
        .into())
    }
}

/// (ℓ, rotation) rows of a curve CSV, skipping failed and parity-check entries.
fn read_curve(path: &std::path::Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ell_col), Some(rot_col)) = (col("ell"), col("rotation_rad")) else {
        return Err(ConfigError(format!(
            "{} lacks ell and rotation_rad columns",
            path.display()
        ))
        .into());
    };
    let method_col = col("method");
    let kind_col = col("kind");
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if method_col.and_then(|c| rec.get(c)) == Some("failed")
            || kind_col.and_then(|c| rec.get(c)) == Some("parity_check")
        {
            continue;
        }
        let parse = |c: usize| -> Result<f64> {
            let v = rec.get(c).unwrap_or("");
            v.parse()
                .map_err(|_| ConfigError(format!("{}: bad number {v:?}", path.display())).into())
        };
        let (ell, rot) = (parse(ell_col)?, parse(rot_col)?);
        if rot.is_finite() {
            points.push((ell, rot));
        }
    }
    Ok(points)
}

/// "(L ± σ)ħ" with σ to two significant digits.
pub fn format_estimate(l_hat: f64, sigma: f64) -> String {
    let decimals = if sigma > 0.0 && sigma.is_finite() {
        (1 - sigma.log10().floor() as i32).max(0) as usize
    } else {
        3
    };
    format!("({l_hat:.decimals$} ± {sigma:.decimals$})ħ")
}

#[derive(Serialize)]
struct FitSummary {
    measured_rotation_rad: f64,
    curve_points: usize,
    l_hat: f64,
    sigma: f64,
    residual_rad: f64,
    report: String,
}

pub fn fit(cfg: &RunConfig) -> Result<()> {
    let f = &cfg.fit;
    let measured = f
        .measured_rotation_rad
        .ok_or_else(|| ConfigError("fit.measured_rotation_rad is required".into()))?;
    let path = f
        .curve_csv
        .as_deref()
        .ok_or_else(|| ConfigError("fit.curve_csv is required".into()))?;
    let points = read_curve(path)?;
    let r = fit_mean_oam(measured, &points)?;
    let report = format!("<L> = {}", format_estimate(r.l_hat, r.sigma));
    let out = OutputDir::create(&f.output_dir)?;
    let summary = FitSummary {
        measured_rotation_rad: measured,
        curve_points: points.len(),
        l_hat: r.l_hat,
        sigma: r.sigma,
        residual_rad: r.residual_rad,
        report: report.clone(),
    };
    out.write_metadata("fit.toml", "fit", "ok", &summary, cfg)?;
    println!("{report}");
    Ok(())
}
