//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::process::{Command, ExitCode};
use std::time::Instant;
use vortexholo::beamline::{electron_wavelength, landau_energy, wavefront_step_length, BeamParams};
use vortexholo::constants::ELECTRON_MASS;
use vortexholo::hologram::{
    find_stationary_point, transmission_function_band_limited, write_pattern, CentralHole,
    CriticalKind, HologramSpec, RasterOptions,
};
use vortexholo::oam::{
    diffraction_order_efficiencies, fit_mean_oam, knife_edge_run, oam_spectrum, radial_profile,
    rayleigh_range, rim_radius, rotation_curve, semiclassical_rotation_with_mass, Annulus,
    KnifeEdgeGeometry,
};
use vortexholo::waveopt::{
    apply_circular_aperture, apply_half_plane_block, fraunhofer, fresnel_propagate, lg_mode,
    max_transfer_dz_nm, ComplexField, Grid, Method, PropagationPlan, NOMINAL_CAMERA_LENGTH_NM,
};

type Outcome = Result<String, String>;

const RASTER_CHILD_ENV: &str = "VORTEXHOLO_ACCEPTANCE_RASTER_CHILD";

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    if let Ok(tile) = std::env::var(RASTER_CHILD_ENV) {
        return raster_child(tile.parse().expect("tile size"));
    }
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 even-order suppression", criterion_1),
        ("2 saddle point", criterion_2),
        ("3 OAM spectrum fidelity and conservation", criterion_3),
        ("4 Gouy-rotation recovery at desk scale", criterion_4),
        ("5 Larmor/Gouy separation", criterion_5),
        ("6 constants", criterion_6),
        ("7 rasterization scale and determinism", criterion_7),
        ("8 propagator correctness", criterion_8),
        ("9 semiclassical rotation consistency", criterion_9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {name} ({secs:.1} s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1} s): {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

/// Binary phase grating of depth φ and 50% duty: |c_m|² = (2/(mπ))²·sin²(φ/2)
/// for odd m, cos²(φ/2) for m = 0, zero for even m ≠ 0.
fn binary_grating_power(m: i32, phase: f64) -> f64 {
    if m == 0 {
        (phase / 2.0).cos().powi(2)
    } else if m % 2 == 0 {
        0.0
    } else {
        (2.0 / (m as f64 * PI)).powi(2) * (phase / 2.0).sin().powi(2)
    }
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let n = 2048;
    let pitch = 1.0;
    let beam = BeamParams::new(300e3).map_err(|e| e.to_string())?;
    let mut spec = HologramSpec::new(50, 8.0 * pitch, 1.020, 0.400, pitch);
    spec.central_hole = CentralHole::Blocked;
    let v_mip = 10.0;
    let t0 = beam
        .thickness_for_phase(PI, v_mip)
        .map_err(|e| e.to_string())?;
    let exit = transmission_function_band_limited(&spec, &beam, v_mip, t0, n, pitch)
        .map_err(|e| e.to_string())?;
    let far = fraunhofer(&exit.field, NOMINAL_CAMERA_LENGTH_NM).map_err(|e| e.to_string())?;
    let eff =
        diffraction_order_efficiencies(&far, 0.0, spec.k_carrier(), spec.order_ring_radius_k(), 5)
            .and_then(|e| e.relative_to(exit.transmitted_power))
            .map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let p = |m| eff.get(m).unwrap();
    let oracle = binary_grating_power(1, PI);
    let detail = format!(
        "P0/P1 = {:.2e}, P2/P1 = {:.2e}, P+1 = {:.4}, P-1 = {:.4} (oracle {:.4}), orders kept |m| ≤ {}, {secs:.1} s",
        p(0) / p(1),
        p(2) / p(1),
        p(1),
        p(-1),
        oracle,
        exit.max_order
    );
    check(
        p(0) / p(1) < 1e-3
            && p(2) / p(1) < 1e-3
            && p(-2) / p(-1) < 1e-3
            && (p(1) - oracle).abs() <= 0.005
            && (p(-1) - oracle).abs() <= 0.005
            && secs < 30.0,
        detail,
    )
}

/// |∇f|² for f = ℓ·atan2(y, x) + k·x.
fn grad_norm2(ell: f64, k: f64, x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    let gx = k - ell * y / r2;
    let gy = ell * x / r2;
    gx * gx + gy * gy
}

/// Shrinking-window grid search for the minimum of |∇f|.
fn brute_force_min(ell: f64, k: f64, extent: f64, resolution: f64) -> (f64, f64) {
    let (mut cx, mut cy) = (0.0, 0.0);
    let mut half = extent;
    let steps = 200;
    loop {
        let h = 2.0 * half / steps as f64;
        let mut best = (f64::INFINITY, cx, cy);
        for i in 0..=steps {
            let y = cy - half + i as f64 * h;
            for j in 0..=steps {
                let x = cx - half + j as f64 * h;
                let g = grad_norm2(ell, k, x, y);
                if g < best.0 {
                    best = (g, x, y);
                }
            }
        }
        cx = best.1;
        cy = best.2;
        if h < resolution {
            return (cx, cy);
        }
        half = 4.0 * h;
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5add1e);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut ell: i64 = rng.gen_range(1..=2000);
        if rng.gen_bool(0.5) {
            ell = -ell;
        }
        let dc: f64 = rng.gen_range(30.0..300.0);
        let pitch = dc / 8.0;
        let spec = HologramSpec::new(ell, dc, 100.0, 0.0, pitch);
        let sp = find_stationary_point(&spec).map_err(|e| e.to_string())?;
        if sp.kind != CriticalKind::Saddle {
            return Err(format!(
                "ℓ = {ell}, d_c = {dc:.2}: classified {:?}",
                sp.kind
            ));
        }
        let k = TAU / dc;
        let rho = ell.unsigned_abs() as f64 / k;
        let (bx, by) = brute_force_min(ell as f64, k, 1.5 * rho, pitch / 20.0);
        let (ax, ay) = sp.xy_nm();
        let miss = (bx - ax).hypot(by - ay) / pitch;
        worst = worst.max(miss);
        if miss > 1.0 {
            return Err(format!(
                "ℓ = {ell}, d_c = {dc:.2}: brute force misses by {miss:.3} px"
            ));
        }
    }
    Ok(format!(
        "20 random (ℓ, d_c): all saddles, worst miss {worst:.3} pixel pitch"
    ))
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let beam = BeamParams::new(300e3).map_err(|e| e.to_string())?;
    let grid = Grid::new(1024, 1.0, beam.wavelength_pm).map_err(|e| e.to_string())?;
    let field = lg_mode(50, 0, 40.0, grid).map_err(|e| e.to_string())?;
    let before = oam_spectrum(&field, -100, 200, None).map_err(|e| e.to_string())?;
    let r = rim_radius(&field).map_err(|e| e.to_string())?;
    let z_r = rayleigh_range(r, beam.wavelength_pm, 1000).map_err(|e| e.to_string())?;
    let plan = PropagationPlan::angular_spectrum(&field, z_r).map_err(|e| e.to_string())?;
    let moved = fresnel_propagate(&field, &plan).map_err(|e| e.to_string())?;
    let after = oam_spectrum(&moved, -100, 200, None).map_err(|e| e.to_string())?;
    let max_diff = before
        .power
        .iter()
        .zip(&after.power)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    check(
        before.get(50) >= 0.99 && max_diff <= 1e-6 && secs < 10.0,
        format!(
            "P50 = {:.6}, max bin change after z_R = {z_r:.4e} nm: {max_diff:.2e}, {secs:.1} s",
            before.get(50)
        ),
    )
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let geo = KnifeEdgeGeometry::desk_scale();
    let mut curve_ells = vec![0];
    for l in [5, 15, 30, 50, 70, 100] {
        curve_ells.push(l);
        curve_ells.push(-l);
    }
    let curve = rotation_curve(&curve_ells, &geo);
    if let Some(bad) = curve.rows.iter().find(|r| r.error.is_some()) {
        return Err(format!(
            "curve entry ℓ = {} failed: {:?}",
            bad.ell, bad.error
        ));
    }
    let mut odd_worst: f64 = 0.0;
    for l in [5, 15, 30, 50, 70, 100] {
        let p = curve.rotation(l).unwrap();
        let m = curve.rotation(-l).unwrap();
        odd_worst = odd_worst.max((p + m).abs() / p.abs());
    }
    let positive: Vec<f64> = [0, 5, 15, 30, 50, 70, 100]
        .iter()
        .map(|&l| curve.rotation(l).unwrap().abs())
        .collect();
    let monotone_abs = positive.windows(2).all(|w| w[1] > w[0]);
    let points = curve.points();
    let mut fits = Vec::new();
    let mut worst: f64 = 0.0;
    for ell in [10, 20, 40, 80] {
        let run = knife_edge_run(ell, &geo).map_err(|e| e.to_string())?;
        let fit =
            fit_mean_oam(run.measurement.gouy_component_rad, &points).map_err(|e| e.to_string())?;
        let rel = (fit.l_hat - ell as f64).abs() / ell as f64;
        worst = worst.max(rel);
        fits.push(format!("{ell}→{:.2}±{:.2}", fit.l_hat, fit.sigma));
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        worst <= 0.10 && odd_worst <= 0.02 && monotone_abs && curve.monotone && secs < 300.0,
        format!(
            "fits [{}], worst error {:.1}%, oddness defect {:.2e}, monotone {}, {secs:.1} s",
            fits.join(", "),
            100.0 * worst,
            odd_worst,
            monotone_abs && curve.monotone
        ),
    )
}

fn criterion_5() -> Outcome {
    let ell = 40;
    let base = KnifeEdgeGeometry::desk_scale();
    let reference = knife_edge_run(ell, &base).map_err(|e| e.to_string())?;
    let gouy0 = reference.measurement.gouy_component_rad;
    let beam = BeamParams::new(base.voltage_v).map_err(|e| e.to_string())?;
    let dz = reference.analysis_z_nm - reference.aperture_z_nm;
    // Larmor angle is linear in B: pick B so that it is 10% of the Gouy rotation
    let per_tesla = vortexholo::waveopt::larmor_angle(1.0, dz, beam.velocity_m_per_s);
    let b = 0.1 * gouy0 / per_tesla;
    let geo = KnifeEdgeGeometry { b_tesla: b, ..base };
    let run = knife_edge_run(ell, &geo).map_err(|e| e.to_string())?;
    let larmor_true = run.larmor_angle_rad;
    let m = &run.measurement;
    let larmor_err = (m.larmor_component_rad - larmor_true).abs() / larmor_true.abs();
    let gouy_err = (m.gouy_component_rad - gouy0).abs() / gouy0.abs();
    check(
        larmor_err <= 0.05 && gouy_err <= 0.05,
        format!(
            "B = {b:.4e} T: Larmor {:.4e} rad vs {larmor_true:.4e} ({:.2}%), Gouy {:.4e} vs {gouy0:.4e} ({:.2}%)",
            m.larmor_component_rad,
            100.0 * larmor_err,
            m.gouy_component_rad,
            100.0 * gouy_err
        ),
    )
}

fn criterion_6() -> Outcome {
    let lambda = electron_wavelength(300e3).map_err(|e| e.to_string())?;
    let e = landau_energy(0, 1000, 2.0).map_err(|e| e.to_string())?;
    let step = wavefront_step_length(1000, lambda).map_err(|e| e.to_string())?;
    check(
        (lambda - 1.9687).abs() <= 0.0005
            && (e / 0.2317 - 1.0).abs() <= 0.01
            && (step - 1.9687).abs() <= 0.0005,
        format!("λ(300 kV) = {lambda:.5} pm, E(0, 1000, 2 T) = {e:.4} eV, step = {step:.5} nm"),
    )
}

fn acceptance_raster_spec() -> HologramSpec {
    HologramSpec::new(1000, 100.0, 40.0, 2.0, 4.0)
}

/// Child process body: stream the pattern to a temporary PBM and report
/// hash, elapsed time and peak resident memory on stdout.
fn raster_child(tile_size: usize) -> ExitCode {
    let spec = acceptance_raster_spec();
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("pattern.pbm");
    let t = Instant::now();
    let file = std::io::BufWriter::new(std::fs::File::create(&path).expect("create"));
    let out = write_pattern(&spec, RasterOptions { tile_size }, file).expect("raster");
    let secs = t.elapsed().as_secs_f64();
    let size = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    println!(
        "{} {} {} {secs} {} {size}",
        out.sha256,
        out.width,
        out.height,
        peak_rss_bytes().unwrap_or(0)
    );
    ExitCode::SUCCESS
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn criterion_7() -> Outcome {
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for tile in [4096usize, 1500] {
        let out = Command::new(&exe)
            .env(RASTER_CHILD_ENV, tile.to_string())
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "raster child failed: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        let text = String::from_utf8_lossy(&out.stdout).to_string();
        let f: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        if f.len() != 6 {
            return Err(format!("unexpected child output: {text}"));
        }
        runs.push(f);
    }
    let pixels: u64 = runs[0][1].parse::<u64>().unwrap() * runs[0][2].parse::<u64>().unwrap();
    let secs: Vec<f64> = runs.iter().map(|r| r[3].parse().unwrap()).collect();
    let rss: Vec<f64> = runs
        .iter()
        .map(|r| r[4].parse::<f64>().unwrap() / 1e9)
        .collect();
    let same = runs[0][0] == runs[1][0];
    let max_secs = secs.iter().cloned().fold(0.0, f64::max);
    let max_rss = rss.iter().cloned().fold(0.0, f64::max);
    check(
        pixels >= 400_000_000 && same && max_secs < 600.0 && max_rss > 0.0 && max_rss < 2.0,
        format!(
            "{pixels} px, {:.1}/{:.1} s, peak RSS {:.3}/{:.3} GB, sha256 {} identical across tile sizes 4096/1500: {same}",
            secs[0], secs[1], rss[0], rss[1], &runs[0][0][..16]
        ),
    )
}

fn second_moment(f: &ComplexField) -> f64 {
    let g = f.grid();
    let mut s = 0.0;
    let mut w = 0.0;
    for i in 0..f.n {
        for j in 0..f.n {
            let p = f.at(i, j).norm_sqr();
            s += p * (g.coord(i).powi(2) + g.coord(j).powi(2));
            w += p;
        }
    }
    s / w
}

/// First positive zero of J1 by bisection on its integral representation.
fn bessel_j1_first_zero() -> f64 {
    let j1 = |x: f64| {
        let m = 2000;
        (0..m)
            .map(|i| {
                let t = (i as f64 + 0.5) * PI / m as f64;
                (t - x * t.sin()).cos()
            })
            .sum::<f64>()
            / m as f64
    };
    let (mut a, mut b) = (3.0, 4.5);
    for _ in 0..60 {
        let c = 0.5 * (a + b);
        if j1(a) * j1(c) <= 0.0 {
            b = c;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn criterion_8() -> Outcome {
    let beam = BeamParams::new(300e3).map_err(|e| e.to_string())?;
    let lambda = beam.wavelength_nm();

    // Gaussian waist w0: second-moment radius grows by √2 at z_R = πw0²/λ
    let grid = Grid::new(512, 1.0, beam.wavelength_pm).map_err(|e| e.to_string())?;
    let w0 = 12.0;
    let g0 = ComplexField::from_fn(grid, |x, y| {
        Complex64::new((-(x * x + y * y) / (w0 * w0)).exp(), 0.0)
    });
    let z_r = PI * w0 * w0 / lambda;
    let gz = fresnel_propagate(
        &g0,
        &PropagationPlan::angular_spectrum(&g0, z_r).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let expansion = (second_moment(&gz) / second_moment(&g0)).sqrt();
    let gauss_err = (expansion / 2f64.sqrt() - 1.0).abs();

    // Airy pattern of a circular aperture
    let grid = Grid::new(1024, 1.0, beam.wavelength_pm).map_err(|e| e.to_string())?;
    let a = 32.0;
    let disk = apply_circular_aperture(
        &ComplexField::from_fn(grid, |_, _| Complex64::new(1.0, 0.0)),
        a,
        (0.0, 0.0),
    )
    .map_err(|e| e.to_string())?;
    let far = fraunhofer(&disk, NOMINAL_CAMERA_LENGTH_NM).map_err(|e| e.to_string())?;
    let profile = radial_profile(&far).map_err(|e| e.to_string())?;
    let k = (1..profile.len() - 1)
        .find(|&k| profile[k] < profile[k - 1] && profile[k] <= profile[k + 1])
        .ok_or("no Airy minimum")?;
    let (y0, y1, y2) = (profile[k - 1], profile[k], profile[k + 1]);
    let zero_px = k as f64 + 0.5 * (y0 - y2) / (y0 - 2.0 * y1 + y2);
    let expected_px = bessel_j1_first_zero() / (2.0 * PI) * (grid.n as f64 * grid.pitch_nm / a);
    let airy_err = (zero_px - expected_px).abs();

    // power conservation on random fields
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = Grid::new(64, 0.5, beam.wavelength_pm).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let samples: Vec<Complex64> = (0..64 * 64)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = ComplexField::from_samples(grid, samples).map_err(|e| e.to_string())?;
        let limit = max_transfer_dz_nm(&f);
        let dz = rng.gen_range(-limit..limit);
        let method = if i % 2 == 0 {
            Method::AngularSpectrum
        } else {
            Method::FresnelTransfer
        };
        let g = fresnel_propagate(
            &f,
            &PropagationPlan::new(&f, dz, method).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        worst = worst.max((g.power() / f.power() - 1.0).abs());
    }
    check(
        gauss_err <= 0.01 && airy_err <= 0.5 && worst <= 1e-10,
        format!(
            "Gaussian expansion {expansion:.5} (error {:.3}%), Airy zero at {zero_px:.3} px vs {expected_px:.3} px, worst power drift {worst:.1e}",
            100.0 * gauss_err
        ),
    )
}

fn criterion_9() -> Outcome {
    let ell = 40;
    let geo = KnifeEdgeGeometry::desk_scale();
    let beam = BeamParams::new(geo.voltage_v).map_err(|e| e.to_string())?;
    let (waist, rim0) = vortexholo::oam::beam_at_waist(ell, &geo).map_err(|e| e.to_string())?;
    let z_r = rayleigh_range(rim0, beam.wavelength_pm, geo.ell_ref).map_err(|e| e.to_string())?;
    let propagate = |f: &ComplexField, dz: f64| -> Result<ComplexField, String> {
        let plan = PropagationPlan::angular_spectrum(f, dz).map_err(|e| e.to_string())?;
        fresnel_propagate(f, &plan).map_err(|e| e.to_string())
    };
    let s_a = 0.5;
    let before = apply_half_plane_block(&propagate(&waist, s_a * z_r)?, 0.0);
    drop(waist);
    let annuli = [Annulus::new(0.25 * rim0, 2.0 * rim0)];
    // relativistic momentum p = γ·m·v
    let mass = beam.lorentz_factor() * ELECTRON_MASS;
    let planes = [0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
    let mut predicted = 0.0;
    let mut prev = s_a;
    let mut worst: f64 = 0.0;
    let mut report = Vec::new();
    for &s in &planes {
        let mid = propagate(&before, (0.5 * (prev + s) - s_a) * z_r)?;
        let r_mid = rim_radius(&mid).map_err(|e| e.to_string())?;
        drop(mid);
        predicted += semiclassical_rotation_with_mass(
            ell as f64,
            r_mid,
            0.0,
            (s - prev) * z_r,
            beam.velocity_m_per_s,
            1,
            mass,
        )
        .map_err(|e| e.to_string())?
        .total_rad;
        let after = propagate(&before, (s - s_a) * z_r)?;
        let m = vortexholo::oam::measure_rotation(&before, &after, &annuli)
            .map_err(|e| e.to_string())?;
        let measured = m.gouy_component_rad;
        let rel = (measured - predicted).abs() / predicted.abs();
        worst = worst.max(rel);
        report.push(format!("{s}: {measured:.4}/{predicted:.4}"));
        prev = s;
    }
    check(
        worst <= 0.25,
        format!(
            "z/z_R: measured/semiclassical rad [{}], worst deviation {:.1}%",
            report.join(", "),
            100.0 * worst
        ),
    )
}
