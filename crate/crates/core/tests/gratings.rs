use num_complex::Complex64;
use std::f64::consts::PI;
use vortexholo::beamline::BeamParams;
use vortexholo::hologram::{
    transmission_function, transmission_function_band_limited, CentralHole, GrooveProfile,
    HologramSpec,
};
use vortexholo::oam::{
    diffraction_order_efficiencies, isolate_order, oam_spectrum, OrderEfficiencies,
};
use vortexholo::waveopt::{fraunhofer, NOMINAL_CAMERA_LENGTH_NM};

const V_MIP: f64 = 10.0;

fn beam() -> BeamParams {
    BeamParams::new(300e3).unwrap()
}

/// J_m(x) from the Bessel integral (1/π)∫₀^π cos(mτ − x·sin τ) dτ.
fn bessel_j(m: i32, x: f64) -> f64 {
    let n = 4000;
    (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) * PI / n as f64;
            (m as f64 * t - x * t.sin()).cos()
        })
        .sum::<f64>()
        / n as f64
}

fn efficiencies(
    spec: &HologramSpec,
    phase: f64,
    n: usize,
    band_limited: bool,
) -> OrderEfficiencies {
    let b = beam();
    let t0 = b.thickness_for_phase(phase, V_MIP).unwrap();
    let pitch = spec.pixel_pitch_nm;
    if band_limited {
        let exit = transmission_function_band_limited(spec, &b, V_MIP, t0, n, pitch).unwrap();
        let far = fraunhofer(&exit.field, NOMINAL_CAMERA_LENGTH_NM).unwrap();
        diffraction_order_efficiencies(&far, 0.0, spec.k_carrier(), spec.order_ring_radius_k(), 5)
            .unwrap()
            .relative_to(exit.transmitted_power)
            .unwrap()
    } else {
        let exit = transmission_function(spec, &b, V_MIP, t0, n, pitch).unwrap();
        let far = fraunhofer(&exit, NOMINAL_CAMERA_LENGTH_NM).unwrap();
        diffraction_order_efficiencies(&far, 0.0, spec.k_carrier(), spec.order_ring_radius_k(), 5)
            .unwrap()
    }
}

#[test]
fn sinusoidal_grating_follows_bessel_powers() {
    let mut spec = HologramSpec::new(5, 16.0, 1.0, 0.2, 1.0);
    spec.profile = GrooveProfile::Sinusoidal;
    spec.central_hole = CentralHole::Blocked;
    let phi0 = 2.0;
    let eff = efficiencies(&spec, phi0, 2048, false);
    for m in -2..=2 {
        let oracle = bessel_j(m, phi0 / 2.0).powi(2);
        let got = eff.get(m).unwrap();
        assert!(
            (got / oracle - 1.0).abs() < 0.01,
            "m = {m}: {got} vs {oracle}"
        );
    }
}

#[test]
fn quarter_wave_binary_grating_splits_evenly_into_zero_order() {
    let mut spec = HologramSpec::new(20, 8.0, 0.5, 0.15, 1.0);
    spec.central_hole = CentralHole::Blocked;
    let eff = efficiencies(&spec, PI / 2.0, 1024, true);
    let p0 = eff.get(0).unwrap();
    assert!((p0 - 0.5).abs() < 0.005, "P0 = {p0}");
    let p1 = eff.get(1).unwrap();
    let oracle = (2.0 / PI).powi(2) * (PI / 4.0).sin().powi(2);
    assert!((p1 - oracle).abs() < 0.005, "P1 = {p1} vs {oracle}");
}

#[test]
fn binary_pi_orders_sum_below_one_and_near_series_total() {
    let mut spec = HologramSpec::new(5, 24.0, 1.0, 0.3, 1.0);
    spec.central_hole = CentralHole::Blocked;
    let eff = efficiencies(&spec, PI, 2048, true);
    let series: f64 = (-5..=5)
        .filter(|m: &i32| m % 2 != 0)
        .map(|m| (2.0 / (m as f64 * PI)).powi(2))
        .sum();
    let sum = eff.sum();
    assert!(sum <= 1.0);
    assert!((sum - series).abs() < 0.01, "{sum} vs {series}");
}

#[test]
fn isolated_first_order_carries_the_hologram_charge() {
    let mut spec = HologramSpec::new(50, 8.0, 0.5, 0.2, 1.0);
    spec.central_hole = CentralHole::Blocked;
    let b = beam();
    let t0 = b.thickness_for_phase(PI, V_MIP).unwrap();
    let exit = transmission_function_band_limited(&spec, &b, V_MIP, t0, 1024, 1.0).unwrap();
    let far = fraunhofer(&exit.field, NOMINAL_CAMERA_LENGTH_NM).unwrap();
    for (order, ell) in [(1, 50), (-1, -50)] {
        let near = isolate_order(&far, order, 0.0, spec.k_carrier()).unwrap();
        let s = oam_spectrum(&near, -100, 100, Some((0.0, 0.0))).unwrap();
        assert_eq!(s.peak(), ell);
        assert!(s.get(ell) > 0.9, "P({ell}) = {}", s.get(ell));
    }
}

#[test]
fn band_limited_and_point_sampled_agree_for_smooth_profiles() {
    let mut spec = HologramSpec::new(3, 32.0, 0.25, 0.05, 1.0);
    spec.profile = GrooveProfile::Sinusoidal;
    let b = beam();
    let t0 = b.thickness_for_phase(1.5, V_MIP).unwrap();
    let point = transmission_function(&spec, &b, V_MIP, t0, 512, 1.0).unwrap();
    let series = transmission_function_band_limited(&spec, &b, V_MIP, t0, 512, 1.0).unwrap();
    let worst = point
        .samples
        .iter()
        .zip(&series.field.samples)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
    let count = point
        .samples
        .iter()
        .filter(|v| **v != Complex64::new(0.0, 0.0))
        .count();
    assert_eq!(series.transmitted_power, count as f64);
}
