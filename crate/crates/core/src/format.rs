//! Deterministic number formatting for text outputs.

/// Round to 9 significant digits, then print the shortest decimal that
/// round-trips that rounded value (exponent form outside [1e-4, 1e15)). Non-finite values print as `inf`,
/// `-inf` or `nan`.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}
