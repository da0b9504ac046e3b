//! Stable float formatting for CSV and SVG output: nine significant
//! digits, plain decimal notation in a wide magnitude window, scientific
//! outside it. Identical input bytes in, identical output bytes out.

/// Formats with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".to_string() } else { "inf".to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..15).contains(&exp) {
        let decimals = (8 - exp).clamp(0, 17) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}
