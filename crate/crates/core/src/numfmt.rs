//! Fixed-width decimal formatting shared by state dumps and CSV output.

/// Formats `x` in scientific notation with 17 significant digits.
///
/// Seventeen significant digits are enough for any `f64` to survive a
/// print/parse round trip unchanged. Non-finite values print as `nan`,
/// `inf` or `-inf`.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}
