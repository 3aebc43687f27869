//! Text encoding for reals in CSV output.

/// Formats `x` with 17 significant digits, enough for an exact `f64`
/// round-trip through `str::parse`.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // NaN/inf never reach the writers through the public API, but keep
        // the output parseable if they do.
        format!("{x}")
    }
}
