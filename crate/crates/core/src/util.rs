//! Formatting helpers shared by the CSV/JSON/PGM writers.

/// Formats a float with 17 significant digits so that parsing the text
/// recovers the exact `f64` bit pattern.
pub fn fmt_g17(x: f64) -> String {
    format!("{:.16e}", x)
}
