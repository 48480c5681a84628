//! Numeric formatting shared by every CSV writer.

/// Full 17-significant-digit scientific formatting; round-trips any f64.
pub fn csv_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Shortest round-trip formatting, used for values embedded in column names
/// and key=value manifests.
pub fn compact_f64(x: f64) -> String {
    format!("{x}")
}
