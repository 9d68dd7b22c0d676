//! Decibel conversions used at the configuration and reporting boundary.

/// dBm to mW.
pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// mW to dBm.
pub fn linear_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// dB ratio to linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
