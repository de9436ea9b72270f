//! Power and amplitude conversions, all referred to a 50 ohm load.

use crate::REFERENCE_IMPEDANCE_OHM;

/// Power floor used when converting zero power to dBm.
pub const NUMERIC_FLOOR_DBM: f64 = -300.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    if watts <= 0.0 {
        return NUMERIC_FLOOR_DBM;
    }
    (10.0 * watts.log10() + 30.0).max(NUMERIC_FLOOR_DBM)
}

/// Peak amplitude of a sinusoid that delivers `dbm` into the reference load.
pub fn dbm_to_peak_volts(dbm: f64) -> f64 {
    (2.0 * REFERENCE_IMPEDANCE_OHM * dbm_to_watts(dbm)).sqrt()
}

/// Average power of a sinusoid with peak amplitude `volts`, in dBm.
pub fn peak_volts_to_dbm(volts: f64) -> f64 {
    watts_to_dbm(volts * volts / (2.0 * REFERENCE_IMPEDANCE_OHM))
}

pub fn db_to_voltage_ratio(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn db_to_power_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
