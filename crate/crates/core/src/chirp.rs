//! Linear FM chirp definition and the closed-form chirp/echo/IF relations.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::units::dbm_to_peak_volts;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Up-chirp parameters. Immutable once built; use [`make_chirp`] or
/// [`ChirpParams::from_slope`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpParams {
    /// Start frequency f_c (Hz).
    pub start_freq_hz: f64,
    /// Swept bandwidth B (Hz).
    pub bandwidth_hz: f64,
    /// Modulation time T (s).
    pub duration_s: f64,
    /// Slope s = B/T (Hz/s).
    pub slope_hz_per_s: f64,
    pub initial_phase_rad: f64,
    /// Peak transmit amplitude a0 (V) into the reference load.
    pub amplitude_v: f64,
    pub tx_power_dbm: f64,
    /// Start-to-start spacing of consecutive chirps. Defaults to T
    /// (back-to-back chirps).
    pub repetition_interval_s: f64,
}

/// Builds a chirp from start frequency, bandwidth and modulation time.
pub fn make_chirp(
    start_freq_hz: f64,
    bandwidth_hz: f64,
    duration_s: f64,
    initial_phase_rad: f64,
    tx_power_dbm: f64,
) -> Result<ChirpParams> {
    check_positive("start frequency", start_freq_hz)?;
    check_positive("bandwidth", bandwidth_hz)?;
    check_positive("modulation time", duration_s)?;
    if !tx_power_dbm.is_finite() || !initial_phase_rad.is_finite() {
        return Err(Error::invalid("transmit power and phase must be finite"));
    }
    Ok(ChirpParams {
        start_freq_hz,
        bandwidth_hz,
        duration_s,
        slope_hz_per_s: bandwidth_hz / duration_s,
        initial_phase_rad,
        amplitude_v: dbm_to_peak_volts(tx_power_dbm),
        tx_power_dbm,
        repetition_interval_s: duration_s,
    })
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be positive, got {v}")))
    }
}

impl ChirpParams {
    /// Builds a chirp from its slope; the modulation time is derived as B/s.
    pub fn from_slope(
        start_freq_hz: f64,
        bandwidth_hz: f64,
        slope_hz_per_s: f64,
        initial_phase_rad: f64,
        tx_power_dbm: f64,
    ) -> Result<Self> {
        check_positive("slope", slope_hz_per_s)?;
        check_positive("bandwidth", bandwidth_hz)?;
        let mut c = make_chirp(
            start_freq_hz,
            bandwidth_hz,
            bandwidth_hz / slope_hz_per_s,
            initial_phase_rad,
            tx_power_dbm,
        )?;
        c.slope_hz_per_s = slope_hz_per_s;
        Ok(c)
    }

    pub fn with_repetition_interval(mut self, interval_s: f64) -> Result<Self> {
        if !(interval_s >= self.duration_s) || !interval_s.is_finite() {
            return Err(Error::invalid(format!(
                "repetition interval {interval_s} s shorter than chirp {} s",
                self.duration_s
            )));
        }
        self.repetition_interval_s = interval_s;
        Ok(self)
    }

    pub fn stop_freq_hz(&self) -> f64 {
        self.start_freq_hz + self.bandwidth_hz
    }

    pub fn center_freq_hz(&self) -> f64 {
        self.start_freq_hz + 0.5 * self.bandwidth_hz
    }

    /// Total transmit phase at time t (rad), unwrapped.
    pub fn phase(&self, t: f64) -> f64 {
        TAU * (self.start_freq_hz * t + 0.5 * self.slope_hz_per_s * t * t) + self.initial_phase_rad
    }

    pub fn instantaneous_freq_hz(&self, t: f64) -> f64 {
        self.start_freq_hz + self.slope_hz_per_s * t
    }

    /// Transmitted voltage a0·cos(2π(f_c t + s t²/2) + φ0) for t in [0, T].
    pub fn tx_waveform(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.duration_s).contains(&t) {
            return Err(Error::OutOfWindow {
                t,
                duration: self.duration_s,
            });
        }
        Ok(self.amplitude_v * self.phase(t).cos())
    }
}

/// Built-in radar configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadarPreset {
    /// 2.052-2.6 GHz at 11.2 MHz/us, 0 dBm: the sweep used for measurements.
    RocOperational,
    /// 2.05-2.6 GHz, the chip's nominal 550 MHz sweep, same slope.
    RocNominal,
}

impl RadarPreset {
    pub const ALL: [RadarPreset; 2] = [RadarPreset::RocOperational, RadarPreset::RocNominal];

    pub const SLOPE_HZ_PER_S: f64 = 11.2e12;

    pub fn name(self) -> &'static str {
        match self {
            RadarPreset::RocOperational => "roc-operational",
            RadarPreset::RocNominal => "roc-nominal",
        }
    }

    pub fn chirp(self) -> ChirpParams {
        let (f_c, b) = match self {
            RadarPreset::RocOperational => (2.052e9, 548e6),
            RadarPreset::RocNominal => (2.05e9, 550e6),
        };
        ChirpParams::from_slope(f_c, b, Self::SLOPE_HZ_PER_S, 0.0, 0.0).expect("preset parameters are valid")
    }
}

impl fmt::Display for RadarPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RadarPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RadarPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown radar preset '{s}'")))
    }
}

/// One echo path as seen at the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoContribution {
    /// Round-trip delay τ (s).
    pub tau_s: f64,
    /// Received amplitude a1 (V).
    pub amplitude_v: f64,
    /// Mixer output amplitude b (V).
    pub if_amplitude_v: f64,
    pub path_label: String,
}

impl EchoContribution {
    /// `conversion_gain` is the linear voltage gain of the mixer chain.
    pub fn new(tau_s: f64, amplitude_v: f64, conversion_gain: f64, path_label: impl Into<String>) -> Result<Self> {
        if !(tau_s >= 0.0) || !(amplitude_v >= 0.0) || !(conversion_gain >= 0.0) {
            return Err(Error::invalid(format!(
                "echo needs tau >= 0 and amplitude >= 0 (tau={tau_s}, a={amplitude_v}, g={conversion_gain})"
            )));
        }
        Ok(Self {
            tau_s,
            amplitude_v,
            if_amplitude_v: conversion_gain * amplitude_v,
            path_label: path_label.into(),
        })
    }
}

/// f_b = s·τ.
pub fn beat_frequency(slope_hz_per_s: f64, tau_s: f64) -> Result<f64> {
    if !(tau_s >= 0.0) {
        return Err(Error::invalid(format!("delay must be non-negative, got {tau_s}")));
    }
    Ok(slope_hz_per_s * tau_s)
}

/// Smallest resolvable range separation c/(2B).
pub fn range_resolution(bandwidth_hz: f64) -> Result<f64> {
    check_positive("bandwidth", bandwidth_hz)?;
    Ok(SPEED_OF_LIGHT / (2.0 * bandwidth_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn operational() -> ChirpParams {
        make_chirp(2.052e9, 548e6, 548e6 / 11.2e12, 0.0, 0.0).unwrap()
    }

    #[test]
    fn operational_slope() {
        let c = operational();
        assert_relative_eq!(c.slope_hz_per_s, 11.2e12, max_relative = 1e-9);
        assert_relative_eq!(c.duration_s, 48.93e-6, max_relative = 1e-3);
    }

    #[test]
    fn slope_is_bandwidth_over_time() {
        let c = make_chirp(1e9, 1e6, 1e-3, 0.0, 0.0).unwrap();
        assert_relative_eq!(c.slope_hz_per_s, 1e9, max_relative = 1e-12);
    }

    #[test]
    fn zero_dbm_amplitude() {
        // sqrt(2 * 50 ohm * 1 mW) = sqrt(0.1)
        assert_relative_eq!(operational().amplitude_v, 0.316_227_766, max_relative = 1e-8);
    }

    #[test]
    fn from_slope_matches_make_chirp() {
        let a = ChirpParams::from_slope(2.052e9, 548e6, 11.2e12, 0.0, 0.0).unwrap();
        let b = operational();
        assert_relative_eq!(a.duration_s, b.duration_s, max_relative = 1e-12);
        assert_relative_eq!(a.bandwidth_hz / a.duration_s, a.slope_hz_per_s, max_relative = 1e-9);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(make_chirp(0.0, 1e6, 1e-3, 0.0, 0.0).is_err());
        assert!(make_chirp(1e9, -1e6, 1e-3, 0.0, 0.0).is_err());
        assert!(make_chirp(1e9, 1e6, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn waveform_start_is_amplitude() {
        let c = operational();
        assert_eq!(c.tx_waveform(0.0).unwrap(), c.amplitude_v);
    }

    #[test]
    fn waveform_window() {
        let c = operational();
        assert!(matches!(c.tx_waveform(-1e-9), Err(Error::OutOfWindow { .. })));
        assert!(c.tx_waveform(c.duration_s * 1.001).is_err());
        assert!(c.tx_waveform(c.duration_s).is_ok());
    }

    #[test]
    fn instantaneous_frequency_endpoints() {
        let c = operational();
        assert_relative_eq!(
            c.instantaneous_freq_hz(c.duration_s),
            c.stop_freq_hz(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            c.instantaneous_freq_hz(c.duration_s / 2.0),
            2.326e9,
            max_relative = 1e-9
        );
    }

    #[test]
    fn beat_examples() {
        let tau = 2.0 * 10.0 / SPEED_OF_LIGHT;
        assert_relative_eq!(beat_frequency(11.2e12, tau).unwrap(), 747.2e3, max_relative = 1e-4);
        assert_eq!(beat_frequency(11.2e12, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            beat_frequency(11.2e12, 255.52e-9).unwrap(),
            2.862e6,
            max_relative = 1e-3
        );
        assert!(beat_frequency(11.2e12, -1e-9).is_err());
    }

    #[test]
    fn resolution_examples() {
        assert_relative_eq!(range_resolution(550e6).unwrap(), 0.2725, epsilon = 1e-4);
        assert_relative_eq!(range_resolution(150e6).unwrap(), 0.9993, epsilon = 1e-4);
        assert_relative_eq!(
            range_resolution(1.1e9).unwrap() * 2.0,
            range_resolution(550e6).unwrap(),
            max_relative = 1e-12
        );
        assert!(range_resolution(0.0).is_err());
    }

    #[test]
    fn presets_parse() {
        for p in RadarPreset::ALL {
            assert_eq!(p.name().parse::<RadarPreset>().unwrap(), p);
        }
        assert_eq!(RadarPreset::RocNominal.chirp().bandwidth_hz, 550e6);
        assert!("roc".parse::<RadarPreset>().is_err());
    }

    #[test]
    fn echo_conversion_gain() {
        let e = EchoContribution::new(1e-7, 0.25, 4.0, "wall").unwrap();
        assert_eq!(e.if_amplitude_v, 1.0);
        assert!(EchoContribution::new(-1e-9, 0.25, 1.0, "x").is_err());
    }
}
