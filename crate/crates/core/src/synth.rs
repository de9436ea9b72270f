//! De-chirped IF synthesis.
//!
//! Each frame captures one chirp starting at `t0 = k · frame_interval`.
//! Reflectors are frozen at `t0` for the duration of the chirp
//! (stop-and-hop); at 1 m/s and T ≈ 49 µs a walker moves ~49 µm per chirp,
//! far below the 27 cm range cell.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::chirp::{ChirpParams, EchoContribution};
use crate::scene::Scene;
use crate::units::{db_to_voltage_ratio, dbm_to_watts};
use crate::{Error, Result, REFERENCE_IMPEDANCE_OHM};

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 24.32e6;
pub const DEFAULT_FRAME_INTERVAL_S: f64 = 0.03;
/// Mixer-chain voltage gain (dB); places typical echoes inside the
/// −66..−15 dBm display window.
pub const DEFAULT_CONVERSION_GAIN_DB: f64 = 45.0;
pub const DEFAULT_IF_BANDWIDTH_HZ: f64 = 12.0e6;

/// Optional ADC emulation: mid-tread quantizer with clipping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcConfig {
    pub bits: u32,
    pub full_scale_v: f64,
}

impl AdcConfig {
    pub fn twelve_bit(full_scale_v: f64) -> Self {
        Self { bits: 12, full_scale_v }
    }

    fn quantize(&self, x: f64) -> f64 {
        let step = 2.0 * self.full_scale_v / f64::from(1u32 << self.bits);
        let max_code = f64::from((1u32 << (self.bits - 1)) - 1);
        let code = (x / step).round().clamp(-max_code - 1.0, max_code);
        code * step
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    pub sample_rate_hz: f64,
    pub samples_per_frame: usize,
    pub frame_interval_s: f64,
    pub conversion_gain_db: f64,
    pub if_bandwidth_hz: f64,
    pub adc: Option<AdcConfig>,
}

impl ReceiverConfig {
    /// Defaults with one full chirp captured per frame.
    pub fn for_chirp(chirp: &ChirpParams) -> Self {
        let sample_rate_hz = DEFAULT_SAMPLE_RATE_HZ;
        Self {
            sample_rate_hz,
            samples_per_frame: samples_in_chirp(chirp, sample_rate_hz),
            frame_interval_s: DEFAULT_FRAME_INTERVAL_S,
            conversion_gain_db: DEFAULT_CONVERSION_GAIN_DB,
            if_bandwidth_hz: DEFAULT_IF_BANDWIDTH_HZ,
            adc: None,
        }
    }

    pub fn conversion_gain(&self) -> f64 {
        db_to_voltage_ratio(self.conversion_gain_db)
    }

    pub fn frames_for_duration(&self, duration_s: f64) -> usize {
        ((duration_s / self.frame_interval_s).round() as usize).max(1)
    }

    pub fn validate(&self, chirp: &ChirpParams) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) || !(self.if_bandwidth_hz > 0.0) {
            return Err(Error::config("sample rate and IF bandwidth must be positive"));
        }
        if self.sample_rate_hz <= 2.0 * self.if_bandwidth_hz {
            return Err(Error::config(format!(
                "sample rate {} Hz does not cover IF bandwidth {} Hz without aliasing",
                self.sample_rate_hz, self.if_bandwidth_hz
            )));
        }
        if self.samples_per_frame < 2 {
            return Err(Error::config("need at least 2 samples per frame"));
        }
        let span = (self.samples_per_frame - 1) as f64 / self.sample_rate_hz;
        if span > chirp.duration_s {
            return Err(Error::config(format!(
                "{} samples at {} Hz outlast the {:e} s chirp",
                self.samples_per_frame, self.sample_rate_hz, chirp.duration_s
            )));
        }
        if !(self.frame_interval_s >= chirp.repetition_interval_s) {
            return Err(Error::config(format!(
                "frame interval {} s shorter than chirp repetition {} s",
                self.frame_interval_s, chirp.repetition_interval_s
            )));
        }
        if let Some(adc) = self.adc {
            if !(1..=24).contains(&adc.bits) || !(adc.full_scale_v > 0.0) {
                return Err(Error::config("ADC needs 1..=24 bits and positive full scale"));
            }
        }
        Ok(())
    }
}

/// Number of samples that fit inside one chirp.
pub fn samples_in_chirp(chirp: &ChirpParams, sample_rate_hz: f64) -> usize {
    // tolerance so an exact T·fs integer is not lost to rounding
    ((chirp.duration_s * sample_rate_hz * (1.0 + 1e-12)).floor() as usize).max(2)
}

/// Sampled IF signal, one row per chirp frame.
#[derive(Debug, Clone)]
pub struct IfTrace {
    /// frames × samples, volts.
    pub frames: Array2<f64>,
    /// Start time of each frame (s).
    pub t0_of_frame: Vec<f64>,
    pub config: ReceiverConfig,
    pub chirp: ChirpParams,
}

impl IfTrace {
    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn samples_per_frame(&self) -> usize {
        self.frames.ncols()
    }

    /// All frames laid end to end.
    pub fn samples(&self) -> &[f64] {
        self.frames.as_slice().expect("standard layout")
    }

    /// Acquisition time of sample `i` in the concatenated stream.
    pub fn sample_time(&self, i: usize) -> f64 {
        let spf = self.samples_per_frame();
        self.t0_of_frame[i / spf] + (i % spf) as f64 / self.config.sample_rate_hz
    }

    /// Same trace with every sample rounded to f32, i.e. what the raw
    /// export stores.
    pub fn rounded_to_f32(&self) -> IfTrace {
        let mut t = self.clone();
        t.frames.mapv_inplace(|v| v as f32 as f64);
        t
    }

    /// Rebuilds a trace from a raw export. The raw format carries no timing
    /// or chirp metadata, so both are supplied by the caller.
    pub fn from_raw(raw: RawTrace, chirp: ChirpParams, frame_interval_s: f64) -> Result<IfTrace> {
        let mut config = ReceiverConfig::for_chirp(&chirp);
        config.sample_rate_hz = raw.sample_rate_hz;
        config.samples_per_frame = raw.samples;
        config.frame_interval_s = frame_interval_s;
        config.if_bandwidth_hz = config.if_bandwidth_hz.min(0.49 * raw.sample_rate_hz);
        config.validate(&chirp)?;
        let frames = Array2::from_shape_vec((raw.frames, raw.samples), raw.data.into_iter().map(f64::from).collect())
            .map_err(|e| Error::RawFormat {
            offset: 0,
            msg: e.to_string(),
        })?;
        Ok(IfTrace {
            frames,
            t0_of_frame: (0..raw.frames).map(|k| k as f64 * frame_interval_s).collect(),
            config,
            chirp,
        })
    }
}

/// b·cos(2π(sτt + f_cτ − sτ²/2)) for t inside the de-chirp overlap [τ, T].
pub fn if_tone(chirp: &ChirpParams, echo: &EchoContribution, t: f64) -> Result<f64> {
    if echo.tau_s >= chirp.duration_s {
        return Err(Error::BeyondUnambiguousWindow {
            label: echo.path_label.clone(),
            tau: echo.tau_s,
            duration: chirp.duration_s,
        });
    }
    if !(echo.tau_s..=chirp.duration_s).contains(&t) {
        return Err(Error::OutOfWindow {
            t,
            duration: chirp.duration_s,
        });
    }
    Ok(if_tone_unchecked(chirp, echo, t))
}

#[inline]
fn if_tone_unchecked(chirp: &ChirpParams, echo: &EchoContribution, t: f64) -> f64 {
    let s = chirp.slope_hz_per_s;
    let tau = echo.tau_s;
    let phase = TAU * (s * tau * t + chirp.start_freq_hz * tau - 0.5 * s * tau * tau);
    echo.if_amplitude_v * phase.cos()
}

/// Synthesizes `n_frames` chirp frames of the scene.
pub fn synthesize(scene: &Scene, chirp: &ChirpParams, rx: &ReceiverConfig, n_frames: usize) -> Result<IfTrace> {
    scene.validate()?;
    rx.validate(chirp)?;
    if n_frames == 0 {
        return Err(Error::config("need at least one frame"));
    }
    let spf = rx.samples_per_frame;
    let gain = rx.conversion_gain();
    let noise_sigma = scene
        .noise
        .density_dbm_per_hz
        .map(|dbm| (dbm_to_watts(dbm) * REFERENCE_IMPEDANCE_OHM * 0.5 * rx.sample_rate_hz).sqrt());
    let t0_of_frame: Vec<f64> = (0..n_frames).map(|k| k as f64 * rx.frame_interval_s).collect();

    let mut frames = Array2::<f64>::zeros((n_frames, spf));
    frames
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(t0_of_frame.par_iter())
        .enumerate()
        .try_for_each(|(k, (mut row, &t0))| -> Result<()> {
            let echoes = scene.echoes_at(t0, chirp, gain)?;
            if let Some(e) = echoes.iter().find(|e| e.tau_s >= chirp.duration_s) {
                return Err(Error::BeyondUnambiguousWindow {
                    label: e.path_label.clone(),
                    tau: e.tau_s,
                    duration: chirp.duration_s,
                });
            }
            for (n, v) in row.iter_mut().enumerate() {
                let t = n as f64 / rx.sample_rate_hz;
                *v = echoes
                    .iter()
                    .filter(|e| t >= e.tau_s)
                    .map(|e| if_tone_unchecked(chirp, e, t))
                    .sum();
            }
            if let Some(sigma) = noise_sigma {
                let mut rng = ChaCha8Rng::seed_from_u64(scene.noise.seed.wrapping_add(k as u64));
                for v in row.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += sigma * z;
                }
            }
            if let Some(adc) = rx.adc {
                row.mapv_inplace(|v| adc.quantize(v));
            }
            Ok(())
        })?;

    Ok(IfTrace {
        frames,
        t0_of_frame,
        config: *rx,
        chirp: *chirp,
    })
}

const RAW_MAGIC: &str = "TWRIF1";

/// Contents of a `TWRIF1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrace {
    pub frames: usize,
    pub samples: usize,
    pub sample_rate_hz: f64,
    pub data: Vec<f32>,
}

/// Writes `TWRIF1 <frames> <samples> <sample_rate_hz>\n` followed by
/// row-major little-endian f32 samples.
pub fn write_raw<W: Write>(trace: &IfTrace, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "{RAW_MAGIC} {} {} {}",
        trace.n_frames(),
        trace.samples_per_frame(),
        trace.config.sample_rate_hz
    )?;
    let mut buf = Vec::with_capacity(trace.samples().len() * 4);
    for &v in trace.samples() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()
}

pub fn read_raw<R: Read>(mut r: R) -> Result<RawTrace> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::RawFormat {
        offset: 0,
        msg: e.to_string(),
    })?;
    parse_raw(&bytes)
}

pub fn parse_raw(bytes: &[u8]) -> Result<RawTrace> {
    let bad = |offset: usize, msg: String| Error::RawFormat { offset, msg };
    if !bytes.starts_with(RAW_MAGIC.as_bytes()) {
        return Err(bad(0, format!("expected magic '{RAW_MAGIC}'")));
    }
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad(bytes.len(), "header line not terminated".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|e| bad(e.valid_up_to(), "header is not UTF-8".into()))?;

    let mut fields = Vec::new();
    let mut offset = 0;
    for tok in header.split(' ') {
        fields.push((offset, tok));
        offset += tok.len() + 1;
    }
    if fields.len() != 4 || fields[0].1 != RAW_MAGIC {
        return Err(bad(
            0,
            format!("header must be '{RAW_MAGIC} <frames> <samples> <sample_rate_hz>'"),
        ));
    }
    let count = |(off, tok): (usize, &str)| -> Result<usize> {
        tok.parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| bad(off, format!("expected a positive integer, got '{tok}'")))
    };
    let frames = count(fields[1])?;
    let samples = count(fields[2])?;
    let (off, tok) = fields[3];
    let sample_rate_hz = tok
        .parse::<f64>()
        .ok()
        .filter(|v| *v > 0.0 && v.is_finite())
        .ok_or_else(|| bad(off, format!("expected a positive sample rate, got '{tok}'")))?;

    let body = &bytes[nl + 1..];
    let expected = frames
        .checked_mul(samples)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad(fields[1].0, "frame count overflows".into()))?;
    if body.len() != expected {
        return Err(bad(
            nl + 1 + body.len().min(expected),
            format!("expected {expected} data bytes, found {}", body.len()),
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(RawTrace {
        frames,
        samples,
        sample_rate_hz,
        data,
    })
}
