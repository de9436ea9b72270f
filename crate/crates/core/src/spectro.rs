//! Short-time Fourier analysis of IF traces and calibrated spectrogram grids.
//!
//! Frames are laid end to end and windows slide across frame boundaries;
//! each window is stamped with the acquisition time of its center sample.
//! Coefficients are kept unscaled; power accessors apply the one-sided
//! amplitude correction 2/Σw so a sinusoid of amplitude A centered on a bin
//! reads A²/(2R).

use std::f64::consts::TAU;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::synth::IfTrace;
use crate::units::watts_to_dbm;
use crate::{Error, Result, REFERENCE_IMPEDANCE_OHM};

/// Target −3 dB resolution bandwidth of the default analysis window.
pub const DEFAULT_RBW_HZ: f64 = 15e3;
/// Bin spacing the default FFT length aims for.
pub const DEFAULT_BIN_HZ: f64 = 5e3;
pub const DEFAULT_FLOOR_DBM: f64 = -66.0;
pub const DEFAULT_CEIL_DBM: f64 = -15.0;
/// Wider display range for weak through-wall scenes.
pub const WIDE_FLOOR_DBM: f64 = -125.0;
pub const WIDE_CEIL_DBM: f64 = -25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hann,
    Hamming,
    Rect,
}

impl WindowKind {
    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
            WindowKind::Hamming => "hamming",
            WindowKind::Rect => "rect",
        }
    }

    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let nf = n as f64;
        (0..n)
            .map(|i| {
                let c = (TAU * i as f64 / nf).cos();
                match self {
                    WindowKind::Hann => 0.5 - 0.5 * c,
                    WindowKind::Hamming => 0.54 - 0.46 * c,
                    WindowKind::Rect => 1.0,
                }
            })
            .collect()
    }

    /// −3 dB main-lobe width in bins of 1/N.
    pub fn half_power_width_bins(self) -> f64 {
        match self {
            WindowKind::Hann => 1.44,
            WindowKind::Hamming => 1.30,
            WindowKind::Rect => 0.89,
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [WindowKind::Hann, WindowKind::Hamming, WindowKind::Rect]
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| Error::config(format!("unknown window '{s}' (hann, hamming, rect)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    pub window_kind: WindowKind,
    pub window_len: usize,
    pub hop: usize,
    pub fft_len: usize,
}

impl StftConfig {
    /// Hann window sized for a 15 kHz resolution bandwidth, 75 % overlap,
    /// and an FFT long enough for 5 kHz bins when the rate allows it.
    pub fn default_for(sample_rate_hz: f64) -> Self {
        let window_len =
            ((WindowKind::Hann.half_power_width_bins() * sample_rate_hz / DEFAULT_RBW_HZ).round() as usize).max(1);
        let per_bin = sample_rate_hz / DEFAULT_BIN_HZ;
        let fft_len = if per_bin.fract() == 0.0 && per_bin as usize >= window_len {
            per_bin as usize
        } else {
            window_len.next_power_of_two()
        };
        Self {
            window_kind: WindowKind::Hann,
            window_len,
            hop: (window_len / 4).max(1),
            fft_len,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0 < self.hop && self.hop <= self.window_len && self.window_len <= self.fft_len) {
            return Err(Error::config(format!(
                "need 0 < hop <= window_len <= fft_len, got hop {} window {} fft {}",
                self.hop, self.window_len, self.fft_len
            )));
        }
        Ok(())
    }

    pub fn resolution_bandwidth_hz(&self, sample_rate_hz: f64) -> f64 {
        self.window_kind.half_power_width_bins() * sample_rate_hz / self.window_len as f64
    }

    pub fn bin_hz(&self, sample_rate_hz: f64) -> f64 {
        sample_rate_hz / self.fft_len as f64
    }
}

/// One-sided STFT coefficients, rows = time, columns = bins 0..=fft_len/2.
#[derive(Debug, Clone)]
pub struct Stft {
    pub coefficients: Array2<Complex64>,
    /// Time stamp of each row (s), the center sample of its window.
    pub times: Vec<f64>,
    pub bin_hz: f64,
    pub sample_rate_hz: f64,
    pub config: StftConfig,
    window_sum: f64,
}

impl Stft {
    pub fn n_bins(&self) -> usize {
        self.coefficients.ncols()
    }

    /// Peak amplitude (V) a sinusoid would need to produce this coefficient.
    pub fn amplitude(&self, row: usize, bin: usize) -> f64 {
        let edge = bin == 0 || 2 * bin == self.config.fft_len;
        let scale = if edge { 1.0 } else { 2.0 } / self.window_sum;
        self.coefficients[[row, bin]].norm() * scale
    }

    /// Power into the reference load (W).
    pub fn power_watts(&self, row: usize, bin: usize) -> f64 {
        let a = self.amplitude(row, bin);
        let edge = bin == 0 || 2 * bin == self.config.fft_len;
        if edge {
            a * a / REFERENCE_IMPEDANCE_OHM
        } else {
            a * a / (2.0 * REFERENCE_IMPEDANCE_OHM)
        }
    }

    pub fn power_dbm(&self, row: usize, bin: usize) -> f64 {
        watts_to_dbm(self.power_watts(row, bin))
    }

    /// Σ over rows of the one-sided |X|² folded back to two sides, divided
    /// by fft_len: equals Σx² over the analysed samples for a rectangular
    /// window with hop = window_len.
    pub fn parseval_energy(&self) -> f64 {
        let n = self.config.fft_len;
        let mut total = 0.0;
        for row in self.coefficients.axis_iter(Axis(0)) {
            for (k, c) in row.iter().enumerate() {
                let w = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
                total += w * c.norm_sqr();
            }
        }
        total / n as f64
    }
}

/// STFT of a plain sample stream; rows are stamped at center_index / fs.
pub fn stft_signal(samples: &[f64], sample_rate_hz: f64, cfg: &StftConfig) -> Result<Stft> {
    stft_impl(samples, sample_rate_hz, cfg, |i| i as f64 / sample_rate_hz)
}

/// STFT over the concatenated frames of a trace.
pub fn stft(trace: &IfTrace, cfg: &StftConfig) -> Result<Stft> {
    stft_impl(trace.samples(), trace.config.sample_rate_hz, cfg, |i| {
        trace.sample_time(i)
    })
}

fn stft_impl(samples: &[f64], sample_rate_hz: f64, cfg: &StftConfig, time_of: impl Fn(usize) -> f64) -> Result<Stft> {
    cfg.validate()?;
    if cfg.window_len > samples.len() {
        return Err(Error::config(format!(
            "window of {} samples longer than the {} available",
            cfg.window_len,
            samples.len()
        )));
    }
    let n_rows = (samples.len() - cfg.window_len) / cfg.hop + 1;
    let n_bins = cfg.fft_len / 2 + 1;
    let window = cfg.window_kind.coefficients(cfg.window_len);
    let window_sum: f64 = window.iter().sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.fft_len);

    let mut coefficients = Array2::<Complex64>::zeros((n_rows, n_bins));
    coefficients
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each_init(
            || {
                (
                    vec![Complex64::default(); cfg.fft_len],
                    vec![Complex64::default(); fft.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), (r, mut out)| {
                let start = r * cfg.hop;
                buf.fill(Complex64::default());
                for (b, (x, w)) in buf
                    .iter_mut()
                    .zip(samples[start..start + cfg.window_len].iter().zip(&window))
                {
                    b.re = x * w;
                }
                fft.process_with_scratch(buf, scratch);
                for (o, b) in out.iter_mut().zip(buf.iter()) {
                    *o = *b;
                }
            },
        );

    let times = (0..n_rows).map(|r| time_of(r * cfg.hop + cfg.window_len / 2)).collect();
    Ok(Stft {
        coefficients,
        times,
        bin_hz: cfg.bin_hz(sample_rate_hz),
        sample_rate_hz,
        config: *cfg,
        window_sum,
    })
}

/// Display frequency axis: `points` evenly spaced values from `lo_hz` to `hi_hz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqAxis {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub points: usize,
}

impl Default for FreqAxis {
    /// 1-5 MHz in 5 kHz steps.
    fn default() -> Self {
        Self {
            lo_hz: 1e6,
            hi_hz: 5e6,
            points: 801,
        }
    }
}

impl FreqAxis {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let step = self.step_hz();
        (0..self.points).map(|i| self.lo_hz + i as f64 * step).collect()
    }

    pub fn step_hz(&self) -> f64 {
        (self.hi_hz - self.lo_hz) / (self.points - 1) as f64
    }

    fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if self.points < 2 || !(self.lo_hz >= 0.0) || !(self.lo_hz < self.hi_hz) {
            return Err(Error::config(format!(
                "display axis needs >= 2 points and 0 <= lo < hi, got {} points over {}..{} Hz",
                self.points, self.lo_hz, self.hi_hz
            )));
        }
        if self.hi_hz > sample_rate_hz / 2.0 {
            return Err(Error::config(format!(
                "display band up to {} Hz exceeds Nyquist {} Hz",
                self.hi_hz,
                sample_rate_hz / 2.0
            )));
        }
        Ok(())
    }
}

/// Power grid in dBm, rows = time, columns = display frequency. Values keep
/// full dynamic range; `floor_dbm`/`ceil_dbm` apply on export.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramGrid {
    pub power_dbm: Array2<f64>,
    pub freq_axis: Vec<f64>,
    pub time_axis: Vec<f64>,
    pub floor_dbm: f64,
    pub ceil_dbm: f64,
}

impl SpectrogramGrid {
    pub fn clamped(&self, v: f64) -> f64 {
        v.max(self.floor_dbm).min(self.ceil_dbm)
    }

    pub fn freq_step_hz(&self) -> f64 {
        if self.freq_axis.len() < 2 {
            return 0.0;
        }
        (self.freq_axis[self.freq_axis.len() - 1] - self.freq_axis[0]) / (self.freq_axis.len() - 1) as f64
    }

    pub fn max_dbm(&self) -> f64 {
        self.power_dbm.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Median of every cell, a robust noise-floor estimate.
    pub fn median_dbm(&self) -> f64 {
        let mut v: Vec<f64> = self.power_dbm.iter().copied().collect();
        if v.is_empty() {
            return f64::NAN;
        }
        let mid = v.len() / 2;
        let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
        *m
    }
}

/// Spectrogram of a trace on the given display axis.
pub fn spectrogram(
    trace: &IfTrace,
    cfg: &StftConfig,
    axis: &FreqAxis,
    floor_dbm: f64,
    ceil_dbm: f64,
) -> Result<SpectrogramGrid> {
    axis.validate(trace.config.sample_rate_hz)?;
    let s = stft(trace, cfg)?;
    grid_from_stft(&s, axis, floor_dbm, ceil_dbm)
}

/// Resamples STFT power onto a display axis. Axis points that fall on a
/// bin take that bin's power; others interpolate linearly in watts.
pub fn grid_from_stft(s: &Stft, axis: &FreqAxis, floor_dbm: f64, ceil_dbm: f64) -> Result<SpectrogramGrid> {
    axis.validate(s.sample_rate_hz)?;
    if !(floor_dbm <= ceil_dbm) {
        return Err(Error::config(format!(
            "display floor {floor_dbm} dBm above ceiling {ceil_dbm} dBm"
        )));
    }
    let freqs = axis.values();
    let last_bin = s.n_bins() - 1;
    let taps: Vec<(usize, usize, f64)> = freqs
        .iter()
        .map(|&f| {
            let pos = f / s.bin_hz;
            let nearest = pos.round();
            if (pos - nearest).abs() < 1e-9 {
                let k = (nearest as usize).min(last_bin);
                (k, k, 0.0)
            } else {
                let k = (pos.floor() as usize).min(last_bin - 1);
                (k, k + 1, pos - k as f64)
            }
        })
        .collect();

    let mut power_dbm = Array2::<f64>::zeros((s.times.len(), freqs.len()));
    power_dbm
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(r, mut row)| {
            for (cell, &(a, b, frac)) in row.iter_mut().zip(&taps) {
                let p = if frac == 0.0 {
                    s.power_watts(r, a)
                } else {
                    (1.0 - frac) * s.power_watts(r, a) + frac * s.power_watts(r, b)
                };
                *cell = watts_to_dbm(p);
            }
        });
    Ok(SpectrogramGrid {
        power_dbm,
        freq_axis: freqs,
        time_axis: s.times.clone(),
        floor_dbm,
        ceil_dbm,
    })
}

/// Header `time_s,<freqs>`, then one row per time with clamped dBm cells to
/// two decimals.
pub fn write_grid_csv<W: Write>(g: &SpectrogramGrid, w: W) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(w);
    write!(w, "time_s")?;
    for f in &g.freq_axis {
        write!(w, ",{f}")?;
    }
    writeln!(w)?;
    for (t, row) in g.time_axis.iter().zip(g.power_dbm.axis_iter(Axis(0))) {
        write!(w, "{t}")?;
        for &p in row {
            write!(w, ",{:.2}", g.clamped(p))?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Binary PGM, rows = time downward, columns = frequency rightward.
pub fn write_grid_pgm<W: Write>(g: &SpectrogramGrid, mut w: W) -> std::io::Result<()> {
    let (rows, cols) = g.power_dbm.dim();
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.reserve(rows * cols);
    out.extend(g.power_dbm.iter().map(|&p| pgm_level(p, g.floor_dbm, g.ceil_dbm)));
    w.write_all(&out)?;
    w.flush()
}

/// round(255·(clamp(p) − floor)/(ceil − floor)); a zero-width window maps
/// everything to 0.
pub fn pgm_level(p: f64, floor_dbm: f64, ceil_dbm: f64) -> u8 {
    if !(ceil_dbm > floor_dbm) {
        return 0;
    }
    let c = p.max(floor_dbm).min(ceil_dbm);
    (255.0 * (c - floor_dbm) / (ceil_dbm - floor_dbm)).round() as u8
}

/// Writes `<stem>.csv` and `<stem>.pgm`.
pub fn export_grid(g: &SpectrogramGrid, csv_path: &Path, pgm_path: &Path) -> Result<()> {
    let create = |p: &Path| std::fs::File::create(p).map_err(|e| Error::io(p, e));
    write_grid_csv(g, create(csv_path)?).map_err(|e| Error::io(csv_path, e))?;
    write_grid_pgm(g, create(pgm_path)?).map_err(|e| Error::io(pgm_path, e))?;
    Ok(())
}

/// Reads a grid written by [`write_grid_csv`]. Floor and ceiling are taken
/// from the data range.
pub fn read_grid_csv<R: Read>(r: R) -> Result<SpectrogramGrid> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("time_s") {
        return Err(Error::config("grid CSV must start with a 'time_s' column"));
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::config(format!("not a number in grid CSV: '{s}'")))
    };
    let freq_axis = headers.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?;
    let mut time_axis = Vec::new();
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != freq_axis.len() + 1 {
            return Err(Error::config(format!(
                "grid CSV row {} has {} cells, expected {}",
                time_axis.len() + 1,
                rec.len(),
                freq_axis.len() + 1
            )));
        }
        time_axis.push(parse(&rec[0])?);
        for v in rec.iter().skip(1) {
            cells.push(parse(v)?);
        }
    }
    let power_dbm = Array2::from_shape_vec((time_axis.len(), freq_axis.len()), cells).expect("shape checked per row");
    let floor_dbm = power_dbm.iter().copied().fold(f64::INFINITY, f64::min);
    let ceil_dbm = power_dbm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrogramGrid {
        power_dbm,
        freq_axis,
        time_axis,
        floor_dbm,
        ceil_dbm,
    })
}

/// Vertex offset in [-0.5, 0.5] of the parabola through three equally
/// spaced samples with `b` the local maximum.
pub fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den == 0.0 {
        0.0
    } else {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{dbm_to_peak_volts, NUMERIC_FLOOR_DBM};
    use approx::assert_relative_eq;

    const FS: f64 = 24.32e6;

    fn tone(n: usize, f: f64, a: f64, phase: f64) -> Vec<f64> {
        (0..n).map(|i| a * (TAU * f * i as f64 / FS + phase).cos()).collect()
    }

    #[test]
    fn default_config_numbers() {
        let c = StftConfig::default_for(FS);
        assert_eq!((c.window_len, c.hop, c.fft_len), (2335, 583, 4864));
        assert_eq!(c.bin_hz(FS), 5000.0);
        assert_relative_eq!(c.resolution_bandwidth_hz(FS), 15e3, max_relative = 1e-3);
        c.validate().unwrap();
    }

    #[test]
    fn config_invariants() {
        let ok = StftConfig::default_for(FS);
        for bad in [
            StftConfig { hop: 0, ..ok },
            StftConfig {
                hop: ok.window_len + 1,
                ..ok
            },
            StftConfig {
                fft_len: ok.window_len - 1,
                ..ok
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn periodic_windows() {
        let h = WindowKind::Hann.coefficients(8);
        assert_eq!(h[0], 0.0);
        assert_relative_eq!(h[4], 1.0);
        // periodic Hann sums to N/2
        assert_relative_eq!(
            WindowKind::Hann.coefficients(2335).iter().sum::<f64>(),
            2335.0 / 2.0,
            epsilon = 1e-9
        );
        assert!(WindowKind::Rect.coefficients(5).iter().all(|&w| w == 1.0));
        assert_eq!("hamming".parse::<WindowKind>().unwrap(), WindowKind::Hamming);
    }

    #[test]
    fn on_bin_tone_calibration() {
        // window gain oracle: for a bin-centred tone |X| = A·Σw/2
        let cfg = StftConfig::default_for(FS);
        let a = dbm_to_peak_volts(-30.0);
        let x = tone(cfg.window_len, 2.86e6, a, 0.3);
        let s = stft_signal(&x, FS, &cfg).unwrap();
        let bin = (2.860e6 / 5e3) as usize;
        assert!((s.power_dbm(0, bin) - -30.0).abs() < 0.05, "{}", s.power_dbm(0, bin));
    }

    #[test]
    fn zero_input_hits_floor() {
        let cfg = StftConfig::default_for(FS);
        let s = stft_signal(&vec![0.0; 5000], FS, &cfg).unwrap();
        for r in 0..s.times.len() {
            for k in 0..s.n_bins() {
                assert_eq!(s.power_dbm(r, k), NUMERIC_FLOOR_DBM);
            }
        }
    }

    #[test]
    fn parseval_rect() {
        let cfg = StftConfig {
            window_kind: WindowKind::Rect,
            window_len: 1000,
            hop: 1000,
            fft_len: 1024,
        };
        let x: Vec<f64> = (0..5000).map(|i| ((i * 7919) % 97) as f64 / 97.0 - 0.5).collect();
        let s = stft_signal(&x, FS, &cfg).unwrap();
        let e: f64 = x.iter().map(|v| v * v).sum();
        assert_relative_eq!(s.parseval_energy(), e, max_relative = 1e-6);
    }

    #[test]
    fn window_longer_than_input() {
        let cfg = StftConfig::default_for(FS);
        assert!(stft_signal(&[0.0; 100], FS, &cfg).is_err());
    }

    #[test]
    fn grid_axis_and_clamp() {
        let cfg = StftConfig::default_for(FS);
        let x = tone(10_000, 2e6, 0.1, 0.0);
        let s = stft_signal(&x, FS, &cfg).unwrap();
        let g = grid_from_stft(&s, &FreqAxis::default(), -66.0, -15.0).unwrap();
        assert_eq!(g.power_dbm.ncols(), 801);
        assert_eq!(g.freq_axis[0], 1e6);
        assert_eq!(g.freq_axis[800], 5e6);
        // exact bins are copied, not interpolated
        assert_eq!(g.power_dbm[[0, 200]], s.power_dbm(0, 400));
        let bad = FreqAxis {
            hi_hz: 13e6,
            ..FreqAxis::default()
        };
        assert!(matches!(
            grid_from_stft(&s, &bad, -66.0, -15.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(grid_from_stft(&s, &FreqAxis::default(), -10.0, -20.0).is_err());
    }

    #[test]
    fn off_grid_axis_interpolates_power() {
        let cfg = StftConfig::default_for(FS);
        let s = stft_signal(&tone(10_000, 2e6, 0.1, 0.0), FS, &cfg).unwrap();
        let axis = FreqAxis {
            lo_hz: 1e6,
            hi_hz: 5e6,
            points: 12801,
        };
        let g = grid_from_stft(&s, &axis, -66.0, -15.0).unwrap();
        // 2 MHz lands on axis index 3200 and on bin 400
        assert_relative_eq!(g.power_dbm[[0, 3200]], s.power_dbm(0, 400), epsilon = 1e-9);
        let mid = watts_to_dbm(0.5 * (s.power_watts(0, 400) + s.power_watts(0, 401)));
        assert_relative_eq!(g.power_dbm[[0, 3208]], mid, epsilon = 1e-9);
    }

    fn grid(rows: Vec<Vec<f64>>, floor: f64, ceil: f64) -> SpectrogramGrid {
        let (r, c) = (rows.len(), rows[0].len());
        SpectrogramGrid {
            power_dbm: Array2::from_shape_vec((r, c), rows.concat()).unwrap(),
            freq_axis: (0..c).map(|i| 1e6 + i as f64 * 5e3).collect(),
            time_axis: (0..r).map(|i| i as f64 * 0.024).collect(),
            floor_dbm: floor,
            ceil_dbm: ceil,
        }
    }

    #[test]
    fn pgm_bytes() {
        let g = grid(vec![vec![-66.0, -15.0], vec![-40.5, -66.0]], -66.0, -15.0);
        let mut buf = Vec::new();
        write_grid_pgm(&g, &mut buf).unwrap();
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&buf[..header.len()], header);
        // 255 · 25.5/51 = 127.5 rounds away from zero
        assert_eq!(&buf[header.len()..], &[0, 255, 128, 0]);
    }

    #[test]
    fn degenerate_clamp() {
        let g = grid(vec![vec![-80.0, -40.0, 0.0]], -50.0, -50.0);
        let mut csv = Vec::new();
        write_grid_csv(&g, &mut csv).unwrap();
        let back = read_grid_csv(csv.as_slice()).unwrap();
        assert!(back.power_dbm.iter().all(|&v| v == -50.0));
        assert_eq!(pgm_level(-40.0, -50.0, -50.0), 0);
    }

    #[test]
    fn csv_round_trip() {
        let g = grid(
            vec![vec![-65.123, -15.0, -33.337], vec![-40.5, -61.999, -20.004]],
            -66.0,
            -15.0,
        );
        let mut buf = Vec::new();
        write_grid_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_s,1000000,1005000,1010000\n0,-65.12,"));
        let back = read_grid_csv(buf.as_slice()).unwrap();
        assert_eq!(back.freq_axis, g.freq_axis);
        assert_eq!(back.time_axis, g.time_axis);
        for (a, b) in back.power_dbm.iter().zip(g.power_dbm.iter()) {
            assert!((a - b).abs() <= 0.005 + 1e-12);
        }
    }

    #[test]
    fn parabola_vertex() {
        // samples of -(x-0.3)^2 at -1, 0, 1
        let f = |x: f64| -(x - 0.3) * (x - 0.3);
        assert_relative_eq!(parabolic_offset(f(-1.0), f(0.0), f(1.0)), 0.3, epsilon = 1e-12);
        assert_eq!(parabolic_offset(1.0, 1.0, 1.0), 0.0);
    }
}
