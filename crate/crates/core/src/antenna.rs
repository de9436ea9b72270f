//! Parametric antenna models and antenna-metric calculators.
//!
//! Patterns follow `G(θ) = G0(f) · max(cosⁿθ, 10^(-FBR/10))` on the front
//! hemisphere and the backlobe floor behind it. The exponent n is fitted
//! so the numerically integrated directivity equals the model's stated
//! directivity.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::{Error, Result, SPEED_OF_LIGHT};

pub const PRESET_NAMES: [&str; 3] = ["horn", "vivaldi", "quasi-yagi"];

const DIRECTIVITY_TOLERANCE_DB: f64 = 0.2;
const MAX_PATTERN_EXPONENT: f64 = 400.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AntennaModel {
    pub name: String,
    /// (frequency Hz, boresight gain dBi), strictly increasing in frequency.
    pub gain_table: Vec<(f64, f64)>,
    pub fbr_db: f64,
    pub directivity_dbi: f64,
    pub pattern_exponent: f64,
    /// Values in this model that are assumed rather than measured.
    pub assumptions: Vec<String>,
}

/// Gain returned by a table lookup; `clamped` is set when the requested
/// frequency fell outside the table and the nearest edge value was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainLookup {
    pub gain_dbi: f64,
    pub clamped: bool,
}

impl AntennaModel {
    /// Builds a model and fits the pattern exponent to `directivity_dbi`.
    pub fn new(
        name: impl Into<String>,
        gain_table: Vec<(f64, f64)>,
        fbr_db: f64,
        directivity_dbi: f64,
    ) -> Result<Self> {
        validate_table(&gain_table)?;
        if !(fbr_db >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "front-to-back ratio must be >= 0, got {fbr_db}"
            )));
        }
        let pattern_exponent = fit_pattern_exponent(directivity_dbi, fbr_db)?;
        Ok(Self {
            name: name.into(),
            gain_table,
            fbr_db,
            directivity_dbi,
            pattern_exponent,
            assumptions: Vec::new(),
        })
    }

    /// Builds a model with a fixed exponent; directivity is computed from it.
    pub fn with_pattern_exponent(
        name: impl Into<String>,
        gain_table: Vec<(f64, f64)>,
        fbr_db: f64,
        pattern_exponent: f64,
    ) -> Result<Self> {
        validate_table(&gain_table)?;
        if !(fbr_db >= 0.0) || !(pattern_exponent >= 0.0) {
            return Err(Error::InvalidModel(
                "front-to-back ratio and pattern exponent must be >= 0".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            gain_table,
            fbr_db,
            directivity_dbi: pattern_directivity_dbi(pattern_exponent, fbr_db),
            pattern_exponent,
            assumptions: Vec::new(),
        })
    }

    pub fn preset(name: &str) -> Result<Self> {
        let model = match name {
            "horn" => {
                let mut m = AntennaModel::new("horn", vec![(1.5e9, 15.0), (3.5e9, 15.0)], 30.0, 15.0)?;
                m.assumptions.push("front-to-back ratio 30 dB".into());
                m.assumptions.push("flat 15 dBi gain over 1.5-3.5 GHz".into());
                m
            }
            "vivaldi" => {
                // 6.8-8.8 dBi without directors, +1 dB with the two directors.
                let mut m = AntennaModel::new("vivaldi", vec![(2.0e9, 7.8), (2.4e9, 8.8), (3.0e9, 9.8)], 14.44, 10.44)?;
                m.assumptions
                    .push("gain-vs-frequency breakpoints at 2.0/2.4/3.0 GHz".into());
                m
            }
            "quasi-yagi" => {
                let mut m = AntennaModel::new(
                    "quasi-yagi",
                    vec![(1.87e9, 7.8), (2.4e9, 8.7), (2.91e9, 9.8)],
                    25.76,
                    9.02,
                )?;
                m.assumptions
                    .push("linear gain between band edges and the 2.4 GHz measurement".into());
                m
            }
            other => {
                return Err(Error::config(format!(
                    "unknown antenna '{other}' (expected one of {})",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        Ok(model)
    }

    /// Reads a `freq_hz,gain_dbi` CSV gain table.
    pub fn from_csv_reader<R: Read>(
        name: impl Into<String>,
        reader: R,
        fbr_db: f64,
        directivity_dbi: Option<f64>,
    ) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            freq_hz: f64,
            gain_dbi: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["freq_hz", "gain_dbi"] {
            return Err(Error::InvalidModel(format!(
                "gain table header must be 'freq_hz,gain_dbi', got '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut table = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            table.push((row.freq_hz, row.gain_dbi));
        }
        validate_table(&table)?;
        let peak = table.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let mut m = AntennaModel::new(name, table, fbr_db, directivity_dbi.unwrap_or(peak))?;
        if directivity_dbi.is_none() {
            m.assumptions.push("directivity taken as peak table gain".into());
        }
        Ok(m)
    }

    pub fn from_csv_path(path: &Path, fbr_db: f64, directivity_dbi: Option<f64>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        Self::from_csv_reader(name, file, fbr_db, directivity_dbi)
    }

    /// Boresight gain by linear interpolation in the table.
    pub fn boresight_gain(&self, freq_hz: f64) -> Result<GainLookup> {
        validate_table(&self.gain_table)?;
        let t = &self.gain_table;
        let (first, last) = (t[0], t[t.len() - 1]);
        if freq_hz <= first.0 {
            return Ok(GainLookup {
                gain_dbi: first.1,
                clamped: freq_hz < first.0,
            });
        }
        if freq_hz >= last.0 {
            return Ok(GainLookup {
                gain_dbi: last.1,
                clamped: freq_hz > last.0,
            });
        }
        let i = t.partition_point(|p| p.0 <= freq_hz);
        let (f0, g0) = t[i - 1];
        let (f1, g1) = t[i];
        Ok(GainLookup {
            gain_dbi: g0 + (g1 - g0) * (freq_hz - f0) / (f1 - f0),
            clamped: false,
        })
    }

    /// Gain in dBi at `theta_rad` off boresight.
    pub fn pattern_gain(&self, freq_hz: f64, theta_rad: f64) -> Result<GainLookup> {
        if !(0.0..=PI).contains(&theta_rad) {
            return Err(Error::OutOfRange {
                what: "theta",
                value: theta_rad,
                lo: 0.0,
                hi: PI,
            });
        }
        let g0 = self.boresight_gain(freq_hz)?;
        Ok(GainLookup {
            gain_dbi: g0.gain_dbi + 10.0 * normalized_pattern(self.pattern_exponent, self.fbr_db, theta_rad).log10(),
            clamped: g0.clamped,
        })
    }
}

fn validate_table(table: &[(f64, f64)]) -> Result<()> {
    if table.is_empty() {
        return Err(Error::InvalidModel("gain table is empty".into()));
    }
    if table.iter().any(|(f, g)| !f.is_finite() || !g.is_finite()) {
        return Err(Error::InvalidModel("gain table holds non-finite values".into()));
    }
    if table.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidModel(
            "gain table frequencies must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Linear power pattern normalized to 1 on boresight.
fn normalized_pattern(n: f64, fbr_db: f64, theta: f64) -> f64 {
    let floor = 10f64.powf(-fbr_db / 10.0);
    let lobe = if theta < PI / 2.0 { theta.cos().powf(n) } else { 0.0 };
    lobe.max(floor)
}

/// Directivity of the normalized pattern, 2 / ∫ U(θ) sinθ dθ, by composite
/// Simpson over [0, π].
pub fn pattern_directivity_dbi(n: f64, fbr_db: f64) -> f64 {
    const STEPS: usize = 20_000;
    let h = PI / STEPS as f64;
    let f = |th: f64| normalized_pattern(n, fbr_db, th) * th.sin();
    let mut acc = f(0.0) + f(PI);
    for i in 1..STEPS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    let integral = acc * h / 3.0;
    10.0 * (2.0 / integral).log10()
}

/// Bisects the cosⁿ exponent so the pattern directivity matches the target.
fn fit_pattern_exponent(directivity_dbi: f64, fbr_db: f64) -> Result<f64> {
    let d = |n: f64| pattern_directivity_dbi(n, fbr_db);
    let (lo_d, hi_d) = (d(0.0), d(MAX_PATTERN_EXPONENT));
    if directivity_dbi < lo_d - DIRECTIVITY_TOLERANCE_DB || directivity_dbi > hi_d + DIRECTIVITY_TOLERANCE_DB {
        return Err(Error::InvalidModel(format!(
            "directivity {directivity_dbi} dBi not reachable with FBR {fbr_db} dB (range {lo_d:.2}..{hi_d:.2} dBi)"
        )));
    }
    let (mut lo, mut hi) = (0.0, MAX_PATTERN_EXPONENT);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if d(mid) < directivity_dbi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Band edges, stated center and peak gain of one antenna design.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct BandSummary {
    pub f_low: f64,
    pub f_high: f64,
    pub f_center: f64,
    pub gain_max_dbi: f64,
}

/// Linear peak gain times fractional bandwidth about the stated center.
pub fn figure_of_merit(b: &BandSummary) -> Result<f64> {
    if !(b.f_center > 0.0) {
        return Err(Error::invalid(format!(
            "center frequency must be positive, got {}",
            b.f_center
        )));
    }
    if !(b.f_high > b.f_low) {
        return Err(Error::invalid("band upper edge must exceed lower edge"));
    }
    Ok(10f64.powf(b.gain_max_dbi / 10.0) * (b.f_high - b.f_low) / b.f_center)
}

/// Exponentially tapered slot geometry (lengths in mm, rates in 1/mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VivaldiGeometry {
    pub width_mm: f64,
    pub length_mm: f64,
    pub feed_width_mm: f64,
    pub aperture_offset_mm: f64,
    pub inner_rate: f64,
    pub outer_rate: f64,
    pub inner_range: (f64, f64),
    pub outer_range: (f64, f64),
}

impl Default for VivaldiGeometry {
    fn default() -> Self {
        Self {
            width_mm: 150.0,
            length_mm: 185.0,
            feed_width_mm: 3.3,
            aperture_offset_mm: 40.0,
            inner_rate: 0.027,
            outer_rate: 0.16,
            inner_range: (5.0, 148.0),
            outer_range: (5.0, 29.0),
        }
    }
}

/// Curve parameter at which both taper exponentials equal one.
const TAPER_ORIGIN_MM: f64 = 5.0;

impl VivaldiGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.width_mm,
            self.length_mm,
            self.feed_width_mm,
            self.inner_rate,
            self.outer_rate,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("W, L, fw, a1 and a2 must be positive"));
        }
        Ok(())
    }

    /// Inner edge (X, Y) = (fw − ½fw·e^{a1(t−5)} + W1/2, t).
    pub fn inner_edge(&self, t_mm: f64) -> Result<(f64, f64)> {
        self.validate()?;
        check_range("inner-edge t", t_mm, self.inner_range)?;
        let fw = self.feed_width_mm;
        let x = fw - 0.5 * fw * (self.inner_rate * (t_mm - TAPER_ORIGIN_MM)).exp() + 0.5 * self.aperture_offset_mm;
        Ok((x, t_mm))
    }

    /// Outer edge (X, Y) = (−½fw·e^{a2(t−5)} + W1/2, t).
    pub fn outer_edge(&self, t_mm: f64) -> Result<(f64, f64)> {
        self.validate()?;
        check_range("outer-edge t", t_mm, self.outer_range)?;
        let fw = self.feed_width_mm;
        let x = -0.5 * fw * (self.outer_rate * (t_mm - TAPER_ORIGIN_MM)).exp() + 0.5 * self.aperture_offset_mm;
        Ok((x, t_mm))
    }
}

fn check_range(what: &'static str, v: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value: v, lo, hi })
    }
}

/// Lower cutoff frequency c/(2W) for aperture width `width_mm`.
pub fn aperture_cutoff(width_mm: f64) -> Result<f64> {
    if !(width_mm > 0.0) {
        return Err(Error::invalid(format!(
            "aperture width must be positive, got {width_mm}"
        )));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * width_mm * 1e-3))
}

/// Simulated 2.4 GHz gain of the quasi-Yagi against director count.
const DIRECTOR_GAINS: [(f64, f64); 4] = [(0.0, 3.09), (2.0, 4.90), (6.0, 6.80), (12.0, 8.62)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectorGain {
    pub gain_dbi: f64,
    /// Set beyond 12 directors, where the last segment is extended.
    pub extrapolated: bool,
}

pub fn director_gain_preset(n_directors: i64) -> Result<DirectorGain> {
    if n_directors < 0 {
        return Err(Error::invalid(format!(
            "director count must be >= 0, got {n_directors}"
        )));
    }
    let n = n_directors as f64;
    let seg = DIRECTOR_GAINS
        .windows(2)
        .find(|w| n <= w[1].0)
        .unwrap_or(&DIRECTOR_GAINS[2..4]);
    let ((n0, g0), (n1, g1)) = (seg[0], seg[1]);
    Ok(DirectorGain {
        gain_dbi: g0 + (g1 - g0) * (n - n0) / (n1 - n0),
        extrapolated: n > 12.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quasi_yagi_boresight_and_back() {
        let m = AntennaModel::preset("quasi-yagi").unwrap();
        let front = m.pattern_gain(2.4e9, 0.0).unwrap();
        assert_relative_eq!(front.gain_dbi, 8.7, epsilon = 1e-12);
        assert!(!front.clamped);
        let back = m.pattern_gain(2.4e9, PI).unwrap();
        assert_relative_eq!(back.gain_dbi, 8.7 - 25.76, epsilon = 1e-9);
    }

    #[test]
    fn zero_fbr_is_flat() {
        let m = AntennaModel::with_pattern_exponent("flat", vec![(2e9, 5.0)], 0.0, 3.0).unwrap();
        for i in 0..=32 {
            let th = PI * i as f64 / 32.0;
            assert_relative_eq!(m.pattern_gain(2e9, th).unwrap().gain_dbi, 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn clamps_outside_table() {
        let m = AntennaModel::preset("quasi-yagi").unwrap();
        let lo = m.boresight_gain(1.0e9).unwrap();
        assert!(lo.clamped);
        assert_eq!(lo.gain_dbi, 7.8);
        assert!(!m.boresight_gain(2.91e9).unwrap().clamped);
    }

    #[test]
    fn interpolates_between_rows() {
        let m = AntennaModel::with_pattern_exponent("t", vec![(1e9, 0.0), (2e9, 10.0)], 10.0, 1.0).unwrap();
        assert_relative_eq!(m.boresight_gain(1.25e9).unwrap().gain_dbi, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn empty_table_rejected() {
        assert!(matches!(
            AntennaModel::with_pattern_exponent("e", vec![], 10.0, 1.0),
            Err(Error::InvalidModel(_))
        ));
        let mut m = AntennaModel::preset("horn").unwrap();
        m.gain_table.clear();
        assert!(matches!(m.pattern_gain(2e9, 0.0), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn unsorted_table_rejected() {
        assert!(AntennaModel::with_pattern_exponent("u", vec![(2e9, 1.0), (1e9, 1.0)], 10.0, 1.0).is_err());
    }

    #[test]
    fn theta_range_checked() {
        let m = AntennaModel::preset("horn").unwrap();
        assert!(m.pattern_gain(2e9, -0.1).is_err());
        assert!(m.pattern_gain(2e9, 3.2).is_err());
    }

    #[test]
    fn presets_fit_directivity() {
        for name in PRESET_NAMES {
            let m = AntennaModel::preset(name).unwrap();
            let d = pattern_directivity_dbi(m.pattern_exponent, m.fbr_db);
            assert!((d - m.directivity_dbi).abs() <= DIRECTIVITY_TOLERANCE_DB, "{name}: {d}");
        }
        assert!(AntennaModel::preset("dish").is_err());
    }

    #[test]
    fn directivity_matches_closed_form_without_backlobe() {
        // ∫0^{π/2} cosⁿθ sinθ dθ = 1/(n+1), so D = 2(n+1).
        for n in [1.0, 2.0, 4.5, 10.0] {
            let d = pattern_directivity_dbi(n, 200.0);
            assert_relative_eq!(d, 10.0 * (2.0 * (n + 1.0)).log10(), epsilon = 1e-6);
        }
    }

    #[test]
    fn csv_gain_table() {
        let data = "freq_hz,gain_dbi\n2.0e9,5.0\n2.5e9,6.0\n";
        let m = AntennaModel::from_csv_reader("mine", data.as_bytes(), 15.0, None).unwrap();
        assert_eq!(m.gain_table, vec![(2.0e9, 5.0), (2.5e9, 6.0)]);
        assert!(AntennaModel::from_csv_reader("bad", "f,g\n1,2\n".as_bytes(), 15.0, None).is_err());
    }

    #[test]
    fn figure_of_merit_examples() {
        let fom = |lo: f64, hi: f64, c: f64, g: f64| {
            figure_of_merit(&BandSummary {
                f_low: lo,
                f_high: hi,
                f_center: c,
                gain_max_dbi: g,
            })
            .unwrap()
        };
        // 10^0.98 · 1.04 / 2.34
        assert_relative_eq!(fom(1.87, 2.91, 2.34, 9.8), 4.2444, epsilon = 5e-4);
        assert_relative_eq!(fom(2.23, 2.61, 2.34, 3.2), 0.34, epsilon = 5e-3);
        assert_relative_eq!(fom(2.0, 2.5, 2.2, 0.0), 0.5 / 2.2, epsilon = 1e-12);
        assert_relative_eq!(fom(4.67, 9.89, 8.0, 6.46), 2.89, epsilon = 5e-3);
        assert!(figure_of_merit(&BandSummary {
            f_low: 1.0,
            f_high: 2.0,
            f_center: 0.0,
            gain_max_dbi: 1.0
        })
        .is_err());
    }

    #[test]
    fn vivaldi_taper_examples() {
        let g = VivaldiGeometry::default();
        let (x, y) = g.inner_edge(5.0).unwrap();
        assert_relative_eq!(x, 21.65, epsilon = 1e-12);
        assert_eq!(y, 5.0);
        let (x, _) = g.outer_edge(5.0).unwrap();
        assert_relative_eq!(x, 20.0 - 1.65, epsilon = 1e-12);
        let (x, _) = g.outer_edge(10.0).unwrap();
        assert_relative_eq!(x, 16.33, epsilon = 5e-3);
        assert!(g.inner_edge(4.9).is_err());
        assert!(g.outer_edge(30.0).is_err());
        assert!(g.inner_edge(148.0).is_ok());
    }

    #[test]
    fn inner_edge_decreasing() {
        let g = VivaldiGeometry::default();
        let xs: Vec<f64> = (0..=143).map(|i| g.inner_edge(5.0 + i as f64).unwrap().0).collect();
        assert!(xs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn cutoff_examples() {
        assert_relative_eq!(aperture_cutoff(150.0).unwrap(), 0.99930e9, max_relative = 1e-4);
        assert_relative_eq!(
            aperture_cutoff(300.0).unwrap() * 2.0,
            aperture_cutoff(150.0).unwrap(),
            max_relative = 1e-12
        );
        let w = SPEED_OF_LIGHT / (2.0 * 2.05e9) * 1e3;
        assert_relative_eq!(w, 73.1, epsilon = 0.05);
        assert_relative_eq!(aperture_cutoff(w).unwrap(), 2.05e9, max_relative = 1e-12);
        assert!(aperture_cutoff(0.0).is_err());
    }

    #[test]
    fn director_table() {
        assert_eq!(director_gain_preset(12).unwrap().gain_dbi, 8.62);
        assert_eq!(director_gain_preset(0).unwrap().gain_dbi, 3.09);
        assert_relative_eq!(director_gain_preset(4).unwrap().gain_dbi, 5.85, epsilon = 1e-12);
        let far = director_gain_preset(18).unwrap();
        assert!(far.extrapolated);
        assert_relative_eq!(far.gain_dbi, 8.62 + (8.62 - 6.80), epsilon = 1e-12);
        assert!(!director_gain_preset(12).unwrap().extrapolated);
        assert!(director_gain_preset(-1).is_err());
    }
}
