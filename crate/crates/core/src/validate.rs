//! Reproduction checks against the published measurement tables embedded in
//! `data/reference_tables.toml`.

use serde::Deserialize;

use crate::antenna::{aperture_cutoff, figure_of_merit, BandSummary};
use crate::chirp::{range_resolution, RadarPreset};
use crate::ranging::distance_from_beat;
use crate::scene::CableRun;
use crate::{Error, Result};

const REFERENCE_TABLES: &str = include_str!("../data/reference_tables.toml");

pub const PROPOSED_FOM_TOLERANCE: f64 = 0.005;
pub const CITED_FOM_TOLERANCE: f64 = 0.05;
pub const CITED_FOM_REQUIRED: usize = 8;
pub const MEDIAN_RANGE_ERROR_M: f64 = 1.0;
pub const MAX_RANGE_ERROR_M: f64 = 1.5;

#[derive(Debug, Clone, Deserialize)]
pub struct FomRow {
    pub table: String,
    pub design: String,
    #[serde(default)]
    pub proposed: bool,
    pub f_low: f64,
    pub f_high: f64,
    pub f_center: f64,
    pub gain_max_dbi: f64,
    pub printed: f64,
}

impl FomRow {
    pub fn band(&self) -> BandSummary {
        BandSummary {
            f_low: self.f_low,
            f_high: self.f_high,
            f_center: self.f_center,
            gain_max_dbi: self.gain_max_dbi,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct RangeRow {
    pub table: String,
    pub label: String,
    pub f_b_mhz: f64,
    pub d_m: f64,
    /// Reason the row is left out of the error bound, if it is.
    #[serde(default)]
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceTables {
    pub fom: Vec<FomRow>,
    pub range: Vec<RangeRow>,
}

impl ReferenceTables {
    pub fn embedded() -> Result<Self> {
        toml::from_str(REFERENCE_TABLES).map_err(|e| Error::config(format!("embedded reference tables: {e}")))
    }
}

/// Outcome of one validation check with per-row detail lines.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub details: Vec<String>,
}

impl CheckResult {
    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

/// Proposed-design rows to ±0.005 and enough cited rows to ±0.05.
pub fn check_figure_of_merit(t: &ReferenceTables) -> Result<Vec<CheckResult>> {
    let mut proposed = (true, Vec::new());
    let mut cited = (0usize, 0usize, Vec::new());
    for row in &t.fom {
        let fom = figure_of_merit(&row.band())?;
        let err = fom - row.printed;
        let tol = if row.proposed {
            PROPOSED_FOM_TOLERANCE
        } else {
            CITED_FOM_TOLERANCE
        };
        let ok = err.abs() <= tol;
        let line = format!(
            "{:<46} computed {:>6.3}  printed {:>5.2}  diff {:+.3}  {}",
            row.design,
            fom,
            row.printed,
            err,
            if ok { "ok" } else { "mismatch" }
        );
        if row.proposed {
            proposed.0 &= ok;
            proposed.1.push(line);
        } else {
            cited.0 += usize::from(ok);
            cited.1 += 1;
            cited.2.push(line);
        }
    }
    Ok(vec![
        CheckResult {
            name: "figure of merit, proposed designs".into(),
            passed: proposed.0,
            summary: format!("all rows within ±{PROPOSED_FOM_TOLERANCE}"),
            details: proposed.1,
        },
        CheckResult {
            name: "figure of merit, cited designs".into(),
            passed: cited.0 >= CITED_FOM_REQUIRED,
            summary: format!(
                "{} of {} rows within ±{CITED_FOM_TOLERANCE} (need {CITED_FOM_REQUIRED})",
                cited.0, cited.1
            ),
            details: cited.2,
        },
    ])
}

/// Absolute inversion errors of the non-excluded rows, in table order.
pub fn range_errors(t: &ReferenceTables, cable: &CableRun, slope_hz_per_s: f64) -> Result<Vec<f64>> {
    t.range
        .iter()
        .filter(|r| r.excluded.is_none())
        .map(|r| Ok((distance_from_beat(r.f_b_mhz * 1e6, slope_hz_per_s, cable)?.d_m - r.d_m).abs()))
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Inverts every printed beat with the calibrated cable length.
pub fn check_range_tables(t: &ReferenceTables) -> Result<CheckResult> {
    let cable = CableRun::calibrated();
    let s = RadarPreset::SLOPE_HZ_PER_S;
    let mut details = Vec::new();
    for r in &t.range {
        let est = distance_from_beat(r.f_b_mhz * 1e6, s, &cable)?;
        let tail = match &r.excluded {
            Some(why) => format!("excluded ({why})"),
            None => format!("err {:+.3} m", est.d_m - r.d_m),
        };
        details.push(format!(
            "{:<26} {:<32} f_b {:.3} MHz  printed {:>6.3} m  computed {:>7.3} m  {}",
            r.table, r.label, r.f_b_mhz, r.d_m, est.d_m, tail
        ));
    }
    let errs = range_errors(t, &cable, s)?;
    let med = median(&errs);
    let max = errs.iter().copied().fold(0.0, f64::max);
    Ok(CheckResult {
        name: "beat-to-range inversion".into(),
        passed: med <= MEDIAN_RANGE_ERROR_M && max <= MAX_RANGE_ERROR_M,
        summary: format!(
            "{} rows, median |err| {:.3} m (<= {MEDIAN_RANGE_ERROR_M}), max {:.3} m (<= {MAX_RANGE_ERROR_M}); {} excluded",
            errs.len(),
            med,
            max,
            t.range.len() - errs.len()
        ),
        details,
    })
}

pub fn check_range_resolution() -> Result<CheckResult> {
    let r = range_resolution(RadarPreset::RocNominal.chirp().bandwidth_hz)?;
    Ok(CheckResult {
        name: "range resolution".into(),
        passed: (r - 0.2725).abs() <= 1e-4,
        summary: format!("c/2B at 550 MHz = {r:.4} m (expect 0.2725 ± 1e-4)"),
        details: Vec::new(),
    })
}

pub fn check_vivaldi_cutoff() -> Result<CheckResult> {
    let f = aperture_cutoff(150.0)?;
    Ok(CheckResult {
        name: "vivaldi aperture cutoff".into(),
        passed: (0.99e9..=1.01e9).contains(&f),
        summary: format!("150 mm aperture -> {:.4} GHz (expect 0.99-1.01)", f / 1e9),
        details: Vec::new(),
    })
}

/// Every check, in report order.
pub fn run_all() -> Result<Vec<CheckResult>> {
    let t = ReferenceTables::embedded()?;
    let mut out = check_figure_of_merit(&t)?;
    out.push(check_range_tables(&t)?);
    out.push(check_range_resolution()?);
    out.push(check_vivaldi_cutoff()?);
    Ok(out)
}
