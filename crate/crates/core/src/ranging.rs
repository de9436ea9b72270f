//! Peak picking on spectrogram rows and beat-frequency to range inversion.

use std::io::Write;

use ndarray::Axis;

use crate::scene::CableRun;
use crate::spectro::{parabolic_offset, SpectrogramGrid};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// A row is "static" at a bin when it has a peak within this many bins.
const RIDGE_TOLERANCE_BINS: usize = 1;
/// Fraction of rows a bin must be peaked in to count as a static ridge.
const RIDGE_PERSISTENCE: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub freq_hz: f64,
    pub power_dbm: f64,
    /// Grid column of the local maximum.
    pub column: usize,
}

/// Peaks per grid row, each row sorted by descending power.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakList {
    pub rows: Vec<Vec<Peak>>,
    pub times: Vec<f64>,
    pub freq_step_hz: f64,
    pub threshold_dbm: f64,
}

impl PeakList {
    pub fn total(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Strict local maxima at or above `threshold_dbm`, pruned greedily so
/// survivors are at least `min_separation_hz` apart.
pub fn extract_peaks(g: &SpectrogramGrid, threshold_dbm: f64, min_separation_hz: f64) -> Result<PeakList> {
    peaks_impl(g, threshold_dbm, min_separation_hz, false)
}

/// As [`extract_peaks`], with each frequency refined by a parabola through
/// the peak and its two neighbours (in dB).
pub fn extract_peaks_interpolated(g: &SpectrogramGrid, threshold_dbm: f64, min_separation_hz: f64) -> Result<PeakList> {
    peaks_impl(g, threshold_dbm, min_separation_hz, true)
}

fn peaks_impl(g: &SpectrogramGrid, threshold_dbm: f64, min_separation_hz: f64, interpolate: bool) -> Result<PeakList> {
    let step = g.freq_step_hz();
    if !(min_separation_hz >= step * (1.0 - 1e-9)) {
        return Err(Error::config(format!(
            "minimum peak separation {min_separation_hz} Hz below the {step} Hz bin spacing"
        )));
    }
    let rows =
        g.power_dbm
            .axis_iter(Axis(0))
            .map(|row| {
                let p = row.as_slice().expect("standard layout");
                let mut cands: Vec<Peak> = (1..p.len().saturating_sub(1))
                    .filter(|&k| p[k] >= threshold_dbm && p[k] > p[k - 1] && p[k] >= p[k + 1])
                    .map(|k| {
                        let (df, dp) = if interpolate {
                            let o = parabolic_offset(p[k - 1], p[k], p[k + 1]);
                            (o * step, -0.25 * (p[k - 1] - p[k + 1]) * o)
                        } else {
                            (0.0, 0.0)
                        };
                        Peak {
                            freq_hz: g.freq_axis[k] + df,
                            power_dbm: p[k] + dp,
                            column: k,
                        }
                    })
                    .collect();
                // strongest first, lower frequency wins ties
                cands.sort_by(|a, b| b.power_dbm.total_cmp(&a.power_dbm).then(a.column.cmp(&b.column)));
                let mut kept: Vec<Peak> = Vec::new();
                for c in cands {
                    if kept.iter().all(|k| {
                        (g.freq_axis[k.column] - g.freq_axis[c.column]).abs() >= min_separation_hz * (1.0 - 1e-9)
                    }) {
                        kept.push(c);
                    }
                }
                kept
            })
            .collect();
    Ok(PeakList {
        rows,
        times: g.time_axis.clone(),
        freq_step_hz: step,
        threshold_dbm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeEstimate {
    pub f_b_hz: f64,
    pub d_m: f64,
    pub d0_m: f64,
    pub label: String,
}

impl RangeEstimate {
    /// Negative ranges mean the beat sits below the cable-only baseline.
    pub fn is_negative(&self) -> bool {
        self.d_m < 0.0
    }

    pub fn flag(&self) -> &'static str {
        if self.is_negative() {
            "negative"
        } else {
            "ok"
        }
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// d = ½(c·f_b/s − d0).
pub fn distance_from_beat(f_b_hz: f64, slope_hz_per_s: f64, cable: &CableRun) -> Result<RangeEstimate> {
    if !(slope_hz_per_s > 0.0) {
        return Err(Error::invalid(format!("slope must be positive, got {slope_hz_per_s}")));
    }
    let d0 = cable.effective_length();
    Ok(RangeEstimate {
        f_b_hz,
        d_m: 0.5 * (SPEED_OF_LIGHT * f_b_hz / slope_hz_per_s - d0),
        d0_m: d0,
        label: String::new(),
    })
}

/// Least-squares cable length from (f_b, true distance) pairs.
pub fn calibrate_d0(pairs: &[(f64, f64)], slope_hz_per_s: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("need at least one (f_b, d) pair"));
    }
    if !(slope_hz_per_s > 0.0) {
        return Err(Error::invalid(format!("slope must be positive, got {slope_hz_per_s}")));
    }
    let sum: f64 = pairs
        .iter()
        .map(|&(f_b, d)| SPEED_OF_LIGHT * f_b / slope_hz_per_s - 2.0 * d)
        .sum();
    Ok(sum / pairs.len() as f64)
}

/// A frequency peaked in most rows of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticRidge {
    pub column: usize,
    /// Mean frequency of the peaks assigned to the ridge.
    pub freq_hz: f64,
    /// Fraction of rows with a peak within one bin.
    pub persistence: f64,
}

/// Static ridges: columns peaked (within one bin) in more than 80 % of
/// rows. Candidates are taken in order of exact hits, lower frequency on
/// ties, and suppress any other candidate within one bin.
pub fn static_ridges(peaks: &PeakList) -> Vec<StaticRidge> {
    let n_rows = peaks.rows.len();
    if n_rows == 0 {
        return Vec::new();
    }
    let n_cols = peaks.rows.iter().flatten().map(|p| p.column + 1).max().unwrap_or(0);
    let mut near = vec![0usize; n_cols + RIDGE_TOLERANCE_BINS];
    let mut exact = vec![0usize; n_cols];
    for row in &peaks.rows {
        let mut marked = vec![false; near.len()];
        for p in row {
            exact[p.column] += 1;
            let lo = p.column.saturating_sub(RIDGE_TOLERANCE_BINS);
            for m in &mut marked[lo..=p.column + RIDGE_TOLERANCE_BINS] {
                *m = true;
            }
        }
        for (h, m) in near.iter_mut().zip(marked) {
            *h += usize::from(m);
        }
    }
    let mut candidates: Vec<usize> = (0..n_cols)
        .filter(|&c| exact[c] > 0 && near[c] as f64 > RIDGE_PERSISTENCE * n_rows as f64)
        .collect();
    candidates.sort_by(|&a, &b| exact[b].cmp(&exact[a]).then(a.cmp(&b)));

    let mut centers: Vec<usize> = Vec::new();
    for c in candidates {
        if centers.iter().all(|&k| k.abs_diff(c) > RIDGE_TOLERANCE_BINS) {
            centers.push(c);
        }
    }
    centers.sort_unstable();
    centers
        .into_iter()
        .map(|best| {
            let assigned: Vec<f64> = peaks
                .rows
                .iter()
                .flatten()
                .filter(|p| p.column.abs_diff(best) <= RIDGE_TOLERANCE_BINS)
                .map(|p| p.freq_hz)
                .collect();
            StaticRidge {
                column: best,
                freq_hz: assigned.iter().sum::<f64>() / assigned.len() as f64,
                persistence: near[best] as f64 / n_rows as f64,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample {
    pub t_s: f64,
    pub f_b_hz: f64,
    pub d_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkerTrack {
    pub samples: Vec<TrackSample>,
    pub f_b_max_hz: f64,
    pub d_max_m: f64,
    pub t_at_max_s: f64,
}

/// Follows the strongest non-static peak in each row and reports the
/// farthest sample.
pub fn track_walker(peaks: &PeakList, slope_hz_per_s: f64, cable: &CableRun) -> Result<WalkerTrack> {
    if peaks.rows.is_empty() {
        return Err(Error::invalid("empty peak list"));
    }
    let ridges = static_ridges(peaks);
    let is_static = |p: &Peak| {
        ridges
            .iter()
            .any(|r| p.column.abs_diff(r.column) <= RIDGE_TOLERANCE_BINS)
    };
    let mut samples = Vec::new();
    for (row, &t) in peaks.rows.iter().zip(&peaks.times) {
        if let Some(p) = row.iter().find(|p| !is_static(p)) {
            let est = distance_from_beat(p.freq_hz, slope_hz_per_s, cable)?;
            samples.push(TrackSample {
                t_s: t,
                f_b_hz: p.freq_hz,
                d_m: est.d_m,
            });
        }
    }
    let far = samples
        .iter()
        .copied()
        .reduce(|a, b| if b.d_m > a.d_m { b } else { a })
        .ok_or(Error::NoMoverDetected)?;
    Ok(WalkerTrack {
        f_b_max_hz: far.f_b_hz,
        d_max_m: far.d_m,
        t_at_max_s: far.t_s,
        samples,
    })
}

/// CSV with columns `label,f_b_mhz,d_m,flag`.
pub fn write_range_table<W: Write>(rows: &[RangeEstimate], mut w: W) -> std::io::Result<()> {
    writeln!(w, "label,f_b_mhz,d_m,flag")?;
    for r in rows {
        writeln!(w, "{},{:.4},{:.3},{}", r.label, r.f_b_hz / 1e6, r.d_m, r.flag())?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array2;

    const S: f64 = 11.2e12;

    fn grid(rows: Vec<Vec<f64>>) -> SpectrogramGrid {
        let (r, c) = (rows.len(), rows[0].len());
        SpectrogramGrid {
            power_dbm: Array2::from_shape_vec((r, c), rows.concat()).unwrap(),
            freq_axis: (0..c).map(|i| 1e6 + i as f64 * 5e3).collect(),
            time_axis: (0..r).map(|i| i as f64).collect(),
            floor_dbm: -66.0,
            ceil_dbm: -15.0,
        }
    }

    #[test]
    fn single_ridge_one_peak_per_row() {
        let g = grid(vec![vec![-60.0, -50.0, -20.0, -50.0, -60.0]; 4]);
        let pl = extract_peaks(&g, -40.0, 5e3).unwrap();
        for row in &pl.rows {
            assert_eq!(row.len(), 1);
            assert_eq!(row[0].freq_hz, 1.01e6);
        }
    }

    #[test]
    fn threshold_above_max_is_empty() {
        let g = grid(vec![vec![-60.0, -50.0, -20.0, -50.0, -60.0]; 2]);
        assert_eq!(extract_peaks(&g, 0.0, 5e3).unwrap().total(), 0);
    }

    #[test]
    fn separation_below_bin_rejected() {
        let g = grid(vec![vec![-60.0, -50.0, -20.0]]);
        assert!(matches!(extract_peaks(&g, -70.0, 1e3), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn pruning_prefers_strong_then_low() {
        // equal peaks at columns 2 and 4, 10 kHz apart
        let g = grid(vec![vec![-60.0, -50.0, -20.0, -30.0, -20.0, -50.0, -60.0]]);
        let pl = extract_peaks(&g, -40.0, 15e3).unwrap();
        assert_eq!(pl.rows[0].len(), 1);
        assert_eq!(pl.rows[0][0].column, 2);
        let both = extract_peaks(&g, -40.0, 10e3).unwrap();
        assert_eq!(both.rows[0].iter().map(|p| p.column).collect::<Vec<_>>(), vec![2, 4]);
    }

    #[test]
    fn plateau_and_edges() {
        // edges never count; a flat top reports its lower column
        let g = grid(vec![vec![-10.0, -50.0, -20.0, -20.0, -50.0, -10.0]]);
        let pl = extract_peaks(&g, -40.0, 5e3).unwrap();
        assert_eq!(pl.rows[0].iter().map(|p| p.column).collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn interpolation_moves_toward_stronger_neighbour() {
        let g = grid(vec![vec![-60.0, -30.0, -20.0, -25.0, -60.0]]);
        let p = extract_peaks_interpolated(&g, -40.0, 5e3).unwrap().rows[0][0];
        assert!(p.freq_hz > 1.01e6 && p.freq_hz < 1.0125e6);
        assert!(p.power_dbm >= -20.0);
    }

    #[test]
    fn beat_to_distance_examples() {
        let cal = CableRun::calibrated();
        assert_relative_eq!(distance_from_beat(2.836e6, S, &cal).unwrap().d_m, 9.97, epsilon = 0.01);
        let base = S * 55.97 / SPEED_OF_LIGHT;
        assert_relative_eq!(distance_from_beat(base, S, &cal).unwrap().d_m, 0.0, epsilon = 1e-9);
        assert_relative_eq!(distance_from_beat(2.484e6, S, &cal).unwrap().d_m, 5.26, epsilon = 0.01);
        let neg = distance_from_beat(1.03e6, S, &cal).unwrap();
        assert!(neg.is_negative());
        assert_eq!(neg.flag(), "negative");
        assert!(distance_from_beat(1e6, 0.0, &cal).is_err());
    }

    #[test]
    fn calibration_examples() {
        let d0 = calibrate_d0(&[(2.908e6, 10.32), (2.837e6, 10.32), (2.836e6, 10.32)], S).unwrap();
        assert_relative_eq!(d0, 55.92, epsilon = 0.01);
        let f = S * (2.0 * 4.0 + 55.97) / SPEED_OF_LIGHT;
        assert_relative_eq!(calibrate_d0(&[(f, 4.0)], S).unwrap(), 55.97, epsilon = 1e-9);
        assert_relative_eq!(
            calibrate_d0(&[(f, 4.0); 5], S).unwrap(),
            calibrate_d0(&[(f, 4.0)], S).unwrap(),
            epsilon = 1e-12
        );
        assert!(matches!(calibrate_d0(&[], S), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn ridges_and_walker() {
        // column 10 always peaked; a mover sweeps columns 2..=6 and back
        let mover = [2usize, 3, 4, 5, 6, 5, 4, 3, 2, 3];
        let rows: Vec<Vec<f64>> = mover
            .iter()
            .map(|&m| {
                let mut r = vec![-60.0; 14];
                r[10] = -20.0;
                r[m] = -30.0;
                r
            })
            .collect();
        let pl = extract_peaks(&grid(rows), -40.0, 5e3).unwrap();
        let ridges = static_ridges(&pl);
        assert_eq!(ridges.len(), 1);
        assert_eq!(ridges[0].column, 10);
        assert_eq!(ridges[0].persistence, 1.0);
        let track = track_walker(&pl, S, &CableRun::calibrated()).unwrap();
        assert_eq!(track.samples.len(), 10);
        assert_eq!(track.f_b_max_hz, 1.03e6);
        assert_eq!(track.t_at_max_s, 4.0);
    }

    #[test]
    fn static_only_has_no_mover() {
        let g = grid(vec![vec![-60.0, -20.0, -60.0, -60.0, -25.0, -60.0]; 5]);
        let pl = extract_peaks(&g, -40.0, 5e3).unwrap();
        assert_eq!(static_ridges(&pl).len(), 2);
        assert!(matches!(
            track_walker(&pl, S, &CableRun::calibrated()),
            Err(Error::NoMoverDetected)
        ));
    }

    #[test]
    fn range_table_layout() {
        let cal = CableRun::calibrated();
        let rows = vec![
            distance_from_beat(2.836e6, S, &cal).unwrap().labelled("wall"),
            distance_from_beat(1.03e6, S, &cal).unwrap().labelled("odd"),
        ];
        let mut buf = Vec::new();
        write_range_table(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "label,f_b_mhz,d_m,flag");
        assert!(lines[1].starts_with("wall,2.8360,9.9"));
        assert!(lines[2].ends_with(",negative"));
    }
}
