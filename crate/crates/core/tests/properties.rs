use ndarray::Array2;
use proptest::prelude::*;

use twr_core::antenna::AntennaModel;
use twr_core::chirp::RadarPreset;
use twr_core::ranging::{distance_from_beat, extract_peaks};
use twr_core::scene::{round_trip_delay, CableRun, Reflector, Scene, StartAt, Trajectory};
use twr_core::spectro::{pgm_level, stft_signal, SpectrogramGrid, StftConfig, WindowKind};
use twr_core::synth::{synthesize, ReceiverConfig};
use twr_core::units::{dbm_to_watts, watts_to_dbm};

fn scene_of(targets: &[(f64, f64)]) -> Scene {
    let mut s = Scene::new(AntennaModel::preset("horn").unwrap(), CableRun::calibrated());
    for (i, &(d, rcs)) in targets.iter().enumerate() {
        s = s.with_reflector(Reflector::new(format!("r{i}"), rcs, Trajectory::fixed(d).unwrap()).unwrap());
    }
    s
}

fn grid(rows: usize, cols: usize, cells: &[f64]) -> SpectrogramGrid {
    SpectrogramGrid {
        power_dbm: Array2::from_shape_vec((rows, cols), cells.to_vec()).unwrap(),
        freq_axis: (0..cols).map(|k| 1e6 + 5e3 * k as f64).collect(),
        time_axis: (0..rows).map(|r| r as f64).collect(),
        floor_dbm: -300.0,
        ceil_dbm: 300.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beat_inverts_to_distance(d in 0.01f64..100.0, d0 in 0.0f64..200.0) {
        let cable = CableRun::fixed(d0).unwrap();
        let s = RadarPreset::SLOPE_HZ_PER_S;
        let f_b = s * round_trip_delay(d, &cable).unwrap();
        let back = distance_from_beat(f_b, s, &cable).unwrap().d_m;
        prop_assert!((back - d).abs() <= 1e-9 * d.max(1.0));
    }

    #[test]
    fn dbm_round_trip(p in -250.0f64..60.0) {
        prop_assert!((watts_to_dbm(dbm_to_watts(p)) - p).abs() < 1e-9);
    }

    // Integer-valued cells keep the comparison exact after the shift.
    #[test]
    fn peaks_ignore_common_offset(
        cells in prop::collection::vec(-90i32..0, 3 * 40),
        offset in -50i32..50,
        thr in -80i32..-10,
    ) {
        let base: Vec<f64> = cells.iter().map(|&c| c as f64).collect();
        let shifted: Vec<f64> = base.iter().map(|c| c + offset as f64).collect();
        let a = extract_peaks(&grid(3, 40, &base), thr as f64, 10e3).unwrap();
        let b = extract_peaks(&grid(3, 40, &shifted), (thr + offset) as f64, 10e3).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            let ca: Vec<usize> = ra.iter().map(|p| p.column).collect();
            let cb: Vec<usize> = rb.iter().map(|p| p.column).collect();
            prop_assert_eq!(ca, cb);
        }
    }

    #[test]
    fn peaks_respect_separation_and_threshold(
        cells in prop::collection::vec(-90.0f64..0.0, 60),
        sep_bins in 1usize..6,
        thr in -80.0f64..-10.0,
    ) {
        let g = grid(1, 60, &cells);
        let peaks = extract_peaks(&g, thr, sep_bins as f64 * 5e3).unwrap();
        let mut cols: Vec<usize> = peaks.rows[0].iter().map(|p| p.column).collect();
        cols.sort_unstable();
        for w in cols.windows(2) {
            prop_assert!(w[1] - w[0] >= sep_bins);
        }
        for p in &peaks.rows[0] {
            prop_assert!(p.power_dbm >= thr);
            prop_assert!(p.column > 0 && p.column < 59);
        }
    }

    #[test]
    fn echoes_superpose(d1 in 1.0f64..40.0, d2 in 1.0f64..40.0, rcs1 in 0.1f64..10.0, rcs2 in 0.1f64..10.0) {
        let chirp = RadarPreset::RocOperational.chirp();
        let rx = ReceiverConfig::for_chirp(&chirp);
        let both = synthesize(&scene_of(&[(d1, rcs1), (d2, rcs2)]), &chirp, &rx, 1).unwrap();
        let a = synthesize(&scene_of(&[(d1, rcs1)]), &chirp, &rx, 1).unwrap();
        let b = synthesize(&scene_of(&[(d2, rcs2)]), &chirp, &rx, 1).unwrap();
        let scale = a.samples().iter().chain(b.samples()).fold(0.0f64, |m, v| m.max(v.abs()));
        for ((x, y), z) in both.samples().iter().zip(a.samples()).zip(b.samples()) {
            prop_assert!((x - (y + z)).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn rect_stft_keeps_energy(x in prop::collection::vec(-1.0f64..1.0, 64..512), n in 8usize..64) {
        let usable = x.len() / n * n;
        prop_assume!(usable >= n);
        let cfg = StftConfig { window_kind: WindowKind::Rect, window_len: n, hop: n, fft_len: n };
        let s = stft_signal(&x[..usable], 1e6, &cfg).unwrap();
        let e: f64 = x[..usable].iter().map(|v| v * v).sum();
        prop_assume!(e > 1e-6);
        prop_assert!((s.parseval_energy() - e).abs() <= 1e-9 * e);
    }

    #[test]
    fn pgm_level_is_monotone(a in -120.0f64..0.0, b in -120.0f64..0.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(pgm_level(lo, -66.0, -15.0) <= pgm_level(hi, -66.0, -15.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // Each frame equals a single-frame scene frozen at that frame's start.
    #[test]
    fn frames_are_stop_and_hop(near in 1.0f64..4.0, span in 0.5f64..4.0, speed in 0.5f64..3.0) {
        let chirp = RadarPreset::RocOperational.chirp();
        let rx = ReceiverConfig::for_chirp(&chirp);
        let walk = Trajectory::back_and_forth(near, near + span, speed, StartAt::Near).unwrap();
        let moving = Scene::new(AntennaModel::preset("vivaldi").unwrap(), CableRun::calibrated())
            .with_reflector(Reflector::new("w", 0.5, walk).unwrap());
        let trace = synthesize(&moving, &chirp, &rx, 40).unwrap();
        for k in [0usize, 7, 23, 39] {
            let d = walk.position_at(trace.t0_of_frame[k]);
            let frozen = Scene::new(AntennaModel::preset("vivaldi").unwrap(), CableRun::calibrated())
                .with_reflector(Reflector::new("w", 0.5, Trajectory::fixed(d).unwrap()).unwrap());
            let one = synthesize(&frozen, &chirp, &rx, 1).unwrap();
            prop_assert_eq!(trace.frames.row(k), one.frames.row(0));
        }
    }
}
