//! `twrsim` command implementations.
//!
//! Precedence for every setting is command-line flag, then scene file,
//! then built-in preset.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use twr_core::antenna::{AntennaModel, PRESET_NAMES};
use twr_core::chirp::RadarPreset;
use twr_core::config::load_run_config;
use twr_core::ranging::{
    distance_from_beat, extract_peaks_interpolated, static_ridges, track_walker, write_range_table, PeakList,
    RangeEstimate, StaticRidge, WalkerTrack,
};
use twr_core::scene::{CableRun, CALIBRATED_D0_M};
use twr_core::spectro::{
    export_grid, spectrogram, FreqAxis, SpectrogramGrid, StftConfig, WindowKind, DEFAULT_CEIL_DBM, DEFAULT_FLOOR_DBM,
    WIDE_CEIL_DBM, WIDE_FLOOR_DBM,
};
use twr_core::synth::{parse_raw, synthesize, write_raw, IfTrace, DEFAULT_FRAME_INTERVAL_S};
use twr_core::validate;

pub const GRID_CSV: &str = "grid.csv";
pub const GRID_PGM: &str = "grid.pgm";
pub const RAW_TRACE: &str = "trace.twrif";
pub const RANGE_TABLE: &str = "ranges.csv";
pub const RUN_SUMMARY: &str = "run.json";

/// Peaks must clear the grid median by this much (dB).
pub const DEFAULT_THRESHOLD_DB: f64 = 15.0;

#[derive(Debug, Parser)]
#[command(name = "twrsim", version, about = "FMCW through-wall radar simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Noise seed (overrides the scene file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Points on the 1-5 MHz display axis.
    #[arg(long, global = true, default_value_t = 801)]
    pub freq_points: usize,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub floor_dbm: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ceil_dbm: Option<f64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a scene and write grid, image, raw trace and range table.
    Simulate(SimulateArgs),
    /// Analyse a raw TWRIF1 trace without re-synthesis.
    Analyze(AnalyzeArgs),
    /// Check the models against the embedded measurement tables.
    Validate,
    /// List built-in presets.
    Presets {
        #[command(subcommand)]
        what: PresetsCmd,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetsCmd {
    List,
}

#[derive(Debug, Clone, Args)]
pub struct StftArgs {
    /// Analysis window: hann, hamming or rect.
    #[arg(long)]
    pub window: Option<WindowKind>,
    #[arg(long)]
    pub window_len: Option<usize>,
    #[arg(long)]
    pub hop: Option<usize>,
    #[arg(long)]
    pub fft_len: Option<usize>,
    /// Peak threshold above the grid median (dB).
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_DB)]
    pub threshold_db: f64,
}

impl StftArgs {
    pub fn config(&self, sample_rate_hz: f64) -> StftConfig {
        let mut c = StftConfig::default_for(sample_rate_hz);
        if let Some(w) = self.window {
            c.window_kind = w;
        }
        if let Some(n) = self.window_len {
            c.window_len = n;
            c.hop = (n / 4).max(1);
            c.fft_len = c.fft_len.max(n);
        }
        if let Some(h) = self.hop {
            c.hop = h;
        }
        if let Some(f) = self.fft_len {
            c.fft_len = f;
        }
        c
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Antenna preset name, or a `freq_hz,gain_dbi` CSV path.
    #[arg(long)]
    pub antenna: Option<String>,
    /// Front-to-back ratio for a CSV antenna (dB).
    #[arg(long, default_value_t = 20.0)]
    pub antenna_fbr_db: f64,
    #[arg(long)]
    pub radar: Option<RadarPreset>,
    /// Scenario length (s).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Skip the raw trace export.
    #[arg(long)]
    pub no_raw: bool,
    #[command(flatten)]
    pub stft: StftArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Radar preset that produced the trace (sets the chirp slope).
    #[arg(long, default_value = "roc-operational")]
    pub radar: RadarPreset,
    /// Effective cable length used for range inversion (m).
    #[arg(long, default_value_t = CALIBRATED_D0_M)]
    pub d0: f64,
    /// Start-to-start frame spacing of the trace (s).
    #[arg(long, default_value_t = DEFAULT_FRAME_INTERVAL_S)]
    pub frame_interval: f64,
    #[command(flatten)]
    pub stft: StftArgs,
}

/// Exit status for an error: 2 for bad input, 1 for anything else.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    use twr_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<twr_core::Error>() {
            return match e {
                E::Parse { .. } | E::Io { .. } | E::RawFormat { .. } | E::InvalidConfig(_) | E::Csv(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

/// Display and peak-picking settings shared by `simulate` and `analyze`.
#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    pub stft: StftConfig,
    pub axis: FreqAxis,
    pub floor_dbm: f64,
    pub ceil_dbm: f64,
    pub threshold_db: f64,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub grid: SpectrogramGrid,
    pub threshold_dbm: f64,
    pub peaks: PeakList,
    pub ridges: Vec<(StaticRidge, RangeEstimate)>,
    /// `None` when every peak belongs to a static ridge.
    pub walker: Option<WalkerTrack>,
}

impl Analysis {
    pub fn range_rows(&self, slope_hz_per_s: f64, cable: &CableRun) -> Result<Vec<RangeEstimate>> {
        let mut rows: Vec<RangeEstimate> = self.ridges.iter().map(|(_, e)| e.clone()).collect();
        if let Some(w) = &self.walker {
            rows.push(distance_from_beat(w.f_b_max_hz, slope_hz_per_s, cable)?.labelled("walker-max"));
        }
        Ok(rows)
    }
}

/// Spectrogram, peaks, static ridges and walker track of a trace.
pub fn analyze_trace(trace: &IfTrace, cable: &CableRun, opts: &AnalysisOptions) -> Result<Analysis> {
    let s = trace.chirp.slope_hz_per_s;
    let grid = spectrogram(trace, &opts.stft, &opts.axis, opts.floor_dbm, opts.ceil_dbm)?;
    let threshold_dbm = (grid.median_dbm() + opts.threshold_db).max(opts.floor_dbm);
    let min_sep = opts
        .stft
        .resolution_bandwidth_hz(trace.config.sample_rate_hz)
        .max(grid.freq_step_hz());
    let peaks = extract_peaks_interpolated(&grid, threshold_dbm, min_sep)?;
    let ridges = static_ridges(&peaks)
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let est = distance_from_beat(r.freq_hz, s, cable)?.labelled(format!("static-{}", i + 1));
            Ok((r, est))
        })
        .collect::<Result<Vec<_>>>()?;
    let walker = match track_walker(&peaks, s, cable) {
        Ok(w) => Some(w),
        Err(twr_core::Error::NoMoverDetected) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Analysis {
        grid,
        threshold_dbm,
        peaks,
        ridges,
        walker,
    })
}

#[derive(Debug, Serialize)]
struct RidgeSummary {
    label: String,
    f_b_hz: f64,
    d_m: f64,
    persistence: f64,
    flag: &'static str,
}

#[derive(Debug, Serialize)]
struct WalkerSummary {
    f_b_max_hz: f64,
    d_max_m: f64,
    t_at_max_s: f64,
    samples: usize,
}

#[derive(Debug, Serialize)]
struct StftSummary {
    window: String,
    window_len: usize,
    hop: usize,
    fft_len: usize,
    resolution_bandwidth_hz: f64,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    command: &'static str,
    input: String,
    radar_preset: String,
    antenna: Option<String>,
    seed: Option<u64>,
    frames: usize,
    samples_per_frame: usize,
    sample_rate_hz: f64,
    frame_interval_s: f64,
    d0_m: f64,
    stft: StftSummary,
    freq_axis_hz: [f64; 2],
    freq_points: usize,
    floor_dbm: f64,
    ceil_dbm: f64,
    threshold_dbm: f64,
    grid_rows: usize,
    static_ridges: Vec<RidgeSummary>,
    walker: Option<WalkerSummary>,
    files: Vec<String>,
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    command: &'static str,
    input: &Path,
    trace: &IfTrace,
    preset: RadarPreset,
    antenna: Option<String>,
    seed: Option<u64>,
    cable: &CableRun,
    opts: &AnalysisOptions,
    a: &Analysis,
    files: Vec<String>,
) -> RunSummary {
    RunSummary {
        command,
        input: input.display().to_string(),
        radar_preset: preset.name().into(),
        antenna,
        seed,
        frames: trace.n_frames(),
        samples_per_frame: trace.samples_per_frame(),
        sample_rate_hz: trace.config.sample_rate_hz,
        frame_interval_s: trace.config.frame_interval_s,
        d0_m: cable.effective_length(),
        stft: StftSummary {
            window: opts.stft.window_kind.name().into(),
            window_len: opts.stft.window_len,
            hop: opts.stft.hop,
            fft_len: opts.stft.fft_len,
            resolution_bandwidth_hz: opts.stft.resolution_bandwidth_hz(trace.config.sample_rate_hz),
        },
        freq_axis_hz: [opts.axis.lo_hz, opts.axis.hi_hz],
        freq_points: opts.axis.points,
        floor_dbm: opts.floor_dbm,
        ceil_dbm: opts.ceil_dbm,
        threshold_dbm: a.threshold_dbm,
        grid_rows: a.grid.time_axis.len(),
        static_ridges: a
            .ridges
            .iter()
            .map(|(r, e)| RidgeSummary {
                label: e.label.clone(),
                f_b_hz: r.freq_hz,
                d_m: e.d_m,
                persistence: r.persistence,
                flag: e.flag(),
            })
            .collect(),
        walker: a.walker.as_ref().map(|w| WalkerSummary {
            f_b_max_hz: w.f_b_max_hz,
            d_max_m: w.d_max_m,
            t_at_max_s: w.t_at_max_s,
            samples: w.samples.len(),
        }),
        files,
    }
}

fn display_bounds(g: &GlobalOpts, file: Option<(f64, f64)>) -> (f64, f64) {
    let (f, c) = file.unwrap_or((DEFAULT_FLOOR_DBM, DEFAULT_CEIL_DBM));
    (g.floor_dbm.unwrap_or(f), g.ceil_dbm.unwrap_or(c))
}

fn write_outputs(
    out: &Path,
    cable: &CableRun,
    slope: f64,
    a: &Analysis,
    summary_files: &mut Vec<String>,
) -> Result<()> {
    export_grid(&a.grid, &out.join(GRID_CSV), &out.join(GRID_PGM))?;
    let rows = a.range_rows(slope, cable)?;
    let path = out.join(RANGE_TABLE);
    let f = File::create(&path).map_err(|e| twr_core::Error::io(&path, e))?;
    write_range_table(&rows, BufWriter::new(f)).map_err(|e| twr_core::Error::io(&path, e))?;
    summary_files.extend([GRID_CSV.to_string(), GRID_PGM.to_string(), RANGE_TABLE.to_string()]);
    Ok(())
}

fn write_summary(out: &Path, s: &RunSummary) -> Result<()> {
    let path = out.join(RUN_SUMMARY);
    let mut text = serde_json::to_string_pretty(s)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| twr_core::Error::io(&path, e))?;
    Ok(())
}

fn create_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| twr_core::Error::io(out, e))?;
    Ok(())
}

fn load_antenna(spec: &str, fbr_db: f64) -> Result<AntennaModel> {
    if PRESET_NAMES.contains(&spec) {
        return Ok(AntennaModel::preset(spec)?);
    }
    let p = Path::new(spec);
    if p.extension().is_some_and(|e| e == "csv") {
        return Ok(AntennaModel::from_csv_path(p, fbr_db, None)?);
    }
    Err(twr_core::Error::InvalidConfig(format!(
        "unknown antenna '{spec}' (expected {} or a .csv gain table)",
        PRESET_NAMES.join(", ")
    ))
    .into())
}

pub fn cmd_simulate(g: &GlobalOpts, args: &SimulateArgs) -> Result<()> {
    let mut cfg = load_run_config(&args.scene)?;
    if let Some(a) = &args.antenna {
        cfg = cfg.with_antenna(load_antenna(a, args.antenna_fbr_db)?);
    }
    if let Some(p) = args.radar {
        cfg.preset = p;
    }
    if let Some(d) = args.duration {
        if d.is_nan() || d <= 0.0 {
            return Err(twr_core::Error::InvalidConfig(format!("duration must be positive, got {d}")).into());
        }
        cfg.duration_s = d;
    }
    if let Some(seed) = g.seed {
        cfg.scene.noise.seed = seed;
    }
    let chirp = cfg.chirp()?;
    let rx = cfg.receiver_config(&chirp)?;
    let n_frames = rx.frames_for_duration(cfg.duration_s);
    // the raw export stores f32, so analyse exactly what gets written
    let trace = synthesize(&cfg.scene, &chirp, &rx, n_frames)
        .context("synthesis")?
        .rounded_to_f32();

    let (floor_dbm, ceil_dbm) = display_bounds(g, cfg.display);
    let opts = AnalysisOptions {
        stft: args.stft.config(rx.sample_rate_hz),
        axis: FreqAxis::with_points(g.freq_points),
        floor_dbm,
        ceil_dbm,
        threshold_db: args.stft.threshold_db,
    };
    let a = analyze_trace(&trace, &cfg.scene.cable, &opts)?;

    create_out_dir(&g.out)?;
    let mut files = Vec::new();
    write_outputs(&g.out, &cfg.scene.cable, chirp.slope_hz_per_s, &a, &mut files)?;
    if !args.no_raw {
        let path = g.out.join(RAW_TRACE);
        let f = File::create(&path).map_err(|e| twr_core::Error::io(&path, e))?;
        write_raw(&trace, BufWriter::new(f)).map_err(|e| twr_core::Error::io(&path, e))?;
        files.push(RAW_TRACE.into());
    }
    files.push(RUN_SUMMARY.into());
    let summary = summarize(
        "simulate",
        &args.scene,
        &trace,
        cfg.preset,
        Some(cfg.scene.tx_antenna.name.clone()),
        Some(cfg.scene.noise.seed),
        &cfg.scene.cable,
        &opts,
        &a,
        files,
    );
    write_summary(&g.out, &summary)?;
    print_analysis(&a, &cfg.scene.cable);
    Ok(())
}

pub fn cmd_analyze(g: &GlobalOpts, args: &AnalyzeArgs) -> Result<()> {
    let bytes = fs::read(&args.trace).map_err(|e| twr_core::Error::io(&args.trace, e))?;
    let raw = parse_raw(&bytes).with_context(|| args.trace.display().to_string())?;
    let chirp = args.radar.chirp();
    let trace = IfTrace::from_raw(raw, chirp, args.frame_interval)?;
    let cable = CableRun::fixed(args.d0)?;
    let (floor_dbm, ceil_dbm) = display_bounds(g, None);
    let opts = AnalysisOptions {
        stft: args.stft.config(trace.config.sample_rate_hz),
        axis: FreqAxis::with_points(g.freq_points),
        floor_dbm,
        ceil_dbm,
        threshold_db: args.stft.threshold_db,
    };
    let a = analyze_trace(&trace, &cable, &opts)?;
    create_out_dir(&g.out)?;
    let mut files = Vec::new();
    write_outputs(&g.out, &cable, chirp.slope_hz_per_s, &a, &mut files)?;
    files.push(RUN_SUMMARY.into());
    let summary = summarize(
        "analyze",
        &args.trace,
        &trace,
        args.radar,
        None,
        None,
        &cable,
        &opts,
        &a,
        files,
    );
    write_summary(&g.out, &summary)?;
    print_analysis(&a, &cable);
    Ok(())
}

fn print_analysis(a: &Analysis, cable: &CableRun) {
    println!(
        "{} rows x {} frequencies, d0 = {:.2} m, peak threshold {:.1} dBm",
        a.grid.time_axis.len(),
        a.grid.freq_axis.len(),
        cable.effective_length(),
        a.threshold_dbm
    );
    for (r, e) in &a.ridges {
        println!(
            "  {:<10} f_b {:.4} MHz  d {:7.3} m  persistence {:.2}{}",
            e.label,
            r.freq_hz / 1e6,
            e.d_m,
            r.persistence,
            if e.is_negative() { "  (negative)" } else { "" }
        );
    }
    match &a.walker {
        Some(w) => println!(
            "  walker     f_b_max {:.4} MHz  d_max {:7.3} m at t = {:.2} s ({} samples)",
            w.f_b_max_hz / 1e6,
            w.d_max_m,
            w.t_at_max_s,
            w.samples.len()
        ),
        None => println!("  no moving target detected"),
    }
}

/// Prints the report; returns whether every check passed.
pub fn cmd_validate() -> Result<bool> {
    let checks = validate::run_all()?;
    let mut all = true;
    for c in &checks {
        println!("[{}] {}: {}", c.status(), c.name, c.summary);
        for d in &c.details {
            println!("       {d}");
        }
        all &= c.passed;
    }
    println!(
        "{} of {} checks passed",
        checks.iter().filter(|c| c.passed).count(),
        checks.len()
    );
    Ok(all)
}

pub fn cmd_presets_list() -> Result<()> {
    println!("radar presets:");
    for p in RadarPreset::ALL {
        let c = p.chirp();
        println!(
            "  {:<16} {:.3}-{:.3} GHz, B {:.0} MHz, slope {:.1} MHz/us, T {:.2} us, {} dBm",
            p.name(),
            c.start_freq_hz / 1e9,
            c.stop_freq_hz() / 1e9,
            c.bandwidth_hz / 1e6,
            c.slope_hz_per_s / 1e12,
            c.duration_s * 1e6,
            c.tx_power_dbm
        );
    }
    println!("antennas:");
    for name in PRESET_NAMES {
        let m = AntennaModel::preset(name)?;
        let table: Vec<String> = m
            .gain_table
            .iter()
            .map(|(f, g)| format!("{:.2} GHz {:.1} dBi", f / 1e9, g))
            .collect();
        println!(
            "  {:<16} FBR {:.2} dB, directivity {:.2} dBi, cos^n n = {:.2}; {}",
            name,
            m.fbr_db,
            m.directivity_dbi,
            m.pattern_exponent,
            table.join(", ")
        );
        for a in &m.assumptions {
            println!("  {:<16}   assumed: {a}", "");
        }
    }
    println!("cable conventions: sqrt-eps, linear-eps (alias paper-eps), fixed-d0 (default d0 = {CALIBRATED_D0_M} m)");
    println!("wall presets: wooden-partition (3 dB, 4 cm), brick-40cm (13 dB, 40 cm)");
    println!("windows: hann (default), hamming, rect");
    println!(
        "display ranges: {DEFAULT_FLOOR_DBM}..{DEFAULT_CEIL_DBM} dBm (default), {WIDE_FLOOR_DBM}..{WIDE_CEIL_DBM} dBm (wide)"
    );
    Ok(())
}

/// Runs a parsed command line; returns the process exit status.
pub fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool")?;
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&cli.global, a).map(|_| 0),
        Command::Analyze(a) => cmd_analyze(&cli.global, a).map(|_| 0),
        Command::Validate => cmd_validate().map(|ok| if ok { 0 } else { 1 }),
        Command::Presets { what: PresetsCmd::List } => cmd_presets_list().map(|_| 0),
    }
}
