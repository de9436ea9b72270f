//! INI scene files.
//!
//! ```ini
//! [radar]
//! preset = roc-operational
//! duration_s = 30
//!
//! [cable]
//! convention = fixed-d0
//! d0_m = 55.97
//!
//! [antenna]
//! name = quasi-yagi
//!
//! [wall.partition]
//! preset = wooden-partition
//!
//! [target.walker]
//! kind = back-and-forth
//! near_m = 1
//! far_m = 7.4
//! walls = partition
//!
//! [noise]
//! density_dbm_per_hz = -90
//! seed = 7
//! ```
//!
//! Keys and sections are checked strictly; every error carries the file
//! name and line. Comments start with `#` or `;`.

use std::path::{Path, PathBuf};

use crate::antenna::AntennaModel;
use crate::chirp::{ChirpParams, RadarPreset};
use crate::scene::{
    CableConvention, CableRun, NoiseSpec, Reflector, Scene, StartAt, Trajectory, Wall, CALIBRATED_D0_M,
};
use crate::synth::{AdcConfig, ReceiverConfig};
use crate::{Error, Result};

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn parse_ini(text: &str, path: &str) -> Result<Vec<Section>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("unterminated section header '{content}'")))?
                .trim()
                .to_ascii_lowercase();
            if name.is_empty() {
                return Err(err(line, "empty section name".into()));
            }
            if let Some(prev) = sections.iter().find(|s| s.name == name) {
                return Err(err(
                    line,
                    format!("section [{name}] already defined on line {}", prev.line),
                ));
            }
            sections.push(Section {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected 'key = value', got '{content}'")))?;
        let key = key.trim().to_ascii_lowercase();
        let section = sections
            .last_mut()
            .ok_or_else(|| err(line, format!("key '{key}' outside any section")))?;
        if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
            return Err(err(line, format!("key '{key}' already set on line {}", prev.line)));
        }
        section.entries.push(Entry {
            key,
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}

fn strip_comment(line: &str) -> &str {
    let t = line.trim_start();
    if t.starts_with('#') || t.starts_with(';') {
        return "";
    }
    // inline comments need a preceding space so values like "a#b" survive
    [" #", " ;", "\t#", "\t;"]
        .iter()
        .filter_map(|m| line.find(m))
        .min()
        .map_or(line, |i| &line[..i])
}

/// Typed access to one section with line-numbered errors.
struct Reader<'a> {
    path: &'a str,
    section: &'a Section,
    used: Vec<&'a str>,
}

impl<'a> Reader<'a> {
    fn new(path: &'a str, section: &'a Section) -> Self {
        Self {
            path,
            section,
            used: Vec::new(),
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line,
            msg: msg.into(),
        }
    }

    fn section_err(&self, msg: impl Into<String>) -> Error {
        self.err(self.section.line, format!("[{}]: {}", self.section.name, msg.into()))
    }

    fn raw(&mut self, key: &'a str) -> Option<&'a Entry> {
        self.used.push(key);
        self.section.entries.iter().find(|e| e.key == key)
    }

    fn text(&mut self, key: &'a str) -> Option<(String, usize)> {
        self.raw(key).map(|e| (e.value.clone(), e.line))
    }

    fn num(&mut self, key: &'a str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| self.err(e.line, format!("'{}' expects a number, got '{}'", e.key, e.value))),
        }
    }

    fn required_num(&mut self, key: &'a str) -> Result<f64> {
        self.num(key)?
            .ok_or_else(|| self.section_err(format!("missing required key '{key}'")))
    }

    fn int(&mut self, key: &'a str) -> Result<Option<u64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<u64>().map(Some).map_err(|_| {
                self.err(
                    e.line,
                    format!("'{}' expects a non-negative integer, got '{}'", e.key, e.value),
                )
            }),
        }
    }

    fn parsed<T: std::str::FromStr<Err = Error>>(&mut self, key: &'a str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|x| self.err(e.line, x.to_string())),
        }
    }

    /// Rejects keys that no accessor asked for.
    fn finish(self) -> Result<()> {
        match self
            .section
            .entries
            .iter()
            .find(|e| !self.used.contains(&e.key.as_str()))
        {
            Some(e) => Err(self.err(e.line, format!("unknown key '{}' in [{}]", e.key, self.section.name))),
            None => Ok(()),
        }
    }
}

/// Receiver settings a scene file may override.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReceiverOverrides {
    pub sample_rate_hz: Option<f64>,
    pub frame_interval_s: Option<f64>,
    pub conversion_gain_db: Option<f64>,
    pub if_bandwidth_hz: Option<f64>,
    pub adc: Option<AdcConfig>,
}

/// Everything a simulation run needs, as read from a scene file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: PathBuf,
    pub preset: RadarPreset,
    pub tx_power_dbm: f64,
    pub duration_s: f64,
    pub receiver: ReceiverOverrides,
    pub scene: Scene,
    /// Display clamp (floor, ceil) in dBm, if the file sets one.
    pub display: Option<(f64, f64)>,
}

pub const DEFAULT_DURATION_S: f64 = 30.0;

impl RunConfig {
    pub fn chirp(&self) -> Result<ChirpParams> {
        let c = self.preset.chirp();
        ChirpParams::from_slope(
            c.start_freq_hz,
            c.bandwidth_hz,
            c.slope_hz_per_s,
            c.initial_phase_rad,
            self.tx_power_dbm,
        )
    }

    /// Receiver defaults for the chirp with the file's overrides applied.
    pub fn receiver_config(&self, chirp: &ChirpParams) -> Result<ReceiverConfig> {
        let mut rx = ReceiverConfig::for_chirp(chirp);
        let o = &self.receiver;
        if let Some(fs) = o.sample_rate_hz {
            rx.sample_rate_hz = fs;
            rx.samples_per_frame = crate::synth::samples_in_chirp(chirp, fs);
        }
        if let Some(v) = o.frame_interval_s {
            rx.frame_interval_s = v;
        }
        if let Some(v) = o.conversion_gain_db {
            rx.conversion_gain_db = v;
        }
        if let Some(v) = o.if_bandwidth_hz {
            rx.if_bandwidth_hz = v;
        }
        rx.adc = o.adc;
        rx.validate(chirp)?;
        Ok(rx)
    }

    /// Swaps both antennas.
    pub fn with_antenna(mut self, antenna: AntennaModel) -> Self {
        self.scene.tx_antenna = antenna.clone();
        self.scene.rx_antenna = antenna;
        self
    }
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cfg = parse_run_config(&text, &path.display().to_string(), base)?;
    cfg.source = path.to_path_buf();
    Ok(cfg)
}

/// Parses scene-file text; `base_dir` resolves relative gain-table paths.
pub fn parse_run_config(text: &str, path: &str, base_dir: &Path) -> Result<RunConfig> {
    let sections = parse_ini(text, path)?;
    for s in &sections {
        let known = matches!(s.name.as_str(), "radar" | "cable" | "antenna" | "noise" | "display")
            || s.name.strip_prefix("wall.").is_some_and(|l| !l.is_empty())
            || s.name.strip_prefix("target.").is_some_and(|l| !l.is_empty());
        if !known {
            return Err(Error::Parse {
                path: path.to_string(),
                line: s.line,
                msg: format!("unknown section [{}]", s.name),
            });
        }
    }
    let find = |name: &str| sections.iter().find(|s| s.name == name);
    let empty = Section {
        name: String::new(),
        line: 0,
        entries: Vec::new(),
    };

    // [radar]
    let radar_section = find("radar").unwrap_or(&empty);
    let mut r = Reader::new(path, radar_section);
    let preset = r
        .parsed::<RadarPreset>("preset")?
        .unwrap_or(RadarPreset::RocOperational);
    let tx_power_dbm = r.num("tx_power_dbm")?.unwrap_or(0.0);
    let tx_gain_db = r.num("tx_gain_db")?.unwrap_or(0.0);
    let duration_s = r.num("duration_s")?.unwrap_or(DEFAULT_DURATION_S);
    if !(duration_s > 0.0) {
        return Err(r.section_err("duration_s must be positive"));
    }
    let adc_bits = r.int("adc_bits")?;
    let adc_full_scale = r.num("adc_full_scale_v")?;
    let receiver = ReceiverOverrides {
        sample_rate_hz: r.num("sample_rate_hz")?,
        frame_interval_s: r.num("frame_interval_s")?,
        conversion_gain_db: r.num("conversion_gain_db")?,
        if_bandwidth_hz: r.num("if_bandwidth_hz")?,
        adc: match (adc_bits, adc_full_scale) {
            (None, None) => None,
            (Some(bits), fs) => Some(AdcConfig {
                bits: u32::try_from(bits).map_err(|_| r.section_err("adc_bits too large"))?,
                full_scale_v: fs.unwrap_or(1.0),
            }),
            (None, Some(_)) => return Err(r.section_err("adc_full_scale_v needs adc_bits")),
        },
    };
    r.finish()?;

    // [cable]
    let cable_section = find("cable").unwrap_or(&empty);
    let mut r = Reader::new(path, cable_section);
    let convention = r
        .parsed::<CableConvention>("convention")?
        .unwrap_or(CableConvention::FixedD0);
    let d0 = r.num("d0_m")?;
    let lengths = [r.num("l1_m")?, r.num("eps_r1")?, r.num("l2_m")?, r.num("eps_r2")?];
    let cable = match convention {
        CableConvention::FixedD0 => {
            if lengths.iter().any(Option::is_some) {
                return Err(r.section_err("fixed-d0 takes only d0_m"));
            }
            CableRun::fixed(d0.unwrap_or(CALIBRATED_D0_M))
        }
        _ => {
            if d0.is_some() {
                return Err(r.section_err(format!("d0_m only applies to fixed-d0, not {convention}")));
            }
            CableRun::new(
                lengths[0].unwrap_or(40.0),
                lengths[1].unwrap_or(1.0),
                lengths[2].unwrap_or(7.45),
                lengths[3].unwrap_or(1.0),
                convention,
            )
        }
    }
    .map_err(|e| r.section_err(e.to_string()))?;
    r.finish()?;

    // [antenna]
    let antenna_section = find("antenna").unwrap_or(&empty);
    let mut r = Reader::new(path, antenna_section);
    let name = r.text("name");
    let table = r.text("gain_table");
    let fbr = r.num("fbr_db")?;
    let directivity = r.num("directivity_dbi")?;
    let antenna = match (name, table) {
        (Some(_), Some((_, line))) => return Err(r.err(line, "set either 'name' or 'gain_table', not both")),
        (Some((n, line)), None) => {
            if fbr.is_some() || directivity.is_some() {
                return Err(r.err(line, "preset antennas take no fbr_db/directivity_dbi"));
            }
            AntennaModel::preset(&n).map_err(|e| r.err(line, e.to_string()))?
        }
        (None, Some((t, line))) => {
            let fbr = fbr.ok_or_else(|| r.err(line, "gain_table needs fbr_db"))?;
            let p = base_dir.join(t);
            AntennaModel::from_csv_path(&p, fbr, directivity).map_err(|e| r.err(line, e.to_string()))?
        }
        (None, None) => AntennaModel::preset("quasi-yagi")?,
    };
    r.finish()?;

    let mut scene = Scene::new(antenna, cable);
    scene.tx_gain_db = tx_gain_db;

    // [wall.*]
    for s in sections.iter().filter(|s| s.name.starts_with("wall.")) {
        let label = &s.name["wall.".len()..];
        let mut r = Reader::new(path, s);
        let preset = r.text("preset");
        let loss = r.num("loss_db")?;
        let thickness = r.num("thickness_m")?;
        let wall = match preset {
            Some((p, line)) => {
                if loss.is_some() || thickness.is_some() {
                    return Err(r.err(line, "wall presets take no loss_db/thickness_m"));
                }
                match p.as_str() {
                    "wooden-partition" => Wall::wooden_partition(label),
                    "brick-40cm" => Wall::brick_40cm(label),
                    other => {
                        return Err(r.err(
                            line,
                            format!("unknown wall preset '{other}' (wooden-partition, brick-40cm)"),
                        ))
                    }
                }
            }
            None => {
                let loss = r.required_num("loss_db")?;
                Wall::new(label, loss, thickness.unwrap_or(0.0)).map_err(|e| r.section_err(e.to_string()))?
            }
        };
        r.finish()?;
        scene = scene.with_wall(wall);
    }

    // [target.*]
    for s in sections.iter().filter(|s| s.name.starts_with("target.")) {
        let label = &s.name["target.".len()..];
        let mut r = Reader::new(path, s);
        let kind = r.text("kind").map_or_else(|| "static".to_string(), |k| k.0);
        let trajectory = match kind.as_str() {
            "static" => Trajectory::fixed(r.required_num("distance_m")?),
            "back-and-forth" => {
                let near = r.required_num("near_m")?;
                let far = r.required_num("far_m")?;
                let speed = r.num("speed_mps")?.unwrap_or(1.0);
                let start = match r.text("start_at") {
                    None => StartAt::Near,
                    Some((v, line)) => match v.as_str() {
                        "near" => StartAt::Near,
                        "far" => StartAt::Far,
                        other => return Err(r.err(line, format!("start_at must be near or far, got '{other}'"))),
                    },
                };
                Trajectory::back_and_forth(near, far, speed, start)
            }
            other => return Err(r.section_err(format!("unknown target kind '{other}' (static, back-and-forth)"))),
        }
        .map_err(|e| r.section_err(e.to_string()))?;
        let rcs = r.num("rcs_sqm")?.unwrap_or(1.0);
        let mut reflector = Reflector::new(label, rcs, trajectory).map_err(|e| r.section_err(e.to_string()))?;
        if let Some(deg) = r.num("off_axis_deg")? {
            reflector.off_axis_rad = deg.to_radians();
        }
        if let Some((walls, line)) = r.text("walls") {
            for w in walls.split(',').map(str::trim).filter(|w| !w.is_empty()) {
                let w = w.to_ascii_lowercase();
                if !scene.walls.iter().any(|x| x.label == w) {
                    return Err(r.err(line, format!("unknown wall '{w}'")));
                }
                reflector = reflector.behind(w);
            }
        }
        r.finish()?;
        scene = scene.with_reflector(reflector);
    }

    // [noise]
    let noise_section = find("noise").unwrap_or(&empty);
    let mut r = Reader::new(path, noise_section);
    let density = match r.text("density_dbm_per_hz") {
        None => NoiseSpec::default().density_dbm_per_hz,
        Some((v, _)) if v == "off" => None,
        Some((v, line)) => Some(
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| r.err(line, format!("density_dbm_per_hz expects a number or 'off', got '{v}'")))?,
        ),
    };
    let seed = r.int("seed")?.unwrap_or(0);
    r.finish()?;
    scene = scene.with_noise(NoiseSpec {
        density_dbm_per_hz: density,
        seed,
    });

    // [display]
    let display = match find("display") {
        None => None,
        Some(s) => {
            let mut r = Reader::new(path, s);
            let floor = r.required_num("floor_dbm")?;
            let ceil = r.required_num("ceil_dbm")?;
            if floor > ceil {
                return Err(r.section_err(format!("floor_dbm {floor} above ceil_dbm {ceil}")));
            }
            r.finish()?;
            Some((floor, ceil))
        }
    };

    scene.validate()?;
    Ok(RunConfig {
        source: PathBuf::from(path),
        preset,
        tx_power_dbm,
        duration_s,
        receiver,
        scene,
        display,
    })
}
