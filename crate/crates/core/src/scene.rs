//! One-dimensional propagation scenes: reflectors on range tracks, wall
//! crossings, feed cables, and the per-echo delay/power budget.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::antenna::AntennaModel;
use crate::chirp::{ChirpParams, EchoContribution};
use crate::units::dbm_to_peak_volts;
use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartAt {
    Near,
    Far,
}

/// Range of a reflector over time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trajectory {
    Static {
        distance_m: f64,
    },
    /// Triangular wave between `near_m` and `far_m` at constant speed.
    BackAndForth {
        near_m: f64,
        far_m: f64,
        speed_mps: f64,
        start: StartAt,
    },
}

impl Trajectory {
    pub fn fixed(distance_m: f64) -> Result<Self> {
        if !(distance_m >= 0.0) || !distance_m.is_finite() {
            return Err(Error::invalid(format!("distance must be >= 0, got {distance_m}")));
        }
        Ok(Trajectory::Static { distance_m })
    }

    pub fn back_and_forth(near_m: f64, far_m: f64, speed_mps: f64, start: StartAt) -> Result<Self> {
        if !(near_m >= 0.0) || !(near_m < far_m) || !far_m.is_finite() {
            return Err(Error::invalid(format!(
                "back-and-forth needs 0 <= near < far, got {near_m}..{far_m}"
            )));
        }
        if !(speed_mps > 0.0) || !speed_mps.is_finite() {
            return Err(Error::invalid(format!("speed must be positive, got {speed_mps}")));
        }
        Ok(Trajectory::BackAndForth {
            near_m,
            far_m,
            speed_mps,
            start,
        })
    }

    /// Position (m) at time `t_s`; negative times evaluate at t = 0.
    pub fn position_at(&self, t_s: f64) -> f64 {
        match *self {
            Trajectory::Static { distance_m } => distance_m,
            Trajectory::BackAndForth {
                near_m,
                far_m,
                speed_mps,
                start,
            } => {
                let span = far_m - near_m;
                let period = 2.0 * span / speed_mps;
                let phase = (t_s.max(0.0) % period) * speed_mps;
                // distance travelled from the start end, folded onto one leg
                let off = if phase <= span { phase } else { 2.0 * span - phase };
                match start {
                    StartAt::Near => near_m + off,
                    StartAt::Far => far_m - off,
                }
            }
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, Trajectory::Static { .. })
    }

    pub fn extent(&self) -> (f64, f64) {
        match *self {
            Trajectory::Static { distance_m } => (distance_m, distance_m),
            Trajectory::BackAndForth { near_m, far_m, .. } => (near_m, far_m),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reflector {
    pub label: String,
    pub rcs_sqm: f64,
    pub trajectory: Trajectory,
    pub walls_crossed: Vec<String>,
    /// Angle off the antenna boresight (rad); 0 for targets down-range.
    pub off_axis_rad: f64,
}

impl Reflector {
    pub fn new(label: impl Into<String>, rcs_sqm: f64, trajectory: Trajectory) -> Result<Self> {
        let label = label.into();
        if !(rcs_sqm > 0.0) || !rcs_sqm.is_finite() {
            return Err(Error::invalid(format!(
                "reflector '{label}': RCS must be positive, got {rcs_sqm}"
            )));
        }
        Ok(Self {
            label,
            rcs_sqm,
            trajectory,
            walls_crossed: Vec::new(),
            off_axis_rad: 0.0,
        })
    }

    pub fn behind(mut self, wall: impl Into<String>) -> Self {
        self.walls_crossed.push(wall.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub label: String,
    pub one_way_loss_db: f64,
    pub thickness_m: f64,
}

impl Wall {
    pub fn new(label: impl Into<String>, one_way_loss_db: f64, thickness_m: f64) -> Result<Self> {
        let label = label.into();
        if !(one_way_loss_db >= 0.0) {
            return Err(Error::invalid(format!("wall '{label}': loss must be >= 0 dB")));
        }
        Ok(Self {
            label,
            one_way_loss_db,
            thickness_m,
        })
    }

    /// Wooden partition, 3 dB per pass (assumed).
    pub fn wooden_partition(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            one_way_loss_db: 3.0,
            thickness_m: 0.04,
        }
    }

    /// 40 cm brick-and-mortar, 13 dB per pass near 2.3 GHz (assumed).
    pub fn brick_40cm(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            one_way_loss_db: 13.0,
            thickness_m: 0.40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CableConvention {
    /// d0 = l1·√εr1 + l2·√εr2 (propagation at c/√εr).
    SqrtEps,
    /// d0 = l1·εr1 + l2·εr2.
    LinearEps,
    /// d0 supplied directly (calibrated).
    FixedD0,
}

impl CableConvention {
    pub fn name(self) -> &'static str {
        match self {
            CableConvention::SqrtEps => "sqrt-eps",
            CableConvention::LinearEps => "linear-eps",
            CableConvention::FixedD0 => "fixed-d0",
        }
    }
}

impl fmt::Display for CableConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CableConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "paper-eps" {
            return Ok(CableConvention::LinearEps);
        }
        [
            CableConvention::SqrtEps,
            CableConvention::LinearEps,
            CableConvention::FixedD0,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::config(format!("unknown cable convention '{s}'")))
    }
}

/// Feed cables between the radar and the antennas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableRun {
    pub l1_m: f64,
    pub eps_r1: f64,
    pub l2_m: f64,
    pub eps_r2: f64,
    pub convention: CableConvention,
    pub d0_override_m: f64,
}

/// Calibrated effective cable length of the measurement setup.
pub const CALIBRATED_D0_M: f64 = 55.97;

impl CableRun {
    pub fn new(l1_m: f64, eps_r1: f64, l2_m: f64, eps_r2: f64, convention: CableConvention) -> Result<Self> {
        let c = Self {
            l1_m,
            eps_r1,
            l2_m,
            eps_r2,
            convention,
            d0_override_m: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn fixed(d0_m: f64) -> Result<Self> {
        let c = Self {
            l1_m: 40.0,
            eps_r1: 1.0,
            l2_m: 7.45,
            eps_r2: 1.0,
            convention: CableConvention::FixedD0,
            d0_override_m: d0_m,
        };
        c.validate()?;
        Ok(c)
    }

    /// Fixed d0 = 55.97 m with the measured 40 m + 7.45 m lengths on record.
    pub fn calibrated() -> Self {
        Self::fixed(CALIBRATED_D0_M).expect("valid")
    }

    /// No cables at all.
    pub fn none() -> Self {
        Self::fixed(0.0).expect("valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l1_m >= 0.0) || !(self.l2_m >= 0.0) {
            return Err(Error::invalid("cable lengths must be >= 0"));
        }
        if !(self.eps_r1 >= 1.0) || !(self.eps_r2 >= 1.0) {
            return Err(Error::invalid("cable permittivity must be >= 1"));
        }
        if !(self.d0_override_m >= 0.0) || !self.d0_override_m.is_finite() {
            return Err(Error::invalid("d0 override must be >= 0"));
        }
        Ok(())
    }

    /// Effective electrical length d0 (m).
    pub fn effective_length(&self) -> f64 {
        match self.convention {
            CableConvention::SqrtEps => self.l1_m * self.eps_r1.sqrt() + self.l2_m * self.eps_r2.sqrt(),
            CableConvention::LinearEps => self.l1_m * self.eps_r1 + self.l2_m * self.eps_r2,
            CableConvention::FixedD0 => self.d0_override_m,
        }
    }
}

pub fn effective_cable_length(cable: &CableRun) -> f64 {
    cable.effective_length()
}

/// (2d + d0)/c.
pub fn round_trip_delay(target_distance_m: f64, cable: &CableRun) -> Result<f64> {
    if !(target_distance_m >= 0.0) {
        return Err(Error::invalid(format!(
            "distance must be >= 0, got {target_distance_m}"
        )));
    }
    Ok((2.0 * target_distance_m + cable.effective_length()) / SPEED_OF_LIGHT)
}

/// Receiver noise; `density_dbm_per_hz = None` disables noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub density_dbm_per_hz: Option<f64>,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            density_dbm_per_hz: Some(-90.0),
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn silent() -> Self {
        Self {
            density_dbm_per_hz: None,
            seed: 0,
        }
    }
}

/// Monostatic radar equation with two-way wall loss, in dBm.
#[allow(clippy::too_many_arguments)]
pub fn received_power(
    tx_dbm: f64,
    tx_ant: &AntennaModel,
    rx_ant: &AntennaModel,
    freq_hz: f64,
    reflector: &Reflector,
    distance_m: f64,
    walls: &[Wall],
) -> Result<f64> {
    if distance_m == 0.0 {
        return Err(Error::Singularity);
    }
    if !(distance_m > 0.0) {
        return Err(Error::invalid(format!("distance must be positive, got {distance_m}")));
    }
    let theta = reflector.off_axis_rad.abs().min(PI);
    let g_tx = tx_ant.pattern_gain(freq_hz, theta)?.gain_dbi;
    let g_rx = rx_ant.pattern_gain(freq_hz, theta)?.gain_dbi;
    let lambda = SPEED_OF_LIGHT / freq_hz;
    let spread = reflector.rcs_sqm * lambda * lambda / ((4.0 * PI).powi(3) * distance_m.powi(4));
    let mut wall_loss = 0.0;
    for label in &reflector.walls_crossed {
        let wall = walls.iter().find(|w| &w.label == label).ok_or_else(|| {
            Error::config(format!(
                "reflector '{}' crosses unknown wall '{label}'",
                reflector.label
            ))
        })?;
        wall_loss += 2.0 * wall.one_way_loss_db;
    }
    Ok(tx_dbm + g_tx + g_rx + 10.0 * spread.log10() - wall_loss)
}

/// A complete measurement environment. Immutable once built.
#[derive(Debug, Clone)]
pub struct Scene {
    pub reflectors: Vec<Reflector>,
    pub walls: Vec<Wall>,
    pub cable: CableRun,
    pub tx_antenna: AntennaModel,
    pub rx_antenna: AntennaModel,
    /// External amplifier gain ahead of the transmit antenna (dB).
    pub tx_gain_db: f64,
    pub noise: NoiseSpec,
}

impl Scene {
    pub fn new(antenna: AntennaModel, cable: CableRun) -> Self {
        Self {
            reflectors: Vec::new(),
            walls: Vec::new(),
            cable,
            tx_antenna: antenna.clone(),
            rx_antenna: antenna,
            tx_gain_db: 0.0,
            noise: NoiseSpec::silent(),
        }
    }

    pub fn with_reflector(mut self, r: Reflector) -> Self {
        self.reflectors.push(r);
        self
    }

    pub fn with_wall(mut self, w: Wall) -> Self {
        self.walls.push(w);
        self
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    /// Checks label uniqueness and wall references.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        for r in &self.reflectors {
            if seen.insert(r.label.as_str(), ()).is_some() {
                return Err(Error::config(format!("duplicate reflector label '{}'", r.label)));
            }
            for w in &r.walls_crossed {
                if !self.walls.iter().any(|x| &x.label == w) {
                    return Err(Error::config(format!(
                        "reflector '{}' crosses unknown wall '{w}'",
                        r.label
                    )));
                }
            }
        }
        self.cable.validate()
    }

    /// Echo contributions with every reflector frozen at time `t_s`.
    /// Power budgets are evaluated at the chirp's center frequency.
    pub fn echoes_at(&self, t_s: f64, chirp: &ChirpParams, conversion_gain: f64) -> Result<Vec<EchoContribution>> {
        let f = chirp.center_freq_hz();
        let tx_dbm = chirp.tx_power_dbm + self.tx_gain_db;
        self.reflectors
            .iter()
            .map(|r| {
                let d = r.trajectory.position_at(t_s);
                let tau = round_trip_delay(d, &self.cable)?;
                let p = received_power(tx_dbm, &self.tx_antenna, &self.rx_antenna, f, r, d, &self.walls)?;
                EchoContribution::new(tau, dbm_to_peak_volts(p), conversion_gain, r.label.clone())
            })
            .collect()
    }
}
