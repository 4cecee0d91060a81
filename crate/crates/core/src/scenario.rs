//! World model: area, users, anchors, radio parameters and system kinds,
//! plus the TOML scenario file format.
//!
//! A scenario file only needs a seed; every other field falls back to the
//! reference urban setup (3 km x 3 km, 30 dBm transmit power, -70 dBm
//! sensitivity, 2 GHz carrier, 50 m anchors, 150 m tether). Users and
//! anchors are either listed explicitly (`[[ue]]`, `[[anchor]]`) or sampled
//! from the seed.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::pointprocess;
use crate::seeding::{SeedPath, SimRng};

pub const DEFAULT_AREA_SIDE_M: f64 = 3000.0;
pub const DEFAULT_PT_DBM: f64 = 30.0;
pub const DEFAULT_PMIN_DBM: f64 = -70.0;
pub const DEFAULT_FC_HZ: f64 = 2.0e9;
pub const DEFAULT_ANCHOR_HEIGHT_M: f64 = 50.0;
pub const DEFAULT_TETHER_M: f64 = 150.0;
pub const DEFAULT_MIN_INCL_DEG: f64 = 0.0;
pub const DEFAULT_N_UES: usize = 200;
pub const DEFAULT_N_ANCHORS: usize = 10;

/// Axis-aligned rectangle with its origin at the lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub width_m: f64,
    pub height_m: f64,
}

impl Default for Area {
    fn default() -> Self {
        Area {
            width_m: DEFAULT_AREA_SIDE_M,
            height_m: DEFAULT_AREA_SIDE_M,
        }
    }
}

impl Area {
    pub fn new(width_m: f64, height_m: f64) -> Result<Self> {
        let area = Area { width_m, height_m };
        area.validate("area")?;
        Ok(area)
    }

    pub fn square(side_m: f64) -> Result<Self> {
        Self::new(side_m, side_m)
    }

    fn validate(&self, path: &str) -> Result<()> {
        positive(&format!("{path}.width_m"), self.width_m)?;
        positive(&format!("{path}.height_m"), self.height_m)
    }

    pub fn contains(&self, p: Point2) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y)
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.width_m / 2.0, self.height_m / 2.0)
    }

    pub fn side(&self) -> f64 {
        self.width_m.max(self.height_m)
    }

    pub fn sample_uniform(&self, rng: &mut SimRng) -> Point2 {
        Point2::new(
            rng.random::<f64>() * self.width_m,
            rng.random::<f64>() * self.height_m,
        )
    }
}

/// Terrestrial user equipment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ue {
    pub id: u32,
    pub pos: Point2,
    pub cluster_id: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub id: u32,
    pub pos: Point2,
    pub height_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    pub pt_dbm: f64,
    pub pmin_dbm: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            pt_dbm: DEFAULT_PT_DBM,
            pmin_dbm: DEFAULT_PMIN_DBM,
        }
    }
}

impl LinkBudget {
    /// Maximum tolerable path loss.
    pub fn threshold_db(&self) -> f64 {
        self.pt_dbm - self.pmin_dbm
    }

    /// Budget whose threshold is exactly `threshold_db`, keeping the default
    /// transmit power.
    pub fn with_threshold(threshold_db: f64) -> Self {
        LinkBudget {
            pt_dbm: DEFAULT_PT_DBM,
            pmin_dbm: DEFAULT_PT_DBM - threshold_db,
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        finite(&format!("{path}.pt_dbm"), self.pt_dbm)?;
        finite(&format!("{path}.pmin_dbm"), self.pmin_dbm)?;
        if self.threshold_db() <= 0.0 {
            return Err(Error::validation(
                format!("{path}.pmin_dbm"),
                "pt_dbm - pmin_dbm must be positive",
            ));
        }
        Ok(())
    }
}

/// Environment constants of the probabilistic LoS/NLoS air-to-ground model.
/// Defaults are the usual urban values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub fc_hz: f64,
    pub a: f64,
    pub b: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            fc_hz: DEFAULT_FC_HZ,
            a: 9.61,
            b: 0.16,
            eta_los_db: 1.0,
            eta_nlos_db: 20.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self, path: &str) -> Result<()> {
        positive(&format!("{path}.fc_hz"), self.fc_hz)?;
        finite(&format!("{path}.a"), self.a)?;
        positive(&format!("{path}.b"), self.b)?;
        if !(self.eta_los_db >= 0.0) {
            return Err(Error::validation(
                format!("{path}.eta_los_db"),
                "must be >= 0",
            ));
        }
        if !(self.eta_nlos_db >= self.eta_los_db) || !self.eta_nlos_db.is_finite() {
            return Err(Error::validation(
                format!("{path}.eta_nlos_db"),
                "must be finite and >= eta_los_db",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TetherParams {
    pub length_m: f64,
    pub min_incl_deg: f64,
}

impl Default for TetherParams {
    fn default() -> Self {
        TetherParams {
            length_m: DEFAULT_TETHER_M,
            min_incl_deg: DEFAULT_MIN_INCL_DEG,
        }
    }
}

impl TetherParams {
    fn validate(&self, path: &str) -> Result<()> {
        positive(&format!("{path}.length_m"), self.length_m)?;
        if !(0.0..90.0).contains(&self.min_incl_deg) {
            return Err(Error::validation(
                format!("{path}.min_incl_deg"),
                "must lie in [0, 90)",
            ));
        }
        Ok(())
    }
}

/// Deployment discipline under study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemKind {
    UavNoSwap { battery_min: f64 },
    UavSwap,
    Tuav { tether: TetherParams },
    Ituav { tether: TetherParams, n_anchors: usize },
    MultiTuav { k: usize, tether: TetherParams },
    MultiItuav { k: usize, tether: TetherParams, n_anchors: usize },
}

impl SystemKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SystemKind::UavNoSwap { battery_min } => positive("system.battery_min", battery_min),
            SystemKind::UavSwap => Ok(()),
            SystemKind::Tuav { tether } => tether.validate("system.tether"),
            SystemKind::Ituav { tether, n_anchors } => {
                tether.validate("system.tether")?;
                at_least_one("system.n_anchors", n_anchors)
            }
            SystemKind::MultiTuav { k, tether } => {
                tether.validate("system.tether")?;
                at_least_one("system.k", k)
            }
            SystemKind::MultiItuav {
                k,
                tether,
                n_anchors,
            } => {
                tether.validate("system.tether")?;
                at_least_one("system.k", k)?;
                at_least_one("system.n_anchors", n_anchors)?;
                if k > n_anchors {
                    return Err(Error::validation(
                        "system.k",
                        format!("{k} iTUAVs need at least as many anchors, got {n_anchors}"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Number of anchors the discipline draws from the scenario pool.
    pub fn anchors_used(&self) -> usize {
        match *self {
            SystemKind::UavNoSwap { .. } | SystemKind::UavSwap => 0,
            SystemKind::Tuav { .. } => 1,
            SystemKind::Ituav { n_anchors, .. } | SystemKind::MultiItuav { n_anchors, .. } => {
                n_anchors
            }
            SystemKind::MultiTuav { k, .. } => k,
        }
    }

    pub fn uav_count(&self) -> usize {
        match *self {
            SystemKind::MultiTuav { k, .. } | SystemKind::MultiItuav { k, .. } => k,
            _ => 1,
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SystemKind::UavNoSwap { battery_min } => write!(f, "uav-no-swap({battery_min})"),
            SystemKind::UavSwap => f.write_str("uav-swap"),
            SystemKind::Tuav { .. } => f.write_str("tuav"),
            SystemKind::Ituav { n_anchors, .. } => write!(f, "ituav({n_anchors})"),
            SystemKind::MultiTuav { k, .. } => write!(f, "tuav-x{k}"),
            SystemKind::MultiItuav { k, n_anchors, .. } => write!(f, "ituav-x{k}({n_anchors})"),
        }
    }
}

/// Fully realized, validated world.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub area: Area,
    pub ues: Vec<Ue>,
    pub anchors: Vec<Anchor>,
    pub channel: ChannelParams,
    pub link: LinkBudget,
    pub tether: TetherParams,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.area.validate("area")?;
        self.channel.validate("channel")?;
        self.link.validate("link")?;
        self.tether.validate("tether")?;
        let mut ue_ids = std::collections::HashSet::new();
        for (i, ue) in self.ues.iter().enumerate() {
            if !self.area.contains(ue.pos) {
                return Err(Error::validation(format!("ue[{i}]"), "position outside area"));
            }
            if !ue_ids.insert(ue.id) {
                return Err(Error::validation(
                    format!("ue[{i}].id"),
                    format!("duplicate id {}", ue.id),
                ));
            }
        }
        let mut anchor_ids = std::collections::HashSet::new();
        for (i, anchor) in self.anchors.iter().enumerate() {
            if !self.area.contains(anchor.pos) {
                return Err(Error::validation(
                    format!("anchor[{i}]"),
                    "position outside area",
                ));
            }
            if !(anchor.height_m >= 0.0) {
                return Err(Error::validation(format!("anchor[{i}].height_m"), "must be >= 0"));
            }
            if !anchor_ids.insert(anchor.id) {
                return Err(Error::validation(
                    format!("anchor[{i}].id"),
                    format!("duplicate id {}", anchor.id),
                ));
            }
        }
        Ok(())
    }

    pub fn ue_positions(&self) -> Vec<Point2> {
        self.ues.iter().map(|u| u.pos).collect()
    }
}

/// Place `n` anchors uniformly at random in `area`, ids `0..n`.
///
/// Draws are sequential, so for a given generator state the first `k`
/// anchors of a pool of `n > k` equal the pool of size `k`.
pub fn sample_anchors(n: usize, area: Area, height_m: f64, rng: &mut SimRng) -> Result<Vec<Anchor>> {
    if n == 0 {
        return Err(Error::precondition("sample_anchors needs n >= 1"));
    }
    Ok((0..n)
        .map(|i| Anchor {
            id: i as u32,
            pos: area.sample_uniform(rng),
            height_m,
        })
        .collect())
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UsersConfig {
    pub count: usize,
    /// Target clustering level. 1 draws a uniform population.
    pub cov: f64,
}

impl Default for UsersConfig {
    fn default() -> Self {
        UsersConfig {
            count: DEFAULT_N_UES,
            cov: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnchorsConfig {
    pub count: usize,
    pub height_m: f64,
}

impl Default for AnchorsConfig {
    fn default() -> Self {
        AnchorsConfig {
            count: DEFAULT_N_ANCHORS,
            height_m: DEFAULT_ANCHOR_HEIGHT_M,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeRecord {
    pub id: u32,
    pub x_m: f64,
    pub y_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorRecord {
    pub id: u32,
    pub x_m: f64,
    pub y_m: f64,
    pub height_m: f64,
}

/// On-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(default)]
    pub area: Area,
    #[serde(default)]
    pub link: LinkBudget,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub tether: TetherParams,
    #[serde(default)]
    pub users: UsersConfig,
    #[serde(default)]
    pub anchors: AnchorsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ue: Option<Vec<UeRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<AnchorRecord>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            area: Area::default(),
            link: LinkBudget::default(),
            channel: ChannelParams::default(),
            tether: TetherParams::default(),
            users: UsersConfig::default(),
            anchors: AnchorsConfig::default(),
            ue: None,
            anchor: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.area.validate("area")?;
        self.link.validate("link")?;
        self.channel.validate("channel")?;
        self.tether.validate("tether")?;
        if self.ue.is_none() {
            at_least_one("users.count", self.users.count)?;
            if !(self.users.cov >= 1.0) || !self.users.cov.is_finite() {
                return Err(Error::validation("users.cov", "must be a finite value >= 1"));
            }
        }
        if self.anchor.is_none() {
            at_least_one("anchors.count", self.anchors.count)?;
            if !(self.anchors.height_m >= 0.0) {
                return Err(Error::validation("anchors.height_m", "must be >= 0"));
            }
        }
        Ok(())
    }

    /// Validate and materialize users and anchors. Listed entities are taken
    /// as-is; missing ones are sampled from independent streams of `seed`.
    pub fn realize(&self) -> Result<Scenario> {
        self.validate()?;
        let root = SeedPath::new(self.seed);
        let ues = match &self.ue {
            Some(list) => list
                .iter()
                .map(|r| Ue {
                    id: r.id,
                    pos: Point2::new(r.x_m, r.y_m),
                    cluster_id: r.cluster_id,
                })
                .collect(),
            None => pointprocess::sample_population(
                self.users.cov,
                self.users.count,
                self.area,
                &mut root.label("users").rng(),
            )?,
        };
        let anchors = match &self.anchor {
            Some(list) => list
                .iter()
                .map(|r| Anchor {
                    id: r.id,
                    pos: Point2::new(r.x_m, r.y_m),
                    height_m: r.height_m,
                })
                .collect(),
            None => sample_anchors(
                self.anchors.count,
                self.area,
                self.anchors.height_m,
                &mut root.label("anchors").rng(),
            )?,
        };
        let scenario = Scenario {
            area: self.area,
            ues,
            anchors,
            channel: self.channel,
            link: self.link,
            tether: self.tether,
            seed: self.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<&Scenario> for ScenarioConfig {
    fn from(s: &Scenario) -> Self {
        ScenarioConfig {
            seed: s.seed,
            area: s.area,
            link: s.link,
            channel: s.channel,
            tether: s.tether,
            users: UsersConfig {
                count: s.ues.len(),
                ..UsersConfig::default()
            },
            anchors: AnchorsConfig {
                count: s.anchors.len(),
                height_m: s
                    .anchors
                    .first()
                    .map_or(DEFAULT_ANCHOR_HEIGHT_M, |a| a.height_m),
            },
            ue: Some(
                s.ues
                    .iter()
                    .map(|u| UeRecord {
                        id: u.id,
                        x_m: u.pos.x,
                        y_m: u.pos.y,
                        cluster_id: u.cluster_id,
                    })
                    .collect(),
            ),
            anchor: Some(
                s.anchors
                    .iter()
                    .map(|a| AnchorRecord {
                        id: a.id,
                        x_m: a.pos.x,
                        y_m: a.pos.y,
                        height_m: a.height_m,
                    })
                    .collect(),
            ),
        }
    }
}

/// Read, validate and realize a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    ScenarioConfig::load(path)?.realize()
}

/// Write a realized scenario with explicit user and anchor lists.
pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, ScenarioConfig::from(scenario).to_toml_string())?;
    Ok(())
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, "must be finite"))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be > 0, got {v}")))
    }
}

fn at_least_one(field: &str, n: usize) -> Result<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(Error::validation(field, "must be >= 1"))
    }
}
