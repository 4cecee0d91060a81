//! Monte-Carlo experiment presets and result tables.
//!
//! Every replicate draws a fresh world (users and anchors) from a seed
//! derived from `(master seed, preset, system, sweep index, replicate)`, so
//! jobs are independent and can run in any order. Results are reduced in a
//! fixed order, which makes parallel and sequential runs identical.

use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mission::{run_mission, MissionParams};
use crate::placement::{self, MultiMode};
use crate::scenario::{
    Area, AnchorsConfig, ChannelParams, LinkBudget, Scenario, ScenarioConfig, SystemKind,
    TetherParams, UsersConfig, DEFAULT_ANCHOR_HEIGHT_M, DEFAULT_N_UES,
};
use crate::seeding::SeedPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Fig3,
    Fig4,
    Fig5,
    AnchorRatio,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig3, Preset::Fig4, Preset::Fig5, Preset::AnchorRatio];

    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::AnchorRatio => "anchor_ratio",
        }
    }

    pub fn default_runs(&self) -> usize {
        match self {
            Preset::Fig4 => 100,
            _ => 200,
        }
    }

    /// CoV values, except for `anchor_ratio` which sweeps anchor counts.
    pub fn default_sweep(&self) -> Vec<f64> {
        match self {
            Preset::Fig3 | Preset::Fig5 => vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            Preset::Fig4 => vec![3.0],
            Preset::AnchorRatio => vec![3.0, 5.0, 10.0],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::validation("preset", format!("unknown preset `{s}`")))
    }
}

/// Scenario and mission settings applied to every replicate. Loaded from a
/// TOML file whose sections mirror the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    pub area: Area,
    pub link: LinkBudget,
    pub channel: ChannelParams,
    pub tether: TetherParams,
    pub n_ues: usize,
    pub anchor_height_m: f64,
    /// CoV applied to `anchor_ratio` worlds.
    pub ratio_cov: f64,
    pub mission: MissionParams,
    /// Replaces the preset's sweep when present.
    pub sweep: Option<Vec<f64>>,
}

impl Default for Overrides {
    fn default() -> Self {
        Overrides {
            area: Area::default(),
            link: LinkBudget::default(),
            channel: ChannelParams::default(),
            tether: TetherParams::default(),
            n_ues: DEFAULT_N_UES,
            anchor_height_m: DEFAULT_ANCHOR_HEIGHT_M,
            ratio_cov: 3.0,
            mission: MissionParams::default(),
            sweep: None,
        }
    }
}

impl Overrides {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml_str(&std::fs::read_to_string(path)?, path)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub n_runs: usize,
    pub master_seed: u64,
    pub sweep: Vec<f64>,
    pub overrides: Overrides,
}

impl ExperimentConfig {
    pub fn new(preset: Preset, master_seed: u64) -> Self {
        ExperimentConfig {
            preset,
            n_runs: preset.default_runs(),
            master_seed,
            sweep: preset.default_sweep(),
            overrides: Overrides::default(),
        }
    }

    pub fn with_overrides(mut self, overrides: Overrides) -> Self {
        if let Some(sweep) = &overrides.sweep {
            self.sweep = sweep.clone();
        }
        self.overrides = overrides;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::validation("n_runs", "must be >= 1"));
        }
        if self.sweep.is_empty() {
            return Err(Error::validation("sweep", "must not be empty"));
        }
        for &v in &self.sweep {
            let ok = match self.preset {
                Preset::AnchorRatio => v >= 1.0 && v.fract() == 0.0,
                _ => v.is_finite() && v >= 1.0,
            };
            if !ok {
                return Err(Error::validation("sweep", format!("invalid sweep point {v}")));
            }
        }
        if self.overrides.n_ues == 0 {
            return Err(Error::validation("n_ues", "must be >= 1"));
        }
        if !(self.overrides.ratio_cov >= 1.0) {
            return Err(Error::validation("ratio_cov", "must be >= 1"));
        }
        self.overrides.mission.validate()
    }

    /// Systems evaluated at sweep point `value`, in output order.
    pub fn systems(&self, value: f64) -> Vec<SystemKind> {
        let tether = self.overrides.tether;
        match self.preset {
            Preset::Fig3 => vec![
                SystemKind::UavSwap,
                SystemKind::Tuav { tether },
                SystemKind::Ituav { tether, n_anchors: 10 },
            ],
            Preset::Fig4 => {
                let mut v = vec![
                    SystemKind::UavNoSwap { battery_min: 30.0 },
                    SystemKind::UavNoSwap { battery_min: 60.0 },
                    SystemKind::Tuav { tether },
                ];
                v.extend((3..=10).map(|n_anchors| SystemKind::Ituav { tether, n_anchors }));
                v.push(SystemKind::UavSwap);
                v
            }
            Preset::Fig5 => vec![
                SystemKind::MultiTuav { k: 2, tether },
                SystemKind::MultiTuav { k: 3, tether },
                SystemKind::MultiItuav { k: 1, tether, n_anchors: 3 },
                SystemKind::MultiItuav { k: 2, tether, n_anchors: 4 },
            ],
            Preset::AnchorRatio => vec![
                SystemKind::Ituav { tether, n_anchors: value as usize },
                SystemKind::UavSwap,
            ],
        }
    }

    fn cov_at(&self, value: f64) -> f64 {
        match self.preset {
            Preset::AnchorRatio => self.overrides.ratio_cov,
            _ => value,
        }
    }

    /// The world of one replicate.
    pub fn replicate_scenario(&self, system: &SystemKind, sweep_idx: usize, rep: usize) -> Result<Scenario> {
        let value = self.sweep[sweep_idx];
        let seed = replicate_seed(self.master_seed, self.preset, system, sweep_idx, rep);
        let o = &self.overrides;
        ScenarioConfig {
            seed,
            area: o.area,
            link: o.link,
            channel: o.channel,
            tether: o.tether,
            users: UsersConfig {
                count: o.n_ues,
                cov: self.cov_at(value),
            },
            anchors: AnchorsConfig {
                count: system.anchors_used().max(1),
                height_m: o.anchor_height_m,
            },
            ue: None,
            anchor: None,
        }
        .realize()
    }
}

pub fn replicate_seed(master: u64, preset: Preset, system: &SystemKind, sweep_idx: usize, rep: usize) -> u64 {
    SeedPath::new(master)
        .label(preset.as_str())
        .label(&system.to_string())
        .index(sweep_idx as u64)
        .index(rep as u64)
        .seed()
}

/// Users covered by a static deployment of `system` in `scenario`.
pub fn snapshot_coverage(scenario: &Scenario, system: &SystemKind) -> Result<usize> {
    system.validate()?;
    let needed = system.anchors_used();
    if needed > scenario.anchors.len() {
        return Err(Error::precondition(format!(
            "{system} needs {needed} anchors, scenario has {}",
            scenario.anchors.len()
        )));
    }
    let (ues, link, ch) = (&scenario.ues, &scenario.link, &scenario.channel);
    let pool = &scenario.anchors[..needed];
    Ok(match *system {
        SystemKind::UavNoSwap { .. } | SystemKind::UavSwap => placement::place_free(ues, link, ch)?.covered_count(),
        SystemKind::Tuav { tether } => placement::place_tethered(ues, &pool[0], tether, link, ch)?.covered_count(),
        SystemKind::Ituav { tether, .. } => placement::place_itethered(ues, pool, tether, link, ch)?.covered_count(),
        SystemKind::MultiTuav { k, tether } => placement::place_multi(ues, k, MultiMode::Tuav { anchors: pool, tether }, link, ch)?
            .iter()
            .map(|p| p.covered_count())
            .sum(),
        SystemKind::MultiItuav { k, tether, .. } => {
            placement::place_multi(ues, k, MultiMode::Ituav { anchors: pool, tether }, link, ch)?
                .iter()
                .map(|p| p.covered_count())
                .sum()
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub preset: String,
    pub system: String,
    pub sweep_value: f64,
    pub mean: f64,
    pub std_error: f64,
    pub n_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, system: &str, sweep_value: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.system == system && r.sweep_value == sweep_value)
    }

    pub fn series(&self, system: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.system == system).collect()
    }
}

/// Mean and standard error of the mean (sample standard deviation over
/// `sqrt(n)`; zero for a single sample).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ratio of two independent means with its first-order standard error.
pub fn ratio_with_se(num: (f64, f64), den: (f64, f64)) -> (f64, f64) {
    let r = num.0 / den.0;
    let rel = (num.1 / num.0).powi(2) + (den.1 / den.0).powi(2);
    (r, r.abs() * rel.sqrt())
}

/// Label of the ratio rows of the `anchor_ratio` preset.
pub const RATIO_SYSTEM: &str = "ituav/uav-swap";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Parallel,
    Sequential,
}

fn replicate_metric(cfg: &ExperimentConfig, system: &SystemKind, sweep_idx: usize, rep: usize) -> Result<f64> {
    let scenario = cfg.replicate_scenario(system, sweep_idx, rep)?;
    match cfg.preset {
        Preset::Fig4 => {
            let mut rng = SeedPath::new(scenario.seed).label("mission").rng();
            let trace = run_mission(&scenario, *system, &cfg.overrides.mission, &mut rng)?;
            Ok(trace.summary.avg_covered_per_min)
        }
        _ => Ok(snapshot_coverage(&scenario, system)? as f64),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    run_experiment_with(cfg, Execution::Parallel)
}

pub fn run_experiment_with(cfg: &ExperimentConfig, execution: Execution) -> Result<ResultTable> {
    cfg.validate()?;
    // Groups in output order: sweep points inside systems.
    let mut groups: Vec<(SystemKind, usize)> = Vec::new();
    let mut order: Vec<String> = Vec::new();
    for (i, &v) in cfg.sweep.iter().enumerate() {
        for s in cfg.systems(v) {
            let name = s.to_string();
            if !order.contains(&name) {
                order.push(name);
            }
            groups.push((s, i));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..cfg.n_runs).map(move |r| (g, r)))
        .collect();
    let eval = |&(g, r): &(usize, usize)| {
        let (system, i) = &groups[g];
        replicate_metric(cfg, system, *i, r)
    };
    let values: Vec<f64> = match execution {
        Execution::Parallel => jobs.par_iter().map(eval).collect::<Result<_>>()?,
        Execution::Sequential => jobs.iter().map(eval).collect::<Result<_>>()?,
    };

    let mut rows: Vec<(usize, ResultRow)> = Vec::new();
    let mut stats: Vec<(f64, f64)> = Vec::with_capacity(groups.len());
    for (g, (system, i)) in groups.iter().enumerate() {
        let chunk = &values[g * cfg.n_runs..(g + 1) * cfg.n_runs];
        let (mean, se) = mean_and_se(chunk);
        stats.push((mean, se));
        let name = system.to_string();
        let rank = order.iter().position(|n| *n == name).expect("listed");
        rows.push((
            rank,
            ResultRow {
                preset: cfg.preset.to_string(),
                system: name,
                sweep_value: cfg.sweep[*i],
                mean,
                std_error: se,
                n_runs: cfg.n_runs,
            },
        ));
    }
    if cfg.preset == Preset::AnchorRatio {
        // Each sweep point holds (ituav(k), uav-swap) in that order.
        for (i, &v) in cfg.sweep.iter().enumerate() {
            let (r, se) = ratio_with_se(stats[2 * i], stats[2 * i + 1]);
            rows.push((
                usize::MAX,
                ResultRow {
                    preset: cfg.preset.to_string(),
                    system: RATIO_SYSTEM.to_string(),
                    sweep_value: v,
                    mean: r,
                    std_error: se,
                    n_runs: cfg.n_runs,
                },
            ));
        }
        // The ituav(k) rows are one series per k; list them under one rank.
        for (rank, row) in rows.iter_mut() {
            if row.system.starts_with("ituav(") {
                *rank = 0;
            }
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.sweep_value.total_cmp(&b.1.sweep_value)));
    Ok(ResultTable {
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    preset: String,
    system: String,
    sweep_value: f64,
    mean: f64,
    std_error: f64,
    n_runs: usize,
}

pub fn write_results<W: io::Write>(table: &ResultTable, out: W) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::precondition("refusing to write an empty result table"));
    }
    let mut w = csv::Writer::from_writer(out);
    for r in &table.rows {
        w.serialize(CsvRow {
            preset: r.preset.clone(),
            system: r.system.clone(),
            sweep_value: r.sweep_value,
            mean: r.mean,
            std_error: r.std_error,
            n_runs: r.n_runs,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_file(table: &ResultTable, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_results(table, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_results<R: io::Read>(input: R) -> Result<ResultTable> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r
        .deserialize::<CsvRow>()
        .map(|row| {
            row.map(|c| ResultRow {
                preset: c.preset,
                system: c.system,
                sweep_value: c.sweep_value,
                mean: c.mean,
                std_error: c.std_error,
                n_runs: c.n_runs,
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(Error::precondition("result file has no rows"));
    }
    Ok(ResultTable { rows })
}

pub fn read_results_file(path: impl AsRef<Path>) -> Result<ResultTable> {
    read_results(std::fs::File::open(path)?)
}
