use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ituav::channel::{coverage_radius, optimal_altitude};
use ituav::experiments::{self, ExperimentConfig, Overrides, Preset};
use ituav::mission::{self, MissionParams, Mobility};
use ituav::placement::{self, MultiMode, Placement};
use ituav::pointprocess;
use ituav::scenario::{Area, Scenario, ScenarioConfig, SystemKind, UsersConfig};
use ituav::seeding::SeedPath;
use ituav::{Error, Result};

#[derive(Parser)]
#[command(name = "ituav", version, about = "Tethered and untethered aerial base station simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a user population and write it as CSV.
    Generate {
        #[arg(long, default_value_t = 1.0)]
        cov: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Side of the square area in meters.
        #[arg(long, default_value_t = 3000.0)]
        side_m: f64,
    },
    /// Print the coverage radius at an altitude and the optimal altitude.
    Channel {
        #[arg(long)]
        altitude: f64,
        #[command(flatten)]
        world: WorldArgs,
    },
    /// Place one or more UAVs on a scenario.
    Place {
        #[arg(long, value_enum)]
        system: PlaceSystem,
        /// Number of UAVs, placed greedily.
        #[arg(long, default_value_t = 1)]
        uavs: usize,
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a service mission and write its per-step trace.
    Mission {
        #[arg(long, value_enum)]
        system: MissionSystem,
        #[arg(long, default_value_t = 30.0)]
        battery_min: f64,
        #[arg(long, default_value_t = 10)]
        anchors: usize,
        #[arg(long, default_value_t = 1)]
        uavs: usize,
        #[arg(long, default_value_t = 100.0)]
        duration_min: f64,
        /// Cluster drift speed; users are static when absent.
        #[arg(long)]
        drift_mps: Option<f64>,
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Run a Monte-Carlo preset and write its result table.
    Experiment {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
}

/// Where the world comes from: a scenario file, or defaults plus a seed.
#[derive(clap::Args)]
struct WorldArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides the scenario file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// User clustering when no scenario file is given.
    #[arg(long, default_value_t = 1.0)]
    cov: f64,
}

impl WorldArgs {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.scenario {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig {
                users: UsersConfig {
                    cov: self.cov,
                    ..UsersConfig::default()
                },
                ..ScenarioConfig::default()
            },
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn realize(&self, anchors_needed: usize) -> Result<Scenario> {
        let mut cfg = self.config()?;
        if cfg.anchor.is_none() {
            cfg.anchors.count = cfg.anchors.count.max(anchors_needed);
        }
        cfg.realize()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlaceSystem {
    Uav,
    Tuav,
    Ituav,
}

#[derive(Clone, Copy, ValueEnum)]
enum MissionSystem {
    UavNoSwap,
    UavSwap,
    Tuav,
    Ituav,
}

#[derive(Serialize)]
struct UeRow {
    ue_id: u32,
    x_m: f64,
    y_m: f64,
    cluster_id: Option<u32>,
}

#[derive(Serialize)]
struct PlacementRow<'a> {
    system: &'a str,
    uav_idx: usize,
    x_m: f64,
    y_m: f64,
    z_m: f64,
    anchor_id: Option<u32>,
    covered_count: usize,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn generate(cov: f64, n: usize, seed: u64, side_m: f64, out: &Path) -> Result<()> {
    let area = Area::square(side_m)?;
    if n == 0 {
        return Err(Error::validation("n", "must be >= 1"));
    }
    if !(cov >= 1.0) {
        return Err(Error::validation("cov", "must be >= 1"));
    }
    let mut rng = SeedPath::new(seed).label("users").rng();
    let ues = pointprocess::sample_population(cov, n, area, &mut rng)?;
    write_csv(
        out,
        ues.iter().map(|u| UeRow {
            ue_id: u.id,
            x_m: u.pos.x,
            y_m: u.pos.y,
            cluster_id: u.cluster_id,
        }),
    )
}

fn channel(altitude: f64, world: &WorldArgs) -> Result<()> {
    if !(altitude > 0.0) || !altitude.is_finite() {
        return Err(Error::validation("altitude", "must be > 0"));
    }
    let cfg = world.config()?;
    cfg.validate()?;
    let at = coverage_radius(altitude, &cfg.link, &cfg.channel);
    let best = optimal_altitude(&cfg.link, &cfg.channel);
    let mut out = io::stdout().lock();
    writeln!(out, "kind,altitude_m,radius_m")?;
    writeln!(out, "requested,{},{}", at.altitude, at.radius)?;
    writeln!(out, "optimal,{},{}", best.altitude, best.radius)?;
    Ok(())
}

fn place(system: PlaceSystem, uavs: usize, world: &WorldArgs, out: &Path) -> Result<()> {
    let s = world.realize(uavs)?;
    let (link, ch, tether) = (&s.link, &s.channel, s.tether);
    let (name, placements): (&str, Vec<Placement>) = match (system, uavs) {
        (_, 0) => return Err(Error::validation("uavs", "must be >= 1")),
        (PlaceSystem::Uav, 1) => ("uav", vec![placement::place_free(&s.ues, link, ch)?]),
        (PlaceSystem::Uav, k) => ("uav", placement::place_multi(&s.ues, k, MultiMode::Free, link, ch)?),
        (PlaceSystem::Tuav, k) => (
            "tuav",
            placement::place_multi(&s.ues, k, MultiMode::Tuav { anchors: &s.anchors, tether }, link, ch)?,
        ),
        (PlaceSystem::Ituav, k) => (
            "ituav",
            placement::place_multi(&s.ues, k, MultiMode::Ituav { anchors: &s.anchors, tether }, link, ch)?,
        ),
    };
    write_csv(
        out,
        placements.iter().enumerate().map(|(i, p)| PlacementRow {
            system: name,
            uav_idx: i,
            x_m: p.pos.x,
            y_m: p.pos.y,
            z_m: p.pos.z,
            anchor_id: p.anchor_id,
            covered_count: p.covered_count(),
        }),
    )?;
    let total: usize = placements.iter().map(|p| p.covered_count()).sum();
    println!("{name}: {total} of {} users covered", s.ues.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_mission_cmd(
    system: MissionSystem,
    battery_min: f64,
    anchors: usize,
    uavs: usize,
    duration_min: f64,
    drift_mps: Option<f64>,
    world: &WorldArgs,
    trace_path: &Path,
) -> Result<()> {
    let cfg = world.config()?;
    let tether = cfg.tether;
    let kind = match (system, uavs) {
        (MissionSystem::UavNoSwap, 1) => SystemKind::UavNoSwap { battery_min },
        (MissionSystem::UavSwap, 1) => SystemKind::UavSwap,
        (MissionSystem::Tuav, 1) => SystemKind::Tuav { tether },
        (MissionSystem::Tuav, k) => SystemKind::MultiTuav { k, tether },
        (MissionSystem::Ituav, 1) => SystemKind::Ituav { tether, n_anchors: anchors },
        (MissionSystem::Ituav, k) => SystemKind::MultiItuav { k, tether, n_anchors: anchors },
        (_, _) => return Err(Error::validation("uavs", "only tethered systems take several UAVs")),
    };
    kind.validate()?;
    let s = world.realize(kind.anchors_used())?;
    let mp = MissionParams {
        duration_min,
        mobility: drift_mps.map(|v| Mobility { drift_speed_mps: v }),
        ..MissionParams::default()
    };
    let mut rng = SeedPath::new(s.seed).label("mission").rng();
    let trace = mission::run_mission(&s, kind, &mp, &mut rng)?;
    mission::write_trace_file(&trace, trace_path)?;
    println!(
        "{kind}: {:.3} users per minute, service uptime {:.3}",
        trace.summary.avg_covered_per_min, trace.summary.service_uptime_fraction
    );
    Ok(())
}

fn experiment(preset: &str, runs: Option<usize>, seed: u64, out: &Path, overrides: Option<&Path>) -> Result<()> {
    let preset: Preset = preset.parse()?;
    let mut cfg = ExperimentConfig::new(preset, seed);
    if let Some(path) = overrides {
        cfg = cfg.with_overrides(Overrides::load(path)?);
    }
    if let Some(n) = runs {
        cfg.n_runs = n;
    }
    let table = experiments::run_experiment(&cfg)?;
    experiments::write_results_file(&table, out)?;
    for r in &table.rows {
        println!("{} {} @ {}: {:.3} +/- {:.3}", r.preset, r.system, r.sweep_value, r.mean, r.std_error);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { cov, n, seed, out, side_m } => generate(cov, n, seed, side_m, &out),
        Command::Channel { altitude, world } => channel(altitude, &world),
        Command::Place { system, uavs, world, out } => place(system, uavs, &world, &out),
        Command::Mission {
            system,
            battery_min,
            anchors,
            uavs,
            duration_min,
            drift_mps,
            world,
            trace,
        } => run_mission_cmd(system, battery_min, anchors, uavs, duration_min, drift_mps, &world, &trace),
        Command::Experiment {
            preset,
            runs,
            seed,
            out,
            overrides,
        } => experiment(&preset, runs, seed, &out, overrides.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
