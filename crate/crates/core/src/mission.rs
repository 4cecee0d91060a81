//! Time-stepped service missions.
//!
//! A mission runs one deployment discipline over a fixed duration and
//! records, per step, every UAV's position, battery and activity together
//! with the number of users it serves. UAVs only serve while `Serving`;
//! transit, tether handling and grounded time count as zero coverage.
//!
//! Battery accounting is linear in flight time: one minute of untethered
//! flight costs one battery-minute, tethered service recharges at
//! `recharge_rate` battery-minutes per minute, and tether attachment holds
//! the charge constant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{is_covered, UavPosition};
use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::placement::{self, HoverRegion, MultiMode, Placement};
use crate::scenario::{Anchor, Area, Scenario, SystemKind, TetherParams, Ue};
use crate::seeding::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mobility {
    pub drift_speed_mps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionParams {
    pub duration_min: f64,
    pub dt_s: f64,
    pub uav_speed_mps: f64,
    pub attach_delay_s: f64,
    pub detach_delay_s: f64,
    pub battery_capacity_min: f64,
    /// Battery-minutes gained per tethered minute.
    pub recharge_rate: f64,
    /// Relative coverage gain required before an iTUAV changes anchor.
    pub reattach_gain_threshold: f64,
    pub reeval_interval_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mobility: Option<Mobility>,
}

impl Default for MissionParams {
    fn default() -> Self {
        MissionParams {
            duration_min: 100.0,
            dt_s: 10.0,
            uav_speed_mps: 15.0,
            attach_delay_s: 30.0,
            detach_delay_s: 10.0,
            battery_capacity_min: 30.0,
            recharge_rate: 2.0,
            reattach_gain_threshold: 0.10,
            reeval_interval_s: 60.0,
            mobility: None,
        }
    }
}

impl MissionParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be > 0, got {v}")))
            }
        };
        let non_negative = |field: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be >= 0, got {v}")))
            }
        };
        positive("mission.duration_min", self.duration_min)?;
        positive("mission.dt_s", self.dt_s)?;
        positive("mission.battery_capacity_min", self.battery_capacity_min)?;
        positive("mission.reeval_interval_s", self.reeval_interval_s)?;
        non_negative("mission.uav_speed_mps", self.uav_speed_mps)?;
        non_negative("mission.attach_delay_s", self.attach_delay_s)?;
        non_negative("mission.detach_delay_s", self.detach_delay_s)?;
        non_negative("mission.recharge_rate", self.recharge_rate)?;
        if !(0.0..1.0).contains(&self.reattach_gain_threshold) {
            return Err(Error::validation(
                "mission.reattach_gain_threshold",
                "must lie in [0, 1)",
            ));
        }
        if let Some(m) = self.mobility {
            non_negative("mission.mobility.drift_speed_mps", m.drift_speed_mps)?;
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.duration_min * 60.0 / self.dt_s).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activity {
    Serving,
    Traveling,
    Attaching,
    Detaching,
    Grounded,
}

impl Activity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Activity::Serving => "serving",
            Activity::Traveling => "traveling",
            Activity::Attaching => "attaching",
            Activity::Detaching => "detaching",
            Activity::Grounded => "grounded",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "serving" => Activity::Serving,
            "traveling" => Activity::Traveling,
            "attaching" => Activity::Attaching,
            "detaching" => Activity::Detaching,
            "grounded" => Activity::Grounded,
            other => return Err(Error::validation("activity", format!("unknown `{other}`"))),
        })
    }
}

/// One UAV during one step. `pos` and `activity` describe the step itself,
/// `battery_min` is the charge at its end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavState {
    pub pos: UavPosition,
    pub battery_min: f64,
    pub activity: Activity,
    pub attached_anchor: Option<u32>,
    /// Users served by this UAV and by no lower-indexed UAV.
    pub covered: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub t_s: f64,
    pub uavs: Vec<UavState>,
    pub covered_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionSummary {
    pub avg_covered_per_min: f64,
    pub service_uptime_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionTrace {
    pub dt_s: f64,
    pub duration_min: f64,
    pub steps: Vec<TraceStep>,
    pub summary: MissionSummary,
}

/// Time-weighted mean coverage and the fraction of steps with any coverage.
pub fn summarize(steps: &[TraceStep], dt_s: f64, duration_min: f64) -> Result<MissionSummary> {
    if steps.is_empty() {
        return Err(Error::precondition("cannot summarize an empty trace"));
    }
    let served: f64 = steps.iter().map(|s| s.covered_count as f64 * dt_s).sum();
    let up = steps.iter().filter(|s| s.covered_count > 0).count();
    Ok(MissionSummary {
        avg_covered_per_min: served / (duration_min * 60.0),
        service_uptime_fraction: up as f64 / steps.len() as f64,
    })
}

// ---------------------------------------------------------------------------
// User mobility

/// Rigid random-walk drift of user clusters. Users without a cluster id
/// move on their own.
#[derive(Debug, Clone)]
pub struct ClusterDrift {
    centers: BTreeMap<u32, Point2>,
    area: Area,
}

fn cluster_key(ue: &Ue) -> u32 {
    // Unclustered users get their own keys above every cluster id.
    ue.cluster_id.unwrap_or(u32::MAX - ue.id)
}

fn reflect(v: f64, hi: f64) -> f64 {
    let period = 2.0 * hi;
    let m = v.rem_euclid(period);
    if m > hi {
        period - m
    } else {
        m
    }
}

fn reflect_into(p: Point2, area: &Area) -> Point2 {
    Point2::new(reflect(p.x, area.width_m), reflect(p.y, area.height_m))
}

impl ClusterDrift {
    /// Cluster centers start at the mean position of their members.
    pub fn new(ues: &[Ue], area: Area) -> Self {
        let mut sums: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
        for ue in ues {
            let e = sums.entry(cluster_key(ue)).or_default();
            e.0 += ue.pos.x;
            e.1 += ue.pos.y;
            e.2 += 1;
        }
        let centers = sums
            .into_iter()
            .map(|(k, (sx, sy, n))| (k, Point2::new(sx / n as f64, sy / n as f64)))
            .collect();
        ClusterDrift { centers, area }
    }

    pub fn centers(&self) -> impl Iterator<Item = (u32, Point2)> + '_ {
        self.centers.iter().map(|(k, p)| (*k, *p))
    }

    /// Move every cluster `speed * dt` in a random direction, reflecting at
    /// the area boundary, and carry its members along.
    pub fn step(&mut self, ues: &mut [Ue], mobility: Mobility, dt_s: f64, rng: &mut SimRng) {
        let step = mobility.drift_speed_mps * dt_s;
        let mut deltas: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
        for (key, center) in self.centers.iter_mut() {
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            let moved = reflect_into(center.polar(step, angle), &self.area);
            deltas.insert(*key, (moved.x - center.x, moved.y - center.y));
            *center = moved;
        }
        for ue in ues.iter_mut() {
            if let Some(&(dx, dy)) = deltas.get(&cluster_key(ue)) {
                ue.pos = reflect_into(Point2::new(ue.pos.x + dx, ue.pos.y + dy), &self.area);
            }
        }
    }
}

/// Advance user positions by one mobility step.
pub fn step_mobility(
    drift: &mut ClusterDrift,
    ues: &mut [Ue],
    mobility: Mobility,
    dt_s: f64,
    rng: &mut SimRng,
) {
    drift.step(ues, mobility, dt_s, rng);
}

// ---------------------------------------------------------------------------
// Simulation

#[derive(Debug, Clone, Copy, PartialEq)]
enum Power {
    /// Free flight; a depleted battery grounds the UAV unless `swap`.
    Battery { swap: bool },
    /// Permanently tethered to one anchor.
    Tethered,
    /// Moves between anchors on battery, serves while tethered.
    Intermittent,
}

#[derive(Debug, Clone, Copy)]
struct Leg {
    /// Anchor to attach to on arrival.
    anchor: Option<u32>,
    /// Where to serve once the leg is done.
    serve_at: UavPosition,
    /// Where the flying part of the leg ends.
    arrive_at: UavPosition,
}

#[derive(Debug, Clone)]
struct Agent {
    power: Power,
    pos: UavPosition,
    battery: f64,
    activity: Activity,
    anchor: Option<u32>,
    /// Seconds left in the current attach or detach operation.
    timer_s: f64,
    leg: Option<Leg>,
    /// Serving position the UAV is drifting towards.
    serve_target: UavPosition,
}

impl Agent {
    fn serving(power: Power, pos: UavPosition, anchor: Option<u32>, battery: f64) -> Self {
        Agent {
            power,
            pos,
            battery,
            activity: Activity::Serving,
            anchor,
            timer_s: 0.0,
            leg: None,
            serve_target: pos,
        }
    }

    fn traveling(power: Power, from: UavPosition, leg: Leg, battery: f64) -> Self {
        Agent {
            power,
            pos: from,
            battery,
            activity: Activity::Traveling,
            anchor: None,
            timer_s: 0.0,
            leg: Some(leg),
            serve_target: leg.serve_at,
        }
    }

    fn attaching(power: Power, at: UavPosition, leg: Leg, battery: f64, delay_s: f64) -> Self {
        Agent {
            power,
            pos: at,
            battery,
            activity: Activity::Attaching,
            anchor: leg.anchor,
            timer_s: delay_s,
            leg: Some(leg),
            serve_target: leg.serve_at,
        }
    }

    fn is_tethered(&self) -> bool {
        self.anchor.is_some() && matches!(self.activity, Activity::Serving | Activity::Attaching)
    }

    fn fly_towards(&mut self, target: UavPosition, max_m: f64) -> bool {
        let d = self.pos.dist(&target);
        if d <= max_m {
            self.pos = target;
            true
        } else {
            let s = max_m / d;
            self.pos = UavPosition::new(
                self.pos.x + (target.x - self.pos.x) * s,
                self.pos.y + (target.y - self.pos.y) * s,
                self.pos.z + (target.z - self.pos.z) * s,
            );
            false
        }
    }

    /// Drain untethered flight time; returns true if the battery ran out.
    fn drain(&mut self, minutes: f64) -> bool {
        self.battery = (self.battery - minutes).max(0.0);
        self.battery <= 0.0
    }

    /// Advance one step after coverage has been accounted for it.
    fn advance(&mut self, mp: &MissionParams) {
        let dt_min = mp.dt_s / 60.0;
        match self.activity {
            Activity::Grounded => {}
            Activity::Serving => {
                if self.is_tethered() {
                    self.battery = (self.battery + mp.recharge_rate * dt_min).min(mp.battery_capacity_min);
                    self.fly_towards(self.serve_target, mp.uav_speed_mps * mp.dt_s);
                } else {
                    self.fly_towards(self.serve_target, mp.uav_speed_mps * mp.dt_s);
                    if self.drain(dt_min) {
                        match self.power {
                            Power::Battery { swap: true } => self.battery = mp.battery_capacity_min,
                            _ => self.activity = Activity::Grounded,
                        }
                    }
                }
            }
            Activity::Traveling => {
                let leg = self.leg.expect("traveling UAV has a leg");
                let arrived = self.fly_towards(leg.arrive_at, mp.uav_speed_mps * mp.dt_s);
                let empty = self.drain(dt_min);
                if empty && matches!(self.power, Power::Battery { swap: true }) {
                    self.battery = mp.battery_capacity_min;
                } else if empty {
                    self.activity = Activity::Grounded;
                    self.leg = None;
                    return;
                }
                if arrived {
                    match leg.anchor {
                        Some(id) => {
                            self.activity = Activity::Attaching;
                            self.anchor = Some(id);
                            self.timer_s = mp.attach_delay_s;
                            if self.timer_s <= 0.0 {
                                self.finish_attach();
                            }
                        }
                        None => {
                            self.activity = Activity::Serving;
                            self.serve_target = leg.serve_at;
                            self.leg = None;
                        }
                    }
                }
            }
            Activity::Attaching => {
                self.timer_s -= mp.dt_s;
                if self.timer_s <= 1e-9 {
                    self.finish_attach();
                }
            }
            Activity::Detaching => {
                self.timer_s -= mp.dt_s;
                if self.drain(dt_min) {
                    self.activity = Activity::Grounded;
                    self.leg = None;
                    return;
                }
                if self.timer_s <= 1e-9 {
                    self.activity = Activity::Traveling;
                }
            }
        }
    }

    fn finish_attach(&mut self) {
        let leg = self.leg.take().expect("attaching UAV has a leg");
        self.activity = Activity::Serving;
        self.pos = leg.serve_at;
        self.serve_target = leg.serve_at;
    }

    /// Leave the current anchor for `leg`.
    fn relocate(&mut self, leg: Leg, mp: &MissionParams) {
        self.anchor = None;
        self.leg = Some(leg);
        self.serve_target = leg.serve_at;
        self.timer_s = mp.detach_delay_s;
        self.activity = if mp.detach_delay_s > 0.0 {
            Activity::Detaching
        } else {
            Activity::Traveling
        };
    }
}

fn anchor_top(anchor: &Anchor) -> UavPosition {
    UavPosition::at(anchor.pos, anchor.height_m)
}

fn ground_start(area: &Area) -> UavPosition {
    UavPosition::at(area.center(), 0.0)
}

/// Anchor nearest to the area center, ties to the lower id.
fn depot_anchor<'a>(anchors: &'a [Anchor], area: &Area) -> &'a Anchor {
    let c = area.center();
    anchors
        .iter()
        .min_by(|a, b| a.pos.dist2(c).total_cmp(&b.pos.dist2(c)).then(a.id.cmp(&b.id)))
        .expect("non-empty anchor pool")
}

fn leg_to_anchor(anchor: &Anchor, serve_at: UavPosition) -> Leg {
    Leg {
        anchor: Some(anchor.id),
        serve_at,
        arrive_at: anchor_top(anchor),
    }
}

/// iTUAV that starts parked at `depot` and heads for `placement`.
fn intermittent_start(depot: &Anchor, target: &Anchor, placement: &Placement, mp: &MissionParams) -> Agent {
    let leg = leg_to_anchor(target, placement.pos);
    let start = anchor_top(depot);
    if depot.id == target.id {
        let mut agent = Agent::attaching(Power::Intermittent, start, leg, mp.battery_capacity_min, mp.attach_delay_s);
        if mp.attach_delay_s <= 0.0 {
            agent.finish_attach();
        }
        agent
    } else {
        Agent::traveling(Power::Intermittent, start, leg, mp.battery_capacity_min)
    }
}

struct Sim<'a> {
    scenario: &'a Scenario,
    system: SystemKind,
    mp: &'a MissionParams,
    ues: Vec<Ue>,
    /// Anchors available to the discipline.
    pool: Vec<Anchor>,
    agents: Vec<Agent>,
}

impl<'a> Sim<'a> {
    fn tether(&self) -> TetherParams {
        match self.system {
            SystemKind::Tuav { tether }
            | SystemKind::Ituav { tether, .. }
            | SystemKind::MultiTuav { tether, .. }
            | SystemKind::MultiItuav { tether, .. } => tether,
            _ => self.scenario.tether,
        }
    }

    fn anchor(&self, id: u32) -> &Anchor {
        self.pool
            .iter()
            .find(|a| a.id == id)
            .expect("anchor ids come from the pool")
    }

    fn init(&mut self) -> Result<()> {
        let s = self.scenario;
        let mp = self.mp;
        let (link, channel) = (&s.link, &s.channel);
        let tether = self.tether();
        self.agents = match self.system {
            SystemKind::UavNoSwap { battery_min } => {
                let p = placement::place_free(&self.ues, link, channel)?;
                let leg = Leg { anchor: None, serve_at: p.pos, arrive_at: p.pos };
                vec![Agent::traveling(Power::Battery { swap: false }, ground_start(&s.area), leg, battery_min)]
            }
            SystemKind::UavSwap => {
                let p = placement::place_free(&self.ues, link, channel)?;
                let leg = Leg { anchor: None, serve_at: p.pos, arrive_at: p.pos };
                vec![Agent::traveling(Power::Battery { swap: true }, ground_start(&s.area), leg, mp.battery_capacity_min)]
            }
            SystemKind::Tuav { .. } => {
                let p = placement::place_tethered(&self.ues, &self.pool[0], tether, link, channel)?;
                vec![Agent::serving(Power::Tethered, p.pos, p.anchor_id, mp.battery_capacity_min)]
            }
            SystemKind::MultiTuav { k, .. } => {
                let placements = placement::place_multi(
                    &self.ues,
                    k,
                    MultiMode::Tuav { anchors: &self.pool, tether },
                    link,
                    channel,
                )?;
                placements
                    .iter()
                    .map(|p| Agent::serving(Power::Tethered, p.pos, p.anchor_id, mp.battery_capacity_min))
                    .collect()
            }
            SystemKind::Ituav { .. } => {
                let p = placement::place_itethered(&self.ues, &self.pool, tether, link, channel)?;
                let target = *self.anchor(p.anchor_id.expect("tethered placement"));
                let depot = depot_anchor(&self.pool, &s.area);
                vec![intermittent_start(depot, &target, &p, mp)]
            }
            SystemKind::MultiItuav { k, .. } => {
                let placements = placement::place_multi(
                    &self.ues,
                    k,
                    MultiMode::Ituav { anchors: &self.pool, tether },
                    link,
                    channel,
                )?;
                let depot = depot_anchor(&self.pool, &s.area);
                placements
                    .iter()
                    .map(|p| {
                        let target = self.anchor(p.anchor_id.expect("tethered placement"));
                        intermittent_start(depot, target, p, mp)
                    })
                    .collect()
            }
        };
        Ok(())
    }

    /// Re-run placement on the current users. Free and tethered UAVs drift to
    /// their new optimum while serving; iTUAVs change anchor only for a
    /// relative gain above the hysteresis threshold.
    fn reevaluate(&mut self) {
        let s = self.scenario;
        let (link, channel) = (&s.link, &s.channel);
        let tether = self.tether();
        let threshold = self.mp.reattach_gain_threshold;
        let mut remaining = self.ues.clone();
        let claimed: BTreeSet<u32> = self
            .agents
            .iter()
            .filter_map(|a| a.anchor.or(a.leg.and_then(|l| l.anchor)))
            .collect();
        let mut claimed = claimed;
        for i in 0..self.agents.len() {
            if remaining.is_empty() {
                break;
            }
            let agent = &self.agents[i];
            if agent.activity != Activity::Serving {
                continue;
            }
            let chosen: Placement = match agent.power {
                Power::Battery { .. } => placement::place_free(&remaining, link, channel)
                    .expect("non-empty users"),
                Power::Tethered => {
                    let anchor = *self.anchor(agent.anchor.expect("tethered agent"));
                    placement::place_tethered(&remaining, &anchor, tether, link, channel)
                        .expect("non-empty users")
                }
                Power::Intermittent => {
                    let current_id = agent.anchor.expect("serving iTUAV is attached");
                    let current = placement::place_tethered(&remaining, self.anchor(current_id), tether, link, channel)
                        .expect("non-empty users");
                    let free_pool: Vec<Anchor> = self
                        .pool
                        .iter()
                        .filter(|a| a.id == current_id || !claimed.contains(&a.id))
                        .cloned()
                        .collect();
                    let best = placement::place_itethered(&remaining, &free_pool, tether, link, channel)
                        .expect("non-empty users and pool");
                    let gain = best.covered_count() as f64 > current.covered_count() as f64 * (1.0 + threshold);
                    if best.anchor_id != Some(current_id) && gain {
                        let target = *self.anchor(best.anchor_id.expect("tethered placement"));
                        claimed.remove(&current_id);
                        claimed.insert(target.id);
                        self.agents[i].relocate(leg_to_anchor(&target, best.pos), self.mp);
                        remaining.retain(|u| best.covered.binary_search(&u.id).is_err());
                        continue;
                    }
                    current
                }
            };
            self.agents[i].serve_target = chosen.pos;
            remaining.retain(|u| chosen.covered.binary_search(&u.id).is_err());
        }
    }

    fn run(mut self, rng: &mut SimRng) -> Result<MissionTrace> {
        self.init()?;
        let mp = self.mp;
        let s = self.scenario;
        let n_steps = mp.n_steps();
        let reeval_every = ((mp.reeval_interval_s / mp.dt_s).round() as usize).max(1);
        let mut drift = ClusterDrift::new(&self.ues, s.area);
        let mut steps = Vec::with_capacity(n_steps);
        for step in 0..n_steps {
            if step > 0 {
                if let Some(mobility) = mp.mobility {
                    drift.step(&mut self.ues, mobility, mp.dt_s, rng);
                    if step % reeval_every == 0 {
                        self.reevaluate();
                    }
                }
            }
            let mut served: BTreeSet<u32> = BTreeSet::new();
            let mut records = Vec::with_capacity(self.agents.len());
            for agent in &self.agents {
                let mut covered = 0;
                if agent.activity == Activity::Serving {
                    for ue in &self.ues {
                        if is_covered(&agent.pos, ue.pos, &s.link, &s.channel) && served.insert(ue.id) {
                            covered += 1;
                        }
                    }
                }
                records.push(UavState {
                    pos: agent.pos,
                    battery_min: agent.battery,
                    activity: agent.activity,
                    attached_anchor: if agent.is_tethered() { agent.anchor } else { None },
                    covered,
                });
            }
            for (agent, rec) in self.agents.iter_mut().zip(records.iter_mut()) {
                agent.advance(mp);
                rec.battery_min = agent.battery;
            }
            steps.push(TraceStep {
                t_s: step as f64 * mp.dt_s,
                covered_count: served.len(),
                uavs: records,
            });
        }
        let summary = summarize(&steps, mp.dt_s, mp.duration_min)?;
        Ok(MissionTrace {
            dt_s: mp.dt_s,
            duration_min: mp.duration_min,
            steps,
            summary,
        })
    }
}

/// Simulate one mission. Deterministic in `(scenario, system, mp, rng state)`.
pub fn run_mission(
    scenario: &Scenario,
    system: SystemKind,
    mp: &MissionParams,
    rng: &mut SimRng,
) -> Result<MissionTrace> {
    system.validate()?;
    mp.validate()?;
    if scenario.ues.is_empty() {
        return Err(Error::precondition("mission needs at least one user"));
    }
    let needed = system.anchors_used();
    if needed > scenario.anchors.len() {
        return Err(Error::precondition(format!(
            "{system} needs {needed} anchors, scenario has {}",
            scenario.anchors.len()
        )));
    }
    let sim = Sim {
        scenario,
        system,
        mp,
        ues: scenario.ues.clone(),
        pool: scenario.anchors[..needed].to_vec(),
        agents: Vec::new(),
    };
    sim.run(rng)
}

// ---------------------------------------------------------------------------
// Trace CSV

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    t_s: f64,
    uav_idx: usize,
    x_m: f64,
    y_m: f64,
    z_m: f64,
    battery_min: f64,
    activity: String,
    anchor_id: Option<u32>,
    covered_count: usize,
}

/// One row per UAV per step; `covered_count` is that UAV's share of the
/// step's covered users, so rows of a step sum to its total.
pub fn write_trace<W: io::Write>(trace: &MissionTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for step in &trace.steps {
        for (i, u) in step.uavs.iter().enumerate() {
            w.serialize(TraceRow {
                t_s: step.t_s,
                uav_idx: i,
                x_m: u.pos.x,
                y_m: u.pos.y,
                z_m: u.pos.z,
                battery_min: u.battery_min,
                activity: u.activity.to_string(),
                anchor_id: u.attached_anchor,
                covered_count: u.covered,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(trace: &MissionTrace, path: impl AsRef<Path>) -> Result<()> {
    write_trace(trace, std::fs::File::create(path)?)
}

/// Rebuild a trace from its CSV. The step length is inferred from the time
/// column and the duration from the step count.
pub fn read_trace<R: io::Read>(input: R) -> Result<MissionTrace> {
    let mut r = csv::Reader::from_reader(input);
    let mut steps: Vec<TraceStep> = Vec::new();
    for row in r.deserialize::<TraceRow>() {
        let row = row?;
        let state = UavState {
            pos: UavPosition::new(row.x_m, row.y_m, row.z_m),
            battery_min: row.battery_min,
            activity: row.activity.parse()?,
            attached_anchor: row.anchor_id,
            covered: row.covered_count,
        };
        match steps.last_mut() {
            Some(last) if last.t_s == row.t_s => {
                last.uavs.push(state);
                last.covered_count += row.covered_count;
            }
            _ => steps.push(TraceStep {
                t_s: row.t_s,
                covered_count: row.covered_count,
                uavs: vec![state],
            }),
        }
    }
    if steps.is_empty() {
        return Err(Error::precondition("trace file has no rows"));
    }
    let dt_s = if steps.len() > 1 {
        steps[1].t_s - steps[0].t_s
    } else {
        MissionParams::default().dt_s
    };
    let duration_min = steps.len() as f64 * dt_s / 60.0;
    let summary = summarize(&steps, dt_s, duration_min)?;
    Ok(MissionTrace {
        dt_s,
        duration_min,
        steps,
        summary,
    })
}

/// Hover-region check used by tests and the CLI for tethered states.
pub fn state_in_region(state: &UavState, anchors: &[Anchor], tether: TetherParams) -> bool {
    match (state.activity, state.attached_anchor) {
        (Activity::Serving, Some(id)) => anchors
            .iter()
            .find(|a| a.id == id)
            .is_some_and(|a| HoverRegion::new(a, tether).contains(&state.pos, 1e-6)),
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;
    use crate::seeding::rng_from_seed;

    fn scenario(seed: u64) -> Scenario {
        let cfg = ScenarioConfig {
            seed,
            users: crate::scenario::UsersConfig { count: 60, cov: 1.0 },
            ..ScenarioConfig::default()
        };
        cfg.realize().unwrap()
    }

    fn run(s: &Scenario, system: SystemKind, mp: &MissionParams) -> MissionTrace {
        run_mission(s, system, mp, &mut rng_from_seed(s.seed)).unwrap()
    }

    fn step(t_s: f64, covered: usize) -> TraceStep {
        TraceStep {
            t_s,
            covered_count: covered,
            uavs: Vec::new(),
        }
    }

    #[test]
    fn summary_of_constant_coverage() {
        let steps: Vec<TraceStep> = (0..600).map(|i| step(i as f64 * 10.0, 7)).collect();
        let s = summarize(&steps, 10.0, 100.0).unwrap();
        assert!((s.avg_covered_per_min - 7.0).abs() < 1e-12);
        assert_eq!(s.service_uptime_fraction, 1.0);
    }

    #[test]
    fn summary_of_half_mission() {
        let steps: Vec<TraceStep> = (0..600)
            .map(|i| step(i as f64 * 10.0, if i < 300 { 12 } else { 0 }))
            .collect();
        let s = summarize(&steps, 10.0, 100.0).unwrap();
        assert!((s.avg_covered_per_min - 6.0).abs() < 1e-12);
        assert_eq!(s.service_uptime_fraction, 0.5);
        assert!(summarize(&[], 10.0, 100.0).is_err());
    }

    #[test]
    fn tuav_with_static_users_is_constant() {
        let s = scenario(3);
        let trace = run(&s, SystemKind::Tuav { tether: s.tether }, &MissionParams::default());
        let first = trace.steps[0].covered_count;
        assert!(trace.steps.iter().all(|st| st.covered_count == first));
        assert!(trace.steps.iter().all(|st| st.uavs[0].activity == Activity::Serving));
        assert_eq!(trace.steps.len(), 600);
    }

    #[test]
    fn no_swap_grounds_after_battery() {
        let s = scenario(4);
        let mp = MissionParams::default();
        let trace = run(&s, SystemKind::UavNoSwap { battery_min: 30.0 }, &mp);
        let flying = trace
            .steps
            .iter()
            .filter(|st| st.uavs[0].activity != Activity::Grounded)
            .count();
        assert_eq!(flying, 180);
        assert!(trace.steps[200..].iter().all(|st| st.covered_count == 0));
    }

    #[test]
    fn swap_dominates_no_swap() {
        let s = scenario(5);
        let mp = MissionParams::default();
        let no = run(&s, SystemKind::UavNoSwap { battery_min: 30.0 }, &mp);
        let yes = run(&s, SystemKind::UavSwap, &mp);
        assert!(yes.summary.avg_covered_per_min >= no.summary.avg_covered_per_min);
        for (a, b) in no.steps.iter().zip(&yes.steps) {
            assert!(b.covered_count >= a.covered_count);
        }
    }

    #[test]
    fn ituav_without_mobility_never_detaches() {
        let s = scenario(6);
        let tether = s.tether;
        let trace = run(&s, SystemKind::Ituav { tether, n_anchors: 5 }, &MissionParams::default());
        assert!(trace
            .steps
            .iter()
            .all(|st| st.uavs[0].activity != Activity::Detaching));
        let last = trace.steps.last().unwrap().uavs[0];
        assert_eq!(last.activity, Activity::Serving);
        assert!(state_in_region(&last, &s.anchors, tether));
    }

    #[test]
    fn ituav_relocates_when_a_cluster_drifts_away() {
        let mut s = scenario(7);
        // One tight cluster next to anchor 0, anchor 1 far away.
        s.ues = (0..20)
            .map(|i| Ue {
                id: i,
                pos: Point2::new(600.0 + (i % 5) as f64 * 5.0, 600.0 + (i / 5) as f64 * 5.0),
                cluster_id: Some(0),
            })
            .collect();
        s.anchors = vec![
            Anchor { id: 0, pos: Point2::new(600.0, 600.0), height_m: 50.0 },
            Anchor { id: 1, pos: Point2::new(1100.0, 1100.0), height_m: 50.0 },
        ];
        let mp = MissionParams {
            mobility: Some(Mobility { drift_speed_mps: 2.0 }),
            ..MissionParams::default()
        };
        let trace = run(&s, SystemKind::Ituav { tether: s.tether, n_anchors: 2 }, &mp);
        for st in &trace.steps {
            let u = st.uavs[0];
            assert!((0.0..=mp.battery_capacity_min).contains(&u.battery_min));
            if u.activity != Activity::Serving {
                assert_eq!(u.covered, 0);
            }
            assert!(state_in_region(&u, &s.anchors, s.tether));
        }
    }

    #[test]
    fn mobility_respects_speed_and_area() {
        let area = Area::default();
        let mut ues = crate::pointprocess::sample_uniform(30, area, &mut rng_from_seed(1));
        for (i, u) in ues.iter_mut().enumerate() {
            u.cluster_id = Some((i % 3) as u32);
        }
        let mut drift = ClusterDrift::new(&ues, area);
        let start: Vec<(u32, Point2)> = drift.centers().collect();
        let mut rng = rng_from_seed(2);
        let m = Mobility { drift_speed_mps: 5.0 };
        for k in 1..=50 {
            step_mobility(&mut drift, &mut ues, m, 10.0, &mut rng);
            for ((_, c0), (_, c)) in start.iter().zip(drift.centers()) {
                assert!(c0.dist(c) <= k as f64 * 50.0 + 1e-9);
            }
        }
        assert!(ues.iter().all(|u| area.contains(u.pos)));
    }

    #[test]
    fn zero_drift_leaves_users_in_place() {
        let area = Area::default();
        let ues0 = crate::pointprocess::sample_uniform(10, area, &mut rng_from_seed(9));
        let mut ues = ues0.clone();
        let mut drift = ClusterDrift::new(&ues, area);
        step_mobility(&mut drift, &mut ues, Mobility { drift_speed_mps: 0.0 }, 10.0, &mut rng_from_seed(1));
        assert_eq!(ues, ues0);
    }

    #[test]
    fn inconsistent_system_is_rejected() {
        let mut s = scenario(8);
        s.anchors.truncate(2);
        let err = run_mission(
            &s,
            SystemKind::Ituav { tether: s.tether, n_anchors: 5 },
            &MissionParams::default(),
            &mut rng_from_seed(0),
        );
        assert!(err.is_err());
    }

    #[test]
    fn trace_csv_round_trip_preserves_summary() {
        let s = scenario(10);
        let trace = run(&s, SystemKind::UavNoSwap { battery_min: 45.0 }, &MissionParams::default());
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back.summary, trace.summary);
        assert_eq!(back.steps.len(), trace.steps.len());
    }

    #[test]
    fn reflection_stays_inside() {
        for v in [-25.0, -3000.5, 0.0, 10.0, 3000.0, 3010.0, 9001.0] {
            let r = reflect(v, 3000.0);
            assert!((0.0..=3000.0).contains(&r), "{v} -> {r}");
        }
        assert_eq!(reflect(3010.0, 3000.0), 2990.0);
        assert_eq!(reflect(-10.0, 3000.0), 10.0);
    }
}
