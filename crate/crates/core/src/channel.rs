//! Air-to-ground propagation with a probabilistic line of sight.
//!
//! The LoS probability is a sigmoid in the elevation angle,
//! `P(θ) = 1 / (1 + a·exp(-b·(θ - a)))` with θ in degrees, and the mean path
//! loss is free-space loss plus the probability-weighted excess loss of the
//! LoS and NLoS groups. A user is covered when the mean loss does not exceed
//! the link-budget threshold, so at a fixed altitude the covered region is a
//! closed disk under the UAV.

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::scenario::{ChannelParams, LinkBudget};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_MIN_ALTITUDE_M: f64 = 10.0;
pub const DEFAULT_MAX_ALTITUDE_M: f64 = 5000.0;

const RADIUS_TOL_M: f64 = 1e-7;
const ALTITUDE_TOL_M: f64 = 1e-3;
const ALTITUDE_SCAN: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UavPosition {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn at(ground: Point2, z: f64) -> Self {
        Self::new(ground.x, ground.y, z)
    }

    pub fn ground(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn dist(&self, other: &UavPosition) -> f64 {
        let dz = self.z - other.z;
        (self.ground().dist2(other.ground()) + dz * dz).sqrt()
    }
}

/// Coverage footprint at one altitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageDisk {
    pub altitude: f64,
    pub radius: f64,
}

/// LoS probability at elevation `elevation_deg` in (0, 90].
pub fn prob_los(elevation_deg: f64, params: &ChannelParams) -> Result<f64> {
    if !(elevation_deg > 0.0 && elevation_deg <= 90.0) {
        return Err(Error::precondition(format!(
            "elevation {elevation_deg} deg outside (0, 90]"
        )));
    }
    Ok(los_sigmoid(elevation_deg, params))
}

fn los_sigmoid(elevation_deg: f64, params: &ChannelParams) -> f64 {
    1.0 / (1.0 + params.a * (-params.b * (elevation_deg - params.a)).exp())
}

/// Free-space loss in dB at 3D distance `d_m`.
pub fn fspl_db(d_m: f64, fc_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * fc_hz * d_m / SPEED_OF_LIGHT).log10()
}

/// Mean loss for a UAV at altitude `z` and a user at horizontal distance `r`.
/// Requires `z > 0`.
pub(crate) fn path_loss_at(r: f64, z: f64, params: &ChannelParams) -> f64 {
    let d = (r * r + z * z).sqrt();
    let elevation = z.atan2(r).to_degrees();
    let p = los_sigmoid(elevation, params);
    fspl_db(d, params.fc_hz) + p * params.eta_los_db + (1.0 - p) * params.eta_nlos_db
}

pub fn mean_path_loss(uav: &UavPosition, ue: Point2, params: &ChannelParams) -> Result<f64> {
    if !(uav.z > 0.0) {
        return Err(Error::precondition(format!(
            "UAV altitude must be > 0, got {}",
            uav.z
        )));
    }
    Ok(path_loss_at(uav.ground().dist(ue), uav.z, params))
}

/// True iff the mean path loss meets the threshold (closed comparison).
/// Positions on or below the ground are never covering.
pub fn is_covered(uav: &UavPosition, ue: Point2, link: &LinkBudget, params: &ChannelParams) -> bool {
    uav.z > 0.0 && path_loss_at(uav.ground().dist(ue), uav.z, params) <= link.threshold_db()
}

/// Largest horizontal distance at which a UAV at `altitude` still covers.
///
/// The result is a lower bound within 1e-7 m of the true boundary, so a user
/// at exactly the returned distance is covered.
pub fn coverage_radius(altitude: f64, link: &LinkBudget, params: &ChannelParams) -> CoverageDisk {
    let threshold = link.threshold_db();
    let empty = CoverageDisk {
        altitude,
        radius: 0.0,
    };
    if !(altitude > 0.0) || path_loss_at(0.0, altitude, params) > threshold {
        return empty;
    }
    // Excess loss is at least eta_los, which bounds the 3D range.
    let d_los = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * params.fc_hz)
        * 10f64.powf((threshold - params.eta_los_db) / 20.0);
    let mut hi = (d_los * d_los - altitude * altitude).max(0.0).sqrt();
    let mut lo = 0.0;
    if path_loss_at(hi, altitude, params) <= threshold {
        return CoverageDisk {
            altitude,
            radius: hi,
        };
    }
    for _ in 0..200 {
        if hi - lo <= RADIUS_TOL_M {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if path_loss_at(mid, altitude, params) <= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    CoverageDisk {
        altitude,
        radius: lo,
    }
}

/// Altitude with the widest coverage disk in the default 10 m to 5 km band.
pub fn optimal_altitude(link: &LinkBudget, params: &ChannelParams) -> CoverageDisk {
    optimal_altitude_in(link, params, DEFAULT_MIN_ALTITUDE_M, DEFAULT_MAX_ALTITUDE_M)
}

/// Coarse scan of `[z_min, z_max]` followed by a golden-section refinement
/// around the best scanned altitude.
pub fn optimal_altitude_in(
    link: &LinkBudget,
    params: &ChannelParams,
    z_min: f64,
    z_max: f64,
) -> CoverageDisk {
    let radius = |z: f64| coverage_radius(z, link, params).radius;
    let step = (z_max - z_min) / (ALTITUDE_SCAN - 1) as f64;
    let scan: Vec<(f64, f64)> = (0..ALTITUDE_SCAN)
        .map(|i| {
            let z = z_min + step * i as f64;
            (z, radius(z))
        })
        .collect();
    let (best_i, _) = scan
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, br), (i, &(_, r))| {
            if r > br {
                (i, r)
            } else {
                (bi, br)
            }
        });
    let mut best = CoverageDisk {
        altitude: scan[best_i].0,
        radius: scan[best_i].1,
    };
    if best.radius <= 0.0 {
        return CoverageDisk {
            altitude: z_min,
            radius: 0.0,
        };
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = scan[best_i.saturating_sub(1)].0;
    let mut b = scan[(best_i + 1).min(ALTITUDE_SCAN - 1)].0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (radius(c), radius(d));
    while b - a > ALTITUDE_TOL_M {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = radius(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = radius(d);
        }
    }
    for z in [c, d, 0.5 * (a + b)] {
        let r = radius(z);
        if r > best.radius {
            best = CoverageDisk {
                altitude: z,
                radius: r,
            };
        }
    }
    best
}
