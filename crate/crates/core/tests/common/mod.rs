//! Brute-force grid oracles and instance generators shared by the
//! integration tests and the acceptance suite.

#![allow(dead_code)]

use rand::Rng;

use ituav::channel::{coverage_radius, optimal_altitude};
use ituav::geom::Point2;
use ituav::pointprocess::{sample_thomas, ThomasParams};
use ituav::scenario::{Anchor, Area, ChannelParams, LinkBudget, TetherParams, Ue};
use ituav::seeding::{rng_from_seed, SimRng};

/// Best count over disk centers on the integer lattice of `step`, where a
/// user counts when its distance is at most `radius`. Each lattice row is
/// handled with a difference array, so this is exact on the lattice.
pub fn lattice_max_cover(points: &[Point2], origin: Point2, half_extent: f64, step: f64, radius: f64, reach: Option<f64>) -> usize {
    let n = (2.0 * half_extent / step).floor() as i64;
    let mut best = 0usize;
    let mut diff = vec![0i32; n as usize + 2];
    for row in 0..=n {
        let dy_grid = -half_extent + row as f64 * step;
        // Columns allowed by the reach constraint on this row.
        let (cmin, cmax) = match reach {
            Some(rho) => {
                if dy_grid.abs() > rho {
                    continue;
                }
                let w = (rho * rho - dy_grid * dy_grid).sqrt();
                (
                    ((half_extent - w) / step).ceil().max(0.0) as i64,
                    ((half_extent + w) / step).floor().min(n as f64) as i64,
                )
            }
            None => (0, n),
        };
        if cmin > cmax {
            continue;
        }
        diff.iter_mut().for_each(|d| *d = 0);
        let y = origin.y + dy_grid;
        for p in points {
            let dy = p.y - y;
            if dy.abs() > radius {
                continue;
            }
            let w = (radius * radius - dy * dy).sqrt();
            let lo = ((p.x - w - origin.x + half_extent) / step).ceil() as i64;
            let hi = ((p.x + w - origin.x + half_extent) / step).floor() as i64;
            let (lo, hi) = (lo.max(cmin), hi.min(cmax));
            if lo > hi {
                continue;
            }
            diff[lo as usize] += 1;
            diff[hi as usize + 1] -= 1;
        }
        let mut run = 0i32;
        for (c, d) in diff.iter().enumerate().take(cmax as usize + 1) {
            run += d;
            if c as i64 >= cmin {
                best = best.max(run as usize);
            }
        }
    }
    best
}

/// Free UAV oracle: 1 m horizontal lattice at the widest-disk altitude.
pub fn oracle_free(ues: &[Ue], link: &LinkBudget, ch: &ChannelParams) -> usize {
    let disk = optimal_altitude(link, ch);
    let pts: Vec<Point2> = ues.iter().map(|u| u.pos).collect();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &pts {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let center = Point2::new(((xmin + xmax) / 2.0).round(), ((ymin + ymax) / 2.0).round());
    let half = ((xmax - xmin).max(ymax - ymin) / 2.0 + disk.radius).ceil() + 1.0;
    lattice_max_cover(&pts, center, half, 1.0, disk.radius, None)
}

/// Tethered oracle: 5 m lattice in all three axes over the hover region.
pub fn oracle_tethered(ues: &[Ue], anchor: &Anchor, tether: TetherParams, link: &LinkBudget, ch: &ChannelParams) -> usize {
    let pts: Vec<Point2> = ues.iter().map(|u| u.pos).collect();
    let step = 5.0;
    let levels = (tether.length_m / step).floor() as usize;
    let mut best = 0;
    for k in 0..=levels {
        let dz = k as f64 * step;
        let z = anchor.height_m + dz;
        if z <= 0.0 {
            continue;
        }
        let mut rho = (tether.length_m.powi(2) - dz * dz).max(0.0).sqrt();
        if tether.min_incl_deg > 0.0 {
            rho = rho.min(dz / tether.min_incl_deg.to_radians().tan());
        }
        let r = coverage_radius(z, link, ch).radius;
        if r <= 0.0 {
            continue;
        }
        let half = (tether.length_m / step).floor() * step;
        best = best.max(lattice_max_cover(&pts, anchor.pos, half, step, r, Some(rho)));
    }
    best
}

pub fn oracle_itethered(ues: &[Ue], anchors: &[Anchor], tether: TetherParams, link: &LinkBudget, ch: &ChannelParams) -> usize {
    anchors
        .iter()
        .map(|a| oracle_tethered(ues, a, tether, link, ch))
        .max()
        .unwrap_or(0)
}

/// A small placement instance: up to 30 clustered users and 10 anchors, a
/// few of which sit near the users so tethered counts are not trivially 0.
pub fn small_instance(seed: u64) -> (Vec<Ue>, Vec<Anchor>) {
    let mut rng: SimRng = rng_from_seed(seed);
    let area = Area::default();
    let n_total = rng.random_range(5..=30);
    let params = ThomasParams {
        n_parents: rng.random_range(1..=3),
        cluster_sigma: rng.random_range(50.0..600.0),
        n_total,
    };
    let ues = sample_thomas(&params, area, &mut rng).unwrap();
    let anchors = (0..10u32)
        .map(|id| {
            let pos = if id % 2 == 0 {
                let u = ues[rng.random_range(0..ues.len())].pos;
                let p = Point2::new(u.x + rng.random_range(-400.0..400.0), u.y + rng.random_range(-400.0..400.0));
                Point2::new(p.x.clamp(0.0, area.width_m), p.y.clamp(0.0, area.height_m))
            } else {
                area.sample_uniform(&mut rng)
            };
            Anchor { id, pos, height_m: rng.random_range(20.0..80.0) }
        })
        .collect();
    (ues, anchors)
}
