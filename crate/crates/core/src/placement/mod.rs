//! Coverage-maximizing placement for free, tethered and intermittently
//! tethered UAVs.
//!
//! Coverage at a fixed altitude is a closed disk, so every placement reduces
//! to maximum-covering-disk problems: unconstrained for a free UAV (at the
//! altitude with the widest disk), and with the center confined to the
//! tether's horizontal reach for tethered UAVs, searched over a refined
//! altitude grid.

mod disk;

pub use disk::{max_cover_disk, max_cover_disk_constrained, DiskCover};

use rayon::prelude::*;

use crate::channel::{coverage_radius, is_covered, optimal_altitude, UavPosition};
use crate::error::{Error, Result};
use crate::geom::{Disk, Point2};
use crate::scenario::{Anchor, ChannelParams, LinkBudget, TetherParams, Ue};

pub const ALTITUDE_LEVELS: usize = 16;
pub const REFINE_LEVELS: usize = 8;

/// Positions reachable by a UAV tethered to one anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoverRegion {
    pub anchor_pos: Point2,
    pub anchor_height: f64,
    pub tether_m: f64,
    pub min_incl_deg: f64,
}

impl HoverRegion {
    pub fn new(anchor: &Anchor, tether: TetherParams) -> Self {
        HoverRegion {
            anchor_pos: anchor.pos,
            anchor_height: anchor.height_m,
            tether_m: tether.length_m,
            min_incl_deg: tether.min_incl_deg,
        }
    }

    pub fn top(&self) -> UavPosition {
        UavPosition::at(self.anchor_pos, self.anchor_height)
    }

    /// Horizontal reach around the anchor at altitude `z`, if `z` is inside
    /// the vertical band of the region.
    pub fn horizontal_reach(&self, z: f64) -> Option<f64> {
        let dz = z - self.anchor_height;
        if dz < 0.0 || dz > self.tether_m {
            return None;
        }
        let mut rho = (self.tether_m * self.tether_m - dz * dz).max(0.0).sqrt();
        if self.min_incl_deg > 0.0 {
            rho = rho.min(dz / self.min_incl_deg.to_radians().tan());
        }
        Some(rho)
    }

    pub fn altitude_band(&self) -> (f64, f64) {
        (self.anchor_height, self.anchor_height + self.tether_m)
    }

    pub fn contains(&self, pos: &UavPosition, tol: f64) -> bool {
        let top = self.top();
        let horizontal = pos.ground().dist(self.anchor_pos);
        let dz = pos.z - top.z;
        if pos.dist(&top) > self.tether_m + tol || dz < -tol {
            return false;
        }
        if self.min_incl_deg > 0.0 && horizontal > tol {
            // Elevation above the anchor top, expressed as a horizontal bound.
            return horizontal <= dz / self.min_incl_deg.to_radians().tan() + tol;
        }
        true
    }
}

/// A UAV position with the users it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub pos: UavPosition,
    /// Covered user ids, ascending.
    pub covered: Vec<u32>,
    pub anchor_id: Option<u32>,
}

impl Placement {
    pub fn covered_count(&self) -> usize {
        self.covered.len()
    }
}

fn covered_ids(pos: &UavPosition, ues: &[Ue], link: &LinkBudget, params: &ChannelParams) -> Vec<u32> {
    let mut ids: Vec<u32> = ues
        .iter()
        .filter(|u| is_covered(pos, u.pos, link, params))
        .map(|u| u.id)
        .collect();
    ids.sort_unstable();
    ids
}

fn require_users(ues: &[Ue]) -> Result<()> {
    if ues.is_empty() {
        Err(Error::precondition("placement needs at least one user"))
    } else {
        Ok(())
    }
}

/// Free UAV: widest-disk altitude, then the best disk center.
pub fn place_free(ues: &[Ue], link: &LinkBudget, params: &ChannelParams) -> Result<Placement> {
    require_users(ues)?;
    Ok(place_free_unchecked(ues, link, params))
}

fn place_free_unchecked(ues: &[Ue], link: &LinkBudget, params: &ChannelParams) -> Placement {
    let best = optimal_altitude(link, params);
    let center = if best.radius > 0.0 && !ues.is_empty() {
        let points: Vec<Point2> = ues.iter().map(|u| u.pos).collect();
        max_cover_disk(&points, best.radius)
            .expect("non-empty points and positive radius")
            .center
    } else {
        ues.first().map_or(Point2::default(), |u| u.pos)
    };
    let pos = UavPosition::at(center, best.altitude);
    Placement {
        covered: covered_ids(&pos, ues, link, params),
        pos,
        anchor_id: None,
    }
}

/// Best center and count at altitude `z` inside `region`.
fn best_at_altitude(
    points: &[Point2],
    region: &HoverRegion,
    z: f64,
    link: &LinkBudget,
    params: &ChannelParams,
) -> Option<(usize, Point2)> {
    if !(z > 0.0) {
        return None;
    }
    let rho = region.horizontal_reach(z)?;
    let radius = coverage_radius(z, link, params).radius;
    if radius <= 0.0 || points.is_empty() {
        return Some((0, region.anchor_pos));
    }
    let cover = max_cover_disk_constrained(points, radius, Disk::new(region.anchor_pos, rho))
        .expect("validated radius and points");
    Some((cover.count(), cover.center))
}

/// Tethered UAV: constrained max cover on a two-stage altitude grid.
pub fn place_tethered(
    ues: &[Ue],
    anchor: &Anchor,
    tether: TetherParams,
    link: &LinkBudget,
    params: &ChannelParams,
) -> Result<Placement> {
    require_users(ues)?;
    Ok(place_tethered_unchecked(ues, anchor, tether, link, params))
}

fn place_tethered_unchecked(
    ues: &[Ue],
    anchor: &Anchor,
    tether: TetherParams,
    link: &LinkBudget,
    params: &ChannelParams,
) -> Placement {
    let region = HoverRegion::new(anchor, tether);
    let points: Vec<Point2> = ues.iter().map(|u| u.pos).collect();
    let (z_lo, z_hi) = region.altitude_band();
    let step = (z_hi - z_lo) / (ALTITUDE_LEVELS - 1) as f64;

    // (count, altitude, center); on equal counts the lower altitude wins.
    let coarse: Vec<f64> = (0..ALTITUDE_LEVELS)
        .map(|level| z_lo + step * level as f64)
        .collect();
    let evaluate = |zs: &[f64]| -> Vec<Option<(usize, f64, Point2)>> {
        zs.par_iter()
            .map(|&z| best_at_altitude(&points, &region, z, link, params).map(|(c, p)| (c, z, p)))
            .collect()
    };
    let pick = |results: Vec<Option<(usize, f64, Point2)>>| {
        results
            .into_iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|r| (i, r)))
            .fold(None, |best: Option<(usize, (usize, f64, Point2))>, cand| match best {
                Some(b) if b.1 .0 >= cand.1 .0 => Some(b),
                _ => Some(cand),
            })
    };
    let mut best = pick(evaluate(&coarse)).map(|(level, r)| {
        let lo = (z_lo + step * (level as f64 - 1.0)).max(z_lo);
        let hi = (z_lo + step * (level as f64 + 1.0)).min(z_hi);
        (lo, hi, r)
    });
    if let Some((lo, hi, coarse_best)) = best {
        let fine: Vec<f64> = (0..REFINE_LEVELS)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / REFINE_LEVELS as f64)
            .collect();
        if let Some((_, refined)) = pick(evaluate(&fine)) {
            if refined.0 > coarse_best.0 {
                best = Some((lo, hi, refined));
            }
        }
    }
    let best = best.map(|(_, _, r)| r);

    let (pos, covered) = match best {
        Some((count, z, center)) if count > 0 => {
            let pos = UavPosition::at(center, z);
            (pos, covered_ids(&pos, ues, link, params))
        }
        _ => {
            // Nothing reachable: park at the top of the tether.
            let pos = UavPosition::at(anchor.pos, z_hi.max(f64::MIN_POSITIVE));
            (pos, covered_ids(&pos, ues, link, params))
        }
    };
    Placement {
        pos,
        covered,
        anchor_id: Some(anchor.id),
    }
}

/// Intermittently tethered UAV: the best tethered placement over all anchors.
/// Ties go to the lowest anchor id.
pub fn place_itethered(
    ues: &[Ue],
    anchors: &[Anchor],
    tether: TetherParams,
    link: &LinkBudget,
    params: &ChannelParams,
) -> Result<Placement> {
    require_users(ues)?;
    if anchors.is_empty() {
        return Err(Error::precondition("iTUAV placement needs at least one anchor"));
    }
    Ok(place_itethered_unchecked(ues, anchors, tether, link, params))
}

fn place_itethered_unchecked(
    ues: &[Ue],
    anchors: &[Anchor],
    tether: TetherParams,
    link: &LinkBudget,
    params: &ChannelParams,
) -> Placement {
    let candidates: Vec<Placement> = anchors
        .par_iter()
        .map(|a| place_tethered_unchecked(ues, a, tether, link, params))
        .collect();
    candidates
        .into_iter()
        .reduce(|best, p| {
            let (bc, pc) = (best.covered_count(), p.covered_count());
            if pc > bc || (pc == bc && p.anchor_id < best.anchor_id) {
                p
            } else {
                best
            }
        })
        .expect("at least one anchor")
}

/// How the UAVs of a multi-UAV system are constrained.
#[derive(Debug, Clone, Copy)]
pub enum MultiMode<'a> {
    Free,
    /// UAV `i` is pinned to `anchors[i]`.
    Tuav { anchors: &'a [Anchor], tether: TetherParams },
    /// UAVs pick from a shared pool; each anchor serves at most one UAV.
    Ituav { anchors: &'a [Anchor], tether: TetherParams },
}

/// Greedy sequential coverage: each UAV in turn is placed on the users not
/// yet covered. Covered sets are disjoint.
pub fn place_multi(
    ues: &[Ue],
    k: usize,
    mode: MultiMode<'_>,
    link: &LinkBudget,
    params: &ChannelParams,
) -> Result<Vec<Placement>> {
    require_users(ues)?;
    if k == 0 {
        return Err(Error::precondition("place_multi needs k >= 1"));
    }
    match mode {
        MultiMode::Tuav { anchors, .. } | MultiMode::Ituav { anchors, .. } if k > anchors.len() => {
            return Err(Error::precondition(format!(
                "{k} UAVs but only {} anchors",
                anchors.len()
            )));
        }
        _ => {}
    }

    let mut remaining: Vec<Ue> = ues.to_vec();
    let mut pool: Vec<Anchor> = match mode {
        MultiMode::Ituav { anchors, .. } => anchors.to_vec(),
        _ => Vec::new(),
    };
    let mut placements = Vec::with_capacity(k);
    for i in 0..k {
        let placement = match mode {
            MultiMode::Free => place_free_unchecked(&remaining, link, params),
            MultiMode::Tuav { anchors, tether } => {
                place_tethered_unchecked(&remaining, &anchors[i], tether, link, params)
            }
            MultiMode::Ituav { tether, .. } => {
                let p = place_itethered_unchecked(&remaining, &pool, tether, link, params);
                pool.retain(|a| Some(a.id) != p.anchor_id);
                p
            }
        };
        remaining.retain(|u| placement.covered.binary_search(&u.id).is_err());
        placements.push(placement);
    }
    Ok(placements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::coverage_radius;

    fn ue(id: u32, x: f64, y: f64) -> Ue {
        Ue {
            id,
            pos: Point2::new(x, y),
            cluster_id: None,
        }
    }

    fn anchor(id: u32, x: f64, y: f64) -> Anchor {
        Anchor {
            id,
            pos: Point2::new(x, y),
            height_m: 50.0,
        }
    }

    fn defaults() -> (LinkBudget, ChannelParams, TetherParams) {
        (
            LinkBudget::default(),
            ChannelParams::default(),
            TetherParams::default(),
        )
    }

    fn cluster(first_id: u32, cx: f64, cy: f64, n: u32, spread: f64) -> Vec<Ue> {
        (0..n)
            .map(|i| {
                let a = i as f64 * 2.399;
                let r = spread * ((i as f64 + 0.5) / n as f64).sqrt();
                ue(first_id + i, cx + r * a.cos(), cy + r * a.sin())
            })
            .collect()
    }

    #[test]
    fn single_user_free_placement() {
        let (link, params, _) = defaults();
        let p = place_free(&[ue(7, 100.0, 200.0)], &link, &params).unwrap();
        assert_eq!(p.covered, vec![7]);
        assert!(p.pos.ground().dist(Point2::new(100.0, 200.0)) <= coverage_radius(p.pos.z, &link, &params).radius);
        assert_eq!(p.anchor_id, None);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let (link, params, tether) = defaults();
        assert!(place_free(&[], &link, &params).is_err());
        assert!(place_tethered(&[], &anchor(0, 0.0, 0.0), tether, &link, &params).is_err());
        assert!(place_itethered(&[ue(0, 0.0, 0.0)], &[], tether, &link, &params).is_err());
        assert!(place_multi(&[ue(0, 0.0, 0.0)], 0, MultiMode::Free, &link, &params).is_err());
    }

    #[test]
    fn cluster_around_anchor_is_fully_covered() {
        let (link, params, tether) = defaults();
        let ues = cluster(0, 1000.0, 1000.0, 30, 60.0);
        let a = anchor(4, 1010.0, 990.0);
        let p = place_tethered(&ues, &a, tether, &link, &params).unwrap();
        assert_eq!(p.covered_count(), 30);
        assert_eq!(p.anchor_id, Some(4));
        assert!(HoverRegion::new(&a, tether).contains(&p.pos, 1e-6));
    }

    #[test]
    fn unreachable_users_are_not_covered() {
        let (link, params, tether) = defaults();
        let ues = cluster(0, 2900.0, 2900.0, 10, 20.0);
        let a = anchor(0, 50.0, 50.0);
        let p = place_tethered(&ues, &a, tether, &link, &params).unwrap();
        assert!(p.covered.is_empty());
        assert!(HoverRegion::new(&a, tether).contains(&p.pos, 1e-6));
    }

    #[test]
    fn single_anchor_itethered_equals_tethered() {
        let (link, params, tether) = defaults();
        let ues = cluster(0, 600.0, 700.0, 25, 300.0);
        let a = anchor(2, 500.0, 500.0);
        let t = place_tethered(&ues, &a, tether, &link, &params).unwrap();
        let i = place_itethered(&ues, &[a], tether, &link, &params).unwrap();
        assert_eq!(t, i);
    }

    #[test]
    fn itethered_prefers_lowest_id_on_ties() {
        let (link, params, tether) = defaults();
        let ues = cluster(0, 1500.0, 1500.0, 10, 10.0);
        let anchors = [anchor(5, 1500.0, 1520.0), anchor(3, 1500.0, 1480.0)];
        let p = place_itethered(&ues, &anchors, tether, &link, &params).unwrap();
        assert_eq!(p.covered_count(), 10);
        assert_eq!(p.anchor_id, Some(3));
    }

    #[test]
    fn two_free_uavs_cover_two_separated_clusters() {
        let (link, params, _) = defaults();
        let mut ues = cluster(0, 300.0, 300.0, 15, 40.0);
        ues.extend(cluster(15, 2700.0, 2700.0, 15, 40.0));
        let placements = place_multi(&ues, 2, MultiMode::Free, &link, &params).unwrap();
        let total: usize = placements.iter().map(Placement::covered_count).sum();
        assert_eq!(total, 30);
    }

    #[test]
    fn multi_with_one_uav_is_single_placement() {
        let (link, params, tether) = defaults();
        let ues = cluster(0, 800.0, 900.0, 20, 400.0);
        let anchors = [anchor(0, 700.0, 800.0), anchor(1, 1200.0, 1300.0)];
        let multi = place_multi(&ues, 1, MultiMode::Ituav { anchors: &anchors, tether }, &link, &params).unwrap();
        let single = place_itethered(&ues, &anchors, tether, &link, &params).unwrap();
        assert_eq!(multi, vec![single]);
        let free = place_multi(&ues, 1, MultiMode::Free, &link, &params).unwrap();
        assert_eq!(free, vec![place_free(&ues, &link, &params).unwrap()]);
    }

    #[test]
    fn ituav_pool_is_not_reused_and_tuav_pool_must_fit() {
        let (link, params, tether) = defaults();
        let mut ues = cluster(0, 500.0, 500.0, 10, 30.0);
        ues.extend(cluster(10, 2500.0, 2500.0, 8, 30.0));
        let anchors = [anchor(0, 520.0, 500.0), anchor(1, 2480.0, 2500.0), anchor(2, 1500.0, 1500.0)];
        let p = place_multi(&ues, 2, MultiMode::Ituav { anchors: &anchors, tether }, &link, &params).unwrap();
        assert_ne!(p[0].anchor_id, p[1].anchor_id);
        assert_eq!(p[0].covered_count() + p[1].covered_count(), 18);
        assert!(place_multi(&ues, 4, MultiMode::Tuav { anchors: &anchors, tether }, &link, &params).is_err());
    }

    #[test]
    fn hover_region_membership() {
        let a = anchor(0, 0.0, 0.0);
        let region = HoverRegion::new(&a, TetherParams::default());
        assert!(region.contains(&UavPosition::new(0.0, 0.0, 200.0), 0.0));
        assert!(region.contains(&UavPosition::new(150.0, 0.0, 50.0), 1e-9));
        assert!(!region.contains(&UavPosition::new(0.0, 0.0, 200.5), 0.0));
        assert!(!region.contains(&UavPosition::new(10.0, 0.0, 40.0), 0.0));
        let steep = HoverRegion::new(&a, TetherParams { length_m: 150.0, min_incl_deg: 45.0 });
        assert!(steep.contains(&UavPosition::new(50.0, 0.0, 110.0), 1e-9));
        assert!(!steep.contains(&UavPosition::new(80.0, 0.0, 110.0), 1e-9));
        assert!((steep.horizontal_reach(100.0).unwrap() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn steep_minimum_inclination_stays_in_region() {
        let (link, params, _) = defaults();
        let tether = TetherParams { length_m: 150.0, min_incl_deg: 30.0 };
        let ues = cluster(0, 900.0, 900.0, 20, 200.0);
        let a = anchor(0, 700.0, 700.0);
        let p = place_tethered(&ues, &a, tether, &link, &params).unwrap();
        assert!(HoverRegion::new(&a, tether).contains(&p.pos, 1e-6));
    }
}
