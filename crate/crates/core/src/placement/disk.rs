//! Maximum covering disk, with and without a constraint on the center.
//!
//! An optimal disk can always be moved until its boundary touches two points
//! (or one point, or the boundary of the feasible region), so it suffices to
//! examine those candidate centers. Instead of enumerating the candidates
//! and counting each one in O(n), every point's circle is swept by angle:
//! the other points turn into angular intervals and a sorted sweep finds the
//! best candidate on that circle in O(n log n).

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geom::{Disk, Point2};

/// Candidate construction uses a radius shrunk by this factor, so every
/// point counted by a sweep is strictly inside the real disk.
const SHRINK: f64 = 1.0 - 1e-9;
/// Membership slack for points that sit on a disk boundary up to rounding.
const EXPAND: f64 = 1.0 + 4e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiskCover {
    pub center: Point2,
    /// Indices into the input slice, ascending.
    pub covered: Vec<usize>,
}

impl DiskCover {
    pub fn count(&self) -> usize {
        self.covered.len()
    }
}

/// Running best candidate: higher count wins, then the lexicographically
/// smaller center.
struct Best {
    count: usize,
    center: Point2,
}

impl Best {
    fn new(center: Point2, count: usize) -> Self {
        Best { count, center }
    }

    fn offer(&mut self, center: Point2, count: usize) {
        if count > self.count || (count == self.count && center.lex_less(self.center)) {
            self.count = count;
            self.center = center;
        }
    }
}

/// Arc `[mid - half, mid + half]` on a circle parameterized by angle.
#[derive(Clone, Copy)]
struct Arc {
    mid: f64,
    half: f64,
    weight: usize,
}

/// Sweep the weighted arcs and report `(count, angle)` at angle 0 and at
/// every arc start. Arcs that close at an angle where another opens overlap
/// there (closed arcs).
fn sweep(arcs: &[Arc], base: usize, mut visit: impl FnMut(usize, f64)) {
    let mut events: Vec<(f64, u8, usize)> = Vec::with_capacity(arcs.len() * 2);
    let mut count = base;
    for arc in arcs {
        if arc.half >= PI {
            count += arc.weight;
            continue;
        }
        let start = (arc.mid - arc.half).rem_euclid(TAU);
        let end = start + 2.0 * arc.half;
        events.push((start, 0, arc.weight));
        if end >= TAU {
            // Wraps past 0: active at the origin, closes after wrapping.
            count += arc.weight;
            events.push((end - TAU, 1, arc.weight));
        } else {
            events.push((end, 1, arc.weight));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    visit(count, 0.0);
    for (angle, kind, weight) in events {
        if kind == 0 {
            count += weight;
            visit(count, angle);
        } else {
            count -= weight;
        }
    }
}

fn validate(points: &[Point2], radius: f64) -> Result<()> {
    if points.is_empty() {
        return Err(Error::precondition("max cover needs at least one point"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::precondition(format!("cover radius must be > 0, got {radius}")));
    }
    Ok(())
}

fn covered_by(points: &[Point2], center: Point2, radius: f64) -> Vec<usize> {
    let r2 = (radius * EXPAND).powi(2);
    (0..points.len())
        .filter(|&i| points[i].dist2(center) <= r2)
        .collect()
}

fn count_within(points: &[Point2], center: Point2, radius: f64) -> usize {
    let r2 = (radius * EXPAND).powi(2);
    points.iter().filter(|p| p.dist2(center) <= r2).count()
}

/// Arcs of centers on the circle of radius `rc` around `points[i]` that
/// cover each other point; coincident points go to the returned base count.
fn pair_arcs(points: &[Point2], i: usize, rc: f64) -> (Vec<Arc>, usize) {
    let p = points[i];
    let mut arcs = Vec::new();
    let mut base = 1;
    for (j, q) in points.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = p.dist(*q);
        if d == 0.0 {
            base += 1;
        } else if d <= 2.0 * rc / SHRINK {
            arcs.push(Arc {
                mid: (q.y - p.y).atan2(q.x - p.x),
                half: (d / (2.0 * rc)).min(1.0).acos(),
                weight: 1,
            });
        }
    }
    (arcs, base)
}

/// Center of a closed disk of `radius` covering the most points.
/// Ties go to the lexicographically smallest candidate center.
pub fn max_cover_disk(points: &[Point2], radius: f64) -> Result<DiskCover> {
    validate(points, radius)?;
    let rc = radius * SHRINK;
    let mut best = Best::new(points[0], count_within(points, points[0], radius));
    for (i, &p) in points.iter().enumerate() {
        best.offer(p, count_within(points, p, radius));
        let (arcs, base) = pair_arcs(points, i, rc);
        sweep(&arcs, base, |count, angle| best.offer(p.polar(rc, angle), count));
    }
    Ok(DiskCover {
        center: best.center,
        covered: covered_by(points, best.center, radius),
    })
}

/// As [`max_cover_disk`] with the center restricted to `feasible`.
pub fn max_cover_disk_constrained(
    points: &[Point2],
    radius: f64,
    feasible: Disk,
) -> Result<DiskCover> {
    validate(points, radius)?;
    if !(feasible.radius >= 0.0) {
        return Err(Error::precondition("feasible disk radius must be >= 0"));
    }
    let c0 = feasible.center;
    let rho = feasible.radius;
    let rc = radius * SHRINK;

    // Points beyond rho + radius of the feasible center are never coverable.
    let reach = rho + radius;
    let relevant: Vec<usize> = (0..points.len())
        .filter(|&i| points[i].dist2(c0) <= reach * reach)
        .collect();
    let local: Vec<Point2> = relevant.iter().map(|&i| points[i]).collect();

    let mut best = Best::new(c0, count_within(&local, c0, radius));
    if rho > 0.0 {
        // Each point, or its projection onto the feasible disk.
        for &p in &local {
            let c = feasible.project(p);
            best.offer(c, count_within(&local, c, radius));
        }

        // Circles around each point, restricted to the arc inside the
        // feasible disk. The arc carries a weight larger than any count so
        // that only positions inside it can win.
        let gate = local.len() + 1;
        for (i, &p) in local.iter().enumerate() {
            let v_len = p.dist(c0);
            let allowed = if v_len == 0.0 {
                if rc <= rho {
                    Some(Arc { mid: 0.0, half: PI, weight: gate })
                } else {
                    None
                }
            } else {
                let kappa = (rho * rho - v_len * v_len - rc * rc) / (2.0 * rc * v_len);
                if kappa >= 1.0 {
                    Some(Arc { mid: 0.0, half: PI, weight: gate })
                } else if kappa < -1.0 {
                    None
                } else {
                    Some(Arc {
                        mid: (p.y - c0.y).atan2(p.x - c0.x) + PI,
                        half: PI - kappa.acos(),
                        weight: gate,
                    })
                }
            };
            let Some(allowed) = allowed else { continue };
            let (mut arcs, base) = pair_arcs(&local, i, rc);
            arcs.push(allowed);
            sweep(&arcs, base, |count, angle| {
                if count >= gate {
                    best.offer(feasible.project(p.polar(rc, angle)), count - gate);
                }
            });
        }

        // The boundary of the feasible disk itself.
        let mut arcs = Vec::new();
        let mut base = 0;
        for &q in &local {
            let dq = q.dist(c0);
            if dq == 0.0 {
                if rho <= rc {
                    base += 1;
                }
                continue;
            }
            let kappa = (rho * rho + dq * dq - rc * rc) / (2.0 * rho * dq);
            if kappa <= -1.0 {
                base += 1;
            } else if kappa <= 1.0 {
                arcs.push(Arc {
                    mid: (q.y - c0.y).atan2(q.x - c0.x),
                    half: kappa.acos(),
                    weight: 1,
                });
            }
        }
        sweep(&arcs, base, |count, angle| {
            best.offer(feasible.project(c0.polar(rho, angle)), count)
        });
    }

    Ok(DiskCover {
        center: best.center,
        covered: covered_by(points, best.center, radius),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[(f64, f64)]) -> Vec<Point2> {
        coords.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    #[test]
    fn everything_within_reach_of_centroid() {
        let points = pts(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0), (5.0, 5.0)]);
        let cover = max_cover_disk(&points, 8.0).unwrap();
        assert_eq!(cover.count(), 5);
    }

    #[test]
    fn picks_the_larger_of_two_far_clusters() {
        let mut points = Vec::new();
        for i in 0..5 {
            points.push(Point2::new(i as f64, 0.0));
        }
        for i in 0..7 {
            points.push(Point2::new(5000.0 + i as f64, 3.0));
        }
        let cover = max_cover_disk(&points, 20.0).unwrap();
        assert_eq!(cover.covered, (5..12).collect::<Vec<_>>());
    }

    #[test]
    fn single_point() {
        let cover = max_cover_disk(&pts(&[(3.0, 4.0)]), 1.0).unwrap();
        assert_eq!(cover.count(), 1);
        assert!(cover.center.dist(Point2::new(3.0, 4.0)) <= 1.0);
    }

    #[test]
    fn two_points_exactly_a_diameter_apart() {
        let points = pts(&[(0.0, 0.0), (2.0, 0.0)]);
        let cover = max_cover_disk(&points, 1.0).unwrap();
        assert_eq!(cover.count(), 2);
    }

    #[test]
    fn coincident_points_count_separately() {
        let points = pts(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0), (50.0, 50.0)]);
        let cover = max_cover_disk(&points, 2.0).unwrap();
        assert_eq!(cover.covered, vec![0, 1, 2]);
    }

    #[test]
    fn errors_on_bad_input() {
        assert!(max_cover_disk(&[], 1.0).is_err());
        assert!(max_cover_disk(&pts(&[(0.0, 0.0)]), 0.0).is_err());
        let feasible = Disk::new(Point2::new(0.0, 0.0), -1.0);
        assert!(max_cover_disk_constrained(&pts(&[(0.0, 0.0)]), 1.0, feasible).is_err());
    }

    #[test]
    fn pinned_center() {
        let points = pts(&[(0.0, 0.0), (3.0, 0.0), (6.0, 0.0), (-2.0, 1.0)]);
        let c0 = Point2::new(1.0, 0.0);
        let cover = max_cover_disk_constrained(&points, 2.5, Disk::new(c0, 0.0)).unwrap();
        assert_eq!(cover.center, c0);
        assert_eq!(cover.covered, vec![0, 1]);
    }

    #[test]
    fn inactive_constraint_matches_unconstrained() {
        let points = pts(&[(0.0, 0.0), (3.0, 1.0), (2.0, 4.0), (30.0, 30.0), (31.0, 29.0)]);
        let free = max_cover_disk(&points, 3.0).unwrap();
        let wide = Disk::new(Point2::new(0.0, 0.0), 1000.0);
        let constrained = max_cover_disk_constrained(&points, 3.0, wide).unwrap();
        assert_eq!(free.count(), constrained.count());
    }

    #[test]
    fn constraint_forces_the_smaller_cluster() {
        let mut points = Vec::new();
        for i in 0..3 {
            points.push(Point2::new(i as f64, 0.0));
        }
        for i in 0..6 {
            points.push(Point2::new(1000.0 + i as f64, 0.0));
        }
        let feasible = Disk::new(Point2::new(-30.0, 0.0), 25.0);
        let cover = max_cover_disk_constrained(&points, 10.0, feasible).unwrap();
        assert_eq!(cover.covered, vec![0, 1, 2]);
        assert!(cover.center.dist(feasible.center) <= feasible.radius + 1e-9);
    }
}
