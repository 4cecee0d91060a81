//! Clustered user populations (Thomas process) and the Voronoi-area
//! coefficient of variation used as the clustering level.
//!
//! The CoV is normalized so that a uniform population scores 1. Cell areas
//! are approximated on a regular grid: each grid cell is assigned to its
//! nearest user, which keeps every cell bounded inside the area.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::scenario::{Area, Ue};
use crate::seeding::{SeedPath, SimRng};

/// Mean raw CoV (std/mean of grid Voronoi areas) of 100 uniform samples of
/// 500 points in a 3 km square at 10 m resolution. Regenerate with
/// `measure_ppp_baseline(500, 100, 10.0, PPP_BASELINE_SEED)`.
pub const PPP_BASELINE: f64 = 0.539_650;
pub const PPP_BASELINE_SEED: u64 = 0x5EED_B45E;

pub const DEFAULT_RESOLUTION_M: f64 = 10.0;
pub const CALIBRATION_DRAWS: usize = 200;
const CALIBRATION_SEED: u64 = 0xCA11_B8A7E;
const CALIBRATION_ITERS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThomasParams {
    pub n_parents: usize,
    pub cluster_sigma: f64,
    pub n_total: usize,
}

impl ThomasParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_parents == 0 {
            return Err(Error::validation("thomas.n_parents", "must be >= 1"));
        }
        if !(self.cluster_sigma >= 0.0) || !self.cluster_sigma.is_finite() {
            return Err(Error::validation("thomas.cluster_sigma", "must be finite and >= 0"));
        }
        if self.n_total == 0 {
            return Err(Error::validation("thomas.n_total", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovEstimate {
    /// Normalized CoV, 1 for a uniform population.
    pub value: f64,
    pub raw_std_over_mean: f64,
    pub n_points: usize,
}

/// Sample exactly `n_total` users: parents uniform in the area, each user
/// attached to a uniformly chosen parent with an isotropic Gaussian offset.
/// Offsets that land outside the area are redrawn.
pub fn sample_thomas(params: &ThomasParams, area: Area, rng: &mut SimRng) -> Result<Vec<Ue>> {
    params.validate()?;
    let parents: Vec<Point2> = (0..params.n_parents)
        .map(|_| area.sample_uniform(rng))
        .collect();
    let offset = Normal::new(0.0, params.cluster_sigma)
        .map_err(|e| Error::validation("thomas.cluster_sigma", e.to_string()))?;
    let ues = (0..params.n_total)
        .map(|i| {
            let cluster = rng.random_range(0..params.n_parents);
            let parent = parents[cluster];
            let pos = loop {
                let p = Point2::new(
                    parent.x + offset.sample(rng),
                    parent.y + offset.sample(rng),
                );
                if area.contains(p) {
                    break p;
                }
            };
            Ue {
                id: i as u32,
                pos,
                cluster_id: Some(cluster as u32),
            }
        })
        .collect();
    Ok(ues)
}

/// Uniform (binomial) population of `n` users. Each user is its own cluster.
pub fn sample_uniform(n: usize, area: Area, rng: &mut SimRng) -> Vec<Ue> {
    (0..n)
        .map(|i| Ue {
            id: i as u32,
            pos: area.sample_uniform(rng),
            cluster_id: Some(i as u32),
        })
        .collect()
}

/// Population at clustering level `cov`: uniform for `cov <= 1`, otherwise a
/// Thomas process calibrated to `cov`.
pub fn sample_population(cov: f64, n: usize, area: Area, rng: &mut SimRng) -> Result<Vec<Ue>> {
    if cov <= 1.0 {
        return Ok(sample_uniform(n, area, rng));
    }
    let params = calibrated(cov, n, area)?;
    sample_thomas(&params, area, rng)
}

/// Calibration with the fixed library seed, memoized per (cov, n, area).
pub fn calibrated(cov: f64, n: usize, area: Area) -> Result<ThomasParams> {
    type Key = (u64, usize, u64, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, ThomasParams>>> = OnceLock::new();
    let key = (cov.to_bits(), n, area.width_m.to_bits(), area.height_m.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.lock().expect("calibration cache poisoned").get(&key) {
        return Ok(*p);
    }
    let params = calibrate_cov(cov, n, area, &mut SeedPath::new(CALIBRATION_SEED).rng())?;
    cache
        .lock()
        .expect("calibration cache poisoned")
        .insert(key, params);
    Ok(params)
}

/// Nearest-user labeling of one grid row.
///
/// Along a row at height `y`, the squared distance to user `s` is the
/// parabola `(x - s.x)^2 + (y - s.y)^2`. All parabolas share the same shape,
/// so their lower envelope is built in linear time from the users sorted by
/// `x`, and the cells are then read off left to right.
struct RowLabeler<'a> {
    points: &'a [Point2],
    ids: &'a [u32],
    /// Point indices sorted by (x, id).
    order: Vec<usize>,
}

impl<'a> RowLabeler<'a> {
    fn new(points: &'a [Point2], ids: &'a [u32]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[a]
                .x
                .total_cmp(&points[b].x)
                .then(ids[a].cmp(&ids[b]))
        });
        RowLabeler { points, ids, order }
    }

    fn key(&self, i: usize, q: Point2) -> (f64, u32) {
        (self.points[i].dist2(q), self.ids[i])
    }

    /// Owner index of each cell center `xs` (ascending) at height `y`.
    fn label_row(&self, y: f64, xs: &[f64], out: &mut Vec<usize>) {
        let offset = |i: usize| {
            let dy = y - self.points[i].y;
            dy * dy
        };
        // Among users sharing an x, only the nearest (then lowest id) matters.
        let mut sites: Vec<usize> = Vec::with_capacity(self.order.len());
        for &i in &self.order {
            if let Some(&last) = sites.last() {
                if self.points[last].x == self.points[i].x {
                    if (offset(i), self.ids[i]) < (offset(last), self.ids[last]) {
                        *sites.last_mut().expect("non-empty") = i;
                    }
                    continue;
                }
            }
            sites.push(i);
        }

        let height = |i: usize| {
            let x = self.points[i].x;
            offset(i) + x * x
        };
        let meet = |p: usize, q: usize| {
            (height(q) - height(p)) / (2.0 * (self.points[q].x - self.points[p].x))
        };
        let mut hull: Vec<usize> = Vec::with_capacity(sites.len());
        let mut starts: Vec<f64> = Vec::with_capacity(sites.len());
        for &q in &sites {
            loop {
                match hull.last() {
                    None => {
                        hull.push(q);
                        starts.push(f64::NEG_INFINITY);
                        break;
                    }
                    Some(&top) => {
                        let s = meet(top, q);
                        if s <= *starts.last().expect("paired with hull") {
                            hull.pop();
                            starts.pop();
                        } else {
                            hull.push(q);
                            starts.push(s);
                            break;
                        }
                    }
                }
            }
        }

        out.clear();
        let mut k = 0;
        for &x in xs {
            while k + 1 < hull.len() && starts[k + 1] < x {
                k += 1;
            }
            // Settle rounding at breakpoints with the exact (distance, id) order.
            let q = Point2::new(x, y);
            let mut owner = hull[k];
            for j in [k.wrapping_sub(1), k + 1] {
                if let Some(&cand) = hull.get(j) {
                    if self.key(cand, q) < self.key(owner, q) {
                        owner = cand;
                    }
                }
            }
            out.push(owner);
        }
    }
}

/// Grid-approximated Voronoi cell areas (m^2), in input order.
pub fn voronoi_cell_areas(ues: &[Ue], area: Area, resolution: f64) -> Result<Vec<f64>> {
    if ues.is_empty() {
        return Err(Error::precondition("voronoi_cell_areas needs at least one user"));
    }
    if !(resolution > 0.0) {
        return Err(Error::validation("resolution", "must be > 0"));
    }
    let points: Vec<Point2> = ues.iter().map(|u| u.pos).collect();
    let ids: Vec<u32> = ues.iter().map(|u| u.id).collect();
    let labeler = RowLabeler::new(&points, &ids);
    let nx = (area.width_m / resolution).ceil() as usize;
    let ny = (area.height_m / resolution).ceil() as usize;
    let widths: Vec<f64> = (0..nx)
        .map(|i| (area.width_m - i as f64 * resolution).min(resolution))
        .collect();
    let xs: Vec<f64> = (0..nx)
        .map(|i| i as f64 * resolution + widths[i] / 2.0)
        .collect();
    let mut areas = vec![0.0; ues.len()];
    let mut owners = Vec::with_capacity(nx);
    for j in 0..ny {
        let y0 = j as f64 * resolution;
        let h = (area.height_m - y0).min(resolution);
        labeler.label_row(y0 + h / 2.0, &xs, &mut owners);
        for (owner, w) in owners.iter().zip(&widths) {
            areas[*owner] += w * h;
        }
    }
    Ok(areas)
}

fn std_over_mean(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if mean > 0.0 {
        var.sqrt() / mean
    } else {
        0.0
    }
}

/// Clustering level of a population from its grid Voronoi areas.
pub fn estimate_cov(ues: &[Ue], area: Area, resolution: f64) -> Result<CovEstimate> {
    if ues.len() < 2 {
        return Err(Error::precondition("estimate_cov needs at least 2 users"));
    }
    let raw = std_over_mean(&voronoi_cell_areas(ues, area, resolution)?);
    Ok(CovEstimate {
        value: raw / PPP_BASELINE,
        raw_std_over_mean: raw,
        n_points: ues.len(),
    })
}

/// Mean raw CoV of `n_seeds` uniform samples of `n` points in a 3 km square.
pub fn measure_ppp_baseline(n: usize, n_seeds: usize, resolution: f64, seed: u64) -> f64 {
    let area = Area::default();
    let root = SeedPath::new(seed);
    let sum: f64 = (0..n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let ues = sample_uniform(n, area, &mut root.index(s).rng());
            std_over_mean(&voronoi_cell_areas(&ues, area, resolution).expect("n >= 1"))
        })
        .sum();
    sum / n_seeds as f64
}

fn default_parent_count(n_total: usize) -> usize {
    (n_total / 50).max(2)
}

/// Mean normalized CoV of `draws` realizations, all from the same seeds so
/// that the curve over `sigma` is smooth.
fn mean_cov(n_parents: usize, sigma: f64, n_total: usize, area: Area, seeds: &[u64]) -> f64 {
    let params = ThomasParams {
        n_parents,
        cluster_sigma: sigma,
        n_total,
    };
    let sum: f64 = seeds
        .par_iter()
        .map(|&s| {
            let ues = sample_thomas(&params, area, &mut crate::seeding::rng_from_seed(s))
                .expect("validated params");
            estimate_cov(&ues, area, DEFAULT_RESOLUTION_M)
                .expect("n_total >= 2")
                .value
        })
        .sum();
    sum / seeds.len() as f64
}

/// Find Thomas parameters whose realizations reach `target_cov` on average.
///
/// Bisects `cluster_sigma` over `[1 m, area side]` in log scale with the
/// parent count fixed at `max(2, n_total / 50)`. If the target lies above
/// what that parent count can reach even at `sigma = 1 m`, the parent count
/// is halved (down to 1) and the search repeated.
pub fn calibrate_cov(
    target_cov: f64,
    n_total: usize,
    area: Area,
    rng: &mut SimRng,
) -> Result<ThomasParams> {
    if !(target_cov >= 1.0) || !target_cov.is_finite() {
        return Err(Error::precondition(format!(
            "target CoV {target_cov} is below the uniform baseline of 1"
        )));
    }
    if n_total < 2 {
        return Err(Error::precondition("calibration needs n_total >= 2"));
    }
    let seeds: Vec<u64> = (0..CALIBRATION_DRAWS).map(|_| rng.random()).collect();
    let lo_sigma = 1.0_f64;
    let hi_sigma = area.side();

    let mut n_parents = default_parent_count(n_total);
    loop {
        let cov_tight = mean_cov(n_parents, lo_sigma, n_total, area, &seeds);
        if cov_tight >= target_cov {
            break;
        }
        if n_parents == 1 {
            return Err(Error::Calibration(format!(
                "target CoV {target_cov} exceeds the reachable maximum {cov_tight:.3}"
            )));
        }
        n_parents /= 2;
    }

    let cov_loose = mean_cov(n_parents, hi_sigma, n_total, area, &seeds);
    let params = |sigma| ThomasParams {
        n_parents,
        cluster_sigma: sigma,
        n_total,
    };
    if cov_loose >= target_cov {
        // Even the widest scatter is at least as clustered as requested.
        return Ok(params(hi_sigma));
    }

    let (mut lo, mut hi) = (lo_sigma.ln(), hi_sigma.ln());
    let mut best = (f64::INFINITY, hi_sigma);
    for _ in 0..CALIBRATION_ITERS {
        let mid = 0.5 * (lo + hi);
        let sigma = mid.exp();
        let cov = mean_cov(n_parents, sigma, n_total, area, &seeds);
        let err = (cov - target_cov).abs() / target_cov;
        if err < best.0 {
            best = (err, sigma);
        }
        if cov > target_cov {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 2e-3 {
            break;
        }
    }
    if best.0 > 0.1 {
        return Err(Error::Calibration(format!(
            "closest mean CoV is {:.1}% away from target {target_cov}",
            best.0 * 100.0
        )));
    }
    Ok(params(best.1))
}
