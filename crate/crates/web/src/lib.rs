//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Results cross the boundary as flat `f64` arrays so the page needs no
//! serialization layer. Each function documents its record layout.

use wasm_bindgen::prelude::*;

use ituav::channel::{coverage_radius, optimal_altitude};
use ituav::pointprocess::{estimate_cov, sample_thomas, ThomasParams, DEFAULT_RESOLUTION_M};
use ituav::placement::{place_free, place_itethered, place_tethered, Placement};
use ituav::scenario::{sample_anchors, Anchor, Area, ChannelParams, LinkBudget, TetherParams, Ue};
use ituav::seeding::SeedPath;

fn js_err(e: ituav::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Coverage radius against altitude for an urban channel with the given
/// path-loss threshold. Returns `[z0, r0, z1, r1, ...]` for `samples`
/// altitudes evenly spread over `[10, max_altitude_m]`, followed by the
/// optimal `(altitude, radius)` pair.
#[wasm_bindgen]
pub fn coverage_curve(threshold_db: f64, max_altitude_m: f64, samples: usize) -> Vec<f64> {
    let link = LinkBudget::with_threshold(threshold_db);
    let ch = ChannelParams::default();
    let samples = samples.max(2);
    let mut out = Vec::with_capacity(2 * samples + 2);
    for i in 0..samples {
        let z = 10.0 + (max_altitude_m - 10.0) * i as f64 / (samples - 1) as f64;
        out.push(z);
        out.push(coverage_radius(z, &link, &ch).radius);
    }
    let best = optimal_altitude(&link, &ch);
    out.push(best.altitude);
    out.push(best.radius);
    out
}

/// A sampled 3 km x 3 km world the page can query repeatedly.
#[wasm_bindgen]
pub struct World {
    area: Area,
    ues: Vec<Ue>,
    anchors: Vec<Anchor>,
    cov: f64,
}

#[wasm_bindgen]
impl World {
    /// Thomas-clustered users around `n_parents` centers with Gaussian
    /// scatter `sigma_m`, plus `n_anchors` uniform 50 m anchors.
    #[wasm_bindgen(constructor)]
    pub fn new(n_users: usize, n_parents: usize, sigma_m: f64, n_anchors: usize, seed: u64) -> Result<World, JsValue> {
        let area = Area::default();
        let root = SeedPath::new(seed);
        let params = ThomasParams {
            n_parents,
            cluster_sigma: sigma_m,
            n_total: n_users,
        };
        let ues = sample_thomas(&params, area, &mut root.label("users").rng()).map_err(js_err)?;
        let anchors = sample_anchors(n_anchors, area, 50.0, &mut root.label("anchors").rng()).map_err(js_err)?;
        let cov = if ues.len() >= 2 {
            estimate_cov(&ues, area, DEFAULT_RESOLUTION_M).map_err(js_err)?.value
        } else {
            f64::NAN
        };
        Ok(World { area, ues, anchors, cov })
    }

    pub fn side_m(&self) -> f64 {
        self.area.side()
    }

    /// Normalized CoV of the users' Voronoi cell areas.
    pub fn cov(&self) -> f64 {
        self.cov
    }

    /// `[x, y, cluster_id]` per user.
    pub fn users(&self) -> Vec<f64> {
        self.ues
            .iter()
            .flat_map(|u| [u.pos.x, u.pos.y, u.cluster_id.map_or(-1.0, f64::from)])
            .collect()
    }

    /// `[x, y]` per anchor.
    pub fn anchors(&self) -> Vec<f64> {
        self.anchors.iter().flat_map(|a| [a.pos.x, a.pos.y]).collect()
    }

    /// Place one UAV. `system` is `uav`, `tuav` (first anchor) or `ituav`
    /// (first `n_anchors` anchors). Returns
    /// `[x, y, z, anchor_id or -1, covered_count, coverage_radius]`.
    pub fn place(&self, system: &str, tether_m: f64, n_anchors: usize) -> Result<Vec<f64>, JsValue> {
        let (link, ch) = (LinkBudget::default(), ChannelParams::default());
        let tether = TetherParams {
            length_m: tether_m,
            ..TetherParams::default()
        };
        let k = n_anchors.clamp(1, self.anchors.len().max(1));
        let p: Placement = match system {
            "uav" => place_free(&self.ues, &link, &ch),
            "tuav" => place_tethered(&self.ues, &self.anchors[0], tether, &link, &ch),
            "ituav" => place_itethered(&self.ues, &self.anchors[..k], tether, &link, &ch),
            other => return Err(JsValue::from_str(&format!("unknown system `{other}`"))),
        }
        .map_err(js_err)?;
        let radius = coverage_radius(p.pos.z, &link, &ch).radius;
        Ok(vec![
            p.pos.x,
            p.pos.y,
            p.pos.z,
            p.anchor_id.map_or(-1.0, f64::from),
            p.covered_count() as f64,
            radius,
        ])
    }
}
