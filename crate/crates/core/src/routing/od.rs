use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{nearest_stops, AccessOverlay, EdgeKind, NodeKey, TransitGraph};
use super::yen::{yen_k_shortest, Path};
use crate::geo::GeoPoint;
use crate::model::BusStop;
use crate::stats::{mean, quantile};

pub const DEFAULT_K: usize = 30;
pub const DEFAULT_OD_RADIUS_M: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdPair {
    pub od_id: String,
    pub origin: GeoPoint,
    pub destination: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteConfig {
    pub k: usize,
    pub search_radius_m: f64,
}

impl Default for RouteConfig {
    fn default() -> Self {
        Self { k: DEFAULT_K, search_radius_m: DEFAULT_OD_RADIUS_M }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub distance_m: f64,
    pub transfers: usize,
    pub access_m: f64,
    pub walk_m: f64,
    pub stops: Vec<String>,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripResult {
    pub feasible: bool,
    /// Minimum-distance path, `None` when infeasible.
    pub chosen: Option<PathSummary>,
    /// All loopless paths found, ascending by distance.
    pub alternatives: Vec<PathSummary>,
}

impl TripResult {
    fn infeasible() -> Self {
        Self { feasible: false, chosen: None, alternatives: Vec::new() }
    }

    pub fn distance_m(&self) -> Option<f64> {
        self.chosen.as_ref().map(|p| p.distance_m)
    }

    pub fn transfers(&self) -> Option<usize> {
        self.chosen.as_ref().map(|p| p.transfers)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdOutcome {
    pub od_id: String,
    pub base: TripResult,
    pub clustered: TripResult,
}

/// Describes a path of the overlay graph. Rides following a boarding form one
/// segment; transfers are the line changes between consecutive segments.
pub fn summarize_path(g: &AccessOverlay<'_>, path: &Path) -> PathSummary {
    let mut lines: Vec<String> = Vec::new();
    let mut boarding = false;
    let (mut access_m, mut walk_m) = (0.0, 0.0);
    for &e in &path.edges {
        let edge = g.edge(e);
        match &edge.kind {
            EdgeKind::Board => boarding = true,
            EdgeKind::Ride { line_code } => {
                if boarding {
                    lines.push(line_code.clone());
                    boarding = false;
                }
            }
            EdgeKind::Access => access_m += edge.length_m,
            EdgeKind::Transfer { .. } => walk_m += edge.length_m,
            EdgeKind::Alight => {}
        }
    }
    lines.dedup();
    let mut stops: Vec<String> = Vec::new();
    for &n in &path.nodes {
        let id = match g.node_key(n) {
            NodeKey::Stop(id) | NodeKey::Line { stop_id: id, .. } => id,
            NodeKey::Origin | NodeKey::Destination => continue,
        };
        if stops.last() != Some(&id) {
            stops.push(id);
        }
    }
    PathSummary { distance_m: path.cost, transfers: lines.len().saturating_sub(1), access_m, walk_m, stops, lines }
}

fn access_nodes(g: &TransitGraph, p: GeoPoint, stops: &BTreeMap<String, BusStop>, radius_m: f64) -> Vec<(usize, f64)> {
    nearest_stops(p, stops, radius_m)
        .into_iter()
        .filter_map(|(s, d)| g.stop_node(&s.stop_id).map(|n| (n, d)))
        .collect()
}

/// Routes one OD pair on one network.
pub fn route_trip(g: &TransitGraph, pair: &OdPair, stops: &BTreeMap<String, BusStop>, cfg: &RouteConfig) -> TripResult {
    let from = access_nodes(g, pair.origin, stops, cfg.search_radius_m);
    let to = access_nodes(g, pair.destination, stops, cfg.search_radius_m);
    if from.is_empty() || to.is_empty() {
        return TripResult::infeasible();
    }
    let overlay = AccessOverlay::new(g, &from, &to);
    let paths = yen_k_shortest(&overlay, overlay.origin, overlay.destination, cfg.k);
    if paths.is_empty() {
        return TripResult::infeasible();
    }
    let alternatives: Vec<PathSummary> = paths.iter().map(|p| summarize_path(&overlay, p)).collect();
    let chosen = alternatives.iter().min_by(|a, b| a.distance_m.total_cmp(&b.distance_m)).cloned();
    TripResult { feasible: true, chosen, alternatives }
}

/// Routes every pair on both networks. Pairs run in parallel.
pub fn evaluate_od(
    pairs: &[OdPair],
    base: &TransitGraph,
    clustered: &TransitGraph,
    stops: &BTreeMap<String, BusStop>,
    cfg: &RouteConfig,
) -> Vec<OdOutcome> {
    pairs
        .par_iter()
        .map(|p| OdOutcome {
            od_id: p.od_id.clone(),
            base: route_trip(base, p, stops, cfg),
            clustered: route_trip(clustered, p, stops, cfg),
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub network: String,
    pub feasible: usize,
    pub infeasible: usize,
    pub mean_distance_m: Option<f64>,
    pub q1_distance_m: Option<f64>,
    pub median_distance_m: Option<f64>,
    pub q3_distance_m: Option<f64>,
    pub mean_transfers: Option<f64>,
    pub q1_transfers: Option<f64>,
    pub median_transfers: Option<f64>,
    pub q3_transfers: Option<f64>,
}

fn summarize_network(name: &str, trips: &[&TripResult]) -> NetworkSummary {
    let d: Vec<f64> = trips.iter().filter_map(|t| t.distance_m()).collect();
    let x: Vec<f64> = trips.iter().filter_map(|t| t.transfers()).map(|t| t as f64).collect();
    NetworkSummary {
        network: name.to_string(),
        feasible: d.len(),
        infeasible: trips.len() - d.len(),
        mean_distance_m: mean(&d),
        q1_distance_m: quantile(&d, 0.25),
        median_distance_m: quantile(&d, 0.5),
        q3_distance_m: quantile(&d, 0.75),
        mean_transfers: mean(&x),
        q1_transfers: quantile(&x, 0.25),
        median_transfers: quantile(&x, 0.5),
        q3_transfers: quantile(&x, 0.75),
    }
}

/// Per-network means and quartiles over feasible trips.
pub fn summarize_od(outcomes: &[OdOutcome]) -> [NetworkSummary; 2] {
    let base: Vec<&TripResult> = outcomes.iter().map(|o| &o.base).collect();
    let clustered: Vec<&TripResult> = outcomes.iter().map(|o| &o.clustered).collect();
    [summarize_network("base", &base), summarize_network("clustered", &clustered)]
}

/// Seeded OD pairs. Each endpoint is a uniformly chosen stop displaced by up
/// to `jitter_m` in a random direction, so endpoint density follows stop
/// density. Points stay inside the stops' bounding box.
pub fn generate_od_pairs(stops: &BTreeMap<String, BusStop>, count: usize, jitter_m: f64, seed: u64) -> Vec<OdPair> {
    let pts: Vec<GeoPoint> = stops.values().map(|s| s.position).collect();
    if pts.is_empty() {
        return Vec::new();
    }
    let (mut lat_lo, mut lat_hi, mut lon_lo, mut lon_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &pts {
        lat_lo = lat_lo.min(p.lat);
        lat_hi = lat_hi.max(p.lat);
        lon_lo = lon_lo.min(p.lon);
        lon_hi = lon_hi.max(p.lon);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let anchor = pts[rng.random_range(0..pts.len())];
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = jitter_m * rng.random::<f64>().sqrt();
        let p = anchor.offset(r * angle.cos(), r * angle.sin());
        GeoPoint::new(p.lat.clamp(lat_lo, lat_hi), p.lon.clamp(lon_lo, lon_hi))
    };
    (0..count)
        .map(|i| {
            let origin = draw(&mut rng);
            let destination = draw(&mut rng);
            OdPair { od_id: format!("OD{:05}", i + 1), origin, destination }
        })
        .collect()
}
