//! Greedy stop clustering into virtual terminals around high-availability
//! centroid candidates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analytics::{daily_average, PassageStore};
use crate::error::{Error, Result};
use crate::geo::haversine_distance;
use crate::model::BusStop;
use crate::stats::{pearson, pearson_p_value};

pub const DEFAULT_CLUSTER_RADIUS_M: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub stop_id: String,
    pub avg_buses: f64,
}

/// Candidates by descending average, ties by ascending stop id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateList(pub Vec<Candidate>);

impl CandidateList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|c| c.stop_id.as_str())
    }
}

pub fn build_candidates(stops: &BTreeSet<String>, averages: &BTreeMap<String, f64>) -> Result<CandidateList> {
    let mut list = stops
        .iter()
        .map(|id| {
            averages
                .get(id)
                .map(|avg| Candidate { stop_id: id.clone(), avg_buses: *avg })
                .ok_or_else(|| Error::UnknownStop(id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    list.sort_by(|a, b| b.avg_buses.total_cmp(&a.avg_buses).then_with(|| a.stop_id.cmp(&b.stop_id)));
    Ok(CandidateList(list))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: String,
    pub centroid_stop_id: String,
    /// Sorted by stop id; always contains the centroid.
    pub members: Vec<String>,
    /// Candidates this cluster removed from the candidate list, sorted.
    /// Every candidate is absorbed by exactly one cluster.
    #[serde(default)]
    pub absorbed: Vec<String>,
    /// Members that also belong to another cluster.
    #[serde(default)]
    pub shared_members: Vec<String>,
    #[serde(default)]
    pub lines_served: Vec<String>,
    #[serde(default)]
    pub avg_buses: f64,
}

pub fn cluster_id(index: usize) -> String {
    format!("C{:03}", index + 1)
}

/// Pops the best remaining candidate as centroid, gathers every stop within
/// `radius_m` of it and removes the gathered candidates. Stops that are not
/// candidates may end up in several clusters.
pub fn cluster_stops(
    candidates: &CandidateList,
    stops: &BTreeMap<String, BusStop>,
    radius_m: f64,
) -> Result<Vec<Cluster>> {
    let mut remaining: Vec<&str> = candidates.ids().collect();
    let mut clusters = Vec::new();
    while !remaining.is_empty() {
        let centroid_id = remaining.remove(0);
        let centroid = stops.get(centroid_id).ok_or_else(|| Error::UnknownStop(centroid_id.to_string()))?;
        let mut members: Vec<String> = stops
            .values()
            .filter(|b| b.stop_id == centroid_id || haversine_distance(centroid.position, b.position) <= radius_m)
            .map(|b| b.stop_id.clone())
            .collect();
        members.sort();
        let mut absorbed = vec![centroid_id.to_string()];
        remaining.retain(|c| {
            let inside = members.binary_search_by(|m| m.as_str().cmp(c)).is_ok();
            if inside {
                absorbed.push(c.to_string());
            }
            !inside
        });
        absorbed.sort();
        clusters.push(Cluster {
            cluster_id: cluster_id(clusters.len()),
            centroid_stop_id: centroid_id.to_string(),
            members,
            absorbed,
            shared_members: Vec::new(),
            lines_served: Vec::new(),
            avg_buses: 0.0,
        });
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &clusters {
        for m in &c.members {
            *seen.entry(m.as_str()).or_default() += 1;
        }
    }
    let shared: BTreeSet<String> = seen.into_iter().filter(|(_, n)| *n > 1).map(|(m, _)| m.to_string()).collect();
    for c in &mut clusters {
        c.shared_members = c.members.iter().filter(|m| shared.contains(*m)).cloned().collect();
    }
    Ok(clusters)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub clusters: usize,
    pub distinct_stops: usize,
    pub total_memberships: usize,
}

pub fn coverage(clusters: &[Cluster]) -> Coverage {
    let distinct: BTreeSet<&str> = clusters.iter().flat_map(|c| c.members.iter().map(String::as_str)).collect();
    Coverage {
        clusters: clusters.len(),
        distinct_stops: distinct.len(),
        total_memberships: clusters.iter().map(|c| c.members.len()).sum(),
    }
}

/// Scatter of line count against average availability over all clusters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterScatter {
    pub points: Vec<(String, usize, f64)>,
    pub r: Option<f64>,
    pub p_value: Option<f64>,
}

/// Fills `lines_served` and `avg_buses` of every cluster from the passages at
/// its members, counted as one stop, and correlates the two.
pub fn cluster_stats(clusters: &mut [Cluster], store: &PassageStore, window_minutes: u32) -> ClusterScatter {
    for c in clusters.iter_mut() {
        let ids: Vec<&str> = c.members.iter().map(String::as_str).collect();
        c.lines_served = store.lines_at(ids.iter().copied()).into_iter().collect();
        c.avg_buses = daily_average(&store.series(&c.cluster_id, &ids, window_minutes));
    }
    let points: Vec<(String, usize, f64)> =
        clusters.iter().map(|c| (c.cluster_id.clone(), c.lines_served.len(), c.avg_buses)).collect();
    let xs: Vec<f64> = points.iter().map(|p| p.1 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.2).collect();
    let r = pearson(&xs, &ys);
    if r.is_none() {
        log::warn!("cluster scatter correlation undefined over {} clusters", points.len());
    }
    let p_value = r.and_then(|r| pearson_p_value(r, points.len()));
    ClusterScatter { points, r, p_value }
}
