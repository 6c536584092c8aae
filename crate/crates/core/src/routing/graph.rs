use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use super::yen::Digraph;
use crate::clustering::Cluster;
use crate::error::{Error, Result};
use crate::geo::{haversine_distance, GeoPoint};
use crate::model::{BusStop, ItineraryDef};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum NodeKey {
    Stop(String),
    Line { stop_id: String, line_code: String },
    Origin,
    Destination,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    Ride { line_code: String },
    Board,
    Alight,
    Transfer { cluster_id: String },
    Access,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub length_m: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TransitGraph {
    nodes: Vec<NodeKey>,
    index: BTreeMap<NodeKey, usize>,
    positions: Vec<GeoPoint>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    pairs: HashSet<(usize, usize)>,
}

impl TransitGraph {
    fn add_node(&mut self, key: NodeKey, position: GeoPoint) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.nodes.len();
        self.index.insert(key.clone(), i);
        self.nodes.push(key);
        self.positions.push(position);
        self.out.push(Vec::new());
        i
    }

    /// Adds an edge unless one already joins the same pair of nodes.
    fn add_edge(&mut self, from: usize, to: usize, kind: EdgeKind, length_m: f64) -> bool {
        if !self.pairs.insert((from, to)) {
            return false;
        }
        self.out[from].push(self.edges.len());
        self.edges.push(Edge { from, to, kind, length_m });
        true
    }

    pub fn nodes(&self) -> &[NodeKey] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, key: &NodeKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn stop_node(&self, stop_id: &str) -> Option<usize> {
        self.node(&NodeKey::Stop(stop_id.to_string()))
    }

    pub fn position(&self, node: usize) -> GeoPoint {
        self.positions[node]
    }

    pub fn count_edges(&self, pred: impl Fn(&EdgeKind) -> bool) -> usize {
        self.edges.iter().filter(|e| pred(&e.kind)).count()
    }
}

impl Digraph for TransitGraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn for_each_out<F: FnMut(usize, usize, f64)>(&self, u: usize, mut f: F) {
        for &e in &self.out[u] {
            let edge = &self.edges[e];
            f(e, edge.to, edge.length_m);
        }
    }

    fn edge_weight(&self, edge: usize) -> f64 {
        self.edges[edge].length_m
    }
}

/// One stop node per stop, one line node per (stop, line), RIDE edges between
/// consecutive itinerary stops and zero-length BOARD/ALIGHT edges.
pub fn build_graph(itineraries: &[ItineraryDef], stops: &BTreeMap<String, BusStop>) -> Result<TransitGraph> {
    let mut g = TransitGraph::default();
    for s in stops.values() {
        g.add_node(NodeKey::Stop(s.stop_id.clone()), s.position);
    }
    let mut sorted: Vec<&ItineraryDef> = itineraries.iter().collect();
    sorted.sort_by(|a, b| (&a.line_code, &a.direction).cmp(&(&b.line_code, &b.direction)));
    for iti in sorted {
        let mut prev: Option<(usize, GeoPoint)> = None;
        for id in iti.stop_ids() {
            let stop = stops.get(id).ok_or_else(|| Error::UnknownStop(id.to_string()))?;
            let stop_node = g.add_node(NodeKey::Stop(id.to_string()), stop.position);
            let line_node = g.add_node(
                NodeKey::Line { stop_id: id.to_string(), line_code: iti.line_code.clone() },
                stop.position,
            );
            g.add_edge(stop_node, line_node, EdgeKind::Board, 0.0);
            g.add_edge(line_node, stop_node, EdgeKind::Alight, 0.0);
            if let Some((from, at)) = prev {
                let length = haversine_distance(at, stop.position);
                if length <= 0.0 {
                    return Err(Error::InvalidItinerary {
                        line_code: iti.line_code.clone(),
                        direction: iti.direction.clone(),
                        message: format!("zero-length ride into stop {id}"),
                    });
                }
                g.add_edge(from, line_node, EdgeKind::Ride { line_code: iti.line_code.clone() }, length);
            }
            prev = Some((line_node, stop.position));
        }
    }
    Ok(g)
}

/// Walking edges both ways between every pair of members of each cluster.
/// Pairs already joined are left alone. Returns the number of edges added.
pub fn add_cluster_transfers(g: &mut TransitGraph, clusters: &[Cluster]) -> usize {
    let mut added = 0;
    for c in clusters {
        let nodes: Vec<usize> = c
            .members
            .iter()
            .filter_map(|m| {
                let n = g.stop_node(m);
                if n.is_none() {
                    log::warn!("cluster {} member {m} is not in the graph", c.cluster_id);
                }
                n
            })
            .collect();
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                let walk = haversine_distance(g.positions[a], g.positions[b]);
                for (from, to) in [(a, b), (b, a)] {
                    if g.add_edge(from, to, EdgeKind::Transfer { cluster_id: c.cluster_id.clone() }, walk) {
                        added += 1;
                    }
                }
            }
        }
    }
    added
}

/// Stops within `radius_m` of `p`, nearest first, ties by stop id.
pub fn nearest_stops(p: GeoPoint, stops: &BTreeMap<String, BusStop>, radius_m: f64) -> Vec<(&BusStop, f64)> {
    let mut near: Vec<(&BusStop, f64)> = stops
        .values()
        .map(|s| (s, haversine_distance(p, s.position)))
        .filter(|(_, d)| *d <= radius_m)
        .collect();
    near.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.stop_id.cmp(&b.0.stop_id)));
    near
}

/// A graph with two extra nodes joined to nearby stops by ACCESS edges. The
/// base graph is shared, not copied.
pub struct AccessOverlay<'g> {
    pub base: &'g TransitGraph,
    pub origin: usize,
    pub destination: usize,
    extra: Vec<Edge>,
    origin_out: Vec<usize>,
    into_destination: Vec<Vec<usize>>,
}

impl<'g> AccessOverlay<'g> {
    pub fn new(base: &'g TransitGraph, origin_access: &[(usize, f64)], destination_access: &[(usize, f64)]) -> Self {
        let n = base.node_count();
        let (origin, destination) = (n, n + 1);
        let mut extra = Vec::new();
        let mut origin_out = Vec::new();
        let mut into_destination = vec![Vec::new(); n];
        for &(stop, walk) in origin_access {
            origin_out.push(base.edges.len() + extra.len());
            extra.push(Edge { from: origin, to: stop, kind: EdgeKind::Access, length_m: walk });
        }
        for &(stop, walk) in destination_access {
            into_destination[stop].push(base.edges.len() + extra.len());
            extra.push(Edge { from: stop, to: destination, kind: EdgeKind::Access, length_m: walk });
        }
        Self { base, origin, destination, extra, origin_out, into_destination }
    }

    pub fn edge(&self, id: usize) -> &Edge {
        let m = self.base.edges.len();
        if id < m {
            &self.base.edges[id]
        } else {
            &self.extra[id - m]
        }
    }

    pub fn node_key(&self, node: usize) -> NodeKey {
        match node {
            n if n == self.origin => NodeKey::Origin,
            n if n == self.destination => NodeKey::Destination,
            n => self.base.nodes[n].clone(),
        }
    }
}

impl Digraph for AccessOverlay<'_> {
    fn node_count(&self) -> usize {
        self.base.node_count() + 2
    }

    fn for_each_out<F: FnMut(usize, usize, f64)>(&self, u: usize, mut f: F) {
        if u == self.origin {
            for &e in &self.origin_out {
                f(e, self.edge(e).to, self.edge(e).length_m);
            }
        } else if u < self.base.node_count() {
            self.base.for_each_out(u, &mut f);
            for &e in &self.into_destination[u] {
                f(e, self.destination, self.edge(e).length_m);
            }
        }
    }

    fn edge_weight(&self, edge: usize) -> f64 {
        self.edge(edge).length_m
    }
}
