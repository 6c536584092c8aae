use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

/// Directed graph with non-negative weights. Edge ids are stable indices.
pub trait Digraph {
    fn node_count(&self) -> usize;
    /// Calls `f(edge_id, target, weight)` for every edge leaving `u`.
    fn for_each_out<F: FnMut(usize, usize, f64)>(&self, u: usize, f: F);
    fn edge_weight(&self, edge: usize) -> f64;
}

/// Plain adjacency-list digraph.
#[derive(Debug, Clone, Default)]
pub struct WeightedDigraph {
    edges: Vec<(usize, usize, f64)>,
    out: Vec<Vec<usize>>,
}

impl WeightedDigraph {
    pub fn new(nodes: usize) -> Self {
        Self { edges: Vec::new(), out: vec![Vec::new(); nodes] }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, weight: f64) -> usize {
        let id = self.edges.len();
        self.edges.push((from, to, weight));
        self.out[from].push(id);
        id
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }
}

impl Digraph for WeightedDigraph {
    fn node_count(&self) -> usize {
        self.out.len()
    }

    fn for_each_out<F: FnMut(usize, usize, f64)>(&self, u: usize, mut f: F) {
        for &e in &self.out[u] {
            let (_, v, w) = self.edges[e];
            f(e, v, w);
        }
    }

    fn edge_weight(&self, edge: usize) -> f64 {
        self.edges[edge].2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    pub cost: f64,
}

impl Path {
    fn key(&self) -> (Cost, &[usize], &[usize]) {
        (Cost(self.cost), &self.nodes, &self.edges)
    }
}

impl Eq for Path {}

impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sum of edge weights in path order.
pub fn path_cost<G: Digraph>(g: &G, edges: &[usize]) -> f64 {
    edges.iter().fold(0.0, |acc, e| acc + g.edge_weight(*e))
}

/// Dijkstra from `source` to `target` avoiding banned nodes and edges.
pub fn shortest_path<G: Digraph>(
    g: &G,
    source: usize,
    target: usize,
    banned_nodes: &[bool],
    banned_edges: &HashSet<usize>,
) -> Option<Path> {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(std::cmp::Reverse((Cost(0.0), source)));
    while let Some(std::cmp::Reverse((Cost(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == target {
            break;
        }
        g.for_each_out(u, |e, v, w| {
            if banned_nodes.get(v).copied().unwrap_or(false) || banned_edges.contains(&e) || done[v] {
                return;
            }
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some((u, e));
                heap.push(std::cmp::Reverse((Cost(nd), v)));
            }
        });
    }
    if !done[target] {
        return None;
    }
    let mut nodes = vec![target];
    let mut edges = Vec::new();
    let mut cur = target;
    while let Some((p, e)) = pred[cur] {
        nodes.push(p);
        edges.push(e);
        cur = p;
    }
    nodes.reverse();
    edges.reverse();
    let cost = path_cost(g, &edges);
    Some(Path { nodes, edges, cost })
}

/// Yen's algorithm: up to `k` loopless paths in ascending cost, ties broken
/// by node sequence.
pub fn yen_k_shortest<G: Digraph>(g: &G, source: usize, target: usize, k: usize) -> Vec<Path> {
    let n = g.node_count();
    if k == 0 || source >= n || target >= n || source == target {
        return Vec::new();
    }
    let no_nodes = vec![false; n];
    let Some(first) = shortest_path(g, source, target, &no_nodes, &HashSet::new()) else {
        return Vec::new();
    };
    let mut accepted = vec![first];
    let mut seen: HashSet<Vec<usize>> = HashSet::from([accepted[0].edges.clone()]);
    let mut candidates: BTreeSet<Path> = BTreeSet::new();
    let mut banned_nodes = vec![false; n];
    while accepted.len() < k {
        let prev = accepted.last().expect("non-empty").clone();
        for i in 0..prev.edges.len() {
            let spur = prev.nodes[i];
            let root_edges = &prev.edges[..i];
            let banned_edges: HashSet<usize> =
                accepted.iter().filter(|p| p.edges.len() > i && p.edges[..i] == *root_edges).map(|p| p.edges[i]).collect();
            banned_nodes.iter_mut().for_each(|b| *b = false);
            for &v in &prev.nodes[..i] {
                banned_nodes[v] = true;
            }
            if let Some(tail) = shortest_path(g, spur, target, &banned_nodes, &banned_edges) {
                let mut edges = root_edges.to_vec();
                edges.extend_from_slice(&tail.edges);
                if seen.contains(&edges) {
                    continue;
                }
                let mut nodes = prev.nodes[..i].to_vec();
                nodes.extend_from_slice(&tail.nodes);
                let cost = path_cost(g, &edges);
                seen.insert(edges.clone());
                candidates.insert(Path { nodes, edges, cost });
            }
        }
        match candidates.pop_first() {
            Some(best) => accepted.push(best),
            None => break,
        }
    }
    accepted
}
