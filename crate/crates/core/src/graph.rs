//! Proximity graphs over point sets and the shortest-path machinery shared by
//! Isomap and parallel transport unfolding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::matrix::{squared_euclidean, PointSet};
use crate::par;

/// How directed k-nearest-neighbor relations become undirected edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnnRule {
    /// Edge when either endpoint is among the other's k nearest.
    #[default]
    Union,
    /// Edge only when both endpoints list each other.
    Mutual,
}

/// Undirected weighted graph in compressed adjacency form. Neighbor lists are
/// sorted by vertex index and both directions of every edge carry the same
/// weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl ProximityGraph {
    /// Builds a graph from undirected edges. Each edge may be listed once in
    /// either orientation; self-loops, repeated edges and non-positive or
    /// non-finite weights are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParam(format!("edge ({a},{b}) out of range for {n} vertices")));
            }
            if a == b {
                return Err(Error::InvalidParam(format!("self-loop at vertex {a}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidParam(format!("edge ({a},{b}) has weight {w}")));
            }
            lists[a].push((b, w));
            lists[b].push((a, w));
        }
        for (i, list) in lists.iter_mut().enumerate() {
            list.sort_by_key(|&(j, _)| j);
            if let Some(win) = list.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidParam(format!("edge ({i},{}) listed twice", win[0].0)));
            }
        }
        Ok(Self::from_sorted_lists(lists))
    }

    fn from_sorted_lists(lists: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let total: usize = lists.iter().map(Vec::len).sum();
        let mut targets = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        offsets.push(0);
        for list in lists {
            for (j, w) in list {
                targets.push(j);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        Self {
            offsets,
            targets,
            weights,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn neighbor_weights(&self, i: usize) -> &[f64] {
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn adjacency(&self, i: usize) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        self.neighbors(i)
            .iter()
            .copied()
            .zip(self.neighbor_weights(i).iter().copied())
    }

    /// Global index of the directed edge `i -> j` in the adjacency arrays.
    pub fn edge_slot(&self, i: usize, j: usize) -> Option<usize> {
        self.neighbors(i)
            .binary_search(&j)
            .ok()
            .map(|k| self.offsets[i] + k)
    }

    /// Total number of directed edge slots (twice the edge count).
    pub fn slot_count(&self) -> usize {
        self.targets.len()
    }

    pub fn slot_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.edge_slot(i, j).map(|s| self.weights[s])
    }

    /// Undirected edges as `(i, j, weight)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.vertex_count()).flat_map(move |i| {
            self.adjacency(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// Lazily settles vertices in Dijkstra order starting from `source`.
    pub fn settle_from(&self, source: usize) -> Settlements<'_> {
        Settlements::new(self, source)
    }
}

/// Edge weight between two points, computed in a fixed argument order so
/// both directions agree bit for bit.
fn edge_length(points: &PointSet, i: usize, j: usize) -> f64 {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    squared_euclidean(points.point(a), points.point(b)).sqrt()
}

fn check_duplicates(points: &PointSet) -> Result<()> {
    let n = points.len();
    let hits = par::map_indices(n, |i| {
        (i + 1..n).find(|&j| points.point(i) == points.point(j))
    });
    match hits.iter().enumerate().find_map(|(i, h)| h.map(|j| (i, j))) {
        Some((first, second)) => Err(Error::DuplicatePoints { first, second }),
        None => Ok(()),
    }
}

/// Connects each point to its `k` Euclidean-nearest neighbors. Distance ties
/// are resolved toward the smaller index.
pub fn build_knn_graph(points: &PointSet, k: usize, rule: KnnRule) -> Result<ProximityGraph> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParam(format!(
            "k = {k} must satisfy 1 <= k < n = {n}"
        )));
    }
    check_duplicates(points)?;

    let nearest: Vec<Vec<usize>> = par::map_indices(n, |i| {
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (edge_length(points, i, j), j))
            .collect();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        cand.select_nth_unstable_by(k - 1, by_dist);
        let mut ids: Vec<usize> = cand[..k].iter().map(|c| c.1).collect();
        ids.sort_unstable();
        ids
    });

    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, nn) in nearest.iter().enumerate() {
        for &j in nn {
            match rule {
                KnnRule::Union => {
                    lists[i].push(j);
                    lists[j].push(i);
                }
                KnnRule::Mutual => {
                    if nearest[j].binary_search(&i).is_ok() {
                        lists[i].push(j);
                    }
                }
            }
        }
    }
    let lists = lists
        .into_iter()
        .enumerate()
        .map(|(i, mut l)| {
            l.sort_unstable();
            l.dedup();
            l.into_iter().map(|j| (j, edge_length(points, i, j))).collect()
        })
        .collect();
    Ok(ProximityGraph::from_sorted_lists(lists))
}

/// Connects every pair closer than `eps`. Also returns the vertices left
/// without any edge.
pub fn build_eps_graph(points: &PointSet, eps: f64) -> Result<(ProximityGraph, Vec<usize>)> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParam(format!("eps = {eps} must be positive")));
    }
    check_duplicates(points)?;
    let n = points.len();
    let lists: Vec<Vec<(usize, f64)>> = par::map_indices(n, |i| {
        (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, edge_length(points, i, j)))
            .filter(|&(_, w)| w < eps)
            .collect()
    });
    let isolated = lists
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_empty())
        .map(|(i, _)| i)
        .collect();
    Ok((ProximityGraph::from_sorted_lists(lists), isolated))
}

/// Connected components, each sorted, ordered by their smallest vertex.
pub fn connected_components(g: &ProximityGraph) -> Vec<Vec<usize>> {
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &u in g.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// Fails with the component sizes when the graph is not connected.
pub fn ensure_connected(g: &ProximityGraph) -> Result<()> {
    let comps = connected_components(g);
    if comps.len() > 1 {
        return Err(Error::Disconnected {
            sizes: comps.iter().map(Vec::len).collect(),
        });
    }
    Ok(())
}

/// A vertex leaving the Dijkstra frontier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settled {
    pub vertex: usize,
    pub dist: f64,
    pub pred: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Frontier {
    dist: f64,
    vertex: usize,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Reversed so the max-heap pops the closest vertex, smallest index first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra's algorithm as an iterator over settled vertices.
///
/// Equal-length paths prefer the smaller predecessor index, and equal
/// distances settle the smaller vertex first, so the settlement order and the
/// predecessor tree are fully deterministic.
pub struct Settlements<'g> {
    graph: &'g ProximityGraph,
    source: usize,
    dist: Vec<f64>,
    pred: Vec<Option<usize>>,
    settled: Vec<bool>,
    heap: BinaryHeap<Frontier>,
    order: Vec<usize>,
}

impl<'g> Settlements<'g> {
    fn new(graph: &'g ProximityGraph, source: usize) -> Self {
        let n = graph.vertex_count();
        assert!(source < n, "source {source} out of range for {n} vertices");
        let mut dist = vec![f64::INFINITY; n];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Frontier {
            dist: 0.0,
            vertex: source,
        });
        Self {
            graph,
            source,
            dist,
            pred: vec![None; n],
            settled: vec![false; n],
            heap,
            order: Vec::with_capacity(n),
        }
    }

    /// Runs to exhaustion and returns the full tree.
    pub fn into_tree(mut self) -> ShortestPathTree {
        while self.next().is_some() {}
        ShortestPathTree {
            source: self.source,
            dist: self.dist,
            pred: self.pred,
            order: self.order,
        }
    }
}

impl Iterator for Settlements<'_> {
    type Item = Settled;

    fn next(&mut self) -> Option<Settled> {
        while let Some(Frontier { dist, vertex: u }) = self.heap.pop() {
            if self.settled[u] || dist > self.dist[u] {
                continue;
            }
            self.settled[u] = true;
            self.order.push(u);
            for (v, w) in self.graph.adjacency(u) {
                if self.settled[v] {
                    continue;
                }
                let nd = dist + w;
                if nd < self.dist[v] {
                    self.dist[v] = nd;
                    self.pred[v] = Some(u);
                    self.heap.push(Frontier { dist: nd, vertex: v });
                } else if nd == self.dist[v] && self.pred[v].is_some_and(|p| u < p) {
                    self.pred[v] = Some(u);
                }
            }
            return Some(Settled {
                vertex: u,
                dist,
                pred: self.pred[u],
            });
        }
        None
    }
}

/// Result of a full single-source run. Unreached vertices have infinite
/// distance and no predecessor.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathTree {
    pub source: usize,
    pub dist: Vec<f64>,
    pub pred: Vec<Option<usize>>,
    /// Vertices in the order they were settled, starting with the source.
    pub order: Vec<usize>,
}

impl ShortestPathTree {
    /// Vertex sequence from the source to `target`, inclusive.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut v = target;
        while let Some(p) = self.pred[v] {
            path.push(p);
            v = p;
        }
        path.reverse();
        Some(path)
    }

    /// Number of edges on the shortest path to each vertex.
    pub fn hop_counts(&self) -> Vec<Option<usize>> {
        let mut hops = vec![None; self.dist.len()];
        for &v in &self.order {
            hops[v] = Some(match self.pred[v] {
                Some(p) => hops[p].expect("predecessor settled first") + 1,
                None => 0,
            });
        }
        hops
    }
}

pub fn dijkstra(g: &ProximityGraph, source: usize) -> ShortestPathTree {
    g.settle_from(source).into_tree()
}

/// The `count` vertices closest to `i` in graph distance, excluding `i`,
/// nearest first. Returns fewer when the component of `i` is smaller.
pub fn geodesic_knn(g: &ProximityGraph, i: usize, count: usize) -> Vec<(usize, f64)> {
    g.settle_from(i)
        .skip(1)
        .take(count)
        .map(|s| (s.vertex, s.dist))
        .collect()
}
