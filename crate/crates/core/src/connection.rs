//! Discrete metric connection between adjacent tangent frames.
//!
//! For an edge `(i, j)` the connection `R_{j,i}` is the orthogonal `d × d`
//! matrix minimizing `‖Tᵢ − Tⱼ R‖_F`. It maps coordinates expressed in frame
//! `i` to coordinates in frame `j`, and `R_{i,j} = R_{j,i}ᵗ`. Frames from SVD
//! carry arbitrary orientation, so the connection ranges over all of O(d)
//! rather than SO(d).

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};
use crate::graph::ProximityGraph;
use crate::matrix::PointSet;
use crate::par;
use crate::svd::svd;
use crate::tangent::TangentFrameSet;

/// Frames whose cross-Gram matrix has a singular value below this are flagged:
/// some direction of one tangent space is nearly normal to the other.
pub const ILL_CONDITIONED_SIGMA: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct Connection {
    /// `R_{j,i}`, mapping frame-`i` coordinates into frame `j`.
    pub r: DMatrix<f64>,
    /// Smallest singular value of `TᵢᵗTⱼ`, i.e. the cosine of the largest
    /// principal angle between the two tangent spaces.
    pub min_singular: f64,
}

impl Connection {
    pub fn is_ill_conditioned(&self) -> bool {
        self.min_singular < ILL_CONDITIONED_SIGMA
    }
}

/// `R_{j,i} = V Uᵗ` where `Tᵢᵗ Tⱼ = U Σ Vᵗ`.
pub fn discrete_connection(ti: DMatrixView<'_, f64>, tj: DMatrixView<'_, f64>) -> Connection {
    assert_eq!(ti.shape(), tj.shape(), "frames must have equal shape");
    let cross = ti.transpose() * tj;
    let s = svd(&cross);
    let min_singular = s.singular_values.last().copied().unwrap_or(0.0);
    Connection {
        r: &s.v * s.u.transpose(),
        min_singular,
    }
}

/// An edge whose adjacent frames are nearly orthogonal subspaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IllConditionedEdge {
    pub i: usize,
    pub j: usize,
    pub min_singular: f64,
}

/// Connections and projected edge vectors for every edge of a graph.
///
/// One connection matrix is held per undirected edge `(a, b)` with `a < b`,
/// namely `R_{a,b}`; the opposite direction is its transpose. Every directed
/// edge `i -> j` additionally keeps `Tᵢᵗ (xⱼ − xᵢ)`, the edge projected onto
/// the tangent frame at its tail.
#[derive(Debug, Clone)]
pub struct ConnectionCache<'g> {
    graph: &'g ProximityGraph,
    d: usize,
    /// Undirected edge id for each directed adjacency slot.
    slot_edge: Vec<usize>,
    /// Row-major `d × d` blocks, one per undirected edge.
    matrices: Vec<f64>,
    /// `d`-vectors, one per directed slot.
    projections: Vec<f64>,
    pub ill_conditioned: Vec<IllConditionedEdge>,
}

/// `R_{q,r}` for one step of a path, borrowed from the cache.
#[derive(Debug, Clone, Copy)]
pub struct StepConnection<'a> {
    block: &'a [f64],
    transposed: bool,
    d: usize,
}

impl StepConnection<'_> {
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        if self.transposed {
            self.block[b * self.d + a]
        } else {
            self.block[a * self.d + b]
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |a, b| self.get(a, b))
    }
}

impl<'g> ConnectionCache<'g> {
    pub fn build(points: &PointSet, frames: &TangentFrameSet, graph: &'g ProximityGraph) -> Result<Self> {
        let n = graph.vertex_count();
        if frames.len() != n || points.len() != n {
            return Err(Error::InvalidParam(
                "points, frames and graph must cover the same vertices".into(),
            ));
        }
        let d = frames.intrinsic_dim();

        let edges: Vec<(usize, usize)> = graph.edges().map(|(a, b, _)| (a, b)).collect();
        let mut edge_id = std::collections::HashMap::with_capacity(edges.len());
        for (id, &e) in edges.iter().enumerate() {
            edge_id.insert(e, id);
        }
        let mut slot_edge = vec![0usize; graph.slot_count()];
        for i in 0..n {
            for (slot, &j) in graph.slot_range(i).zip(graph.neighbors(i)) {
                slot_edge[slot] = edge_id[&(i.min(j), i.max(j))];
            }
        }

        let conns = par::map_indices(edges.len(), |e| {
            let (a, b) = edges[e];
            // discrete_connection(T_b, T_a) is R_{a,b}.
            discrete_connection(frames.frame(b), frames.frame(a))
        });
        let mut matrices = Vec::with_capacity(edges.len() * d * d);
        let mut ill_conditioned = Vec::new();
        for (c, &(a, b)) in conns.iter().zip(&edges) {
            for row in 0..d {
                for col in 0..d {
                    matrices.push(c.r[(row, col)]);
                }
            }
            if c.is_ill_conditioned() {
                ill_conditioned.push(IllConditionedEdge {
                    i: a,
                    j: b,
                    min_singular: c.min_singular,
                });
            }
        }

        let per_vertex: Vec<Vec<f64>> = par::map_indices(n, |i| {
            let x = points.point(i);
            let mut out = Vec::with_capacity(graph.degree(i) * d);
            let mut e = vec![0.0; points.dim()];
            for &j in graph.neighbors(i) {
                for ((ek, &xj), &xi) in e.iter_mut().zip(points.point(j)).zip(x) {
                    *ek = xj - xi;
                }
                out.extend(frames.project(i, &e));
            }
            out
        });
        let projections = per_vertex.concat();

        Ok(Self {
            graph,
            d,
            slot_edge,
            matrices,
            projections,
            ill_conditioned,
        })
    }

    pub fn graph(&self) -> &'g ProximityGraph {
        self.graph
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.d
    }

    /// `R_{i,j}`, carrying frame-`j` coordinates into frame `i`.
    pub fn step(&self, i: usize, j: usize) -> Option<StepConnection<'_>> {
        let slot = self.graph.edge_slot(i, j)?;
        Some(self.step_at_slot(slot, i > j))
    }

    #[inline]
    fn step_at_slot(&self, slot: usize, transposed: bool) -> StepConnection<'_> {
        let id = self.slot_edge[slot];
        let dd = self.d * self.d;
        StepConnection {
            block: &self.matrices[id * dd..(id + 1) * dd],
            transposed,
            d: self.d,
        }
    }

    /// `R_{i,j}` as an owned matrix.
    pub fn lookup(&self, i: usize, j: usize) -> Option<DMatrix<f64>> {
        self.step(i, j).map(|s| s.to_matrix())
    }

    /// `Tᵢᵗ (xⱼ − xᵢ)` for the edge `i -> j`.
    pub fn projection(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.graph
            .edge_slot(i, j)
            .map(|s| &self.projections[s * self.d..(s + 1) * self.d])
    }

    /// Connection, projected edge and ambient length for the edge `i -> j`.
    #[inline]
    pub fn edge(&self, i: usize, j: usize) -> Option<(StepConnection<'_>, &[f64], f64)> {
        let slot = self.graph.edge_slot(i, j)?;
        let proj = &self.projections[slot * self.d..(slot + 1) * self.d];
        let weight = self.graph.neighbor_weights(i)[slot - self.graph.slot_range(i).start];
        Some((self.step_at_slot(slot, i > j), proj, weight))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_knn_graph, KnnRule};
    use crate::rng::{random_orthogonal, seeded};
    use crate::tangent::estimate_frames;
    use proptest::prelude::*;
    use rand::Rng;

    fn orthonormal(dim: usize, d: usize, seed: u64) -> DMatrix<f64> {
        random_orthogonal(dim, &mut seeded(seed)).columns(0, d).into_owned()
    }

    fn objective(ti: &DMatrix<f64>, tj: &DMatrix<f64>, r: &DMatrix<f64>) -> f64 {
        (ti - tj * r).norm_squared()
    }

    fn max_abs(m: DMatrix<f64>) -> f64 {
        m.abs().max()
    }

    #[test]
    fn identical_frames_give_identity() {
        let t = orthonormal(5, 3, 1);
        let c = discrete_connection(t.as_view(), t.as_view());
        assert!(max_abs(c.r - DMatrix::identity(3, 3)) <= 1e-12);
        assert!((c.min_singular - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rotated_basis_is_recovered() {
        let ti = orthonormal(6, 3, 2);
        let q = random_orthogonal(3, &mut seeded(9));
        let tj = &ti * &q;
        let c = discrete_connection(ti.as_view(), tj.as_view());
        assert!(max_abs(&c.r - q.transpose()) <= 1e-10);
        assert!((&ti - &tj * &c.r).norm() <= 1e-9);
    }

    #[test]
    fn reflected_basis_is_recovered() {
        let ti = orthonormal(4, 2, 3);
        let flip = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let tj = &ti * &flip;
        let c = discrete_connection(ti.as_view(), tj.as_view());
        assert!(max_abs(&c.r - &flip) <= 1e-12);
        assert!((c.r.determinant() + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn nearly_perpendicular_frames_are_flagged() {
        let ti = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let tj = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(discrete_connection(ti.as_view(), tj.as_view()).is_ill_conditioned());
    }

    /// Random-search oracle over O(d): sample Haar matrices and keep the best.
    fn best_random_objective(ti: &DMatrix<f64>, tj: &DMatrix<f64>, samples: usize, seed: u64) -> f64 {
        let d = ti.ncols();
        let mut rng = seeded(seed);
        (0..samples)
            .map(|_| objective(ti, tj, &random_orthogonal(d, &mut rng)))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn beats_random_orthogonal_candidates() {
        for (d, seed) in [(2usize, 10u64), (2, 11), (3, 12)] {
            let ti = orthonormal(5, d, seed);
            // A nearby frame: perturb, then re-orthonormalize.
            let mut rng = seeded(seed + 100);
            let noise = DMatrix::from_fn(5, d, |_, _| 0.1 * (rng.random::<f64>() - 0.5));
            let tj = (&ti + noise).qr().q();
            let c = discrete_connection(ti.as_view(), tj.as_view());
            let ours = objective(&ti, &tj, &c.r);
            let best = best_random_objective(&ti, &tj, 10_000, seed);
            assert!(ours <= best + 1e-9, "d={d}: {ours} vs {best}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn connection_is_orthogonal_and_inverse_symmetric(seed_i in 0u64..1000, seed_j in 1000u64..2000, d in 1usize..4) {
            let ti = orthonormal(6, d, seed_i);
            let tj = orthonormal(6, d, seed_j);
            let rji = discrete_connection(ti.as_view(), tj.as_view()).r;
            let rij = discrete_connection(tj.as_view(), ti.as_view()).r;
            let eye = DMatrix::identity(d, d);
            prop_assert!(max_abs(rji.transpose() * &rji - &eye) <= 1e-10);
            prop_assert!(max_abs(&rij - rji.transpose()) <= 1e-10);
            prop_assert!((rji.determinant().abs() - 1.0).abs() <= 1e-10);
            // Metric preservation: lengths survive transport.
            let mut rng = seeded(seed_i ^ seed_j);
            let v = nalgebra::DVector::from_fn(d, |_, _| rng.random::<f64>() - 0.5);
            prop_assert!(((&rji * &v).norm() - v.norm()).abs() <= 1e-12);
        }
    }

    #[test]
    fn cache_on_flat_data_aligns_perfectly() {
        let mut rng = seeded(4);
        let rot = random_orthogonal(5, &mut seeded(5));
        let mut data = Vec::new();
        for _ in 0..150 {
            let local = nalgebra::DVector::from_vec(vec![rng.random(), rng.random(), 0.0, 0.0, 0.0]);
            data.extend((&rot * local).iter().copied());
        }
        let pts = PointSet::new(5, data).unwrap();
        let g = build_knn_graph(&pts, 8, KnnRule::Union).unwrap();
        let frames = estimate_frames(&pts, &g, 2, 8).unwrap();
        let cache = ConnectionCache::build(&pts, &frames, &g).unwrap();
        assert!(cache.ill_conditioned.is_empty());
        let eye = DMatrix::identity(2, 2);
        for (i, j, _) in g.edges() {
            // lookup(j, i) = R_{j,i} aligns T_i onto T_j R_{j,i}.
            let rji = cache.lookup(j, i).unwrap();
            let resid = (frames.frame(i) - frames.frame(j) * &rji).norm();
            assert!(resid <= 1e-8, "edge {i}-{j}: {resid}");
            let rij = cache.lookup(i, j).unwrap();
            assert!(max_abs(&rij * &rji - &eye) <= 1e-10);
        }
    }

    #[test]
    fn cache_matches_direct_recomputation() {
        let sphere = crate::tangent::tests_support::fibonacci_sphere(300);
        let g = build_knn_graph(&sphere, 8, KnnRule::Union).unwrap();
        let frames = estimate_frames(&sphere, &g, 2, 8).unwrap();
        let cache = ConnectionCache::build(&sphere, &frames, &g).unwrap();
        for i in 0..sphere.len() {
            for &j in g.neighbors(i) {
                let direct = discrete_connection(frames.frame(j), frames.frame(i)).r;
                assert!(max_abs(cache.lookup(i, j).unwrap() - direct) <= 1e-12);
                let e: Vec<f64> = sphere.point(j).iter().zip(sphere.point(i)).map(|(a, b)| a - b).collect();
                let p = frames.project(i, &e);
                assert_eq!(cache.projection(i, j).unwrap(), p.as_slice());
                let (_, proj, w) = cache.edge(i, j).unwrap();
                assert_eq!(proj, p.as_slice());
                assert_eq!(Some(w), g.weight(i, j));
            }
        }
        assert!(cache.lookup(0, 0).is_none());
    }
}
