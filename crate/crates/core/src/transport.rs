//! Geodesic distances by unfolding graph paths into one tangent space.
//!
//! Walking a path `i₁, i₂, …, i_m`, each edge is projected onto the tangent
//! frame at its tail and carried back to the frame at `i₁` through the
//! accumulated connection `R_{i₁,i₂} R_{i₂,i₃} ⋯`. Summing these vectors lays
//! the path out flat; the distance between its ends is the estimate. Inside
//! Dijkstra the accumulation is shared along the shortest-path tree, so every
//! settled vertex costs one extra `d × d` product.

use crate::connection::ConnectionCache;
use crate::error::{Error, Result};
use crate::graph::ProximityGraph;
use crate::matrix::{dot, norm, DenseMatrix, PointSet};
use crate::par;
use crate::tangent::TangentFrameSet;

/// Relative span disagreement `|s_ij − s_ji| / mean` above which a pair is
/// reported in [`AsymmetryReport`]. An empirical threshold, not a derived one.
pub const ASYMMETRY_THRESHOLD: f64 = 0.05;

/// Projections shorter than this fraction of the edge cannot be rescaled.
const ZERO_PROJECTION: f64 = 1e-12;

/// A path laid out in the tangent coordinates of its first vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedPath {
    pub source: usize,
    pub vertices: Vec<usize>,
    /// One point per vertex; the first is the origin.
    pub positions: Vec<Vec<f64>>,
    /// Distance from the first to the last position.
    pub span: f64,
}

impl UnfoldedPath {
    pub fn segment_lengths(&self) -> Vec<f64> {
        self.positions
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    /// Largest distance from an unfolded vertex to the end-to-end chord, as a
    /// fraction of the chord length. Zero for straight paths.
    pub fn max_deviation(&self) -> f64 {
        let first = &self.positions[0];
        let last = self.positions.last().expect("non-empty path");
        let chord: Vec<f64> = last.iter().zip(first).map(|(a, b)| a - b).collect();
        let len2 = dot(&chord, &chord);
        if len2 == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for y in &self.positions {
            let rel: Vec<f64> = y.iter().zip(first).map(|(a, b)| a - b).collect();
            let t = (dot(&rel, &chord) / len2).clamp(0.0, 1.0);
            let off: f64 = rel.iter().zip(&chord).map(|(r, c)| (r - t * c).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(off);
        }
        worst / len2.sqrt()
    }
}

fn rescaled(mut proj: Vec<f64>, edge_len: f64, from: usize, to: usize) -> Result<Vec<f64>> {
    let len = norm(&proj);
    if len < ZERO_PROJECTION * edge_len || len == 0.0 {
        return Err(Error::ZeroProjection { from, to });
    }
    let s = edge_len / len;
    proj.iter_mut().for_each(|p| *p *= s);
    Ok(proj)
}

/// Unfolds `path` from scratch, projecting each edge directly from the
/// frames. Connections come from `cache`.
pub fn unfold_path(
    points: &PointSet,
    frames: &TangentFrameSet,
    cache: &ConnectionCache<'_>,
    path: &[usize],
    rescale: bool,
) -> Result<UnfoldedPath> {
    if path.len() < 2 {
        return Err(Error::InvalidParam("a path needs at least two vertices".into()));
    }
    let d = frames.intrinsic_dim();
    let mut rot = nalgebra::DMatrix::<f64>::identity(d, d);
    let mut y = vec![0.0; d];
    let mut positions = vec![y.clone()];
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let step = cache.lookup(a, b).ok_or(Error::NotAPath { from: a, to: b })?;
        let e: Vec<f64> = points.point(b).iter().zip(points.point(a)).map(|(p, q)| p - q).collect();
        let mut proj = frames.project(a, &e);
        if rescale {
            proj = rescaled(proj, norm(&e), a, b)?;
        }
        let v = &rot * nalgebra::DVector::from_vec(proj);
        y.iter_mut().zip(v.iter()).for_each(|(yi, vi)| *yi += vi);
        positions.push(y.clone());
        rot *= step;
    }
    Ok(UnfoldedPath {
        source: path[0],
        vertices: path.to_vec(),
        span: norm(&y),
        positions,
    })
}

/// Spans from one source, with the shortest-path tree that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceRow {
    pub source: usize,
    /// Infinite for vertices outside the source's component.
    pub span: Vec<f64>,
    pub pred: Vec<Option<usize>>,
}

impl SourceRow {
    fn check_reached(&self) -> Result<()> {
        match self.span.iter().position(|s| !s.is_finite()) {
            Some(target) => Err(Error::Unreachable {
                source_vertex: self.source,
                target,
            }),
            None => Ok(()),
        }
    }

    /// Vertex sequence from the source to `target`.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        if !self.span[target].is_finite() {
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
}

/// Dijkstra from `source`, unfolding each shortest path as its endpoint
/// settles.
pub fn ptu_dijkstra_from(cache: &ConnectionCache<'_>, source: usize, rescale: bool) -> Result<SourceRow> {
    let g = cache.graph();
    let n = g.vertex_count();
    let d = cache.intrinsic_dim();
    let dd = d * d;
    let mut rot = vec![0.0; n * dd];
    let mut v = vec![0.0; n * d];
    let mut span = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut proj_buf = vec![0.0; d];

    for s in g.settle_from(source) {
        let r = s.vertex;
        pred[r] = s.pred;
        let Some(q) = s.pred else {
            for a in 0..d {
                rot[r * dd + a * d + a] = 1.0;
            }
            span[r] = 0.0;
            continue;
        };
        let (step, proj, weight) = cache.edge(q, r).expect("tree edges are graph edges");
        proj_buf.copy_from_slice(proj);
        if rescale {
            proj_buf = rescaled(proj_buf, weight, q, r)?;
        }
        let (head, tail) = if q < r {
            let (h, t) = rot.split_at_mut(r * dd);
            (&h[q * dd..(q + 1) * dd], &mut t[..dd])
        } else {
            let (h, t) = rot.split_at_mut(q * dd);
            (&t[..dd], &mut h[r * dd..(r + 1) * dd])
        };
        // v[r] = v[q] + Rot[q] · proj ; Rot[r] = Rot[q] · R_{q,r}
        let mut len2 = 0.0;
        for a in 0..d {
            let row = &head[a * d..(a + 1) * d];
            let va = v[q * d + a] + dot(row, &proj_buf);
            v[r * d + a] = va;
            len2 += va * va;
            for b in 0..d {
                let mut acc = 0.0;
                for (c, &rac) in row.iter().enumerate() {
                    acc += rac * step.get(c, b);
                }
                tail[a * d + b] = acc;
            }
        }
        span[r] = len2.sqrt();
    }
    Ok(SourceRow { source, span, pred })
}

/// Single-source geodesic estimator.
#[derive(Debug, Clone, Copy)]
pub enum Engine<'a> {
    /// Parallel-transport unfolding over a connection cache.
    Ptu {
        cache: &'a ConnectionCache<'a>,
        rescale: bool,
    },
    /// Plain graph shortest-path lengths.
    Dijkstra { graph: &'a ProximityGraph },
}

impl Engine<'_> {
    pub fn graph(&self) -> &ProximityGraph {
        match self {
            Engine::Ptu { cache, .. } => cache.graph(),
            Engine::Dijkstra { graph } => graph,
        }
    }

    pub fn row(&self, source: usize) -> Result<SourceRow> {
        let row = match *self {
            Engine::Ptu { cache, rescale } => ptu_dijkstra_from(cache, source, rescale)?,
            Engine::Dijkstra { graph } => {
                let t = graph.settle_from(source).into_tree();
                SourceRow {
                    source,
                    span: t.dist,
                    pred: t.pred,
                }
            }
        };
        row.check_reached()?;
        Ok(row)
    }
}

/// Squared, symmetrized geodesic distances: the input to MDS.
#[derive(Debug, Clone)]
pub struct GeodesicMatrix {
    d2: DenseMatrix,
    raw: Option<DenseMatrix>,
}

/// Pairs whose two directed spans disagree by more than
/// [`ASYMMETRY_THRESHOLD`]; a sign of sparse or uneven sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetryReport {
    /// Largest relative disagreement over all pairs.
    pub max: f64,
    /// Unordered pairs `(i, j)`, `i < j`, over the threshold.
    pub flagged: usize,
    /// The worst pair.
    pub worst_pair: Option<(usize, usize)>,
}

impl GeodesicMatrix {
    /// Symmetrizes directed spans `raw[i][j]` (source `i`) and squares them.
    pub fn from_raw(raw: DenseMatrix, keep_raw: bool) -> Result<Self> {
        if !raw.is_square() {
            return Err(Error::InvalidParam("distance matrix must be square".into()));
        }
        let n = raw.rows();
        let mut d2 = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let s = 0.5 * (raw[(i, j)] + raw[(j, i)]);
                d2[(i, j)] = s * s;
                d2[(j, i)] = s * s;
            }
        }
        Ok(Self {
            d2,
            raw: keep_raw.then_some(raw),
        })
    }

    /// Wraps an already symmetric matrix of squared distances.
    pub fn from_squared(d2: DenseMatrix) -> Result<Self> {
        d2.check_finite()?;
        if !d2.is_square() || d2.asymmetry() != 0.0 {
            return Err(Error::InvalidParam("squared distances must form a symmetric matrix".into()));
        }
        if (0..d2.rows()).any(|i| d2[(i, i)] != 0.0) || d2.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParam(
                "squared distances need a zero diagonal and non-negative entries".into(),
            ));
        }
        Ok(Self { d2, raw: None })
    }

    pub fn n(&self) -> usize {
        self.d2.rows()
    }

    pub fn squared(&self) -> &DenseMatrix {
        &self.d2
    }

    pub fn into_squared(self) -> DenseMatrix {
        self.d2
    }

    pub fn raw(&self) -> Option<&DenseMatrix> {
        self.raw.as_ref()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.d2[(i, j)].sqrt()
    }

    /// Unsquared symmetric distances.
    pub fn distances(&self) -> DenseMatrix {
        self.d2.map(f64::sqrt)
    }

    /// `None` when the directed spans were not kept.
    pub fn asymmetry(&self) -> Option<AsymmetryReport> {
        let raw = self.raw.as_ref()?;
        let n = raw.rows();
        let mut report = AsymmetryReport {
            max: 0.0,
            flagged: 0,
            worst_pair: None,
        };
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (raw[(i, j)], raw[(j, i)]);
                let mean = 0.5 * (a + b);
                if mean <= 0.0 {
                    continue;
                }
                let rel = (a - b).abs() / mean;
                if rel > ASYMMETRY_THRESHOLD {
                    report.flagged += 1;
                }
                if rel > report.max {
                    report.max = rel;
                    report.worst_pair = Some((i, j));
                }
            }
        }
        Some(report)
    }
}

/// Runs `engine` from every vertex and symmetrizes.
pub fn all_pairs(engine: Engine<'_>, keep_raw: bool) -> Result<GeodesicMatrix> {
    let n = engine.graph().vertex_count();
    let rows = par::try_map_indices(n, |s| engine.row(s).map(|r| r.span))?;
    let raw = DenseMatrix::from_row_major_unchecked(n, n, rows.concat());
    GeodesicMatrix::from_raw(raw, keep_raw)
}

pub fn all_pairs_geodesics(cache: &ConnectionCache<'_>, rescale: bool) -> Result<GeodesicMatrix> {
    all_pairs(Engine::Ptu { cache, rescale }, true)
}

pub fn all_pairs_dijkstra(g: &ProximityGraph) -> Result<GeodesicMatrix> {
    all_pairs(Engine::Dijkstra { graph: g }, false)
}

/// Distances from each landmark to every vertex, as an `n × ℓ` matrix whose
/// column `p` belongs to `landmarks[p]`. The landmark-to-landmark block is
/// symmetrized by averaging.
pub fn landmark_geodesics(engine: Engine<'_>, landmarks: &[usize]) -> Result<DenseMatrix> {
    let n = engine.graph().vertex_count();
    let mut seen = vec![false; n];
    for &l in landmarks {
        if l >= n || std::mem::replace(&mut seen[l], true) {
            return Err(Error::InvalidParam(format!(
                "landmark {l} is out of range or repeated"
            )));
        }
    }
    let rows = par::try_map_indices(landmarks.len(), |p| engine.row(landmarks[p]).map(|r| r.span))?;
    let ell = landmarks.len();
    let mut out = DenseMatrix::zeros(n, ell);
    for (p, row) in rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            out[(i, p)] = v;
        }
    }
    for p in 0..ell {
        for q in p + 1..ell {
            let s = 0.5 * (out[(landmarks[p], q)] + out[(landmarks[q], p)]);
            out[(landmarks[p], q)] = s;
            out[(landmarks[q], p)] = s;
        }
    }
    Ok(out)
}

/// Straightness and symmetry of the unfolded shortest paths between `i` and
/// `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDiagnostics {
    /// Worst [`UnfoldedPath::max_deviation`] of the two directions.
    pub max_deviation: f64,
    /// `|span_ij − span_ji|` over their mean.
    pub asymmetry: f64,
}

pub fn path_diagnostics(
    points: &PointSet,
    frames: &TangentFrameSet,
    cache: &ConnectionCache<'_>,
    i: usize,
    j: usize,
    rescale: bool,
) -> Result<PathDiagnostics> {
    let mut spans = [0.0; 2];
    let mut deviation = 0.0f64;
    for (k, (a, b)) in [(i, j), (j, i)].into_iter().enumerate() {
        let row = ptu_dijkstra_from(cache, a, rescale)?;
        let path = row.path_to(b).ok_or(Error::Unreachable {
            source_vertex: a,
            target: b,
        })?;
        if path.len() < 2 {
            return Ok(PathDiagnostics {
                max_deviation: 0.0,
                asymmetry: 0.0,
            });
        }
        let unfolded = unfold_path(points, frames, cache, &path, rescale)?;
        spans[k] = unfolded.span;
        deviation = deviation.max(unfolded.max_deviation());
    }
    let mean = 0.5 * (spans[0] + spans[1]);
    Ok(PathDiagnostics {
        max_deviation: deviation,
        asymmetry: if mean > 0.0 { (spans[0] - spans[1]).abs() / mean } else { 0.0 },
    })
}
