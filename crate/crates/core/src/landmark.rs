//! Landmark MDS: embed a few landmarks exactly, then place every other point
//! from its distances to them.

use rand::seq::index::sample;
use rand::Rng as _;

use crate::eigen::top_eigenpairs;
use crate::error::{Error, Result};
use crate::graph::ProximityGraph;
use crate::matrix::{DenseMatrix, PointSet};
use crate::mds::{double_center, Embedding, MdsWarning};
use crate::par;
use crate::rng::seeded;

/// Eigenvalues at or below this fraction of the largest make the landmark
/// layout degenerate.
pub const DEGENERATE_SPECTRUM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LandmarkStrategy {
    /// Greedy farthest-point sampling on graph distances.
    #[default]
    FarthestPoint,
    /// Uniform sampling without replacement.
    Random,
}

impl std::str::FromStr for LandmarkStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fps" | "farthest" | "farthest-point" => Ok(Self::FarthestPoint),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidParam(format!("unknown landmark strategy '{other}'"))),
        }
    }
}

impl std::fmt::Display for LandmarkStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::FarthestPoint => "fps",
            Self::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandmarkSet {
    pub indices: Vec<usize>,
    pub strategy: LandmarkStrategy,
}

/// Picks `count` landmarks. Farthest-point sampling starts from a vertex
/// drawn from `seed`.
pub fn select_landmarks(g: &ProximityGraph, count: usize, strategy: LandmarkStrategy, seed: u64) -> Result<LandmarkSet> {
    let n = g.vertex_count();
    if count == 0 || count > n {
        return Err(Error::InvalidParam(format!(
            "landmark count {count} must lie in 1..={n}"
        )));
    }
    let mut rng = seeded(seed);
    let indices = match strategy {
        LandmarkStrategy::Random => {
            let mut v = sample(&mut rng, n, count).into_vec();
            v.sort_unstable();
            v
        }
        LandmarkStrategy::FarthestPoint => farthest_point_sampling(g, count, rng.random_range(0..n)),
    };
    Ok(LandmarkSet { indices, strategy })
}

/// Greedy farthest-point sampling from `first`: each new landmark maximizes
/// graph distance to those already chosen (smallest index on ties).
/// Vertices unreachable from the current set are taken first.
pub fn farthest_point_sampling(g: &ProximityGraph, count: usize, first: usize) -> Vec<usize> {
    let n = g.vertex_count();
    let count = count.min(n);
    let mut nearest = vec![f64::INFINITY; n];
    let mut chosen = Vec::with_capacity(count);
    let mut is_chosen = vec![false; n];
    let mut next = first;
    while chosen.len() < count {
        chosen.push(next);
        is_chosen[next] = true;
        for s in g.settle_from(next) {
            if s.dist < nearest[s.vertex] {
                nearest[s.vertex] = s.dist;
            }
        }
        nearest[next] = 0.0;
        let mut best = None;
        for (i, &dist) in nearest.iter().enumerate() {
            if is_chosen[i] {
                continue;
            }
            if best.is_none_or(|(_, bd)| dist > bd) {
                best = Some((i, dist));
            }
        }
        match best {
            Some((i, _)) => next = i,
            None => break,
        }
    }
    chosen
}

/// MDS layout of the landmarks plus what is needed to place other points.
#[derive(Debug, Clone)]
pub struct LandmarkEmbedding {
    /// One point per landmark.
    pub coords: PointSet,
    /// `ℓ × d`, columns `q_c / √λ_c`.
    pub pseudoinverse: DenseMatrix,
    /// Column means of the landmark squared-distance matrix.
    pub mean_squared: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub residual_eigenvalue: Option<f64>,
    pub warnings: Vec<MdsWarning>,
}

/// Classical MDS of the `ℓ × ℓ` squared landmark distances.
pub fn embed_landmarks(d2_ll: &DenseMatrix, d: usize) -> Result<LandmarkEmbedding> {
    let ell = d2_ll.rows();
    if !d2_ll.is_square() {
        return Err(Error::InvalidParam("landmark distances must be square".into()));
    }
    if d == 0 || d + 1 > ell {
        return Err(Error::InvalidParam(format!(
            "{ell} landmarks cannot support a {d}-dimensional layout; at least {} are needed",
            d + 1
        )));
    }
    let pairs = top_eigenpairs(&double_center(d2_ll), (d + 1).min(ell))?;
    let top = pairs.values[0];
    for (index, &value) in pairs.values.iter().take(d).enumerate() {
        if !(value > DEGENERATE_SPECTRUM * top) {
            return Err(Error::DegenerateSpectrum { index, value, top });
        }
    }
    let mut warnings = Vec::new();
    if let Some(min) = pairs.min_value {
        if min < 0.0 && min.abs() > crate::mds::NON_EUCLIDEAN_RATIO * top {
            warnings.push(MdsWarning::NonEuclidean { min, top });
        }
    }
    let mut coords = vec![0.0; ell * d];
    let mut pinv = DenseMatrix::zeros(ell, d);
    for (c, (&lambda, q)) in pairs.values.iter().zip(&pairs.vectors).take(d).enumerate() {
        let s = lambda.sqrt();
        for (p, &qp) in q.iter().enumerate() {
            coords[p * d + c] = s * qp;
            pinv[(p, c)] = qp / s;
        }
    }
    let mean_squared = (0..ell)
        .map(|q| (0..ell).map(|p| d2_ll[(p, q)]).sum::<f64>() / ell as f64)
        .collect();
    Ok(LandmarkEmbedding {
        coords: PointSet::new(d, coords)?,
        pseudoinverse: pinv,
        mean_squared,
        eigenvalues: pairs.values[..d].to_vec(),
        residual_eigenvalue: pairs.values.get(d).copied(),
        warnings,
    })
}

impl LandmarkEmbedding {
    pub fn dim(&self) -> usize {
        self.pseudoinverse.cols()
    }

    /// Position of a point from its squared distances to the landmarks:
    /// `½ (Z†)ᵗ (d̄ − dᵢ)`.
    pub fn place_point(&self, d2_to_landmarks: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut z = vec![0.0; d];
        for (p, (&mean, &dp)) in self.mean_squared.iter().zip(d2_to_landmarks).enumerate() {
            let diff = 0.5 * (mean - dp);
            for (c, zc) in z.iter_mut().enumerate() {
                *zc += self.pseudoinverse[(p, c)] * diff;
            }
        }
        z
    }
}

/// Full embedding from the `n × ℓ` unsquared distances between every point
/// and the landmarks; landmarks keep their MDS coordinates.
pub fn embed_with_landmarks(dist_nl: &DenseMatrix, landmarks: &[usize], d: usize) -> Result<Embedding> {
    let (n, ell) = dist_nl.shape();
    if ell != landmarks.len() {
        return Err(Error::InvalidParam("one distance column per landmark is required".into()));
    }
    let mut d2_ll = DenseMatrix::zeros(ell, ell);
    for (p, &lp) in landmarks.iter().enumerate() {
        for q in 0..ell {
            d2_ll[(p, q)] = dist_nl[(lp, q)].powi(2);
        }
    }
    let le = embed_landmarks(&d2_ll, d)?;
    let mut landmark_slot = vec![None; n];
    for (p, &l) in landmarks.iter().enumerate() {
        landmark_slot[l] = Some(p);
    }
    let placed = par::map_indices(n, |i| match landmark_slot[i] {
        Some(p) => le.coords.point(p).to_vec(),
        None => {
            let d2: Vec<f64> = dist_nl.row(i).iter().map(|v| v * v).collect();
            le.place_point(&d2)
        }
    });
    Ok(Embedding {
        coords: PointSet::new(d, placed.concat())?,
        eigenvalues: le.eigenvalues,
        residual_eigenvalue: le.residual_eigenvalue,
        warnings: le.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_knn_graph, dijkstra, KnnRule};
    use crate::matrix::squared_euclidean;
    use crate::metrics::rigid_align;
    use proptest::prelude::*;
    use rand::Rng;

    fn squared_block(pts: &[Vec<f64>]) -> DenseMatrix {
        let n = pts.len();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = squared_euclidean(&pts[i], &pts[j]);
            }
        }
        m
    }

    fn random_plane(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded(seed);
        (0..n).map(|_| vec![rng.random::<f64>() * 2.0, rng.random::<f64>()]).collect()
    }

    #[test]
    fn all_vertices_when_count_is_n() {
        let pts = PointSet::from_points(&random_plane(30, 1)).unwrap();
        let g = build_knn_graph(&pts, 5, KnnRule::Union).unwrap();
        for strategy in [LandmarkStrategy::FarthestPoint, LandmarkStrategy::Random] {
            let mut set = select_landmarks(&g, 30, strategy, 4).unwrap().indices;
            set.sort_unstable();
            assert_eq!(set, (0..30).collect::<Vec<_>>());
        }
        assert!(select_landmarks(&g, 0, LandmarkStrategy::Random, 0).is_err());
        assert!(select_landmarks(&g, 31, LandmarkStrategy::Random, 0).is_err());
    }

    #[test]
    fn selection_is_deterministic_and_distinct() {
        let pts = PointSet::from_points(&random_plane(200, 2)).unwrap();
        let g = build_knn_graph(&pts, 6, KnnRule::Union).unwrap();
        for strategy in [LandmarkStrategy::FarthestPoint, LandmarkStrategy::Random] {
            let a = select_landmarks(&g, 12, strategy, 77).unwrap();
            let b = select_landmarks(&g, 12, strategy, 77).unwrap();
            assert_eq!(a, b);
            let mut s = a.indices.clone();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 12);
        }
    }

    #[test]
    fn second_landmark_on_a_path_is_the_far_end() {
        let edges: Vec<_> = (0..9).map(|i| (i, i + 1, 1.0)).collect();
        let g = ProximityGraph::from_edges(10, &edges).unwrap();
        assert_eq!(farthest_point_sampling(&g, 2, 0), vec![0, 9]);
        assert_eq!(farthest_point_sampling(&g, 3, 0), vec![0, 9, 4]);
    }

    fn covering_radius(dist: &[Vec<f64>], centers: &[usize]) -> f64 {
        (0..dist.len())
            .map(|i| centers.iter().map(|&c| dist[c][i]).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    fn optimal_radius(dist: &[Vec<f64>], count: usize) -> f64 {
        fn rec(dist: &[Vec<f64>], start: usize, left: usize, cur: &mut Vec<usize>, best: &mut f64) {
            if left == 0 {
                *best = best.min(covering_radius(dist, cur));
                return;
            }
            for c in start..dist.len() {
                cur.push(c);
                rec(dist, c + 1, left - 1, cur, best);
                cur.pop();
            }
        }
        let mut best = f64::INFINITY;
        rec(dist, 0, count, &mut Vec::new(), &mut best);
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn farthest_point_is_a_two_approximation(n in 6usize..13, count in 1usize..4, seed in 0u64..1000, first in 0usize..6) {
            let pts = PointSet::from_points(&random_plane(n, seed)).unwrap();
            let g = build_knn_graph(&pts, 3, KnnRule::Union).unwrap();
            prop_assume!(crate::graph::ensure_connected(&g).is_ok());
            let dist: Vec<Vec<f64>> = (0..n).map(|s| dijkstra(&g, s).dist).collect();
            let chosen = farthest_point_sampling(&g, count, first);
            prop_assert!(covering_radius(&dist, &chosen) <= 2.0 * optimal_radius(&dist, count) + 1e-12);
        }
    }

    #[test]
    fn landmarks_reproduce_themselves() {
        let pts = random_plane(15, 5);
        let d2 = squared_block(&pts);
        let le = embed_landmarks(&d2, 2).unwrap();
        for p in 0..15 {
            let col: Vec<f64> = (0..15).map(|q| d2[(q, p)]).collect();
            let z = le.place_point(&col);
            for (a, b) in z.iter().zip(le.coords.point(p)) {
                assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
            }
        }
        // Pseudoinverse identity: (Z†)ᵗ applied to ZᵗZ gives Z.
        let zz: Vec<Vec<f64>> = (0..15)
            .map(|q| (0..15).map(|p| crate::matrix::dot(le.coords.point(p), le.coords.point(q))).collect())
            .collect();
        for q in 0..15 {
            for c in 0..2 {
                let v: f64 = (0..15).map(|p| le.pseudoinverse[(p, c)] * zz[q][p]).sum();
                assert!((v - le.coords.point(q)[c]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn flat_points_are_placed_exactly() {
        let pts = random_plane(300, 6);
        let landmarks: Vec<usize> = (0..300).step_by(30).collect();
        let mut dist = DenseMatrix::zeros(300, landmarks.len());
        for i in 0..300 {
            for (p, &l) in landmarks.iter().enumerate() {
                dist[(i, p)] = squared_euclidean(&pts[i], &pts[l]).sqrt();
            }
        }
        let emb = embed_with_landmarks(&dist, &landmarks, 2).unwrap();
        let truth = PointSet::from_points(&pts).unwrap();
        let fit = rigid_align(&emb.coords, &truth).unwrap();
        assert!(fit.residual <= 1e-6 * truth.bbox_diagonal());
    }

    #[test]
    fn simplex_matches_closed_form() {
        // Regular tetrahedron with unit edges, in closed form.
        let s = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ];
        let scale = 1.0 / 8f64.sqrt();
        let s: Vec<Vec<f64>> = s.into_iter().map(|p| p.into_iter().map(|v| v * scale).collect()).collect();
        let mut d2 = DenseMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                d2[(i, j)] = if i == j { 0.0 } else { 1.0 };
            }
        }
        let le = embed_landmarks(&d2, 3).unwrap();
        let fit = rigid_align(&le.coords, &PointSet::from_points(&s).unwrap()).unwrap();
        assert!(fit.residual <= 1e-10);
    }

    #[test]
    fn degenerate_layouts_are_rejected() {
        let line: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 0.0]).collect();
        assert!(matches!(
            embed_landmarks(&squared_block(&line), 2),
            Err(Error::DegenerateSpectrum { index: 1, .. })
        ));
        assert!(embed_landmarks(&squared_block(&line[..2]), 2).is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in [LandmarkStrategy::FarthestPoint, LandmarkStrategy::Random] {
            assert_eq!(s.to_string().parse::<LandmarkStrategy>().unwrap(), s);
        }
        assert!("grid".parse::<LandmarkStrategy>().is_err());
    }
}
