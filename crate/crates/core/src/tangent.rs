//! Tangent frames from local principal directions.
//!
//! Each point's frame is spanned by the `d` leading left singular vectors of
//! its centered geodesic neighborhood: the `K` points nearest to it in graph
//! distance, with the point itself subtracted and excluded.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};
use crate::graph::{geodesic_knn, ProximityGraph};
use crate::matrix::{canonicalize_sign, dot, PointSet};
use crate::par;
use crate::svd::{singular_values, svd};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Orthonormal `D × d` bases of the estimated tangent spaces.
#[derive(Debug, Clone)]
pub struct TangentFrameSet {
    ambient: usize,
    d: usize,
    /// Frames back to back, each stored column-major.
    frames: Vec<f64>,
    /// Full descending spectrum of every neighborhood.
    pub singular_values: Vec<Vec<f64>>,
}

impl TangentFrameSet {
    /// Assembles frames from explicit column-major `ambient × d` blocks.
    /// No orthonormality check is made.
    pub fn from_frames(ambient: usize, d: usize, frames: Vec<f64>) -> Self {
        assert_eq!(frames.len() % (ambient * d), 0);
        let n = frames.len() / (ambient * d);
        Self {
            ambient,
            d,
            frames,
            singular_values: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len() / (self.ambient * self.d)
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.d
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn frame(&self, i: usize) -> DMatrixView<'_, f64> {
        let size = self.ambient * self.d;
        DMatrixView::from_slice(&self.frames[i * size..(i + 1) * size], self.ambient, self.d)
    }

    /// Column `c` of frame `i`.
    pub fn axis(&self, i: usize, c: usize) -> &[f64] {
        let start = i * self.ambient * self.d + c * self.ambient;
        &self.frames[start..start + self.ambient]
    }

    /// Coordinates of the ambient vector `v` in frame `i`, i.e. `Tᵢᵗ v`.
    pub fn project(&self, i: usize, v: &[f64]) -> Vec<f64> {
        (0..self.d).map(|c| dot(self.axis(i, c), v)).collect()
    }

    /// Ratio `σ_{d+1} / σ_d` at point `i`; values near 1 mean the tangent
    /// subspace is poorly separated from the normal directions.
    pub fn gap_ratio(&self, i: usize) -> Option<f64> {
        let s = &self.singular_values[i];
        match (s.get(self.d - 1), s.get(self.d)) {
            (Some(&a), Some(&b)) if a > 0.0 => Some(b / a),
            _ => None,
        }
    }

    /// Largest `|TᵢᵗTᵢ − I|` entry over all frames.
    pub fn orthonormality_error(&self) -> f64 {
        let eye = DMatrix::<f64>::identity(self.d, self.d);
        (0..self.len())
            .map(|i| {
                let f = self.frame(i);
                (f.transpose() * f - &eye).abs().max()
            })
            .fold(0.0, f64::max)
    }
}

fn centered_neighborhood(points: &PointSet, center: usize, nbrs: &[(usize, f64)]) -> DMatrix<f64> {
    let x = points.point(center);
    DMatrix::from_fn(points.dim(), nbrs.len(), |r, c| points.point(nbrs[c].0)[r] - x[r])
}

/// Left singular vectors and values, by decreasing singular value.
fn sorted_svd(m: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let s = svd(&m);
    (s.u, s.singular_values)
}

pub fn estimate_frames(points: &PointSet, g: &ProximityGraph, d: usize, k_tangent: usize) -> Result<TangentFrameSet> {
    let ambient = points.dim();
    if d == 0 || d > ambient {
        return Err(Error::InvalidParam(format!(
            "intrinsic dimension {d} must lie in 1..={ambient}"
        )));
    }
    if k_tangent < d {
        return Err(Error::InvalidParam(format!(
            "tangent neighborhood size {k_tangent} is smaller than d = {d}"
        )));
    }
    if g.vertex_count() != points.len() {
        return Err(Error::InvalidParam("graph and point set sizes differ".into()));
    }

    let per_point = par::try_map_indices(points.len(), |i| {
        let nbrs = geodesic_knn(g, i, k_tangent);
        if nbrs.len() < k_tangent {
            return Err(Error::NeighborhoodTooSmall {
                point: i,
                found: nbrs.len(),
                needed: k_tangent,
            });
        }
        let (u, sigma) = sorted_svd(centered_neighborhood(points, i, &nbrs));
        let top = sigma.first().copied().unwrap_or(0.0);
        let rank = sigma.iter().filter(|&&s| top > 0.0 && s > RANK_TOLERANCE * top).count();
        if rank < d {
            return Err(Error::RankDeficient {
                point: i,
                rank,
                dim: d,
            });
        }
        let mut frame = Vec::with_capacity(ambient * d);
        for c in 0..d {
            let mut col: Vec<f64> = u.column(c).iter().copied().collect();
            canonicalize_sign(&mut col);
            frame.extend(col);
        }
        Ok((frame, sigma))
    })?;

    let mut frames = Vec::with_capacity(points.len() * ambient * d);
    let mut singular_values = Vec::with_capacity(points.len());
    for (f, s) in per_point {
        frames.extend(f);
        singular_values.push(s);
    }
    Ok(TangentFrameSet {
        ambient,
        d,
        frames,
        singular_values,
    })
}

/// Normalized singular values below this are treated as zero when looking
/// for a spectral gap.
pub const SPECTRUM_FLOOR: f64 = 1e-8;

/// Normalized neighborhood spectra for choosing the intrinsic dimension.
#[derive(Debug, Clone)]
pub struct DimensionReport {
    /// Per point, singular values divided by the largest one.
    pub spectra: Vec<Vec<f64>>,
    /// Entry-wise median of `spectra`.
    pub median: Vec<f64>,
}

impl DimensionReport {
    /// Index `j` (1-based dimension) maximizing `median[j-1] / median[j]`,
    /// ignoring entries at round-off level. Advisory only.
    pub fn largest_gap(&self) -> Option<usize> {
        (1..self.median.len())
            .filter(|&j| self.median[j - 1] > SPECTRUM_FLOOR)
            .max_by(|&a, &b| {
                let ra = self.median[a] / self.median[a - 1];
                let rb = self.median[b] / self.median[b - 1];
                rb.total_cmp(&ra)
            })
    }
}

pub fn estimate_intrinsic_dim_hint(points: &PointSet, g: &ProximityGraph, k_tangent: usize) -> Result<DimensionReport> {
    if k_tangent < 2 {
        return Err(Error::InvalidParam("neighborhood size must be at least 2".into()));
    }
    let width = points.dim().min(k_tangent);
    let spectra = par::try_map_indices(points.len(), |i| {
        let nbrs = geodesic_knn(g, i, k_tangent);
        let mut s = if nbrs.is_empty() {
            Vec::new()
        } else {
            sorted_svd(centered_neighborhood(points, i, &nbrs)).1
        };
        let top = s.first().copied().unwrap_or(0.0);
        s.iter_mut().for_each(|v| *v = if top > 0.0 { *v / top } else { 0.0 });
        s.resize(width, 0.0);
        Ok(s)
    })?;
    let median = (0..width)
        .map(|j| {
            let mut col: Vec<f64> = spectra.iter().map(|s| s[j]).collect();
            col.sort_by(f64::total_cmp);
            let m = col.len();
            if m % 2 == 1 {
                col[m / 2]
            } else {
                0.5 * (col[m / 2 - 1] + col[m / 2])
            }
        })
        .collect();
    Ok(DimensionReport { spectra, median })
}

/// Largest principal angle, in radians, between the spans of two
/// orthonormal bases of equal width.
pub fn max_principal_angle(a: DMatrixView<'_, f64>, b: DMatrixView<'_, f64>) -> f64 {
    let s = singular_values(&(a.transpose() * b));
    s.last().copied().unwrap_or(0.0).clamp(-1.0, 1.0).acos()
}


#[cfg(test)]
mod tests {
    use super::tests_support::fibonacci_sphere;
    use super::*;
    use crate::graph::{build_knn_graph, KnnRule};
    use crate::rng::seeded;
    use rand::Rng;

    fn plane_points(n: usize, seed: u64) -> PointSet {
        let mut rng = seeded(seed);
        let mut data = Vec::new();
        for _ in 0..n {
            data.extend([rng.random::<f64>(), rng.random::<f64>(), 0.0]);
        }
        PointSet::new(3, data).unwrap()
    }

    #[test]
    fn flat_plane_frames_span_the_plane() {
        let pts = plane_points(200, 1);
        let g = build_knn_graph(&pts, 8, KnnRule::Union).unwrap();
        let frames = estimate_frames(&pts, &g, 2, 8).unwrap();
        assert!(frames.orthonormality_error() <= 1e-10);
        for i in 0..pts.len() {
            // Residual of e3 after projecting onto the frame.
            let f = frames.frame(i);
            let e3 = nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0]);
            let resid = &e3 - f * (f.transpose() * &e3);
            assert!((resid.norm() - 1.0).abs() <= 1e-10);
            let e1 = nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0]);
            assert!((&e1 - f * (f.transpose() * &e1)).norm() <= 1e-10);
        }
    }

    #[test]
    fn collinear_points_are_rank_deficient() {
        let pts = PointSet::new(3, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0]).unwrap();
        let g = build_knn_graph(&pts, 2, KnnRule::Union).unwrap();
        let err = estimate_frames(&pts, &g, 2, 2).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { point: 0, rank: 1, dim: 2 }));
    }

    #[test]
    fn small_component_is_reported() {
        let pts = PointSet::new(1, vec![0.0, 1.0, 2.0, 10.0, 11.0]).unwrap();
        let g = build_knn_graph(&pts, 1, KnnRule::Union).unwrap();
        let err = estimate_frames(&pts, &g, 1, 2).unwrap_err();
        assert!(matches!(err, Error::NeighborhoodTooSmall { point: 3, found: 1, needed: 2 }));
    }

    #[test]
    fn sphere_frames_are_orthogonal_to_normals() {
        let pts = fibonacci_sphere(2000);
        let g = build_knn_graph(&pts, 8, KnnRule::Union).unwrap();
        let frames = estimate_frames(&pts, &g, 2, 8).unwrap();
        assert!(frames.orthonormality_error() <= 1e-10);
        for i in 0..pts.len() {
            let p = pts.point(i);
            let proj = frames.project(i, p);
            let ratio = crate::matrix::norm(&proj) / crate::matrix::norm(p);
            assert!(ratio <= 0.05, "point {i}: {ratio}");
        }
    }

    #[test]
    fn dimension_hint_examples() {
        let flat = plane_points(150, 2);
        let g = build_knn_graph(&flat, 8, KnnRule::Union).unwrap();
        let rep = estimate_intrinsic_dim_hint(&flat, &g, 8).unwrap();
        assert!(rep.median[2] <= 1e-8);
        assert_eq!(rep.largest_gap(), Some(2));

        let mut rng = seeded(3);
        let blob: Vec<f64> = (0..450)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let blob = PointSet::new(3, blob).unwrap();
        let g = build_knn_graph(&blob, 10, KnnRule::Union).unwrap();
        let rep = estimate_intrinsic_dim_hint(&blob, &g, 10).unwrap();
        assert!(rep.median[2] > 0.1, "{:?}", rep.median);

        let sphere = fibonacci_sphere(1500);
        let g = build_knn_graph(&sphere, 10, KnnRule::Union).unwrap();
        let rep = estimate_intrinsic_dim_hint(&sphere, &g, 10).unwrap();
        assert!(rep.median[1] > 0.5 && rep.median[2] < 0.1, "{:?}", rep.median);
        assert_eq!(rep.largest_gap(), Some(2));

        let roundoff = DimensionReport {
            spectra: Vec::new(),
            median: vec![1.0, 0.7, 3e-16, 1e-17, 1e-33],
        };
        assert_eq!(roundoff.largest_gap(), Some(2));
    }

    #[test]
    fn principal_angle_of_identical_and_orthogonal_planes() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert!(max_principal_angle(a.as_view(), a.as_view()) < 1e-7);
        assert!((max_principal_angle(a.as_view(), b.as_view()) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn frames_of_a_lifted_plane_contain_every_edge() {
        let hole = crate::datasets::Hole {
            lo: vec![0.25, 0.25],
            hi: vec![0.75, 0.75],
        };
        for (ambient, k) in [(10, 10), (10, 8), (8, 8), (20, 6)] {
            let ds = crate::datasets::gen_flat_patch(400, ambient, 2, 3, Some(&hole)).unwrap();
            let g = build_knn_graph(&ds.points, k, KnnRule::Union).unwrap();
            let frames = estimate_frames(&ds.points, &g, 2, k).unwrap();
            for i in 0..400 {
                for &j in g.neighbors(i) {
                    let e: Vec<f64> = ds.points.point(j).iter().zip(ds.points.point(i)).map(|(a, b)| a - b).collect();
                    let p = frames.project(i, &e);
                    let lost = dot(&e, &e) - dot(&p, &p);
                    assert!(lost.abs() <= 1e-20 + 1e-12 * dot(&e, &e), "D={ambient} K={k} point {i}");
                }
            }
        }
    }
}
