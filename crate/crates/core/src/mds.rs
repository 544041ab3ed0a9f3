//! Classical multidimensional scaling.

use crate::eigen::top_eigenpairs;
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, PointSet};
use crate::par;
use crate::transport::GeodesicMatrix;

/// A most-negative eigenvalue beyond this fraction of the largest means the
/// distances are far from Euclidean.
pub const NON_EUCLIDEAN_RATIO: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum MdsWarning {
    /// A retained eigenvalue was negative and replaced by zero.
    ClampedEigenvalue { index: usize, value: f64 },
    /// The spectrum has a large negative tail.
    NonEuclidean { min: f64, top: f64 },
}

impl std::fmt::Display for MdsWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MdsWarning::ClampedEigenvalue { index, value } => {
                write!(f, "eigenvalue {index} was negative ({value:e}) and clamped to zero")
            }
            MdsWarning::NonEuclidean { min, top } => write!(
                f,
                "distances are markedly non-Euclidean: smallest eigenvalue {min:e} against largest {top:e}"
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Embedding {
    /// `n` points in the target dimension.
    pub coords: PointSet,
    /// Retained eigenvalues, descending, after clamping.
    pub eigenvalues: Vec<f64>,
    /// The first discarded eigenvalue, when the matrix is large enough.
    pub residual_eigenvalue: Option<f64>,
    pub warnings: Vec<MdsWarning>,
}

/// `−½ J D J` with `J = I − eeᵗ/n`, by subtracting row, column and grand
/// means.
pub fn double_center(d2: &DenseMatrix) -> DenseMatrix {
    let (n, cols) = d2.shape();
    assert_eq!(n, cols, "double centering needs a square matrix");
    if n == 0 {
        return DenseMatrix::zeros(0, 0);
    }
    let inv = 1.0 / n as f64;
    let row_means: Vec<f64> = par::map_indices(n, |i| d2.row(i).iter().sum::<f64>() * inv);
    let mut col_means = vec![0.0; n];
    for i in 0..n {
        for (c, v) in col_means.iter_mut().zip(d2.row(i)) {
            *c += v;
        }
    }
    col_means.iter_mut().for_each(|c| *c *= inv);
    let grand = row_means.iter().sum::<f64>() * inv;
    let mut g = d2.clone();
    par::for_each_row(g.as_mut_slice(), n, |i, row| {
        let ri = row_means[i];
        for (v, cj) in row.iter_mut().zip(&col_means) {
            *v = -0.5 * (*v - ri - cj + grand);
        }
    });
    g
}

/// Top-`d` spectral embedding `Z = √Λ_d Q_dᵗ` of a Gram matrix.
pub fn spectral_embed(gram: &DenseMatrix, d: usize) -> Result<Embedding> {
    let n = gram.rows();
    if d == 0 || d >= n {
        return Err(Error::InvalidParam(format!(
            "target dimension {d} must lie in 1..{n} for {n} points"
        )));
    }
    let want = (d + 1).min(n);
    let pairs = top_eigenpairs(gram, want)?;
    let mut warnings = Vec::new();
    let top = pairs.values[0];
    if let Some(min) = pairs.min_value {
        if min < 0.0 && min.abs() > NON_EUCLIDEAN_RATIO * top.abs() {
            warnings.push(MdsWarning::NonEuclidean { min, top });
        }
    }
    let mut eigenvalues = Vec::with_capacity(d);
    let mut data = vec![0.0; n * d];
    for (c, (&lambda, q)) in pairs.values.iter().zip(&pairs.vectors).take(d).enumerate() {
        let lambda = if lambda < 0.0 {
            warnings.push(MdsWarning::ClampedEigenvalue {
                index: c,
                value: lambda,
            });
            0.0
        } else {
            lambda
        };
        eigenvalues.push(lambda);
        let s = lambda.sqrt();
        for (j, &qj) in q.iter().enumerate() {
            data[j * d + c] = s * qj;
        }
    }
    Ok(Embedding {
        coords: PointSet::new(d, data)?,
        eigenvalues,
        residual_eigenvalue: pairs.values.get(d).copied(),
        warnings,
    })
}

/// Double centering followed by [`spectral_embed`].
pub fn embed(dist: &GeodesicMatrix, d: usize) -> Result<Embedding> {
    spectral_embed(&double_center(dist.squared()), d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::dot;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn squared_distances(points: &[Vec<f64>]) -> DenseMatrix {
        let n = points.len();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = crate::matrix::squared_euclidean(&points[i], &points[j]);
            }
        }
        m
    }

    fn explicit_centering(d2: &DenseMatrix) -> DenseMatrix {
        let n = d2.rows();
        let mut j = DenseMatrix::identity(n);
        for a in 0..n {
            for b in 0..n {
                j[(a, b)] -= 1.0 / n as f64;
            }
        }
        j.matmul(d2).matmul(&j).map(|v| -0.5 * v)
    }

    #[test]
    fn two_points() {
        let s = 7.0;
        let d2 = DenseMatrix::from_rows(&[vec![0.0, s], vec![s, 0.0]]).unwrap();
        let g = double_center(&d2);
        assert_eq!(g.as_slice(), &[s / 4.0, -s / 4.0, -s / 4.0, s / 4.0]);
        assert!(double_center(&DenseMatrix::zeros(5, 5)).as_slice().iter().all(|&v| v == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn centering_matches_explicit_product(n in 2usize..30, seed in 0u64..10_000) {
            let mut rng = seeded(seed);
            let mut d2 = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..i {
                    let v = rng.random::<f64>() * 10.0;
                    d2[(i, j)] = v;
                    d2[(j, i)] = v;
                }
            }
            let fast = double_center(&d2);
            let slow = explicit_centering(&d2);
            for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
            let ones = vec![1.0; n];
            let ge = fast.matvec(&ones);
            prop_assert!(crate::matrix::norm(&ge) <= 1e-8 * fast.frobenius_norm().max(1e-300));
        }

        #[test]
        fn euclidean_distances_are_reproduced(n in 4usize..40, seed in 0u64..10_000) {
            let mut rng = seeded(seed);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>() * 3.0, rng.random::<f64>()]).collect();
            let emb = spectral_embed(&double_center(&squared_distances(&pts)), 2).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let want = crate::matrix::euclidean(&pts[i], &pts[j]);
                    let got = emb.coords.distance(i, j);
                    prop_assert!((got - want).abs() <= 1e-8 * want.max(1.0));
                }
            }
            for c in 0..2 {
                let mean: f64 = emb.coords.iter().map(|p| p[c]).sum::<f64>() / n as f64;
                prop_assert!(mean.abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn triangle_345() {
        let pts = vec![vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 4.0]];
        let gm = GeodesicMatrix::from_squared(squared_distances(&pts)).unwrap();
        let emb = embed(&gm, 2).unwrap();
        assert!((emb.coords.distance(0, 1) - 3.0).abs() < 1e-9);
        assert!((emb.coords.distance(0, 2) - 4.0).abs() < 1e-9);
        assert!((emb.coords.distance(1, 2) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn collinear_points_have_a_null_second_axis() {
        let pts: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.7, 2.0 * i as f64 * 0.7]).collect();
        let emb = spectral_embed(&double_center(&squared_distances(&pts)), 2).unwrap();
        assert!(emb.eigenvalues[1].abs() <= 1e-10 * emb.eigenvalues[0]);
        assert!(emb.coords.iter().all(|p| p[1].abs() < 1e-6));
    }

    #[test]
    fn rows_are_orthogonal_and_spectrum_descends() {
        let mut rng = seeded(3);
        let pts: Vec<Vec<f64>> = (0..60).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let emb = spectral_embed(&double_center(&squared_distances(&pts)), 3).unwrap();
        assert!(emb.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(emb.residual_eigenvalue.unwrap() <= emb.eigenvalues[2]);
        let col = |c: usize| emb.coords.iter().map(|p| p[c]).collect::<Vec<_>>();
        for a in 0..3 {
            for b in 0..a {
                assert!(dot(&col(a), &col(b)).abs() <= 1e-8 * emb.eigenvalues[0]);
            }
        }
    }

    #[test]
    fn non_euclidean_input_warns_and_clamps() {
        let mut g = DenseMatrix::zeros(4, 4);
        for (i, v) in [5.0, 1.0, -1.0, -2.0].into_iter().enumerate() {
            g[(i, i)] = v;
        }
        let emb = spectral_embed(&g, 3).unwrap();
        assert!(emb.warnings.iter().any(|w| matches!(w, MdsWarning::NonEuclidean { .. })));
        assert!(emb.warnings.iter().any(|w| matches!(w, MdsWarning::ClampedEigenvalue { .. })));
        assert!(emb.eigenvalues.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn rejects_bad_dimension() {
        let g = DenseMatrix::zeros(3, 3);
        assert!(spectral_embed(&g, 0).is_err());
        assert!(spectral_embed(&g, 3).is_err());
    }

    #[test]
    fn embedding_minimizes_gram_misfit() {
        let mut rng = seeded(9);
        let pts: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let g = double_center(&squared_distances(&pts));
        let emb = spectral_embed(&g, 2).unwrap();
        let misfit = |coords: &[Vec<f64>]| {
            let mut s = 0.0;
            for i in 0..30 {
                for j in 0..30 {
                    s += (dot(&coords[i], &coords[j]) - g[(i, j)]).powi(2);
                }
            }
            s.sqrt()
        };
        let base: Vec<Vec<f64>> = emb.coords.iter().map(|p| p.to_vec()).collect();
        let best = misfit(&base);
        for _ in 0..100 {
            let moved: Vec<Vec<f64>> = base
                .iter()
                .map(|p| p.iter().map(|v| v + 1e-3 * (rng.random::<f64>() - 0.5)).collect())
                .collect();
            assert!(misfit(&moved) >= best - 1e-12);
        }
    }
}
