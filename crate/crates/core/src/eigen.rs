//! Leading eigenpairs of dense symmetric matrices.
//!
//! Two routes, both returning the algebraically largest eigenvalues:
//!
//! * dense: Householder reduction to tridiagonal form, bisection on Sturm
//!   counts for the wanted eigenvalues, inverse iteration for their
//!   tridiagonal eigenvectors, then back-transformation. Cost is dominated by
//!   the `4n³/3` flops of the reduction.
//! * Lanczos: a Krylov subspace with full reorthogonalization and thick
//!   restarts, needing only matrix-vector products. Used above
//!   [`DENSE_LIMIT`].

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::{canonicalize_sign, dot, norm, DenseMatrix};
use crate::rng::seeded;

/// Largest order solved by the dense route in [`top_eigenpairs`].
pub const DENSE_LIMIT: usize = 2000;

/// Required accuracy: `‖A q − λ q‖ ≤ RESIDUAL_TOLERANCE · |λ₁|`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Descending.
    pub values: Vec<f64>,
    /// Unit eigenvectors, sign-canonicalized so the largest-magnitude entry
    /// is positive.
    pub vectors: Vec<Vec<f64>>,
    /// Smallest eigenvalue of the matrix, when the route computes it.
    pub min_value: Option<f64>,
}

/// The `count` largest eigenpairs of the symmetric matrix `a`.
pub fn top_eigenpairs(a: &DenseMatrix, count: usize) -> Result<EigenPairs> {
    if a.rows() <= DENSE_LIMIT {
        top_eigenpairs_dense(a, count)
    } else {
        top_eigenpairs_lanczos(a, count)
    }
}

fn check_input(a: &DenseMatrix, count: usize) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidParam(format!("matrix is {}x{}, not square", a.rows(), a.cols())));
    }
    if count == 0 || count > a.rows() {
        return Err(Error::InvalidParam(format!(
            "cannot extract {count} eigenpairs from a {0}x{0} matrix",
            a.rows()
        )));
    }
    Ok(())
}

/// Tridiagonal form `Qᵗ A Q` with `Q = H₀ H₁ ⋯`, each `Hₖ = I − βₖ vₖ vₖᵗ`
/// acting on coordinates `k+1..n`.
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    reflectors: Vec<(f64, Vec<f64>)>,
}

impl Tridiagonal {
    fn reduce(a: &DenseMatrix) -> Self {
        let n = a.rows();
        // Working copy; only the lower triangle (j <= i) is read or written.
        let mut work = a.as_slice().to_vec();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        let mut p = vec![0.0; n];

        for k in 0..n.saturating_sub(2) {
            diag[k] = work[k * n + k];
            let m = n - k - 1;
            let base = k + 1;
            let mut v: Vec<f64> = (0..m).map(|i| work[(base + i) * n + k]).collect();
            let tail: f64 = v[1..].iter().map(|x| x * x).sum();
            if tail == 0.0 {
                off[k] = v[0];
                reflectors.push((0.0, v));
                continue;
            }
            let xnorm = (v[0] * v[0] + tail).sqrt();
            let alpha = if v[0] >= 0.0 { -xnorm } else { xnorm };
            v[0] -= alpha;
            let beta = 2.0 / (v[0] * v[0] + tail);
            off[k] = alpha;

            // p = β B v over the trailing block B, lower triangle only.
            let p = &mut p[..m];
            p.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..m {
                let row = &work[(base + i) * n + base..(base + i) * n + base + i];
                let vi = v[i];
                let mut acc = 0.0;
                for ((pj, &bij), &vj) in p[..i].iter_mut().zip(row).zip(&v[..i]) {
                    acc += bij * vj;
                    *pj += bij * vi;
                }
                p[i] += acc + work[(base + i) * n + base + i] * vi;
            }
            p.iter_mut().for_each(|x| *x *= beta);
            let kappa = 0.5 * beta * dot(p, &v);
            // w = p − κ v, stored in p.
            for (pi, &vi) in p.iter_mut().zip(&v) {
                *pi -= kappa * vi;
            }
            // B ← B − v wᵗ − w vᵗ
            for i in 0..m {
                let (vi, wi) = (v[i], p[i]);
                let row = &mut work[(base + i) * n + base..(base + i) * n + base + i + 1];
                for ((bij, &wj), &vj) in row.iter_mut().zip(&p[..=i]).zip(&v[..=i]) {
                    *bij -= vi * wj + wi * vj;
                }
            }
            reflectors.push((beta, v));
        }
        if n >= 2 {
            diag[n - 2] = work[(n - 2) * n + n - 2];
            off[n - 2] = work[(n - 1) * n + n - 2];
        }
        if n >= 1 {
            diag[n - 1] = work[(n - 1) * n + n - 1];
        }
        Self {
            diag,
            off,
            reflectors,
        }
    }

    fn norm_bound(&self) -> f64 {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalue with ascending index `idx`, by bisection.
    fn eigenvalue(&self, idx: usize) -> f64 {
        let bound = self.norm_bound();
        let pivmin = f64::MIN_POSITIVE.max(bound * bound * f64::EPSILON * f64::EPSILON);
        let (mut lo, mut hi) = (-bound - f64::EPSILON, bound + f64::EPSILON);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid, pivmin) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + pivmin {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvectors of the tridiagonal matrix for the given eigenvalues
    /// (descending), by inverse iteration with reorthogonalization inside
    /// clusters of close eigenvalues.
    fn eigenvectors(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let n = self.diag.len();
        let scale = self.norm_bound().max(f64::MIN_POSITIVE);
        let cluster_gap = 1e-3 * scale;
        let mut rng = seeded(0x7269_6469);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        let mut cluster_start = 0;
        let mut last_shift = f64::NAN;
        for (j, &lambda) in values.iter().enumerate() {
            if j > 0 && (values[j - 1] - lambda).abs() > cluster_gap {
                cluster_start = j;
            }
            // Separate numerically equal shifts so each solve differs.
            let mut shift = lambda;
            if j > cluster_start && (last_shift - shift).abs() < 10.0 * f64::EPSILON * scale {
                shift = last_shift - 10.0 * f64::EPSILON * scale;
            }
            last_shift = shift;
            let lu = TridiagonalLu::factor(&self.diag, &self.off, shift, f64::EPSILON * scale);
            let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            for _ in 0..5 {
                lu.solve(&mut x);
                for prev in &vectors[cluster_start..j] {
                    let c = dot(&x, prev);
                    x.iter_mut().zip(prev).for_each(|(a, b)| *a -= c * b);
                }
                let nx = norm(&x);
                x.iter_mut().for_each(|a| *a /= nx);
            }
            vectors.push(x);
        }
        vectors
    }

    /// Maps a tridiagonal eigenvector back to the original basis.
    fn back_transform(&self, y: &mut [f64]) {
        for (k, (beta, v)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let seg = &mut y[k + 1..];
            let c = beta * dot(v, seg);
            seg.iter_mut().zip(v).for_each(|(s, &vi)| *s -= c * vi);
        }
    }
}

/// LU factorization with partial pivoting of `T − σI` for tridiagonal `T`.
struct TridiagonalLu {
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|x| x - shift).collect();
        let mut du = off.to_vec();
        let mut dl = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 1 < n - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            d,
            du,
            du2,
            dl,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i] * b[i + 2];
            }
            b[i] = s / self.d[i];
        }
        // Rescale to keep repeated solves far from overflow.
        let m = b.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if m > 0.0 && m.is_finite() {
            b.iter_mut().for_each(|x| *x /= m);
        }
    }
}

fn residual(a: &DenseMatrix, lambda: f64, q: &[f64]) -> f64 {
    let aq = a.matvec(q);
    aq.iter().zip(q).map(|(x, y)| (x - lambda * y).powi(2)).sum::<f64>().sqrt()
}

fn check_residuals(a: &DenseMatrix, pairs: &EigenPairs) -> Result<()> {
    let top = pairs.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if top > 0.0 { top } else { a.frobenius_norm().max(f64::MIN_POSITIVE) };
    for (lambda, q) in pairs.values.iter().zip(&pairs.vectors) {
        let r = residual(a, *lambda, q);
        if !(r <= RESIDUAL_TOLERANCE * scale) {
            return Err(Error::EigFailure(format!(
                "eigenpair {lambda:e} has residual {r:e}, tolerance {:e}",
                RESIDUAL_TOLERANCE * scale
            )));
        }
    }
    Ok(())
}

/// Dense route; see the module documentation.
pub fn top_eigenpairs_dense(a: &DenseMatrix, count: usize) -> Result<EigenPairs> {
    check_input(a, count)?;
    let n = a.rows();
    let tri = Tridiagonal::reduce(a);
    let values: Vec<f64> = (0..count).map(|j| tri.eigenvalue(n - 1 - j)).collect();
    let min_value = Some(tri.eigenvalue(0));
    let mut vectors = tri.eigenvectors(&values);
    for y in vectors.iter_mut() {
        tri.back_transform(y);
        let ny = norm(y);
        y.iter_mut().for_each(|v| *v /= ny);
        canonicalize_sign(y);
    }
    // Rayleigh quotients are more accurate than the bisection midpoint.
    let values = vectors
        .iter()
        .zip(&values)
        .map(|(q, &v)| {
            let rq = dot(q, &a.matvec(q));
            if rq.is_finite() {
                rq
            } else {
                v
            }
        })
        .collect();
    let pairs = EigenPairs {
        values,
        vectors,
        min_value,
    };
    check_residuals(a, &pairs)?;
    Ok(pairs)
}

fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi -= c * bi);
        }
    }
}

/// Lanczos route; see the module documentation.
pub fn top_eigenpairs_lanczos(a: &DenseMatrix, count: usize) -> Result<EigenPairs> {
    check_input(a, count)?;
    let n = a.rows();
    let width = n.min((2 * count + 20).max(40));
    let keep = (count + 10).min(width - 1).max(count.min(width - 1));
    let mut rng = seeded(0x6c61_6e63);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(width);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(width);
    let mut next: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let anorm = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _restart in 0..500 {
        while basis.len() < width {
            orthogonalize(&mut next, &basis);
            let mut nn = norm(&next);
            if nn <= 1e-12 * anorm.sqrt().max(1.0) {
                // Invariant subspace found: continue from a fresh direction.
                next = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
                orthogonalize(&mut next, &basis);
                nn = norm(&next);
            }
            next.iter_mut().for_each(|x| *x /= nn);
            let w = a.matvec(&next);
            basis.push(std::mem::replace(&mut next, w.clone()));
            images.push(w);
        }
        orthogonalize(&mut next, &basis);

        let m = basis.len();
        let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));

        let combine = |vs: &[Vec<f64>], k: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (idx, v) in vs.iter().enumerate() {
                let c = eig.eigenvectors[(idx, k)];
                out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
            }
            out
        };
        let top = eig.eigenvalues[order[0]].abs().max(f64::MIN_POSITIVE);
        let mut ritz = Vec::with_capacity(keep);
        let mut ritz_images = Vec::with_capacity(keep);
        let mut converged = true;
        for &k in order.iter().take(keep.max(count)) {
            let y = combine(&basis, k);
            let ay = combine(&images, k);
            if ritz.len() < count {
                let theta = eig.eigenvalues[k];
                let r = ay.iter().zip(&y).map(|(p, q)| (p - theta * q).powi(2)).sum::<f64>().sqrt();
                converged &= r <= 0.1 * RESIDUAL_TOLERANCE * top;
            }
            ritz.push(y);
            ritz_images.push(ay);
        }
        if converged || m == n {
            let mut vectors: Vec<Vec<f64>> = ritz.into_iter().take(count).collect();
            let mut values = Vec::with_capacity(count);
            for q in vectors.iter_mut() {
                let nq = norm(q);
                q.iter_mut().for_each(|v| *v /= nq);
                canonicalize_sign(q);
                values.push(dot(q, &a.matvec(q)));
            }
            let pairs = EigenPairs {
                values,
                vectors,
                min_value: None,
            };
            check_residuals(a, &pairs)?;
            return Ok(pairs);
        }
        ritz.truncate(keep);
        ritz_images.truncate(keep);
        basis = ritz;
        images = ritz_images;
    }
    Err(Error::EigFailure("Lanczos iteration did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = seeded(seed);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.random::<f64>() - 0.5;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn random_psd(n: usize, rank: usize, seed: u64) -> DenseMatrix {
        let mut rng = seeded(seed);
        let b = DenseMatrix::from_row_major(n, rank, (0..n * rank).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap();
        b.matmul(&b.transpose())
    }

    /// Independent oracle: nalgebra's full symmetric eigendecomposition.
    fn oracle_values(a: &DenseMatrix) -> Vec<f64> {
        let mut v: Vec<f64> = a.to_nalgebra().symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(|x, y| y.total_cmp(x));
        v
    }

    fn assert_matches_oracle(a: &DenseMatrix, pairs: &EigenPairs) {
        let want = oracle_values(a);
        let scale = want[0].abs().max(want.last().unwrap().abs());
        for (got, w) in pairs.values.iter().zip(&want) {
            assert!((got - w).abs() <= 1e-8 * scale.max(1.0), "{got} vs {w}");
        }
        for (i, q) in pairs.vectors.iter().enumerate() {
            assert!((norm(q) - 1.0).abs() < 1e-12);
            for p in &pairs.vectors[..i] {
                assert!(dot(p, q).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn diagonal_matrix() {
        let mut a = DenseMatrix::zeros(4, 4);
        for (i, v) in [1.0, 4.0, -2.0, 3.0].into_iter().enumerate() {
            a[(i, i)] = v;
        }
        let p = top_eigenpairs_dense(&a, 2).unwrap();
        assert!((p.values[0] - 4.0).abs() < 1e-14 && (p.values[1] - 3.0).abs() < 1e-14);
        assert!((p.vectors[0][1] - 1.0).abs() < 1e-12);
        assert!((p.min_value.unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_orders() {
        let a = DenseMatrix::from_rows(&[vec![5.0]]).unwrap();
        let p = top_eigenpairs_dense(&a, 1).unwrap();
        assert_eq!(p.values, vec![5.0]);
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let p = top_eigenpairs_dense(&a, 2).unwrap();
        assert!((p.values[0] - 3.0).abs() < 1e-14 && (p.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_requests() {
        let a = DenseMatrix::identity(3);
        assert!(top_eigenpairs_dense(&a, 0).is_err());
        assert!(top_eigenpairs_dense(&a, 4).is_err());
        assert!(top_eigenpairs_dense(&DenseMatrix::zeros(2, 3), 1).is_err());
    }

    #[test]
    fn repeated_eigenvalues_get_orthogonal_vectors() {
        // Identity plus a rank-one bump: eigenvalue 1 has multiplicity n-1.
        let n = 30;
        let mut a = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] += 1.0 / n as f64;
            }
        }
        let p = top_eigenpairs_dense(&a, 4).unwrap();
        assert!((p.values[0] - 2.0).abs() < 1e-12);
        assert_matches_oracle(&a, &p);
    }

    #[test]
    fn dense_matches_oracle_on_random_psd() {
        for (n, seed) in [(50, 1), (120, 2), (200, 3)] {
            let a = random_psd(n, n / 2, seed);
            let p = top_eigenpairs_dense(&a, 5).unwrap();
            assert_matches_oracle(&a, &p);
        }
    }

    #[test]
    fn lanczos_matches_oracle() {
        for (n, seed) in [(60, 4), (180, 5)] {
            let a = random_psd(n, n / 3, seed);
            let p = top_eigenpairs_lanczos(&a, 3).unwrap();
            assert_matches_oracle(&a, &p);
            let dense = top_eigenpairs_dense(&a, 3).unwrap();
            for (x, y) in p.vectors.iter().zip(&dense.vectors) {
                assert!(dot(x, y).abs() > 1.0 - 1e-8);
            }
        }
        // Indefinite input: still the algebraically largest.
        let a = random_symmetric(150, 6);
        let p = top_eigenpairs_lanczos(&a, 2).unwrap();
        assert_matches_oracle(&a, &p);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dense_matches_oracle_on_random_symmetric(n in 2usize..60, seed in 0u64..10_000, count in 1usize..4) {
            let a = random_symmetric(n, seed);
            let p = top_eigenpairs_dense(&a, count.min(n)).unwrap();
            let want = oracle_values(&a);
            for (got, w) in p.values.iter().zip(&want) {
                prop_assert!((got - w).abs() <= 1e-10);
            }
            let got_min = p.min_value.unwrap();
            prop_assert!((got_min - want.last().unwrap()).abs() <= 1e-10);
        }
    }
}
