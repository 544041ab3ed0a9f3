//! Singular value decomposition by one-sided Jacobi rotations.
//!
//! Accurate to working precision on the small matrices used here (local
//! neighborhoods, `d × d` frame products), rank-deficient ones included.

use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 80;

/// `M = U diag(σ) Vᵗ` with `r = min(rows, cols)` columns in `U` and `V`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × r`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Descending, non-negative.
    pub singular_values: Vec<f64>,
    /// `cols × r`, orthonormal columns.
    pub v: DMatrix<f64>,
}

pub fn svd(m: &DMatrix<f64>) -> Svd {
    if m.nrows() < m.ncols() {
        let t = tall_svd(m.transpose());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    tall_svd(m.clone())
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    svd(m).singular_values
}

fn col_dot(a: &DMatrix<f64>, p: usize, q: usize) -> f64 {
    a.column(p).dot(&a.column(q))
}

fn rotate(a: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..a.nrows() {
        let (x, y) = (a[(r, p)], a[(r, q)]);
        a[(r, p)] = c * x - s * y;
        a[(r, q)] = s * x + c * y;
    }
}

fn tall_svd(mut a: DMatrix<f64>) -> Svd {
    let (rows, cols) = a.shape();
    let mut v = DMatrix::identity(cols, cols);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let gamma = col_dot(&a, p, q);
                let (alpha, beta) = (col_dot(&a, p, p), col_dot(&a, q, q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = DMatrix::zeros(rows, cols);
    for (k, &j) in order.iter().enumerate() {
        let mut w = if norms[j] > 0.0 {
            a.column(j) / norms[j]
        } else {
            nalgebra::DVector::zeros(rows)
        };
        orthogonalize(&u, k, &mut w);
        if w.norm() < 0.5 {
            w = completion(&u, k);
        }
        let len = w.norm();
        u.set_column(k, &(w / len));
    }
    Svd {
        u,
        singular_values: order.iter().map(|&j| norms[j]).collect(),
        v: v.select_columns(&order),
    }
}

/// Removes the components along the first `k` columns of `u`, twice.
fn orthogonalize(u: &DMatrix<f64>, k: usize, w: &mut nalgebra::DVector<f64>) {
    for _ in 0..2 {
        for c in 0..k {
            let proj = u.column(c).dot(w);
            w.axpy(-proj, &u.column(c), 1.0);
        }
    }
}

/// A unit vector orthogonal to the first `k` columns of `u`.
fn completion(u: &DMatrix<f64>, k: usize) -> nalgebra::DVector<f64> {
    let rows = u.nrows();
    (0..rows)
        .map(|e| {
            let mut w = nalgebra::DVector::zeros(rows);
            w[e] = 1.0;
            orthogonalize(u, k, &mut w);
            w
        })
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .expect("at least one row")
}
