//! Seeded randomness. Every stochastic step takes an explicit seed and draws
//! from a ChaCha stream, so runs are reproducible across platforms.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of R's diagonal folded into Q.
pub fn random_orthogonal(dim: usize, rng: &mut Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = (0..16).map({
            let mut r = seeded(7);
            move |_| r.random()
        }).collect();
        let b: Vec<u64> = (0..16).map({
            let mut r = seeded(7);
            move |_| r.random()
        }).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn orthogonal_matrix_is_orthogonal() {
        let q = random_orthogonal(6, &mut seeded(3));
        let err = (q.transpose() * &q - DMatrix::identity(6, 6)).abs().max();
        assert!(err < 1e-12, "{err}");
    }
}
