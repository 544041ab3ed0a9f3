//! Error measures against ground truth.
//!
//! All reductions run sequentially in a fixed order so reports are
//! reproducible bit for bit.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, PointSet};
use crate::svd::{singular_values, svd};

/// Pairs closer than this fraction of the largest true distance are left out
/// of relative errors.
pub const NEAR_COINCIDENT: f64 = 1e-9;

/// Summary of a list of non-negative errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub count: usize,
    /// Mean error per hop count `(hops, mean, pairs)`, ascending in hops.
    pub by_hops: Option<Vec<(usize, f64, usize)>>,
}

impl ErrorReport {
    pub fn from_errors(errors: &[f64]) -> Self {
        if errors.is_empty() {
            return Self {
                mean: 0.0,
                median: 0.0,
                max: 0.0,
                count: 0,
                by_hops: None,
            };
        }
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let median = if m % 2 == 1 {
            sorted[m / 2]
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
        };
        Self {
            mean: errors.iter().sum::<f64>() / m as f64,
            median,
            max: sorted[m - 1],
            count: m,
            by_hops: None,
        }
    }
}

/// Relative error `|est − truth| / truth` over all pairs `i < j`.
///
/// `hops`, when given, bins the errors by the hop count of each pair.
pub fn geodesic_error(
    n: usize,
    est: impl Fn(usize, usize) -> f64,
    truth: impl Fn(usize, usize) -> f64,
    hops: Option<&dyn Fn(usize, usize) -> usize>,
) -> ErrorReport {
    let mut diameter = 0.0f64;
    let mut truths = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let t = truth(i, j);
            diameter = diameter.max(t);
            truths.push(t);
        }
    }
    let floor = NEAR_COINCIDENT * diameter;
    let mut errors = Vec::with_capacity(truths.len());
    let mut bins: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let t = truths[k];
            k += 1;
            if t < floor || t <= 0.0 {
                continue;
            }
            let e = (est(i, j) - t).abs() / t;
            errors.push(e);
            if let Some(h) = hops {
                let bin = bins.entry(h(i, j)).or_insert((0.0, 0));
                bin.0 += e;
                bin.1 += 1;
            }
        }
    }
    let mut report = ErrorReport::from_errors(&errors);
    if hops.is_some() {
        report.by_hops = Some(bins.into_iter().map(|(h, (s, c))| (h, s / c as f64, c)).collect());
    }
    report
}

/// Best rigid motion (reflections allowed) taking `a` onto `b`:
/// `b_i ≈ rotation · a_i + translation`.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub rotation: DMatrix<f64>,
    pub translation: Vec<f64>,
    /// Root mean square distance between aligned `a` and `b`.
    pub residual: f64,
    /// `a` after the motion.
    pub aligned: PointSet,
}

pub fn rigid_align(a: &PointSet, b: &PointSet) -> Result<Alignment> {
    let (n, d) = (a.len(), a.dim());
    if b.len() != n || b.dim() != d {
        return Err(Error::InvalidParam(format!(
            "cannot align {n} points in {d} dimensions with {} points in {}",
            b.len(),
            b.dim()
        )));
    }
    if n < d + 1 {
        return Err(Error::DegenerateConfig(format!(
            "{n} points cannot fix a rigid motion in {d} dimensions"
        )));
    }
    let ca = a.centroid();
    let cb = b.centroid();
    let centered = |p: &PointSet, c: &[f64]| DMatrix::from_fn(d, n, |r, i| p.point(i)[r] - c[r]);
    let am = centered(a, &ca);
    let bm = centered(b, &cb);
    let sa = singular_values(&am);
    let top = sa.first().copied().unwrap_or(0.0);
    let rank = sa.iter().filter(|&&s| s > 1e-12 * top.max(f64::MIN_POSITIVE)).count();
    if top <= 0.0 || rank < d {
        return Err(Error::DegenerateConfig(format!(
            "configuration spans {rank} of {d} dimensions"
        )));
    }
    let h = &am * bm.transpose();
    let s = svd(&h);
    let rotation = &s.v * s.u.transpose();
    let rotated = &rotation * &am;
    let mut data = Vec::with_capacity(n * d);
    let mut sq = 0.0;
    for i in 0..n {
        for r in 0..d {
            let v = rotated[(r, i)] + cb[r];
            sq += (v - b.point(i)[r]).powi(2);
            data.push(v);
        }
    }
    let ca_rot = &rotation * nalgebra::DVector::from_column_slice(&ca);
    let translation = (0..d).map(|r| cb[r] - ca_rot[r]).collect();
    Ok(Alignment {
        rotation,
        translation,
        residual: (sq / n as f64).sqrt(),
        aligned: PointSet::new(d, data)?,
    })
}

#[derive(Debug, Clone)]
pub struct Distortion {
    /// Statistics of the per-point errors.
    pub report: ErrorReport,
    /// `‖zᵢ − truthᵢ‖` after alignment, divided by the truth's bounding-box
    /// diagonal.
    pub per_point: Vec<f64>,
    pub alignment: Alignment,
}

/// Positional error of an embedding after optimal rigid alignment, relative
/// to the size of the ground truth.
pub fn embedding_distortion(z: &PointSet, truth: &PointSet) -> Result<Distortion> {
    let alignment = rigid_align(z, truth)?;
    let diag = truth.bbox_diagonal();
    let per_point: Vec<f64> = (0..z.len())
        .map(|i| crate::matrix::euclidean(alignment.aligned.point(i), truth.point(i)) / diag)
        .collect();
    Ok(Distortion {
        report: ErrorReport::from_errors(&per_point),
        per_point,
        alignment,
    })
}

/// Kruskal-style stress of an embedding against squared target distances.
pub fn stress(z: &PointSet, d2: &DenseMatrix) -> f64 {
    let n = z.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let target = d2[(i, j)].sqrt();
            num += (z.distance(i, j) - target).powi(2);
            den += target * target;
        }
    }
    if den == 0.0 {
        return 0.0;
    }
    (num / den).sqrt()
}

/// Agreement of polar angles about the origin between an embedding and
/// ground truth, after rigid alignment.
///
/// Angles are measured from each label's mean true direction, so a group
/// (e.g. a petal) whose internal fan is squeezed or sheared scores low even
/// when its overall heading is right.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularAgreement {
    /// Per label, the Pearson correlation of true and embedded angles.
    pub per_label: Vec<f64>,
    /// The same correlation over all scored points at once.
    pub pooled: f64,
    /// Mean resultant length of `exp(i(α − β))` over the scored points: 1
    /// when every angle agrees, near 0 when they are unrelated.
    pub resultant: f64,
    /// Points scored; those too close to the origin are skipped.
    pub scored: usize,
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

fn wrap(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = (a + PI).rem_euclid(2.0 * PI) - PI;
    if a == -PI {
        a = PI;
    }
    a
}

/// Compares angles of 2-D `z` and `truth` about the truth's origin. `z` is
/// first rigidly aligned onto `truth`; labels group points (e.g. petals).
/// Points whose true radius is below `min_radius` times the largest one are
/// skipped, since their angle is dominated by position noise.
pub fn angular_agreement(z: &PointSet, truth: &PointSet, labels: &[usize], min_radius: f64) -> Result<AngularAgreement> {
    if z.dim() != 2 || truth.dim() != 2 {
        return Err(Error::InvalidParam("angular agreement needs planar coordinates".into()));
    }
    if labels.len() != z.len() {
        return Err(Error::InvalidParam("one label per point is required".into()));
    }
    let aligned = rigid_align(z, truth)?.aligned;
    let angle = |p: &[f64]| p[1].atan2(p[0]);
    let radius = |p: &[f64]| p[0].hypot(p[1]);
    let largest = truth.iter().map(radius).fold(0.0, f64::max);
    let keep: Vec<bool> = truth.iter().map(|p| radius(p) >= min_radius * largest).collect();
    let alpha: Vec<f64> = aligned.iter().map(angle).collect();
    let beta: Vec<f64> = truth.iter().map(angle).collect();
    let groups = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut per_label = Vec::with_capacity(groups);
    let (mut all_t, mut all_e) = (Vec::new(), Vec::new());
    for g in 0..groups {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == g && keep[i]).collect();
        if members.len() < 2 {
            per_label.push(0.0);
            continue;
        }
        let (sx, sy) = members
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &i| (sx + beta[i].cos(), sy + beta[i].sin()));
        let axis = sy.atan2(sx);
        let t: Vec<f64> = members.iter().map(|&i| wrap(beta[i] - axis)).collect();
        let e: Vec<f64> = members.iter().map(|&i| wrap(alpha[i] - axis)).collect();
        per_label.push(pearson(&t, &e));
        all_t.extend(t);
        all_e.extend(e);
    }
    let scored = keep.iter().filter(|&&k| k).count();
    let (c, s) = (0..alpha.len())
        .filter(|&i| keep[i])
        .fold((0.0, 0.0), |(c, s), i| (c + (alpha[i] - beta[i]).cos(), s + (alpha[i] - beta[i]).sin()));
    Ok(AngularAgreement {
        per_label,
        pooled: if all_t.len() < 2 { 0.0 } else { pearson(&all_t, &all_e) },
        resultant: if scored == 0 { 0.0 } else { (c * c + s * s).sqrt() / scored as f64 },
        scored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_orthogonal, seeded};
    use proptest::prelude::*;
    use rand::Rng;

    fn cloud(n: usize, d: usize, seed: u64) -> PointSet {
        let mut rng = seeded(seed);
        PointSet::new(d, (0..n * d).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    fn moved(p: &PointSet, q: &DMatrix<f64>, t: &[f64]) -> PointSet {
        let d = p.dim();
        let mut data = Vec::new();
        for x in p.iter() {
            let y = q * nalgebra::DVector::from_column_slice(x);
            data.extend((0..d).map(|r| y[r] + t[r]));
        }
        PointSet::new(d, data).unwrap()
    }

    #[test]
    fn exact_and_scaled_estimates() {
        let truth = |i: usize, j: usize| (i as f64 - j as f64).abs();
        let r = geodesic_error(20, truth, truth, None);
        assert_eq!((r.mean, r.median, r.max), (0.0, 0.0, 0.0));
        let r = geodesic_error(20, |i, j| 1.1 * truth(i, j), truth, None);
        assert!((r.mean - 0.1).abs() < 1e-15 && (r.max - 0.1).abs() < 1e-15);
        assert_eq!(r.count, 190);
    }

    #[test]
    fn hop_bins_partition_the_pairs() {
        let truth = |i: usize, j: usize| (i as f64 - j as f64).abs();
        let hops = |i: usize, j: usize| i.abs_diff(j);
        let r = geodesic_error(6, |i, j| truth(i, j) + 0.5, truth, Some(&hops));
        let bins = r.by_hops.unwrap();
        assert_eq!(bins.len(), 5);
        assert_eq!(bins.iter().map(|b| b.2).sum::<usize>(), 15);
        assert!((bins[0].1 - 0.5).abs() < 1e-15);
        assert!((bins[4].1 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn coincident_pairs_are_skipped() {
        let truth = |i: usize, j: usize| if i / 2 == j / 2 { 0.0 } else { 1.0 };
        let r = geodesic_error(4, |_, _| 1.0, truth, None);
        assert_eq!(r.count, 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn report_is_scale_covariant(scale in 0.01f64..100.0, seed in 0u64..1000) {
            let mut rng = seeded(seed);
            let noise: Vec<f64> = (0..400).map(|_| 1.0 + 0.1 * rng.random::<f64>()).collect();
            let truth = |i: usize, j: usize| (i as f64 - j as f64).abs();
            let est = |i: usize, j: usize| truth(i, j) * noise[(i * 20 + j) % 400];
            let a = geodesic_error(20, est, truth, None);
            let b = geodesic_error(20, |i, j| scale * est(i, j), |i, j| scale * truth(i, j), None);
            prop_assert!((a.mean - b.mean).abs() <= 1e-12);
            prop_assert!((a.max - b.max).abs() <= 1e-12);
            prop_assert!(a.mean >= 0.0 && a.mean <= a.max);
        }

        #[test]
        fn alignment_residual_is_motion_invariant(seed in 0u64..1000) {
            let mut rng = seeded(seed);
            let a = cloud(40, 3, seed);
            let b = cloud(40, 3, seed + 1);
            let base = rigid_align(&a, &b).unwrap().residual;
            let q1 = random_orthogonal(3, &mut rng);
            let q2 = random_orthogonal(3, &mut rng);
            let a2 = moved(&a, &q1, &[1.0, -2.0, 0.5]);
            let b2 = moved(&b, &q2, &[0.0, 3.0, -1.0]);
            prop_assert!((rigid_align(&a2, &b2).unwrap().residual - base).abs() <= 1e-9);
        }
    }

    #[test]
    fn rotations_and_reflections_are_removed() {
        let a = cloud(30, 3, 1);
        let mut rng = seeded(2);
        let q = random_orthogonal(3, &mut rng);
        let b = moved(&a, &q, &[0.3, 0.1, -4.0]);
        assert!(rigid_align(&a, &b).unwrap().residual <= 1e-10);
        let mut flip = DMatrix::identity(3, 3);
        flip[(1, 1)] = -1.0;
        let c = moved(&a, &flip, &[0.0; 3]);
        let fit = rigid_align(&a, &c).unwrap();
        assert!(fit.residual <= 1e-10);
        assert!(fit.rotation.determinant() < 0.0);
    }

    #[test]
    fn alignment_beats_random_orthogonal_candidates() {
        let a = cloud(25, 2, 3);
        let b = cloud(25, 2, 4);
        let best = rigid_align(&a, &b).unwrap().residual;
        let (ca, cb) = (a.centroid(), b.centroid());
        let mut rng = seeded(5);
        for _ in 0..10_000 {
            let q = random_orthogonal(2, &mut rng);
            let mut sq = 0.0;
            for i in 0..25 {
                let x = nalgebra::DVector::from_fn(2, |r, _| a.point(i)[r] - ca[r]);
                let y = &q * x;
                sq += (0..2).map(|r| (y[r] + cb[r] - b.point(i)[r]).powi(2)).sum::<f64>();
            }
            assert!((sq / 25.0).sqrt() >= best - 1e-12);
        }
    }

    #[test]
    fn degenerate_configurations() {
        let line = PointSet::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(rigid_align(&line, &line), Err(Error::DegenerateConfig(_))));
        let two = PointSet::from_points(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(rigid_align(&two, &two), Err(Error::DegenerateConfig(_))));
    }

    #[test]
    fn distortion_ignores_translation() {
        let t = cloud(50, 2, 6);
        assert!(embedding_distortion(&t, &t).unwrap().report.max < 1e-12);
        let shifted = moved(&t, &DMatrix::identity(2, 2), &[5.0, -3.0]);
        assert!(embedding_distortion(&shifted, &t).unwrap().report.max < 1e-12);
    }

    #[test]
    fn stress_against_a_double_loop() {
        let z = cloud(30, 2, 7);
        let mut d2 = DenseMatrix::zeros(30, 30);
        for i in 0..30 {
            for j in 0..30 {
                d2[(i, j)] = z.distance(i, j).powi(2);
            }
        }
        assert_eq!(stress(&z, &d2), 0.0);
        let doubled = PointSet::new(2, z.as_slice().iter().map(|v| 2.0 * v).collect()).unwrap();
        let s = stress(&doubled, &d2);
        assert!((s - 1.0).abs() < 1e-12);
        let mut rng = seeded(8);
        let noisy = PointSet::new(2, z.as_slice().iter().map(|v| v + 0.01 * rng.random::<f64>()).collect()).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..30 {
            for j in 0..30 {
                if i < j {
                    num += (noisy.distance(i, j) - d2[(i, j)].sqrt()).powi(2);
                    den += d2[(i, j)];
                }
            }
        }
        assert!((stress(&noisy, &d2) - (num / den).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn angular_agreement_of_a_perfect_and_a_scrambled_layout() {
        let mut rng = seeded(9);
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for i in 0..400 {
            let label = i % 4;
            let phi = label as f64 * std::f64::consts::FRAC_PI_2 + 0.6 * (rng.random::<f64>() - 0.5);
            let r = 0.2 + rng.random::<f64>();
            pts.push(vec![r * phi.cos(), r * phi.sin()]);
            labels.push(label);
        }
        let truth = PointSet::from_points(&pts).unwrap();
        let q = random_orthogonal(2, &mut rng);
        let z = moved(&truth, &q, &[0.4, 0.2]);
        let agreement = angular_agreement(&z, &truth, &labels, 0.0).unwrap();
        assert!(agreement.per_label.iter().all(|&c| c > 1.0 - 1e-9));
        assert!(agreement.pooled > 1.0 - 1e-9);
        assert!(agreement.resultant > 1.0 - 1e-9);
        assert_eq!(agreement.scored, 400);
        assert!(angular_agreement(&z, &truth, &labels, 0.5).unwrap().scored < 400);

        let scrambled: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let phi = rng.random::<f64>() * std::f64::consts::TAU;
                vec![r * phi.cos(), r * phi.sin()]
            })
            .collect();
        let z = PointSet::from_points(&scrambled).unwrap();
        let agreement = angular_agreement(&z, &truth, &labels, 0.0).unwrap();
        assert!(agreement.resultant < 0.3);
        assert!(agreement.pooled.abs() < 0.5);
        assert!(agreement.per_label.iter().all(|&c| c.abs() < 0.5));
    }
}
