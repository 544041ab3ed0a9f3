//! Seeded synthetic manifolds with known intrinsic structure.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{euclidean, PointSet};
use crate::rng::{random_orthogonal, seeded, Rng};

/// How exact geodesic distances between samples can be computed.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticGeodesic {
    None,
    /// Straight-line distance between ground-truth coordinates (developable
    /// or flat data).
    TruthEuclidean,
    /// Great-circle arc length between the listed points of a sphere with
    /// the given radius.
    SphereArc { radius: f64, on_sphere: PointSet },
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub name: String,
    pub points: PointSet,
    /// Intrinsic coordinates, one per point, when a flat layout exists.
    pub ground_truth: Option<PointSet>,
    pub geodesic: AnalyticGeodesic,
    /// Group index per point (petal membership), when meaningful.
    pub labels: Option<Vec<usize>>,
    /// Generator parameters as key/value text.
    pub metadata: Vec<(String, String)>,
}

impl SyntheticDataset {
    pub fn has_analytic_geodesics(&self) -> bool {
        match self.geodesic {
            AnalyticGeodesic::None => false,
            AnalyticGeodesic::TruthEuclidean => self.ground_truth.is_some(),
            AnalyticGeodesic::SphereArc { .. } => true,
        }
    }

    /// Exact geodesic distance between samples `i` and `j`, if known.
    pub fn geodesic(&self, i: usize, j: usize) -> Option<f64> {
        match &self.geodesic {
            AnalyticGeodesic::None => None,
            AnalyticGeodesic::TruthEuclidean => self.ground_truth.as_ref().map(|t| t.distance(i, j)),
            AnalyticGeodesic::SphereArc { radius, on_sphere } => {
                let (a, b) = (on_sphere.point(i), on_sphere.point(j));
                let c = crate::matrix::dot(a, b) / (radius * radius);
                Some(radius * c.clamp(-1.0, 1.0).acos())
            }
        }
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }
}

/// Axis-aligned box `[lo, hi]` removed from intrinsic coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Hole {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Hole {
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(&self.lo).zip(&self.hi).all(|((v, lo), hi)| v >= lo && v <= hi)
    }

    fn describe(&self) -> String {
        format!("{:?}..{:?}", self.lo, self.hi)
    }
}

/// Displacement along the surface normal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Noise {
    #[default]
    None,
    Gaussian { sigma: f64 },
    /// A `fraction` of the points moves uniformly within `±amplitude`; the
    /// rest receive Gaussian noise of deviation `sigma`.
    Sparse { fraction: f64, amplitude: f64, sigma: f64 },
}

impl Noise {
    /// Normal offsets for `n` points.
    fn offsets(&self, n: usize, rng: &mut Rng) -> Vec<f64> {
        match *self {
            Noise::None => vec![0.0; n],
            Noise::Gaussian { sigma } => (0..n).map(|_| sigma * gauss(rng)).collect(),
            Noise::Sparse {
                fraction,
                amplitude,
                sigma,
            } => {
                let mut out: Vec<f64> = (0..n).map(|_| sigma * gauss(rng)).collect();
                let count = ((fraction * n as f64).round() as usize).min(n);
                for i in sample(rng, n, count) {
                    out[i] = amplitude * (2.0 * rng.random::<f64>() - 1.0);
                }
                out
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            Noise::None => "none".into(),
            Noise::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
            Noise::Sparse {
                fraction,
                amplitude,
                sigma,
            } => format!("sparse(fraction={fraction},amplitude={amplitude},sigma={sigma})"),
        }
    }
}

fn gauss(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn dataset(name: &str, points: Vec<f64>, dim: usize, truth: Option<(Vec<f64>, usize)>) -> Result<SyntheticDataset> {
    let ground_truth = truth.map(|(t, d)| PointSet::new(d, t)).transpose()?;
    Ok(SyntheticDataset {
        name: name.to_string(),
        points: PointSet::new(dim, points)?,
        geodesic: if ground_truth.is_some() {
            AnalyticGeodesic::TruthEuclidean
        } else {
            AnalyticGeodesic::None
        },
        ground_truth,
        labels: None,
        metadata: Vec::new(),
    })
}

/// Uniform samples of `[0, 1]ᵈ`, minus `hole`, placed in `ℝᴰ` by a seeded
/// rotation and translation.
pub fn gen_flat_patch(n: usize, ambient: usize, d: usize, seed: u64, hole: Option<&Hole>) -> Result<SyntheticDataset> {
    if d == 0 || d >= ambient {
        return Err(Error::InvalidParam(format!(
            "patch dimension {d} must lie in 1..{ambient}"
        )));
    }
    if let Some(h) = hole {
        if h.lo.len() != d || h.hi.len() != d {
            return Err(Error::InvalidParam("hole must have one bound per intrinsic axis".into()));
        }
        let volume: f64 = h.lo.iter().zip(&h.hi).map(|(lo, hi)| (hi.min(1.0) - lo.max(0.0)).max(0.0)).product();
        if volume >= 1.0 {
            return Err(Error::InvalidParam("hole covers the whole patch".into()));
        }
    }
    let mut rng = seeded(seed);
    let q = random_orthogonal(ambient, &mut rng);
    let shift: Vec<f64> = (0..ambient).map(|_| rng.random::<f64>()).collect();
    let mut truth = Vec::with_capacity(n * d);
    let mut points = Vec::with_capacity(n * ambient);
    let mut u = vec![0.0; d];
    let mut accepted = 0;
    while accepted < n {
        u.iter_mut().for_each(|v| *v = rng.random::<f64>());
        if hole.is_some_and(|h| h.contains(&u)) {
            continue;
        }
        truth.extend_from_slice(&u);
        for r in 0..ambient {
            points.push(shift[r] + (0..d).map(|c| q[(r, c)] * u[c]).sum::<f64>());
        }
        accepted += 1;
    }
    Ok(dataset("flat", points, ambient, Some((truth, d)))?
        .meta("n", n)
        .meta("ambient_dim", ambient)
        .meta("intrinsic_dim", d)
        .meta("seed", seed)
        .meta("hole", hole.map_or("none".into(), Hole::describe)))
}

/// Parameter range of the Swiss roll spiral.
pub const SWISS_T: (f64, f64) = (1.5 * PI, 4.5 * PI);
/// Height of the Swiss roll before scaling.
pub const SWISS_HEIGHT: f64 = 21.0;

fn spiral_arc_length(t: f64) -> f64 {
    0.5 * (t * (1.0 + t * t).sqrt() + t.asinh())
}

fn spiral_parameter(s: f64) -> f64 {
    // Newton on the monotone arc length, started from the asymptote s ≈ t²/2.
    let mut t = (2.0 * s).sqrt().max(SWISS_T.0);
    for _ in 0..50 {
        let step = (spiral_arc_length(t) - s) / (1.0 + t * t).sqrt();
        t -= step;
        if step.abs() < 1e-15 * t {
            break;
        }
    }
    t
}

/// Factor scaling the roll to unit largest bounding-box extent.
pub fn swiss_roll_scale() -> f64 {
    let (mut xmin, mut xmax, mut zmin, mut zmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    let steps = 100_000;
    for k in 0..=steps {
        let t = SWISS_T.0 + (SWISS_T.1 - SWISS_T.0) * k as f64 / steps as f64;
        let (x, z) = (t * t.cos(), t * t.sin());
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        zmin = zmin.min(z);
        zmax = zmax.max(z);
    }
    1.0 / (xmax - xmin).max(zmax - zmin).max(SWISS_HEIGHT)
}

/// `(t cos t, h, t sin t)` sampled uniformly by area, scaled to unit extent.
/// Noise amplitudes are fractions of that extent.
pub fn gen_swiss_roll(n: usize, seed: u64, noise: Noise) -> Result<SyntheticDataset> {
    let mut rng = seeded(seed);
    let scale = swiss_roll_scale();
    let (s0, s1) = (spiral_arc_length(SWISS_T.0), spiral_arc_length(SWISS_T.1));
    let params: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            let s = s0 + (s1 - s0) * rng.random::<f64>();
            let h = SWISS_HEIGHT * rng.random::<f64>();
            (spiral_parameter(s), h, s)
        })
        .collect();
    let offsets = noise.offsets(n, &mut rng);
    let mut points = Vec::with_capacity(3 * n);
    let mut truth = Vec::with_capacity(2 * n);
    for (&(t, h, s), off) in params.iter().zip(offsets) {
        let (c, sn) = (t.cos(), t.sin());
        let normal = [-(sn + t * c), 0.0, c - t * sn];
        let len = (normal[0] * normal[0] + normal[2] * normal[2]).sqrt();
        points.push(scale * t * c + off * normal[0] / len);
        points.push(scale * h);
        points.push(scale * t * sn + off * normal[2] / len);
        truth.push(scale * (s - s0));
        truth.push(scale * h);
    }
    Ok(dataset("swissroll", points, 3, Some((truth, 2)))?
        .meta("n", n)
        .meta("seed", seed)
        .meta("t_range", format!("{}..{}", SWISS_T.0, SWISS_T.1))
        .meta("height", SWISS_HEIGHT)
        .meta("scale", scale)
        .meta("noise", noise.describe()))
}

/// Arc-length range of the S curve.
pub const S_T: (f64, f64) = (-1.5 * PI, 1.5 * PI);
pub const S_HEIGHT: f64 = 2.0;

/// The central void used by the holey S: the middle third of its length and
/// half of its height.
pub fn s_shape_default_hole() -> Hole {
    Hole {
        lo: vec![-0.5 * PI, 0.5],
        hi: vec![0.5 * PI, 1.5],
    }
}

/// S-shaped developable strip `(sin t, h, sign(t)(cos t − 1))`, whose
/// ground truth is `(t, h)`. `density_warp = γ` draws the position along the
/// curve as `u^γ`, concentrating samples at one end.
pub fn gen_s_shape(n: usize, seed: u64, hole: Option<&Hole>, density_warp: Option<f64>) -> Result<SyntheticDataset> {
    if let Some(g) = density_warp {
        if !(g > 0.0) {
            return Err(Error::InvalidParam("density warp exponent must be positive".into()));
        }
    }
    let mut rng = seeded(seed);
    let mut points = Vec::with_capacity(3 * n);
    let mut truth = Vec::with_capacity(2 * n);
    while truth.len() < 2 * n {
        let mut u = rng.random::<f64>();
        if let Some(g) = density_warp {
            u = u.powf(g);
        }
        let t = S_T.0 + (S_T.1 - S_T.0) * u;
        let h = S_HEIGHT * rng.random::<f64>();
        if hole.is_some_and(|hl| hl.contains(&[t, h])) {
            continue;
        }
        points.extend([t.sin(), h, t.signum() * (t.cos() - 1.0)]);
        truth.extend([t, h]);
    }
    Ok(dataset("s", points, 3, Some((truth, 2)))?
        .meta("n", n)
        .meta("seed", seed)
        .meta("hole", hole.map_or("none".into(), Hole::describe))
        .meta("density_warp", density_warp.map_or("none".into(), |g| g.to_string())))
}

/// Polar extent of the petal tips, in radians from the pole.
pub const PETAL_CAP: f64 = 2.4;
/// Exponent narrowing the petals toward their tips.
pub const PETAL_SHARPNESS: f64 = 2.0;

/// Shape of the petal region on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PetalShape {
    pub count: usize,
    pub cap: f64,
    pub sharpness: f64,
}

impl PetalShape {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            cap: PETAL_CAP,
            sharpness: PETAL_SHARPNESS,
        }
    }
}

/// Points of the unit sphere whose polar angle from the north pole satisfies
/// `θ ≤ cap · |cos(count/2 · φ)|^sharpness`, sampled uniformly by area.
///
/// Ground truth is the azimuthal equidistant layout `(θ cos φ, θ sin φ)`,
/// which keeps distances to the pole and angles at the pole. Noise displaces
/// points radially by `sigma` (a fraction of the radius).
pub fn gen_petals(n: usize, seed: u64, petal_count: usize, sigma: f64) -> Result<SyntheticDataset> {
    gen_petals_shaped(n, seed, PetalShape::new(petal_count), sigma)
}

pub fn gen_petals_shaped(n: usize, seed: u64, shape: PetalShape, sigma: f64) -> Result<SyntheticDataset> {
    let PetalShape {
        count: petal_count,
        cap,
        sharpness,
    } = shape;
    if petal_count == 0 || petal_count % 2 == 1 {
        return Err(Error::InvalidParam(format!(
            "petal count {petal_count} must be a positive even number"
        )));
    }
    if !(cap > 0.0 && cap < PI) {
        return Err(Error::InvalidParam(format!("petal cap {cap} must lie in (0, π)")));
    }
    if !(sharpness > 0.0 && sharpness.is_finite()) {
        return Err(Error::InvalidParam(format!("petal sharpness {sharpness} must be positive")));
    }
    let mut rng = seeded(seed);
    let half = petal_count as f64 / 2.0;
    let mut sphere = Vec::with_capacity(3 * n);
    let mut truth = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    let zmin = cap.cos();
    while labels.len() < n {
        let phi = 2.0 * PI * rng.random::<f64>();
        let z = zmin + (1.0 - zmin) * rng.random::<f64>();
        let theta = z.clamp(-1.0, 1.0).acos();
        if theta > cap * (half * phi).cos().abs().powf(sharpness) {
            continue;
        }
        let r = (1.0 - z * z).max(0.0).sqrt();
        sphere.extend([r * phi.cos(), r * phi.sin(), z]);
        truth.extend([theta * phi.cos(), theta * phi.sin()]);
        labels.push((phi * petal_count as f64 / (2.0 * PI)).round() as usize % petal_count);
    }
    let on_sphere = PointSet::new(3, sphere)?;
    let points = if sigma > 0.0 {
        let mut data = Vec::with_capacity(3 * n);
        for p in on_sphere.iter() {
            let f = 1.0 + sigma * gauss(&mut rng);
            data.extend(p.iter().map(|v| v * f));
        }
        PointSet::new(3, data)?
    } else {
        on_sphere.clone()
    };
    Ok(SyntheticDataset {
        name: "petals".into(),
        points,
        ground_truth: Some(PointSet::new(2, truth)?),
        geodesic: AnalyticGeodesic::SphereArc {
            radius: 1.0,
            on_sphere,
        },
        labels: Some(labels),
        metadata: Vec::new(),
    }
    .meta("n", n)
    .meta("seed", seed)
    .meta("petal_count", petal_count)
    .meta("noise_sigma", sigma)
    .meta("boundary", format!("theta <= {cap} * |cos({half} * phi)|^{sharpness}"))
    .meta("truth", "azimuthal equidistant (theta cos phi, theta sin phi)"))
}

/// Fibonacci-spiral sampling of the unit-sphere cap within `cap_angle` of
/// the north pole, `grid_m` points.
pub fn gen_spherical_cap(grid_m: usize, cap_angle: f64) -> Result<SyntheticDataset> {
    if grid_m < 2 || !(cap_angle > 0.0 && cap_angle <= PI) {
        return Err(Error::InvalidParam("cap needs at least two points and an angle in (0, π]".into()));
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    let zmin = cap_angle.cos();
    let mut data = Vec::with_capacity(3 * grid_m);
    for i in 0..grid_m {
        let z = 1.0 - (1.0 - zmin) * (i as f64 + 0.5) / grid_m as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden * i as f64;
        data.extend([r * phi.cos(), r * phi.sin(), z]);
    }
    let points = PointSet::new(3, data)?;
    Ok(SyntheticDataset {
        name: "cap".into(),
        geodesic: AnalyticGeodesic::SphereArc {
            radius: 1.0,
            on_sphere: points.clone(),
        },
        points,
        ground_truth: None,
        labels: None,
        metadata: Vec::new(),
    }
    .meta("n", grid_m)
    .meta("cap_angle", cap_angle))
}

pub const TORUS_MAJOR: f64 = 1.0;
pub const TORUS_MINOR: f64 = 0.35;

/// Uniform samples of the solid torus in `ℝ³`, with a fourth coordinate that
/// is `0` (flat) or `(x² + y²)/2` (curved). Ground truth is the 3-D point.
pub fn gen_torus4d(n: usize, seed: u64, curved: bool) -> Result<SyntheticDataset> {
    let mut rng = seeded(seed);
    let (big, small) = (TORUS_MAJOR, TORUS_MINOR);
    let ext = big + small;
    let mut points = Vec::with_capacity(4 * n);
    let mut truth = Vec::with_capacity(3 * n);
    while truth.len() < 3 * n {
        let x = ext * (2.0 * rng.random::<f64>() - 1.0);
        let y = ext * (2.0 * rng.random::<f64>() - 1.0);
        let z = small * (2.0 * rng.random::<f64>() - 1.0);
        let ring = (x * x + y * y).sqrt() - big;
        if ring * ring + z * z > small * small {
            continue;
        }
        let w = if curved { 0.5 * (x * x + y * y) } else { 0.0 };
        points.extend([x, y, z, w]);
        truth.extend([x, y, z]);
    }
    Ok(dataset(if curved { "torus-curved" } else { "torus" }, points, 4, Some((truth, 3)))?
        .meta("n", n)
        .meta("seed", seed)
        .meta("major_radius", big)
        .meta("minor_radius", small)
        .meta("curved", curved))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: [f64; 2],
    pub amplitude: f64,
    pub width: f64,
}

pub fn default_bumps() -> [Bump; 2] {
    [
        Bump {
            center: [-0.4, -0.3],
            amplitude: 0.6,
            width: 0.25,
        },
        Bump {
            center: [0.45, 0.35],
            amplitude: 0.45,
            width: 0.3,
        },
    ]
}

pub fn landscape_height(bumps: &[Bump], x: f64, y: f64) -> f64 {
    bumps
        .iter()
        .map(|b| {
            let r2 = (x - b.center[0]).powi(2) + (y - b.center[1]).powi(2);
            b.amplitude * (-r2 / (2.0 * b.width * b.width)).exp()
        })
        .sum()
}

/// Height field over `[−1, 1]²` made of Gaussian bumps. Not developable, so
/// there is no ground truth.
pub fn gen_gaussian_landscape(n: usize, seed: u64, bumps: &[Bump]) -> Result<SyntheticDataset> {
    let mut rng = seeded(seed);
    let mut points = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let x = 2.0 * rng.random::<f64>() - 1.0;
        let y = 2.0 * rng.random::<f64>() - 1.0;
        points.extend([x, y, landscape_height(bumps, x, y)]);
    }
    Ok(dataset("landscape", points, 3, None)?
        .meta("n", n)
        .meta("seed", seed)
        .meta("bumps", bumps.len()))
}

/// Pads the points with zeros up to `target_dim` coordinates and applies a
/// seeded random orthogonal map. Ground truth and geodesics are unchanged.
pub fn apply_random_isometry(ds: &SyntheticDataset, target_dim: usize, seed: u64) -> Result<SyntheticDataset> {
    let dim = ds.points.dim();
    if target_dim < dim {
        return Err(Error::InvalidParam(format!(
            "cannot lift {dim}-dimensional points into {target_dim} dimensions"
        )));
    }
    let q = random_orthogonal(target_dim, &mut seeded(seed));
    let mut data = Vec::with_capacity(ds.points.len() * target_dim);
    for p in ds.points.iter() {
        for r in 0..target_dim {
            data.push((0..dim).map(|c| q[(r, c)] * p[c]).sum::<f64>());
        }
    }
    let mut out = ds.clone();
    out.points = PointSet::new(target_dim, data)?;
    out.metadata.push(("lifted_dim".into(), target_dim.to_string()));
    out.metadata.push(("lift_seed".into(), seed.to_string()));
    Ok(out)
}

/// Maximum deviation of pairwise distances between two point sets of equal
/// size.
pub fn max_distance_change(a: &PointSet, b: &PointSet) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            worst = worst.max((euclidean(a.point(i), a.point(j)) - euclidean(b.point(i), b.point(j))).abs());
        }
    }
    worst
}
