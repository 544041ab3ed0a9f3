//! Browser bindings: embed a generated dataset, and compare graph and
//! transported geodesics on a spherical cap by path length.

use ptu_core::connection::ConnectionCache;
use ptu_core::datasets::{
    default_bumps, gen_flat_patch, gen_gaussian_landscape, gen_petals, gen_s_shape, gen_spherical_cap, gen_swiss_roll,
    s_shape_default_hole, Hole, Noise, SyntheticDataset,
};
use ptu_core::graph::{build_knn_graph, dijkstra, ensure_connected, KnnRule};
use ptu_core::metrics::{embedding_distortion, geodesic_error, rigid_align};
use ptu_core::pipeline::{run, Method, PipelineConfig};
use ptu_core::tangent::estimate_frames;
use ptu_core::transport::{all_pairs, Engine};
use ptu_core::PointSet;
use wasm_bindgen::prelude::*;

pub const DATASETS: [&str; 5] = ["swissroll", "s-hole", "petals", "flat-hole", "landscape"];

/// A dataset, its two-dimensional embedding and what to draw.
#[derive(Debug, Clone)]
pub struct DemoEmbedding {
    /// First three ambient coordinates per point, row-major.
    pub points: Vec<f64>,
    /// Embedding coordinates, rigidly aligned to the truth when one exists.
    pub coords: Vec<f64>,
    /// A value in `[0, 1]` per point for coloring.
    pub shade: Vec<f64>,
    pub landmarks: Vec<u32>,
    /// Median positional error over the truth's bounding-box diagonal.
    pub distortion: Option<f64>,
    pub warnings: Vec<String>,
}

fn dataset(name: &str, n: usize, seed: u64, noise: f64) -> Result<SyntheticDataset, String> {
    let ds = match name {
        "swissroll" => gen_swiss_roll(
            n,
            seed,
            if noise > 0.0 {
                Noise::Gaussian { sigma: noise }
            } else {
                Noise::None
            },
        ),
        "s-hole" => gen_s_shape(n, seed, Some(&s_shape_default_hole()), None),
        "petals" => gen_petals(n, seed, 4, noise),
        "flat-hole" => gen_flat_patch(
            n,
            3,
            2,
            seed,
            Some(&Hole {
                lo: vec![0.25; 2],
                hi: vec![0.75; 2],
            }),
        ),
        "landscape" => gen_gaussian_landscape(n, seed, &default_bumps()),
        other => return Err(format!("unknown dataset '{other}'")),
    };
    ds.map_err(|e| e.to_string())
}

fn normalized(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let v: Vec<f64> = values.collect();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    v.into_iter().map(|x| (x - lo) / span).collect()
}

fn shade(ds: &SyntheticDataset) -> Vec<f64> {
    let n = ds.points.len();
    if let Some(labels) = &ds.labels {
        let top = labels.iter().copied().max().unwrap_or(0).max(1) as f64;
        return labels.iter().map(|&l| l as f64 / top).collect();
    }
    match &ds.ground_truth {
        Some(t) => normalized((0..n).map(|i| t.point(i)[0])),
        None => normalized((0..n).map(|i| ds.points.point(i)[ds.points.dim() - 1])),
    }
}

/// Generates `name` and embeds it in the plane.
///
/// `k` and `k_tangent` of `0` take the pipeline defaults; `landmarks` of `0`
/// runs the full method.
#[allow(clippy::too_many_arguments)]
pub fn embed_dataset(
    name: &str,
    n: usize,
    seed: u64,
    noise: f64,
    method: &str,
    k: usize,
    k_tangent: usize,
    landmarks: usize,
) -> Result<DemoEmbedding, String> {
    let ds = dataset(name, n, seed, noise)?;
    let cfg = PipelineConfig {
        method: method.parse::<Method>().map_err(|e| e.to_string())?,
        k: (k > 0).then_some(k),
        k_tangent: (k_tangent > 0).then_some(k_tangent),
        landmarks,
        seed,
        ..PipelineConfig::default()
    };
    let out = run(&ds.points, &cfg).map_err(|e| e.to_string())?;
    let z = &out.embedding.coords;
    let (coords, distortion) = match &ds.ground_truth {
        Some(t) => {
            let aligned = rigid_align(z, t).map_err(|e| e.to_string())?.aligned;
            let d = embedding_distortion(z, t).map_err(|e| e.to_string())?;
            (aligned, Some(d.report.median))
        }
        None => (z.clone(), None),
    };
    let shown = ds.points.dim().min(3);
    Ok(DemoEmbedding {
        points: (0..ds.points.len()).flat_map(|i| ds.points.point(i)[..shown].to_vec()).collect(),
        coords: flat(&coords),
        shade: shade(&ds),
        landmarks: out
            .landmarks
            .map(|s| s.indices.iter().map(|&i| i as u32).collect())
            .unwrap_or_default(),
        distortion,
        warnings: out.warnings,
    })
}

fn flat(p: &PointSet) -> Vec<f64> {
    (0..p.len()).flat_map(|i| p.point(i).to_vec()).collect()
}

/// Mean relative geodesic error per hop count on a spherical cap.
#[derive(Debug, Clone, PartialEq)]
pub struct HopErrors {
    pub hops: Vec<u32>,
    pub graph: Vec<f64>,
    pub transported: Vec<f64>,
    pub graph_mean: f64,
    pub transported_mean: f64,
}

pub fn cap_errors(n: usize, k: usize, cap_angle: f64) -> Result<HopErrors, String> {
    let fail = |e: ptu_core::Error| e.to_string();
    let ds = gen_spherical_cap(n, cap_angle).map_err(fail)?;
    let n = ds.points.len();
    if k == 0 || k >= n {
        return Err(format!("k = {k} must lie in 1..{n}"));
    }
    let g = build_knn_graph(&ds.points, k, KnnRule::Union).map_err(fail)?;
    ensure_connected(&g).map_err(fail)?;
    let frames = estimate_frames(&ds.points, &g, 2, k).map_err(fail)?;
    let cache = ConnectionCache::build(&ds.points, &frames, &g).map_err(fail)?;
    let plain = all_pairs(Engine::Dijkstra { graph: &g }, false).map_err(fail)?;
    let ptu = all_pairs(Engine::Ptu { cache: &cache, rescale: false }, false).map_err(fail)?;

    let hop_rows: Vec<Vec<usize>> = (0..n)
        .map(|s| dijkstra(&g, s).hop_counts().into_iter().map(|h| h.unwrap_or(0)).collect())
        .collect();
    let hops = |i: usize, j: usize| hop_rows[i][j];
    let truth = |i: usize, j: usize| ds.geodesic(i, j).unwrap_or(0.0);
    let a = geodesic_error(n, |i, j| plain.distance(i, j), truth, Some(&hops));
    let b = geodesic_error(n, |i, j| ptu.distance(i, j), truth, Some(&hops));
    let (ha, hb) = (a.by_hops.unwrap_or_default(), b.by_hops.unwrap_or_default());
    Ok(HopErrors {
        hops: ha.iter().map(|&(h, _, _)| h as u32).collect(),
        graph: ha.iter().map(|&(_, e, _)| e).collect(),
        transported: hb.iter().map(|&(_, e, _)| e).collect(),
        graph_mean: a.mean,
        transported_mean: b.mean,
    })
}

#[wasm_bindgen]
pub struct Embedded(DemoEmbedding);

#[wasm_bindgen]
impl Embedded {
    pub fn points(&self) -> Vec<f64> {
        self.0.points.clone()
    }

    pub fn coords(&self) -> Vec<f64> {
        self.0.coords.clone()
    }

    pub fn shade(&self) -> Vec<f64> {
        self.0.shade.clone()
    }

    pub fn landmarks(&self) -> Vec<u32> {
        self.0.landmarks.clone()
    }

    /// `NaN` when the dataset has no flat ground truth.
    pub fn distortion(&self) -> f64 {
        self.0.distortion.unwrap_or(f64::NAN)
    }

    pub fn warnings(&self) -> String {
        self.0.warnings.join("\n")
    }
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn embed(
    dataset: &str,
    n: u32,
    seed: u32,
    noise: f64,
    method: &str,
    k: u32,
    k_tangent: u32,
    landmarks: u32,
) -> Result<Embedded, JsError> {
    embed_dataset(
        dataset,
        n as usize,
        seed as u64,
        noise,
        method,
        k as usize,
        k_tangent as usize,
        landmarks as usize,
    )
    .map(Embedded)
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct HopChart(HopErrors);

#[wasm_bindgen]
impl HopChart {
    pub fn hops(&self) -> Vec<u32> {
        self.0.hops.clone()
    }

    pub fn graph(&self) -> Vec<f64> {
        self.0.graph.clone()
    }

    pub fn transported(&self) -> Vec<f64> {
        self.0.transported.clone()
    }

    pub fn graph_mean(&self) -> f64 {
        self.0.graph_mean
    }

    pub fn transported_mean(&self) -> f64 {
        self.0.transported_mean
    }
}

#[wasm_bindgen]
pub fn cap_geodesics(n: u32, k: u32, cap_angle: f64) -> Result<HopChart, JsError> {
    cap_errors(n as usize, k as usize, cap_angle)
        .map(HopChart)
        .map_err(|e| JsError::new(&e))
}
