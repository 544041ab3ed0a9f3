//! End-to-end runs: graph, frames, connection, geodesics, MDS.

use crate::connection::ConnectionCache;
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, ensure_connected, KnnRule, ProximityGraph};
use crate::landmark::{embed_with_landmarks, select_landmarks, LandmarkSet, LandmarkStrategy};
use crate::matrix::{DenseMatrix, PointSet};
use crate::mds::{embed, Embedding};
use crate::tangent::{estimate_frames, TangentFrameSet};
use crate::transport::{all_pairs, landmark_geodesics, Engine, GeodesicMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Ptu,
    Isomap,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ptu" => Ok(Self::Ptu),
            "isomap" => Ok(Self::Isomap),
            other => Err(Error::InvalidParam(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ptu => "ptu",
            Self::Isomap => "isomap",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub method: Method,
    /// Graph neighbors; `None` means `4d`.
    pub k: Option<usize>,
    /// Tangent neighborhood size; `None` means `k`.
    pub k_tangent: Option<usize>,
    pub d: usize,
    pub knn_rule: KnnRule,
    /// Landmark count, `0` for the full method.
    pub landmarks: usize,
    pub landmark_strategy: LandmarkStrategy,
    pub rescale: bool,
    pub seed: u64,
    /// Worker threads, `0` for automatic. Applied by the caller.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: Method::Ptu,
            k: None,
            k_tangent: None,
            d: 2,
            knn_rule: KnnRule::Union,
            landmarks: 0,
            landmark_strategy: LandmarkStrategy::FarthestPoint,
            rescale: false,
            seed: 0,
            threads: 0,
        }
    }
}

impl PipelineConfig {
    pub fn graph_k(&self) -> usize {
        self.k.unwrap_or(4 * self.d)
    }

    pub fn tangent_k(&self) -> usize {
        self.k_tangent.unwrap_or_else(|| self.graph_k())
    }

    /// Checks parameter ranges against a point count.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if n < 2 {
            return bad(format!("at least two points are needed, got {n}"));
        }
        if self.d == 0 {
            return bad("target dimension must be at least 1".into());
        }
        if self.d >= n {
            return bad(format!("target dimension {} needs more than {n} points", self.d));
        }
        let k = self.graph_k();
        if k == 0 || k >= n {
            return bad(format!("k = {k} must lie in 1..{n}"));
        }
        if self.method == Method::Ptu {
            let kt = self.tangent_k();
            if kt < self.d || kt >= n {
                return bad(format!("K = {kt} must lie in {}..{n}", self.d));
            }
        }
        if self.landmarks != 0 && (self.landmarks < self.d + 1 || self.landmarks > n) {
            return bad(format!(
                "landmark count {} must be 0 or lie in {}..={n}",
                self.landmarks,
                self.d + 1
            ));
        }
        Ok(())
    }

    /// Every field as `key=value` pairs, defaults resolved.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        vec![
            ("method".into(), self.method.to_string()),
            ("k".into(), self.graph_k().to_string()),
            (
                "K".into(),
                if self.method == Method::Ptu {
                    self.tangent_k().to_string()
                } else {
                    "unused".into()
                },
            ),
            ("d".into(), self.d.to_string()),
            (
                "knn_rule".into(),
                match self.knn_rule {
                    KnnRule::Union => "union",
                    KnnRule::Mutual => "mutual",
                }
                .into(),
            ),
            ("landmarks".into(), self.landmarks.to_string()),
            ("landmark_strategy".into(), self.landmark_strategy.to_string()),
            ("rescale".into(), self.rescale.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("threads".into(), self.threads.to_string()),
        ]
    }
}

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validate,
    Graph,
    Frames,
    Connection,
    Landmarks,
    Geodesics,
    Mds,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Validate => "validate",
            Stage::Graph => "graph",
            Stage::Frames => "frames",
            Stage::Connection => "connection",
            Stage::Landmarks => "landmarks",
            Stage::Geodesics => "geodesics",
            Stage::Mds => "mds",
        }
    }
}

/// An error tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("{}: {error}", stage.name())]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub error: Error,
}

pub type StageResult<T> = std::result::Result<T, StageError>;

trait Tag<T> {
    fn at(self, stage: Stage) -> StageResult<T>;
}

impl<T> Tag<T> for Result<T> {
    fn at(self, stage: Stage) -> StageResult<T> {
        self.map_err(|error| StageError { stage, error })
    }
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// The browser target has no monotonic clock in `std`; stages report zero.
#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    (f(), 0.0)
}

/// Wall time per executed stage, in execution order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings(pub Vec<(Stage, f64)>);

impl Timings {
    fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T>) -> StageResult<T> {
        let (out, secs) = timed(f);
        let out = out.at(stage)?;
        self.0.push((stage, secs));
        Ok(out)
    }

    /// Seconds spent in `stage`, if it ran.
    pub fn get(&self, stage: Stage) -> Option<f64> {
        self.0.iter().find(|(s, _)| *s == stage).map(|(_, t)| *t)
    }
}

/// Everything a full or landmark run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub embedding: Embedding,
    /// Full geodesic matrix; absent for landmark runs.
    pub geodesics: Option<GeodesicMatrix>,
    /// `n × ℓ` distances to the landmarks, for landmark runs.
    pub landmark_distances: Option<DenseMatrix>,
    pub landmarks: Option<LandmarkSet>,
    pub timings: Timings,
    pub edge_count: usize,
    pub warnings: Vec<String>,
}

/// Graph, frames and connection, when the method uses them.
struct Prepared {
    graph: ProximityGraph,
    frames: Option<TangentFrameSet>,
}

fn prepare(points: &PointSet, cfg: &PipelineConfig, timings: &mut Timings) -> StageResult<Prepared> {
    cfg.validate(points.len()).at(Stage::Validate)?;
    let graph = timings.time(Stage::Graph, || {
        let g = build_knn_graph(points, cfg.graph_k(), cfg.knn_rule)?;
        ensure_connected(&g)?;
        Ok(g)
    })?;
    let frames = match cfg.method {
        Method::Ptu => Some(timings.time(Stage::Frames, || estimate_frames(points, &graph, cfg.d, cfg.tangent_k()))?),
        Method::Isomap => None,
    };
    Ok(Prepared { graph, frames })
}

fn with_engine<T>(
    points: &PointSet,
    cfg: &PipelineConfig,
    prepared: &Prepared,
    timings: &mut Timings,
    warnings: &mut Vec<String>,
    f: impl FnOnce(Engine<'_>, &mut Timings, &mut Vec<String>) -> StageResult<T>,
) -> StageResult<T> {
    match &prepared.frames {
        Some(frames) => {
            let cache = timings.time(Stage::Connection, || ConnectionCache::build(points, frames, &prepared.graph))?;
            if !cache.ill_conditioned.is_empty() {
                warnings.push(format!(
                    "{} edges join nearly orthogonal tangent frames",
                    cache.ill_conditioned.len()
                ));
            }
            f(
                Engine::Ptu {
                    cache: &cache,
                    rescale: cfg.rescale,
                },
                timings,
                warnings,
            )
        }
        None => f(Engine::Dijkstra { graph: &prepared.graph }, timings, warnings),
    }
}

/// Geodesic distance matrix only.
pub fn compute_geodesics(points: &PointSet, cfg: &PipelineConfig) -> StageResult<(GeodesicMatrix, Timings, Vec<String>)> {
    full_geodesics(points, cfg).map(|(gm, timings, warnings, _)| (gm, timings, warnings))
}

fn full_geodesics(
    points: &PointSet,
    cfg: &PipelineConfig,
) -> StageResult<(GeodesicMatrix, Timings, Vec<String>, usize)> {
    let mut timings = Timings::default();
    let mut warnings = Vec::new();
    let prepared = prepare(points, cfg, &mut timings)?;
    let gm = with_engine(points, cfg, &prepared, &mut timings, &mut warnings, |engine, timings, warnings| {
        let keep_raw = matches!(engine, Engine::Ptu { .. });
        let gm = timings.time(Stage::Geodesics, || all_pairs(engine, keep_raw))?;
        if let Some(report) = gm.asymmetry() {
            if report.flagged > 0 {
                warnings.push(format!(
                    "{} pairs have directed spans differing by more than {}% (worst {:.3}%)",
                    report.flagged,
                    crate::transport::ASYMMETRY_THRESHOLD * 100.0,
                    report.max * 100.0
                ));
            }
        }
        Ok(gm)
    })?;
    Ok((gm, timings, warnings, prepared.graph.edge_count()))
}

/// Runs the configured pipeline.
pub fn run(points: &PointSet, cfg: &PipelineConfig) -> StageResult<PipelineOutput> {
    if cfg.landmarks == 0 {
        let (gm, mut timings, mut warnings, edge_count) = full_geodesics(points, cfg)?;
        let embedding = timings.time(Stage::Mds, || embed(&gm, cfg.d))?;
        warnings.extend(embedding.warnings.iter().map(ToString::to_string));
        return Ok(PipelineOutput {
            embedding,
            geodesics: Some(gm),
            landmark_distances: None,
            landmarks: None,
            timings,
            edge_count,
            warnings,
        });
    }

    let mut timings = Timings::default();
    let mut warnings = Vec::new();
    let prepared = prepare(points, cfg, &mut timings)?;
    let edge_count = prepared.graph.edge_count();
    let (embedding, set, dist) = with_engine(points, cfg, &prepared, &mut timings, &mut warnings, |engine, timings, _| {
        let set = timings.time(Stage::Landmarks, || {
            select_landmarks(engine.graph(), cfg.landmarks, cfg.landmark_strategy, cfg.seed)
        })?;
        let dist = timings.time(Stage::Geodesics, || landmark_geodesics(engine, &set.indices))?;
        let embedding = timings.time(Stage::Mds, || embed_with_landmarks(&dist, &set.indices, cfg.d))?;
        Ok((embedding, set, dist))
    })?;
    warnings.extend(embedding.warnings.iter().map(ToString::to_string));
    Ok(PipelineOutput {
        embedding,
        geodesics: None,
        landmark_distances: Some(dist),
        landmarks: Some(set),
        timings,
        edge_count,
        warnings,
    })
}
