//! `evaluate`: error report of an embedding or distance matrix.

use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args};
use ptu_core::io::{read_matrix_csv, read_points_csv, write_matrix_csv};
use ptu_core::metrics::{angular_agreement, embedding_distortion, geodesic_error, ErrorReport};
use ptu_core::{DenseMatrix, PointSet};
use serde_json::{Map, Value};

use crate::{CmdResult, Failure};

/// Points closer to the origin than this fraction of the largest radius are
/// left out of angular statistics.
const ANGULAR_MIN_RADIUS: f64 = 0.15;

#[derive(Args)]
#[command(group(ArgGroup::new("estimate").required(true).args(["embedding", "geodesics"])))]
#[command(group(ArgGroup::new("reference").required(true).args(["truth", "distances"])))]
pub(crate) struct EvaluateArgs {
    /// Embedding CSV, one point per row.
    #[arg(long)]
    embedding: Option<PathBuf>,
    /// Estimated distance matrix CSV.
    #[arg(long)]
    geodesics: Option<PathBuf>,
    /// Ground-truth coordinates, one point per row.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Reference distance matrix CSV.
    #[arg(long)]
    distances: Option<PathBuf>,
    /// Group labels for angular statistics (needs an embedding and truth).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Per-point error CSV.
    #[arg(long)]
    per_point: Option<PathBuf>,
    /// Report path [default: standard output].
    #[arg(long)]
    report: Option<PathBuf>,
}

fn require(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{} does not exist", path.display())))
    }
}

fn load_points(path: &Path) -> Result<PointSet, Failure> {
    require(path)?;
    read_points_csv(path).map_err(|e| Failure::runtime("input", e))
}

fn load_matrix(path: &Path) -> Result<DenseMatrix, Failure> {
    require(path)?;
    read_matrix_csv(path).map_err(|e| Failure::runtime("input", e))
}

fn square(m: DenseMatrix, what: &str) -> Result<DenseMatrix, Failure> {
    if m.is_square() {
        Ok(m)
    } else {
        let (r, c) = m.shape();
        Err(Failure::runtime("evaluate", format!("{what} is {r}×{c}, not square")))
    }
}

fn put_report(map: &mut Map<String, Value>, prefix: &str, r: &ErrorReport) {
    map.insert(format!("{prefix}_mean"), r.mean.into());
    map.insert(format!("{prefix}_median"), r.median.into());
    map.insert(format!("{prefix}_max"), r.max.into());
    map.insert(format!("{prefix}_pairs"), r.count.into());
}

/// Mean relative error of each row of `est` against `truth`.
fn per_row_error(n: usize, est: impl Fn(usize, usize) -> f64, truth: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let (mut sum, mut count) = (0.0, 0usize);
            for j in (0..n).filter(|&j| j != i) {
                let t = truth(i, j);
                if t > 0.0 {
                    sum += (est(i, j) - t).abs() / t;
                    count += 1;
                }
            }
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect()
}

pub(crate) fn run(a: &EvaluateArgs) -> CmdResult {
    let mismatch = |what: &str, a: usize, b: usize| Failure::runtime("evaluate", format!("{what}: {a} versus {b} points"));
    let mut map = Map::new();
    let per_point: Vec<f64>;

    let truth = a.truth.as_deref().map(load_points).transpose()?;
    let reference = a.distances.as_deref().map(load_matrix).transpose()?.map(|m| square(m, "reference")).transpose()?;

    let (n, est_dist): (usize, Box<dyn Fn(usize, usize) -> f64>) = if let Some(path) = &a.embedding {
        let z = load_points(path)?;
        map.insert("input".into(), "embedding".into());
        map.insert("dim".into(), z.dim().into());
        if let Some(t) = &truth {
            if t.len() != z.len() {
                return Err(mismatch("embedding and truth", z.len(), t.len()));
            }
            let dist = embedding_distortion(&z, t).map_err(|e| Failure::runtime("evaluate", e))?;
            put_report(&mut map, "distortion", &dist.report);
            map.insert("alignment_residual".into(), dist.alignment.residual.into());
            if let Some(lp) = &a.labels {
                let raw = load_matrix(lp)?;
                if raw.rows() != z.len() || raw.cols() != 1 {
                    return Err(mismatch("labels", raw.rows(), z.len()));
                }
                let labels: Vec<usize> = raw.as_slice().iter().map(|&v| v.max(0.0).round() as usize).collect();
                let ang = angular_agreement(&z, t, &labels, ANGULAR_MIN_RADIUS)
                    .map_err(|e| Failure::runtime("evaluate", e))?;
                map.insert("angular_pooled".into(), ang.pooled.into());
                map.insert(
                    "angular_min_group".into(),
                    ang.per_label.iter().copied().fold(f64::INFINITY, f64::min).into(),
                );
                map.insert("angular_resultant".into(), ang.resultant.into());
            }
            per_point = dist.per_point;
        } else {
            per_point = Vec::new();
        }
        let n = z.len();
        (n, Box::new(move |i, j| z.distance(i, j)))
    } else {
        let path = a.geodesics.as_deref().expect("argument group guarantees one estimate");
        let g = square(load_matrix(path)?, "geodesics")?;
        map.insert("input".into(), "geodesics".into());
        per_point = Vec::new();
        (g.rows(), Box::new(move |i, j| g[(i, j)]))
    };
    map.insert("n".into(), n.into());
    if a.labels.is_some() && (a.embedding.is_none() || truth.is_none()) {
        return Err(Failure::Usage("--labels needs --embedding and --truth".into()));
    }

    let ref_dist: Box<dyn Fn(usize, usize) -> f64> = match (&truth, reference) {
        (Some(t), _) => {
            if t.len() != n {
                return Err(mismatch("estimate and truth", n, t.len()));
            }
            let t = t.clone();
            Box::new(move |i, j| t.distance(i, j))
        }
        (None, Some(m)) => {
            if m.rows() != n {
                return Err(mismatch("estimate and reference", n, m.rows()));
            }
            Box::new(move |i, j| m[(i, j)])
        }
        (None, None) => unreachable!("argument group guarantees a reference"),
    };

    let report = geodesic_error(n, &est_dist, &ref_dist, None);
    put_report(&mut map, "distance_error", &report);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let t = ref_dist(i, j);
            num += (est_dist(i, j) - t).powi(2);
            den += t * t;
        }
    }
    map.insert("stress".into(), if den > 0.0 { (num / den).sqrt() } else { 0.0 }.into());

    if let Some(path) = &a.per_point {
        let values = if per_point.is_empty() {
            per_row_error(n, &est_dist, &ref_dist)
        } else {
            per_point
        };
        let m = DenseMatrix::from_row_major_unchecked(values.len(), 1, values);
        write_matrix_csv(&m, path).map_err(|e| Failure::runtime("output", e))?;
    }

    let text = serde_json::to_string_pretty(&Value::Object(map)).map_err(|e| Failure::runtime("output", e))? + "\n";
    match &a.report {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::runtime("output", e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
