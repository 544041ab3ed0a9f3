//! `embed`, `geodesics` and `spectrum`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ptu_core::graph::{build_knn_graph, ensure_connected, KnnRule};
use ptu_core::io::{read_points_csv, write_matrix_csv, write_points_csv};
use ptu_core::pipeline::{self, PipelineConfig, Stage, StageError, Timings};
use ptu_core::tangent::estimate_intrinsic_dim_hint;
use ptu_core::{DenseMatrix, PointSet};

use crate::{CmdResult, EmbedArgs, Failure, GeodesicsArgs, SpectrumArgs};

/// `<dir>/<stem><suffix>` for an output path.
pub(crate) fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub(crate) fn read_input(path: &Path) -> Result<PointSet, Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(format!("input file {} does not exist", path.display())));
    }
    read_points_csv(path).map_err(|e| Failure::runtime("input", e))
}

fn stage_failure(err: StageError) -> Failure {
    if err.stage == Stage::Validate {
        Failure::Usage(err.error.to_string())
    } else {
        Failure::Runtime(err.to_string())
    }
}

/// Runs `f` on a pool of `threads` workers (0 = one per core).
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::runtime("threads", e))?;
    Ok(pool.install(f))
}

/// Flat `key=value` run record.
struct Manifest(Vec<(String, String)>);

impl Manifest {
    fn new(command: &str) -> Self {
        Manifest(vec![("command".into(), command.into())])
    }

    fn set(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    fn run(&mut self, points: &PointSet, cfg: &PipelineConfig) {
        self.set("n", points.len());
        self.set("ambient_dim", points.dim());
        self.0.extend(cfg.manifest_entries());
    }

    fn timings(&mut self, timings: &Timings, total: f64) {
        let names: Vec<&str> = timings.0.iter().map(|(s, _)| s.name()).collect();
        self.set("stages", names.join(","));
        for (stage, secs) in &timings.0 {
            self.set(&format!("time.{}", stage.name()), format!("{secs:.6}"));
        }
        self.set("time.total", format!("{total:.6}"));
    }

    fn warnings(&mut self, warnings: &[String]) {
        self.set("warnings", warnings.len());
        for (i, w) in warnings.iter().enumerate() {
            self.set(&format!("warning.{}", i + 1), w);
        }
    }

    fn write(&self, path: &Path) -> CmdResult {
        let mut text = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(text, "{k}={v}");
        }
        std::fs::write(path, text).map_err(|e| Failure::runtime("output", format!("{}: {e}", path.display())))
    }
}

fn column(values: &[f64]) -> DenseMatrix {
    DenseMatrix::from_row_major_unchecked(values.len(), 1, values.to_vec())
}

pub(crate) fn embed(args: &EmbedArgs) -> CmdResult {
    let p = &args.pipeline;
    let cfg = p.config(args.landmarks, args.landmark_strategy);
    let points = read_input(&p.input)?;
    cfg.validate(points.len()).map_err(|e| Failure::Usage(e.to_string()))?;
    let start = Instant::now();
    let out = with_threads(cfg.threads, || pipeline::run(&points, &cfg))?.map_err(stage_failure)?;
    let total = start.elapsed().as_secs_f64();
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }

    let eig_path = args.eigenvalues.clone().unwrap_or_else(|| sibling(&args.output, ".eigenvalues.csv"));
    write_points_csv(&out.embedding.coords, &args.output).map_err(|e| Failure::runtime("output", e))?;
    write_matrix_csv(&column(&out.embedding.eigenvalues), &eig_path).map_err(|e| Failure::runtime("output", e))?;

    let mut m = Manifest::new("embed");
    m.set("input", p.input.display());
    m.set("output", args.output.display());
    m.set("eigenvalues", eig_path.display());
    m.run(&points, &cfg);
    m.set("edges", out.edge_count);
    if let Some(set) = &out.landmarks {
        let ids: Vec<String> = set.indices.iter().map(ToString::to_string).collect();
        m.set("landmark_indices", ids.join(";"));
    }
    m.set(
        "residual_eigenvalue",
        out.embedding.residual_eigenvalue.map_or("none".into(), |v| v.to_string()),
    );
    m.timings(&out.timings, total);
    m.warnings(&out.warnings);
    m.write(&p.manifest.clone().unwrap_or_else(|| sibling(&args.output, ".manifest")))
}

pub(crate) fn geodesics(args: &GeodesicsArgs) -> CmdResult {
    let p = &args.pipeline;
    let cfg = p.config(0, crate::StrategyArg::Fps);
    let points = read_input(&p.input)?;
    cfg.validate(points.len()).map_err(|e| Failure::Usage(e.to_string()))?;
    let start = Instant::now();
    let (gm, timings, warnings) =
        with_threads(cfg.threads, || pipeline::compute_geodesics(&points, &cfg))?.map_err(stage_failure)?;
    let total = start.elapsed().as_secs_f64();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    write_matrix_csv(&gm.distances(), &args.output).map_err(|e| Failure::runtime("output", e))?;

    let mut m = Manifest::new("geodesics");
    m.set("input", p.input.display());
    m.set("output", args.output.display());
    m.run(&points, &cfg);
    m.timings(&timings, total);
    m.warnings(&warnings);
    m.write(&p.manifest.clone().unwrap_or_else(|| sibling(&args.output, ".manifest")))
}

pub(crate) fn spectrum(args: &SpectrumArgs) -> CmdResult {
    let points = read_input(&args.input)?;
    let n = points.len();
    let kt = args.k_tangent.unwrap_or(args.k);
    if args.k == 0 || args.k >= n || kt < 2 || kt >= n {
        return Err(Failure::Usage(format!("k = {} and K = {kt} must lie below n = {n}", args.k)));
    }
    let g = build_knn_graph(&points, args.k, KnnRule::Union).map_err(|e| Failure::runtime("graph", e))?;
    ensure_connected(&g).map_err(|e| Failure::runtime("graph", e))?;
    let report = estimate_intrinsic_dim_hint(&points, &g, kt).map_err(|e| Failure::runtime("frames", e))?;
    let median: Vec<String> = report.median.iter().map(|v| format!("{v:.6}")).collect();
    println!("median_spectrum={}", median.join(","));
    println!(
        "largest_gap_dim={}",
        report.largest_gap().map_or("none".into(), |d| d.to_string())
    );
    if let Some(path) = &args.output {
        let rows = DenseMatrix::from_rows(&report.spectra).map_err(|e| Failure::runtime("frames", e))?;
        write_matrix_csv(&rows, path).map_err(|e| Failure::runtime("output", e))?;
    }
    Ok(())
}
