//! `generate`: synthetic datasets to CSV.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use ptu_core::datasets::{
    apply_random_isometry, default_bumps, gen_flat_patch, gen_gaussian_landscape, gen_petals_shaped,
    gen_s_shape, gen_spherical_cap, gen_swiss_roll, gen_torus4d, s_shape_default_hole, Hole, Noise, PetalShape,
    SyntheticDataset, PETAL_CAP, PETAL_SHARPNESS,
};
use ptu_core::io::{write_matrix_csv, write_points_csv};
use ptu_core::DenseMatrix;

use crate::{CmdResult, Failure};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum Name {
    /// Unit square (or cube) placed in a higher-dimensional space.
    Flat,
    Swissroll,
    /// S-shaped developable sheet.
    S,
    /// Tapered petals on the unit sphere.
    Petals,
    /// Polar cap of the unit sphere, Fibonacci sampled.
    Cap,
    /// Solid torus in 4-D with a zero fourth coordinate.
    Torus,
    /// Solid torus in 4-D with a curved fourth coordinate.
    TorusCurved,
    /// Height field with two Gaussian bumps.
    Landscape,
}

#[derive(Args)]
pub(crate) struct GenerateArgs {
    #[arg(value_enum)]
    name: Name,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Normal noise deviation (swissroll, petals).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Fraction of points receiving large uniform noise (swissroll).
    #[arg(long, default_value_t = 0.0)]
    sparse_fraction: f64,
    /// Half-width of the large uniform noise (swissroll).
    #[arg(long, default_value_t = 0.0)]
    sparse_amplitude: f64,
    /// Cut the default hole (flat: central 25% of the area, s: central void).
    #[arg(long)]
    hole: bool,
    /// Ambient dimension of the flat patch.
    #[arg(long, default_value_t = 3)]
    ambient: usize,
    /// Intrinsic dimension of the flat patch.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    petals: usize,
    /// Polar extent of the petal tips, radians.
    #[arg(long, default_value_t = PETAL_CAP)]
    petal_cap: f64,
    #[arg(long, default_value_t = PETAL_SHARPNESS)]
    petal_sharpness: f64,
    /// Half-angle of the spherical cap, radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
    cap_angle: f64,
    /// Density skew of the S-shape along its length.
    #[arg(long)]
    density_warp: Option<f64>,
    /// Zero-pad to this dimension and apply a random rotation.
    #[arg(long)]
    lift: Option<usize>,
    /// Points CSV.
    #[arg(long)]
    out: PathBuf,
    /// Intrinsic ground-truth coordinates CSV.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Exact geodesic distance matrix CSV.
    #[arg(long)]
    geodesics: Option<PathBuf>,
    /// Group labels, one per row.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Generator parameters as `key=value` lines.
    #[arg(long)]
    metadata: Option<PathBuf>,
}

fn flat_hole(d: usize) -> Hole {
    let side = 0.25f64.powf(1.0 / d as f64);
    Hole {
        lo: vec![0.5 - side / 2.0; d],
        hi: vec![0.5 + side / 2.0; d],
    }
}

fn build(a: &GenerateArgs) -> Result<SyntheticDataset, Failure> {
    let uses_noise = matches!(a.name, Name::Swissroll | Name::Petals);
    if !uses_noise && (a.noise != 0.0 || a.sparse_fraction != 0.0) {
        return Err(Failure::Usage("noise is supported for swissroll and petals only".into()));
    }
    if a.name != Name::Swissroll && a.sparse_fraction != 0.0 {
        return Err(Failure::Usage("sparse noise is supported for swissroll only".into()));
    }
    let usage = |e: ptu_core::Error| Failure::Usage(e.to_string());
    match a.name {
        Name::Flat => {
            let hole = a.hole.then(|| flat_hole(a.dim));
            gen_flat_patch(a.n, a.ambient, a.dim, a.seed, hole.as_ref())
        }
        Name::Swissroll => {
            let noise = if a.sparse_fraction > 0.0 {
                Noise::Sparse {
                    fraction: a.sparse_fraction,
                    amplitude: a.sparse_amplitude,
                    sigma: a.noise,
                }
            } else if a.noise > 0.0 {
                Noise::Gaussian { sigma: a.noise }
            } else {
                Noise::None
            };
            gen_swiss_roll(a.n, a.seed, noise)
        }
        Name::S => {
            let hole = a.hole.then(s_shape_default_hole);
            gen_s_shape(a.n, a.seed, hole.as_ref(), a.density_warp)
        }
        Name::Petals => gen_petals_shaped(
            a.n,
            a.seed,
            PetalShape {
                count: a.petals,
                cap: a.petal_cap,
                sharpness: a.petal_sharpness,
            },
            a.noise,
        ),
        Name::Cap => gen_spherical_cap(a.n, a.cap_angle),
        Name::Torus => gen_torus4d(a.n, a.seed, false),
        Name::TorusCurved => gen_torus4d(a.n, a.seed, true),
        Name::Landscape => gen_gaussian_landscape(a.n, a.seed, &default_bumps()),
    }
    .map_err(usage)
}

fn write_err(e: ptu_core::Error) -> Failure {
    Failure::runtime("output", e)
}

pub(crate) fn run(a: &GenerateArgs) -> CmdResult {
    let mut ds = build(a)?;
    if let Some(dim) = a.lift {
        ds = apply_random_isometry(&ds, dim, a.seed).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    write_points_csv(&ds.points, &a.out).map_err(write_err)?;

    if let Some(path) = &a.truth {
        match &ds.ground_truth {
            Some(t) => write_points_csv(t, path).map_err(write_err)?,
            None => eprintln!("warning: {} has no flat ground truth; {} not written", ds.name, path.display()),
        }
    }
    if let Some(path) = &a.geodesics {
        if ds.has_analytic_geodesics() {
            let n = ds.points.len();
            let mut m = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        m[(i, j)] = ds.geodesic(i, j).unwrap_or(f64::NAN);
                    }
                }
            }
            write_matrix_csv(&m, path).map_err(write_err)?;
        } else {
            eprintln!("warning: {} has no exact geodesics; {} not written", ds.name, path.display());
        }
    }
    if let Some(path) = &a.labels {
        match &ds.labels {
            Some(l) => {
                let values: Vec<f64> = l.iter().map(|&v| v as f64).collect();
                let m = DenseMatrix::from_row_major_unchecked(values.len(), 1, values);
                write_matrix_csv(&m, path).map_err(write_err)?;
            }
            None => eprintln!("warning: {} has no labels; {} not written", ds.name, path.display()),
        }
    }
    if let Some(path) = &a.metadata {
        let mut text = format!("name={}\n", ds.name);
        for (k, v) in &ds.metadata {
            let _ = writeln!(text, "{k}={v}");
        }
        std::fs::write(path, text).map_err(|e| Failure::runtime("output", e))?;
    }
    Ok(())
}
