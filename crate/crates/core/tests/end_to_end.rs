use ptu_core::datasets::{apply_random_isometry, default_bumps, gen_gaussian_landscape, gen_petals, gen_swiss_roll, Noise};
use ptu_core::graph::{build_knn_graph, KnnRule};
use ptu_core::metrics::{rigid_align, stress};
use ptu_core::pipeline::{run, PipelineConfig};
use ptu_core::tangent::{estimate_frames, max_principal_angle};

fn ptu(k: usize, k_tangent: usize) -> PipelineConfig {
    PipelineConfig {
        k: Some(k),
        k_tangent: Some(k_tangent),
        ..PipelineConfig::default()
    }
}

#[test]
fn lifted_petals_embed_like_the_originals() {
    let ds = gen_petals(800, 4, 4, 0.0).unwrap();
    let lifted = apply_random_isometry(&ds, 10, 8).unwrap();
    let cfg = ptu(10, 10);
    let a = run(&ds.points, &cfg).unwrap().embedding.coords;
    let b = run(&lifted.points, &cfg).unwrap().embedding.coords;
    let fit = rigid_align(&b, &a).unwrap();
    assert!(fit.residual <= 1e-6 * a.bbox_diagonal(), "residual {}", fit.residual);
}

#[test]
fn landscape_frames_barely_depend_on_neighborhood_size() {
    let ds = gen_gaussian_landscape(1500, 2, &default_bumps()).unwrap();
    let g = build_knn_graph(&ds.points, 8, KnnRule::Union).unwrap();
    let small = estimate_frames(&ds.points, &g, 2, 8).unwrap();
    let large = estimate_frames(&ds.points, &g, 2, 24).unwrap();
    let mut angles: Vec<f64> = (0..ds.points.len())
        .map(|i| max_principal_angle(small.frame(i), large.frame(i)))
        .collect();
    angles.sort_by(f64::total_cmp);
    let median = angles[angles.len() / 2].to_degrees();
    assert!(median <= 15.0, "median angle {median:.2}°");
}

#[test]
fn swiss_roll_embedding_has_low_stress() {
    let ds = gen_swiss_roll(1000, 3, Noise::None).unwrap();
    let out = run(&ds.points, &ptu(10, 10)).unwrap();
    let d2 = out.geodesics.as_ref().unwrap().squared();
    let s = stress(&out.embedding.coords, d2);
    assert!(s <= 0.02, "stress {s}");
}
