//! Generates a toy dataset, degrades its labels and scores the result as if it
//! were a set of predictions.
//!
//! cargo run --release --example evaluate

use std::sync::atomic::AtomicBool;

use corrgen::atlas::load_atlas;
use corrgen::body::load_body_model;
use corrgen::cli::{cmd_generate, RunConfig, ANNOTATIONS_FILE};
use corrgen::dataset::{read_coco, SceneConfig};
use corrgen::metrics::{evaluate, GeodesicOracle, MetricsConfig};
use corrgen::toy::{write_toy_resources, ToyResourceOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("corrgen-evaluate");
    let opts = ToyResourceOptions {
        num_frames: 12,
        ..Default::default()
    };
    let config = write_toy_resources(&dir.join("toy"), &opts)?;
    let out = dir.join("data");
    if out.exists() {
        std::fs::remove_dir_all(&out)?;
    }
    cmd_generate(&RunConfig::new(&config, &out), &AtomicBool::new(false))?;
    let gt = read_coco(&out.join(ANNOTATIONS_FILE))?;

    let cfg = SceneConfig::load(&config)?;
    let model = load_body_model(&cfg.model)?;
    let atlas = load_atlas(&cfg.atlas, model.faces(), model.num_vertices())?;
    let mc = MetricsConfig::default();
    let geo = GeodesicOracle::new(model.template(), model.faces(), mc.geodesic_cache_size);

    let report = evaluate(&gt, &gt, &atlas, &geo, &mc)?;
    println!("ground truth against itself:\n{}", report.to_table());

    // Replace some correspondences with random chart coordinates and drop some detections.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pred = gt.clone();
    pred.annotations.retain(|_| rng.random_bool(0.85));
    for a in &mut pred.annotations {
        a.score = Some(rng.random());
        for p in &mut a.points {
            if rng.random_bool(0.3) {
                p.u = rng.random();
                p.v = rng.random();
            }
        }
    }
    let report = evaluate(&gt, &pred, &atlas, &geo, &mc)?;
    println!("perturbed predictions:\n{}", report.to_table());
    Ok(())
}
