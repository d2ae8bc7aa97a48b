//! Writes toy resources and generates a small dataset with the same code path
//! as `corrgen generate`.
//!
//! cargo run --release --example generate_dataset -- [OUT_DIR] [FRAMES]

use std::path::PathBuf;
use std::sync::atomic::AtomicBool;

use corrgen::cli::{cmd_generate, cmd_verify, Manifest, RunConfig, ANNOTATIONS_FILE, MANIFEST_FILE};
use corrgen::dataset::read_coco;
use corrgen::toy::{write_toy_resources, ToyResourceOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let root = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("corrgen-dataset"));
    let frames: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let opts = ToyResourceOptions {
        num_frames: frames,
        ..Default::default()
    };
    let config = write_toy_resources(&root.join("toy"), &opts)?;
    let out = root.join("data");
    if out.exists() {
        std::fs::remove_dir_all(&out)?;
    }

    let start = std::time::Instant::now();
    cmd_generate(&RunConfig::new(&config, &out), &AtomicBool::new(false))?;
    let secs = start.elapsed().as_secs_f64();

    let coco = read_coco(&out.join(ANNOTATIONS_FILE))?;
    let points: usize = coco.annotations.iter().map(|a| a.points.len()).sum();
    let manifest = Manifest::load(&out.join(MANIFEST_FILE))?;
    println!(
        "{} images, {} annotations, {} dense points in {secs:.2}s ({:.1} frames/s)",
        coco.images.len(),
        coco.annotations.len(),
        points,
        frames as f64 / secs
    );
    println!("skipped frames: {:?}", manifest.skipped);
    println!("manifest lists {} files, complete = {}", manifest.files.len(), manifest.complete);
    println!("verify: {} mismatches", cmd_verify(&out)?.len());
    println!("dataset at {}", out.display());
    Ok(())
}
