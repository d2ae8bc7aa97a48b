//! Places a procedural occluder over a rendered subject, composites it with a
//! feathered edge and updates the dense labels.
//!
//! cargo run --example occlusion -- [OUT_DIR]

use std::path::PathBuf;

use corrgen::compositor::{composite, prepare_occluder, sample_placement, update_labels_for_occlusion, OccluderSprite, PlacementRanges};
use corrgen::dataset::{generate_frame, sample_scene, Resources, SceneConfig};
use corrgen::raster::{rgb_to_png_bytes, write_bytes};
use corrgen::toy::{procedural_occluder, write_toy_resources, ToyResourceOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("corrgen-occlusion"));
    let opts = ToyResourceOptions {
        num_frames: 4,
        ..Default::default()
    };
    let config = write_toy_resources(&out.join("toy"), &opts)?;
    let mut cfg = SceneConfig::load(&config)?;
    cfg.occlusion.enabled = false;
    let res = Resources::load(&cfg)?;
    let spec = sample_scene(&cfg, &res.catalog(), 0)?;
    let frame = generate_frame(&cfg, &res, &spec)?;
    let ann = frame.annotation.as_ref().ok_or("subject not visible in frame 0")?;
    println!("subject box {:?}, {} dense points", ann.bbox.map(|x| x.round()), ann.points.len());

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sprite = OccluderSprite::new(procedural_occluder(96, &mut rng), "procedural")?;
    let placement = sample_placement(&mut rng, ann.bbox, &sprite, &PlacementRanges::default());
    println!(
        "occluder at ({:.1}, {:.1}), scale {:.2}, rotation {:.1}°",
        placement.center[0],
        placement.center[1],
        placement.scale,
        placement.rotation.to_degrees()
    );
    let (w, h) = frame.image.dims();
    let band = cfg.occlusion.band_px.zip(cfg.occlusion.sigma_px);
    let resolved = prepare_occluder(&sprite, &placement, band, w, h);
    let image = composite(&frame.image, &resolved);

    let occluded = update_labels_for_occlusion(ann, &resolved.alpha, cfg.occlusion.threshold, true);
    println!("{} of {} dense points survive", occluded.points.len(), ann.points.len());

    write_bytes(&out.join("before.png"), &rgb_to_png_bytes(&frame.image))?;
    write_bytes(&out.join("after.png"), &rgb_to_png_bytes(&image))?;
    println!("wrote before.png and after.png to {}", out.display());
    Ok(())
}
