mod common;

use corrgen::atlas::{surface_to_iuv, IuvMode, IuvSample};
use corrgen::body::ShapeParams;
use corrgen::dataset::{
    extract_annotation, frame_files, generate_frame, rle_decode, sample_scene, Resources, SceneConfig, BOX_FRAME,
};
use corrgen::geometry::{pixel_to_surface, Bvh};
use corrgen::raster::Raster;
use corrgen::render::FrameBuffers;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Toy {
    _dir: tempfile::TempDir,
    config: SceneConfig,
    res: Resources,
}

fn toy() -> Toy {
    let dir = tempfile::tempdir().unwrap();
    let config = SceneConfig::load(&common::toy_config(dir.path())).unwrap();
    let res = Resources::load(&config).unwrap();
    Toy { _dir: dir, config, res }
}

#[test]
fn every_frame_satisfies_label_invariants() {
    let t = toy();
    let (cfg, res) = (&t.config, &t.res);
    let cat = res.catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut annotated = 0;
    for i in 0..cfg.num_frames {
        let spec = sample_scene(cfg, &cat, i).unwrap();
        let frame = generate_frame(cfg, res, &spec).unwrap();
        let b = &frame.buffers;
        assert!(b.is_consistent(), "frame {i}");

        // Labels come from the same ray cast as the visibility function.
        let cam = &res.rig.cameras[spec.camera_id];
        let shape = ShapeParams::clamped(spec.shape.clone(), cfg.subject.shape_clamp);
        let (mesh, _) = res.model.posed(&shape, &res.subject_pose(&spec, cfg.loop_clips).unwrap()).unwrap();
        let bvh = Bvh::build(&mesh).unwrap();
        for _ in 0..200 {
            let (x, y) = (rng.random_range(0..b.width()), rng.random_range(0..b.height()));
            if !*b.instance_mask.get(x, y) {
                continue;
            }
            let hit = pixel_to_surface(cam, &bvh, &mesh, x as f64 + 0.5, y as f64 + 0.5).unwrap().unwrap();
            assert_eq!(*b.iuv.get(x, y), surface_to_iuv(&hit, &res.atlas, IuvMode::Barycentric).unwrap());
        }

        let Some(ann) = &frame.annotation else {
            assert!(frame.skip_reason.is_some());
            continue;
        };
        annotated += 1;
        assert!(ann.area() > 0);
        // The box is the rendered silhouette's; occluders only shrink the mask inside it.
        let (x0, y0, x1, y1) = b.instance_mask.bounds().unwrap();
        let tight = [x0 as f64, y0 as f64, (x1 - x0) as f64, (y1 - y0) as f64];
        if spec.occluders.is_empty() {
            assert_eq!(ann.bbox, tight, "frame {i}");
        } else {
            let [bx, by, bw, bh] = ann.bbox;
            assert!(tight[0] >= bx && tight[1] >= by && tight[0] + tight[2] <= bx + bw && tight[1] + tight[3] <= by + bh);
        }
        assert_eq!(rle_decode(&ann.fg_rle).unwrap(), b.instance_mask);
        for rle in &ann.part_rles {
            assert_eq!(rle_decode(rle).unwrap().dims(), (BOX_FRAME, BOX_FRAME));
        }
        for p in &ann.points {
            assert!((0.0..=256.0).contains(&p.x) && (0.0..=256.0).contains(&p.y));
            let (px, py) = ann.box_to_pixel(p.x, p.y);
            let part = *b.part_seg.get(px as usize, py as usize);
            assert_eq!(res.atlas.part_of_chart(p.chart).unwrap(), part);
            let s = IuvSample { chart: p.chart, u: p.u, v: p.v };
            assert_eq!(*b.iuv.get(px as usize, py as usize), s);
            let v = res.atlas.iuv_to_vertex(&s).unwrap();
            let on_chart = res
                .atlas
                .faces()
                .iter()
                .zip(res.atlas.face_charts())
                .any(|(f, &c)| c == p.chart && f.contains(&v));
            assert!(on_chart, "vertex {v} not on chart {}", p.chart);
        }
    }
    assert!(annotated > cfg.num_frames / 2);
}

#[test]
fn frames_are_independent_of_generation_order() {
    let t = toy();
    let cat = t.res.catalog();
    let gen = |i| {
        let spec = sample_scene(&t.config, &cat, i).unwrap();
        frame_files(&generate_frame(&t.config, &t.res, &spec).unwrap())
    };
    let forward: Vec<_> = (0..6).map(gen).collect();
    let mut backward: Vec<_> = (0..6).rev().map(gen).collect();
    backward.reverse();
    assert_eq!(forward, backward);
}

#[test]
fn disabling_occluders_leaves_other_draws_unchanged() {
    let t = toy();
    let cat = t.res.catalog();
    let mut off = t.config.clone();
    off.occlusion.enabled = false;
    let mut with_occluders = 0;
    for i in 0..200 {
        let mut a = sample_scene(&t.config, &cat, i).unwrap();
        let b = sample_scene(&off, &cat, i).unwrap();
        assert!(b.occluders.is_empty());
        with_occluders += !a.occluders.is_empty() as usize;
        a.occluders.clear();
        assert_eq!(a, b);
    }
    assert!(with_occluders > 0);
}

#[test]
fn background_choice_is_uniform() {
    let t = toy();
    let mut cat = t.res.catalog();
    cat.num_backgrounds = 10;
    let n = 10_000;
    let mut counts = vec![0usize; cat.num_backgrounds];
    for i in 0..n {
        counts[sample_scene(&t.config, &cat, i).unwrap().background_id] += 1;
    }
    let expected = n as f64 / counts.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 1e-3, "χ² = {chi2:.2}, p = {p:.2e}, counts {counts:?}");
}

#[test]
fn small_instances_keep_every_pixel() {
    let (w, h) = (20, 15);
    let fg = |x: usize, y: usize| (4..9).contains(&x) && (3..7).contains(&y) && (x + y) % 3 != 0;
    let buffers = FrameBuffers {
        rgb: Raster::filled(w, h, [0.0; 3]),
        depth: Raster::from_fn(w, h, |x, y| if fg(x, y) { 2.0 } else { f32::INFINITY }),
        iuv: Raster::from_fn(w, h, |x, y| {
            if fg(x, y) {
                IuvSample { chart: 2, u: x as f64 / 20.0, v: y as f64 / 15.0 }
            } else {
                IuvSample::BACKGROUND
            }
        }),
        part_seg: Raster::from_fn(w, h, |x, y| if fg(x, y) { 1 } else { 0 }),
        instance_mask: Raster::from_fn(w, h, fg),
    };
    assert!(buffers.is_consistent());
    let count = buffers.instance_mask.count();
    let ann = extract_annotation(&buffers, Vec::new(), 1, 1, 196, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(count < 196);
    assert_eq!(ann.points.len(), count);
    let pixels: Vec<(i64, i64)> = ann.points.iter().map(|p| ann.box_to_pixel(p.x, p.y)).collect();
    let raster_order: Vec<(i64, i64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| fg(x, y))
        .map(|(x, y)| (x as i64, y as i64))
        .collect();
    assert_eq!(pixels, raster_order);
}
