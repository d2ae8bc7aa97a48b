use corrgen::camera::{look_at, CameraModel};
use corrgen::dataset::{
    coco_from_str, coco_to_string, read_coco, rle_decode, rle_encode, write_coco, CocoDataset, DenseAnnotation,
    DensePoint, ImageMeta, RleMask, BOX_FRAME,
};
use corrgen::math::Vec3;
use corrgen::raster::Raster;
use corrgen::render::Keypoint;
use corrgen::toy::toy_rig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mask(rng: &mut impl Rng, w: usize, h: usize) -> Raster<bool> {
    let p = rng.random_range(0.0..1.0);
    Raster::from_fn(w, h, |_, _| rng.random_bool(p))
}

fn random_dataset(seed: u64) -> CocoDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_images = rng.random_range(0..5);
    let mut d = CocoDataset {
        keypoint_names: vec!["a".into(), "b".into()],
        skeleton: vec![[0, 1]],
        ..Default::default()
    };
    let mut next_id = 1;
    for i in 0..n_images {
        let (w, h) = (rng.random_range(8..40), rng.random_range(8..40));
        let id = 10 * (n_images - i) as u64;
        d.images.push(ImageMeta {
            id,
            file_name: format!("images/{i:06}.png"),
            width: w,
            height: h,
        });
        for _ in 0..rng.random_range(0..3) {
            let points = (0..rng.random_range(0..20))
                .map(|_| DensePoint {
                    x: rng.random_range(0.0..256.0),
                    y: rng.random_range(0.0..256.0),
                    chart: rng.random_range(1..=24),
                    u: rng.random(),
                    v: rng.random(),
                })
                .collect();
            d.annotations.push(DenseAnnotation {
                id: next_id,
                image_id: id,
                bbox: [rng.random_range(0.0..5.0), rng.random_range(0.0..5.0), rng.random_range(1.0..8.0), rng.random_range(1.0..8.0)],
                fg_rle: rle_encode(&random_mask(&mut rng, w, h)),
                part_rles: (0..14).map(|_| rle_encode(&random_mask(&mut rng, BOX_FRAME, BOX_FRAME))).collect(),
                points,
                keypoints: (0..2)
                    .map(|_| Keypoint {
                        x: rng.random_range(-10.0..50.0),
                        y: rng.random_range(-10.0..50.0),
                        flag: rng.random_range(0..3),
                    })
                    .collect(),
                score: rng.random_bool(0.5).then(|| rng.random()),
            });
            next_id += 1;
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rle_round_trips(seed in any::<u64>(), w in 1usize..64, h in 1usize..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mask(&mut rng, w, h);
        let e = rle_encode(&m);
        prop_assert_eq!(e.counts.iter().map(|&c| c as usize).sum::<usize>(), w * h);
        prop_assert_eq!(e.area() as usize, m.count());
        prop_assert_eq!(&rle_decode(&e).unwrap(), &m);
        prop_assert_eq!(&RleMask::from_coco_string(w, h, &e.to_coco_string()).unwrap(), &e);
    }

    #[test]
    fn coco_round_trips(seed in any::<u64>()) {
        let d = random_dataset(seed);
        let text = coco_to_string(&d).unwrap();
        let back = coco_from_str(&text).unwrap();
        prop_assert_eq!(&back, &d.normalized());
        // Writing the normalized dataset reproduces the same text.
        prop_assert_eq!(coco_to_string(&back).unwrap(), text);
    }

    #[test]
    fn projection_is_depth_scale_covariant(seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rig = toy_rig(640, 480).sample(&mut rng).unwrap();
        let cam = &rig.cameras[rng.random_range(0..rig.len())];
        let pc = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(1.0..3.0));
        let a = cam.project_camera_point(&pc);
        let b = cam.project_camera_point(&(pc * lambda));
        let (a, b) = (a.unwrap(), b.unwrap());
        prop_assert!((a.0 - b.0).abs() <= 1e-9 && (a.1 - b.1).abs() <= 1e-9);
    }

    #[test]
    fn reprojection_error_is_subpixel(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rig = toy_rig(640, 480).sample(&mut rng).unwrap();
        for cam in &rig.cameras {
            for _ in 0..100 {
                let (u, v) = (rng.random_range(0.0..cam.width as f64), rng.random_range(0.0..cam.height as f64));
                let p = cam.pixel_ray(u, v).unwrap().at(rng.random_range(0.5..10.0));
                let (pu, pv) = cam.project(&p).unwrap();
                prop_assert!(((pu - u).powi(2) + (pv - v).powi(2)).sqrt() < 0.5);
            }
        }
    }

    #[test]
    fn zero_distortion_is_exact_identity(x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let cam = CameraModel::pinhole(500.0, 500.0, 320.0, 240.0, 640, 480)
            .with_pose(look_at(&Vec3::new(0.0, 1.0, -3.0), &Vec3::zeros(), &Vec3::new(0.0, 1.0, 0.0)));
        prop_assert_eq!(cam.distort(x, y), (x, y));
        prop_assert_eq!(cam.undistort(x, y).unwrap(), (x, y));
    }
}

#[test]
fn coco_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("annotations.json");
    for seed in 0..8 {
        let d = random_dataset(seed);
        write_coco(&d, &path).unwrap();
        assert_eq!(read_coco(&path).unwrap(), d.normalized());
    }
}
