mod common;

use corrgen::body::{PosedMesh, ShapeParams};
use corrgen::camera::{look_at, CameraModel};
use corrgen::geometry::Bvh;
use corrgen::math::Vec3;
use corrgen::render::{project_keypoints, render_frame, FrameBuffers, RenderSettings, SceneMesh};
use corrgen::toy::{build_toy_biped, procedural_background, procedural_texture, ToyBiped};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn front_camera(toy: &PosedMesh) -> CameraModel {
    let (lo, hi) = toy
        .vertices
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.y), hi.max(v.y)));
    let mid = Vec3::new(0.0, 0.5 * (lo + hi), 0.0);
    CameraModel::pinhole(300.0, 300.0, 160.0, 120.0, 320, 240)
        .with_pose(look_at(&(mid + Vec3::new(0.0, 0.0, 4.0)), &mid, &Vec3::new(0.0, 1.0, 0.0)))
}

fn render(toy: &ToyBiped, mesh: &PosedMesh, cam: &CameraModel, settings: &RenderSettings) -> FrameBuffers {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let texture = procedural_texture(&mut rng);
    let background = procedural_background(cam.width, cam.height, &mut rng);
    let bvh = Bvh::build(mesh).unwrap();
    render_frame(Some(SceneMesh { mesh, bvh: &bvh }), &toy.atlas, &texture, cam, &background, settings).unwrap()
}

fn rest_mesh(toy: &ToyBiped) -> PosedMesh {
    let m = &toy.model;
    let pose = corrgen::body::PoseParams::identity(m.num_joints());
    m.posed(&ShapeParams::zeros(m.num_shape()), &pose).unwrap().0
}

#[test]
fn silhouette_matches_zbuffer_coverage() {
    let toy = build_toy_biped(8, 0.1);
    let mesh = rest_mesh(&toy);
    let cam = front_camera(&mesh);
    let buffers = render(&toy, &mesh, &cam, &RenderSettings::default());
    let ours = buffers.instance_mask.count();
    let oracle = common::rasterize_front(&mesh, &cam, 1).face.iter().filter(|&&f| f != u32::MAX).count();
    assert!(oracle > 1000, "subject too small: {oracle} px");
    let rel = (ours as f64 - oracle as f64).abs() / oracle as f64;
    assert!(rel <= 0.02, "mask {ours} px vs z-buffer {oracle} px ({:.2}%)", 100.0 * rel);
    assert!(buffers.is_consistent());
}

#[test]
fn rendering_is_identical_across_pool_sizes() {
    let toy = build_toy_biped(8, 0.1);
    let mesh = rest_mesh(&toy);
    let cam = front_camera(&mesh);
    let settings = RenderSettings {
        supersample: true,
        ..Default::default()
    };
    let in_pool = |n: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        pool.install(|| render(&toy, &mesh, &cam, &settings))
    };
    let one = in_pool(1);
    for n in [2, 4, 8] {
        let other = in_pool(n);
        assert!(one.rgb.data().iter().zip(other.rgb.data()).all(|(a, b)| a.map(f32::to_bits) == b.map(f32::to_bits)));
        assert!(one.depth.data().iter().zip(other.depth.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(one.iuv, other.iuv);
        assert_eq!(one.part_seg, other.part_seg);
        assert_eq!(one.instance_mask, other.instance_mask);
    }
}

#[test]
fn far_side_joints_are_occluded_from_the_side() {
    let toy = build_toy_biped(8, 0.1);
    let m = &toy.model;
    let (mesh, joints) = m
        .posed(&ShapeParams::zeros(m.num_shape()), &corrgen::body::PoseParams::identity(m.num_joints()))
        .unwrap();
    let bvh = Bvh::build(&mesh).unwrap();
    let scene = Some(SceneMesh { mesh: &mesh, bvh: &bvh });
    let front = front_camera(&mesh);
    let flags = |cam: &CameraModel| project_keypoints(&joints, cam, scene).iter().map(|k| k.flag).collect::<Vec<_>>();
    assert!(flags(&front).iter().all(|&f| f == 2), "{:?}", flags(&front));

    // Looking from +x, the right wrist is behind the torso.
    let mid = Vec3::new(0.0, 1.0, 0.0);
    let side = CameraModel::pinhole(300.0, 300.0, 160.0, 120.0, 320, 240)
        .with_pose(look_at(&(mid + Vec3::new(4.0, 0.0, 0.0)), &mid, &Vec3::new(0.0, 1.0, 0.0)));
    let names = corrgen::toy::TOY_JOINT_NAMES;
    let f = flags(&side);
    let at = |n: &str| f[names.iter().position(|x| *x == n).unwrap()];
    assert_eq!(at("left_wrist"), 2, "{f:?}");
    assert_eq!(at("right_wrist"), 1, "{f:?}");
}
