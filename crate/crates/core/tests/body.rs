use corrgen::body::{apply_shape, forward_kinematics, BodyModel, PoseParams, ShapeParams};
use corrgen::math::{axis_angle_of, axis_angle_to_quaternion, rodrigues, Vec3};
use corrgen::mocap::{parse_bvh, retarget_clip, sample_pose, write_bvh, RetargetMap};
use corrgen::toy::{make_toy_biped, walk_clip, wave_clip};
use nalgebra::{Matrix3, Matrix4};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn toy() -> &'static BodyModel {
    static MODEL: OnceLock<BodyModel> = OnceLock::new();
    MODEL.get_or_init(|| make_toy_biped(4, 0.1))
}

fn pose_strategy(joints: usize) -> impl Strategy<Value = PoseParams> {
    (
        prop::collection::vec(prop::array::uniform3(-1.5f64..1.5), joints),
        prop::array::uniform3(-2.0f64..2.0),
    )
        .prop_map(|(r, t)| PoseParams {
            joint_rotations: r.into_iter().map(|a| Vec3::new(a[0], a[1], a[2])).collect(),
            root_translation: Vec3::new(t[0], t[1], t[2]),
        })
}

fn beta_strategy(k: usize) -> impl Strategy<Value = ShapeParams> {
    prop::collection::vec(-3.0f64..3.0, k).prop_map(|b| ShapeParams::new(b, 5.0).unwrap())
}

fn h(r: &Matrix3<f64>, t: &Vec3) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    for i in 0..3 {
        for k in 0..3 {
            m[(i, k)] = r[(i, k)];
        }
        m[(i, 3)] = t[i];
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shaping_is_linear(a in beta_strategy(8), b in beta_strategy(8)) {
        let m = toy();
        let t = m.template();
        let sa = apply_shape(m, &a).unwrap();
        let sb = apply_shape(m, &b).unwrap();
        let sum: Vec<f64> = a.beta.iter().zip(&b.beta).map(|(x, y)| x + y).collect();
        let sab = apply_shape(m, &ShapeParams { beta: sum }).unwrap();
        for v in 0..t.len() {
            let lhs = sab[v] - t[v];
            let rhs = (sa[v] - t[v]) + (sb[v] - t[v]);
            prop_assert!((lhs - rhs).amax() <= 1e-9);
        }
    }

    #[test]
    fn shaping_matches_per_vertex_sum(beta in beta_strategy(8)) {
        let m = toy();
        let k = m.num_shape();
        let dirs = m.shape_dirs();
        let shaped = apply_shape(m, &beta).unwrap();
        for (v, p) in shaped.iter().enumerate() {
            for c in 0..3 {
                let mut x = m.template()[v][c];
                for (i, b) in beta.beta.iter().enumerate() {
                    x += dirs[(v * 3 + c) * k + i] * b;
                }
                prop_assert!((p[c] - x).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn kinematics_equal_root_to_leaf_products(pose in pose_strategy(14), beta in beta_strategy(8)) {
        let m = toy();
        let shaped = apply_shape(m, &beta).unwrap();
        let jt = forward_kinematics(m, &shaped, &pose).unwrap();
        let rest = &jt.rest_joints;
        for j in 0..m.num_joints() {
            // Walk up to the root, then multiply back down.
            let mut chain = vec![j];
            while let Some(p) = m.parents()[*chain.last().unwrap()] {
                chain.push(p);
            }
            let mut g = Matrix4::identity();
            for &c in chain.iter().rev() {
                let r = rodrigues(&pose.joint_rotations[c]);
                let local = match m.parents()[c] {
                    None => h(&r, &(rest[c] + pose.root_translation)),
                    Some(p) => h(&r, &(rest[c] - rest[p])),
                };
                g *= local;
            }
            prop_assert!((g - jt.global[j]).amax() <= 1e-9);
        }
    }

    #[test]
    fn world_rotation_commutes_with_skinning(pose in pose_strategy(14), aa in prop::array::uniform3(-2.0f64..2.0)) {
        let m = toy();
        let beta = ShapeParams::zeros(m.num_shape());
        let rw = rodrigues(&Vec3::new(aa[0], aa[1], aa[2]));
        let (mesh, jt) = m.posed(&beta, &pose).unwrap();
        let root = m.root();
        let rest_root = jt.rest_joints[root];
        let mut moved = pose.clone();
        moved.joint_rotations[root] = axis_angle_of(&(rw * rodrigues(&pose.joint_rotations[root])));
        moved.root_translation = rw * (rest_root + pose.root_translation) - rest_root;
        let (mesh2, _) = m.posed(&beta, &moved).unwrap();
        for (p, q) in mesh.vertices.iter().zip(&mesh2.vertices) {
            prop_assert!((rw * p - q).amax() <= 1e-7);
        }
        prop_assert!(std::sync::Arc::ptr_eq(&mesh.faces, m.faces()));
        prop_assert!(mesh.normals.iter().all(|n| (n.norm() - 1.0).abs() <= 1e-6));
    }
}

#[test]
fn identity_pose_zero_shape_is_template() {
    let m = toy();
    let (mesh, _) = m.posed(&ShapeParams::zeros(m.num_shape()), &PoseParams::identity(m.num_joints())).unwrap();
    for (p, q) in mesh.vertices.iter().zip(m.template()) {
        assert!((p - q).amax() <= 1e-9);
    }
    assert_eq!(&mesh.faces[..], &m.faces()[..]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bvh_text_round_trips_at_six_digits(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clip = if seed % 2 == 0 { walk_clip() } else { wave_clip() };
        for row in &mut clip.frames {
            for v in row.iter_mut() {
                *v = rng.random_range(-180.0..180.0);
            }
        }
        clip.frame_time = rng.random_range(0.001..0.1);
        let text = write_bvh(&clip);
        let once = parse_bvh(&text).unwrap();
        prop_assert_eq!(&once, &clip.rounded());
        prop_assert_eq!(parse_bvh(&write_bvh(&once)).unwrap(), once);
    }

    #[test]
    fn interpolated_rotations_stay_unit(t in 0.0f64..3.0) {
        let clip = walk_clip();
        let map = RetargetMap::identity(&clip);
        let seq = retarget_clip(&clip, &map).unwrap();
        let pose = sample_pose(&seq, t, clip.frame_time).unwrap();
        for aa in &pose.joint_rotations {
            let q = axis_angle_to_quaternion(aa);
            prop_assert!((q.into_inner().norm() - 1.0).abs() <= 1e-9);
            let r = rodrigues(aa);
            prop_assert!((r.transpose() * r - Matrix3::identity()).amax() <= 1e-9);
            prop_assert!(aa.norm() < 2.0 * std::f64::consts::PI);
        }
    }
}
