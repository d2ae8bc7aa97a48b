//! Builds the procedural toy biped, checks its invariants, poses it and saves
//! the model and atlas containers.
//!
//! cargo run --example toy_biped -- [OUT_DIR]

use std::path::PathBuf;

use corrgen::atlas::{part_name, save_atlas};
use corrgen::body::{load_body_model, save_body_model, PoseParams, ShapeParams};
use corrgen::math::Vec3;
use corrgen::toy::{build_toy_biped, TOY_JOINT_NAMES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("corrgen-toy-biped"));
    let toy = build_toy_biped(8, 0.1);
    let model = &toy.model;
    println!(
        "{} vertices, {} faces, {} joints, {} shape directions",
        model.num_vertices(),
        model.faces().len(),
        model.num_joints(),
        model.num_shape()
    );
    for check in model.to_raw().checks() {
        println!("  {:<28} {}", check.name, if check.passed { "ok" } else { &check.detail });
    }

    // Faces per body part.
    let mut per_part = [0usize; 15];
    for f in 0..toy.atlas.num_faces() {
        per_part[toy.atlas.part_of_face(f as u32)? as usize] += 1;
    }
    for (p, n) in per_part.iter().enumerate().skip(1) {
        println!("  part {p:>2} {:<22} {n:>5} faces", part_name(p as u8)?);
    }

    // Raise both arms and widen the body.
    let mut pose = PoseParams::identity(model.num_joints());
    for (j, name) in TOY_JOINT_NAMES.iter().enumerate() {
        match *name {
            "left_shoulder" => pose.joint_rotations[j] = Vec3::new(0.0, 0.0, 1.2),
            "right_shoulder" => pose.joint_rotations[j] = Vec3::new(0.0, 0.0, -1.2),
            _ => {}
        }
    }
    let mut beta = vec![0.0; model.num_shape()];
    beta[0] = 2.0;
    let (mesh, joints) = model.posed(&ShapeParams::new(beta, 5.0)?, &pose)?;
    let (lo, hi) = mesh.vertices.iter().fold((Vec3::repeat(f64::MAX), Vec3::repeat(f64::MIN)), |(lo, hi), v| {
        (lo.inf(v), hi.sup(v))
    });
    println!("posed extent {:.3} × {:.3} × {:.3} m", hi.x - lo.x, hi.y - lo.y, hi.z - lo.z);
    for (name, p) in TOY_JOINT_NAMES.iter().zip(joints.joint_positions()).take(4) {
        println!("  {name:<16} ({:+.3}, {:+.3}, {:+.3})", p.x, p.y, p.z);
    }

    save_body_model(model, &out.join("model"))?;
    save_atlas(&toy.atlas, &out.join("atlas"))?;
    let reloaded = load_body_model(&out.join("model"))?;
    assert_eq!(reloaded.template(), model.template());
    println!("saved to {}", out.display());
    Ok(())
}
