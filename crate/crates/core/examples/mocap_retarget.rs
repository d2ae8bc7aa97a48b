//! Parses a BVH clip, retargets it onto the toy biped and samples poses
//! between frames.
//!
//! cargo run --example mocap_retarget -- [CLIP.bvh RETARGET.json]

use corrgen::body::ShapeParams;
use corrgen::mocap::{load_bvh, parse_bvh, retarget_clip, sample_pose, write_bvh, RetargetMap};
use corrgen::toy::{make_toy_biped, toy_retarget_map, walk_clip, TOY_JOINT_NAMES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (clip, map) = match args.as_slice() {
        [bvh, map] => (load_bvh(bvh.as_ref())?, RetargetMap::load(map.as_ref())?),
        _ => (parse_bvh(&write_bvh(&walk_clip()))?, toy_retarget_map()),
    };
    println!(
        "{} joints, {} channels, {} frames at {:.1} fps",
        clip.joints.len(),
        clip.num_channels(),
        clip.num_frames(),
        1.0 / clip.frame_time
    );
    for j in &clip.joints {
        let parent = j.parent.map(|p| clip.joints[p].name.as_str()).unwrap_or("-");
        println!("  {:<16} parent {:<16} {} channels", j.name, parent, j.channels.len());
    }

    let poses = retarget_clip(&clip, &map)?;
    let model = make_toy_biped(8, 0.1);
    let beta = ShapeParams::zeros(model.num_shape());
    let foot = TOY_JOINT_NAMES.iter().position(|n| *n == "left_ankle").unwrap_or(0);
    // Clip positions are absolute; keep only the motion relative to the first frame.
    let first = poses[0].root_translation;
    let duration = clip.frame_time * (clip.num_frames().max(1) - 1) as f64;
    for k in 0..=8 {
        let t = duration * k as f64 / 8.0;
        let mut pose = sample_pose(&poses, t, clip.frame_time)?;
        pose.root_translation -= first;
        let (mesh, joints) = model.posed(&beta, &pose)?;
        let low = mesh.vertices.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
        let p = joints.joint_positions()[foot];
        println!(
            "t = {t:.3}s  root {:+.3} {:+.3} {:+.3}  {} at ({:+.3}, {:+.3}, {:+.3})  lowest vertex {low:+.3}",
            pose.root_translation.x,
            pose.root_translation.y,
            pose.root_translation.z,
            TOY_JOINT_NAMES[foot],
            p.x,
            p.y,
            p.z
        );
    }
    Ok(())
}
