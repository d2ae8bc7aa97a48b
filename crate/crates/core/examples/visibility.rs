//! Per-vertex visibility of the toy biped from each camera of a rig, and
//! geodesic distances over its surface.
//!
//! cargo run --example visibility

use corrgen::body::{PoseParams, ShapeParams};
use corrgen::geometry::{vertex_visibility, Bvh, EdgeGraph};
use corrgen::toy::{build_toy_biped, toy_rig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let toy = build_toy_biped(8, 0.1);
    let model = &toy.model;
    let (mesh, _) = model.posed(&ShapeParams::zeros(model.num_shape()), &PoseParams::identity(model.num_joints()))?;
    let bvh = Bvh::build(&mesh)?;
    let stats = bvh.stats();
    println!("BVH: {} nodes, {} leaves, depth {}", stats.nodes, stats.leaves, stats.depth);

    let rig = toy_rig(320, 240).sample(&mut ChaCha8Rng::seed_from_u64(4))?;
    for (i, cam) in rig.cameras.iter().enumerate() {
        let vis = vertex_visibility(&mesh, &bvh, cam);
        // Visible fraction per body part, via the chart of any face using the vertex.
        let mut seen = [0usize; 15];
        let mut total = [0usize; 15];
        let mut part_of_vertex = vec![0u8; mesh.vertices.len()];
        for (f, tri) in mesh.faces.iter().enumerate() {
            let p = toy.atlas.part_of_face(f as u32)?;
            for &v in tri {
                part_of_vertex[v as usize] = p;
            }
        }
        for (v, &p) in part_of_vertex.iter().enumerate() {
            total[p as usize] += 1;
            seen[p as usize] += vis.get(v) as usize;
        }
        let torso = 100.0 * seen[2] as f64 / total[2].max(1) as f64;
        println!(
            "cam {i}: {:>4} of {} vertices visible ({:.1}%), torso {torso:.0}%",
            vis.count(),
            vis.len(),
            100.0 * vis.count() as f64 / vis.len() as f64
        );
    }

    let graph = EdgeGraph::new(&mesh.vertices, &mesh.faces);
    let top = (0..mesh.vertices.len())
        .max_by(|&a, &b| mesh.vertices[a].y.total_cmp(&mesh.vertices[b].y))
        .unwrap_or(0);
    let d = graph.distances_from(top)?;
    let (far, dist) = d
        .iter()
        .enumerate()
        .filter(|(_, x)| x.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap_or((top, &0.0));
    println!(
        "geodesic from the top of the head (vertex {top}) to the farthest vertex {far}: {dist:.3} m (straight line {:.3} m)",
        (mesh.vertices[top] - mesh.vertices[far]).norm()
    );
    Ok(())
}
