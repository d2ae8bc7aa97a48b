//! Samples a camera rig, projects points and inverts the projection through
//! the lens distortion.
//!
//! cargo run --example camera_projection

use corrgen::math::Vec3;
use corrgen::toy::toy_rig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rig = toy_rig(640, 480).sample(&mut rng)?;
    println!("{} cameras", rig.len());
    for (i, cam) in rig.cameras.iter().enumerate() {
        let c = cam.center();
        println!(
            "  cam {i}: f = {:.0} px, k1 = {:+.3}, k2 = {:+.3}, center ({:+.2}, {:+.2}, {:+.2})",
            cam.fx, cam.k1, cam.k2, c.x, c.y, c.z
        );
    }

    let cam = &rig.cameras[0];
    let target = Vec3::new(0.0, 0.9, 0.0);
    match cam.project(&target) {
        Some((u, v)) => println!("subject center projects to ({u:.2}, {v:.2})"),
        None => println!("subject center is behind the camera"),
    }

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (u, v) = (rng.random_range(0.0..cam.width as f64), rng.random_range(0.0..cam.height as f64));
        let ray = cam.pixel_ray(u, v)?;
        let (pu, pv) = cam.project(&ray.at(rng.random_range(1.0..8.0))).expect("point on a pixel ray projects");
        worst = worst.max((pu - u).hypot(pv - v));
    }
    println!("pixel → ray → pixel: max error {worst:.2e} px over 1000 pixels");

    let corner = ((0.0 - cam.cx) / cam.fx, (0.0 - cam.cy) / cam.fy);
    let (x, y) = cam.undistort(corner.0, corner.1)?;
    let (xd, yd) = cam.distort(x, y);
    println!(
        "image corner: distorted ({:+.4}, {:+.4}) ← undistorted ({x:+.4}, {y:+.4}), residual {:.1e}",
        corner.0,
        corner.1,
        (xd - corner.0).hypot(yd - corner.1)
    );
    Ok(())
}
