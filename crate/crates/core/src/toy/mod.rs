//! A procedurally built articulated biped and matching demo resources.

mod biped;
mod resources;

pub use biped::{build_toy_biped, make_toy_biped, ToyBiped, TOY_JOINT_NAMES, TOY_NUM_SHAPE, TOY_PARENTS};
pub use resources::{
    procedural_background, procedural_occluder, procedural_texture, toy_retarget_map, toy_rig, walk_clip, wave_clip,
    write_toy_resources, ToyResourceOptions, TEXTURE_HEIGHT, TEXTURE_WIDTH,
};
