//! Fixtures shared by the benchmarks.

use stereokit::eval::{make_layered_scene, random_layered_spec, LayeredScene, RandomSceneParams};
use stereokit::{LatentGrid, LatentMask};

pub fn scene(width: usize, height: usize, n_frames: usize) -> LayeredScene {
    let spec = random_layered_spec(
        7,
        &RandomSceneParams {
            width,
            height,
            n_frames,
            ..Default::default()
        },
    );
    make_layered_scene(&spec).expect("bench scene")
}

/// Latent mask with a band of true cells drifting across the frames.
pub fn band_mask(shape: [usize; 3]) -> LatentMask {
    let [t, _, w] = shape;
    LatentMask::from_fn(shape, |f, _y, x| {
        (x + w - (f * w / t.max(1)) % w) % w < w / 5 + 1
    })
    .expect("bench mask")
}

pub fn ramp_latent(shape: [usize; 4]) -> LatentGrid {
    LatentGrid::from_fn(shape, |[c, f, y, x]| {
        ((c * 31 + f * 17 + y * 7 + x * 3) % 23) as f32 / 11.0 - 1.0
    })
    .expect("bench latent")
}
