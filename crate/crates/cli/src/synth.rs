use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use stereokit::eval::{make_layered_scene, random_layered_spec, RandomSceneParams, SceneSpec};
use stereokit::media::{
    create_dir, write_clip, write_disparity, write_frames, write_json, write_masks, BitDepth,
    ClipMeta, DISPARITY_DIR, FRAMES_DIR, MASKS_DIR, META_FILE,
};

pub const GROUND_TRUTH_DIR: &str = "ground_truth";
pub const INPUT_MASKS_DIR: &str = "input_masks";
pub const SCENE_FILE: &str = "scene.json";

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene description (JSON). Without it a random scene is drawn from --seed.
    #[arg(long)]
    pub spec: Option<PathBuf>,

    #[arg(long)]
    pub out: PathBuf,

    /// Size of a random scene.
    #[arg(long, default_value_t = 256)]
    pub width: usize,

    #[arg(long, default_value_t = 256)]
    pub height: usize,

    #[arg(long, default_value_t = 8)]
    pub frames: usize,

    /// Write 16-bit frames.
    #[arg(long)]
    pub sixteen_bit: bool,
}

pub fn run(a: &SynthArgs, seed: u64) -> Result<()> {
    let spec: SceneSpec = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing scene spec {}", p.display()))?
        }
        None => random_layered_spec(
            seed,
            &RandomSceneParams {
                width: a.width,
                height: a.height,
                n_frames: a.frames,
                ..Default::default()
            },
        ),
    };
    let scene = make_layered_scene(&spec)?;
    let depth = if a.sixteen_bit {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    };
    let meta = ClipMeta {
        frame_rate: spec.frame_rate,
        source: Some("synthetic".into()),
    };
    write_clip(&scene.bundle, &a.out, &meta, depth)?;
    write_json(&spec, &a.out.join(SCENE_FILE))?;

    let gt = &scene.ground_truth;
    let gdir = a.out.join(GROUND_TRUTH_DIR);
    create_dir(&gdir)?;
    write_frames(&gt.right_view, &gdir.join(FRAMES_DIR), depth)?;
    write_disparity(&gt.right_disparity, &gdir.join(DISPARITY_DIR))?;
    write_masks(&gt.occlusion, &gdir.join(MASKS_DIR))?;
    write_masks(&gt.input_occlusion, &gdir.join(INPUT_MASKS_DIR))?;
    write_json(&meta, &gdir.join(META_FILE))?;
    log::info!(
        "wrote {} frames of {}x{}",
        spec.n_frames,
        spec.width,
        spec.height
    );
    Ok(())
}
