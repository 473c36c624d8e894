use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use stereokit::media::{
    create_dir, frame_bit_depth, frame_name, numbered_files, save_gray_preview, validate_clip,
    write_disparity, write_frames, write_json, write_masks, BitDepth, DISPARITY_DIR, FRAMES_DIR,
    MASKS_DIR, META_FILE,
};
use stereokit::warp::{normalize_clip_disparity, warp_frames, DEFAULT_DELTA};
use stereokit::{Sign, VideoClip, WarpConfig};

use crate::output::emit;

pub const JACOBIAN_DIR: &str = "jacobian";

#[derive(Debug, Args)]
pub struct WarpArgs {
    /// Clip directory with frames/ and disparity/.
    #[arg(long = "in")]
    pub input: PathBuf,

    #[arg(long)]
    pub out: PathBuf,

    /// Rescale raw disparity to [0, MAX_DISP * width] pixels first. Without it the
    /// disparity files are taken as pixels.
    #[arg(long)]
    pub max_disp: Option<f32>,

    /// ltr (content moves left) or rtl.
    #[arg(long, default_value = "ltr")]
    pub sign: Sign,

    /// Stretch threshold for the occlusion mask.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f32,
}

#[derive(Debug, Serialize)]
struct WarpMeta {
    command: &'static str,
    frame_rate: f32,
    frames: usize,
    resolution: (usize, usize),
    sign: Sign,
    max_disp: Option<f32>,
    warp: WarpConfig,
    jacobian_preview_range: (f32, f32),
    seed: u64,
    masked_pixel_ratio: f64,
}

#[derive(Debug, Serialize)]
struct WarpSummary {
    frames: usize,
    masked_pixels: usize,
    masked_pixel_ratio: f64,
}

pub fn run(a: &WarpArgs, seed: u64) -> Result<()> {
    let cfg = WarpConfig::new(a.sign).with_delta(a.delta);
    cfg.validate()?;
    let bundle = validate_clip(&a.input)?;
    let (w, h) = bundle.dims();
    let disparity = match a.max_disp {
        Some(frac) => normalize_clip_disparity(bundle.disparity(), frac, w)?,
        None => bundle.disparity().to_vec(),
    };
    let first = numbered_files(&a.input.join(FRAMES_DIR), "png")?;
    let depth = first
        .first()
        .map(frame_bit_depth)
        .transpose()?
        .unwrap_or(BitDepth::Eight);

    let results = warp_frames(bundle.video().frames(), &disparity, &cfg)?;
    let fps = bundle.video().frame_rate();
    let warped = VideoClip::new(results.iter().map(|r| r.warped.clone()).collect(), fps)?;
    let masks: Vec<_> = results.iter().map(|r| r.mask.clone()).collect();
    let warped_disp: Vec<_> = results.iter().map(|r| r.warped_disparity.clone()).collect();

    create_dir(&a.out)?;
    write_frames(&warped, &a.out.join(FRAMES_DIR), depth)?;
    write_disparity(&warped_disp, &a.out.join(DISPARITY_DIR))?;
    write_masks(&masks, &a.out.join(MASKS_DIR))?;
    let jdir = a.out.join(JACOBIAN_DIR);
    create_dir(&jdir)?;
    let range = (0.0, 2.0 * cfg.delta);
    results
        .par_iter()
        .enumerate()
        .try_for_each(|(i, r)| {
            save_gray_preview(
                w,
                h,
                r.jacobian.data(),
                range.0,
                range.1,
                jdir.join(frame_name(i, "png")),
            )
        })
        .context("writing jacobian previews")?;

    let masked: usize = masks.iter().map(|m| m.count()).sum();
    let ratio = masked as f64 / (w * h * masks.len()) as f64;
    write_json(
        &WarpMeta {
            command: "warp",
            frame_rate: fps,
            frames: masks.len(),
            resolution: (w, h),
            sign: a.sign,
            max_disp: a.max_disp,
            warp: cfg,
            jacobian_preview_range: range,
            seed,
            masked_pixel_ratio: ratio,
        },
        &a.out.join(META_FILE),
    )?;
    log::info!("warped {} frames, {masked} masked pixels", masks.len());
    emit(
        &WarpSummary {
            frames: masks.len(),
            masked_pixels: masked,
            masked_pixel_ratio: ratio,
        },
        None,
    )
}
