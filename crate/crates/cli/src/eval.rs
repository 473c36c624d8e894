use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use stereokit::eval::{clip_report, mask_iou, MetricReport};
use stereokit::media::{
    load_frame, load_masks_dir, numbered_files, read_meta, FRAMES_DIR, MASKS_DIR,
};
use stereokit::{OcclusionMask, VideoClip};

use crate::output::emit;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Clip directory (or a directory of frame PNGs).
    #[arg(long)]
    pub a: PathBuf,

    #[arg(long)]
    pub b: PathBuf,

    /// Masks selecting the pixels for the masked PSNR.
    #[arg(long)]
    pub mask: Option<PathBuf>,

    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    #[serde(flatten)]
    metrics: MetricReport,
    frames: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    masked_pixel_ratio: Option<f64>,
    /// Mean per-frame IoU of the masks stored with the two clips.
    #[serde(skip_serializing_if = "Option::is_none")]
    mask_iou: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

fn load_video(dir: &Path) -> Result<VideoClip> {
    let frames_dir = if dir.join(FRAMES_DIR).is_dir() {
        dir.join(FRAMES_DIR)
    } else {
        dir.to_path_buf()
    };
    let paths = numbered_files(&frames_dir, "png")?;
    if paths.is_empty() {
        bail!("no frames in {}", frames_dir.display());
    }
    let frames = paths
        .par_iter()
        .map(load_frame)
        .collect::<stereokit::Result<Vec<_>>>()?;
    let fps = read_meta(dir)
        .map(|m| m.frame_rate)
        .unwrap_or(stereokit::media::DEFAULT_FRAME_RATE);
    Ok(VideoClip::new(frames, fps)?)
}

fn load_masks(dir: &Path) -> Result<Vec<OcclusionMask>> {
    let d = if dir.join(MASKS_DIR).is_dir() {
        dir.join(MASKS_DIR)
    } else {
        dir.to_path_buf()
    };
    load_masks_dir(&d).with_context(|| format!("loading masks from {}", d.display()))
}

pub fn run(a: &EvalArgs) -> Result<()> {
    let va = load_video(&a.a)?;
    let vb = load_video(&a.b)?;
    if va.len() != vb.len() {
        bail!("frame count mismatch: {} vs {}", va.len(), vb.len());
    }
    let mut warnings = Vec::new();
    let masks = a.mask.as_deref().map(load_masks).transpose()?;
    let mut masked_pixel_ratio = None;
    let selection = match &masks {
        Some(m) => {
            if m.len() != va.len() {
                bail!("{} masks for {} frames", m.len(), va.len());
            }
            let (w, h) = va.dims();
            let count: usize = m.iter().map(OcclusionMask::count).sum();
            masked_pixel_ratio = Some(count as f64 / (w * h * m.len()) as f64);
            if count == 0 {
                warnings.push("mask selects no pixels; masked PSNR omitted".to_string());
                None
            } else {
                Some(m.as_slice())
            }
        }
        None => None,
    };
    let mut metrics = clip_report(&va, &vb, selection)?;
    if selection.is_none() && masks.is_some() {
        metrics.pixel_count = 0;
    }

    let mask_iou = match (a.a.join(MASKS_DIR).is_dir(), a.b.join(MASKS_DIR).is_dir()) {
        (true, true) => {
            let (ma, mb) = (load_masks(&a.a)?, load_masks(&a.b)?);
            if ma.len() != mb.len() {
                bail!("mask count mismatch: {} vs {}", ma.len(), mb.len());
            }
            let total = ma
                .iter()
                .zip(&mb)
                .map(|(x, y)| mask_iou(x, y))
                .sum::<stereokit::Result<f64>>()?;
            Some(total / ma.len() as f64)
        }
        _ => None,
    };

    emit(
        &EvalReport {
            metrics,
            frames: va.len(),
            masked_pixel_ratio,
            mask_iou,
            warnings,
        },
        a.report.as_deref(),
    )
}
