//! Stereo inpainting pairs from monocular clips by warping to a virtual view and back.
//!
//! The input view is warped to the other view, and the warped view is warped back using
//! its own (filled) disparity. The occlusion mask of the return trip marks the input-view
//! pixels that the other view cannot see, which is exactly what an inpainter has to
//! produce. Only the original clip and that mask are kept as a training pair.

mod resize;

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use resize::{resize_area, resize_disparity};

use crate::error::{Error, Result};
use crate::media::{
    self, check_dims, create_dir, numbered_files, validate_clip, write_disparity, write_frames,
    write_json, write_masks, BitDepth, ClipBundle, DisparityMap, OcclusionMask, VideoClip,
    FRAMES_DIR, MASKS_DIR, META_FILE,
};
use crate::warp::{normalize_clip_disparity, warp_frames, Sign, WarpConfig};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// The three training resolutions used for the pseudo-stereo dataset.
pub const DEFAULT_RESOLUTIONS: [(usize, usize); 3] = [(1280, 720), (720, 1280), (768, 768)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisparitySamplerConfig {
    pub range_lo: f32,
    pub range_hi: f32,
    pub seed: u64,
}

impl Default for DisparitySamplerConfig {
    fn default() -> Self {
        Self {
            range_lo: 0.3,
            range_hi: 0.8,
            seed: 0,
        }
    }
}

impl DisparitySamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.range_lo.is_finite()
            && self.range_hi.is_finite()
            && 0.0 <= self.range_lo
            && self.range_lo <= self.range_hi;
        if !ok {
            return Err(Error::param(format!(
                "disparity range must satisfy 0 <= lo <= hi, got [{}, {}]",
                self.range_lo, self.range_hi
            )));
        }
        Ok(())
    }
}

/// Uniform draw from `[range_lo, range_hi]`, a pure function of `(seed, draw_index)`.
pub fn sample_max_disparity(cfg: &DisparitySamplerConfig, draw_index: u64) -> f32 {
    if cfg.range_lo == cfg.range_hi {
        return cfg.range_lo;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(draw_index);
    let u: f64 = rng.random();
    let (lo, hi) = (cfg.range_lo as f64, cfg.range_hi as f64);
    (lo + (hi - lo) * u).clamp(lo, hi) as f32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub max_disp_frac: f32,
    pub resolution: (usize, usize),
    pub sign: Sign,
    pub source_id: String,
    pub frame_rate: f32,
    /// Set when the raw disparity was constant, so no parallax (and no mask) exists.
    #[serde(default)]
    pub degenerate_disparity: bool,
}

/// One training pair: the original clip and its input-view occlusion masks.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    pub video: VideoClip,
    pub masks: Vec<OcclusionMask>,
    pub meta: SampleMeta,
}

impl DatasetSample {
    pub fn validate(&self) -> Result<()> {
        if self.masks.len() != self.video.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} frames but {} masks",
                self.video.len(),
                self.masks.len()
            )));
        }
        for (i, m) in self.masks.iter().enumerate() {
            check_dims(&format!("mask {i}"), self.video.dims(), m.dims())?;
        }
        Ok(())
    }

    pub fn masked_pixel_ratio(&self) -> f64 {
        let (w, h) = self.video.dims();
        let total = (w * h * self.masks.len()) as f64;
        self.masks.iter().map(OcclusionMask::count).sum::<usize>() as f64 / total
    }
}

/// Intermediate views kept for inspection.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub view2: VideoClip,
    pub view2_disparity: Vec<DisparityMap>,
    /// The input view reconstructed from the other view.
    pub reconstructed: VideoClip,
    /// Normalized input-view disparity in pixels.
    pub disparity: Vec<DisparityMap>,
}

#[derive(Debug, Clone)]
pub struct DualProjection {
    pub sample: DatasetSample,
    pub diagnostics: Diagnostics,
}

/// Builds one training pair from a clip whose disparity is in arbitrary (raw) units.
///
/// The raw disparity is min-max normalized over the whole clip to
/// `[0, max_disp_frac * width]` pixels before warping.
pub fn dual_project(
    bundle: &ClipBundle,
    max_disp_frac: f32,
    cfg: &WarpConfig,
) -> Result<DualProjection> {
    let (w, h) = bundle.dims();
    let disparity = normalize_clip_disparity(bundle.disparity(), max_disp_frac, w)?;
    let (lo, hi) = bundle
        .disparity()
        .iter()
        .map(DisparityMap::min_max)
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), (l, u)| {
            (a.min(l), b.max(u))
        });
    let degenerate = lo == hi;
    if degenerate {
        log::warn!("constant raw disparity; sample has no parallax");
    }

    let frames = bundle.video().frames();
    let there = warp_frames(frames, &disparity, cfg)?;
    let (view2, view2_disparity): (Vec<_>, Vec<_>) = there
        .into_iter()
        .map(|r| (r.warped, r.warped_disparity))
        .unzip();

    let back_cfg = cfg.with_sign(cfg.sign.flip());
    let back = warp_frames(&view2, &view2_disparity, &back_cfg)?;
    let (reconstructed, masks): (Vec<_>, Vec<_>) =
        back.into_iter().map(|r| (r.warped, r.mask)).unzip();

    let fps = bundle.video().frame_rate();
    let sample = DatasetSample {
        video: bundle.video().clone(),
        masks,
        meta: SampleMeta {
            max_disp_frac,
            resolution: (w, h),
            sign: cfg.sign,
            source_id: String::new(),
            frame_rate: fps,
            degenerate_disparity: degenerate,
        },
    };
    Ok(DualProjection {
        sample,
        diagnostics: Diagnostics {
            view2: VideoClip::new(view2, fps)?,
            view2_disparity,
            reconstructed: VideoClip::new(reconstructed, fps)?,
            disparity,
        },
    })
}

pub const DEBUG_DIR: &str = "debug";

/// Writes `frames/`, `masks/` and `meta.json` (plus `debug/` when diagnostics are given).
pub fn write_sample(
    sample: &DatasetSample,
    dir: impl AsRef<Path>,
    diagnostics: Option<&Diagnostics>,
) -> Result<()> {
    sample.validate()?;
    let dir = dir.as_ref();
    create_dir(dir)?;
    write_frames(&sample.video, &dir.join(FRAMES_DIR), BitDepth::Eight)?;
    write_masks(&sample.masks, &dir.join(MASKS_DIR))?;
    write_json(&sample.meta, &dir.join(META_FILE))?;
    if let Some(d) = diagnostics {
        let debug = dir.join(DEBUG_DIR);
        write_frames(
            &d.reconstructed,
            &debug.join("reconstructed").join(FRAMES_DIR),
            BitDepth::Eight,
        )?;
        write_frames(
            &d.view2,
            &debug.join("view2").join(FRAMES_DIR),
            BitDepth::Eight,
        )?;
        write_disparity(
            &d.view2_disparity,
            &debug.join("view2").join(media::DISPARITY_DIR),
        )?;
        write_disparity(
            &d.disparity,
            &debug.join("view1").join(media::DISPARITY_DIR),
        )?;
    }
    Ok(())
}

pub fn read_sample(dir: impl AsRef<Path>) -> Result<DatasetSample> {
    let dir = dir.as_ref();
    let mask_dir = dir.join(MASKS_DIR);
    if !mask_dir.is_dir() {
        return Err(Error::Clip {
            dir: dir.to_path_buf(),
            message: format!("missing directory {}", mask_dir.display()),
        });
    }
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: SampleMeta = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: meta_path.clone(),
        message: e.to_string(),
    })?;
    let frames = numbered_files(&dir.join(FRAMES_DIR), "png")?
        .par_iter()
        .map(media::load_frame)
        .collect::<Result<Vec<_>>>()?;
    let masks = media::load_masks_dir(&mask_dir)?;
    let sample = DatasetSample {
        video: VideoClip::new(frames, meta.frame_rate)?,
        masks,
        meta,
    };
    sample.validate().map_err(|e| Error::Clip {
        dir: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(sample)
}

/// Resizes frames by area averaging and disparity by nearest neighbor (rescaling its units).
pub fn resize_bundle(bundle: &ClipBundle, width: usize, height: usize) -> Result<ClipBundle> {
    if width == 0 || height == 0 {
        return Err(Error::param("target resolution must be positive"));
    }
    let frames = bundle
        .video()
        .frames()
        .par_iter()
        .map(|f| resize_area(f, width, height))
        .collect();
    let disparity = bundle
        .disparity()
        .par_iter()
        .map(|d| resize_disparity(d, width, height))
        .collect();
    ClipBundle::new(
        VideoClip::new(frames, bundle.video().frame_rate())?,
        disparity,
        None,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleStatus {
    Ok,
    Failed,
}

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub sample_dir: Option<String>,
    pub source_id: String,
    pub resolution: (usize, usize),
    pub max_disp_frac: f32,
    pub sign: Sign,
    pub status: SampleStatus,
    pub masked_pixel_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate_disparity: bool,
}

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub sampler: DisparitySamplerConfig,
    pub resolutions: Vec<(usize, usize)>,
    pub warp: WarpConfig,
    /// Also write intermediate views under `debug/`.
    pub debug: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            sampler: DisparitySamplerConfig::default(),
            resolutions: DEFAULT_RESOLUTIONS.to_vec(),
            warp: WarpConfig::default(),
            debug: false,
        }
    }
}

fn source_id(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn sample_dir_name(source_id: &str, (w, h): (usize, usize)) -> String {
    format!("{source_id}_{w}x{h}")
}

fn build_one(
    bundle: &ClipBundle,
    source: &str,
    resolution: (usize, usize),
    frac: f32,
    out_dir: &Path,
    opts: &DatasetOptions,
) -> Result<ManifestRecord> {
    let resized = resize_bundle(bundle, resolution.0, resolution.1)?;
    let mut projection = dual_project(&resized, frac, &opts.warp)?;
    projection.sample.meta.source_id = source.to_string();
    let name = sample_dir_name(source, resolution);
    write_sample(
        &projection.sample,
        out_dir.join(&name),
        opts.debug.then_some(&projection.diagnostics),
    )?;
    Ok(ManifestRecord {
        sample_dir: Some(name),
        source_id: source.to_string(),
        resolution,
        max_disp_frac: frac,
        sign: opts.warp.sign,
        status: SampleStatus::Ok,
        masked_pixel_ratio: projection.sample.masked_pixel_ratio(),
        error: None,
        degenerate_disparity: projection.sample.meta.degenerate_disparity,
    })
}

/// Runs dual projection for every clip at every resolution and writes `manifest.jsonl`.
///
/// Jobs are ordered by source id, then by resolution as given; the disparity draw index is
/// the job's position in that order. A clip that fails to load or project is recorded as
/// failed without affecting the others.
pub fn build_dataset(
    sources: &[PathBuf],
    out_dir: impl AsRef<Path>,
    opts: &DatasetOptions,
) -> Result<Vec<ManifestRecord>> {
    opts.sampler.validate()?;
    opts.warp.validate()?;
    let out_dir = out_dir.as_ref();
    create_dir(out_dir)?;

    let mut sources: Vec<(String, &PathBuf)> = sources.iter().map(|p| (source_id(p), p)).collect();
    sources.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let n_res = opts.resolutions.len();

    let per_clip: Vec<Vec<ManifestRecord>> = sources
        .par_iter()
        .enumerate()
        .map(|(ci, (id, path))| {
            let loaded = validate_clip(path);
            opts.resolutions
                .iter()
                .enumerate()
                .map(|(ri, &res)| {
                    let frac = sample_max_disparity(&opts.sampler, (ci * n_res + ri) as u64);
                    let result = loaded.as_ref().map_err(|e| e.to_string()).and_then(|b| {
                        build_one(b, id, res, frac, out_dir, opts).map_err(|e| e.to_string())
                    });
                    result.unwrap_or_else(|error| {
                        log::warn!("{id} at {}x{}: {error}", res.0, res.1);
                        ManifestRecord {
                            sample_dir: None,
                            source_id: id.clone(),
                            resolution: res,
                            max_disp_frac: frac,
                            sign: opts.warp.sign,
                            status: SampleStatus::Failed,
                            masked_pixel_ratio: 0.0,
                            error: Some(error),
                            degenerate_disparity: false,
                        }
                    })
                })
                .collect()
        })
        .collect();
    let records: Vec<ManifestRecord> = per_clip.into_iter().flatten().collect();
    write_manifest(&records, &out_dir.join(MANIFEST_FILE))?;
    Ok(records)
}

pub fn write_manifest(records: &[ManifestRecord], path: &Path) -> Result<()> {
    let mut text = String::new();
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        text.push_str(&line);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}
