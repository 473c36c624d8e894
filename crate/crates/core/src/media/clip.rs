//! Clip directories.
//!
//! ```text
//! <clip>/frames/000000.png ...
//! <clip>/disparity/000000.dsp ...
//! <clip>/masks/000000.png ...     (optional)
//! <clip>/meta.json                (optional)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{
    load_disparity, load_frame, load_mask, save_disparity, save_frame, save_mask, BitDepth,
};
use super::raster::{check_dims, DisparityMap, OcclusionMask, VideoClip};
use crate::error::{Error, Result};

pub const FRAMES_DIR: &str = "frames";
pub const DISPARITY_DIR: &str = "disparity";
pub const MASKS_DIR: &str = "masks";
pub const META_FILE: &str = "meta.json";

pub const DEFAULT_FRAME_RATE: f32 = 24.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub frame_rate: f32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl Default for ClipMeta {
    fn default() -> Self {
        Self {
            frame_rate: DEFAULT_FRAME_RATE,
            source: None,
        }
    }
}

/// A video with per-frame disparity and optional per-frame masks.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipBundle {
    video: VideoClip,
    disparity: Vec<DisparityMap>,
    masks: Option<Vec<OcclusionMask>>,
}

impl ClipBundle {
    pub fn new(
        video: VideoClip,
        disparity: Vec<DisparityMap>,
        masks: Option<Vec<OcclusionMask>>,
    ) -> Result<Self> {
        if disparity.len() != video.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} frames but {} disparity maps",
                video.len(),
                disparity.len()
            )));
        }
        let dims = video.dims();
        for (i, d) in disparity.iter().enumerate() {
            check_dims(&format!("disparity {i}"), dims, d.dims())?;
        }
        if let Some(masks) = &masks {
            if masks.len() != video.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} frames but {} masks",
                    video.len(),
                    masks.len()
                )));
            }
            for (i, m) in masks.iter().enumerate() {
                check_dims(&format!("mask {i}"), dims, m.dims())?;
            }
        }
        Ok(Self {
            video,
            disparity,
            masks,
        })
    }

    pub fn video(&self) -> &VideoClip {
        &self.video
    }

    pub fn disparity(&self) -> &[DisparityMap] {
        &self.disparity
    }

    pub fn masks(&self) -> Option<&[OcclusionMask]> {
        self.masks.as_deref()
    }

    pub fn len(&self) -> usize {
        self.video.len()
    }

    pub fn is_empty(&self) -> bool {
        self.video.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.video.dims()
    }

    pub fn into_parts(self) -> (VideoClip, Vec<DisparityMap>, Option<Vec<OcclusionMask>>) {
        (self.video, self.disparity, self.masks)
    }
}

pub fn frame_name(index: usize, ext: &str) -> String {
    format!("{index:06}.{ext}")
}

/// Lists `NNNNNN.<ext>` files in `dir` and checks they number `0..n` without gaps.
pub fn numbered_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let clip_err = |message: String| Error::Clip {
        dir: dir.to_path_buf(),
        message,
    };
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut indexed = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') || path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        if stem.len() != 6 || !stem.bytes().all(|b| b.is_ascii_digit()) {
            return Err(clip_err(format!("unexpected file name {name}")));
        }
        indexed.push((stem.parse::<usize>().expect("six digits"), path));
    }
    indexed.sort();
    for (expected, (got, _)) in indexed.iter().enumerate() {
        if *got != expected {
            return Err(clip_err(format!(
                "gap in frame numbering: expected {}, found {}",
                frame_name(expected, ext),
                frame_name(*got, ext)
            )));
        }
    }
    Ok(indexed.into_iter().map(|(_, p)| p).collect())
}

fn require_dir(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        return Err(Error::Clip {
            dir: dir.to_path_buf(),
            message: format!("missing directory {}", dir.display()),
        });
    }
    Ok(())
}

pub fn read_meta(dir: &Path) -> Result<ClipMeta> {
    let path = dir.join(META_FILE);
    if !path.exists() {
        return Ok(ClipMeta::default());
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path,
        message: e.to_string(),
    })
}

pub fn load_masks_dir(dir: &Path) -> Result<Vec<OcclusionMask>> {
    require_dir(dir)?;
    numbered_files(dir, "png")?
        .par_iter()
        .map(load_mask)
        .collect()
}

/// Loads and cross-checks a clip directory. Either the whole bundle loads or an error is returned.
pub fn validate_clip(dir: impl AsRef<Path>) -> Result<ClipBundle> {
    let dir = dir.as_ref();
    let clip_err = |message: String| Error::Clip {
        dir: dir.to_path_buf(),
        message,
    };
    let frames_dir = dir.join(FRAMES_DIR);
    let disp_dir = dir.join(DISPARITY_DIR);
    require_dir(&frames_dir)?;
    require_dir(&disp_dir)?;

    let frame_paths = numbered_files(&frames_dir, "png")?;
    let disp_paths = numbered_files(&disp_dir, "dsp")?;
    if frame_paths.is_empty() {
        return Err(clip_err("no frames".into()));
    }
    if frame_paths.len() != disp_paths.len() {
        return Err(clip_err(format!(
            "frame count mismatch: {} frames, {} disparity maps",
            frame_paths.len(),
            disp_paths.len()
        )));
    }
    let mask_dir = dir.join(MASKS_DIR);
    let mask_paths = if mask_dir.is_dir() {
        let paths = numbered_files(&mask_dir, "png")?;
        if paths.len() != frame_paths.len() {
            return Err(clip_err(format!(
                "frame count mismatch: {} frames, {} masks",
                frame_paths.len(),
                paths.len()
            )));
        }
        Some(paths)
    } else {
        None
    };
    let meta = read_meta(dir)?;

    let frames = frame_paths
        .par_iter()
        .map(load_frame)
        .collect::<Result<Vec<_>>>()?;
    let disparity = disp_paths
        .par_iter()
        .map(load_disparity)
        .collect::<Result<Vec<_>>>()?;
    let masks = mask_paths
        .map(|paths| paths.par_iter().map(load_mask).collect::<Result<Vec<_>>>())
        .transpose()?;

    let video = VideoClip::new(frames, meta.frame_rate).map_err(|e| clip_err(e.to_string()))?;
    ClipBundle::new(video, disparity, masks).map_err(|e| clip_err(e.to_string()))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_frames(video: &VideoClip, dir: &Path, depth: BitDepth) -> Result<()> {
    create_dir(dir)?;
    video
        .frames()
        .par_iter()
        .enumerate()
        .try_for_each(|(i, f)| save_frame(f, dir.join(frame_name(i, "png")), depth))
}

pub fn write_disparity(maps: &[DisparityMap], dir: &Path) -> Result<()> {
    create_dir(dir)?;
    maps.par_iter()
        .enumerate()
        .try_for_each(|(i, m)| save_disparity(m, dir.join(frame_name(i, "dsp"))))
}

pub fn write_masks(masks: &[OcclusionMask], dir: &Path) -> Result<()> {
    create_dir(dir)?;
    masks
        .par_iter()
        .enumerate()
        .try_for_each(|(i, m)| save_mask(m, dir.join(frame_name(i, "png"))))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes a bundle in the clip directory layout.
pub fn write_clip(
    bundle: &ClipBundle,
    dir: impl AsRef<Path>,
    meta: &ClipMeta,
    depth: BitDepth,
) -> Result<()> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    write_frames(bundle.video(), &dir.join(FRAMES_DIR), depth)?;
    write_disparity(bundle.disparity(), &dir.join(DISPARITY_DIR))?;
    if let Some(masks) = bundle.masks() {
        write_masks(masks, &dir.join(MASKS_DIR))?;
    }
    write_json(meta, &dir.join(META_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Frame;

    fn bundle(n: usize, w: usize, h: usize) -> ClipBundle {
        let frames = (0..n)
            .map(|i| {
                Frame::from_fn(w, h, |x, y| {
                    [(x + i) as f32 / (w + n) as f32, y as f32 / h as f32, 0.5]
                })
            })
            .collect();
        let video = VideoClip::new(frames, 30.0).unwrap();
        let disp = (0..n)
            .map(|i| DisparityMap::filled(w, h, i as f32))
            .collect();
        ClipBundle::new(video, disp, None).unwrap()
    }

    #[test]
    fn three_frame_clip_validates() {
        let dir = tempfile::tempdir().unwrap();
        let b = bundle(3, 8, 6);
        write_clip(
            &b,
            dir.path(),
            &ClipMeta {
                frame_rate: 30.0,
                source: None,
            },
            BitDepth::Eight,
        )
        .unwrap();
        let loaded = validate_clip(dir.path()).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded.disparity(), b.disparity());
        assert_eq!(loaded.video().frame_rate(), 30.0);
    }

    #[test]
    fn count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_clip(
            &bundle(3, 8, 6),
            dir.path(),
            &ClipMeta::default(),
            BitDepth::Eight,
        )
        .unwrap();
        fs::remove_file(dir.path().join("disparity/000002.dsp")).unwrap();
        let err = validate_clip(dir.path()).unwrap_err().to_string();
        assert!(err.contains("count mismatch"), "{err}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_clip(
            &bundle(2, 64, 64),
            dir.path(),
            &ClipMeta::default(),
            BitDepth::Eight,
        )
        .unwrap();
        save_disparity(
            &DisparityMap::filled(32, 32, 0.0),
            dir.path().join("disparity/000000.dsp"),
        )
        .unwrap();
        let err = validate_clip(dir.path()).unwrap_err().to_string();
        assert!(err.contains("dimension mismatch"), "{err}");
    }

    #[test]
    fn gap_in_numbering_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_clip(
            &bundle(3, 4, 4),
            dir.path(),
            &ClipMeta::default(),
            BitDepth::Eight,
        )
        .unwrap();
        fs::rename(
            dir.path().join("frames/000002.png"),
            dir.path().join("frames/000003.png"),
        )
        .unwrap();
        fs::rename(
            dir.path().join("disparity/000002.dsp"),
            dir.path().join("disparity/000003.dsp"),
        )
        .unwrap();
        let err = validate_clip(dir.path()).unwrap_err().to_string();
        assert!(err.contains("gap"), "{err}");
    }

    #[test]
    fn missing_disparity_dir_names_path() {
        let dir = tempfile::tempdir().unwrap();
        write_clip(
            &bundle(1, 4, 4),
            dir.path(),
            &ClipMeta::default(),
            BitDepth::Eight,
        )
        .unwrap();
        fs::remove_dir_all(dir.path().join("disparity")).unwrap();
        let err = validate_clip(dir.path()).unwrap_err().to_string();
        assert!(err.contains("disparity"), "{err}");
    }

    #[test]
    fn masks_round_trip_through_clip() {
        let dir = tempfile::tempdir().unwrap();
        let (video, disp, _) = bundle(2, 5, 3).into_parts();
        let masks = vec![
            OcclusionMask::from_fn(5, 3, |x, _| x == 1),
            OcclusionMask::empty(5, 3),
        ];
        let b = ClipBundle::new(video, disp, Some(masks.clone())).unwrap();
        write_clip(&b, dir.path(), &ClipMeta::default(), BitDepth::Eight).unwrap();
        assert_eq!(
            validate_clip(dir.path()).unwrap().masks().unwrap(),
            masks.as_slice()
        );
    }
}
