//! Gradient-aware parallax warping.
//!
//! A frame is moved to a horizontally displaced viewpoint in four steps:
//!
//! 1. the disparity is forward-splatted into the target view with a nearest-surface z-test,
//! 2. the resulting holes are filled per scanline by linear interpolation,
//! 3. colors are fetched by backward sampling through the filled target disparity,
//! 4. the stretch `|dx'/dx|` of the inverse map is thresholded into an occlusion mask.
//!
//! Filling the holes makes the inverse map continuous, so disoccluded spans show up as
//! smooth, strongly stretched regions instead of scattered unassigned pixels.

mod sample;
mod splat;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use sample::{backward_sample, jacobian_x, occlusion_mask, out_of_frame_mask, JacobianField};
pub use splat::{fill_disparity_scanline, forward_splat, SplatResult};

use crate::error::{Error, Result};
use crate::media::{check_dims, ClipBundle, DisparityMap, Frame, OcclusionMask};

pub const DEFAULT_DELTA: f32 = 1.5;
pub const DEFAULT_EPSILON_GUARD: f32 = 1e-3;

/// Direction of the horizontal shift `x' = x + sign * d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    /// Content moves right (`rtl`: right view to left view).
    Positive,
    /// Content moves left (`ltr`: left view to right view).
    Negative,
}

impl Sign {
    pub fn as_f32(self) -> f32 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_f32() as f64
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sign::Positive => "rtl",
            Sign::Negative => "ltr",
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Sign::Positive),
            -1 => Ok(Sign::Negative),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ltr" | "-1" | "-" => Ok(Sign::Negative),
            "rtl" | "+1" | "1" | "+" => Ok(Sign::Positive),
            other => Err(Error::param(format!(
                "unknown direction {other:?} (expected ltr or rtl)"
            ))),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarpConfig {
    pub sign: Sign,
    /// Stretch ratio above which a target pixel counts as occluded.
    pub delta: f32,
    pub interpolation: Interpolation,
    /// Lower bound on `|dx/dx'|` before inversion.
    pub epsilon_guard: f32,
}

impl Default for WarpConfig {
    fn default() -> Self {
        Self::new(Sign::Negative)
    }
}

impl WarpConfig {
    pub fn new(sign: Sign) -> Self {
        Self {
            sign,
            delta: DEFAULT_DELTA,
            interpolation: Interpolation::Linear,
            epsilon_guard: DEFAULT_EPSILON_GUARD,
        }
    }

    pub fn with_delta(mut self, delta: f32) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 1.0) || !self.delta.is_finite() {
            return Err(Error::param(format!(
                "delta must be finite and > 1, got {}",
                self.delta
            )));
        }
        if !(self.epsilon_guard > 0.0 && self.epsilon_guard <= 1e-2) {
            return Err(Error::param(format!(
                "epsilon_guard must lie in (0, 1e-2], got {}",
                self.epsilon_guard
            )));
        }
        Ok(())
    }
}

/// Everything produced by warping one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpResult {
    pub warped: Frame,
    /// Filled disparity in the target view.
    pub warped_disparity: DisparityMap,
    pub mask: OcclusionMask,
    pub jacobian: JacobianField,
}

pub(crate) fn check_pair(frame: &Frame, disp: &DisparityMap) -> Result<()> {
    check_dims("frame vs disparity", frame.dims(), disp.dims())
}

fn check_frac(max_disp_frac: f32) -> Result<()> {
    if !(max_disp_frac >= 0.0) || !max_disp_frac.is_finite() {
        return Err(Error::param(format!(
            "max disparity fraction must be finite and >= 0, got {max_disp_frac}"
        )));
    }
    Ok(())
}

fn rescale(map: &DisparityMap, lo: f32, hi: f32, scale: f32) -> Result<DisparityMap> {
    let (w, h) = map.dims();
    if hi == lo {
        return DisparityMap::new(w, h, vec![0.0; w * h]);
    }
    let span = hi - lo;
    let data = map
        .data()
        .iter()
        .map(|v| (scale * (v - lo) / span).max(0.0))
        .collect();
    DisparityMap::new(w, h, data)
}

/// Min-max rescales raw disparity to `[0, max_disp_frac * width]` pixels.
/// A constant input maps to all zeros.
pub fn normalize_disparity(
    raw: &DisparityMap,
    max_disp_frac: f32,
    width: usize,
) -> Result<DisparityMap> {
    check_frac(max_disp_frac)?;
    let (lo, hi) = raw.min_max();
    rescale(raw, lo, hi, max_disp_frac * width as f32)
}

/// Like [`normalize_disparity`], but with one shared range across all frames of a clip.
pub fn normalize_clip_disparity(
    raw: &[DisparityMap],
    max_disp_frac: f32,
    width: usize,
) -> Result<Vec<DisparityMap>> {
    check_frac(max_disp_frac)?;
    let (lo, hi) = raw
        .iter()
        .map(DisparityMap::min_max)
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), (lo, hi)| {
            (a.min(lo), b.max(hi))
        });
    let scale = max_disp_frac * width as f32;
    raw.iter().map(|m| rescale(m, lo, hi, scale)).collect()
}

/// Warps one frame and derives its occlusion mask: stretched pixels plus pixels with no in-frame source.
pub fn warp_frame(frame: &Frame, disp: &DisparityMap, cfg: &WarpConfig) -> Result<WarpResult> {
    cfg.validate()?;
    let splat = forward_splat(frame, disp, cfg)?;
    let warped_disparity = fill_disparity_scanline(&splat.disparity, &splat.valid)?;
    let warped = backward_sample(frame, &warped_disparity, cfg)?;
    let jacobian = jacobian_x(&warped_disparity, cfg);
    let mut mask = occlusion_mask(&jacobian, cfg.delta)?;
    mask.union_with(&out_of_frame_mask(&warped_disparity, cfg.sign)?)?;
    Ok(WarpResult {
        warped,
        warped_disparity,
        mask,
        jacobian,
    })
}

/// Warps every frame of a clip (frames are processed in parallel, results keep clip order).
pub fn gapw_warp(bundle: &ClipBundle, cfg: &WarpConfig) -> Result<Vec<WarpResult>> {
    warp_frames(bundle.video().frames(), bundle.disparity(), cfg)
}

pub fn warp_frames(
    frames: &[Frame],
    disparity: &[DisparityMap],
    cfg: &WarpConfig,
) -> Result<Vec<WarpResult>> {
    cfg.validate()?;
    if frames.len() != disparity.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} frames but {} disparity maps",
            frames.len(),
            disparity.len()
        )));
    }
    frames
        .par_iter()
        .zip(disparity.par_iter())
        .map(|(f, d)| warp_frame(f, d, cfg))
        .collect()
}
