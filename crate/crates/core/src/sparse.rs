//! Sparse inpainting planner: which latent tokens a diffusion transformer has to process.
//!
//! Pixel occlusion masks are pooled onto the latent grid, dilated spatially, and optionally
//! densified on anchor frames. Only the selected tokens are denoised; the rest are copied from
//! the warped latent and the result is blended back in pixel space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent::{LatentGrid, LatentMask, PackedTokens, TokenSelection};
use crate::media::{check_dims, Frame, OcclusionMask, VideoClip};

/// Temporal (`ft`) and spatial (`fs`) compression of the latent space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DownsampleFactors {
    pub ft: usize,
    pub fs: usize,
}

impl Default for DownsampleFactors {
    fn default() -> Self {
        Self { ft: 4, fs: 8 }
    }
}

impl DownsampleFactors {
    pub fn validate(&self) -> Result<()> {
        if self.ft == 0 || self.fs == 0 {
            return Err(Error::param(format!(
                "downsample factors must be >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Pixel frames covered by each latent step, as half-open ranges.
    ///
    /// Uses the first-frame convention (`T = 1 + ft·(t−1)`: step 0 covers frame 0 alone) and
    /// falls back to plain blocks of `ft` when `T` is a multiple of `ft`.
    pub fn temporal_blocks(&self, n_frames: usize) -> Result<Vec<(usize, usize)>> {
        self.validate()?;
        let ft = self.ft;
        if n_frames >= 1 && (n_frames - 1).is_multiple_of(ft) {
            let t = 1 + (n_frames - 1) / ft;
            return Ok((0..t)
                .map(|k| {
                    if k == 0 {
                        (0, 1)
                    } else {
                        (1 + (k - 1) * ft, 1 + k * ft)
                    }
                })
                .collect());
        }
        if n_frames > 0 && n_frames.is_multiple_of(ft) {
            return Ok((0..n_frames / ft).map(|k| (k * ft, (k + 1) * ft)).collect());
        }
        Err(Error::param(format!(
            "{n_frames} frames cannot be compressed by ft={ft} (need 1 + {ft}k or a multiple of {ft})"
        )))
    }

    pub fn latent_shape(&self, n_frames: usize, width: usize, height: usize) -> Result<[usize; 3]> {
        let t = self.temporal_blocks(n_frames)?.len();
        if !width.is_multiple_of(self.fs)
            || !height.is_multiple_of(self.fs)
            || width == 0
            || height == 0
        {
            return Err(Error::param(format!(
                "{width}x{height} is not divisible by fs={}",
                self.fs
            )));
        }
        Ok([t, height / self.fs, width / self.fs])
    }
}

/// Max-pools pixel masks onto the latent grid.
pub fn downsample_mask(masks: &[OcclusionMask], f: DownsampleFactors) -> Result<LatentMask> {
    let first = masks
        .first()
        .ok_or_else(|| Error::param("no masks to downsample"))?;
    let (w, h) = first.dims();
    for (i, m) in masks.iter().enumerate() {
        check_dims(&format!("mask {i}"), (w, h), m.dims())?;
    }
    let shape = f.latent_shape(masks.len(), w, h)?;
    let blocks = f.temporal_blocks(masks.len())?;
    let lw = shape[2];
    let mut out = LatentMask::filled(shape, false)?;
    for (k, &(a, b)) in blocks.iter().enumerate() {
        let cell = out.frame_mut(k);
        for m in &masks[a..b] {
            for y in 0..h {
                let row = m.row(y);
                let base = (y / f.fs) * lw;
                for (x, v) in row.iter().enumerate() {
                    if *v {
                        cell[base + x / f.fs] = true;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Per-frame dilation with a `k×k` square (separable running maximum).
pub fn dilate_mask(m: &LatentMask, k: usize) -> Result<LatentMask> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::param(format!(
            "dilation kernel must be odd and >= 1, got {k}"
        )));
    }
    let r = k / 2;
    if r == 0 {
        return Ok(m.clone());
    }
    let [t, h, w] = m.shape();
    let mut out = m.clone();
    let mut tmp = vec![false; h * w];
    for ti in 0..t {
        let src = m.frame(ti);
        for y in 0..h {
            for x in 0..w {
                let (lo, hi) = (x.saturating_sub(r), (x + r).min(w - 1));
                tmp[y * w + x] = src[y * w + lo..=y * w + hi].iter().any(|v| *v);
            }
        }
        let dst = out.frame_mut(ti);
        for y in 0..h {
            let (lo, hi) = (y.saturating_sub(r), (y + r).min(h - 1));
            for x in 0..w {
                dst[y * w + x] = (lo..=hi).any(|yy| tmp[yy * w + x]);
            }
        }
    }
    Ok(out)
}

/// Makes every latent frame with index divisible by `stride` fully dense.
pub fn anchor_frames(m: &LatentMask, stride: Option<usize>) -> Result<LatentMask> {
    let Some(stride) = stride else {
        return Ok(m.clone());
    };
    if stride == 0 {
        return Err(Error::param("temporal stride must be >= 1"));
    }
    let mut out = m.clone();
    for ti in (0..m.shape()[0]).step_by(stride) {
        out.frame_mut(ti).fill(true);
    }
    Ok(out)
}

fn check_grid_mask(grid: &LatentGrid, grid_shape: [usize; 3], what: &str) -> Result<()> {
    if grid.grid_shape() != grid_shape {
        return Err(Error::ShapeMismatch(format!(
            "{what}: latent grid {:?} vs mask {:?}",
            grid.grid_shape(),
            grid_shape
        )));
    }
    Ok(())
}

/// Gathers the channel vectors of the masked cells in ascending flat-index order.
pub fn select_tokens(
    grid: &LatentGrid,
    mask: &LatentMask,
) -> Result<(TokenSelection, PackedTokens)> {
    check_grid_mask(grid, mask.shape(), "select")?;
    let sel = TokenSelection::from_mask(mask);
    let cells = grid.cells();
    let n = sel.len();
    let mut data = Vec::with_capacity(grid.channels() * n);
    for c in 0..grid.channels() {
        let plane = &grid.data()[c * cells..(c + 1) * cells];
        data.extend(sel.indices().iter().map(|&i| plane[i]));
    }
    Ok((sel, PackedTokens::new(grid.channels(), n, data)?))
}

/// Writes packed tokens back over `background` at the selected cells.
pub fn scatter_tokens(
    packed: &PackedTokens,
    sel: &TokenSelection,
    background: &LatentGrid,
) -> Result<LatentGrid> {
    check_grid_mask(background, sel.grid_shape(), "scatter")?;
    if packed.count() != sel.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} packed tokens for {} selected cells",
            packed.count(),
            sel.len()
        )));
    }
    if packed.channels() != background.channels() {
        return Err(Error::ShapeMismatch(format!(
            "packed tokens have {} channels, background {}",
            packed.channels(),
            background.channels()
        )));
    }
    let cells = background.cells();
    if sel.indices().last().is_some_and(|&i| i >= cells) {
        return Err(Error::param("token index out of bounds"));
    }
    let mut out = background.clone();
    let n = sel.len();
    for c in 0..packed.channels() {
        let src = &packed.data()[c * n..(c + 1) * n];
        let plane = &mut out.data_mut()[c * cells..(c + 1) * cells];
        for (&i, v) in sel.indices().iter().zip(src) {
            plane[i] = *v;
        }
    }
    Ok(out)
}

/// Latent blend: masked cells from `generated`, the rest from `reference`.
pub fn blend_latents(
    generated: &LatentGrid,
    reference: &LatentGrid,
    mask: &LatentMask,
) -> Result<LatentGrid> {
    generated.check_same_shape(reference, "latent blend")?;
    let (sel, packed) = select_tokens(generated, mask)?;
    scatter_tokens(&packed, &sel, reference)
}

/// Two-pass chamfer distance (weights 1 and √2) from every pixel to the nearest true pixel.
pub fn chamfer_distance(mask: &OcclusionMask) -> Vec<f32> {
    let (w, h) = mask.dims();
    let diag = std::f32::consts::SQRT_2;
    let mut d: Vec<f32> = mask
        .data()
        .iter()
        .map(|v| if *v { 0.0 } else { f32::INFINITY })
        .collect();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut v = d[i];
            if x > 0 {
                v = v.min(d[i - 1] + 1.0);
            }
            if y > 0 {
                v = v.min(d[i - w] + 1.0);
                if x > 0 {
                    v = v.min(d[i - w - 1] + diag);
                }
                if x + 1 < w {
                    v = v.min(d[i - w + 1] + diag);
                }
            }
            d[i] = v;
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let i = y * w + x;
            let mut v = d[i];
            if x + 1 < w {
                v = v.min(d[i + 1] + 1.0);
            }
            if y + 1 < h {
                v = v.min(d[i + w] + 1.0);
                if x + 1 < w {
                    v = v.min(d[i + w + 1] + diag);
                }
                if x > 0 {
                    v = v.min(d[i + w - 1] + diag);
                }
            }
            d[i] = v;
        }
    }
    d
}

/// Blend weight for the decoded clip: 1 on the mask, falling linearly to 0 over `feather`
/// pixels outside it.
pub fn feather_weights(mask: &OcclusionMask, feather: usize) -> Vec<f32> {
    if feather == 0 {
        return mask
            .data()
            .iter()
            .map(|v| if *v { 1.0 } else { 0.0 })
            .collect();
    }
    let span = (feather + 1) as f32;
    chamfer_distance(mask)
        .into_iter()
        .map(|d| (1.0 - d / span).clamp(0.0, 1.0))
        .collect()
}

/// Pixel blend: decoded content inside the masks, the corrupted (warped) clip elsewhere.
pub fn blend_pixels(
    decoded: &VideoClip,
    corrupted: &VideoClip,
    masks: &[OcclusionMask],
    feather: usize,
) -> Result<VideoClip> {
    if decoded.len() != corrupted.len() || masks.len() != decoded.len() {
        return Err(Error::ShapeMismatch(format!(
            "blend: {} decoded, {} corrupted, {} masks",
            decoded.len(),
            corrupted.len(),
            masks.len()
        )));
    }
    check_dims("blend inputs", decoded.dims(), corrupted.dims())?;
    let frames = decoded
        .frames()
        .par_iter()
        .zip(corrupted.frames())
        .zip(masks)
        .map(|((a, b), m)| {
            check_dims("blend mask", a.dims(), m.dims())?;
            let wts = feather_weights(m, feather);
            let (w, h) = a.dims();
            Ok(Frame::from_fn(w, h, |x, y| {
                let alpha = wts[y * w + x];
                let (pa, pb) = (a.pixel(x, y), b.pixel(x, y));
                if alpha >= 1.0 {
                    return pa;
                }
                if alpha <= 0.0 {
                    return pb;
                }
                [0, 1, 2].map(|c| alpha * pa[c] + (1.0 - alpha) * pb[c])
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, decoded.frame_rate())
}

pub fn retention_rate(m: &LatentMask) -> f64 {
    m.count() as f64 / m.len() as f64
}

/// Transformer cost model for the dense/sparse ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupModelParams {
    /// Dense token count.
    pub n: usize,
    /// Model width.
    pub d: usize,
    pub layers: usize,
    pub r: f64,
}

pub const DEFAULT_MODEL_TOKENS: usize = 80_640;
pub const DEFAULT_MODEL_WIDTH: usize = 1536;
pub const DEFAULT_MODEL_LAYERS: usize = 30;

impl SpeedupModelParams {
    pub fn new(n: usize, d: usize, r: f64) -> Self {
        Self {
            n,
            d,
            layers: DEFAULT_MODEL_LAYERS,
            r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::param("token count and model width must be >= 1"));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::param(format!(
                "retention must be in (0, 1], got {}",
                self.r
            )));
        }
        Ok(())
    }

    /// Matmul FLOPs of one block at `tokens` tokens: `12·N·d² + 2·N²·d`.
    pub fn block_flops(&self, tokens: f64) -> f64 {
        let d = self.d as f64;
        12.0 * tokens * d * d + 2.0 * tokens * tokens * d
    }

    pub fn dense_flops(&self) -> f64 {
        self.layers as f64 * self.block_flops(self.n as f64)
    }

    pub fn sparse_flops(&self) -> f64 {
        self.layers as f64 * self.block_flops(self.r * self.n as f64)
    }
}

pub fn flop_speedup(p: &SpeedupModelParams) -> Result<f64> {
    p.validate()?;
    let (n, d, r) = (p.n as f64, p.d as f64, p.r);
    Ok((12.0 * d + 2.0 * n) / (12.0 * r * d + 2.0 * r * r * n))
}

/// One planning configuration and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub grid_shape: [usize; 3],
    pub dilate_k: usize,
    pub stride: Option<usize>,
    pub retention_rate: f64,
    /// `None` when no token is selected.
    pub est_speedup: Option<f64>,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanConfig {
    pub factors: DownsampleFactors,
    pub dilate_k: usize,
    pub stride: Option<usize>,
    pub model_tokens: usize,
    pub model_width: usize,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            factors: DownsampleFactors::default(),
            dilate_k: 3,
            stride: None,
            model_tokens: DEFAULT_MODEL_TOKENS,
            model_width: DEFAULT_MODEL_WIDTH,
        }
    }
}

/// Final latent token mask: pooled, dilated, then anchored.
pub fn plan_mask(
    latent: &LatentMask,
    dilate_k: usize,
    stride: Option<usize>,
) -> Result<LatentMask> {
    anchor_frames(&dilate_mask(latent, dilate_k)?, stride)
}

pub fn plan_from_latent(latent: &LatentMask, cfg: &PlanConfig) -> Result<PlanReport> {
    let m = plan_mask(latent, cfg.dilate_k, cfg.stride)?;
    let r = retention_rate(&m);
    let est_speedup = if m.count() == 0 {
        None
    } else {
        Some(flop_speedup(&SpeedupModelParams::new(
            cfg.model_tokens,
            cfg.model_width,
            r,
        ))?)
    };
    Ok(PlanReport {
        grid_shape: m.shape(),
        dilate_k: cfg.dilate_k,
        stride: cfg.stride,
        retention_rate: r,
        est_speedup,
        token_count: m.count(),
    })
}

pub fn plan(masks: &[OcclusionMask], cfg: &PlanConfig) -> Result<PlanReport> {
    plan_from_latent(&downsample_mask(masks, cfg.factors)?, cfg)
}

pub const SWEEP_KERNELS: [usize; 3] = [1, 3, 5];
pub const SWEEP_STRIDES: [Option<usize>; 3] = [None, Some(20), Some(10)];

/// Reports for every kernel × stride combination.
pub fn sweep(
    masks: &[OcclusionMask],
    base: &PlanConfig,
    kernels: &[usize],
    strides: &[Option<usize>],
) -> Result<Vec<PlanReport>> {
    let latent = downsample_mask(masks, base.factors)?;
    let mut configs = Vec::new();
    for &k in kernels {
        for &s in strides {
            configs.push(PlanConfig {
                dilate_k: k,
                stride: s,
                ..*base
            });
        }
    }
    configs
        .par_iter()
        .map(|c| plan_from_latent(&latent, c))
        .collect()
}
