use crate::error::{Error, Result};
use crate::media::{DisparityMap, Frame, OcclusionMask};

use super::{check_pair, Interpolation, WarpConfig};

/// Horizontal stretch `|dx'/dx|` of the inverse map on the target grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianField {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl JacobianField {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        crate::media::check_len("jacobian field", width * height, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Invariant(format!(
                "jacobian value {} at {i} not positive and finite",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

/// Samples `source` at `x = x' - sign * D'(x', y')` for every target pixel, clamping at the edges.
pub fn backward_sample(
    source: &Frame,
    target_disp: &DisparityMap,
    cfg: &WarpConfig,
) -> Result<Frame> {
    check_pair(source, target_disp)?;
    let (w, h) = source.dims();
    let s = cfg.sign.as_f32();
    let last = (w - 1) as f32;
    let mut out = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for xt in 0..w {
            let x = xt as f32 - s * target_disp.get(xt, y);
            match cfg.interpolation {
                Interpolation::Nearest => {
                    let xi = x.round().clamp(0.0, last) as usize;
                    out.extend_from_slice(&source.pixel(xi, y));
                }
                Interpolation::Linear => {
                    let x = x.clamp(0.0, last);
                    let x0 = x.floor();
                    let t = x - x0;
                    let x0 = x0 as usize;
                    let a = source.pixel(x0, y);
                    if t == 0.0 {
                        out.extend_from_slice(&a);
                    } else {
                        let b = source.pixel((x0 + 1).min(w - 1), y);
                        out.extend((0..3).map(|c| (a[c] + (b[c] - a[c]) * t).clamp(0.0, 1.0)));
                    }
                }
            }
        }
    }
    Frame::new(w, h, out)
}

/// Evaluates `|dx'/dx|` where `x(x') = x' - sign * D'(x')` is the inverse map.
///
/// The filled disparity is piecewise linear, so the derivative is taken one-sided on each
/// side of a pixel and the smaller stretch is kept. On a linear segment both sides agree
/// (and match a central difference); at a knot between a flat run and a filled ramp this
/// assigns the knot pixel to the unstretched side. Border pixels use their single neighbor.
pub fn jacobian_x(target_disp: &DisparityMap, cfg: &WarpConfig) -> JacobianField {
    let (w, h) = target_disp.dims();
    let s = cfg.sign.as_f32();
    let guard = cfg.epsilon_guard;
    let stretch = |slope: f32| 1.0 / slope.abs().max(guard);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = target_disp.row(y);
        let map = |x: usize| x as f32 - s * row[x];
        for x in 0..w {
            let back = (x > 0).then(|| stretch(map(x) - map(x - 1)));
            let fwd = (x + 1 < w).then(|| stretch(map(x + 1) - map(x)));
            let j = match (back, fwd) {
                (Some(b), Some(f)) => b.min(f),
                (Some(v), None) | (None, Some(v)) => v,
                (None, None) => 1.0,
            };
            data.push(j);
        }
    }
    JacobianField {
        width: w,
        height: h,
        data,
    }
}

/// Thresholds the stretch field: occluded where `j > delta`.
pub fn occlusion_mask(j: &JacobianField, delta: f32) -> Result<OcclusionMask> {
    if !(delta > 1.0) {
        return Err(Error::param(format!(
            "occlusion threshold must exceed 1, got {delta}"
        )));
    }
    OcclusionMask::new(
        j.width,
        j.height,
        j.data.iter().map(|v| *v > delta).collect(),
    )
}

/// Marks target pixels whose backward source `x' - sign * D'(x')` falls outside the frame.
/// These have no source pixel at all (the entering border of a translation).
pub fn out_of_frame_mask(target_disp: &DisparityMap, sign: super::Sign) -> Result<OcclusionMask> {
    let (w, h) = target_disp.dims();
    let s = sign.as_f32();
    let hi = w as f32 - 0.5;
    let data = (0..h)
        .flat_map(|y| {
            target_disp.row(y).iter().enumerate().map(move |(x, d)| {
                let src = x as f32 - s * d;
                !(-0.5..hi).contains(&src)
            })
        })
        .collect();
    OcclusionMask::new(w, h, data)
}
