use crate::error::{Error, Result};

/// An RGB frame with values in `[0, 1]`, stored row-major, interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Frame {
    pub const CHANNELS: usize = 3;

    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len("frame", width * height * Self::CHANNELS, data.len())?;
        if let Some(index) = data
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
        {
            return Err(Error::Invariant(format!(
                "frame value {} at index {index} outside [0, 1]",
                data[index]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a frame from a per-pixel color function. Values are clamped to `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                data.extend(px.iter().map(|v| sanitize_unit(*v)));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self::from_fn(width, height, |_, _| [value; 3])
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
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

fn sanitize_unit(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// An ordered, equally sized sequence of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    frames: Vec<Frame>,
    frame_rate: f32,
}

impl VideoClip {
    pub fn new(frames: Vec<Frame>, frame_rate: f32) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::param("video clip needs at least one frame"))?;
        let dims = first.dims();
        for (i, f) in frames.iter().enumerate() {
            check_dims(&format!("frame {i}"), dims, f.dims())?;
        }
        Ok(Self { frames, frame_rate })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn frame_rate(&self) -> f32 {
        self.frame_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }
}

/// Horizontal per-pixel shift in pixel units. Values are finite and non-negative;
/// the direction of the shift lives in the warp configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len("disparity map", width * height, data.len())?;
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "disparity map".into(),
                index,
            });
        }
        if let Some(index) = data.iter().position(|v| *v < 0.0) {
            return Err(Error::param(format!(
                "disparity map: negative value {} at index {index}",
                data[index]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Like [`DisparityMap::new`] but accepts any finite value, including negatives.
    /// Used for raw estimator output before normalization.
    pub fn new_raw(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len("disparity map", width * height, data.len())?;
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "disparity map".into(),
                index,
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                data.push(if v.is_finite() { v.max(0.0) } else { 0.0 });
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self::from_fn(width, height, |_, _| value)
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

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Binary mask; `true` marks occluded pixels that need inpainting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcclusionMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl OcclusionMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_len("occlusion mask", width * height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
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

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[bool] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|v| *v)
    }

    pub fn inverted(&self) -> OcclusionMask {
        OcclusionMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| !v).collect(),
        }
    }

    /// In-place OR.
    pub fn union_with(&mut self, other: &OcclusionMask) -> Result<()> {
        check_dims("mask union", self.dims(), other.dims())?;
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a |= *b);
        Ok(())
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &OcclusionMask) -> bool {
        self.dims() == other.dims() && self.data.iter().zip(&other.data).all(|(a, b)| !*a || *b)
    }
}

pub(crate) fn check_len(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::ShapeMismatch(format!(
            "{what}: data length {got}, expected {expected}"
        )));
    }
    Ok(())
}

pub(crate) fn check_dims(what: &str, expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected_w: expected.0,
            expected_h: expected.1,
            got_w: got.0,
            got_h: got.1,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_rejects_out_of_range() {
        assert!(Frame::new(1, 1, vec![0.0, 0.5, 1.5]).is_err());
        assert!(Frame::new(1, 1, vec![0.0, f32::NAN, 0.5]).is_err());
        assert!(Frame::new(1, 1, vec![0.0, 0.5]).is_err());
        assert!(Frame::new(1, 1, vec![0.0, 0.5, 1.0]).is_ok());
    }

    #[test]
    fn disparity_rejects_negative_and_nan() {
        assert!(DisparityMap::new(2, 1, vec![1.0, -0.5]).is_err());
        assert!(DisparityMap::new(2, 1, vec![1.0, f32::INFINITY]).is_err());
        assert!(DisparityMap::new_raw(2, 1, vec![1.0, -0.5]).is_ok());
    }

    #[test]
    fn clip_requires_equal_dims() {
        let a = Frame::filled(4, 4, 0.0);
        let b = Frame::filled(4, 3, 0.0);
        assert!(VideoClip::new(vec![a.clone(), b], 24.0).is_err());
        assert!(VideoClip::new(vec![], 24.0).is_err());
        assert_eq!(VideoClip::new(vec![a.clone(), a], 24.0).unwrap().len(), 2);
    }

    #[test]
    fn mask_subset() {
        let a = OcclusionMask::new(3, 1, vec![true, false, false]).unwrap();
        let b = OcclusionMask::new(3, 1, vec![true, true, false]).unwrap();
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
    }
}
