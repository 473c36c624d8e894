//! Latent tensors, latent masks and token selections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `(c, t, h, w)` tensor stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    shape: [usize; 4],
    data: Vec<f32>,
}

impl LatentGrid {
    pub fn new(shape: [usize; 4], data: Vec<f32>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::ShapeMismatch(format!(
                "latent dims must be positive, got {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "latent {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: [usize; 4]) -> Result<Self> {
        Self::new(shape, vec![0.0; shape.iter().product()])
    }

    pub fn from_fn(shape: [usize; 4], mut f: impl FnMut([usize; 4]) -> f32) -> Result<Self> {
        let [c, t, h, w] = shape;
        let mut data = Vec::with_capacity(c * t * h * w);
        for ci in 0..c {
            for ti in 0..t {
                for y in 0..h {
                    for x in 0..w {
                        data.push(f([ci, ti, y, x]));
                    }
                }
            }
        }
        Self::new(shape, data)
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn channels(&self) -> usize {
        self.shape[0]
    }

    /// `(t, h, w)`.
    pub fn grid_shape(&self) -> [usize; 3] {
        [self.shape[1], self.shape[2], self.shape[3]]
    }

    /// Cells per channel, `t·h·w`.
    pub fn cells(&self) -> usize {
        self.shape[1] * self.shape[2] * self.shape[3]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, [c, t, y, x]: [usize; 4]) -> f32 {
        let [_, tt, hh, ww] = self.shape;
        self.data[((c * tt + t) * hh + y) * ww + x]
    }

    pub fn check_same_shape(&self, other: &LatentGrid, what: &str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// Elementwise combination of two same-shaped grids.
    pub fn zip_with(
        &self,
        other: &LatentGrid,
        what: &str,
        f: impl Fn(f32, f32) -> f32,
    ) -> Result<LatentGrid> {
        self.check_same_shape(other, what)?;
        Ok(LatentGrid {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> LatentGrid {
        LatentGrid {
            shape: self.shape,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `‖self − other‖₂ / ‖other‖₂` (absolute norm when `other` is zero).
    pub fn relative_error(&self, other: &LatentGrid) -> Result<f64> {
        self.check_same_shape(other, "relative error")?;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for (a, b) in self.data.iter().zip(&other.data) {
            num += ((*a as f64) - (*b as f64)).powi(2);
            den += (*b as f64).powi(2);
        }
        Ok(if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        })
    }

    /// Stacks grids with equal `(t, h, w)` along the channel axis.
    pub fn concat_channels(parts: &[&LatentGrid]) -> Result<LatentGrid> {
        let first = parts
            .first()
            .ok_or_else(|| Error::param("nothing to concatenate"))?;
        let g = first.grid_shape();
        let mut data = Vec::new();
        let mut c = 0;
        for p in parts {
            if p.grid_shape() != g {
                return Err(Error::ShapeMismatch(format!(
                    "concat: grid {:?} vs {:?}",
                    p.grid_shape(),
                    g
                )));
            }
            c += p.channels();
            data.extend_from_slice(&p.data);
        }
        LatentGrid::new([c, g[0], g[1], g[2]], data)
    }
}

/// A binary `(t, h, w)` mask over latent cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentMask {
    shape: [usize; 3],
    data: Vec<bool>,
}

impl LatentMask {
    pub fn new(shape: [usize; 3], data: Vec<bool>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::ShapeMismatch(format!(
                "latent mask dims must be positive, got {shape:?}"
            )));
        }
        if data.len() != shape.iter().product::<usize>() {
            return Err(Error::ShapeMismatch(format!(
                "latent mask {shape:?} got {} values",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: [usize; 3], value: bool) -> Result<Self> {
        Self::new(shape, vec![value; shape.iter().product()])
    }

    pub fn from_fn(
        shape: [usize; 3],
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let [t, h, w] = shape;
        let mut data = Vec::with_capacity(t * h * w);
        for ti in 0..t {
            for y in 0..h {
                for x in 0..w {
                    data.push(f(ti, y, x));
                }
            }
        }
        Self::new(shape, data)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, t: usize, y: usize, x: usize) -> bool {
        self.data[(t * self.shape[1] + y) * self.shape[2] + x]
    }

    pub fn frame(&self, t: usize) -> &[bool] {
        let n = self.shape[1] * self.shape[2];
        &self.data[t * n..(t + 1) * n]
    }

    pub(crate) fn frame_mut(&mut self, t: usize) -> &mut [bool] {
        let n = self.shape[1] * self.shape[2];
        &mut self.data[t * n..(t + 1) * n]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_subset_of(&self, other: &LatentMask) -> bool {
        self.shape == other.shape && self.data.iter().zip(&other.data).all(|(a, b)| !*a || *b)
    }
}

/// Flat indices (row-major over t, h, w) of the selected cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSelection {
    grid_shape: [usize; 3],
    indices: Vec<usize>,
}

impl TokenSelection {
    pub fn new(grid_shape: [usize; 3], indices: Vec<usize>) -> Result<Self> {
        let n: usize = grid_shape.iter().product();
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("token indices must be strictly increasing"));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::param(format!(
                    "token index {last} out of bounds for {n} cells"
                )));
            }
        }
        Ok(Self {
            grid_shape,
            indices,
        })
    }

    pub fn from_mask(mask: &LatentMask) -> Self {
        Self {
            grid_shape: mask.shape(),
            indices: mask
                .data()
                .iter()
                .enumerate()
                .filter(|(_, v)| **v)
                .map(|(i, _)| i)
                .collect(),
        }
    }

    pub fn grid_shape(&self) -> [usize; 3] {
        self.grid_shape
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Selected channel vectors, stored `(c, n)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedTokens {
    channels: usize,
    count: usize,
    data: Vec<f32>,
}

impl PackedTokens {
    pub fn new(channels: usize, count: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::ShapeMismatch(
                "packed tokens need at least one channel".into(),
            ));
        }
        if data.len() != channels * count {
            return Err(Error::ShapeMismatch(format!(
                "{channels}x{count} packed tokens got {} values",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            count,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Views the tokens as a `(c, 1, 1, n)` grid. Fails when there are no tokens.
    pub fn to_grid(&self) -> Result<LatentGrid> {
        LatentGrid::new([self.channels, 1, 1, self.count], self.data.clone())
    }

    pub fn from_grid(grid: LatentGrid) -> Self {
        let channels = grid.channels();
        let count = grid.cells();
        Self {
            channels,
            count,
            data: grid.into_data(),
        }
    }
}
