use crate::error::{Error, Result};
use crate::media::{DisparityMap, Frame};

use super::{check_pair, Sign, WarpConfig};

/// Output of a forward splat into the target view.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatResult {
    pub frame: Frame,
    /// `true` where at least one source pixel landed.
    pub valid: Vec<bool>,
    /// Winning disparity per target pixel; 0 where invalid.
    pub disparity: DisparityMap,
}

impl SplatResult {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Scatters every source pixel to `round(x + sign * d)` on its own row.
///
/// Collisions are resolved by a disparity z-test (larger disparity is nearer and wins).
/// Equal disparities go to the source further along the shift direction.
pub fn forward_splat(frame: &Frame, disp: &DisparityMap, cfg: &WarpConfig) -> Result<SplatResult> {
    check_pair(frame, disp)?;
    let (w, h) = frame.dims();
    let s = cfg.sign.as_f32();
    let mut color = vec![0.0f32; w * h * 3];
    let mut zbuf = vec![0.0f32; w * h];
    let mut valid = vec![false; w * h];

    for y in 0..h {
        let row = disp.row(y);
        for (x, &d) in row.iter().enumerate() {
            let target = (x as f32 + s * d).round();
            if target < 0.0 || target >= w as f32 {
                continue;
            }
            let i = y * w + target as usize;
            // Sources are visited in ascending x, so replacing on ties favors larger x.
            let wins = !valid[i] || d > zbuf[i] || (d == zbuf[i] && cfg.sign == Sign::Positive);
            if wins {
                valid[i] = true;
                zbuf[i] = d;
                color[i * 3..i * 3 + 3].copy_from_slice(&frame.pixel(x, y));
            }
        }
    }

    Ok(SplatResult {
        frame: Frame::new(w, h, color)?,
        valid,
        disparity: DisparityMap::new(w, h, zbuf)?,
    })
}

/// Fills invalid pixels of each row by linear interpolation between the nearest valid
/// neighbors; runs touching the image border copy the nearest valid value.
pub fn fill_disparity_scanline(disp: &DisparityMap, valid: &[bool]) -> Result<DisparityMap> {
    let (w, h) = disp.dims();
    if valid.len() != w * h {
        return Err(Error::ShapeMismatch(format!(
            "validity has {} entries, disparity has {}",
            valid.len(),
            w * h
        )));
    }
    let mut out = disp.data().to_vec();
    for y in 0..h {
        let row = &mut out[y * w..(y + 1) * w];
        let ok = &valid[y * w..(y + 1) * w];
        fill_row(row, ok).ok_or(Error::EmptyScanline { row: y })?;
    }
    DisparityMap::new(w, h, out)
}

fn fill_row(row: &mut [f32], ok: &[bool]) -> Option<()> {
    let first = ok.iter().position(|v| *v)?;
    let last = ok.iter().rposition(|v| *v)?;
    let lead = row[first];
    row[..first].fill(lead);
    let trail = row[last];
    row[last + 1..].fill(trail);

    let mut left = first;
    let mut x = first + 1;
    while x <= last {
        if ok[x] {
            if x > left + 1 {
                let (a, b) = (row[left], row[x]);
                let span = (x - left) as f32;
                for (k, v) in row[left + 1..x].iter_mut().enumerate() {
                    let t = (k + 1) as f32 / span;
                    *v = a + (b - a) * t;
                }
            }
            left = x;
        }
        x += 1;
    }
    Some(())
}
