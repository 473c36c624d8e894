use crate::error::{Error, Result};
use crate::media::{DisparityMap, OcclusionMask};
use crate::warp::Sign;

/// Marks target pixels that no source sub-pixel sample reaches.
///
/// Every source pixel is split into `supersample` equally spaced samples, each carried to
/// `sample + sign * d`. A target pixel is occluded iff no sample falls in `[x' - 0.5, x' + 0.5)`.
pub fn brute_force_occlusion(
    disp: &DisparityMap,
    sign: Sign,
    supersample: usize,
) -> Result<OcclusionMask> {
    if supersample < 4 {
        return Err(Error::param(format!(
            "supersample must be >= 4, got {supersample}"
        )));
    }
    let (w, h) = disp.dims();
    let s = sign.as_f64();
    let mut covered = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let d = disp.get(x, y) as f64;
            for i in 0..supersample {
                let p = x as f64 - 0.5 + (i as f64 + 0.5) / supersample as f64 + s * d;
                let t = (p + 0.5).floor();
                if t >= 0.0 && t < w as f64 {
                    covered[y * w + t as usize] = true;
                }
            }
        }
    }
    OcclusionMask::new(w, h, covered.into_iter().map(|c| !c).collect())
}

/// Closed-form counterpart of [`brute_force_occlusion`]: every run of equal disparity
/// `[x0, x1)` covers the target interval `[x0 - 0.5 + s d, x1 - 0.5 + s d)`, and a target
/// pixel is occluded iff its unit cell meets none of those intervals.
pub fn interval_occlusion(disp: &DisparityMap, sign: Sign) -> OcclusionMask {
    let (w, h) = disp.dims();
    let s = sign.as_f64();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = disp.row(y);
        let mut intervals = Vec::new();
        let mut start = 0;
        for x in 1..=w {
            if x == w || row[x] != row[start] {
                let d = row[start] as f64;
                intervals.push((start as f64 - 0.5 + s * d, x as f64 - 0.5 + s * d));
                start = x;
            }
        }
        for xt in 0..w {
            let (lo, hi) = (xt as f64 - 0.5, xt as f64 + 0.5);
            out.push(!intervals.iter().any(|(a, b)| *a < hi && *b > lo));
        }
    }
    OcclusionMask::new(w, h, out).expect("one value per pixel")
}

/// Maximal runs of `true` per row: `(row, start, len)`.
pub fn mask_runs(mask: &OcclusionMask) -> Vec<(usize, usize, usize)> {
    let mut runs = Vec::new();
    for y in 0..mask.height() {
        let row = mask.row(y);
        let mut x = 0;
        while x < row.len() {
            if row[x] {
                let start = x;
                while x < row.len() && row[x] {
                    x += 1;
                }
                runs.push((y, start, x - start));
            } else {
                x += 1;
            }
        }
    }
    runs
}

/// Grows a mask horizontally by `radius` pixels.
pub fn dilate_rows(mask: &OcclusionMask, radius: usize) -> OcclusionMask {
    let (w, h) = mask.dims();
    OcclusionMask::from_fn(w, h, |x, y| {
        let lo = x.saturating_sub(radius);
        let hi = (x + radius).min(w - 1);
        (lo..=hi).any(|i| mask.get(i, y))
    })
}
