use crate::media::{DisparityMap, Frame};

/// Source contributions `(index, weight)` for each output sample of a box filter.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f32)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let (lo, hi) = (o as f64 * scale, (o + 1) as f64 * scale);
            let mut taps = Vec::new();
            let mut i = lo.floor() as usize;
            while (i as f64) < hi && i < src {
                let overlap = (hi.min((i + 1) as f64) - lo.max(i as f64)).max(0.0);
                if overlap > 0.0 {
                    taps.push((i, (overlap / scale) as f32));
                }
                i += 1;
            }
            taps
        })
        .collect()
}

/// Area-average resampling (exact fractional box coverage, separable).
pub fn resize_area(frame: &Frame, width: usize, height: usize) -> Frame {
    let (sw, sh) = frame.dims();
    if (sw, sh) == (width, height) {
        return frame.clone();
    }
    let xw = area_weights(sw, width);
    let yw = area_weights(sh, height);
    let mut tmp = vec![[0.0f32; 3]; width * sh];
    for y in 0..sh {
        for (x, taps) in xw.iter().enumerate() {
            let mut acc = [0.0f32; 3];
            for &(i, wgt) in taps {
                let p = frame.pixel(i, y);
                for c in 0..3 {
                    acc[c] += p[c] * wgt;
                }
            }
            tmp[y * width + x] = acc;
        }
    }
    Frame::from_fn(width, height, |x, y| {
        let mut acc = [0.0f32; 3];
        for &(j, wgt) in &yw[y] {
            let p = tmp[j * width + x];
            for c in 0..3 {
                acc[c] += p[c] * wgt;
            }
        }
        acc
    })
}

/// Nearest-neighbor resampling with disparity values rescaled by the width ratio.
pub fn resize_disparity(map: &DisparityMap, width: usize, height: usize) -> DisparityMap {
    let (sw, sh) = map.dims();
    if (sw, sh) == (width, height) {
        return map.clone();
    }
    let ratio = width as f32 / sw as f32;
    let pick = |o: usize, src: usize, dst: usize| {
        (((o as f64 + 0.5) * src as f64 / dst as f64) as usize).min(src - 1)
    };
    DisparityMap::from_fn(width, height, |x, y| {
        map.get(pick(x, sw, width), pick(y, sh, height)) * ratio
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_averages_blocks() {
        let f = Frame::from_fn(4, 2, |x, _| [x as f32 / 4.0; 3]);
        let g = resize_area(&f, 2, 1);
        assert!((g.pixel(0, 0)[0] - 0.125).abs() < 1e-6);
        assert!((g.pixel(1, 0)[0] - 0.625).abs() < 1e-6);
    }

    #[test]
    fn fractional_ratio_preserves_mean() {
        let f = Frame::from_fn(7, 5, |x, y| [((x * 3 + y) % 5) as f32 / 4.0, 0.5, 0.0]);
        let g = resize_area(&f, 3, 2);
        let mean = |fr: &Frame| {
            fr.data().iter().step_by(3).map(|v| *v as f64).sum::<f64>()
                / (fr.width() * fr.height()) as f64
        };
        assert!((mean(&f) - mean(&g)).abs() < 1e-5);
        assert!(g
            .data()
            .iter()
            .skip(1)
            .step_by(3)
            .all(|v| (*v - 0.5).abs() < 1e-6));
    }

    #[test]
    fn disparity_tracks_width_ratio() {
        let d = DisparityMap::from_fn(8, 4, |x, _| if x < 4 { 2.0 } else { 6.0 });
        let r = resize_disparity(&d, 4, 2);
        assert_eq!(r.row(0), &[1.0, 1.0, 3.0, 3.0]);
        let up = resize_disparity(&d, 16, 4);
        assert_eq!(up.get(15, 0), 12.0);
    }
}
