use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{check_dims, Frame, OcclusionMask, VideoClip};

/// Reported in place of +inf for identical inputs.
pub const PSNR_CAP_DB: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masked_psnr_db: Option<f64>,
    pub pixel_count: usize,
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
}

/// Sum of squared errors over selected pixels and the number of selected pixels.
fn sse(a: &Frame, b: &Frame, mask: Option<&OcclusionMask>) -> Result<(f64, usize)> {
    check_dims("psnr inputs", a.dims(), b.dims())?;
    if let Some(m) = mask {
        check_dims("psnr mask", a.dims(), m.dims())?;
    }
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for (i, (pa, pb)) in a
        .data()
        .chunks_exact(3)
        .zip(b.data().chunks_exact(3))
        .enumerate()
    {
        if mask.is_some_and(|m| !m.data()[i]) {
            continue;
        }
        count += 1;
        sum += pa
            .iter()
            .zip(pb)
            .map(|(x, y)| {
                let d = (*x as f64) - (*y as f64);
                d * d
            })
            .sum::<f64>();
    }
    Ok((sum, count))
}

/// PSNR in dB on the `[0, 1]` scale over all pixels, or over `mask`-selected pixels.
pub fn psnr(a: &Frame, b: &Frame, mask: Option<&OcclusionMask>) -> Result<f64> {
    let (sum, count) = sse(a, b, mask)?;
    if count == 0 {
        return Err(Error::param("psnr over an empty pixel selection"));
    }
    Ok(psnr_from_mse(sum / (count as f64 * 3.0)))
}

/// PSNR pooled over a whole clip (one MSE across all selected pixels of all frames).
pub fn clip_psnr(a: &VideoClip, b: &VideoClip, masks: Option<&[OcclusionMask]>) -> Result<f64> {
    if a.len() != b.len() || masks.is_some_and(|m| m.len() != a.len()) {
        return Err(Error::ShapeMismatch("clip lengths differ".into()));
    }
    let mut total = 0.0;
    let mut count = 0;
    for (i, (fa, fb)) in a.frames().iter().zip(b.frames()).enumerate() {
        let (s, n) = sse(fa, fb, masks.map(|m| &m[i]))?;
        total += s;
        count += n;
    }
    if count == 0 {
        return Err(Error::param("psnr over an empty pixel selection"));
    }
    Ok(psnr_from_mse(total / (count as f64 * 3.0)))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let x = i as f64 - c;
        *v = (-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable "valid" Gaussian filter.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w - SSIM_WINDOW + 1, h - SSIM_WINDOW + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k
                .iter()
                .zip(&row[x..x + SSIM_WINDOW])
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03 and unit dynamic range, averaged over the three channels.
pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    check_dims("ssim inputs", a.dims(), b.dims())?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::param(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let k = gaussian_window();
    let mut total = 0.0;
    for c in 0..3 {
        let x: Vec<f64> = a
            .data()
            .iter()
            .skip(c)
            .step_by(3)
            .map(|v| *v as f64)
            .collect();
        let y: Vec<f64> = b
            .data()
            .iter()
            .skip(c)
            .step_by(3)
            .map(|v| *v as f64)
            .collect();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let mx = filter_valid(&x, w, h, &k);
        let my = filter_valid(&y, w, h, &k);
        let sxx = filter_valid(&xx, w, h, &k);
        let syy = filter_valid(&yy, w, h, &k);
        let sxy = filter_valid(&xy, w, h, &k);
        let n = mx.len();
        let mut acc = 0.0;
        for i in 0..n {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            acc += ((2.0 * ux * uy + c1) * (2.0 * cov + c2))
                / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total += acc / n as f64;
    }
    Ok(total / 3.0)
}

/// PSNR, SSIM and optionally masked PSNR for one pair of frames.
pub fn frame_report(a: &Frame, b: &Frame, mask: Option<&OcclusionMask>) -> Result<MetricReport> {
    let psnr_db = psnr(a, b, None)?;
    let ssim = ssim(a, b)?;
    let masked_psnr_db = mask.map(|m| psnr(a, b, Some(m))).transpose()?;
    let pixel_count = mask.map_or(a.width() * a.height(), OcclusionMask::count);
    Ok(MetricReport {
        psnr_db,
        ssim,
        masked_psnr_db,
        pixel_count,
    })
}

/// Clip-level report: pooled PSNR, mean per-frame SSIM.
pub fn clip_report(
    a: &VideoClip,
    b: &VideoClip,
    masks: Option<&[OcclusionMask]>,
) -> Result<MetricReport> {
    let psnr_db = clip_psnr(a, b, None)?;
    let ssim = a
        .frames()
        .iter()
        .zip(b.frames())
        .map(|(x, y)| ssim(x, y))
        .sum::<Result<f64>>()?
        / a.len() as f64;
    let masked_psnr_db = masks.map(|m| clip_psnr(a, b, Some(m))).transpose()?;
    let (w, h) = a.dims();
    let pixel_count = masks.map_or(w * h * a.len(), |m| {
        m.iter().map(OcclusionMask::count).sum()
    });
    Ok(MetricReport {
        psnr_db,
        ssim,
        masked_psnr_db,
        pixel_count,
    })
}

/// Intersection over union; two empty masks count as perfect agreement.
pub fn mask_iou(a: &OcclusionMask, b: &OcclusionMask) -> Result<f64> {
    check_dims("mask iou", a.dims(), b.dims())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.data().iter().zip(b.data()) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(w: usize, h: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Frame::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()])
    }

    #[test]
    fn identical_is_capped() {
        let f = random_frame(12, 12, 1);
        assert_eq!(psnr(&f, &f, None).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn uniform_one_step_error() {
        let a = Frame::filled(16, 16, 0.5);
        let b = Frame::from_fn(16, 16, |_, _| [0.5 + 1.0 / 255.0; 3]);
        let p = psnr(&a, &b, None).unwrap();
        let closed_form = 20.0 * 255f64.log10();
        assert!((p - closed_form).abs() < 1e-3, "{p} vs {closed_form}");
        assert!((p - 48.13).abs() < 0.01);
    }

    #[test]
    fn checkerboard_vs_inverse_is_zero_db() {
        let a = Frame::from_fn(8, 8, |x, y| [((x + y) % 2) as f32; 3]);
        let b = Frame::from_fn(8, 8, |x, y| [1.0 - ((x + y) % 2) as f32; 3]);
        assert!(psnr(&a, &b, None).unwrap().abs() < 1e-12);
    }

    #[test]
    fn empty_mask_selection_errors() {
        let f = Frame::filled(4, 4, 0.1);
        assert!(psnr(&f, &f, Some(&OcclusionMask::empty(4, 4))).is_err());
    }

    #[test]
    fn masked_psnr_only_counts_selection() {
        let a = Frame::filled(4, 1, 0.0);
        let b = Frame::from_fn(4, 1, |x, _| [if x == 0 { 1.0 } else { 0.1 }; 3]);
        let m = OcclusionMask::from_fn(4, 1, |x, _| x > 0);
        assert!((psnr(&a, &b, Some(&m)).unwrap() - 20.0).abs() < 1e-4);
    }

    #[test]
    fn psnr_monotone_in_error() {
        let a = Frame::filled(8, 8, 0.2);
        let mut last = f64::INFINITY;
        for k in 1..10 {
            let b = Frame::filled(8, 8, 0.2 + 0.05 * k as f32);
            let p = psnr(&a, &b, None).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let a = random_frame(24, 20, 2);
        let b = random_frame(24, 20, 3);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        let (ab, ba) = (ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        assert!((ab - ba).abs() < 1e-12);
        assert_eq!(psnr(&a, &b, None).unwrap(), psnr(&b, &a, None).unwrap());
    }

    #[test]
    fn ssim_inverse_is_low() {
        let a = random_frame(32, 32, 4);
        let inv = Frame::from_fn(32, 32, |x, y| {
            let p = a.pixel(x, y);
            [1.0 - p[0], 1.0 - p[1], 1.0 - p[2]]
        });
        assert!(ssim(&a, &inv).unwrap() < 0.2);
    }

    #[test]
    fn ssim_constants_closed_form() {
        let (alpha, beta) = (0.3f64, 0.7f64);
        let a = Frame::filled(16, 16, alpha as f32);
        let b = Frame::filled(16, 16, beta as f32);
        let (alpha, beta) = (alpha as f32 as f64, beta as f32 as f64);
        let c1 = 0.01f64.powi(2);
        let expected = (2.0 * alpha * beta + c1) / (alpha * alpha + beta * beta + c1);
        let got = ssim(&a, &b).unwrap();
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn ssim_rejects_small_input() {
        let f = Frame::filled(10, 30, 0.0);
        assert!(ssim(&f, &f).is_err());
    }

    #[test]
    fn iou_cases() {
        let e = OcclusionMask::empty(3, 1);
        assert_eq!(mask_iou(&e, &e).unwrap(), 1.0);
        let a = OcclusionMask::new(3, 1, vec![true, true, false]).unwrap();
        let b = OcclusionMask::new(3, 1, vec![false, true, true]).unwrap();
        assert!((mask_iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
}
