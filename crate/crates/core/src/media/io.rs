//! On-disk formats for frames, masks and disparity maps.
//!
//! Frames are lossless PNG (8-bit by default, 16-bit on request). Masks are
//! single-channel 8-bit PNG holding only 0 (keep) or 255 (occluded).
//! Disparity maps use a small binary container:
//!
//! ```text
//! "DSP1" | width: u32 LE | height: u32 LE | width*height f32 LE, row-major
//! ```

use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use super::raster::{DisparityMap, Frame, OcclusionMask};
use crate::error::{Error, Result};

pub const DSP_MAGIC: &[u8; 4] = b"DSP1";
const DSP_HEADER_LEN: usize = 12;

/// Bit depth used when writing frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f32 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

fn image_err(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(source) => Error::io(path, source),
        other => Error::Image {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|e| image_err(path, e))
}

/// Loads an 8- or 16-bit RGB PNG as a [`Frame`] scaled to `[0, 1]`.
pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f32> = match img {
        DynamicImage::ImageRgb8(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 255.0)
            .collect(),
        DynamicImage::ImageRgb16(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 65535.0)
            .collect(),
        other => {
            return Err(Error::UnsupportedChannels {
                path: path.to_path_buf(),
                layout: format!("{:?}", other.color()),
            })
        }
    };
    Frame::new(w, h, data)
}

/// Bit depth of a frame PNG, read from its header.
pub fn frame_bit_depth(path: impl AsRef<Path>) -> Result<BitDepth> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoder = reader.into_decoder().map_err(|e| image_err(path, e))?;
    match image::ImageDecoder::color_type(&decoder) {
        image::ColorType::Rgb8 => Ok(BitDepth::Eight),
        image::ColorType::Rgb16 => Ok(BitDepth::Sixteen),
        other => Err(Error::UnsupportedChannels {
            path: path.to_path_buf(),
            layout: format!("{other:?}"),
        }),
    }
}

fn quantize(v: f32, max: f32) -> f32 {
    (v * max).round().clamp(0.0, max)
}

pub fn save_frame(frame: &Frame, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let res = match depth {
        BitDepth::Eight => {
            let raw: Vec<u8> = frame
                .data()
                .iter()
                .map(|v| quantize(*v, 255.0) as u8)
                .collect();
            let buf: ImageBuffer<Rgb<u8>, _> = ImageBuffer::from_raw(w, h, raw)
                .ok_or_else(|| Error::Invariant("frame buffer size".into()))?;
            buf.save_with_format(path, ImageFormat::Png)
        }
        BitDepth::Sixteen => {
            let raw: Vec<u16> = frame
                .data()
                .iter()
                .map(|v| quantize(*v, 65535.0) as u16)
                .collect();
            let buf: ImageBuffer<Rgb<u16>, _> = ImageBuffer::from_raw(w, h, raw)
                .ok_or_else(|| Error::Invariant("frame buffer size".into()))?;
            buf.save_with_format(path, ImageFormat::Png)
        }
    };
    res.map_err(|e| image_err(path, e))
}

pub fn encode_disparity(map: &DisparityMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(DSP_HEADER_LEN + map.data().len() * 4);
    out.extend_from_slice(DSP_MAGIC);
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    for v in map.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_disparity(bytes: &[u8], path: &Path) -> Result<DisparityMap> {
    if bytes.len() < DSP_HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != DSP_MAGIC {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
            });
        }
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            got: bytes.len(),
            expected: DSP_HEADER_LEN,
        });
    }
    if &bytes[..4] != DSP_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let word = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let (w, h) = (word(4) as usize, word(8) as usize);
    let expected = DSP_HEADER_LEN + w * h * 4;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            got: bytes.len(),
            expected,
        });
    }
    let data: Vec<f32> = bytes[DSP_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(index) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: path.display().to_string(),
            index,
        });
    }
    DisparityMap::new(w, h, data)
}

pub fn save_disparity(map: &DisparityMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_disparity(map)).map_err(|e| Error::io(path, e))
}

pub fn load_disparity(path: impl AsRef<Path>) -> Result<DisparityMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_disparity(&bytes, path)
}

pub fn save_mask(mask: &OcclusionMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u8> = mask
        .data()
        .iter()
        .map(|m| if *m { 255 } else { 0 })
        .collect();
    let buf: ImageBuffer<Luma<u8>, _> =
        ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, raw)
            .ok_or_else(|| Error::Invariant("mask buffer size".into()))?;
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| image_err(path, e))
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<OcclusionMask> {
    let path = path.as_ref();
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let DynamicImage::ImageLuma8(buf) = img else {
        return Err(Error::UnsupportedChannels {
            path: path.to_path_buf(),
            layout: format!("{:?}", img.color()),
        });
    };
    let mut data = Vec::with_capacity(w * h);
    for v in buf.into_raw() {
        match v {
            0 => data.push(false),
            255 => data.push(true),
            value => {
                return Err(Error::InvalidMaskValue {
                    path: path.to_path_buf(),
                    value,
                })
            }
        }
    }
    OcclusionMask::new(w, h, data)
}

/// Writes a grayscale preview of a real-valued field, mapping `[lo, hi]` to `[0, 255]`.
pub fn save_gray_preview(
    width: usize,
    height: usize,
    values: &[f32],
    lo: f32,
    hi: f32,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let span = (hi - lo).max(f32::MIN_POSITIVE);
    let raw: Vec<u8> = values
        .iter()
        .map(|v| (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf: ImageBuffer<Luma<u8>, _> = ImageBuffer::from_raw(width as u32, height as u32, raw)
        .ok_or_else(|| Error::Invariant("preview buffer size".into()))?;
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| image_err(path, e))
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
    fn black_frame_loads_as_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("black.png");
        ImageBuffer::<Rgb<u8>, _>::from_raw(2, 2, vec![0u8; 12])
            .unwrap()
            .save_with_format(&p, ImageFormat::Png)
            .unwrap();
        let f = load_frame(&p).unwrap();
        assert_eq!(f.dims(), (2, 2));
        assert!(f.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn full_scale_loads_as_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("white.png");
        ImageBuffer::<Rgb<u8>, _>::from_raw(1, 1, vec![255u8; 3])
            .unwrap()
            .save_with_format(&p, ImageFormat::Png)
            .unwrap();
        assert_eq!(load_frame(&p).unwrap().data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn sixteen_bit_round_trip_within_one_step() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.png");
        let f = random_frame(16, 16, 7);
        save_frame(&f, &p, BitDepth::Sixteen).unwrap();
        let g = load_frame(&p).unwrap();
        let worst = f
            .data()
            .iter()
            .zip(g.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(worst <= 1.0 / 65535.0, "worst {worst}");
        assert_eq!(frame_bit_depth(&p).unwrap(), BitDepth::Sixteen);
        save_frame(&f, &p, BitDepth::Eight).unwrap();
        assert_eq!(frame_bit_depth(&p).unwrap(), BitDepth::Eight);
    }

    #[test]
    fn eight_bit_round_trip_within_one_step() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.png");
        let f = random_frame(16, 16, 8);
        save_frame(&f, &p, BitDepth::Eight).unwrap();
        let g = load_frame(&p).unwrap();
        for (a, b) in f.data().iter().zip(g.data()) {
            assert!((a - b).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn rgba_and_gray_rejected_as_frames() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgba.png");
        ImageBuffer::<image::Rgba<u8>, _>::from_raw(1, 1, vec![1u8, 2, 3, 4])
            .unwrap()
            .save_with_format(&p, ImageFormat::Png)
            .unwrap();
        assert!(matches!(
            load_frame(&p),
            Err(Error::UnsupportedChannels { .. })
        ));
    }

    #[test]
    fn missing_and_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_frame(dir.path().join("nope.png")),
            Err(Error::Io { .. })
        ));
        let p = dir.path().join("bad.png");
        fs::write(&p, b"\x89PNG garbage").unwrap();
        assert!(matches!(load_frame(&p), Err(Error::Image { .. })));
    }

    #[test]
    fn single_zero_disparity_is_sixteen_bytes() {
        let m = DisparityMap::new(1, 1, vec![0.0]).unwrap();
        let bytes = encode_disparity(&m);
        assert_eq!(bytes.len(), 16);
        assert_eq!(&bytes[..4], b"DSP1");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..], &[0, 0, 0, 0]);
        assert_eq!(decode_disparity(&bytes, Path::new("x")).unwrap(), m);
    }

    #[test]
    fn exact_binary_floats_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.dsp");
        let m = DisparityMap::new(2, 1, vec![3.5, 7.25]).unwrap();
        save_disparity(&m, &p).unwrap();
        let back = load_disparity(&p).unwrap();
        assert_eq!(back.data()[0].to_bits(), 3.5f32.to_bits());
        assert_eq!(back.data()[1].to_bits(), 7.25f32.to_bits());
    }

    #[test]
    fn random_map_file_bytes_stable() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = DisparityMap::from_fn(32, 32, |_, _| rng.random_range(0.0..100.0));
        let (p1, p2) = (dir.path().join("a.dsp"), dir.path().join("b.dsp"));
        save_disparity(&m, &p1).unwrap();
        let loaded = load_disparity(&p1).unwrap();
        save_disparity(&loaded, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        assert_eq!(loaded, m);
    }

    #[test]
    fn disparity_decode_errors() {
        let p = Path::new("x.dsp");
        assert!(matches!(
            decode_disparity(b"NOPE\0\0\0\0\0\0\0\0", p),
            Err(Error::BadMagic { .. })
        ));
        let mut bytes = encode_disparity(&DisparityMap::filled(2, 2, 1.0));
        bytes.pop();
        assert!(matches!(
            decode_disparity(&bytes, p),
            Err(Error::Truncated { .. })
        ));
        let mut bytes = encode_disparity(&DisparityMap::filled(1, 1, 1.0));
        bytes[12..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            decode_disparity(&bytes, p),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn mask_values_other_than_0_255_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        ImageBuffer::<Luma<u8>, _>::from_raw(2, 1, vec![0u8, 128])
            .unwrap()
            .save_with_format(&p, ImageFormat::Png)
            .unwrap();
        assert!(matches!(
            load_mask(&p),
            Err(Error::InvalidMaskValue { value: 128, .. })
        ));

        let m = OcclusionMask::new(3, 1, vec![true, false, true]).unwrap();
        save_mask(&m, &p).unwrap();
        assert_eq!(load_mask(&p).unwrap(), m);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn disparity_encoding_is_bit_exact(
            (w, h, data) in (1usize..6, 1usize..6).prop_flat_map(|(w, h)| {
                (Just(w), Just(h),
                 prop::collection::vec(0.0f32..1e6, w * h))
            })
        ) {
            let m = DisparityMap::new(w, h, data).unwrap();
            let bytes = encode_disparity(&m);
            let back = decode_disparity(&bytes, Path::new("p")).unwrap();
            prop_assert_eq!(encode_disparity(&back), bytes);
        }
    }
}
