//! Procedural layered scenes with analytic stereo ground truth.
//!
//! A scene is a textured background plus fronto-parallel rectangles, each at a constant
//! disparity and moving at a constant velocity. Textures live in each layer's own
//! coordinates, so the other view can be rendered exactly, including content that is
//! hidden in the input view.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::oracle::interval_occlusion;
use crate::error::{Error, Result};
use crate::media::{ClipBundle, DisparityMap, Frame, OcclusionMask, VideoClip, DEFAULT_FRAME_RATE};
use crate::warp::Sign;

fn default_sign() -> Sign {
    Sign::Negative
}

fn default_cell() -> f32 {
    8.0
}

fn default_frame_rate() -> f32 {
    DEFAULT_FRAME_RATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub seed: u64,
    pub disparity: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `[x, y, width, height]` at frame 0.
    pub rect: [f32; 4],
    /// Pixels per frame, `[vx, vy]`.
    #[serde(default)]
    pub velocity: [f32; 2],
    pub disparity: f32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    /// Direction used to render the other view.
    #[serde(default = "default_sign")]
    pub sign: Sign,
    #[serde(default = "default_cell")]
    pub texture_cell: f32,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f32,
    pub background: Background,
    #[serde(default)]
    pub layers: Vec<Layer>,
}

/// Analytic other-view data for a layered scene.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub right_view: VideoClip,
    pub right_disparity: Vec<DisparityMap>,
    /// Pixels of the other view that no visible input surface reaches.
    pub occlusion: Vec<OcclusionMask>,
    /// Pixels of the input view that are hidden in the other view.
    pub input_occlusion: Vec<OcclusionMask>,
}

#[derive(Debug, Clone)]
pub struct LayeredScene {
    pub bundle: ClipBundle,
    pub ground_truth: GroundTruth,
}

/// Seeded value noise: random lattice values, bilinearly interpolated.
#[derive(Debug, Clone, Copy)]
pub struct ValueNoise {
    seed: u64,
    cell: f32,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ValueNoise {
    pub fn new(seed: u64, cell: f32) -> Self {
        Self {
            seed,
            cell: cell.max(1.0),
        }
    }

    fn lattice(&self, i: i64, j: i64, c: u64) -> f32 {
        let h = splitmix(
            self.seed
                ^ splitmix(
                    (i as u64).wrapping_mul(0x1000_0000_01B3) ^ splitmix(j as u64 ^ (c << 56)),
                ),
        );
        let u = (h >> 40) as f32 / (1u64 << 24) as f32;
        0.15 + 0.7 * u
    }

    pub fn sample(&self, x: f32, y: f32) -> [f32; 3] {
        let (u, v) = (x / self.cell, y / self.cell);
        let (i0, j0) = (u.floor(), v.floor());
        let (fu, fv) = (u - i0, v - j0);
        let (i0, j0) = (i0 as i64, j0 as i64);
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let c = c as u64;
            let a = self.lattice(i0, j0, c);
            let b = self.lattice(i0 + 1, j0, c);
            let d = self.lattice(i0, j0 + 1, c);
            let e = self.lattice(i0 + 1, j0 + 1, c);
            let top = a + (b - a) * fu;
            let bot = d + (e - d) * fu;
            *o = top + (bot - top) * fv;
        }
        out
    }
}

/// Integer placement of a layer at one frame.
#[derive(Debug, Clone, Copy)]
struct Placed {
    x: i64,
    y: i64,
    w: i64,
    h: i64,
    disparity: f32,
    texture: ValueNoise,
}

impl Placed {
    fn contains(&self, x: f32, y: i64) -> bool {
        y >= self.y && y < self.y + self.h && x >= self.x as f32 && x < (self.x + self.w) as f32
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.n_frames == 0 {
            return Err(Error::param(
                "scene dimensions and frame count must be positive",
            ));
        }
        let bg = self.background.disparity;
        if !(bg.is_finite() && bg >= 0.0) {
            return Err(Error::param("background disparity must be finite and >= 0"));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if !(layer.disparity.is_finite() && layer.disparity >= bg) {
                return Err(Error::param(format!(
                    "layer {i}: disparity {} below background {bg}",
                    layer.disparity
                )));
            }
            let [_, _, w, h] = layer.rect;
            if w < 1.0 || h < 1.0 {
                return Err(Error::param(format!("layer {i}: empty rect")));
            }
            for f in 0..self.n_frames {
                let p = self.place(layer, f);
                if p.x < 0
                    || p.y < 0
                    || p.x + p.w > self.width as i64
                    || p.y + p.h > self.height as i64
                {
                    return Err(Error::param(format!(
                        "layer {i}: rect leaves the frame at frame {f}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn place(&self, layer: &Layer, frame: usize) -> Placed {
        let [x, y, w, h] = layer.rect;
        let [vx, vy] = layer.velocity;
        Placed {
            x: (x + vx * frame as f32).round() as i64,
            y: (y + vy * frame as f32).round() as i64,
            w: w.round() as i64,
            h: h.round() as i64,
            disparity: layer.disparity,
            texture: ValueNoise::new(layer.seed, self.texture_cell),
        }
    }

    /// Layers at `frame`, nearest (largest disparity) first.
    fn front_to_back(&self, frame: usize) -> Vec<Placed> {
        let mut order: Vec<usize> = (0..self.layers.len()).collect();
        order.sort_by(|a, b| {
            self.layers[*b]
                .disparity
                .total_cmp(&self.layers[*a].disparity)
                .then(b.cmp(a))
        });
        order
            .into_iter()
            .map(|i| self.place(&self.layers[i], frame))
            .collect()
    }

    /// Renders one view. `shift` is 0 for the input view and `sign` for the other view.
    fn render(&self, frame: usize, shift: f32) -> (Frame, DisparityMap) {
        let layers = self.front_to_back(frame);
        let bg = ValueNoise::new(self.background.seed, self.texture_cell);
        let bg_disp = self.background.disparity;
        let (w, h) = (self.width, self.height);
        let mut disp = vec![0.0f32; w * h];
        let frame = Frame::from_fn(w, h, |x, y| {
            for l in &layers {
                let sx = x as f32 - shift * l.disparity;
                if l.contains(sx, y as i64) {
                    disp[y * w + x] = l.disparity;
                    return l.texture.sample(sx - l.x as f32, (y as i64 - l.y) as f32);
                }
            }
            disp[y * w + x] = bg_disp;
            bg.sample(x as f32 - shift * bg_disp, y as f32)
        });
        let disp = DisparityMap::new(w, h, disp).expect("scene disparities are finite and >= 0");
        (frame, disp)
    }
}

/// Renders the input view, its disparity and the analytic other view.
pub fn make_layered_scene(spec: &SceneSpec) -> Result<LayeredScene> {
    spec.validate()?;
    let s = spec.sign.as_f32();
    let mut left = Vec::with_capacity(spec.n_frames);
    let mut left_disp = Vec::with_capacity(spec.n_frames);
    let mut right = Vec::with_capacity(spec.n_frames);
    let mut right_disp = Vec::with_capacity(spec.n_frames);
    let mut occlusion = Vec::with_capacity(spec.n_frames);
    let mut input_occlusion = Vec::with_capacity(spec.n_frames);
    for f in 0..spec.n_frames {
        let (lf, ld) = spec.render(f, 0.0);
        let (rf, rd) = spec.render(f, s);
        occlusion.push(interval_occlusion(&ld, spec.sign));
        input_occlusion.push(interval_occlusion(&rd, spec.sign.flip()));
        left.push(lf);
        left_disp.push(ld);
        right.push(rf);
        right_disp.push(rd);
    }
    let bundle = ClipBundle::new(VideoClip::new(left, spec.frame_rate)?, left_disp, None)?;
    Ok(LayeredScene {
        bundle,
        ground_truth: GroundTruth {
            right_view: VideoClip::new(right, spec.frame_rate)?,
            right_disparity: right_disp,
            occlusion,
            input_occlusion,
        },
    })
}

/// Parameters for [`random_layered_spec`].
#[derive(Debug, Clone, Copy)]
pub struct RandomSceneParams {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub max_layers: usize,
    /// Inclusive range of integer layer disparities.
    pub disparity: (u32, u32),
    pub sign: Sign,
}

impl Default for RandomSceneParams {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            n_frames: 8,
            max_layers: 3,
            disparity: (4, 16),
            sign: Sign::Negative,
        }
    }
}

/// Draws a scene over a zero-disparity background with 1..=max_layers rectangles at distinct
/// integer disparities. Widths are at least three times the largest disparity so that each
/// layer leaves a band bounded by two different depths.
pub fn random_layered_spec(seed: u64, p: &RandomSceneParams) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dlo, dhi) = p.disparity;
    let n_layers = rng.random_range(1..=p.max_layers.max(1));
    let mut disparities: Vec<u32> = Vec::new();
    while disparities.len() < n_layers.min((dhi - dlo + 1) as usize) {
        let d = rng.random_range(dlo..=dhi);
        if !disparities.contains(&d) {
            disparities.push(d);
        }
    }
    let margin = (dhi as f32) + 4.0;
    let n = p.n_frames.saturating_sub(1) as f32;
    let layers = disparities
        .iter()
        .map(|&d| {
            let min_w = (3 * dhi) as f32;
            let max_w = (p.width as f32 / 3.0).max(min_w + 1.0);
            let w = rng.random_range(min_w..max_w).round();
            let h = rng
                .random_range(p.height as f32 / 6.0..p.height as f32 / 2.0)
                .round();
            let vx = rng.random_range(-2i32..=2) as f32;
            let vy = rng.random_range(-1i32..=1) as f32;
            let x_lo = margin + (-vx * n).max(0.0);
            let x_hi = p.width as f32 - margin - w - (vx * n).max(0.0);
            let y_lo = (-vy * n).max(0.0);
            let y_hi = p.height as f32 - h - (vy * n).max(0.0);
            let x = rng.random_range(x_lo..x_hi.max(x_lo + 1.0)).round();
            let y = rng.random_range(y_lo..y_hi.max(y_lo + 1.0)).round();
            Layer {
                rect: [x, y, w, h],
                velocity: [vx, vy],
                disparity: d as f32,
                seed: rng.random(),
            }
        })
        .collect();
    SceneSpec {
        width: p.width,
        height: p.height,
        n_frames: p.n_frames,
        sign: p.sign,
        texture_cell: 8.0,
        frame_rate: DEFAULT_FRAME_RATE,
        background: Background {
            seed: rng.random(),
            disparity: 0.0,
        },
        layers,
    }
}

/// A scene with smoothly varying disparity (no discontinuities) and a smooth moving texture.
pub fn make_smooth_scene(
    width: usize,
    height: usize,
    n_frames: usize,
    max_disp: f32,
    seed: u64,
) -> Result<ClipBundle> {
    if width == 0 || height == 0 || n_frames == 0 {
        return Err(Error::param(
            "scene dimensions and frame count must be positive",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texture = ValueNoise::new(rng.random(), 16.0);
    let (px, py): (f32, f32) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
    let tau = std::f32::consts::TAU;
    let mut frames = Vec::with_capacity(n_frames);
    let mut disp = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let drift = f as f32 * 0.7;
        frames.push(Frame::from_fn(width, height, |x, y| {
            texture.sample(x as f32 + drift, y as f32)
        }));
        disp.push(DisparityMap::from_fn(width, height, |x, y| {
            let u = x as f32 / width as f32 + px + 0.01 * f as f32;
            let v = y as f32 / height as f32 + py;
            max_disp * (0.5 + 0.25 * (tau * u).sin() + 0.25 * (tau * v).cos())
        }));
    }
    ClipBundle::new(VideoClip::new(frames, DEFAULT_FRAME_RATE)?, disp, None)
}
