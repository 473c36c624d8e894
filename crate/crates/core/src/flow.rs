//! Rectified-flow noising and Euler denoising with pluggable velocity predictors.
//!
//! The forward path is `z_σ = (1 − σ)·z0 + σ·ε`, whose velocity `ε − z0` is constant, so
//! an exact predictor recovers `z0` in any number of steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::latent::{LatentGrid, LatentMask};

/// Noise levels from `σ_T ∈ (0, 1]` down to exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    sigmas: Vec<f32>,
}

impl NoiseSchedule {
    pub fn new(sigmas: Vec<f32>) -> Result<Self> {
        if sigmas.len() < 2 {
            return Err(Error::param("a schedule needs at least two noise levels"));
        }
        let first = sigmas[0];
        if !(first > 0.0 && first <= 1.0) {
            return Err(Error::param(format!(
                "initial sigma must be in (0, 1], got {first}"
            )));
        }
        if *sigmas.last().unwrap() != 0.0 {
            return Err(Error::param("final sigma must be 0"));
        }
        if sigmas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::param("sigmas must be strictly decreasing"));
        }
        Ok(Self { sigmas })
    }

    pub fn sigmas(&self) -> &[f32] {
        &self.sigmas
    }

    /// Number of denoiser evaluations.
    pub fn steps(&self) -> usize {
        self.sigmas.len() - 1
    }

    pub fn initial_sigma(&self) -> f32 {
        self.sigmas[0]
    }
}

/// `σ_k = k / n` for `k = n … 0`.
pub fn linear_schedule(n_steps: usize) -> Result<NoiseSchedule> {
    if n_steps == 0 {
        return Err(Error::param("schedule needs at least one step"));
    }
    NoiseSchedule::new(
        (0..=n_steps)
            .rev()
            .map(|k| k as f32 / n_steps as f32)
            .collect(),
    )
}

pub fn add_noise(z0: &LatentGrid, sigma: f32, eps: &LatentGrid) -> Result<LatentGrid> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::param(format!(
            "sigma must be in (0, 1], got {sigma}"
        )));
    }
    // z + σ(ε − z) keeps z0 = ε an exact fixed point in floating point
    z0.zip_with(eps, "add_noise", |z, e| {
        if sigma == 1.0 {
            e
        } else {
            z + sigma * (e - z)
        }
    })
}

pub fn velocity_target(z0: &LatentGrid, eps: &LatentGrid) -> Result<LatentGrid> {
    eps.zip_with(z0, "velocity target", |e, z| e - z)
}

/// One Euler step from `sigma_t` down to `sigma_prev`.
pub fn euler_step(
    z_t: &LatentGrid,
    v_hat: &LatentGrid,
    sigma_t: f32,
    sigma_prev: f32,
) -> Result<LatentGrid> {
    if !(sigma_prev < sigma_t) {
        return Err(Error::param(format!(
            "euler step must decrease sigma, got {sigma_t} -> {sigma_prev}"
        )));
    }
    let dt = sigma_prev - sigma_t;
    z_t.zip_with(v_hat, "euler step", |z, v| z + v * dt)
}

/// Everything a velocity predictor sees at one step.
#[derive(Debug, Clone, Copy)]
pub struct DenoiserInput<'a> {
    pub z_t: &'a LatentGrid,
    /// Latent of the warped (masked) view.
    pub z_m: &'a LatentGrid,
    pub mask: &'a LatentMask,
    pub step: usize,
    pub sigma: f32,
    /// Text conditioning, passed through untouched.
    pub text: Option<&'a [f32]>,
}

pub trait Denoiser {
    fn velocity(&self, input: &DenoiserInput<'_>) -> Result<LatentGrid>;
}

impl<F> Denoiser for F
where
    F: Fn(&DenoiserInput<'_>) -> Result<LatentGrid>,
{
    fn velocity(&self, input: &DenoiserInput<'_>) -> Result<LatentGrid> {
        self(input)
    }
}

/// Predicts zero velocity everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDenoiser;

impl Denoiser for ZeroDenoiser {
    fn velocity(&self, input: &DenoiserInput<'_>) -> Result<LatentGrid> {
        Ok(input.z_t.map(|_| 0.0))
    }
}

/// Returns the true velocity `ε − z0` for a known pair.
#[derive(Debug, Clone)]
pub struct OracleDenoiser {
    velocity: LatentGrid,
}

impl OracleDenoiser {
    pub fn new(z0: &LatentGrid, eps: &LatentGrid) -> Result<Self> {
        Ok(Self {
            velocity: velocity_target(z0, eps)?,
        })
    }
}

impl Denoiser for OracleDenoiser {
    fn velocity(&self, _input: &DenoiserInput<'_>) -> Result<LatentGrid> {
        Ok(self.velocity.clone())
    }
}

/// Mask as a one-channel latent (1.0 for true cells).
pub fn mask_channel(mask: &LatentMask) -> Result<LatentGrid> {
    let [t, h, w] = mask.shape();
    LatentGrid::new(
        [1, t, h, w],
        mask.data()
            .iter()
            .map(|v| if *v { 1.0 } else { 0.0 })
            .collect(),
    )
}

/// The channel stack `[z_t; m̂; zᵐ]` fed to the network.
pub fn concat_inputs(input: &DenoiserInput<'_>) -> Result<LatentGrid> {
    input.z_t.check_same_shape(input.z_m, "denoiser inputs")?;
    LatentGrid::concat_channels(&[input.z_t, &mask_channel(input.mask)?, input.z_m])
}

/// A fixed per-token affine map on the concatenated input, `v = W·[z_t; m̂; zᵐ] + b`.
///
/// Each token's output depends only on that token, so running it on a packed subset gives
/// the same values as running it densely.
#[derive(Debug, Clone)]
pub struct PointwiseLinear {
    channels: usize,
    /// `channels × (2·channels + 1)`, row-major.
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl PointwiseLinear {
    pub fn new(channels: usize, weight: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if channels == 0 || weight.len() != channels * (2 * channels + 1) || bias.len() != channels
        {
            return Err(Error::param(
                "pointwise weights do not match the channel count",
            ));
        }
        Ok(Self {
            channels,
            weight,
            bias,
        })
    }

    pub fn random(channels: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fan_in = 2 * channels + 1;
        let scale = 0.5 / (fan_in as f32).sqrt();
        let mut draw = |n: usize| -> Vec<f32> {
            (0..n)
                .map(|_| {
                    scale * <StandardNormal as Distribution<f32>>::sample(&StandardNormal, &mut rng)
                })
                .collect()
        };
        let weight = draw(channels * fan_in);
        let bias = draw(channels);
        Self::new(channels, weight, bias)
    }
}

impl Denoiser for PointwiseLinear {
    fn velocity(&self, input: &DenoiserInput<'_>) -> Result<LatentGrid> {
        if input.z_t.channels() != self.channels {
            return Err(Error::ShapeMismatch(format!(
                "pointwise denoiser built for {} channels, got {}",
                self.channels,
                input.z_t.channels()
            )));
        }
        let x = concat_inputs(input)?;
        let cells = x.cells();
        let fan_in = 2 * self.channels + 1;
        let mut out = vec![0.0f32; self.channels * cells];
        for (o, plane) in out.chunks_exact_mut(cells).enumerate() {
            plane.fill(self.bias[o]);
            for i in 0..fan_in {
                let wgt = self.weight[o * fan_in + i];
                let src = &x.data()[i * cells..(i + 1) * cells];
                for (p, s) in plane.iter_mut().zip(src) {
                    *p += wgt * s;
                }
            }
        }
        LatentGrid::new(input.z_t.shape(), out)
    }
}

/// Runs the Euler sampler from `σ_T` to 0.
pub fn denoise_loop(
    z_init: &LatentGrid,
    z_m: &LatentGrid,
    mask: &LatentMask,
    denoiser: &dyn Denoiser,
    schedule: &NoiseSchedule,
    text: Option<&[f32]>,
) -> Result<LatentGrid> {
    z_init.check_same_shape(z_m, "denoise inputs")?;
    if mask.shape() != z_init.grid_shape() {
        return Err(Error::ShapeMismatch(format!(
            "mask {:?} vs latent grid {:?}",
            mask.shape(),
            z_init.grid_shape()
        )));
    }
    let mut z = z_init.clone();
    for (step, w) in schedule.sigmas().windows(2).enumerate() {
        let v = denoiser.velocity(&DenoiserInput {
            z_t: &z,
            z_m,
            mask,
            step,
            sigma: w[0],
            text,
        })?;
        if v.shape() != z.shape() {
            return Err(Error::DenoiserShape {
                step,
                message: format!("expected {:?}, got {:?}", z.shape(), v.shape()),
            });
        }
        z = euler_step(&z, &v, w[0], w[1])?;
    }
    Ok(z)
}

/// Training objective `‖D(z_σ, zᵐ, m̂, σ) − (ε − z0)‖₂` at a single noise level.
pub fn flow_loss(
    denoiser: &dyn Denoiser,
    z0: &LatentGrid,
    eps: &LatentGrid,
    z_m: &LatentGrid,
    mask: &LatentMask,
    sigma: f32,
) -> Result<f64> {
    let z_t = add_noise(z0, sigma, eps)?;
    let target = velocity_target(z0, eps)?;
    let v = denoiser.velocity(&DenoiserInput {
        z_t: &z_t,
        z_m,
        mask,
        step: 0,
        sigma,
        text: None,
    })?;
    v.check_same_shape(&target, "loss")?;
    Ok(v.data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| ((*a as f64) - (*b as f64)).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// A grid of standard normal values.
pub fn gaussian_latent(shape: [usize; 4], seed: u64) -> Result<LatentGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    LatentGrid::new(
        shape,
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
    )
}
