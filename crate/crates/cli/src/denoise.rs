use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use serde::Serialize;
use stereokit::flow::{
    add_noise, denoise_loop, gaussian_latent, linear_schedule, Denoiser, OracleDenoiser,
    PointwiseLinear, ZeroDenoiser,
};
use stereokit::LatentMask;

use crate::args;
use crate::output::emit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DenoiserKind {
    Zero,
    Oracle,
    Pointwise,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Number of denoiser evaluations.
    #[arg(long, default_value_t = 1)]
    pub nfe: usize,

    #[arg(long, value_enum, default_value_t = DenoiserKind::Oracle)]
    pub denoiser: DenoiserKind,

    /// Latent shape C,T,H,W.
    #[arg(long, value_parser = args::shape4, default_value = "4,5,6,8")]
    pub shape: [usize; 4],

    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Report {
    denoiser: DenoiserKind,
    nfe: usize,
    shape: [usize; 4],
    seed: u64,
    sigmas: Vec<f32>,
    /// `‖ẑ0 − z0‖ / ‖z0‖`.
    relative_error: f64,
    /// `‖ẑ0 − z_init‖ / ‖z_init‖`.
    change_from_init: f64,
}

pub fn run(a: &DenoiseArgs, seed: u64) -> Result<()> {
    let schedule = linear_schedule(a.nfe)?;
    let z0 = gaussian_latent(a.shape, seed)?;
    let eps = gaussian_latent(a.shape, seed.wrapping_add(1))?;
    let z_m = gaussian_latent(a.shape, seed.wrapping_add(2))?;
    let [_, t, h, w] = a.shape;
    let mask = LatentMask::filled([t, h, w], true)?;
    let z_init = add_noise(&z0, schedule.initial_sigma(), &eps)?;

    let denoiser: Box<dyn Denoiser> = match a.denoiser {
        DenoiserKind::Zero => Box::new(ZeroDenoiser),
        DenoiserKind::Oracle => Box::new(OracleDenoiser::new(&z0, &eps)?),
        DenoiserKind::Pointwise => Box::new(PointwiseLinear::random(a.shape[0], seed)?),
    };
    let out = denoise_loop(&z_init, &z_m, &mask, denoiser.as_ref(), &schedule, None)?;
    emit(
        &Report {
            denoiser: a.denoiser,
            nfe: a.nfe,
            shape: a.shape,
            seed,
            sigmas: schedule.sigmas().to_vec(),
            relative_error: out.relative_error(&z0)?,
            change_from_init: out.relative_error(&z_init)?,
        },
        a.report.as_deref(),
    )
}
