mod args;
mod dataset;
mod denoise;
mod eval;
mod output;
mod plan;
mod synth;
mod warp;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "stereokit", version, about = "Stereo inpainting data toolkit")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Warp a clip to the other view and extract occlusion masks.
    Warp(warp::WarpArgs),
    /// Build training pairs from monocular clips.
    DualProject(dataset::DualProjectArgs),
    /// Plan sparse token selection from occlusion masks.
    Plan(plan::PlanArgs),
    /// Run the denoising loop with a built-in denoiser.
    DenoiseSim(denoise::DenoiseArgs),
    /// Compare two clips.
    Eval(eval::EvalArgs),
    /// Render a synthetic layered scene with ground truth.
    Synth(synth::SynthArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let internal = err
        .chain()
        .filter_map(|e| e.downcast_ref::<stereokit::Error>())
        .any(stereokit::Error::is_internal);
    if internal {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            log::warn!("could not size thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Warp(a) => warp::run(&a, cli.seed),
        Command::DualProject(a) => dataset::run(&a, cli.seed),
        Command::Plan(a) => plan::run(&a),
        Command::DenoiseSim(a) => denoise::run(&a, cli.seed),
        Command::Eval(a) => eval::run(&a),
        Command::Synth(a) => synth::run(&a, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
