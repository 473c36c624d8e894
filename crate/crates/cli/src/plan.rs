use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::Serialize;
use stereokit::media::{load_masks_dir, MASKS_DIR};
use stereokit::sparse::{plan, sweep, PlanConfig, PlanReport, SWEEP_KERNELS, SWEEP_STRIDES};
use stereokit::DownsampleFactors;

use crate::args;
use crate::output::emit;

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Directory of mask PNGs, or a directory containing masks/.
    #[arg(long)]
    pub masks: PathBuf,

    /// Latent compression FT,FS.
    #[arg(long, value_parser = args::usize_pair, default_value = "4,8")]
    pub factors: (usize, usize),

    /// Odd dilation kernel size.
    #[arg(long, default_value_t = 3)]
    pub dilate: usize,

    /// Make every S-th latent frame dense.
    #[arg(long)]
    pub stride: Option<usize>,

    /// Dense token count and model width N,D for the speedup estimate.
    #[arg(long, value_parser = args::usize_pair, default_value = "80640,1536")]
    pub model_dims: (usize, usize),

    /// Report every kernel in {1,3,5} with every stride in {none,20,10}.
    #[arg(long)]
    pub sweep: bool,

    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Entry {
    #[serde(flatten)]
    report: PlanReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Sweep {
    factors: DownsampleFactors,
    model_dims: (usize, usize),
    rows: Vec<Entry>,
}

fn entry(report: PlanReport) -> Entry {
    let mut warnings = Vec::new();
    if report.token_count == 0 {
        warnings.push("empty selection: no tokens to process, speedup undefined".to_string());
        log::warn!("plan selected no tokens");
    }
    Entry { report, warnings }
}

pub fn run(a: &PlanArgs) -> Result<()> {
    let dir = if a.masks.join(MASKS_DIR).is_dir() {
        a.masks.join(MASKS_DIR)
    } else {
        a.masks.clone()
    };
    let masks = load_masks_dir(&dir)?;
    let cfg = PlanConfig {
        factors: DownsampleFactors {
            ft: a.factors.0,
            fs: a.factors.1,
        },
        dilate_k: a.dilate,
        stride: a.stride,
        model_tokens: a.model_dims.0,
        model_width: a.model_dims.1,
    };
    if a.sweep {
        let rows = sweep(&masks, &cfg, &SWEEP_KERNELS, &SWEEP_STRIDES)?;
        return emit(
            &Sweep {
                factors: cfg.factors,
                model_dims: a.model_dims,
                rows: rows.into_iter().map(entry).collect(),
            },
            a.report.as_deref(),
        );
    }
    emit(&entry(plan(&masks, &cfg)?), a.report.as_deref())
}
