use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use stereokit::media::{write_json, FRAMES_DIR};
use stereokit::pairs::{
    build_dataset, DatasetOptions, DisparitySamplerConfig, SampleStatus, DEFAULT_RESOLUTIONS,
};
use stereokit::warp::DEFAULT_DELTA;
use stereokit::{Sign, WarpConfig};

use crate::args;
use crate::output::emit;

pub const RUN_FILE: &str = "run.json";

#[derive(Debug, Args)]
pub struct DualProjectArgs {
    /// Clip directories, or directories whose subdirectories are clips.
    #[arg(long, num_args = 1.., required = true)]
    pub sources: Vec<PathBuf>,

    #[arg(long)]
    pub out: PathBuf,

    /// Range of the per-clip maximum disparity, as a fraction of width.
    #[arg(long, value_parser = args::f32_pair, default_value = "0.3,0.8")]
    pub disp_range: (f32, f32),

    /// Target resolutions, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = args::resolution, default_value = "1280x720,720x1280,768x768")]
    pub resolutions: Vec<(usize, usize)>,

    #[arg(long, default_value = "ltr")]
    pub sign: Sign,

    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f32,

    /// Also write the intermediate views of each sample.
    #[arg(long)]
    pub debug: bool,
}

#[derive(Debug, Serialize)]
struct RunMeta<'a> {
    command: &'static str,
    seed: u64,
    disp_range: (f32, f32),
    resolutions: &'a [(usize, usize)],
    warp: WarpConfig,
    sources: Vec<String>,
    debug: bool,
}

#[derive(Debug, Serialize)]
struct Summary {
    samples: usize,
    ok: usize,
    failed: usize,
}

fn is_clip(dir: &Path) -> bool {
    dir.join(FRAMES_DIR).is_dir()
}

/// Expands parent directories into their clip subdirectories.
fn expand_sources(sources: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for s in sources {
        if !s.is_dir() || is_clip(s) {
            out.push(s.clone());
            continue;
        }
        let mut children: Vec<PathBuf> = fs::read_dir(s)
            .with_context(|| format!("listing {}", s.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && is_clip(p))
            .collect();
        if children.is_empty() {
            // keep it so the manifest records why it failed
            out.push(s.clone());
        }
        children.sort();
        out.extend(children);
    }
    Ok(out)
}

fn source_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn run(a: &DualProjectArgs, seed: u64) -> Result<()> {
    let sources = expand_sources(&a.sources)?;
    let resolutions = if a.resolutions.is_empty() {
        DEFAULT_RESOLUTIONS.to_vec()
    } else {
        a.resolutions.clone()
    };
    let opts = DatasetOptions {
        sampler: DisparitySamplerConfig {
            range_lo: a.disp_range.0,
            range_hi: a.disp_range.1,
            seed,
        },
        resolutions,
        warp: WarpConfig::new(a.sign).with_delta(a.delta),
        debug: a.debug,
    };
    let records = build_dataset(&sources, &a.out, &opts)?;
    let mut names: Vec<String> = sources.iter().map(|p| source_name(p)).collect();
    names.sort();
    write_json(
        &RunMeta {
            command: "dual-project",
            seed,
            disp_range: a.disp_range,
            resolutions: &opts.resolutions,
            warp: opts.warp,
            sources: names,
            debug: a.debug,
        },
        &a.out.join(RUN_FILE),
    )?;
    let ok = records
        .iter()
        .filter(|r| r.status == SampleStatus::Ok)
        .count();
    let summary = Summary {
        samples: records.len(),
        ok,
        failed: records.len() - ok,
    };
    emit(&summary, None)?;
    if !records.is_empty() && ok == 0 {
        bail!(
            "every sample failed; see {}",
            a.out.join(stereokit::pairs::MANIFEST_FILE).display()
        );
    }
    Ok(())
}
