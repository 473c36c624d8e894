// Negated float comparisons below are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Parallax warping, occlusion-mask extraction, pseudo-stereo pair construction and
//! sparse token planning for stereo video inpainting.

pub mod error;
pub mod eval;
pub mod flow;
pub mod latent;
pub mod media;
pub mod pairs;
pub mod sparse;
pub mod warp;

pub use error::{Error, Result};
pub use latent::{LatentGrid, LatentMask, PackedTokens, TokenSelection};
pub use media::{ClipBundle, DisparityMap, Frame, OcclusionMask, VideoClip};
pub use pairs::{dual_project, DatasetSample, SampleMeta};
pub use sparse::{DownsampleFactors, PlanReport, SpeedupModelParams};
pub use warp::{gapw_warp, Sign, WarpConfig, WarpResult};
