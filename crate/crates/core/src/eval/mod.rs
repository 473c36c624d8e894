//! Image metrics, synthetic scenes with analytic ground truth, and occlusion oracles.

mod metrics;
mod oracle;
mod scene;

pub use metrics::{
    clip_psnr, clip_report, frame_report, mask_iou, psnr, ssim, MetricReport, PSNR_CAP_DB,
};
pub use oracle::{brute_force_occlusion, dilate_rows, interval_occlusion, mask_runs};
pub use scene::{
    make_layered_scene, make_smooth_scene, random_layered_spec, Background, GroundTruth, Layer,
    LayeredScene, RandomSceneParams, SceneSpec, ValueNoise,
};
