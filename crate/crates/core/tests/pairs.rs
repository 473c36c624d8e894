use std::fs;
use std::path::PathBuf;

use stereokit::eval::{
    clip_psnr, make_layered_scene, make_smooth_scene, mask_iou, mask_runs, Background, Layer,
    SceneSpec,
};
use stereokit::media::{write_clip, BitDepth, ClipMeta};
use stereokit::pairs::*;
use stereokit::{ClipBundle, Sign, WarpConfig};

fn strip_scene(width: usize, layers: &[(f32, f32, f32)]) -> SceneSpec {
    SceneSpec {
        width,
        height: 12,
        n_frames: 2,
        sign: Sign::Negative,
        texture_cell: 8.0,
        frame_rate: 24.0,
        background: Background {
            seed: 11,
            disparity: 0.0,
        },
        layers: layers
            .iter()
            .map(|&(x, w, d)| Layer {
                rect: [x, 0.0, w, 12.0],
                velocity: [1.0, 0.0],
                disparity: d,
                seed: d as u64,
            })
            .collect(),
    }
}

#[test]
fn layered_mask_matches_input_view_ground_truth() {
    let spec = strip_scene(128, &[(40.0, 32.0, 8.0)]);
    let scene = make_layered_scene(&spec).unwrap();
    let frac = 8.0 / 128.0;
    let p = dual_project(&scene.bundle, frac, &WarpConfig::new(spec.sign)).unwrap();
    for (m, gt) in p
        .sample
        .masks
        .iter()
        .zip(&scene.ground_truth.input_occlusion)
    {
        let runs = mask_runs(m);
        assert_eq!(runs.len(), 12, "one band per row: {runs:?}");
        for (row, start, len) in runs {
            let gt_run = mask_runs(gt).into_iter().find(|r| r.0 == row).unwrap();
            assert!(len.abs_diff(8) <= 1, "band width {len}");
            assert!(start.abs_diff(gt_run.1) <= 1);
        }
        assert!(mask_iou(m, gt).unwrap() > 0.85);
    }
}

#[test]
fn smooth_scene_round_trip_psnr() {
    let bundle = make_smooth_scene(128, 64, 3, 6.0, 4).unwrap();
    let p = dual_project(&bundle, 6.0 / 128.0, &WarpConfig::default()).unwrap();
    let visible: Vec<_> = p.sample.masks.iter().map(|m| m.inverted()).collect();
    let db = clip_psnr(bundle.video(), &p.diagnostics.reconstructed, Some(&visible)).unwrap();
    assert!(db >= 40.0, "{db} dB");
}

#[test]
fn mask_grows_with_disparity_fraction() {
    let spec = strip_scene(160, &[(30.0, 40.0, 6.0), (90.0, 40.0, 10.0)]);
    let scene = make_layered_scene(&spec).unwrap();
    let counts: Vec<usize> = [0.02, 0.05, 0.07, 0.08]
        .iter()
        .map(|&f| {
            let p = dual_project(&scene.bundle, f, &WarpConfig::default()).unwrap();
            p.sample.masks.iter().map(|m| m.count()).sum()
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    assert!(counts[3] > counts[0]);
}

fn write_source(root: &std::path::Path, name: &str, bundle: &ClipBundle) -> PathBuf {
    let dir = root.join(name);
    write_clip(bundle, &dir, &ClipMeta::default(), BitDepth::Sixteen).unwrap();
    dir
}

fn small_opts(resolutions: Vec<(usize, usize)>) -> DatasetOptions {
    DatasetOptions {
        sampler: DisparitySamplerConfig {
            range_lo: 0.02,
            range_hi: 0.08,
            seed: 3,
        },
        resolutions,
        ..Default::default()
    }
}

#[test]
fn one_clip_three_resolutions() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = make_layered_scene(&strip_scene(96, &[(30.0, 30.0, 6.0)])).unwrap();
    let src = write_source(tmp.path(), "clip", &scene.bundle);
    let out = tmp.path().join("out");
    let records = build_dataset(
        &[src],
        &out,
        &small_opts(vec![(64, 36), (36, 64), (48, 48)]),
    )
    .unwrap();
    assert_eq!(records.len(), 3);
    for r in &records {
        assert_eq!(r.status, SampleStatus::Ok);
        let sample = read_sample(out.join(r.sample_dir.as_ref().unwrap())).unwrap();
        assert_eq!(sample.video.dims(), r.resolution);
        assert_eq!(sample.meta.resolution, r.resolution);
        assert_eq!(sample.masks.len(), 2);
    }
    assert_eq!(read_manifest(out.join(MANIFEST_FILE)).unwrap(), records);
}

#[test]
fn corrupt_clip_is_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = make_layered_scene(&strip_scene(96, &[(30.0, 30.0, 6.0)])).unwrap();
    let good = write_source(tmp.path(), "a_good", &scene.bundle);
    let bad = write_source(tmp.path(), "b_bad", &scene.bundle);
    fs::write(bad.join("disparity/000001.dsp"), b"DSP1\x01").unwrap();
    let out = tmp.path().join("out");
    let records = build_dataset(&[bad, good], &out, &small_opts(vec![(48, 12)])).unwrap();
    assert_eq!(records[0].source_id, "a_good");
    assert_eq!(records[0].status, SampleStatus::Ok);
    assert_eq!(records[1].status, SampleStatus::Failed);
    assert!(records[1].error.is_some());
    assert!(out
        .join(records[0].sample_dir.as_ref().unwrap())
        .join("meta.json")
        .is_file());
}

#[test]
fn dataset_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = make_layered_scene(&strip_scene(96, &[(30.0, 30.0, 6.0)])).unwrap();
    let src = write_source(tmp.path(), "clip", &scene.bundle);
    let opts = small_opts(vec![(48, 12), (64, 16)]);
    let a = build_dataset(std::slice::from_ref(&src), tmp.path().join("a"), &opts).unwrap();
    let b = build_dataset(std::slice::from_ref(&src), tmp.path().join("b"), &opts).unwrap();
    assert_eq!(a, b);
    for r in &a {
        let dir = r.sample_dir.as_ref().unwrap();
        for sub in ["masks/000000.png", "masks/000001.png", "meta.json"] {
            let fa = fs::read(tmp.path().join("a").join(dir).join(sub)).unwrap();
            let fb = fs::read(tmp.path().join("b").join(dir).join(sub)).unwrap();
            assert_eq!(fa, fb, "{sub}");
        }
    }
    assert_ne!(a[0].max_disp_frac, a[1].max_disp_frac);
}

#[test]
fn debug_outputs_written_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = make_layered_scene(&strip_scene(96, &[(30.0, 30.0, 6.0)])).unwrap();
    let src = write_source(tmp.path(), "clip", &scene.bundle);
    let opts = DatasetOptions {
        debug: true,
        ..small_opts(vec![(48, 12)])
    };
    let r = build_dataset(&[src], tmp.path().join("o"), &opts).unwrap();
    let dir = tmp
        .path()
        .join("o")
        .join(r[0].sample_dir.as_ref().unwrap())
        .join(DEBUG_DIR);
    assert!(dir.join("reconstructed/frames/000000.png").is_file());
    assert!(dir.join("view2/disparity/000001.dsp").is_file());
}
