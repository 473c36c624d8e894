use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use stereokit::media::{write_clip, write_masks, BitDepth, ClipMeta};
use stereokit::{ClipBundle, DisparityMap, Frame, OcclusionMask, VideoClip};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stereokit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn stereokit")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Relative path → file bytes for every file under `root`.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn flat_clip(dir: &Path, n: usize, w: usize, h: usize, d: f32) {
    let frames = (0..n)
        .map(|i| {
            Frame::from_fn(w, h, |x, y| {
                [
                    ((x * 7 + y * 3 + i) % 17) as f32 / 16.0,
                    0.25,
                    y as f32 / h as f32,
                ]
            })
        })
        .collect();
    let bundle = ClipBundle::new(
        VideoClip::new(frames, 24.0).unwrap(),
        vec![DisparityMap::filled(w, h, d); n],
        None,
    )
    .unwrap();
    write_clip(&bundle, dir, &ClipMeta::default(), BitDepth::Eight).unwrap();
}

type ArgsFn<'a> = Box<dyn Fn(&Path) -> Vec<String> + 'a>;

#[test]
fn zero_disparity_warp_passes_frames_through() {
    let tmp = tempfile::tempdir().unwrap();
    let clip = tmp.path().join("clip");
    flat_clip(&clip, 3, 24, 16, 0.0);
    let out = tmp.path().join("out");
    let summary = json(&ok(&["warp", "--in", p(&clip), "--out", p(&out)]));
    assert_eq!(summary["masked_pixels"], 0);
    for i in 0..3 {
        let name = format!("{i:06}.png");
        assert_eq!(
            fs::read(clip.join("frames").join(&name)).unwrap(),
            fs::read(out.join("frames").join(&name)).unwrap()
        );
        let m = stereokit::media::load_mask(out.join("masks").join(&name)).unwrap();
        assert!(!m.any());
        assert!(out.join("jacobian").join(&name).is_file());
    }
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["warp"]["delta"], 1.5);
    assert_eq!(meta["sign"], -1);
}

#[test]
fn missing_disparity_dir_is_a_user_error() {
    let tmp = tempfile::tempdir().unwrap();
    let clip = tmp.path().join("clip");
    flat_clip(&clip, 2, 8, 8, 0.0);
    fs::remove_dir_all(clip.join("disparity")).unwrap();
    let out = run(&["warp", "--in", p(&clip), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("disparity"), "{err}");
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(run(&["warp", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        run(&["plan", "--masks", "x", "--factors", "4"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["warp", "--in", "a", "--out", "b", "--sign", "up"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn help_shows_defaults() {
    let out = ok(&["plan", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("80640,1536"), "{text}");
    assert!(text.contains("[default: 4,8]"));
    let out = ok(&["warp", "--help"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("[default: 1.5]"));
}

#[test]
fn synth_warp_eval_mask_agreement() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    ok(&[
        "--seed",
        "5",
        "synth",
        "--out",
        p(&scene),
        "--width",
        "128",
        "--height",
        "96",
        "--frames",
        "4",
    ]);
    let warped = tmp.path().join("w");
    ok(&["warp", "--in", p(&scene), "--out", p(&warped)]);
    let report = json(&ok(&[
        "eval",
        "--a",
        p(&warped),
        "--b",
        p(&scene.join("ground_truth")),
    ]));
    assert!(report["mask_iou"].as_f64().unwrap() >= 0.9, "{report}");
    let masked = json(&ok(&[
        "eval",
        "--a",
        p(&warped),
        "--b",
        p(&scene.join("ground_truth")),
        "--mask",
        p(&warped),
    ]));
    assert!(masked["masked_pixel_ratio"].as_f64().unwrap() > 0.0);
    assert!(masked["masked_psnr_db"].is_number());
}

#[test]
fn eval_identical_clips() {
    let tmp = tempfile::tempdir().unwrap();
    let clip = tmp.path().join("clip");
    flat_clip(&clip, 2, 16, 16, 0.0);
    let report = json(&ok(&["eval", "--a", p(&clip), "--b", p(&clip)]));
    assert_eq!(report["psnr_db"], 99.0);
    assert_eq!(report["ssim"], 1.0);
    let report_path = tmp.path().join("r/eval.json");
    ok(&[
        "eval",
        "--a",
        p(&clip),
        "--b",
        p(&clip),
        "--report",
        p(&report_path),
    ]);
    assert!(report_path.is_file());
}

#[test]
fn dual_project_three_resolutions_and_isolation() {
    let tmp = tempfile::tempdir().unwrap();
    let srcs = tmp.path().join("srcs");
    ok(&[
        "--seed",
        "1",
        "synth",
        "--out",
        p(&srcs.join("a")),
        "--width",
        "96",
        "--height",
        "64",
        "--frames",
        "2",
    ]);
    flat_clip(&srcs.join("b"), 2, 96, 64, 0.0);
    fs::write(srcs.join("b/disparity/000000.dsp"), b"junk").unwrap();
    let out = tmp.path().join("ds");
    let summary = json(&ok(&[
        "dual-project",
        "--sources",
        p(&srcs),
        "--out",
        p(&out),
        "--disp-range",
        "0.02,0.08",
        "--resolutions",
        "64x32,32x64,48x48",
    ]));
    assert_eq!(summary["samples"], 6);
    assert_eq!(summary["ok"], 3);
    let manifest = fs::read_to_string(out.join("manifest.jsonl")).unwrap();
    let lines: Vec<Value> = manifest
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[..3]
        .iter()
        .all(|l| l["status"] == "ok" && l["source_id"] == "a"));
    assert!(lines[3..]
        .iter()
        .all(|l| l["status"] == "failed" && l["error"].is_string()));
    assert!(out.join("a_48x48/masks/000001.png").is_file());
}

#[test]
fn dual_project_all_failed_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = run(&[
        "dual-project",
        "--sources",
        p(&empty),
        "--out",
        p(&tmp.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

fn mask_dir(dir: &Path, masks: &[OcclusionMask]) {
    write_masks(masks, dir).unwrap();
}

#[test]
fn plan_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    mask_dir(&empty, &vec![OcclusionMask::empty(64, 32); 9]);
    let r = json(&ok(&["plan", "--masks", p(&empty), "--dilate", "1"]));
    assert_eq!(r["retention_rate"], 0.0);
    assert!(r["est_speedup"].is_null());
    assert!(r["warnings"][0]
        .as_str()
        .unwrap()
        .contains("empty selection"));

    let some = tmp.path().join("some");
    let masks: Vec<_> = (0..9)
        .map(|i| OcclusionMask::from_fn(64, 32, |x, y| (20 + i..28 + i).contains(&x) && y > 8))
        .collect();
    mask_dir(&some, &masks);
    let r3 = json(&ok(&["plan", "--masks", p(&some), "--dilate", "3"]));
    let r5 = json(&ok(&["plan", "--masks", p(&some), "--dilate", "5"]));
    assert!(r3["retention_rate"].as_f64() < r5["retention_rate"].as_f64());
    let r = r3["retention_rate"].as_f64().unwrap();
    let expected = (12.0 * 1536.0 + 2.0 * 80640.0) / (12.0 * r * 1536.0 + 2.0 * r * r * 80640.0);
    assert!((r3["est_speedup"].as_f64().unwrap() - expected).abs() < 1e-9);

    let sweep = json(&ok(&["plan", "--masks", p(&some), "--sweep"]));
    assert_eq!(sweep["rows"].as_array().unwrap().len(), 9);
    assert_eq!(
        run(&["plan", "--masks", p(&some), "--factors", "4,7"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["plan", "--masks", p(&some), "--dilate", "4"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn denoise_sim_reports() {
    let r = json(&ok(&["denoise-sim", "--denoiser", "oracle", "--nfe", "1"]));
    assert!(r["relative_error"].as_f64().unwrap() <= 1e-5);
    assert_eq!(r["shape"], serde_json::json!([4, 5, 6, 8]));
    let z = json(&ok(&["denoise-sim", "--denoiser", "zero", "--nfe", "3"]));
    assert_eq!(z["change_from_init"], 0.0);
    let pw = json(&ok(&[
        "denoise-sim",
        "--denoiser",
        "pointwise",
        "--nfe",
        "2",
        "--shape",
        "2,3,4,4",
    ]));
    assert!(pw["relative_error"].as_f64().unwrap() > 0.0);
    assert_eq!(run(&["denoise-sim", "--nfe", "0"]).status.code(), Some(1));
}

#[test]
fn synth_from_spec_file() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"width":64,"height":16,"n_frames":2,"background":{"seed":3,"disparity":0},
            "layers":[{"rect":[20,0,24,16],"disparity":8,"seed":4}]}"#,
    )
    .unwrap();
    let out = tmp.path().join("s");
    ok(&["synth", "--spec", p(&spec), "--out", p(&out)]);
    let gt = stereokit::media::load_mask(out.join("ground_truth/masks/000000.png")).unwrap();
    assert_eq!(gt.count(), 8 * 16);
    fs::write(&spec, "{").unwrap();
    assert_eq!(
        run(&["synth", "--spec", p(&spec), "--out", p(&out)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn every_subcommand_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let scene = root.join("scene");
    ok(&[
        "--seed",
        "9",
        "synth",
        "--out",
        p(&scene),
        "--width",
        "128",
        "--height",
        "48",
        "--frames",
        "5",
    ]);

    let runs: Vec<(&str, ArgsFn)> = vec![
        (
            "synth",
            Box::new(|o: &Path| {
                [
                    "--seed",
                    "9",
                    "synth",
                    "--out",
                    p(o),
                    "--width",
                    "128",
                    "--height",
                    "48",
                    "--frames",
                    "5",
                ]
                .map(String::from)
                .to_vec()
            }),
        ),
        (
            "warp",
            Box::new(|o: &Path| {
                vec![
                    "warp".into(),
                    "--in".into(),
                    p(&scene).into(),
                    "--out".into(),
                    p(o).into(),
                ]
            }),
        ),
        (
            "dual-project",
            Box::new(|o: &Path| {
                [
                    "--seed",
                    "4",
                    "dual-project",
                    "--sources",
                    p(&scene),
                    "--out",
                    p(o),
                    "--disp-range",
                    "0.02,0.08",
                    "--resolutions",
                    "48x32,32x32",
                ]
                .map(String::from)
                .to_vec()
            }),
        ),
    ];
    for (name, args) in &runs {
        let (a, b) = (
            root.join(format!("{name}_a")),
            root.join(format!("{name}_b")),
        );
        let oa = ok(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
        let ob = ok(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(oa.stdout, ob.stdout, "{name} stdout");
        let (ta, tb) = (tree(&a), tree(&b));
        assert!(!ta.is_empty());
        assert_eq!(ta, tb, "{name} output tree");
    }

    let reports: Vec<Vec<String>> = vec![
        vec![
            "plan".into(),
            "--masks".into(),
            p(&root.join("warp_a")).into(),
            "--sweep".into(),
        ],
        vec![
            "--seed".into(),
            "2".into(),
            "denoise-sim".into(),
            "--denoiser".into(),
            "pointwise".into(),
            "--nfe".into(),
            "4".into(),
        ],
        vec![
            "eval".into(),
            "--a".into(),
            p(&root.join("warp_a")).into(),
            "--b".into(),
            p(&scene.join("ground_truth")).into(),
        ],
    ];
    for args in &reports {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (oa, ob) = (ok(&args), ok(&args));
        assert!(!oa.stdout.is_empty());
        assert_eq!(oa.stdout, ob.stdout, "{args:?}");
    }
}
