use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hydroptic::fixtures::{synthetic_scene, write_toy_dataset};
use hydroptic::losses::FeatureStack;
use hydroptic::metrics::psnr;
use hydroptic::site::write_synthetic_site;
use hydroptic::ImagePlane;

fn hydroptic(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hydroptic"));
    cmd.args(args);
    for (flag, path) in paths {
        cmd.arg(flag).arg(path);
    }
    cmd.env_remove("HYDROPTIC_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Scratch {
    dir: tempfile::TempDir,
    site: PathBuf,
    clean: PathBuf,
}

fn scratch(frames: u64) -> Scratch {
    let dir = tempfile::tempdir().unwrap();
    let site = write_synthetic_site(&dir.path().join("site"), "cli").unwrap();
    let clean = dir.path().join("clean");
    for i in 0..frames {
        synthetic_scene(40, 30, 300 + i, 0.05)
            .unwrap()
            .save_png(&clean.join(format!("f{i}.png")))
            .unwrap();
    }
    Scratch { dir, site, clean }
}

impl Scratch {
    fn path(&self, p: &str) -> PathBuf {
        self.dir.path().join(p)
    }
}

#[test]
fn help_lists_defaults() {
    let o = hydroptic(&["restore", "--help"], &[]);
    let text = stdout(&o);
    for needle in ["[default: 0.1]", "[default: 13:255]", "[default: 400:750]", "HYDROPTIC_THREADS"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
    let text = stdout(&hydroptic(&["losscheck", "--help"], &[]));
    for needle in ["[default: 0.07]", "[default: 1]", "[default: 10]"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
}

#[test]
fn synthesize_then_restore_round_trip() {
    let s = scratch(3);
    let frames = s.path("frames");
    let o = hydroptic(
        &["synthesize", "--distance", "2.5", "--depth", "7"],
        &[("--site", &s.site), ("--input", &s.clean), ("--output", &frames)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(frames.join("f0.geometry.json").is_file());

    let out = s.path("out");
    let o = hydroptic(
        &["restore", "--no-rescale", "--keep-range", "0:255"],
        &[("--site", &s.site), ("--input", &frames), ("--output", &out)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for i in 0..3 {
        let name = format!("f{i}.png");
        let a = ImagePlane::load_png(&out.join(&name)).unwrap();
        let b = ImagePlane::load_png(&s.clean.join(&name)).unwrap();
        assert!(psnr(&a, &b).unwrap() >= 40.0);
        assert!(out.join(format!("f{i}.provenance.json")).is_file());
    }
}

#[test]
fn zero_attenuation_synthesize_is_a_copy() {
    let s = scratch(1);
    let out = s.path("copy");
    let o = hydroptic(
        &["synthesize", "--attenuation", "0,0,0", "--distance", "3", "--depth", "5"],
        &[("--input", &s.clean.join("f0.png")), ("--output", &out)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(out.join("f0.png")).unwrap(), std::fs::read(s.clean.join("f0.png")).unwrap());
}

#[test]
fn distance_sweep_loses_red() {
    let s = scratch(1);
    let mut reds = Vec::new();
    for d in ["1", "2", "3", "4", "5"] {
        let out = s.path(&format!("d{d}"));
        let o = hydroptic(
            &["synthesize", "--distance", d, "--depth", "8"],
            &[("--site", &s.site), ("--input", &s.clean), ("--output", &out)],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        reds.push(ImagePlane::load_png(&out.join("f0.png")).unwrap().channel_mean(0));
    }
    assert!(reds.windows(2).all(|w| w[1] < w[0]), "{reds:?}");
}

#[test]
fn explicit_defaults_match_implicit() {
    let s = scratch(1);
    let input = s.clean.join("f0.png");
    let a = s.path("a");
    let b = s.path("b");
    let base = ["restore", "--distance", "3", "--depth", "6"];
    assert!(hydroptic(&base, &[("--site", &s.site), ("--input", &input), ("--output", &a)]).status.success());
    let mut explicit = base.to_vec();
    explicit.extend(["--t0", "0.1", "--keep-range", "13:255", "--bounds", "400:750"]);
    assert!(hydroptic(&explicit, &[("--site", &s.site), ("--input", &input), ("--output", &b)]).status.success());
    assert_eq!(std::fs::read(a.join("f0.png")).unwrap(), std::fs::read(b.join("f0.png")).unwrap());
}

#[test]
fn panel_is_side_by_side() {
    let s = scratch(1);
    let out = s.path("out");
    let o = hydroptic(
        &["restore", "--panel", "--distance", "2", "--depth", "4"],
        &[("--site", &s.site), ("--input", &s.clean), ("--output", &out)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let panel = ImagePlane::load_png(&out.join("f0.panel.png")).unwrap();
    assert_eq!(panel.dims(), (80, 30));
}

#[test]
fn exit_codes() {
    let s = scratch(1);
    let out = s.path("out");
    // missing input
    let o = hydroptic(
        &["restore", "--distance", "2", "--depth", "4"],
        &[("--site", &s.site), ("--input", &s.path("nope")), ("--output", &out)],
    );
    assert_eq!(o.status.code(), Some(1));
    // no geometry
    let o = hydroptic(&["restore"], &[("--site", &s.site), ("--input", &s.clean), ("--output", &out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    // malformed flag
    let o = hydroptic(&["restore", "--keep-range", "200:100"], &[("--site", &s.site), ("--input", &s.clean), ("--output", &out)]);
    assert_eq!(o.status.code(), Some(2));
    // invalid t0
    let o = hydroptic(
        &["restore", "--t0", "0", "--distance", "2", "--depth", "4"],
        &[("--site", &s.site), ("--input", &s.clean), ("--output", &out)],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn evaluate_identical_and_unmatched() {
    let s = scratch(2);
    let csv = s.path("metrics.csv");
    let o = hydroptic(&["evaluate"], &[("--test", &s.clean), ("--reference", &s.clean), ("--output", &csv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "filename,mse,psnr,ssim,uicm,uism,uiconm,uiqm");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("f0.png,0.000000,100.000000,1.000000,"));
    assert!(lines[3].starts_with("MEAN,"));
    assert!(csv.with_extension("json").is_file());

    let other = s.path("other");
    std::fs::create_dir_all(&other).unwrap();
    std::fs::copy(s.clean.join("f0.png"), other.join("f0.png")).unwrap();
    let o = hydroptic(&["evaluate"], &[("--test", &s.clean), ("--reference", &other), ("--output", &csv)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("f1.png"));
}

#[test]
fn losscheck_random_and_fixtures() {
    let o = hydroptic(&["losscheck", "--random", "--seed", "7"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");

    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.json");
    let gx = dir.path().join("gx.json");
    std::fs::write(&x, FeatureStack::random_seeded(&[(4, 6), (3, 5)], 1).unwrap().to_json()).unwrap();
    std::fs::write(&gx, FeatureStack::random_seeded(&[(4, 6), (3, 5)], 2).unwrap().to_json()).unwrap();
    let o = hydroptic(&["losscheck"], &[("--features-x", &x), ("--features-gx", &gx)]);
    assert!(o.status.success(), "{}", stderr(&o));

    // layer 1 declares 3x5 but holds 14 values
    std::fs::write(
        &gx,
        r#"{"layers":[{"s":2,"c":2,"data":[1,0,0,1]},{"s":3,"c":5,"data":[1,2,3,4,5,6,7,8,9,10,11,12,13,14]}]}"#,
    )
    .unwrap();
    let o = hydroptic(&["losscheck"], &[("--features-x", &x), ("--features-gx", &gx)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("layer 1"), "{}", stderr(&o));

    std::fs::write(&gx, "{ not json").unwrap();
    let o = hydroptic(&["losscheck"], &[("--features-x", &x), ("--features-gx", &gx)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dataset_builds_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_dataset(dir.path(), 20, 4).unwrap();
    let root = dir.path();
    let run = || hydroptic(&["dataset", "--seed", "5", "--test-count", "4", "--threads", "2"], &[("--root", root)]);
    let o = run();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("20 records"));
    let read = |name: &str| std::fs::read(root.join("manifests").join(name)).unwrap();
    let first: Vec<Vec<u8>> = ["unpaired_train.json", "paired_train.json", "test.json"].map(read).to_vec();
    assert!(run().status.success());
    let second: Vec<Vec<u8>> = ["unpaired_train.json", "paired_train.json", "test.json"].map(read).to_vec();
    assert_eq!(first, second);

    let o = hydroptic(&["dataset", "--test-count", "50"], &[("--root", root)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("[split]"), "{}", stderr(&o));
}
