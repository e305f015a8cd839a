use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wavedeblur_core::synthetic::{ridge_pattern, RidgeParams};
use wavedeblur_core::{
    apply_blur, binarize, load_image, save_image, BinarizeMethod, BitDepth, BlurKind, BlurSpec,
    GrayImage, WaveletPacket,
};

fn wavedeblur(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavedeblur"))
        .args(args)
        .env_remove("WAVEDEBLUR_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, img: &GrayImage) -> PathBuf {
        let path = self.path(name);
        save_image(img, &path, BitDepth::Eight).unwrap();
        path
    }

    /// A blurred ridge image, an unrelated sharp one, and the sharp source of
    /// the blurred one.
    fn triple(&self, size: usize) -> (PathBuf, PathBuf, PathBuf) {
        let truth = ridge_pattern(size, size, &RidgeParams::from_seed(11));
        let spec = BlurSpec::new(BlurKind::Gaussian, 3, 0.0, 0).unwrap();
        let blurry = apply_blur(&truth, &spec).unwrap();
        let style = ridge_pattern(size, size, &RidgeParams::from_seed(12));
        (
            self.write("blurry.png", &blurry),
            self.write("style.png", &style),
            self.write("truth.png", &truth),
        )
    }
}

#[test]
fn dwt_writes_64_band_container_deterministically() {
    let fx = Fixture::new();
    let (blurry, _, _) = fx.triple(256);
    let wpk = fx.path("b.wpk");
    ok(&wavedeblur(&["dwt", p(&blurry), "--level", "3", "-o", p(&wpk)]));
    let packet = WaveletPacket::read_wpk1(&wpk).unwrap();
    assert_eq!(packet.band_count(), 64);
    assert_eq!((packet.band_rows(), packet.band_cols()), (32, 32));
    let first = fs::read(&wpk).unwrap();
    assert_eq!(first.len(), 16 + 256 * 256 * 8);

    ok(&wavedeblur(&["dwt", p(&blurry), "--level", "3", "-o", p(&wpk)]));
    assert_eq!(fs::read(&wpk).unwrap(), first);
}

#[test]
fn dwt_rejects_level_nine() {
    let fx = Fixture::new();
    let (blurry, _, _) = fx.triple(256);
    let out = wavedeblur(&["dwt", p(&blurry), "--level", "9", "-o", p(&fx.path("x.wpk"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("level 9"), "{err}");
    assert!(!fx.path("x.wpk").exists());
}

#[test]
fn dwt_dumps_band_images() {
    let fx = Fixture::new();
    let (blurry, _, _) = fx.triple(64);
    let dir = fx.path("bands");
    ok(&wavedeblur(&[
        "dwt",
        p(&blurry),
        "--level",
        "1",
        "-o",
        p(&fx.path("b.wpk")),
        "--dump-bands",
        p(&dir),
    ]));
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["band_0_LL.png", "band_1_LH.png", "band_2_HL.png", "band_3_HH.png"]);
    let ll = load_image(dir.join("band_0_LL.png")).unwrap();
    assert_eq!(ll.dims(), (32, 32));
}

#[test]
fn idwt_round_trip_is_pixel_identical() {
    let fx = Fixture::new();
    let (_, style, _) = fx.triple(256);
    for level in ["3", "8"] {
        let wpk = fx.path("s.wpk");
        let back = fx.path("back.png");
        ok(&wavedeblur(&["dwt", p(&style), "--level", level, "-o", p(&wpk)]));
        ok(&wavedeblur(&["idwt", p(&wpk), "-o", p(&back)]));
        let a = load_image(&style).unwrap();
        let b = load_image(&back).unwrap();
        assert_eq!(b.dims(), (256, 256));
        assert_eq!(a, b, "level {level}");
        assert_eq!(fs::read(&style).unwrap(), fs::read(&back).unwrap());
    }
}

#[test]
fn idwt_reports_truncated_container() {
    let fx = Fixture::new();
    let (blurry, _, _) = fx.triple(64);
    let wpk = fx.path("b.wpk");
    ok(&wavedeblur(&["dwt", p(&blurry), "-o", p(&wpk)]));
    let bytes = fs::read(&wpk).unwrap();
    fs::write(&wpk, &bytes[..bytes.len() / 2]).unwrap();
    let out = wavedeblur(&["idwt", p(&wpk), "-o", p(&fx.path("x.png"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated container"));

    fs::write(&wpk, b"NOPE0000000000000000").unwrap();
    let out = wavedeblur(&["idwt", p(&wpk), "-o", p(&fx.path("x.png"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
}

#[test]
fn deblur_defaults_and_metrics() {
    let fx = Fixture::new();
    let (blurry, style, truth) = fx.triple(256);
    let out_path = fx.path("out.png");
    let out = wavedeblur(&["deblur", p(&blurry), p(&style), "-o", p(&out_path), "--truth", p(&truth)]);
    ok(&out);
    let report = String::from_utf8_lossy(&out.stdout);
    for key in ["l1_blurry", "psnr_blurry", "l1_truth", "psnr_truth", "sharpness_in", "sharpness_out"] {
        assert!(report.contains(key), "{report}");
    }

    // Same result as the library with level 3 and a binarized style.
    let expected = wavedeblur_core::deblur_idwt(
        &load_image(&blurry).unwrap(),
        &load_image(&style).unwrap(),
        &Default::default(),
    )
    .unwrap();
    let written = load_image(&out_path).unwrap();
    for (a, b) in written.data().iter().zip(expected.data()) {
        assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
    }
}

#[test]
fn deblur_level_eight_returns_binarized_style() {
    let fx = Fixture::new();
    let (blurry, style, _) = fx.triple(256);
    let out_path = fx.path("out.png");
    ok(&wavedeblur(&["deblur", p(&blurry), p(&style), "-o", p(&out_path), "--level", "8"]));
    let bin = binarize(&load_image(&style).unwrap(), BinarizeMethod::Otsu).unwrap();
    assert_eq!(load_image(&out_path).unwrap(), bin);
}

#[test]
fn deblur_sharp_self_style_is_identity() {
    let fx = Fixture::new();
    let (blurry, _, _) = fx.triple(256);
    let out_path = fx.path("out.png");
    ok(&wavedeblur(&[
        "deblur",
        p(&blurry),
        p(&blurry),
        "-o",
        p(&out_path),
        "--style-mode",
        "sharp",
        "--level",
        "3",
    ]));
    assert_eq!(load_image(&out_path).unwrap(), load_image(&blurry).unwrap());
}

#[test]
fn deblur_errors() {
    let fx = Fixture::new();
    let (blurry, _, _) = fx.triple(64);
    let small = fx.write("small.png", &GrayImage::filled(32, 32, 0.5).unwrap());
    let out = wavedeblur(&["deblur", p(&blurry), p(&small), "-o", p(&fx.path("o.png"))]);
    assert!(!out.status.success());
    let out = wavedeblur(&["deblur", p(&blurry), p(&fx.path("missing.png")), "-o", p(&fx.path("o.png"))]);
    assert!(!out.status.success());
    let out = wavedeblur(&["deblur", p(&blurry), p(&blurry), "-o", p(&fx.path("o.png")), "--level", "7"]);
    assert!(!out.status.success());
}

#[test]
fn config_file_and_flag_precedence() {
    let fx = Fixture::new();
    let (blurry, style, _) = fx.triple(64);
    let cfg = fx.path("run.toml");
    fs::write(&cfg, "level = 6\nstyle-mode = \"sharp\"\n").unwrap();

    let from_file = fx.path("file.png");
    ok(&wavedeblur(&["deblur", p(&blurry), p(&style), "-o", p(&from_file), "--config", p(&cfg)]));
    // Level 6 on 64x64 replaces the image with the (sharp) style.
    assert_eq!(load_image(&from_file).unwrap(), load_image(&style).unwrap());

    let overridden = fx.path("flag.png");
    ok(&wavedeblur(&[
        "deblur",
        p(&blurry),
        p(&style),
        "-o",
        p(&overridden),
        "--config",
        p(&cfg),
        "--level",
        "2",
    ]));
    assert_ne!(load_image(&overridden).unwrap(), load_image(&style).unwrap());

    fs::write(&cfg, "levle = 2\n").unwrap();
    let out = wavedeblur(&["deblur", p(&blurry), p(&style), "-o", p(&overridden), "--config", p(&cfg)]);
    assert!(!out.status.success());
}

#[test]
fn blur_is_deterministic_and_dc_preserving() {
    let fx = Fixture::new();
    let (_, style, _) = fx.triple(64);
    let a = fx.path("a.png");
    let b = fx.path("b.png");
    ok(&wavedeblur(&["blur", p(&style), "-o", p(&a), "--seed", "42"]));
    ok(&wavedeblur(&["blur", p(&style), "-o", p(&b), "--seed", "42"]));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let flat = fx.write("flat.png", &GrayImage::filled(64, 64, 100.0 / 255.0).unwrap());
    for spec in ["gaussian:6:0:0", "motion:4:33:1", "average:5:0:2"] {
        let out = fx.path("flat_out.png");
        ok(&wavedeblur(&["blur", p(&flat), "-o", p(&out), "--spec", spec]));
        assert_eq!(load_image(&out).unwrap(), load_image(&flat).unwrap());
    }

    let out = wavedeblur(&["blur", p(&style), "-o", p(&a), "--kind", "gaussian", "--sigma", "9"]);
    assert!(!out.status.success());
    let tiny = fx.write("tiny.png", &GrayImage::filled(16, 16, 0.5).unwrap());
    let out = wavedeblur(&["blur", p(&tiny), "-o", p(&a), "--kind", "gaussian", "--sigma", "3"]);
    assert!(!out.status.success());
}

#[test]
fn binarize_command() {
    let fx = Fixture::new();
    let (_, style, _) = fx.triple(64);
    for extra in [&["--method", "otsu"][..], &["--method", "adaptive-mean", "--window", "9"][..]] {
        let out = fx.path("bin.png");
        let mut args = vec!["binarize", p(&style), "-o", p(&out)];
        args.extend_from_slice(extra);
        ok(&wavedeblur(&args));
        assert!(load_image(&out).unwrap().data().iter().all(|&v| v == 0.0 || v == 1.0));
    }
    let out = wavedeblur(&["binarize", p(&style), "-o", p(&fx.path("x.png")), "--method", "adaptive-mean", "--window", "4"]);
    assert!(!out.status.success());
}

#[test]
fn stats_rows_for_triple() {
    let fx = Fixture::new();
    let (blurry, style, _) = fx.triple(256);
    let bin = fx.path("bin.png");
    ok(&wavedeblur(&["binarize", p(&style), "-o", p(&bin)]));
    let csv = fx.path("stats.csv");
    ok(&wavedeblur(&[
        "stats",
        &format!("blurry={}", p(&blurry)),
        p(&style),
        p(&bin),
        "--level",
        "3",
        "-o",
        p(&csv),
    ]));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "label,band_index,path,mean,std");
    assert_eq!(lines.len(), 1 + 3 * 64);
    assert!(lines[1].starts_with("blurry,0,LL.LL.LL,"));
    assert!(lines[65].starts_with("style,0,LL.LL.LL,"));
    assert!(lines[192].starts_with("bin,63,HH.HH.HH,"));
}

fn sweep_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn sweep_levels() {
    let fx = Fixture::new();
    let (blurry, style, _) = fx.triple(256);
    let csv = fx.path("sweep.csv");
    let images = fx.path("levels");
    ok(&wavedeblur(&["sweep", p(&blurry), p(&style), "-o", p(&csv), "--images", p(&images)]));
    let header = fs::read_to_string(&csv).unwrap().lines().next().unwrap().to_owned();
    assert_eq!(header, "level,l1_style,l1_blurry,detail_energy,output_path");
    let rows = sweep_rows(&csv);
    assert_eq!(rows.len(), 8);
    let l1_style: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(l1_style[7] < 1e-3);
    assert!(l1_style[0] > l1_style[7]);
    for r in &rows {
        assert!(Path::new(&r[4]).exists());
    }

    ok(&wavedeblur(&[
        "sweep",
        p(&style),
        p(&style),
        "-o",
        p(&csv),
        "--style-mode",
        "sharp",
    ]));
    for r in sweep_rows(&csv) {
        assert!(r[1].parse::<f64>().unwrap() < 1e-9, "{r:?}");
        assert_eq!(r[4], "");
    }
}

fn write_manifest(fx: &Fixture, name: &str, rows: &[String]) -> PathBuf {
    let path = fx.path(name);
    fs::write(&path, rows.join("\n") + "\n").unwrap();
    path
}

#[test]
fn batch_empty_manifest() {
    let fx = Fixture::new();
    let manifest = write_manifest(&fx, "empty.csv", &[]);
    let summary = fx.path("summary.csv");
    ok(&wavedeblur(&["batch", p(&manifest), "-s", p(&summary)]));
    assert_eq!(
        fs::read_to_string(&summary).unwrap(),
        "row,status,l1_blurry,psnr,sharpness_in,sharpness_out\n"
    );
}

#[test]
fn batch_is_thread_count_invariant_and_records_failures() {
    let fx = Fixture::new();
    fx.triple(64);
    let rows = |tag: &str| {
        vec![
            "blurry,style,output,blurspec".to_owned(),
            format!("blurry.png,style.png,{tag}_0.png"),
            format!("truth.png,style.png,{tag}_1.png,motion:3:45:7"),
            format!("truth.png,blurry.png,{tag}_2.png,auto"),
        ]
    };
    let m1 = write_manifest(&fx, "m1.csv", &rows("t1"));
    let m8 = write_manifest(&fx, "m8.csv", &rows("t8"));
    let s1 = fx.path("s1.csv");
    let s8 = fx.path("s8.csv");
    ok(&wavedeblur(&["batch", p(&m1), "-s", p(&s1), "--threads", "1"]));
    ok(&wavedeblur(&["batch", p(&m8), "-s", p(&s8), "--threads", "8"]));
    assert_eq!(fs::read(&s1).unwrap(), fs::read(&s8).unwrap());
    for i in 0..3 {
        assert_eq!(
            fs::read(fx.path(&format!("t1_{i}.png"))).unwrap(),
            fs::read(fx.path(&format!("t8_{i}.png"))).unwrap()
        );
    }
    let summary = fs::read_to_string(&s1).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.lines().skip(1).all(|l| l.split(',').nth(1) == Some("ok")));

    let mut broken = rows("b");
    broken.insert(2, "missing.png,style.png,never.png".to_owned());
    let mb = write_manifest(&fx, "mb.csv", &broken);
    let sb = fx.path("sb.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_wavedeblur"))
        .args(["batch", p(&mb), "-s", p(&sb)])
        .env("WAVEDEBLUR_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.png"));
    let lines: Vec<String> = fs::read_to_string(&sb).unwrap().lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[2], "1,failed,,,,");
    assert!(lines[1].starts_with("0,ok,"));
    assert!(lines[4].starts_with("3,ok,"));
    assert!(!fx.path("never.png").exists());
}

#[test]
fn batch_rejects_unreadable_manifest() {
    let fx = Fixture::new();
    let out = wavedeblur(&["batch", p(&fx.path("nope.csv")), "-s", p(&fx.path("s.csv"))]);
    assert_eq!(out.status.code(), Some(1));
}
