use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_ladder");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ladder(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = ladder(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Small 4:2:0 Y4M with a moving gradient.
fn write_y4m(path: &Path, w: usize, h: usize, frames: usize, phase: usize) {
    let mut buf = format!("YUV4MPEG2 W{w} H{h} F30:1 Ip A1:1 C420jpeg\n").into_bytes();
    for f in 0..frames {
        buf.extend_from_slice(b"FRAME\n");
        for y in 0..h {
            for x in 0..w {
                buf.push(((x * 7 + y * 3 + (f + phase) * 11) % 256) as u8);
            }
        }
        buf.extend(std::iter::repeat_n(128u8, 2 * (w / 2) * (h / 2)));
    }
    fs::write(path, buf).unwrap();
}

fn write_ladder(path: &Path, dims: &[(u32, u32)], crossovers: &[f64]) {
    let res: Vec<String> = dims
        .iter()
        .enumerate()
        .map(|(i, (w, h))| {
            format!(r#"{{"index":{},"width":{w},"height":{h},"label":"{h}p"}}"#, i + 1)
        })
        .collect();
    let c: Vec<String> = crossovers.iter().map(|x| x.to_string()).collect();
    fs::write(
        path,
        format!(r#"{{"resolutions":[{}],"crossover_log2_bps":[{}]}}"#, res.join(","), c.join(",")),
    )
    .unwrap();
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().skip(1).collect()
}

#[test]
fn extract_features_single_file() {
    let dir = TempDir::new().unwrap();
    write_y4m(&dir.path().join("a.y4m"), 32, 32, 3, 0);
    let out = ok(dir.path(), &["extract-features", "a.y4m"]);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("a,"));
    assert_eq!(rows[0].split(',').count(), 10);
}

#[test]
fn extract_features_directory_is_sorted() {
    let dir = TempDir::new().unwrap();
    let clips = dir.path().join("clips");
    fs::create_dir(&clips).unwrap();
    for (i, name) in ["c", "a", "b"].iter().enumerate() {
        write_y4m(&clips.join(format!("{name}.y4m")), 32, 16, 3, i);
    }
    fs::write(clips.join("notes.txt"), "ignored").unwrap();
    ok(dir.path(), &["extract-features", "clips", "-o", "f.csv"]);
    let csv = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let ids: Vec<&str> = data_rows(&csv).iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
}

#[test]
fn extract_features_keep_going_writes_valid_rows() {
    let dir = TempDir::new().unwrap();
    let clips = dir.path().join("clips");
    fs::create_dir(&clips).unwrap();
    write_y4m(&clips.join("good.y4m"), 32, 32, 3, 0);
    fs::write(clips.join("bad.y4m"), "YUV4MPEG2 W32 H32\nFRAME\nshort").unwrap();

    let strict = ladder(dir.path(), &["extract-features", "clips", "-o", "strict.csv"]);
    assert_eq!(code(&strict), 2);
    assert!(!dir.path().join("strict.csv").exists());

    let out = ladder(dir.path(), &["extract-features", "clips", "-o", "f.csv", "--keep-going"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.y4m"));
    let csv = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("good,"));
}

#[test]
fn extract_features_raw_yuv_needs_geometry() {
    let dir = TempDir::new().unwrap();
    let frame = 16 * 16 * 3 / 2;
    let bytes: Vec<u8> = (0..2 * frame).map(|i| (i * 13 % 251) as u8).collect();
    fs::write(dir.path().join("r.yuv"), &bytes).unwrap();
    assert_eq!(code(&ladder(dir.path(), &["extract-features", "r.yuv"])), 2);
    let out = ok(dir.path(), &["extract-features", "r.yuv", "--width", "16", "--height", "16"]);
    assert_eq!(data_rows(&out).len(), 1);
}

#[test]
fn build_gt_reproduces_reference_crossovers() {
    let dir = TempDir::new().unwrap();
    let fx = fixture("hull_reference.csv");
    ok(dir.path(), &["build-gt", fx.to_str().unwrap(), "--out-dir", "gt"]);
    let text = fs::read_to_string(dir.path().join("gt/ref.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let got: Vec<f64> = v["crossover_log2_bps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let step = 10.0 / 99.0;
    for (g, want) in got.iter().zip([7.641546029, 8.662953148, 10.29739492]) {
        assert!((g - want).abs() <= step, "{got:?}");
    }
    let manifest = fs::read_to_string(dir.path().join("gt/manifest.csv")).unwrap();
    assert_eq!(manifest, "chunk_id,ladder\nref,ref.json\n");
}

#[test]
fn build_gt_rejects_missing_resolution_without_writing() {
    let dir = TempDir::new().unwrap();
    let full = fs::read_to_string(fixture("hull_reference.csv")).unwrap();
    let cut: String = full.lines().filter(|l| !l.contains(",3840,")).map(|l| format!("{l}\n")).collect();
    fs::write(dir.path().join("rq.csv"), cut).unwrap();
    let out = ladder(dir.path(), &["build-gt", "rq.csv", "--out-dir", "gt"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ref") && err.contains("2160p"), "{err}");
    assert!(!dir.path().join("gt").exists());
}

#[test]
fn written_ladder_survives_aggregation_unchanged() {
    let dir = TempDir::new().unwrap();
    let fx = fixture("hull_reference.csv");
    let fx = fx.to_str().unwrap();
    ok(dir.path(), &["build-gt", fx, "--out-dir", "gt"]);
    let out = ok(
        dir.path(),
        &[
            "aggregate",
            "--classifier-ladder",
            "gt/ref.json",
            "--regressor-ladder",
            "gt/ref.json",
            "--backend",
            "table",
            "--rq-csv",
            fx,
            "--out",
            "final.json",
            "--report",
            "report.json",
        ],
    );
    assert!(out.contains("0 disagreements, 0 encodes"), "{out}");
    let a: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("gt/ref.json")).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("final.json")).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn train_rejects_single_class_labels() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["synth", "--out-dir", "s", "--sequences", "6"]);
    let uhd = [(960, 540), (1280, 720), (1920, 1080), (3840, 2160)];
    write_ladder(&dir.path().join("flat.json"), &uhd, &[16.0, 16.0, 16.0]);
    let mut manifest = String::from("chunk_id,ladder\n");
    for i in 0..6 {
        manifest.push_str(&format!("syn{i:03},flat.json\n"));
    }
    fs::write(dir.path().join("manifest.csv"), manifest).unwrap();
    let out = ladder(
        dir.path(),
        &["train", "--features", "s/features.csv", "--manifest", "manifest.csv", "--out-dir", "m"],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("single class"));
}

fn trained(dir: &Path) {
    ok(dir, &["synth", "--out-dir", "s", "--sequences", "12"]);
    ok(dir, &["build-gt", "s/rq.csv", "--out-dir", "gt"]);
    ok(
        dir,
        &["train", "--features", "s/features.csv", "--manifest", "gt/manifest.csv", "--out-dir", "m", "--gbt-rounds", "20"],
    );
}

#[test]
fn predict_rejects_unknown_model_version() {
    let dir = TempDir::new().unwrap();
    trained(dir.path());
    let args = [
        "predict",
        "--classifier",
        "m/classifier.json",
        "--regressor",
        "m/regressor.json",
        "--features",
        "s/features.csv",
        "--out-dir",
        "p",
    ];
    ok(dir.path(), &args);
    assert!(dir.path().join("p/syn000.classifier.json").exists());
    assert!(dir.path().join("p/syn011.regressor.json").exists());

    let path = dir.path().join("m/classifier.json");
    let text = fs::read_to_string(&path).unwrap().replacen("\"version\":1", "\"version\":7", 1);
    fs::write(&path, text).unwrap();
    let out = ladder(dir.path(), &args);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("version 7"));
}

#[test]
fn seeded_pipeline_is_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    trained(a.path());
    trained(b.path());
    for f in ["s/features.csv", "s/rq.csv", "gt/syn003.json", "m/classifier.json", "m/regressor.json", "m/masks.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn failing_encoder_exits_3_with_partial_report() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_y4m(&d.join("src.y4m"), 32, 32, 2, 0);
    let dims = [(16, 16), (32, 32)];
    write_ladder(&d.join("c.json"), &dims, &[8.0]);
    write_ladder(&d.join("r.json"), &dims, &[12.0]);
    let out = ladder(
        d,
        &[
            "--resolutions",
            "16x16,32x32",
            "--encoder-template",
            "false {input} {width} {height} {bitrate_bps} {output}",
            "--encoder-workdir",
            "work",
            "aggregate",
            "--classifier-ladder",
            "c.json",
            "--regressor-ladder",
            "r.json",
            "--backend",
            "external",
            "--source",
            "src.y4m",
            "--fast",
            "--out",
            "final.json",
            "--report",
            "partial.json",
        ],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!d.join("final.json").exists());
    let partial: serde_json::Value = serde_json::from_slice(&fs::read(d.join("partial.json")).unwrap()).unwrap();
    assert!(partial["points"].is_array());
    assert!(partial["total_encodes"].is_u64());
}

#[test]
fn external_backend_without_template_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_y4m(&d.join("src.y4m"), 32, 32, 2, 0);
    write_ladder(&d.join("c.json"), &[(16, 16), (32, 32)], &[8.0]);
    let out = ladder(
        d,
        &[
            "aggregate",
            "--classifier-ladder",
            "c.json",
            "--regressor-ladder",
            "c.json",
            "--backend",
            "external",
            "--source",
            "src.y4m",
            "--out",
            "o.json",
            "--report",
            "r.json",
        ],
    );
    assert_eq!(code(&out), 2);
}

fn curve_csv(path: &Path, scale: f64) {
    let mut s = String::from("bitrate_bps,quality_db\n");
    for (r, q) in [(1000.0, 30.0), (2000.0, 34.0), (4000.0, 37.0), (8000.0, 39.0)] {
        s.push_str(&format!("{},{q}\n", r * scale));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn bdbr_reports_percent_and_rejects_disjoint_curves() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    curve_csv(&d.join("ref.csv"), 1.0);
    curve_csv(&d.join("double.csv"), 2.0);
    assert_eq!(ok(d, &["bdbr", "ref.csv", "ref.csv"]).trim(), "0.00");
    assert_eq!(ok(d, &["bdbr", "ref.csv", "double.csv"]).trim(), "100.00");

    fs::write(d.join("far.csv"), "bitrate_bps,quality_db\n100,50\n200,55\n").unwrap();
    assert_eq!(code(&ladder(d, &["bdbr", "ref.csv", "far.csv"])), 2);
}

#[test]
fn config_file_and_flags_resolve_like_flags_alone() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(
        d.join("ladder.toml"),
        "schema_version = 1\nseed = 11\nresolutions = [[640, 360], [1280, 720]]\n\n[gbt]\nrounds = 40\n",
    )
    .unwrap();
    let mixed = ok(d, &["--config", "ladder.toml", "--gbt-rounds", "25", "config"]);
    let flags = ok(d, &["--seed", "11", "--resolutions", "640x360,1280x720", "--gbt-rounds", "25", "config"]);
    assert_eq!(mixed, flags);
    assert!(mixed.contains("seed = 11"));

    fs::write(d.join("future.toml"), "schema_version = 2\n").unwrap();
    assert_eq!(code(&ladder(d, &["--config", "future.toml", "config"])), 2);
    fs::write(d.join("typo.toml"), "sead = 3\n").unwrap();
    assert_eq!(code(&ladder(d, &["--config", "typo.toml", "config"])), 2);
}
