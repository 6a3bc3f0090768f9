use std::path::Path;
use std::process::{Command, Output};

fn oilu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oilu"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn facets_prints_four_lines_in_turn_order() {
    let o = oilu(&["facets", "4670"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines, ["4670", "6890", "8230", "2450"]);
    assert_eq!(stdout(&oilu(&["facets", "0"])), "0\n0\n0\n0\n");
    let bad = oilu(&["facets", "12x"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(bad.stdout.is_empty());
}

#[test]
fn encode_writes_image_sidecar_and_facets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.png");
    let o = oilu(&["encode", "4670", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let mut set: Vec<String> = v["facets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect();
    set.sort();
    assert_eq!(set, ["2450", "4670", "6890", "8230"]);
    assert!(out.exists());
    let geom: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.geometry.json")).unwrap())
            .unwrap();
    assert_eq!(geom["border_half_width_px"], 224);
    assert_eq!(
        geom["ring_half_widths_px"],
        serde_json::json!([176, 128, 80, 32])
    );

    let d = oilu(&["decode", out.to_str().unwrap()]);
    assert_eq!(d.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(stdout(&d).trim()).unwrap();
    assert_eq!(r["value"], "4670");
}

#[test]
fn encode_zero_and_overflow() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.pgm");
    assert_eq!(
        oilu(&["encode", "0", "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let d = oilu(&["decode", out.to_str().unwrap()]);
    assert!(stdout(&d).contains("\"value\":\"0\""));

    let over = oilu(&[
        "encode",
        "123456789",
        "--out",
        dir.path().join("x.png").to_str().unwrap(),
    ]);
    assert_eq!(over.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&over.stderr).contains("overflow"));
    let fit = oilu(&[
        "encode",
        "123456",
        "--fit",
        "--out",
        dir.path().join("f.png").to_str().unwrap(),
    ]);
    assert_eq!(fit.status.code(), Some(0));
}

#[test]
fn decode_failures_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let blank = dir.path().join("blank.png");
    image::GrayImage::from_pixel(128, 128, image::Luma([255]))
        .save(&blank)
        .unwrap();
    let o = oilu(&["decode", blank.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["error"], "NoMarkerFound");

    let missing = oilu(&["decode", dir.path().join("nope.png").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(3));
    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not an image").unwrap();
    assert_eq!(
        oilu(&["decode", junk.to_str().unwrap()]).status.code(),
        Some(3)
    );
    assert_eq!(
        oilu(&["decode", blank.to_str().unwrap(), "--beta", "0.95"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(oilu(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn debug_dir_has_fixed_stage_names() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("m.png");
    oilu(&["encode", "93", "--out", img.to_str().unwrap()]);
    let dbg = dir.path().join("dbg");
    let o = oilu(&[
        "decode",
        img.to_str().unwrap(),
        "--rectify",
        "--debug-dir",
        dbg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut names: Vec<String> = std::fs::read_dir(&dbg)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "01_gray.png",
            "02_binary.png",
            "03_clean.png",
            "04_quad.png",
            "04b_rectified.png",
            "05_depth.png",
            "06_labels.png"
        ]
    );
}

#[test]
fn eval_default_config_header_and_determinism() {
    let o = oilu(&["eval", "--trials", "1", "--no-timing"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(
        text.lines().next().unwrap(),
        "kind,level,trials,successes,success_rate,mean_ms,p95_ms,fail_no_marker,fail_no_rings,fail_undecodable,fail_ambiguous"
    );

    let dir = tempfile::tempdir().unwrap();
    let cfg = config("zero_levels.json");
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = oilu(&[
            "eval",
            "--config",
            &cfg,
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
            "--no-timing",
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
        std::fs::read_to_string(path).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let mut rows = csv::Reader::from_reader(a.as_bytes());
    let mut n = 0;
    for row in rows.records() {
        assert_eq!(&row.unwrap()[4], "1.0");
        n += 1;
    }
    assert_eq!(n, 5);
}

#[test]
fn eval_writes_plots_and_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let plots = dir.path().join("plots");
    let o = oilu(&[
        "eval",
        "--config",
        &config("zero_levels.json"),
        "--trials",
        "2",
        "--plots",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(plots.join("success_tilt.png").exists());

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"trials\": 0, \"sweeps\": []}").unwrap();
    assert_eq!(
        oilu(&["eval", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn selftest_passes_and_names_injected_fault() {
    let o = oilu(&["selftest"]);
    assert_eq!(o.status.code(), Some(0));
    let reports: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let suites: Vec<&str> = reports
        .iter()
        .map(|r| r["suite"].as_str().unwrap())
        .collect();
    assert_eq!(suites, ["codec", "edt", "otsu", "roundtrip"]);
    assert!(reports
        .iter()
        .all(|r| r["passed"] == true && r["ms"].as_f64().is_some()));

    let f = oilu(&["selftest", "--inject-fault", "codec"]);
    assert_eq!(f.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&f.stderr).contains("codec"));
}
