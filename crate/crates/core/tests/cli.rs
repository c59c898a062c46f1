use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mccm::estimators::decay_fit;
use mccm::io;
use serde_json::Value;

fn mccm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mccm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn analyze_lognormal() {
    let o = mccm(&["analyze", "--model", "lognormal", "--sigma2-over-logb", "0.25", "--b", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout_json(&o);
    assert!((r["d_f"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(r["regime"], "squared_sub");
}

#[test]
fn analyze_two_point_is_salem() {
    let o = mccm(&["analyze", "--model", "twopoint", "--x", "0.5", "--b", "4"]);
    let r = stdout_json(&o);
    assert_eq!(r["salem"], true);
    assert!((r["d_f"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((r["d_h"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn analyze_flags_degenerate_model() {
    let o = mccm(&["analyze", "--model", "twopoint", "--x", "0.1", "--b", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout_json(&o);
    assert_eq!(r["nondegenerate"], false);
    assert!(r["d_f"].is_null());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mccm(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mccm(&["analyze", "--model", "twopoint"]).status.code(), Some(1));
    assert_eq!(mccm(&["analyze", "--b", "1"]).status.code(), Some(1));
    assert_eq!(mccm(&["--help"]).status.code(), Some(0));
    assert_eq!(mccm(&["--version"]).status.code(), Some(0));
}

#[test]
fn depth_cap_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = mccm(&["simulate", "--depth", "40", "--b", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds the cap"));
}

#[test]
fn simulate_is_reproducible_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "4"), ("c", "1")] {
        let out = dir.path().join(name);
        let o = mccm(&[
            "simulate", "--depth", "12", "--reps", "100", "--seed", "7", "--kmax", "4096", "--threads", threads,
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let m = manifest(&out);
        assert_eq!(m["outputs"].as_array().unwrap().len(), 100);
        assert_eq!(m["config"]["seed"], 7);
        outputs.push(m["outputs"].clone());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn estimate_matches_in_process_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    for format in ["csv", "bin"] {
        let o = mccm(&[
            "simulate", "--model", "twopoint", "--x", "0.75", "--depth", "10", "--reps", "12", "--seed", "3",
            "--format", format, "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let mut files: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().map(|e| e == format).unwrap_or(false))
            .collect();
        files.sort();
        let spectra: Vec<_> = files.iter().map(|p| io::read_spectrum(p).unwrap()).collect();
        let fit = decay_fit(&spectra, 2).unwrap();

        let mut args = vec!["estimate".to_string(), "--input".to_string()];
        args.extend(files.iter().map(|p| p.to_str().unwrap().to_string()));
        let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        let o = mccm(&args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let r = stdout_json(&o);
        assert_eq!(r["decay"]["estimate"].as_f64().unwrap().to_bits(), fit.estimate.to_bits());
        assert_eq!(r["spectra"], 12);
        fs::remove_dir_all(&out).unwrap();
    }
}

#[test]
fn estimate_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = mccm(&["estimate", "--input", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    mccm(&["simulate", "--depth", "8", "--out", a.to_str().unwrap()]);
    mccm(&["simulate", "--depth", "9", "--out", b.to_str().unwrap()]);
    let o = mccm(&[
        "estimate",
        "--input",
        a.join("spectrum_000.csv").to_str().unwrap(),
        b.join("spectrum_000.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("depth"));
}

#[test]
fn sweep_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sw");
    let o = mccm(&["sweep", "--b", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lb = 3f64.ln();
    let mut rows = 0;
    let mut kink = None;
    let mut prev_slope = None;
    let mut prev: Option<(f64, f64)> = None;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let sigma: f64 = f[0].parse().unwrap();
        let d_f: f64 = f[2].parse().unwrap();
        let s = sigma * sigma / lb;
        let expect = if s <= 0.5 { 1.0 - s } else { (2f64.sqrt() - s.sqrt()).powi(2) };
        assert!((d_f - expect).abs() < 1e-12);
        assert!(f[3].is_empty() && f[4].is_empty());
        // Second differences of d_f in sigma jump at the kink.
        if let Some((ps, pd)) = prev {
            let slope = (d_f - pd) / (sigma - ps);
            if let Some(q) = prev_slope {
                if kink.is_none() && slope - q > 0.05 {
                    kink = Some(ps);
                }
            }
            prev_slope = Some(slope);
        }
        prev = Some((sigma, d_f));
        rows += 1;
    }
    assert_eq!(rows, 25);
    let step = (2.0 * lb).sqrt() / 26.0;
    let critical = (lb / 2.0).sqrt();
    assert!((kink.unwrap() - critical).abs() <= step, "kink at {kink:?}");
    let svg = fs::read_to_string(out.join("sweep.svg")).unwrap();
    assert!(svg.contains("<polyline"));
    assert_eq!(manifest(&out)["outputs"].as_array().unwrap().len(), 2);

    let o = mccm(&["sweep", "--points", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_precedence_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"model": "twopoint", "x": 0.5, "b": 2}"#).unwrap();
    let o = mccm(&["analyze", "--config", cfg.to_str().unwrap(), "--b", "4"]);
    let r = stdout_json(&o);
    assert!((r["d_h"].as_f64().unwrap() - 0.5).abs() < 1e-12, "flag b=4 must win over file b=2");

    fs::write(&cfg, "{\n  \"model\": \"twopoint\",\n  \"sigmaa\": 1\n}").unwrap();
    let o = mccm(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sigmaa") && err.contains("line 3"), "{err}");
}

#[test]
fn verify_exit_codes_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = mccm(&["verify", "--only", "1,2,9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.contains("PASS")).count(), 3);
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["outcomes"].as_array().unwrap().len(), 3);
    assert!(summary["outcomes"][0]["checks"][0]["value"].is_number());

    let o = mccm(&["verify", "--only", "9", "--tolerance-scale", "0"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(mccm(&["verify", "--only", "16"]).status.code(), Some(1));
}

#[test]
fn verify_digests_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "4"), ("c", "8"), ("d", "1")] {
        let out = dir.path().join(name);
        let o = mccm(&[
            "verify", "--scale", "quick", "--only", "4,5,7,14", "--threads", threads, "--out",
            out.to_str().unwrap(),
        ]);
        assert!(matches!(o.status.code(), Some(0) | Some(3)));
        digests.push(manifest(&out)["outputs"].clone());
    }
    assert!(digests.windows(2).all(|w| w[0] == w[1]));
}
