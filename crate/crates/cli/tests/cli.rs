use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scatterkit::io::write_pgm;
use scatterkit::synth;

fn scatterkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatterkit"))
        .current_dir(dir)
        .env_remove("SCATTERKIT_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = scatterkit(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    scatterkit(dir, args).status.code().expect("exit code")
}

fn square(dir: &Path) -> &'static str {
    write_pgm(&dir.join("square.pgm"), &synth::centered_square(32, 10)).unwrap();
    "square.pgm"
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn no_arguments_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = scatterkit(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn exit_codes_follow_error_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["scatter", "--input", "missing.pgm", "--out", "o"]), 3);
    assert_eq!(code(d, &["bank", "--scales", "6", "--size", "16"]), 4);
    assert_eq!(code(d, &["bank", "--dims", "3"]), 2);
    assert_eq!(code(d, &["moments", "--model", "ar1:1.5", "--size", "16", "--out", "m.csv"]), 2);
    assert_eq!(code(d, &["--threads", "0", "bank"]), 2);
    let img = square(d);
    assert_eq!(code(d, &["stability", "--input", img, "--rep", "wavelet", "--out", "s.csv"]), 2);
    assert_eq!(code(d, &["scatter", "--input", img, "--oversampling", "lots", "--out", "o"]), 2);
}

#[test]
fn bank_reports_frame_bounds_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = ok(d, &["bank", "--check", "--scales", "3", "--bands", "6", "--size", "32", "--export", "bank"]);
    assert!(text.contains("frame bounds A ="));
    assert!(d.join("bank/manifest.json").exists());
    let m = manifest(&d.join("bank/run.json"));
    assert!(m["summary"]["frame_lower"].as_f64().unwrap() >= 0.5);
    let one = ok(d, &["bank", "--dims", "1", "--size", "256", "--scales", "5", "--bands", "2"]);
    assert!(one.contains("frame bounds"));
}

#[test]
fn scatter_writes_features_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let img = square(d);
    let text = ok(d, &["scatter", "--input", img, "--scales", "3", "--bands", "4", "--order", "2", "--out", "sc"]);
    assert!(text.starts_with("61 paths"));
    let csv = fs::read_to_string(d.join("sc/features.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("m2_j1k0_j2k0"));
    let m = manifest(&d.join("sc/run.json"));
    assert_eq!(m["config"]["subcommand"], "scatter");
    assert_eq!(m["config"]["scales"], 3);
    assert_eq!(m["summary"]["paths"], 61);
    assert!(m.get("threads").is_none() && m["config"].get("threads").is_none());
}

#[test]
fn reconstruction_history_never_increases() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_pgm(&d.join("bar.pgm"), &synth::centered_square(16, 4)).unwrap();
    ok(d, &["scatter", "--input", "bar.pgm", "--scales", "2", "--bands", "4", "--oversampling", "full", "--out", "t"]);
    let text = ok(d, &["reconstruct", "--target", "t", "--max-iter", "60", "--out", "r.sig", "--history", "h.csv", "--reference", "bar.pgm"]);
    assert!(text.contains("aligned relative error"));
    let objective: Vec<f64> = fs::read_to_string(d.join("h.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(objective.len() >= 2);
    assert!(objective.windows(2).all(|w| w[1] <= w[0]));
    let m = manifest(&d.join("r.sig.run.json"));
    assert!(m["summary"]["aligned_error"].as_f64().unwrap().is_finite());
    assert!(d.join("r.sig").exists());
}

#[test]
fn stability_reports_one_row_per_warp() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let img = square(d);
    for rep in ["scattering", "fourier", "identity"] {
        let out = format!("{rep}.csv");
        ok(d, &["stability", "--input", img, "--rep", rep, "--warps", "3", "--scales", "3", "--out", &out]);
        let csv = fs::read_to_string(d.join(&out)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "warp_id,sup_norm,jac_norm,metric,distance,ratio");
        assert_eq!(lines.count(), 3);
    }
}

#[test]
fn moments_and_decay_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["moments", "--model", "white", "--size", "16", "--scales", "3", "--realizations", "6", "--out", "m.csv", "--decay", "d.csv"]);
    let decay = fs::read_to_string(d.join("d.csv")).unwrap();
    assert_eq!(decay.lines().count(), 4);
    let moments = fs::read_to_string(d.join("m.csv")).unwrap();
    assert!(moments.starts_with("path,order,mean,variance,stderr"));
    let img = square(d).replace("square.pgm", "sq16.pgm");
    write_pgm(&d.join(&img), &synth::centered_square(16, 6)).unwrap();
    let model = format!("shifted:{img}");
    ok(d, &["moments", "--model", &model, "--size", "16", "--scales", "2", "--realizations", "4", "--out", "s.csv"]);
    assert_eq!(code(d, &["moments", "--model", &model, "--size", "32", "--out", "s.csv"]), 2);
}

#[test]
fn digits_then_classify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["digits", "--count", "120", "--seed", "1", "--features", "scattering", "--scales", "2", "--out", "train.csv"]);
    ok(d, &["digits", "--count", "60", "--seed", "2", "--features", "scattering", "--scales", "2", "--warp", "0.1", "--out", "test.csv"]);
    let text = ok(d, &["classify", "--train", "train.csv", "--test", "test.csv", "--p", "2", "--out", "model.json", "report.csv"]);
    assert!(text.contains("test"));
    let report = fs::read_to_string(d.join("report.csv")).unwrap();
    let acc: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("test_accuracy,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(acc > 0.5, "test accuracy {acc}");
    let model = manifest(&d.join("model.json"));
    assert_eq!(model["classes"].as_array().unwrap().len(), 10);
    assert!(d.join("model.json.run.json").exists());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let digits = format!("digits{threads}.csv");
        let moments = format!("moments{threads}.csv");
        ok(d, &["--threads", threads, "digits", "--count", "30", "--seed", "5", "--warp", "0.1", "--scales", "2", "--out", &digits]);
        ok(d, &["--threads", threads, "moments", "--model", "ar1:0.6", "--size", "16", "--scales", "2", "--realizations", "5", "--out", &moments]);
        let out = Command::new(env!("CARGO_BIN_EXE_scatterkit"))
            .current_dir(d)
            .env("SCATTERKIT_THREADS", threads)
            .args(["moments", "--model", "white", "--size", "16", "--scales", "2", "--realizations", "5", "--out", "env.csv"])
            .output()
            .unwrap();
        assert!(out.status.success());
        files.push((
            fs::read(d.join(&digits)).unwrap(),
            fs::read(d.join(&moments)).unwrap(),
            fs::read(d.join("env.csv")).unwrap(),
        ));
    }
    assert!(files[0] == files[1]);
}
