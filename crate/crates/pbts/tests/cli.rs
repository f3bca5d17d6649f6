use std::path::Path;
use std::process::{Command, Output};

fn track(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_track"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn synth_run_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let (spec, seq, out) = (tmp.path().join("spec.json"), tmp.path().join("seq"), tmp.path().join("out"));
    std::fs::write(
        &spec,
        r#"{"name": "slide", "width": 140, "height": 100, "frames": 8, "centre": [50, 50],
            "size": [40, 30], "motion": {"translation": [2, 0]}}"#,
    )
    .unwrap();
    let o = track(&["synth", "--spec", s(&spec), "--out", s(&seq)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(seq.join("groundtruth.txt").exists());

    let cfg = tmp.path().join("fast.cfg");
    std::fs::write(&cfg, "candidates = 200\nrefined = 20\n").unwrap();
    let o = track(&[
        "run", "--seq", s(&seq), "--config", s(&cfg), "--out", s(&out), "--seed", "4",
        "--annotate", "--dump-placement",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("AO"));
    let rows = |f: &str| std::fs::read_to_string(out.join(f)).unwrap().lines().count() - 1;
    assert_eq!(rows("frames.csv"), 8);
    assert_eq!(rows("success.csv"), 21);
    assert_eq!(rows("precision.csv"), 51);
    assert_eq!(std::fs::read_dir(out.join("annotated")).unwrap().count(), 8);
    assert!(out.join("placement/mask.png").exists());

    let before = summary(&out);
    assert!(before["AO"].as_f64().unwrap() > 0.3, "{before}");
    std::fs::remove_file(out.join("success.csv")).unwrap();
    let o = track(&["eval", "--results", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(summary(&out), before);
    assert_eq!(rows("success.csv"), 21);
}

#[test]
fn exit_codes_separate_bad_input_from_missing_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");

    let o = track(&["run", "--seq", s(&tmp.path().join("absent")), "--out", s(&out)]);
    assert_eq!(code(&o), 1);

    let spec = tmp.path().join("bad.json");
    std::fs::write(&spec, r#"{"frames": 1}"#).unwrap();
    assert_eq!(code(&track(&["synth", "--spec", s(&spec), "--out", s(&out)])), 2);

    std::fs::write(&spec, "{").unwrap();
    assert_eq!(code(&track(&["synth", "--spec", s(&spec), "--out", s(&out)])), 2);

    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "no_such_key = 3\n").unwrap();
    let o = track(&["run", "--seq", s(tmp.path()), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_key"));

    let o = track(&["run", "--seq", s(tmp.path()), "--out", s(&out), "--ablate", "bogus"]);
    assert_eq!(code(&o), 2);

    // Bad ground truth line, reported with its number.
    let seq = tmp.path().join("seq");
    std::fs::create_dir(&seq).unwrap();
    for i in 0..2 {
        image::RgbImage::new(8, 8).save(seq.join(format!("{i}.png"))).unwrap();
    }
    std::fs::write(seq.join("groundtruth.txt"), "1,1,4,4\n1,1,four,4\n").unwrap();
    let o = track(&["run", "--seq", s(&seq), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains('2'));
}
