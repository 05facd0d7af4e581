use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn colorblend(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colorblend"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Runs `correct` and returns the single data row split into fields.
fn correct_row(dir: &Path, background: &str, target: &str) -> Vec<String> {
    let o = colorblend(dir, &["correct", "--background", background, "--target", target]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("target_L,target_u,target_v,r,g,b,off,residual,exact"));
    lines.next().unwrap().split(',').map(str::to_string).collect()
}

#[test]
fn simulate_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = colorblend(dir.path(), &["simulate", "-o", "r.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut keys: BTreeSet<(String, String, String)> = BTreeSet::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        keys.insert((f[1].into(), f[2].into(), f[3].into()));
    }
    let count = |cond: &str| keys.iter().filter(|k| k.2 == cond).count();
    assert_eq!((count("both"), count("display_only"), count("background_only")), (296, 26, 10));
    let manifest = fs::read_to_string(dir.path().join("r.csv.manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 20120501"));
    assert!(!manifest.contains(dir.path().to_str().unwrap()), "manifest leaks paths");
}

#[test]
fn seed_controls_output() {
    let dir = tempfile::tempdir().unwrap();
    for (name, seed) in [("a.csv", "7"), ("b.csv", "7"), ("c.csv", "8")] {
        assert_eq!(code(&colorblend(dir.path(), &["simulate", "-o", name, "--seed", seed])), 0);
    }
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn reruns_need_force() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&colorblend(dir.path(), &["simulate", "-o", "r.csv"])), 0);
    let again = colorblend(dir.path(), &["simulate", "-o", "r.csv"]);
    assert_eq!(code(&again), 2);
    assert!(stderr(&again).contains("--force"));
    assert_eq!(code(&colorblend(dir.path(), &["simulate", "-o", "r.csv", "--force"])), 0);

    assert_eq!(code(&colorblend(dir.path(), &["analyze", "--readings", "r.csv", "-o", "out"])), 0);
    assert_eq!(code(&colorblend(dir.path(), &["analyze", "--readings", "r.csv", "-o", "out"])), 2);
    assert_eq!(code(&colorblend(dir.path(), &["analyze", "--readings", "r.csv", "-o", "out", "--force"])), 0);
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with('.'))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = colorblend(dir.path(), &["simulate", "--config", "absent.conf", "-o", "r.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("absent.conf"), "{}", stderr(&o));
    assert!(!dir.path().join("r.csv").exists());
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.conf"), "format = colorblend-sim/1\nseed = x\n").unwrap();
    let o = colorblend(dir.path(), &["simulate", "--config", "bad.conf", "-o", "r.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.conf"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&colorblend(dir.path(), &["simulate", "--bogus"])), 2);
}

#[test]
fn empty_readings_fail_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let o = colorblend(dir.path(), &["analyze", "--readings", "empty.csv", "-o", "out"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no records"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn readings_without_white_poster_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&colorblend(dir.path(), &["simulate", "-o", "r.csv"])), 0);
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.contains(",white-poster,")).collect();
    fs::write(dir.path().join("cut.csv"), kept.join("\n") + "\n").unwrap();
    let o = colorblend(dir.path(), &["analyze", "--readings", "cut.csv", "-o", "out"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("white-poster"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn analyze_writes_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&colorblend(dir.path(), &["simulate", "-o", "r.csv"])), 0);
    let o = colorblend(dir.path(), &["analyze", "--readings", "r.csv", "-o", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["cells.csv", "shifts.csv", "categories.csv", "report.txt", "index.html", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert_eq!(fs::read_dir(out.join("panels")).unwrap().count(), 55);
    let categories = fs::read_to_string(out.join("categories.csv")).unwrap();
    assert_eq!(categories.lines().count(), 56);
    assert!(categories.contains("no-lights,white-poster,washout-chromaticity,"));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    let poster = report.split("Poster vs real").nth(1).unwrap();
    for pair in [
        "brick-poster         brick-real",
        "green-foliage-poster green-foliage-real",
        "pavement-poster      pavement-real",
    ] {
        assert!(poster.contains(pair), "{pair}");
    }
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"panels/01_no-lights__brick-poster.svg\""));
    assert!(manifest.contains("\"readings\""));
}

#[test]
fn classifier_config_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&colorblend(dir.path(), &["simulate", "-o", "r.csv"])), 0);
    // nothing is coherent enough to be a linear shift
    fs::write(dir.path().join("c.conf"), "coherence_min = 1.0\n").unwrap();
    let o = colorblend(dir.path(), &["analyze", "--readings", "r.csv", "-o", "out", "--classifier", "c.conf"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let categories = fs::read_to_string(dir.path().join("out/categories.csv")).unwrap();
    assert!(!categories.contains("linear-shift"));
    fs::write(dir.path().join("bad.conf"), "coherence_min = 2\n").unwrap();
    let o = colorblend(dir.path(), &["analyze", "--readings", "r.csv", "-o", "o2", "--classifier", "bad.conf"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn red_on_dark_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let row = correct_row(dir.path(), "none", "red");
    assert_eq!(&row[3..7], ["255", "0", "0", "false"]);
    assert_eq!(row[7].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[8], "true");
}

#[test]
fn navy_on_bright_white_is_out_of_reach() {
    let dir = tempfile::tempdir().unwrap();
    let row = correct_row(dir.path(), "white-poster", "navy");
    let residual: f64 = row[7].parse().unwrap();
    assert!((residual - 77.589_277_406_616_56).abs() < 1e-9, "{residual}");
    assert_eq!(row[8], "false");
}

#[test]
fn explicit_background_and_target() {
    let dir = tempfile::tempdir().unwrap();
    let row = correct_row(dir.path(), "xyY:0.3127,0.3290,50", "luv:60,10,-10");
    assert!(row[7].parse::<f64>().unwrap() >= 0.0);
    let o = colorblend(dir.path(), &["correct", "--background", "none", "--target", "red", "--target", "luv:50,0,0"]);
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn malformed_specs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (bg, target) in [("none", "luv:1,2"), ("none", "notacolor"), ("xyY:0.3", "red"), ("granite", "red")] {
        let o = colorblend(dir.path(), &["correct", "--background", bg, "--target", target]);
        assert_eq!(code(&o), 2, "{bg} {target}: {}", stderr(&o));
    }
    let o = colorblend(dir.path(), &["correct", "--background", "none", "--target", "red", "--tolerance", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn model_file_round_trips_through_correct() {
    let dir = tempfile::tempdir().unwrap();
    let o = colorblend(dir.path(), &["model", "-o", "d.model", "--white-luminance", "250"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",true")), "{}", stdout(&o));
    let o = colorblend(dir.path(), &["correct", "--model", "d.model", "--background", "none", "--target", "teal"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains(",0,128,128,false,0e0,true"), "{}", stdout(&o));
    fs::write(dir.path().join("broken.model"), "format = colorblend-display/1\ngamma = 2.2\n").unwrap();
    let o = colorblend(dir.path(), &["correct", "--model", "broken.model", "--background", "none", "--target", "red"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn correct_writes_csv_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["correct", "--background", "sand-real", "--target", "gray", "-o", "c.csv", "--timestamp", "1700000000"];
    let o = colorblend(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("c.csv")).unwrap(), stdout(&o));
    let manifest = fs::read_to_string(dir.path().join("c.csv.manifest.json")).unwrap();
    assert!(manifest.contains("\"timestamp\": 1700000000"));
    assert!(manifest.contains("\"background\": \"sand-real\""));
}

#[test]
fn palette_lists_27_colors() {
    let dir = tempfile::tempdir().unwrap();
    let o = colorblend(dir.path(), &["palette"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 28);
    assert!(out.lines().nth(1).unwrap().starts_with("black,0,0,0,true,"));
    assert!(out.contains("\nwhite,255,255,255,false,"));
}

#[test]
fn gamut_shrinks_against_white_poster() {
    let dir = tempfile::tempdir().unwrap();
    let ratio = |bg: &str| -> f64 {
        let o = colorblend(dir.path(), &["gamut", "--background", bg]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let out = stdout(&o);
        let line = out.lines().find(|l| l.starts_with("hull_area_ratio = ")).unwrap();
        line.trim_start_matches("hull_area_ratio = ").parse().unwrap()
    };
    assert_eq!(ratio("none"), 1.0);
    let r = ratio("white-poster");
    assert!((r - 0.020_445_799_970_044_937).abs() < 1e-12, "{r}");
    let o = colorblend(dir.path(), &["gamut", "--background", "none", "--samples", "1"]);
    assert_eq!(code(&o), 2);
    let o = colorblend(dir.path(), &["gamut", "--background", "none", "--samples", "3", "--cloud", "g.csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(dir.path().join("g.csv")).unwrap().lines().count(), 28);
}
