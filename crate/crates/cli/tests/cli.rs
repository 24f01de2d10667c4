use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortexcorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    run(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn pairdist_writes_all_formats_with_provenance() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["pairdist", "--state", "fermi-fock", "--grid", "81"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("distance.csv")).unwrap();
    let mut lines = csv.lines();
    let prov: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# provenance: ").unwrap()).unwrap();
    assert_eq!(prov["command"], "pairdist");
    assert_eq!(prov["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(lines.next().unwrap(), "distance,density");
    assert_eq!(lines.count(), 81);
    let summary = read_json(&dir.path().join("distance_summary.json"));
    assert!((summary["mean"].as_f64().unwrap() - (9.0 * std::f64::consts::PI / 8.0).sqrt()).abs() < 1e-6);
    assert_eq!(summary["provenance"]["config_hash"], prov["config_hash"]);
    let svg = fs::read_to_string(dir.path().join("distance.svg")).unwrap();
    assert!(svg.contains("<!-- provenance: "));
}

#[test]
fn formats_flag_limits_outputs() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &["pairangle", "--state", "bose-fock", "--formats", "json", "--grid", "31"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("angle_summary.json").exists());
    assert!(!dir.path().join("angle.csv").exists());
    assert!(!dir.path().join("angle.svg").exists());
}

#[test]
fn profile_binary_matches_header() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["profile", "--state", "thermal", "--grid", "21"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let header = read_json(&dir.path().join("rho1.json"));
    assert_eq!(header["points"], 21);
    let bin = fs::read(dir.path().join("rho1.bin")).unwrap();
    assert_eq!(bin.len(), 21 * 21 * 8);
    let centre = f64::from_le_bytes(bin[(10 * 21 + 10) * 8..][..8].try_into().unwrap());
    assert!(centre.abs() < 1e-15, "vortex core is dark");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let cases: [(&[&str], i32); 9] = [
        (&["pairdist", "--state", "nonsense"], 2),
        (&["pairdist", "--state", "fermi-fock", "--n", "2"], 2),
        (&["pairdist", "--state", "fermi-fock", "--nbar", "1"], 2),
        (&["frames", "--state", "fermi-fock"], 2),
        (&["pairdist", "--state", "bose-fock", "--n", "1", "--m", "0"], 3),
        (&["pairangle", "--state", "noon"], 4),
        (&["pairdist", "--state", "cothermal", "--nbar", "-1"], 2),
        (&["pairdist", "--bogus"], 2),
        (&["pairdist", "--state", "fermi-fock", "--threads", "0"], 2),
    ];
    for (args, want) in cases {
        let o = run_in(dir.path(), args);
        assert_eq!(code(&o), want, "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains("error"), "{args:?}");
    }
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn unwritable_output_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("plain-file");
    fs::write(&file, "x").unwrap();
    let o = run_in(&file, &["pairangle", "--state", "fermi-fock", "--grid", "11"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn config_file_merges_under_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"state": "coherent", "alpha-x": "0+1i", "alpha-y": [1, 0], "grid": 41}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run_in(&a, &["pairdist", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run_in(&b, &["pairdist", "--config", cfg.to_str().unwrap(), "--grid", "21"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pa = read_json(&a.join("distance_summary.json"))["provenance"].clone();
    let pb = read_json(&b.join("distance_summary.json"))["provenance"].clone();
    assert_eq!(pa["config"]["state"], "coherent");
    assert_eq!(pa["config"]["grid"], 41);
    assert_eq!(pb["config"]["grid"], 21);
    assert_ne!(pa["config_hash"], pb["config_hash"]);
    assert_eq!(fs::read_to_string(b.join("distance.csv")).unwrap().lines().count(), 23);

    fs::write(&cfg, r#"{"state": "noon", "colour": "blue"}"#).unwrap();
    let o = run_in(&a, &["pairdist", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let args = [
        "frames",
        "--state",
        "bose-fock",
        "--seed",
        "7",
        "--count",
        "20000",
        "--stats",
        "--bins",
        "20",
    ];
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let d = dir.path().join(name);
        let mut all = args.to_vec();
        all.extend(["--threads", threads]);
        let o = run_in(&d, &all);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(d);
    }
    for file in [
        "frames.csv",
        "frames_stats.json",
        "frames_distance.csv",
        "frames_profile.svg",
    ] {
        let first = fs::read(outputs[0].join(file)).unwrap();
        for d in &outputs[1..] {
            assert!(first == fs::read(d.join(file)).unwrap(), "{file} differs");
        }
    }
    let o = run_in(&dir.path().join("d"), &args.map(|a| if a == "7" { "8" } else { a }));
    assert_eq!(code(&o), 0);
    assert_ne!(
        fs::read(outputs[0].join("frames.csv")).unwrap(),
        fs::read(dir.path().join("d/frames.csv")).unwrap()
    );
}

#[test]
fn frame_header_carries_seed_and_provenance() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &["frames", "--state", "noon", "--seed", "3", "--count", "10"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("frames.csv")).unwrap();
    let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(header["seed"], 3);
    assert_eq!(header["count"], 10);
    assert_eq!(header["descriptor"]["kind"], "noon");
    assert_eq!(header["provenance"]["seed"], 3);
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn basis_flag_gives_the_same_physics() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_in(&a, &["pairdist", "--state", "bose-fock", "--grid", "41"]);
    let o = run_in(
        &b,
        &["pairdist", "--state", "bose-fock", "--grid", "41", "--basis", "dipole"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let body = |d: &Path| -> Vec<f64> {
        fs::read_to_string(d.join("distance.csv"))
            .unwrap()
            .lines()
            .skip(2)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    for (x, y) in body(&a).iter().zip(body(&b)) {
        assert!((x - y).abs() < 1e-12);
    }
}
