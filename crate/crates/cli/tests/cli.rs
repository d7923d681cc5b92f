use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ldlab::grid::read_raster;
use ldlab::metrics::{total_energy_with, EnergyOptions};
use ldlab::riesz::SelfEnergyTable;
use ldlab::Kernel;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn ldlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path, stem: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{stem}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn out(dir: &tempfile::TempDir, sub: &str) -> PathBuf {
    dir.path().join(sub)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_every_config_key_with_default_and_unit() {
    let o = ldlab(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for section in ["[kernel]", "[grid]", "[anneal]", "[sweep]"] {
        assert!(text.contains(section), "{section}");
    }
    let keys = [
        "n", "alpha", "h", "perimeter", "nonlocal", "box_half", "mass", "moves", "t0", "decay", "far_weight", "seed",
        "snapshot_period", "refresh_period", "tournament", "masses", "spacing_factor", "beta", "samples",
        "cells_per_radius", "separations", "density_threshold",
    ];
    for k in keys {
        let line = text
            .lines()
            .find(|l| l.trim_start().starts_with(&format!("{k} ")))
            .unwrap_or_else(|| panic!("no help line for {k}"));
        assert!(line.contains("default") && line.contains("unit"), "{line}");
    }
    // subcommand help carries the same table
    let o = ldlab(&["minimize", "--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("refresh_period"));
}

#[test]
fn unknown_flag_exits_2_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let o = ldlab(&["energy", "--input", "x.ras", "--frobnicate", "--out", s(&o_dir)]);
    assert_eq!(code(&o), 2);
    assert!(!o_dir.exists());
    let o = ldlab(&["transmogrify", "--out", s(&o_dir)]);
    assert_eq!(code(&o), 2);
    assert!(!o_dir.exists());
}

#[test]
fn bad_configs_exit_2_naming_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let cases = [
        ("[grid]\nspacing = 2\n", "spacing"),
        ("[kernel]\nalpha = \"one\"\n", "alpha"),
        ("[kernel]\nn = 3\nn = 2\n", "duplicate"),
        ("[kernel]\nalpha = 3.5\n", "alpha must lie in (0, n)"),
        ("[grid]\nh = 0.0\n", "grid.h"),
        ("[grid]\nh = -0.1\n", "grid.h"),
        ("[warp]\nfactor = 9\n", "warp"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("c{i}.toml"));
        fs::write(&cfg, text).unwrap();
        let o = ldlab(&["potential", "--ball", "--config", s(&cfg), "--out", s(&o_dir)]);
        assert_eq!(code(&o), 2, "{text}");
        assert!(stderr(&o).contains(needle), "{text}: {}", stderr(&o));
    }
    let o = ldlab(&["potential", "--ball", "--config", "/nonexistent/c.toml", "--out", s(&o_dir)]);
    assert_eq!(code(&o), 2);
    assert!(!o_dir.exists());
}

#[test]
fn config_merge_order() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let empty = dir.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    let o = ldlab(&["potential", "--ball", "--points", "5", "--config", s(&empty), "--out", s(&o_dir), "--name", "a"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(manifest(&o_dir, "a")["kernel"]["alpha"], 1.0);

    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[kernel]\nalpha = 2.0\n[grid]\nh = 0.05\n").unwrap();
    let o = ldlab(&["potential", "--ball", "--points", "5", "--config", s(&cfg), "--out", s(&o_dir), "--name", "b"]);
    assert_eq!(code(&o), 0);
    let m = manifest(&o_dir, "b");
    assert_eq!(m["kernel"]["alpha"], 2.0);
    assert_eq!(m["config"]["grid"]["h"], 0.05);

    let o = ldlab(&[
        "potential", "--ball", "--points", "5", "--config", s(&cfg), "--alpha", "1.5", "--out", s(&o_dir), "--name",
        "c",
    ]);
    assert_eq!(code(&o), 0);
    let m = manifest(&o_dir, "c");
    assert_eq!(m["kernel"]["alpha"], 1.5);
    assert_eq!(m["config"]["grid"]["h"], 0.05);
}

#[test]
fn energy_matches_the_library_and_manifest_digests_hold() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let o = ldlab(&["competitor", "--variant", "ball", "--mass", "0.5", "--h", "0.1", "--out", s(&o_dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ras = o_dir.join("competitor-ball.ras");
    let o = ldlab(&["energy", "--input", s(&ras), "--out", s(&o_dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let set = read_raster(std::io::BufReader::new(fs::File::open(&ras).unwrap())).unwrap();
    let e = total_energy_with(&set, &Kernel::coulomb(), EnergyOptions::default()).unwrap();
    let printed: Vec<f64> = stdout(&o)
        .lines()
        .map(|l| l.split(" = ").nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(printed, vec![e.perimeter, e.nonlocal, e.total, e.mass]);

    let m = manifest(&o_dir, "energy");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["verb"], "energy");
    assert_eq!(m["grid"]["h"], 0.1);
    let files = m["inputs"].as_array().unwrap().iter().chain(m["outputs"].as_array().unwrap());
    let mut seen = 0;
    for f in files {
        let bytes = fs::read(f["path"].as_str().unwrap()).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(f["sha256"], hex.as_str());
        assert_eq!(f["bytes"], bytes.len() as u64);
        seen += 1;
    }
    assert_eq!(seen, 2);
}

#[test]
fn manifests_are_not_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let args = ["potential", "--ball", "--points", "5", "--out", s(&o_dir)];
    assert_eq!(code(&ldlab(&args)), 0);
    let o = ldlab(&args);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&ldlab(&forced)), 0);
}

#[test]
fn raster_dimension_must_match_the_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let o = ldlab(&["competitor", "--variant", "ball", "--mass", "1", "--n", "2", "--h", "0.1", "--out", s(&o_dir)]);
    assert_eq!(code(&o), 0);
    let ras = o_dir.join("competitor-ball.ras");
    let o = ldlab(&["energy", "--input", s(&ras), "--out", s(&o_dir)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--n 2"));
    let o = ldlab(&["energy", "--input", s(&ras), "--n", "2", "--out", s(&o_dir)]);
    assert_eq!(code(&o), 0);
}

#[test]
fn competitor_parameters_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let o = ldlab(&["competitor", "--variant", "split-translate", "--mass", "1", "--out", s(&o_dir)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`t`"), "{}", stderr(&o));
    let o = ldlab(&[
        "competitor", "--variant", "truncated-ball", "--mass", "1", "--t", "-0.3", "--h", "0.1", "--out", s(&o_dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn verify_interpolation_reports_the_constant() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let o = ldlab(&[
        "verify", "--check", "interpolation", "--n", "3", "--alpha", "1", "--samples", "9", "--masses", "0.01,0.1,1",
        "--out", s(&o_dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&o_dir, "verify-interpolation");
    let c = m["results"]["constant"].as_f64().unwrap();
    assert!((c / 1.01 - 0.2807).abs() < 1e-3, "{c}");
    let csv = fs::read_to_string(o_dir.join("verify-interpolation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 + 9);
    assert!(csv.starts_with("kind,mass,h,perimeter,nonlocal,ratio"));
}

#[test]
fn failed_contract_exits_1_and_still_writes_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    // a unit ball four cells across is far outside the 2% tolerance
    let o = ldlab(&["verify", "--check", "ball-energy", "--h", "0.5", "--samples", "1000", "--out", s(&o_dir)]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let m = manifest(&o_dir, "verify-ball-energy");
    assert_eq!(m["status"], "violation");
    assert!(!m["violations"].as_array().unwrap().is_empty());

    let o = ldlab(&["verify", "--check", "ball-energy", "--h", "0.0625", "--samples", "1000", "--out", s(&o_dir), "--name", "fine"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<PathBuf> = (0..2).map(|i| out(&dir, &format!("r{i}"))).collect();
    for r in &runs {
        let o = ldlab(&["sweep", "--study", "fission", "--out", s(r)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = ldlab(&[
            "minimize", "--n", "2", "--mass", "0.5", "--h", "0.05", "--moves", "3000", "--snapshot-period", "500",
            "--seed", "7", "--out", s(r),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["sweep-fission.csv", "minimize-trace.csv", "minimize.ras", "minimize-init.ras"] {
        assert_eq!(fs::read(runs[0].join(f)).unwrap(), fs::read(runs[1].join(f)).unwrap(), "{f}");
    }
    let m = manifest(&runs[0], "minimize");
    assert_eq!(m["seed"], 7);
    assert!((m["results"]["best"]["mass"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn minimize_writes_snapshots_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let o = ldlab(&[
        "minimize", "--n", "2", "--mass", "0.3", "--h", "0.05", "--moves", "2000", "--snapshot-period", "1000",
        "--snapshots", "--out", s(&o_dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let snaps: Vec<_> = fs::read_dir(&o_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains("-snap-"))
        .collect();
    assert!(snaps.len() >= 2);
    for e in snaps {
        let set = read_raster(std::io::BufReader::new(fs::File::open(e.path()).unwrap())).unwrap();
        assert_eq!(set.count(), 120);
    }
}

#[test]
fn calibrate_writes_a_readable_table() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let o = ldlab(&["calibrate", "--pairs", "3:1,2:1", "--draws", "20000", "--out", s(&o_dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(o_dir.join("calibrate.txt")).unwrap();
    assert_eq!(text, stdout(&o));
    let t = SelfEnergyTable::from_text(&text).unwrap();
    assert_eq!(t.entries.len(), 2);
    assert!(t.lookup(3, 1.0).is_some());
    let o = ldlab(&["calibrate", "--pairs", "3:4", "--out", s(&o_dir), "--name", "bad"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn cut_probe_on_a_large_ball_finds_a_profitable_split() {
    let dir = tempfile::tempdir().unwrap();
    let o_dir = out(&dir, "o");
    let o = ldlab(&[
        "sweep", "--study", "cut", "--mass", "8", "--h", "0.125", "--perimeter", "stencil", "--out", s(&o_dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(manifest(&o_dir, "sweep-cut")["results"]["profitable"], true);
    assert!(o_dir.join("sweep-cut-cuts.csv").exists());
    assert!(o_dir.join("sweep-cut-splits.csv").exists());
}
