use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use boolmodel::boolsim::DensityTable;
use boolmodel_cli::config::sha256_hex;
use boolmodel_cli::output::Manifest;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boolmodel"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SQUARES: &str = r#"{
  "dim": 2,
  "seed": 5,
  "model": {"gamma": 0.5, "shapes": [{"box": [1, 1]}]},
  "window": {"side": 8},
  "estimator": {"reps": 4, "test_bodies": "none", "dump_realizations": 2}
}"#;

#[test]
fn simulate_writes_tagged_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SQUARES);
    let out = tmp.path().join("a");
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let hash = sha256_hex(SQUARES.as_bytes());
    let csv = fs::read_to_string(out.join("densities.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), format!("# config_hash={hash} seed=5"));
    let table = DensityTable::read_csv(csv.as_bytes()).unwrap();
    assert!(table.rows.len() >= 3);
    let m: Manifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.config_hash, hash);
    assert_eq!(m.seed, 5);
    assert!(m.started <= m.finished);
    let dump = fs::read_to_string(out.join("realizations/rep1.jsonl")).unwrap();
    assert!(dump.lines().next().unwrap().contains(&hash));
    assert!(!out.join("realizations/rep2.jsonl").exists());
}

/// Every file except the manifest, by relative path.
fn outputs(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SQUARES);
    let cmds: [&[&str]; 3] = [&["simulate"], &["flags"], &["verify", "flags"]];
    for cmd in cmds {
        let mut results = Vec::new();
        for k in 0..2 {
            let out = tmp.path().join(format!("{}{k}", cmd.join("_")));
            let mut args = cmd.to_vec();
            args.extend(["--config", s(&cfg), "--out", s(&out)]);
            let o = run(&args);
            assert!(o.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&o.stderr));
            results.push(outputs(&out));
        }
        assert!(!results[0].is_empty());
        assert_eq!(results[0], results[1], "{cmd:?}");
    }
    let a = tmp.path().join("seed9");
    run(&["simulate", "--config", s(&cfg), "--out", s(&a), "--seed", "9"]);
    assert_ne!(outputs(&a), outputs(&tmp.path().join("simulate0")));
}

#[test]
fn zero_intensity_gives_zero_estimates() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &SQUARES.replace("\"gamma\": 0.5", "\"gamma\": 0"));
    let out = tmp.path().join("o");
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let t = DensityTable::read_csv(fs::File::open(out.join("densities.csv")).unwrap()).unwrap();
    assert!(t.rows.iter().all(|r| r.estimate == 0.0));
}

const FORWARD_2D: &str = r#"{
  "dim": 2,
  "seed": 1,
  "model": {"gamma": 0.3, "shapes": [{"box": [1, 0.5], "probability": 0.5}, {"points": [[0, 0], [1, 0], [0.2, 0.9]], "probability": 0.5}]},
  "estimator": {"pipeline": "forward"},
  "invert": {"expected_gamma": 0.3, "tolerance": 1e-9}
}"#;

#[test]
fn forward_tables_invert_exactly() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", FORWARD_2D);
    let out = tmp.path().join("o");
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let o = run(&["invert", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("recovered.json")).unwrap()).unwrap();
    assert_eq!(v["config_hash"], sha256_hex(FORWARD_2D.as_bytes()));
    let g = v["model"]["gamma_hat"].as_f64().unwrap();
    assert!((g - 0.3).abs() < 1e-9, "{g}");

    let wrong = write_config(tmp.path(), "w.json", &FORWARD_2D.replace("\"expected_gamma\": 0.3", "\"expected_gamma\": 0.4"));
    let o = run(&["invert", "--config", s(&wrong), "--out", s(&out), "--densities", s(&out.join("densities.csv"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulated_squares_recover_intensity() {
    let tmp = TempDir::new().unwrap();
    let text = r#"{
  "dim": 2,
  "seed": 3,
  "model": {"gamma": 0.3, "shapes": [{"box": [1, 1]}]},
  "window": {"side": 142},
  "estimator": {"reps": 4, "dump_realizations": 0},
  "invert": {"expected_gamma": 0.3, "tolerance": 0.05}
}"#;
    let cfg = write_config(tmp.path(), "c.json", text);
    let out = tmp.path().join("o");
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let o = run(&["invert", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn corrupted_csv_is_an_input_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", FORWARD_2D);
    let bad = write_config(tmp.path(), "d.csv", "quantity,test_body,estimate,stderr,reps\nZ:V2,,zero,0,1\n");
    let o = run(&["invert", "--config", s(&cfg), "--densities", s(&bad), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));
}

#[test]
fn missing_rows_are_an_input_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", FORWARD_2D);
    let out = tmp.path().join("o");
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let full = fs::read_to_string(out.join("densities.csv")).unwrap();
    let kept: String = full.lines().filter(|l| !l.contains(",tri")).map(|l| format!("{l}\n")).collect();
    let cut = write_config(tmp.path(), "cut.csv", &kept);
    let o = run(&["invert", "--config", s(&cfg), "--densities", s(&cut), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn segments_alone_are_ill_posed() {
    let tmp = TempDir::new().unwrap();
    let text = FORWARD_2D.replace("\"tolerance\": 1e-9", "\"tolerance\": 1e-9, \"roles\": [\"segment\"]");
    let cfg = write_config(tmp.path(), "c.json", &text);
    let out = tmp.path().join("o");
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let o = run(&["invert", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ill_posed.json")).unwrap()).unwrap();
    assert!(v["ill_posed"]["nullity"].as_u64().unwrap() > 0);
    assert!(!out.join("recovered.json").exists());
}

#[test]
fn config_errors_point_at_the_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", "{\n  \"dim\": 2,\n  \"seed\": 1,\n  \"windw\": {}\n}\n");
    let o = run(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("c.json:4:"), "{err}");
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["verify", ""]).status.code(), Some(2));
    assert_eq!(run(&["verify", "everything", "--seed", "1"]).status.code(), Some(2));
    let tmp = TempDir::new().unwrap();
    let o = run(&["verify", "flags", "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_suites_pass_on_small_configs() {
    let tmp = TempDir::new().unwrap();
    let text = r#"{
  "dim": 4,
  "seed": 11,
  "verify": {
    "translative": {"polygon_pairs": 3, "polytope_pairs": 1},
    "euler4": {"window_side": 8, "reps": 16, "plot_gammas": [0.4], "plot_reps": 2},
    "identities": {"window_side": 20, "reps": 10, "isotropic_window_side": 15, "isotropic_reps": 10, "round_trips": 20}
  }
}"#;
    let cfg = write_config(tmp.path(), "c.json", text);
    for suite in ["translative", "euler4", "identities"] {
        let out = tmp.path().join(suite);
        let o = run(&["verify", suite, "--config", s(&cfg), "--out", s(&out)]);
        assert!(o.status.success(), "{suite}: {}", String::from_utf8_lossy(&o.stdout));
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("verify_{suite}.json"))).unwrap()).unwrap();
        assert_eq!(v["report"]["passed"], true);
        assert_eq!(v["seed"], 11);
    }
    let plot = fs::read_to_string(tmp.path().join("euler4/plot_euler4.csv")).unwrap();
    assert_eq!(plot.lines().nth(1).unwrap(), "gamma,predicted,uncorrected,simulated,stderr");
}
