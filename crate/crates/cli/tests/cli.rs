use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const DESK: &str = "scenario = hmmimo\nN_b = 16\nL_c = 4\nN_a = 4\nK_c = 2\ndrops = 20\n";

fn hetmimo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetmimo")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn run_writes_all_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "desk.conf", DESK);
    let out = tmp.path().join("out");
    let o = hetmimo(&[
        "run",
        "--config",
        &cfg,
        "--scenario",
        "hmmimo",
        "--drops",
        "100",
        "--seed",
        "7",
        "--output",
        out.to_str().unwrap(),
        "--emit-plot",
        "--diagnostics",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["results.csv", "summary.json", "manifest.json", "cdf_ul.svg", "cdf_dl.svg", "diagnostics.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 100 * 8);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["hmmimo"]["n"], 800);
    for key in ["mean", "median", "likely95_ul", "likely95_dl"] {
        assert!(summary["hmmimo"][key].is_number(), "{key}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["scenarios"][0], "hmmimo");
}

#[test]
fn svg_curves_are_monotone_cdfs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "desk.conf", DESK);
    let out = tmp.path().join("out");
    let o = hetmimo(&["run", "--config", &cfg, "--scenario", "all", "--output", out.to_str().unwrap(), "--emit-plot"]);
    assert_eq!(code(&o), 0);
    let svg = fs::read_to_string(out.join("cdf_ul.svg")).unwrap();
    let paths: Vec<&str> = svg.lines().filter(|l| l.contains(r#"class="cdf""#)).collect();
    assert_eq!(paths.len(), 3);
    for line in paths {
        let d = line.split(" d=\"").nth(1).unwrap().split('"').next().unwrap();
        let pts: Vec<(f64, f64)> = d
            .split_whitespace()
            .map(|p| {
                let (x, y) = p[1..].split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        // SVG y grows downwards, so cumulative probability rising means y falling.
        for w in pts.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 <= w[0].1);
        }
    }
    assert!(svg.contains(r#"class="p5""#));
}

#[test]
fn identical_flags_give_identical_csv_and_hash() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "desk.conf", DESK);
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let o =
            hetmimo(&["run", "--config", &cfg, "--scenario", "all", "--seed", seed, "--output", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        (fs::read(out.join("results.csv")).unwrap(), manifest["config_hash"].as_str().unwrap().to_owned())
    };
    let (a, ha) = run("a", "3");
    let (b, hb) = run("b", "3");
    let (c, hc) = run("c", "4");
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    assert_ne!(a, c);
    assert_ne!(ha, hc);
}

#[test]
fn missing_config_exits_2() {
    let o = hetmimo(&["run", "--config", "/nonexistent/hetmimo.conf"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_config_reports_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.conf", "N_b = 16\n\nbogus = 3\n");
    let o = hetmimo(&["run", "--config", &cfg, "--output", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn unequal_budgets_need_opt_in() {
    let tmp = TempDir::new().unwrap();
    let a = write_config(tmp.path(), "a.conf", DESK);
    let b = write_config(tmp.path(), "b.conf", "scenario = cmmimo\nL_c = 0\nN_b = 16\nK_c = 2\ndrops = 5\n");
    let out = tmp.path().join("o");
    let o = hetmimo(&["run", "--config", &a, "--config", &b, "--drops", "5", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = hetmimo(&[
        "run",
        "--config",
        &a,
        "--config",
        &b,
        "--drops",
        "5",
        "--allow-unequal",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unwritable_output_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "desk.conf", DESK);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = hetmimo(&["run", "--config", &cfg, "--drops", "2", "--output", blocker.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn validate_default_passes() {
    let o = hetmimo(&["validate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("E|I3|^2") && text.contains("E|J3|^2") && text.contains("var(hhat)"));
}

#[test]
fn impossible_tolerance_fails_naming_term() {
    let o = hetmimo(&["validate", "--tolerance", "1e-9", "--instances", "2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of tolerance"));
}

#[test]
fn paper_mode_dl_reports_discrepancy_without_failing() {
    let o = hetmimo(&["validate", "--paper-mode-dl", "--instances", "4"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l.starts_with("INFO") && l.contains("J1 vs paper-mode term")));
}
