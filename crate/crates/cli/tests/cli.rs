use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pluri(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_pluri"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn green_outputs_are_deterministic_and_well_formed() {
    let cfg = "seed = 3\n[slice]\nresolution = 48\n[green]\nresidual_samples = 300\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&pluri(a.path(), &["green", "--threads", "1"], cfg));
    ok(&pluri(b.path(), &["green", "--threads", "2"], cfg));
    for f in ["green_forward.csv", "green_backward.csv", "green_forward.pgm", "green.json", "config.toml"] {
        let (x, y) = (fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap());
        assert_eq!(x, y, "{f} differs between thread counts");
    }

    let out = a.path().join("out");
    let pgm = fs::read(out.join("green_forward.pgm")).unwrap();
    assert!(pgm.starts_with(b"P2\n48 48\n255\n"));
    assert_eq!(String::from_utf8(pgm).unwrap().split_whitespace().count(), 4 + 48 * 48);
    let csv = fs::read_to_string(out.join("green_forward.csv")).unwrap();
    assert_eq!(csv.lines().count(), 48 * 48 + 4);
    assert!(csv.lines().nth(3).unwrap().ends_with("class"));

    let report = json(&out.join("green.json"));
    assert!(report["invariance_residual"]["p95"].as_f64().unwrap() <= 1e-5);
    let classes = &report["fields"]["forward"]["classes"];
    let total: u64 = ["interior", "band", "exterior"].iter().map(|k| classes[k].as_u64().unwrap()).sum();
    assert_eq!(total, 48 * 48);
    assert!(classes["interior"].as_u64().unwrap() > 0 && classes["band"].as_u64().unwrap() > 0);

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "green");
    assert_eq!(manifest["seed"], 3);
    let listed: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert!(listed.contains(&"green.json") && listed.contains(&"config.toml"));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(pluri(d.path(), &["green"], "[slice]\nresolutoin = 3\n").status.code(), Some(2));
    assert_eq!(pluri(d.path(), &["green"], "[map]\nkind = \"file\"\npath = \"missing.map\"\n").status.code(), Some(2));
    // point outside the domain U
    assert_eq!(pluri(d.path(), &["disk"], "[disk]\npoints = [[[1.5, 0.0]]]\n").status.code(), Some(2));
    // one sweep cannot converge
    assert_eq!(pluri(d.path(), &["envelope"], "[envelope]\nresolution = 64\nmax_sweeps = 1\n").status.code(), Some(3));
    assert_eq!(pluri(d.path(), &["verify"], "[verify]\ncriteria = [13]\n").status.code(), Some(2));
    assert_eq!(pluri(d.path(), &["verify"], "[verify]\ncriteria = [6]\ndeterminism = false\n").status.code(), Some(0));
    assert_eq!(pluri_cli::Failure::Acceptance(vec![6]).exit_code(), 4);
}

#[test]
fn envelope_matches_the_closed_form() {
    let d = tempfile::tempdir().unwrap();
    ok(&pluri(d.path(), &["envelope"], "[envelope]\nresolution = 128\n"));
    let r = json(&d.path().join("out/envelope.json"));
    assert!(r["closed_form_error"]["sup"].as_f64().unwrap() <= 2e-2, "{r}");
    let csv = fs::read_to_string(d.path().join("out/envelope.csv")).unwrap();
    assert_eq!(csv.lines().count(), 128 * 128 + 4);
}

#[test]
fn zero_steps_of_direct_pullback_echo_the_initial_moments() {
    let d = tempfile::tempdir().unwrap();
    ok(&pluri(d.path(), &["equidist"], "[equidist]\nm = [0]\npoints = 500\nscheme = \"direct\"\n"));
    let r = json(&d.path().join("out/equidist.json"));
    for side in ["a", "b"] {
        let init: Vec<f64> =
            r[format!("initial_moments_{side}")].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        let row: Vec<f64> =
            r["rows"][0][format!("moments_{side}")].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert_eq!(init.len(), row.len());
        for (x, y) in init.iter().zip(&row) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }
}

#[test]
fn disk_probe_reports_samples_and_closed_form() {
    let d = tempfile::tempdir().unwrap();
    ok(&pluri(d.path(), &["disk"], "[disk]\npoints = [[[0.5, 0.0]], [[0.0, 0.1]]]\nrestarts = 8\n"));
    let r = json(&d.path().join("out/disk.json"));
    let pts = r["points"].as_array().unwrap();
    assert_eq!(pts.len(), 2);
    assert!(pts[0]["error"].as_f64().unwrap() <= 3e-2);
    assert_eq!(pts[1]["value"].as_f64().unwrap(), -1.0);
    let samples = fs::read_to_string(d.path().join("out/disk_0.csv")).unwrap();
    assert_eq!(samples.lines().next().unwrap(), "node,re1,im1,weight,u");
    assert!(samples.lines().count() > 2);
}

#[test]
fn config_command_prints_the_effective_configuration() {
    let d = tempfile::tempdir().unwrap();
    let o = pluri(d.path(), &["config", "--seed", "17"], "[envelope]\nr = 0.3\n");
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    let cfg = pluri_cli::RunConfig::parse(&text).unwrap();
    assert_eq!(cfg.seed, 17);
    assert_eq!(cfg.envelope.r, 0.3);
}
