use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tdi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdi")).args(args).arg("--out").arg(dir).output().expect("run tdi")
}

fn rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let data = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, data)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn models_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

#[test]
fn isf_zero_momentum() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["isf", "--pd", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, data) = rows(&dir.path().join("isf.csv"));
    assert_eq!(header, ["p_dot_d", "t1", "t2", "s_re", "s_im"]);
    assert!((data[0][3] - 1.0).abs() < 1e-12 && data[0][4].abs() < 1e-12);
}

#[test]
fn isf_half_period_flip() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["isf", "--pd", "pi", "--dt", "pi", "--param", "gamma_re=0", "--param", "p_l=0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, data) = rows(&dir.path().join("isf.csv"));
    assert!((data[0][3] + 1.0).abs() < 1e-12 && data[0][4].abs() < 1e-12);
}

#[test]
fn missing_model_file_is_config_error() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("out");
    let out = tdi(&target, &["isf", "--model", "does/not/exist.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!target.exists());
}

#[test]
fn unknown_param_is_config_error() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["isf", "--param", "omgea=2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("isf.csv").exists());
}

#[test]
fn scan_records_fit() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["tdi-scan", "--pd", "pi/2", "--dt", "pi/2", "--phi-points", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, data) = rows(&dir.path().join("scan.csv"));
    assert_eq!(header, ["phi", "i_plus", "i_minus"]);
    assert_eq!(data.len(), 8);
    let side = json(&dir.path().join("scan.json"));
    let a_s = side["fit"]["a_s"].as_f64().unwrap();
    assert!((a_s + 1.6).abs() < 1e-8, "{a_s}");
    assert_eq!(side["seed"], 0);
    assert_eq!(side["tool"], "tdi");
    assert!(side["tool_version"].is_string());
    assert_eq!(side["config"]["model"]["kind"], "double-well");
}

#[test]
fn sparse_phase_grid() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["tdi-scan", "--phi", "0,pi"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("scan.csv").exists());
    let out = tdi(dir.path(), &["tdi-scan", "--phi", "0,pi", "--allow-sparse"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("scan.csv").exists());
    let out = tdi(dir.path(), &["discriminate", "--phi", "0,pi", "--allow-sparse"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classical_scan_has_stderr_columns() {
    let dir = TempDir::new().unwrap();
    let out =
        tdi(dir.path(), &["tdi-scan", "--model", "classical-ctmc", "--pd", "1", "--dt", "0.5", "--n-traj", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, _) = rows(&dir.path().join("scan.csv"));
    assert_eq!(header, ["phi", "i_plus", "i_minus", "i_plus_stderr", "i_minus_stderr"]);
}

#[test]
fn discriminate_real_coherence_excludes() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["discriminate", "--pd", "pi/2", "--dt", "pi/2"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&dir.path().join("verdict.json"));
    assert_eq!(v["classical_excluded"], true);
    assert_eq!(v["evidence"]["excluded_by_a_s"], true);
    assert!(v["evidence"]["fit"]["a_s"].is_number());
    assert_eq!(v["run"]["command"], "discriminate");
}

#[test]
fn discriminate_imaginary_coherence_averaged() {
    let dir = TempDir::new().unwrap();
    let model = models_dir().join("doublewell_imag.json");
    let out = tdi(
        dir.path(),
        &["discriminate", "--model", model.to_str().unwrap(), "--pd", "pi/2", "--dt", "pi/2", "--average-t1"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.path().join("verdict.json"))["classical_excluded"], false);
}

#[test]
fn discriminate_classical_model() {
    let dir = TempDir::new().unwrap();
    let out = tdi(
        dir.path(),
        &["discriminate", "--model", "classical-ctmc", "--pd", "1.3", "--t1", "0.2", "--dt", "0.8", "--seed", "5"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("verdict.json"))["classical_excluded"], false);
}

#[test]
fn moessbauer_dark_port() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["moessbauer", "--param", "omega=0", "--phase", "pi", "--pd", "0.7"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, data) = rows(&dir.path().join("moessbauer.csv"));
    assert_eq!(header, ["t", "intensity"]);
    assert_eq!(data.len(), 1024);
    assert!(data.iter().all(|r| r[1].abs() < 1e-30));
    assert_eq!(json(&dir.path().join("moessbauer.json"))["time_units"], "ns");
}

#[test]
fn moessbauer_beat_zeros() {
    let dir = TempDir::new().unwrap();
    let t_life = 141.0;
    let omega_d = 2.0 * PI * 0.05 / t_life;
    let beat = t_life / 0.05;
    let zeros: Vec<String> = (0..4).map(|k| format!("{}", (k as f64 + 0.5) * beat)).collect();
    let out = tdi(
        dir.path(),
        &["moessbauer", "--param", "omega=0", "--doppler", &omega_d.to_string(), "--t-grid", &zeros.join(",")],
    );
    assert_eq!(out.status.code(), Some(0));
    let (_, data) = rows(&dir.path().join("moessbauer.csv"));
    for r in &data {
        let h2 = (-2.0 * r[0] / t_life).exp();
        assert!(r[1] / h2 < 1e-9, "{r:?}");
    }
}

#[test]
fn moessbauer_negative_lifetime() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["moessbauer", "--lifetime", "-141"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("moessbauer.csv").exists());
}

#[test]
fn doublewell_report_lists_differences() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["doublewell-report"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&dir.path().join("doublewell_report.json"));
    let summary = doc["summary"].as_array().unwrap();
    assert!(summary.iter().any(|s| s["quantity"] == "isf" && s["max_abs_diff"].as_f64().unwrap() > 0.0));
    for e in doc["entries"].as_array().unwrap() {
        assert!(e["literal"].is_array() && e["oracle"].is_array());
        if e["omega_dt"].as_f64().unwrap() == 0.0 {
            assert!(e["abs_diff"].as_f64().unwrap() < 1e-12);
        }
        if e["quantity"] == "isf" && e["gamma_re"] == 0.0 && e["gamma_im"] == 0.0 {
            assert!(e["abs_diff"].as_f64().unwrap() < 1e-10);
        }
    }
}

#[test]
fn dcf_lists_all_separations() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["dcf", "--dt", "0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, data) = rows(&dir.path().join("dcf.csv"));
    assert_eq!(header, ["r_x", "r_y", "r_z", "t1", "t2", "g_re", "g_im"]);
    assert_eq!(data.len(), 6);
    let out = tdi(dir.path(), &["dcf", "--model", "classical-ctmc"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unsorted_grid_rejected() {
    let dir = TempDir::new().unwrap();
    let out = tdi(dir.path(), &["isf", "--pd", "1,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classical_command() {
    let dir = TempDir::new().unwrap();
    let model = models_dir().join("classical_two_site.json");
    let out = tdi(
        dir.path(),
        &["classical", "--model", model.to_str().unwrap(), "--pd", "0,pi", "--dt", "0.5", "--n-traj", "5000"],
    );
    assert_eq!(out.status.code(), Some(0));
    let (header, data) = rows(&dir.path().join("classical.csv"));
    assert_eq!(header.last().unwrap(), "s_stderr");
    assert_eq!(data[0][3], 1.0);
    assert_eq!(json(&dir.path().join("classical.json"))["seed"], 7);
    let out = tdi(dir.path(), &["classical"]);
    assert_eq!(out.status.code(), Some(2));
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let runs: [&[&str]; 4] = [
        &["isf", "--pd", "0,0.5,1,pi", "--t1", "0,0.3", "--dt", "0,1,2"],
        &["tdi-scan", "--pd", "pi/2", "--dt", "pi/2", "--phi-points", "12"],
        &["discriminate", "--model", "classical-ctmc", "--pd", "1", "--dt", "0.7", "--seed", "11", "--n-traj", "5000"],
        &["moessbauer", "--doppler", "0.01", "--t-grid", "0:300:64"],
    ];
    for args in runs {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        let ca = tdi(a.path(), args).status.code();
        let cb = tdi(b.path(), args).status.code();
        assert_eq!(ca, cb);
        let (fa, fb) = (dir_bytes(a.path()), dir_bytes(b.path()));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{args:?}");
    }
}
