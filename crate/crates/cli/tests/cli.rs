use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_bbprice");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn bbprice")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const MINIMAL: &str = r#"{
  "model": {"cev": {"r": {"constant": 0.02}, "q": {"constant": 0.01}, "sigma": {"constant": 2.0}, "beta": -0.5}},
  "barrier": {"up_and_out": {"upper": {"constant": 100.0}}},
  "strikes": [69.0],
  "maturities": [0.5],
  "spot": 70.0
}"#;

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn single_cell_defaults_to_bp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "min.json", MINIMAL);
    let o = run(&["price", "--config", cfg.to_str().unwrap(), "--no-timestamp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert_eq!(lines[0], "method,K,T,price,residual,remainder,notes");
    let f: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(f[0], "bp");
    let price: f64 = f[3].parse().unwrap();
    assert!(price > 0.0 && price < 31.0);
    assert!(f[4].parse::<f64>().unwrap() < 1e-8);
}

#[test]
fn timestamp_line_and_suppression() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "min.json", MINIMAL);
    let o = run(&["price", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# generated "), "{text}");
    assert_eq!(text.lines().nth(1), Some("method,K,T,price,residual,remainder,notes"));
}

#[test]
fn table_config_price_rows_sorted() {
    let cfg = configs().join("table.json");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prices.csv");
    let o = run(&["price", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-timestamp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 3 * 6 * 4);
    let keys: Vec<(String, f64, f64)> =
        rows.iter().map(|r| (r[0].clone(), r[1].parse().unwrap(), r[2].parse().unwrap())).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    assert_eq!(keys, sorted);
    // first table cell
    let fd = rows.iter().find(|r| r[0] == "fd" && r[1] == "59" && r[2].starts_with("0.0833")).unwrap();
    let v: f64 = fd[3].parse().unwrap();
    assert!((v - 9.2924).abs() / 9.2924 < 2e-3, "{v}");
    assert!(rows.iter().filter(|r| r[0] == "fd").all(|r| r[4].is_empty() && r[5].is_empty()));
    assert!(rows.iter().filter(|r| r[0] == "git").all(|r| !r[5].is_empty()));
}

#[test]
fn output_is_deterministic_across_threads() {
    let cfg = configs().join("table.json");
    let c = cfg.to_str().unwrap();
    let a = run(&["price", "--config", c, "--no-timestamp", "--threads", "1"]);
    let b = run(&["price", "--config", c, "--no-timestamp", "--threads", "4"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compare_bp_fd_has_difference_column() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("table.json")).unwrap().replace(r#"["bp", "git", "fd"]"#, r#"["bp", "fd"]"#);
    let cfg = write(dir.path(), "t.json", &text);
    let o = run(&["compare", "--config", cfg.to_str().unwrap(), "--no-timestamp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "K,T,bp,fd,diff_bp_fd");
    assert_eq!(lines.len(), 25);
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[4] - 100.0 * (f[2] - f[3]) / f[3]).abs() < 1e-9);
    }
}

#[test]
fn converge_sizes_and_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "min.json", MINIMAL);
    let o = run(&["converge", "--config", cfg.to_str().unwrap(), "--no-timestamp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "method,K,T,M,price,delta,ratio,notes");
    assert_eq!(lines.len(), 5);
    let m: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(m, ["25", "50", "100", "200"]);
    let deltas: Vec<f64> = lines[2..].iter().map(|l| l.split(',').nth(5).unwrap().parse::<f64>().unwrap().abs()).collect();
    assert!(deltas[2] < deltas[0], "{deltas:?}");
}

#[test]
fn json_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "min.json", &MINIMAL.replace("\"spot\"", "\"methods\": [\"bp\", \"fd\"], \"spot\""));
    let o = run(&["price", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["generated"].is_string());
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["method"], "bp");
    assert_eq!(rows[1]["method"], "fd");
    assert!(rows[1]["residual"].is_null());
    let (a, b) = (rows[0]["price"].as_f64().unwrap(), rows[1]["price"].as_f64().unwrap());
    assert!((a - b).abs() / b < 1e-2);
}

#[test]
fn spot_outside_barrier_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", &MINIMAL.replace("\"spot\": 70.0", "\"spot\": 120.0"));
    let o = run(&["price", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alive region"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_key_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", &MINIMAL.replace("\"upper\"", "\"uper\""));
    let o = run(&["price", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("barrier.up_and_out"), "{}", stderr(&o));
}

#[test]
fn every_violation_listed() {
    let dir = tempfile::tempdir().unwrap();
    let bad = MINIMAL.replace("[69.0]", "[]").replace("[0.5]", "[]").replace("\"spot\"", "\"methods\": [], \"spot\"");
    let cfg = write(dir.path(), "bad.json", &bad);
    let o = run(&["price", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    for key in ["methods:", "strikes:", "maturities:"] {
        assert!(e.contains(key), "{e}");
    }
}

#[test]
fn missing_file_is_config_error() {
    let o = run(&["price", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_cell_is_nan_with_exit_3() {
    let text = fs::read_to_string(configs().join("double.json")).unwrap().replace(r#"["bp", "fd"]"#, r#"["bp", "git"]"#);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.json", &text);
    let o = run(&["price", "--config", cfg.to_str().unwrap(), "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    let git = out.lines().find(|l| l.starts_with("git,")).unwrap();
    assert!(git.contains("NaN") && git.contains("error"), "{git}");
    let bp = out.lines().find(|l| l.starts_with("bp,")).unwrap();
    assert!(bp.split(',').nth(3).unwrap().parse::<f64>().unwrap() > 0.0);
}

#[test]
fn cir_config_prices() {
    let cfg = configs().join("cir.json");
    let o = run(&["compare", "--config", cfg.to_str().unwrap(), "--no-timestamp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 7);
    for l in out.lines().skip(1) {
        let d: f64 = l.split(',').nth(4).unwrap().parse().unwrap();
        assert!(d.abs() < 1.0, "{l}");
    }
}
