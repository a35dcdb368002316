use periodic_scatter::config::RunConfig;
use periodic_scatter::io::{Table, parse_field};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pscat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pscat")).args(args).output().expect("run pscat")
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stdout:\n{}\nstderr:\n{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

#[test]
fn default_quasi_run_writes_field_and_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = pscat(&["solve-quasi", "--out", dir.path().to_str().unwrap()]);
    ok(&o);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("boundary residual"), "{stdout}");
    let r = report(dir.path());
    assert!(r["residuals"]["boundary"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["command"], "solve-quasi");
    let field = Table::read(&dir.path().join("field.csv")).unwrap();
    assert_eq!(field.header, ["x", "y", "re_u", "im_u"]);
    assert_eq!(field.rows.len(), 1);
    assert!(!r["sigma"].as_array().unwrap().is_empty());
}

#[test]
fn dense_and_half_circle_fields_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(cfg.path(), "[problem.grid]\nx = [-0.5, 0.5]\ny = [0.4, 1.6]\nnx = 5\nny = 4\n").unwrap();
    let c = cfg.path().to_str().unwrap();
    ok(&pscat(&["solve-quasi", "--config", c, "--mode", "dense", "--out", a.path().to_str().unwrap()]));
    ok(&pscat(&["solve-quasi", "--config", c, "--mode", "id-half", "--out", b.path().to_str().unwrap()]));
    let (pa, ua) = parse_field(&Table::read(&a.path().join("field.csv")).unwrap()).unwrap();
    let (pb, ub) = parse_field(&Table::read(&b.path().join("field.csv")).unwrap()).unwrap();
    assert_eq!(pa, pb);
    assert_eq!(ua.len(), 21);
    let scale = ua.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (x, y) in ua.iter().zip(&ub) {
        assert!((x - y).norm() <= 1e-10 * scale, "{x} vs {y}");
    }
}

#[test]
fn field_file_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(cfg.path(), "[problem.grid]\nx = [-0.5, 0.5]\ny = [0.3, 1.0]\nnx = 7\nny = 3\n").unwrap();
    ok(&pscat(&["solve-quasi", "--config", cfg.path().to_str().unwrap(), "--out", dir.path().to_str().unwrap()]));
    let path = dir.path().join("field.csv");
    let original = std::fs::read_to_string(&path).unwrap();
    let table = Table::read(&path).unwrap();
    let (pts, vals) = parse_field(&table).unwrap();
    let again = periodic_scatter::io::field_table(&pts, &vals).to_csv().unwrap();
    assert_eq!(again, original);
}

#[test]
fn enclosure_failure_is_a_config_error() {
    let cfg = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(cfg.path(), "[cell]\nproxy_radius = 0.5\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let o = pscat(&["solve-quasi", "--config", cfg.path().to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("proxy circle fails enclosure"));
}

#[test]
fn invalid_input_exits_with_code_two() {
    let cfg = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(cfg.path(), "[geometry]\nperiod = 1.0\nwobble = 3\n").unwrap();
    let c = cfg.path().to_str().unwrap();
    for args in [
        vec!["solve-quasi", "--config", c],
        vec!["solve-quasi", "--mode", "spiral"],
        vec!["solve-aperiodic", "--grading", "sideways"],
        vec!["study", "--values", "20,8"],
        vec!["solve-quasi", "--kappa", "1,2,3"],
        vec!["solve-quasi", "--config", "/nonexistent/run.toml"],
        vec!["solve-quasi", "--nkappa", "1"],
    ] {
        let o = pscat(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn numerical_failure_exits_with_code_three() {
    // The field is singular at the source itself.
    let cfg = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(cfg.path(), "[problem]\ntargets = [[-0.2, 0.35]]\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let o = pscat(&["solve-quasi", "--config", cfg.path().to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-finite"));
}

#[test]
fn flat_aperiodic_run_matches_image_source() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("flat-image.toml");
    let o = pscat(&["solve-aperiodic", "--config", cfg.to_str().unwrap(), "--nkappa", "40", "--out", dir.path().to_str().unwrap()]);
    ok(&o);
    let r = report(dir.path());
    assert!(r["image_oracle"]["max_rel_error"].as_f64().unwrap() <= 1e-8);
    let nodes = Table::read(&dir.path().join("table.csv")).unwrap();
    assert_eq!(nodes.rows.len(), 40);
    assert_eq!(nodes.header[0], "j");
    assert!(dir.path().join("field.csv").exists());
}

#[test]
fn study_and_benchmark_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&pscat(&["study", "--sweep", "panels", "--values", "4,8,12", "--mode", "dense,id-half", "--out", out]));
    let t = Table::read(&dir.path().join("table.csv")).unwrap();
    assert_eq!(t.header, ["value", "mode", "n", "n_compress", "precompute_s", "solve_s", "rel_error"]);
    assert_eq!(t.rows.len(), 6);
    assert_eq!(t.column("rel_error").unwrap()[4..], ["", ""]);

    ok(&pscat(&["benchmark", "--mode", "id-half", "--out", out]));
    let t = Table::read(&dir.path().join("table.csv")).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.column("solve_speedup").unwrap(), [""]);
    let r = report(dir.path());
    assert_eq!(r["rows"][0]["solve_s"].as_array().unwrap().len(), 3);
}

#[test]
fn shipped_configs_are_valid() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 6);
    let d = RunConfig::load(&configs().join("default.toml")).unwrap();
    assert_eq!(d, RunConfig::default());
}
