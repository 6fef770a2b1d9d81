use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fbls");

fn lasso_config(output_dir: &Path, method: &str) -> String {
    format!(
        r#"
output_dir = "{}"

[problem]
family = "lasso"
rows = 12
cols = 6
seed = 4
lambda = 0.1

[solver]
method = "{method}"
max_iterations = 300

[[certificates]]
name = "descent"

[[certificates]]
name = "stepsize_floor"
"#,
        output_dir.display()
    )
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn fbls(args: &[&str], env: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("FBLS_OUTPUT_DIR");
    if let Some(dir) = env {
        cmd.env("FBLS_OUTPUT_DIR", dir);
    }
    cmd.output().unwrap()
}

#[test]
fn run_writes_trace_report_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = write(tmp.path(), "run.toml", &lasso_config(&out, "method1"));
    let result = fbls(&["run", config.to_str().unwrap()], None);
    assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
    for file in ["trace.csv", "report.txt", "summary.txt"] {
        assert!(out.join(file).is_file(), "missing {file}");
    }
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.lines().next().unwrap().starts_with("k,"));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("descent"));
}

#[test]
fn env_var_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let configured = tmp.path().join("configured");
    let overridden = tmp.path().join("overridden");
    let config = write(tmp.path(), "run.toml", &lasso_config(&configured, "method2"));
    let result = fbls(&["run", config.to_str().unwrap()], Some(&overridden));
    assert_eq!(result.status.code(), Some(0));
    assert!(overridden.join("trace.csv").is_file());
    assert!(!configured.exists());
}

#[test]
fn unsatisfiable_certificate_is_rejected_before_solving() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let text = format!(
        r#"
output_dir = "{}"

[problem]
family = "p_power_nonneg"
p = 0.5

[solver]
method = "method1"

[[certificates]]
name = "stepsize_floor"
"#,
        out.display()
    );
    let config = write(tmp.path(), "run.toml", &text);
    let result = fbls(&["run", config.to_str().unwrap()], None);
    assert_eq!(result.status.code(), Some(2));
    assert!(!out.join("trace.csv").exists());
}

#[test]
fn invalid_parameters_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let text = lasso_config(&out, "method1")
        .replace("max_iterations = 300", "max_iterations = 300\n\n[solver.params]\ntheta = 1.2");
    let config = write(tmp.path(), "run.toml", &text);
    let result = fbls(&["run", config.to_str().unwrap()], None);
    assert_eq!(result.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&result.stderr).is_empty());

    let missing = fbls(&["run", tmp.path().join("absent.toml").to_str().unwrap()], None);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn compare_writes_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cmp");
    let a = write(tmp.path(), "m1.toml", &lasso_config(&out, "method1"));
    let b = write(tmp.path(), "m2.toml", &lasso_config(&out, "method2"));
    let result = fbls(&["compare", a.to_str().unwrap(), b.to_str().unwrap(), "--gap", "1e-8"], None);
    assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
    let table = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("method1"));
    assert!(lines[2].starts_with("method2"));
}

#[test]
fn listings_name_every_family_and_certificate() {
    let problems = String::from_utf8(fbls(&["list-problems"], None).stdout).unwrap();
    for family in ["lasso", "p_power_nonneg", "box_least_squares", "strongly_convex_quadratic", "exp_unbounded"] {
        assert!(problems.contains(family), "{family}");
    }
    let certificates = String::from_utf8(fbls(&["list-certificates"], None).stdout).unwrap();
    for name in ["descent", "fejer", "rate_1k", "residual_decay", "stepsize_floor", "cross_validation"] {
        assert!(certificates.contains(name), "{name}");
    }
}
