use std::path::Path;
use std::process::{Command, Output};

fn classtab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_classtab"))
        .args(args)
        .env_remove("CLASSTAB_STAGING")
        .output()
        .expect("run classtab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tabulate(out: &Path, bound: &str, extra: &[&str]) -> Output {
    let mut args = vec!["tabulate", "--bound", bound, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    classtab(&args)
}

#[test]
fn oracle_prints_class_group() {
    let o = classtab(&["oracle", "--delta", "23"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "h=3 [3]");
    let o = classtab(&["oracle", "--delta", "3299"]);
    assert_eq!(stdout(&o).trim(), "h=27 [3, 9]");
}

#[test]
fn oracle_rejects_non_discriminants() {
    let o = classtab(&["oracle", "--delta", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn smallest_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = tabulate(dir.path(), "8", &["--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("classes.csv")).unwrap();
    assert_eq!(csv, "|delta|,h,divisors\n3,1,\n4,1,\n7,1,\n");
}

#[test]
fn tabulate_verify_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().to_str().unwrap();
    let o = tabulate(dir.path(), "10^5", &["--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("30392 records"));
    assert!(dir.path().join("run.json").exists());

    let o = classtab(&["verify", "--bound", "10^5", "--table", table]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("\"pass\": true"));
    assert!(stdout(&o).contains("\"X\": 12499"));

    let o = classtab(&["stats", "--table", table, "--report", "idoneal"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("max |delta| = 5460"));
    assert!(!stdout(&o).lines().any(|l| l == "7392"));

    let o = classtab(&["stats", "--table", table, "--report", "littlewood"]);
    assert!(o.status.success());
    let o = classtab(&["stats", "--table", table, "--report", "cohen-lenstra"]);
    assert!(stderr(&o).contains("c(100000)"));
    let out = dir.path().join("exotic.csv");
    let o = classtab(&["stats", "--table", table, "--report", "exotic", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(out).unwrap().starts_with("kind,"));
}

#[test]
fn rerun_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--format", "bin", "--format", "csv", "--chunk-mem", "65536"];
    assert!(tabulate(dir.path(), "20000", &args).status.success());
    let bin = std::fs::read(dir.path().join("classes.bin")).unwrap();
    let o = tabulate(dir.path(), "20000", &args);
    assert!(stdout(&o).contains("(unchanged)"));
    assert_eq!(std::fs::read(dir.path().join("classes.bin")).unwrap(), bin);
}

#[test]
fn staging_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let staging = dir.path().join("elsewhere");
    let o = Command::new(env!("CARGO_BIN_EXE_classtab"))
        .args(["tabulate", "--bound", "5e5", "--chunk-mem", "65536", "--out"])
        .arg(dir.path().join("out"))
        .env("CLASSTAB_STAGING", &staging)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(staging.exists());
    assert!(!dir.path().join("out").join("staging").exists());
}

#[test]
fn failed_verification_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert!(tabulate(dir.path(), "5000", &["--format", "csv"]).status.success());
    let path = dir.path().join("classes.csv");
    let text = std::fs::read_to_string(&path).unwrap().replace("\n23,3,3\n", "\n23,1,\n");
    std::fs::write(&path, text).unwrap();
    let o = classtab(&["verify", "--bound", "5000", "--table", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("\"pass\": false"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tabulate(dir.path(), "7", &[]).status.code(), Some(2));
    assert_eq!(tabulate(dir.path(), "100", &["--threads", "0"]).status.code(), Some(2));
    assert_eq!(tabulate(dir.path(), "100", &["--class", "3mod8"]).status.code(), Some(2));
    assert_eq!(tabulate(dir.path(), "2^41", &[]).status.code(), Some(2));
}

#[test]
fn unreadable_tables_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = classtab(&["verify", "--bound", "100", "--table", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::write(dir.path().join("classes.bin"), [1u8, 2, 3]).unwrap();
    let o = classtab(&["stats", "--table", dir.path().to_str().unwrap(), "--report", "idoneal"]);
    assert_eq!(o.status.code(), Some(3));
}
