use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lexsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexsim")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_fixture(dir: &Path) -> String {
    let o = lexsim(&["fixture", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    // lighter training keeps the test quick
    let cfg = dir.join("run.toml");
    let text = fs::read_to_string(&cfg).unwrap().replace("epochs = 3", "epochs = 1");
    fs::write(&cfg, text).unwrap();
    cfg.to_string_lossy().into_owned()
}

#[test]
fn run_all_builds_every_artifact_then_skips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let o = lexsim(&["-c", &cfg, "--workers", "1", "run-all"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["dataset.tsv", "report.tsv", "eval.tsv", "hybrid.vec", "manifest.tsv", "features/PND.tsv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let eval = fs::read_to_string(out.join("eval.tsv")).unwrap();
    assert_eq!(eval.lines().filter(|l| !l.starts_with('#')).count(), 3);

    let again = lexsim(&["-c", &cfg, "--workers", "1", "run-all"]);
    assert!(again.status.success());
    let log = stderr(&again);
    assert_eq!(log.matches("skipped").count(), 11, "{log}");

    // a flag that changes only the report-side parameters reruns pairs onwards
    let capped = lexsim(&["-c", &cfg, "pairs", "--max-pairs-per-signature", "5"]);
    assert!(capped.status.success(), "{}", stderr(&capped));
    assert!(stderr(&capped).contains("pairs: ran"));
}

#[test]
fn bad_alpha_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let o = lexsim(&["-c", &cfg, "walk", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("alpha"));
}

#[test]
fn missing_inputs_and_usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    let o = lexsim(&["-c", &cfg, "align"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("missing input"));
    assert_eq!(lexsim(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(lexsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_kb_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path());
    fs::write(dir.path().join("kb/relations.tsv"), "a\thypernym\tmissing\n").unwrap();
    let o = lexsim(&["-c", &cfg, "import-kb"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
