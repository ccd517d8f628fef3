use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morph-transfer"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = cli(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const SIZES: &[&str] = &["--low", "20", "--medium", "40", "--high", "40", "--dev", "10", "--test", "10"];
const TINY: &[&str] = &["--hidden", "8", "--embedding", "8"];

#[test]
fn every_subcommand_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&[&["synthesize", "--languages", "hun,eng"], SIZES].concat(), dir);
    ok(
        &[&["train", "--source", "hun", "--target", "eng", "--tier", "medium", "--epochs", "1", "--out", "hun.minf"], TINY].concat(),
        dir,
    );
    ok(&["finetune", "--checkpoint", "hun.minf", "--target", "eng", "--epochs", "2", "--out", "eng.minf"], dir);
    let accuracy: f64 = ok(&["evaluate", "--checkpoint", "eng.minf", "--data-dir", "data", "--target", "eng"], dir)
        .trim()
        .parse()
        .unwrap();
    assert!((0.0..=100.0).contains(&accuracy));
    ok(
        &["predict", "--checkpoint", "eng.minf", "--data-dir", "data", "--target", "eng", "--split", "test", "--out", "p.tsv"],
        dir,
    );
    assert_eq!(std::fs::read_to_string(dir.join("p.tsv")).unwrap().lines().count(), 10);
    ok(&["analyze-errors", "--predictions", "p.tsv", "--target", "eng", "--source", "hun", "--window", "5", "--out", "errs"], dir);
    let errors = std::fs::read_to_string(dir.join("errs/errors.csv")).unwrap();
    assert!(errors.contains("examples,5\n"), "{errors}");

    ok(
        &[&["grid", "--source", "hun", "--target", "eng", "--tier", "medium", "--epochs", "1", "--finetune-epochs", "1", "--seed", "1,2", "--out", "g"], TINY].concat(),
        dir,
    );
    assert!(dir.join("g/seed-2/hun-eng/metrics.json").exists());
    let before = std::fs::read(dir.join("g/accuracy-test.csv")).unwrap();
    std::fs::remove_file(dir.join("g/accuracy-test.csv")).unwrap();
    let report = ok(&["report", "--out", "g"], dir);
    assert!(report.contains("| ENG |"));
    assert_eq!(std::fs::read(dir.join("g/accuracy-test.csv")).unwrap(), before);
}

#[test]
fn missing_data_fails_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(&["grid", "--data-dir", "nowhere", "--source", "hun", "--target", "eng"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn help_lists_subcommands() {
    let help = ok(&["--help"], Path::new("."));
    for sub in ["train", "finetune", "predict", "evaluate", "analyze-errors", "report", "grid"] {
        assert!(help.contains(sub), "{sub}");
    }
}
