use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mixbank"))
}

#[test]
fn validate_default_setup_passes() {
    let out = bin().arg("validate").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[PASS]"));
    assert!(!text.contains("[FAIL]"));
}

#[test]
fn validate_too_few_channels_fails_with_nonzero_exit() {
    let out = bin().args(["validate", "--channels", "11"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("[FAIL]"));
}

#[test]
fn bad_flag_value_exits_with_error() {
    let out = bin()
        .args(["demo", "--snr", "loud"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn demo_is_reproducible_across_invocations() {
    let args = [
        "demo",
        "--seed",
        "9",
        "--snr",
        "15",
        "--grid-points",
        "16000",
        "--grid-half-width-cycles",
        "800",
    ];
    let a = bin().args(args).output().unwrap();
    let b = bin().args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn experiment_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "experiment",
            "--trials",
            "2",
            "--snr-list",
            "noiseless",
            "--channel-subsets",
            "51",
            "--grid-points",
            "16000",
            "--grid-half-width-cycles",
            "800",
            "--out-dir",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    for file in ["trials.csv", "summary.csv", "manifest.txt"] {
        assert!(dir.path().join(file).is_file(), "missing {file}");
    }
    let trials = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 3); // header + 2 rows
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "trials = 7\nchannel_subsets = 51\n").unwrap();
    let out = bin()
        .args([
            "experiment",
            "--config",
            cfg_path.to_str().unwrap(),
            "--trials",
            "1",
            "--snr-list",
            "noiseless",
            "--grid-points",
            "16000",
            "--grid-half-width-cycles",
            "800",
            "--out-dir",
        ])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let trials = std::fs::read_to_string(dir.path().join("out/trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 2, "flag should override the file");
}
