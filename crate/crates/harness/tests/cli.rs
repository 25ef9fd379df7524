//! End-to-end checks of the `hibb` binary.

use std::process::Command;

fn hibb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hibb"))
}

const SEED: &str = "00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff";

#[test]
fn run_twice_is_byte_identical() {
    let args = [
        "run",
        "--alloc",
        "slice-spread",
        "--n",
        "32",
        "--mu",
        "8",
        "--ops",
        "24",
        "--seed",
        SEED,
    ];
    let a = hibb().args(args).output().unwrap();
    let b = hibb().args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("run_id,trial,op_index,recourse"));
    assert_eq!(text.lines().count(), 1 + 24);
}

#[test]
fn sweep_emits_one_row_per_density() {
    let out = hibb()
        .args([
            "sweep",
            "--alloc",
            "hi-greedy",
            "--n",
            "32",
            "--mus",
            "2,4,8",
            "--ops",
            "8",
            "--trials",
            "2",
            "--seed",
            SEED,
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 3);
}

#[test]
fn invalid_flags_exit_nonzero_with_usage() {
    let out = hibb().args(["run", "--bogus"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.to_lowercase().contains("usage"), "stderr: {err}");

    let out = hibb()
        .args([
            "run", "--alloc", "nonsense", "--n", "8", "--mu", "2", "--ops", "1",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn verify_suite_exits_zero_on_pass() {
    let out = hibb()
        .args([
            "verify",
            "--suite",
            "accounting",
            "--trials",
            "3",
            "--n",
            "16",
            "--mu",
            "8",
            "--seed",
            SEED,
        ])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.contains("PASS"));
}

#[test]
fn orient_oracle_subcommand() {
    let out = hibb()
        .args([
            "orient-oracle",
            "--cases",
            "50",
            "--max-edges",
            "8",
            "--seed",
            SEED,
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
}

#[test]
fn config_file_provides_defaults_flags_override() {
    let dir = std::env::temp_dir().join("hibb-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("run.conf");
    std::fs::write(
        &cfg_path,
        format!("alloc=single\nn=16\nmu=4\nops=6\nseed={SEED}\n# comment line\n"),
    )
    .unwrap();

    let from_file = hibb()
        .args(["run", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(from_file.status.success());
    let text = String::from_utf8(from_file.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);

    // A flag overrides the file's ops.
    let overridden = hibb()
        .args(["run", "--config", cfg_path.to_str().unwrap(), "--ops", "3"])
        .output()
        .unwrap();
    let text = String::from_utf8(overridden.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 3);
}

#[test]
fn seed_env_var_is_used() {
    let out = hibb()
        .env("HIBB_SEED", SEED)
        .args([
            "run", "--alloc", "single", "--n", "8", "--mu", "2", "--ops", "2",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let with_env = String::from_utf8(out.stdout).unwrap();

    let out2 = hibb()
        .args([
            "run", "--alloc", "single", "--n", "8", "--mu", "2", "--ops", "2", "--seed", SEED,
        ])
        .output()
        .unwrap();
    let with_flag = String::from_utf8(out2.stdout).unwrap();
    assert_eq!(with_env, with_flag);
}
