//! Exit-code contract and byte-determinism of the command-line front end.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latlab"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_temp(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("latlab-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn usage_errors_exit_2() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["lambda1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["lambda1", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lambda1_reports_and_rejects_singular_bases() {
    let cfg = configs_dir().join("lambda1_k2.toml");
    let out = bin().args(["lambda1", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("lambda1 = 5.0000000000000000e-1"));

    let bad = write_temp("singular.toml", "m = 1\nn = 1\nbasis = [[1, 1], [1, 1]]\n");
    let out = bin().args(["lambda1", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
}

#[test]
fn nondiv_precondition_violations_exit_2() {
    // ladder entry above rho
    let cfg = write_temp(
        "bad_ladder.toml",
        "m = 1\nn = 1\ndiag = [10, 0.1]\nball_center = [0.5]\nball_radius = 0.5\n\
         rho = 0.15\neps_ladder = [0.12, 0.2]\nsamples = 100\n",
    );
    let out = bin().args(["nondiv", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // zero samples
    let cfg = write_temp(
        "no_samples.toml",
        "m = 1\nn = 1\ndiag = [10, 0.1]\nball_center = [0.5]\nball_radius = 0.5\n\
         rho = 1\neps_ladder = [0.12, 0.2]\nsamples = 0\n",
    );
    let out = bin().args(["nondiv", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn equidist_single_point_exits_3() {
    let cfg = write_temp(
        "one_point.toml",
        "m = 1\nn = 1\nrays = [[1, 1]]\nfloor_values = [3]\nquad_points = 256\n",
    );
    let out = bin().args(["equidist", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn equidist_zero_test_function_exits_0() {
    let cfg = write_temp(
        "zero_psi.toml",
        "m = 1\nn = 1\npsi = \"zero\"\nrays = [[1, 1]]\nfloor_values = [2, 3, 4]\n\
         quad_points = 64\n",
    );
    let out = bin().args(["equidist", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("below"), "stdout: {stdout}");
}

#[test]
fn selftest_passes_and_injection_hook_fails_it() {
    let out = bin().args(["selftest", "--seed", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("all checks passed"));

    let out = bin()
        .args(["selftest", "--seed", "3"])
        .env("LATLAB_SELFTEST_INJECT", "det_perturbation")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn selftest_output_is_reproducible() {
    let a = bin().args(["selftest", "--seed", "9"]).output().unwrap();
    let b = bin().args(["selftest", "--seed", "9"]).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = std::env::temp_dir().join("latlab-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let one = dir.join("threads1.csv");
    let many = dir.join("threads8.csv");
    let cfg = configs_dir().join("nondiv_k2.toml");
    let run = |threads: &str, out: &Path| {
        let status = bin()
            .args(["nondiv", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .env("LATLAB_THREADS", threads)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    };
    run("1", &one);
    run("8", &many);
    assert_eq!(std::fs::read(&one).unwrap(), std::fs::read(&many).unwrap());
}
