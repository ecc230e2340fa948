//! End-to-end checks of the binary: CSV contract, config handling, exit
//! codes, and reproducibility through the actual executable.

use std::path::Path;
use std::process::{Command, Output};

fn xduplex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xduplex"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

const SMALL_SWEEP: &[&str] = &[
    "sweep",
    "--snr-start",
    "20",
    "--snr-stop",
    "30",
    "--snr-step",
    "5",
    "--trials",
    "5000",
    "--seed",
    "3",
];

#[test]
fn sweep_emits_stable_csv() {
    let first = xduplex(SMALL_SWEEP);
    assert!(first.status.success(), "{first:?}");
    let second = xduplex(SMALL_SWEEP);
    assert_eq!(first.stdout, second.stdout, "same config must give same bytes");

    let text = String::from_utf8(first.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap().split(',').count(),
        14,
        "schema has fourteen columns"
    );
    // 3 SNR points x 7 default schemes
    assert_eq!(lines.count(), 21);
    assert!(!text.contains('\r'), "LF line endings only");
}

#[test]
fn worker_flag_does_not_change_output() {
    let mut one = SMALL_SWEEP.to_vec();
    one.extend(["--workers", "1"]);
    let mut four = SMALL_SWEEP.to_vec();
    four.extend(["--workers", "4"]);
    assert_eq!(xduplex(&one).stdout, xduplex(&four).stdout);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = std::env::temp_dir().join(format!("xduplex-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("sweep.cfg");
    std::fs::write(
        &cfg,
        "snr-start = 25\nsnr-stop = 35\nsnr-step = 5\ntrials = 2000\nschemes = xd,hy\nseed = 9\n",
    )
    .unwrap();
    let out_path = dir.join("out.csv");
    let run = xduplex(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "1000",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{run:?}");
    let written = std::fs::read_to_string(&out_path).unwrap();
    // 3 points x 2 schemes + header, trials column reflects the override
    assert_eq!(written.lines().count(), 7);
    assert!(written.lines().nth(1).unwrap().contains(",1000,9,"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn figure_and_modes_produce_tables() {
    let fig = xduplex(&[
        "figure",
        "diversity",
        "--snr-start",
        "20",
        "--snr-stop",
        "30",
        "--snr-step",
        "5",
        "--trials",
        "2000",
        "--schemes",
        "xd,fd-a",
    ]);
    assert!(fig.status.success());
    let text = String::from_utf8(fig.stdout).unwrap();
    assert!(text.starts_with("snr_db,xd_analytic,xd_numeric,fd-a_analytic,fd-a_numeric"));

    let modes = xduplex(&[
        "modes",
        "--snr-start",
        "10",
        "--snr-stop",
        "20",
        "--snr-step",
        "10",
        "--trials",
        "2000",
    ]);
    assert!(modes.status.success());
    let text = String::from_utf8(modes.stdout).unwrap();
    assert!(text.starts_with("snr_db,fd_a,fd_b,hd_a,hd_b,fd_total"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn config_errors_exit_with_code_2() {
    for args in [
        vec!["sweep", "--schemes", "warpdrive", "--trials", "10"],
        vec!["figure", "sparkline", "--trials", "10"],
        vec!["sweep", "--snr-start", "50", "--snr-stop", "10"],
    ] {
        let out = xduplex(&args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}: {out:?}");
    }
    let missing = xduplex(&["sweep", "--config", "/nonexistent/path.cfg"]);
    assert_eq!(missing.status.code(), Some(3), "{missing:?}");
}

#[test]
fn unwritable_output_exits_with_code_3() {
    let out = xduplex(&[
        "sweep",
        "--snr-start",
        "20",
        "--snr-stop",
        "25",
        "--snr-step",
        "5",
        "--trials",
        "10",
        "--out",
        "/nonexistent-dir/sweep.csv",
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    assert!(Path::new("/nonexistent-dir").exists() == false);
}

#[test]
fn selftest_passes_and_exits_zero() {
    let out = xduplex(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("PASS q-gaussian-tail-oracle"));
    assert!(text.contains("checks passed"));
    assert!(!text.contains("FAIL"));
}
