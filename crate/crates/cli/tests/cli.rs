use std::path::Path;
use std::process::{Command, Output};

use ofdmqkd_cli::sweep::CSV_HEADER;

fn ofdmqkd(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ofdmqkd"))
        .args(args)
        .env("OFDMQKD_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn sweep(out: &Path, threads: &str) -> String {
    let out = out.to_str().unwrap();
    let args = [
        "sweep", "--scheme", "scheme1", "--scheme", "dwdm", "--n", "4", "--n", "8", "--grid", "log:1e-3:1e-1:5",
        "--optimize", "--out", out,
    ];
    let o = ofdmqkd(&args, threads);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_to_string(out).unwrap()
}

#[test]
fn sweep_csv_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let one = sweep(&dir.path().join("a.csv"), "1");
    let many = sweep(&dir.path().join("b.csv"), "4");
    assert_eq!(one, many);
    let mut lines = one.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    // (scheme1, scheme1-opt) x N in {4, 8} plus one baseline series.
    assert_eq!(lines.count(), 5 * 5);
}

#[test]
fn empty_config_gives_nominal_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    std::fs::write(&cfg, "# nothing\n").unwrap();
    let o = ofdmqkd(&["rate", "--scheme", "dwdm", "--config", cfg.to_str().unwrap()], "1");
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("r_total              = 3.673131187e7 bit/s"));
}

#[test]
fn invalid_input_exits_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "mu = 0.5\nbogus = 1\n").unwrap();
    let cases: [&[&str]; 4] = [
        &["rate", "--scheme", "scheme1", "--config", cfg.to_str().unwrap()],
        &["rate", "--scheme", "scheme1", "--b", "-1"],
        &["verify", "--trials", "10"],
        &["sweep", "--scheme", "scheme1", "--grid", "log:1e-3:1e-1:1", "--out", "unused.csv"],
    ];
    for args in cases {
        let o = ofdmqkd(args, "1");
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = ofdmqkd(cases[0], "1");
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&o.stderr));
}
