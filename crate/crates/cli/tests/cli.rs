use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_perturbqp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 6] = ["--count", "4", "--m-range", "5:12", "--n-range", "10:24"];

fn experiment(cmd: &str, suite: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--suite", suite, "--seed", "7", "--out", path(out)];
    args.extend_from_slice(&SMALL);
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn solve_prints_summary() {
    let out = run(&["solve", path(&fixture("hs21.qps")), "--crossover"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("HS21"), "{text}");
    assert!(text.contains("converged"), "{text}");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["solve"]).status.code(), Some(1));
    assert_eq!(
        run(&["solve", path(&fixture("dq1.qps")), "--epsilon", "-1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["solve", "/nonexistent/file.qps"]).status.code(),
        Some(3)
    );

    let dir = tempfile::tempdir().unwrap();
    let out = experiment("ratios", "qts3", &dir.path().join("r.csv"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let out = experiment("ratios", "qts1", &dir.path().join("missing/dir/r.csv"), &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_is_read_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.cfg");
    fs::write(&good, "# solver\nepsilon = 0\nmax_iterations = 40\n").unwrap();
    let out = run(&["solve", path(&fixture("dq1.qps")), "--config", path(&good)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "no_such_key = 1\n").unwrap();
    let out = run(&["solve", path(&fixture("dq1.qps")), "--config", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn experiments_are_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["ratios", "crossover"] {
        for suite in ["qts1", "qts2"] {
            let a = dir.path().join(format!("{cmd}-{suite}-a.csv"));
            let b = dir.path().join(format!("{cmd}-{suite}-b.csv"));
            let c = dir.path().join(format!("{cmd}-{suite}-c.csv"));
            for (file, extra) in [(&a, &[][..]), (&b, &[][..]), (&c, &["--sequential"][..])] {
                let out = experiment(cmd, suite, file, extra);
                assert_eq!(
                    out.status.code(),
                    Some(0),
                    "{}",
                    String::from_utf8_lossy(&out.stderr)
                );
            }
            let first = fs::read(&a).unwrap();
            assert!(!first.is_empty());
            assert_eq!(first, fs::read(&b).unwrap(), "{cmd} {suite}");
            assert_eq!(first, fs::read(&c).unwrap(), "{cmd} {suite} sequential");
        }
    }
}

#[test]
fn generated_files_feed_the_directory_suite() {
    let dir = tempfile::tempdir().unwrap();
    let qps = dir.path().join("qps");
    fs::create_dir(&qps).unwrap();
    let out = run(&[
        "generate",
        "--kind",
        "qts1",
        "--seed",
        "3",
        "--count",
        "3",
        "--out",
        path(&qps),
        "--m-range",
        "4:8",
        "--n-range",
        "8:16",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut names: Vec<_> = fs::read_dir(&qps)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names, ["qts1-3.qps", "qts1-4.qps", "qts1-5.qps"]);

    let csv = dir.path().join("report.csv");
    let out = run(&[
        "crossover",
        "--suite",
        path(&qps),
        "--seed",
        "0",
        "--out",
        path(&csv),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    // header, three instances, average and percentile rows
    assert_eq!(text.lines().count(), 6, "{text}");
}
