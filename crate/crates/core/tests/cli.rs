use std::fs;
use std::process::{Command, Output};

use stfem::harness::parse_csv;

fn stfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stfem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL: &[&str] = &["--spatial", "square:4", "--T", "1", "--nt", "4"];

#[test]
fn convergence_csv() {
    let mut args = vec!["convergence", "--levels", "2", "--format", "csv"];
    args.extend_from_slice(SMALL);
    let out = stfem(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&stdout(&out)).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![9 * 4, 49 * 8, 225 * 16]);
    assert!(rows[0].eoc_l2.is_none() && rows[1].eoc_l2.is_some());
    assert!(rows.windows(2).all(|w| w[1].l2 < w[0].l2 && w[1].h1 < w[0].h1));
}

#[test]
fn solve_writes_table_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("row.txt");
    let mut args = vec!["solve", "--solver", "bs", "--out", path.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    let out = stfem(&args);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("L2 error") && lines[0].contains("kappa2"));
    assert!(lines[1].trim_start().starts_with("36 "));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small study\nspatial = interval:6,2\nT = 1\nnt = 3\nformat = csv\nsolver = bs\n").unwrap();
    let out = stfem(&["solve", "--config", cfg.to_str().unwrap(), "--nt", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = parse_csv(&stdout(&out)).unwrap();
    assert_eq!(rows[0].n, 5 * 5);
    // bs reports a unitary X_t
    assert_eq!(rows[0].kappa2, 1.0);
}

#[test]
fn identical_runs_give_identical_csv() {
    let mut args = vec!["convergence", "--levels", "1", "--format", "csv", "--threads", "1"];
    args.extend_from_slice(SMALL);
    let strip_time = |text: String| -> Vec<String> {
        text.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(7);
                f.join(",")
            })
            .collect()
    };
    let a = strip_time(stdout(&stfem(&args)));
    let b = strip_time(stdout(&stfem(&args)));
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    for bad in [
        vec!["solve", "--spatial", "disk:3"],
        vec!["solve", "--solver", "lu"],
        vec!["solve", "--temporal", "graded:0.5"],
        vec!["solve", "--threads", "0"],
        vec!["convergence", "--levels", "6"],
        vec!["solve", "--config", "/nonexistent/run.cfg"],
        vec!["solve", "--no-such-flag"],
        vec!["frobnicate"],
    ] {
        let out = stfem(&bad);
        assert_eq!(out.status.code(), Some(3), "{bad:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = stfem(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("convergence"));
}

#[test]
fn unwritable_output_is_a_failure() {
    let mut args = vec!["solve", "--out", "/nonexistent/dir/out.csv"];
    args.extend_from_slice(SMALL);
    let out = stfem(&args);
    assert_eq!(out.status.code(), Some(2));
}
