use std::fs;
use std::process::{Command, Output};

fn hisd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hisd"))
        .args(args)
        .env("HISD_THREADS", "2")
        .output()
        .expect("spawn hisd")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mq.csv");
    let o = hisd(&[
        "run",
        "--model",
        "minyaev-quapp",
        "--k",
        "1",
        "--x0",
        "1,1",
        "--v",
        "0,1",
        "--tau",
        "1/256",
        "--T",
        "1",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,v1_1,v1_2"));
    assert_eq!(lines.count(), 257);
    // Only the target file remains; the temporary was renamed into place.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn run_normalizes_the_initial_frame() {
    let o = hisd(&[
        "run", "--model", "eckhardt", "--k", "2", "--x0", "-2,1", "--v", "-1,3", "--v", "3,1",
        "--tau", "1/32", "--T", "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let first: Vec<f64> = out
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    let s = 10f64.sqrt();
    let want = [0.0, -2.0, 1.0, -1.0 / s, 3.0 / s, 3.0 / s, 1.0 / s];
    for (g, w) in first.iter().zip(want) {
        assert!((g - w).abs() < 1e-15, "{first:?}");
    }
    assert_eq!(out.lines().count(), 34);
}

#[test]
fn energy_column_is_optional() {
    let o = hisd(&[
        "run", "--model", "eckhardt", "--x0", "0,0", "--v", "1,0", "--tau", "1/4", "--energy",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("t,x1,x2,v1_1,v1_2,energy\n"));
    // E(0) = 2/e + 4
    let e: f64 = out
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((e - (2.0 / std::f64::consts::E + 4.0)).abs() < 1e-15, "{e}");

    let o = hisd(&[
        "run",
        "--model",
        "toy-rotational",
        "--x0",
        "1,0",
        "--v",
        "0,1",
        "--tau",
        "1/4",
        "--energy",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn json_run_carries_intermediates() {
    let o = hisd(&[
        "run",
        "--model",
        "toy-rotational",
        "--x0",
        "1,0",
        "--v",
        "0,1",
        "--tau",
        "1/2",
        "--format",
        "json",
        "--record-intermediates",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for key in [
        "\"config\"",
        "\"rows\"",
        "\"rates\"",
        "\"checks\"",
        "\"tilde_vectors\"",
        "\"ghisd\"",
    ] {
        assert!(out.contains(key), "missing {key}");
    }
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &[
            "run", "--model", "eckhardt", "--x0", "1,0", "--v", "0,1", "--tau", "1/2x",
        ][..],
        &[
            "run", "--model", "nowhere", "--x0", "1,0", "--v", "0,1", "--tau", "1/2",
        ],
        &[
            "run", "--model", "eckhardt", "--x0", "1,0", "--v", "0,1", "--tau", "0.3",
        ],
        &[
            "run", "--model", "eckhardt", "--x0", "1,0", "--v", "1,1", "--v", "1,0", "--tau", "1/2",
        ],
        &[
            "run", "--model", "eckhardt", "--k", "2", "--x0", "1,0", "--v", "0,1", "--tau", "1/2",
        ],
        &[
            "run",
            "--model",
            "toy-rotational",
            "--mode",
            "hisd",
            "--x0",
            "1,0",
            "--v",
            "0,1",
            "--tau",
            "1/2",
        ],
        &["converge", "--preset", "table1", "--taus", ""],
        &["converge", "--preset", "table1", "--taus", "1/48,1/96"],
        &["converge", "--preset", "table7"],
        &["bogus"],
    ] {
        let o = hisd(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty(), "{args:?} printed no diagnostic");
    }
}

#[test]
fn malformed_tau_reports_parse_error() {
    let o = hisd(&[
        "run",
        "--model",
        "eckhardt",
        "--x0",
        "1,0",
        "--v",
        "0,1",
        "--tau",
        "one/eight",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot parse step size"));
}

#[test]
fn help_and_version_exit_zero() {
    assert!(hisd(&["--help"]).status.success());
    assert!(hisd(&["--version"]).status.success());
}

#[test]
fn unwritable_output_exits_two() {
    let o = hisd(&[
        "run",
        "--model",
        "eckhardt",
        "--x0",
        "1,0",
        "--v",
        "0,1",
        "--tau",
        "1/4",
        "-o",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn converge_table1_matches_expectation() {
    let o = hisd(&["converge", "--preset", "table1", "--expect", "table1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "tau,err_x,rate_x,err_v1,rate_v1");
    assert_eq!(rows.len(), 5);
    let first: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(first[2], "");
    let err_x: f64 = first[1].parse().unwrap();
    assert!((err_x / 2.19e-2 - 1.0).abs() <= 0.05);
    assert!(stderr(&o).contains("14/14 checks passed"));
}

#[test]
fn converge_table3_first_position_error() {
    let o = hisd(&["converge", "--preset", "table3", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let at = out.find("\"err_x\":").unwrap() + "\"err_x\":".len();
    let val: f64 = out[at..]
        .trim_start()
        .split([',', '\n'])
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((val / 1.41e-2 - 1.0).abs() <= 0.05, "{val}");
}

#[test]
fn converge_manual_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rates.csv");
    let o = hisd(&[
        "converge",
        "--model",
        "toy-rotational",
        "--x0",
        "1,0.5",
        "--v",
        "0,1",
        "--T",
        "1",
        "--taus",
        "1/16,1/32,1/64",
        "--ref-tau",
        "1/1024",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(path).unwrap();
    let rates: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rates.len(), 2);
    assert!(rates.iter().all(|r| (0.8..1.3).contains(r)), "{rates:?}");
}

#[test]
fn check_suites_pass() {
    for args in [
        &["check", "--suite", "lemmas", "--preset", "table2"][..],
        &["check", "--suite", "derivatives"],
        &["check", "--suite", "ghisd-equiv"],
    ] {
        let o = hisd(args);
        assert!(o.status.success(), "{args:?}: {}{}", stdout(&o), stderr(&o));
        let out = stdout(&o);
        assert!(out.lines().any(|l| l.starts_with("PASS")));
        assert!(!out.contains("FAIL"));
    }
    let o = hisd(&["check", "--suite", "ghisd-equiv"]);
    assert!(stdout(&o).contains("max component deviation"));
}

#[test]
fn check_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checks.json");
    let o = hisd(&[
        "check",
        "--suite",
        "derivatives",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(path).unwrap();
    assert!(text.contains("\"checks\"") && text.contains("derivatives eckhardt"));
}
