use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use itid::theory;

fn itid(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itid"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn itid")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn bounds_single_point_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = itid(&["bounds", "--t", "10", "--k", "2", "--n", "10000", "--delta", "0.05", "--gamma", "0.1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("bounds.csv"));
    assert_eq!(rows.len(), 1);
    let gap: f64 = rows[0][5].parse().unwrap();
    let excess: f64 = rows[0][6].parse().unwrap();
    let want = theory::thm1_bound(10, 2, 10_000, 0.05).unwrap();
    assert!((gap - want).abs() < 1e-6, "{gap} vs {want}");
    assert!((excess - (2.0 * want + 0.1 / 2f64.ln())).abs() < 1e-6);
    assert!(dir.path().join("bounds.svg").exists());
}

#[test]
fn plot_false_suppresses_figures() {
    let dir = tempfile::tempdir().unwrap();
    let o = itid(&["bounds", "--plot=false"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("bounds.csv").exists());
    assert!(!dir.path().join("bounds.svg").exists());
}

#[test]
fn invalid_delta_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = itid(&["bounds", "--delta", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad-delta"), "{}", stderr(&o));
}

#[test]
fn injected_fault_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = itid(&["theory-check", "--inject-fault"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL thm4_cross_entropy_optimum"), "{}", stdout(&o));
    let report = fs::read_to_string(dir.path().join("theory_report.csv")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("thm4_cross_entropy_optimum,false,")));
}

#[test]
fn clean_suite_only_fails_the_addition_rule() {
    let dir = tempfile::tempdir().unwrap();
    let o = itid(&["theory-check"], dir.path());
    let failed: Vec<_> = csv_rows(&dir.path().join("theory_report.csv"))
        .into_iter()
        .filter(|r| r[1] == "false")
        .map(|r| r[0].clone())
        .collect();
    assert_eq!(failed, ["thm3_addition_rule"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# bounds grid\nt = 3, 4\nk = 2\nn = 100, 1000\ndelta = 0.1\nplot = false\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = itid(&["bounds", "--config", cfg], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("bounds.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[3] == "0.1"));
    assert!(!dir.path().join("bounds.svg").exists());

    let o = itid(&["bounds", "--config", cfg, "--t", "5", "--plot"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("bounds.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[0] == "5"));
    assert!(dir.path().join("bounds.svg").exists());
}

#[test]
fn malformed_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "seed = 1\nthis line has no separator\n").unwrap();
    let o = itid(&["bounds", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains('2'), "{}", stderr(&o));
}

#[test]
fn augment_sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, "train_per_class = 10\ntest_per_class = 5\ncopies = 1\nepochs = 2\n").unwrap();
    let o = itid(
        &[
            "augment-sweep", "--config", cfg.to_str().unwrap(),
            "--alphas", "0,0.5,1", "--laws", "uniform,center",
            "--repeats", "2", "--datasets", "2", "--plot=false",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("augment.csv"));
    assert_eq!(rows.len(), 2 * 3 * 2);
    for r in &rows {
        let ratio: f64 = r[2].parse().unwrap();
        let err: f64 = r[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&ratio) && (0.0..=1.0).contains(&err));
    }
    assert!(!dir.path().join("augment_ratio.svg").exists());
}

#[test]
fn unknown_law_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = itid(&["augment-sweep", "--laws", "diagonal", "--datasets", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
