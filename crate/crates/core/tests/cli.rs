use std::process::{Command, Output};

fn smcurve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smcurve"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn norm_prints_factored_value() {
    let o = smcurve(&["norm", "--D", "10", "--disc", "-68"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("2^2*5"), "{}", stdout(&o));

    let o = smcurve(&["norm", "--D", "10", "--disc", "-68", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["disc"], -68);
    assert_eq!(v["degree_info"], "2");
}

#[test]
fn errors_map_to_exit_codes() {
    let o = smcurve(&["norm", "--D", "7", "--disc", "-24"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    let o = smcurve(&["norm", "--D", "6", "--disc", "-8"]);
    assert_eq!(o.status.code(), Some(1));
    let o = smcurve(&["norm", "--D", "6", "--disc", "5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn calibrate_and_selfcheck() {
    let o = smcurve(&["calibrate", "--D", "6"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "c_6 = 2^6*3^6");

    let o = smcurve(&["selfcheck", "--json"]);
    assert!(o.status.success());
    let v: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.len() >= 5);
    assert!(v.iter().all(|c| c["passed"] == true));
}

#[test]
fn table_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let o = smcurve(&[
        "table",
        "--D",
        "10",
        "--max",
        "40",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let mut r = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        r.headers().unwrap(),
        vec!["disc", "value", "companion", "residual", "flags"]
    );
    let discs: Vec<i64> = r
        .records()
        .map(|row| row.unwrap()[0].parse().unwrap())
        .collect();
    assert!(discs.contains(&-40) && discs.contains(&-68) && !discs.contains(&-20));
    assert!(discs.windows(2).all(|w| w[0].abs() <= w[1].abs()));
}

#[test]
fn eta_search_lists_quotients() {
    let o = smcurve(&["eta-search", "--level", "12", "--pole-order", "1", "--json"]);
    assert!(o.status.success());
    let v: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.len(), 5);
}

#[test]
fn density_cache_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |cache: Option<&std::path::Path>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_smcurve"));
        c.args(["norm", "--D", "6", "--disc", "-163", "--json"]);
        match cache {
            Some(p) => c.env("SMCURVE_CACHE_DIR", p),
            None => c.env_remove("SMCURVE_CACHE_DIR"),
        };
        let o = c.output().unwrap();
        assert!(o.status.success());
        stdout(&o)
    };
    let plain = run(None);
    let cold = run(Some(dir.path()));
    assert!(
        std::fs::read_dir(dir.path()).unwrap().next().is_some(),
        "cache stays empty"
    );
    let warm = run(Some(dir.path()));
    assert_eq!(plain, cold);
    assert_eq!(plain, warm);
}
