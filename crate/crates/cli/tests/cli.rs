use std::process::{Command, Output};

fn ddrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddrate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = ddrate(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

const FAST_NUMERICAL: &[&str] = &["--restarts", "1", "--eta", "1e-4", "--grid-points", "16"];

#[test]
fn fig2_has_expected_shape_and_values() {
    let text = stdout_of(&["fig2"]);
    assert!(!text.contains('\r'));
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["snr_db", "rate", "chernoff"]);
    assert_eq!(rows.len(), 40);
    let at = |db: f64, r: u32| -> f64 {
        rows.iter()
            .find(|row| row[0].parse::<f64>().unwrap() == db && row[1] == r.to_string())
            .map(|row| row[2].parse().unwrap())
            .unwrap()
    };
    assert!((at(2.0, 1) - 0.493321).abs() < 1e-3);
    assert!((at(2.0, 7) - 0.792316).abs() < 1e-3);
    assert_eq!(at(0.0, 0), 0.0);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["fig2"],
        vec![
            "design",
            "--rate",
            "2",
            "--snr-db",
            "0",
            "--method",
            "numerical",
            "--seed",
            "7",
        ],
        vec!["pe", "--allocation", "2-1", "--snr-db", "-1,0,1"],
        vec![
            "mc",
            "--allocation",
            "1-1",
            "--snr-db",
            "0",
            "--trials",
            "20000",
            "--mc-seed",
            "3",
        ],
        vec!["allocate", "-n", "3", "-r", "6", "--snr-db", "0"],
    ];
    for args in cases {
        assert_eq!(stdout_of(&args), stdout_of(&args), "{args:?}");
    }
}

#[test]
fn design_json_round_trips_as_quantizer() {
    let text = stdout_of(&[
        "design",
        "--rate",
        "2",
        "--snr-db",
        "0",
        "--method",
        "numerical",
        "--seed",
        "7",
    ]);
    let q = ddrate::Quantizer::from_json(&text).unwrap();
    assert_eq!(q.rate(), 2);
    assert!(q.is_strictly_increasing());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let c = v["chernoff"].as_f64().unwrap();
    assert!((c - 0.437325).abs() < 5e-3, "C = {c}");
    assert_eq!(v["method"], "numerical");
}

#[test]
fn pe_and_mc_columns() {
    let (h, rows) = parse_csv(&stdout_of(&["pe", "--allocation", "2-2", "--snr-db", "0"]));
    assert_eq!(h, ["snr_db", "allocation", "pe", "log10_pe"]);
    let pe: f64 = rows[0][2].parse().unwrap();
    let lg: f64 = rows[0][3].parse().unwrap();
    assert!((pe.log10() - lg).abs() < 1e-12);

    let (h, rows) = parse_csv(&stdout_of(&[
        "mc",
        "--allocation",
        "2-2",
        "--snr-db",
        "0",
        "-t",
        "2",
        "--trials",
        "50000",
    ]));
    assert_eq!(h, ["snr_db", "allocation", "T", "estimate", "std_err"]);
    assert_eq!(rows[0][2], "2");
}

#[test]
fn allocate_ranks_uniform_first() {
    let out = ddrate(&["allocate", "-n", "3", "-r", "6", "--snr-db", "0"]);
    assert!(out.status.success());
    let (h, rows) = parse_csv(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(h, ["allocation", "network_chernoff"]);
    assert_eq!(rows[0][0], "2-2-2");
    assert!(String::from_utf8_lossy(&out.stderr).contains("winner: 2-2-2"));
}

#[test]
fn concavity_passes_for_compander() {
    let out = ddrate(&["concavity", "--snr-db", "-2,0,2", "--rates", "0..7"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn concavity_rejects_negative_slack() {
    let out = ddrate(&[
        "concavity",
        "--snr-db",
        "0",
        "--rates",
        "0..3",
        "--slack",
        "-1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_figure_runs_write_csv_and_gnuplot() {
    let dir = tempfile::tempdir().unwrap();
    let csv3 = dir.path().join("fig3.csv");
    let gp3 = dir.path().join("fig3.gp");
    let mut args = vec![
        "fig3",
        "--rates",
        "0..2",
        "--out",
        csv3.to_str().unwrap(),
        "--gnuplot",
        gp3.to_str().unwrap(),
    ];
    args.extend_from_slice(FAST_NUMERICAL);
    stdout_of(&args);
    let (h, rows) = parse_csv(&std::fs::read_to_string(&csv3).unwrap());
    assert_eq!(h, ["rate", "c_bb", "c_numerical", "c_inf"]);
    assert_eq!(rows.len(), 3);
    assert!(std::fs::read_to_string(&gp3).unwrap().contains("fig3.csv"));

    let mut args = vec!["fig4", "--snr-db", "0", "--allocations", "2-2,3-1"];
    args.extend_from_slice(FAST_NUMERICAL);
    let (h, rows) = parse_csv(&stdout_of(&args));
    assert_eq!(h, ["snr_db", "allocation", "log10_pe"]);
    assert_eq!(rows.len(), 2);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["bogus"],
        vec!["design", "--rate", "2"],
        vec!["design", "--rate", "2", "--snr-db", "0", "--eta", "0"],
        vec!["design", "--rate", "2", "--snr-db", "nan"],
        vec!["pe", "--allocation", "2-x", "--snr-db", "0"],
        vec!["fig2", "--rates", "3..x"],
        vec!["mc", "--allocation", "1", "--snr-db", "0", "--trials", "0"],
    ] {
        assert_eq!(ddrate(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn capacity_errors_exit_one() {
    assert_eq!(
        ddrate(&["design", "--rate", "20", "--snr-db", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ddrate(&["pe", "--allocation", "9-9-9", "--snr-db", "0"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn rebalance_walk_reaches_uniform() {
    let text = stdout_of(&["rebalance", "--allocation", "6-0-0"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.first(), Some(&"6-0-0"));
    assert_eq!(lines.last(), Some(&"2-2-2"));
}
