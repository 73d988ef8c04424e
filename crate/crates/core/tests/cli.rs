use degenlab::cli::dispatch;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("degenlab").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn distance_prints_value() {
    let (code, out, _) = run(&["distance", "--n", "1", "--m", "1", "--d1", "0", "--d1p", "0", "--d2", "0", "--d2p", "0", "--x", "1,0", "--y", "0,0"]);
    assert_eq!(code, 0);
    assert_eq!(out, "1.0\n");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, out, err) = run(&["distance", "--foo"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("Usage"));
}

#[test]
fn invalid_parameters_exit_one() {
    let (code, _, err) = run(&["poincare", "--family", "interval", "--r", "1", "--grid", "4"]);
    assert_eq!(code, 1);
    assert!(err.contains("odd"));
    let (code, _, _) = run(&["distance", "--d1", "1.5", "--x", "1", "--y", "0"]);
    assert_eq!(code, 1);
}

#[test]
fn sweep_reports_slope_near_minus_two() {
    let (code, out, _) = run(&["sweep", "--family", "cube", "--d1", "0", "--d1p", "0.75", "--radii", "4:64:geometric:9", "--graded", "129:1.02"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("# {") && lines[0].contains("\"build\":\"degenlab-"));
    assert_eq!(lines[1], "r,gap,normalized,cells,residual,iterations");
    assert_eq!(lines.len(), 2 + 9 + 1);
    let footer: serde_json::Value = serde_json::from_str(lines[11].trim_start_matches("# ")).unwrap();
    let slope = footer["slope"].as_f64().unwrap();
    assert!((slope + 2.0).abs() < 0.1, "{slope}");
}

#[test]
fn reports_are_reproducible_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let (code, out, _) = run(&["sde", "--deltap", "0.5", "--x0", "1", "--a", "0", "--b", "3", "--trials", "500", "--seed", "9", "--out", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.is_empty());
    }
    let (sa, sb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(sa, sb);
    let v: serde_json::Value = serde_json::from_slice(&sa).unwrap();
    for k in ["deltap", "x0", "a", "b", "dt", "nPaths", "seed", "empirical", "stderr", "oracle", "censored"] {
        assert!(v["result"].get(k).is_some(), "missing {k}");
    }
    assert_eq!(v["config"]["params"]["seed"], 9);
}

#[test]
fn jobs_do_not_change_output() {
    let args = ["checks", "--suite", "scaling", "--trials", "2000", "--seed", "3"];
    let (_, one, _) = run(&args);
    let mut more = args.to_vec();
    more.extend(["--jobs", "2"]);
    let (code, two, _) = run(&more);
    assert_eq!(code, 0);
    assert_eq!(one, two);
}

#[test]
fn accept_suite_exit_code_matches_failures() {
    let (code, out, _) = run(&["accept", "geometry", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert_eq!(if v["footer"]["failed"] == 0 { 0 } else { 2 }, code);
}

#[test]
fn counterexample_table() {
    let (code, out, _) = run(&["counterexample", "--d1", "0.5", "--values", "1000,1000000"]);
    assert_eq!(code, 0);
    let row: Vec<&str> = out.lines().nth(2).unwrap().split(',').collect();
    let (ratio, bound): (f64, f64) = (row[3].parse().unwrap(), row[4].parse().unwrap());
    assert!(ratio <= bound);
}
