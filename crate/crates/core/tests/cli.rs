use std::process::Command;

fn lemons(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_lemons"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

fn json(stdout: &str) -> serde_json::Value {
    serde_json::from_str(stdout).expect("valid json")
}

#[test]
fn unravel_csv() {
    let (out, _, code) = lemons(&["unravel", "--pi", "0.75", "--tol", "0.02"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "round,cutoff,buyer_offer");
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[11], "10,0.0173415299158,0.00867076495792");
    assert!(out.ends_with("# converged=true rounds=10 limit=0.0\n"));
    assert!(!out.contains('\r'));
}

#[test]
fn unravel_rejects_low_pi() {
    let (out, err, code) = lemons(&["unravel", "--pi", "0.4"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("pi must be ≥ 0.5"), "{err}");
}

#[test]
fn unravel_boundary() {
    let (out, _, code) = lemons(&["unravel", "--pi", "0.5", "--max-rounds", "5"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().skip(1).filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("1.0")));
    assert!(out.contains("converged=false"));
}

#[test]
fn unravel_json() {
    let (out, _, code) = lemons(&["unravel", "--pi", "0.6", "--tol", "1e-3", "--format", "json"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["trace"]["rounds"], 38);
    assert_eq!(v["trace"]["converged"], true);
}

#[test]
fn eq_keys_and_values() {
    let (out, _, code) = lemons(&["eq", "--p", "1", "--c", "0.25"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["p", "c", "theta_hat", "q", "e_disclosed", "regime", "selection_note"]);
    assert_eq!(v["theta_hat"], 0.25);
    assert_eq!(v["q"], 0.5);

    let v = json(&lemons(&["eq", "--p", "0.9", "--c", "0.2275"]).0);
    assert_eq!(v["theta_hat"], 0.184027777778);
    assert_eq!(v["regime"], "interior");

    let v = json(&lemons(&["eq", "--p", "0", "--c", "0.1"]).0);
    assert_eq!(v["regime"], "degenerate-p0");
    assert_eq!(v["q"], 1.0);

    let v = json(&lemons(&["eq", "--p", "0.4", "--c", "0.42", "--selection", "pessimistic"]).0);
    assert_eq!(v["regime"], "no-disclosure");
    assert!(v["selection_note"].as_str().unwrap().contains("multiple equilibria"));
}

#[test]
fn eq_csv_quotes_the_note() {
    let (out, _, code) = lemons(&["eq", "--p", "0.5", "--c", "0.375", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("p,c,theta_hat,q,e_disclosed,regime,selection_note"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("0.5,0.375,0.0,0.0,0.5,all-disclose-corner,\"continuum"), "{row}");
}

#[test]
fn eq_rejects_bad_policy() {
    assert_eq!(lemons(&["eq", "--p", "1.2", "--c", "0.1"]).2, 2);
    assert_eq!(lemons(&["eq", "--p", "0.5", "--c", "-0.1"]).2, 2);
    assert_eq!(lemons(&["eq", "--p", "0.5"]).2, 2);
    assert_eq!(lemons(&["eq", "--p", "abc", "--c", "0.1"]).2, 2);
}

#[test]
fn curve_file() {
    let dir = std::env::temp_dir().join(format!("lemons-curve-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("curve.csv");
    let (out, err, code) = lemons(&[
        "curve",
        "--p-from",
        "0.05",
        "--p-to",
        "1",
        "--p-step",
        "0.05",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,c_star,profit_star,q_at_optimum,regime");
    assert_eq!(lines.len(), 21);
    assert_eq!(lines[20], "1.0,0.25,0.125,0.5,interior");
    let profits: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(profits.windows(2).all(|w| w[1] < w[0]));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn curve_through_p_min() {
    let p_min = "0.7675918792439983";
    let (out, _, code) = lemons(&["curve", "--p-from", p_min, "--p-to", p_min, "--p-step", "0.1"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().nth(1), Some("0.767591879244,0.205401353459,0.205401353459,0.0,interior"));

    // just below the boundary the corner branch takes over with the same value
    let (out, _, _) = lemons(&["curve", "--p-from", "0.7675918792", "--p-to", "0.7675918792", "--p-step", "0.1"]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "0.7675918792");
    assert!((row[2].parse::<f64>().unwrap() - 0.2054013535).abs() < 1e-10);
    assert_eq!(row[3], "0.0");
}

#[test]
fn curve_rejects_bad_range() {
    assert_eq!(lemons(&["curve", "--p-from", "0", "--p-to", "1", "--p-step", "0.1"]).2, 2);
    assert_eq!(lemons(&["curve", "--p-from", "0.8", "--p-to", "0.5", "--p-step", "0.1"]).2, 2);
    assert_eq!(lemons(&["curve", "--p-from", "0.1", "--p-to", "1.1", "--p-step", "0.1"]).2, 2);
    assert_eq!(lemons(&["curve", "--p-from", "0.1", "--p-to", "1", "--p-step", "0"]).2, 2);
}

#[test]
fn optimize_outputs() {
    let v = json(&lemons(&["optimize", "--p", "0.9"]).0);
    assert_eq!(v["c_star"], 0.2275);
    assert_eq!(v["profit_star"], 0.143767361111);
    assert!(v.get("discrepancy").is_none());

    let v = json(&lemons(&["optimize", "--p", "0.9", "--numeric", "--resolution", "1e-7"]).0);
    assert!(v["discrepancy"].as_f64().unwrap() <= 1e-6);

    let v = json(&lemons(&["optimize", "--p", "0.5"]).0);
    assert_eq!((v["c_star"].as_f64(), v["profit_star"].as_f64()), (Some(0.375), Some(0.375)));
    assert_eq!(v["regime"], "corner");

    assert_eq!(lemons(&["optimize", "--p", "0"]).2, 2);
}

#[test]
fn simulate_baseline() {
    let (out, _, code) = lemons(&["simulate", "--p", "1", "--c", "0.25", "--n", "100000", "--seed", "7"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!((v["dmv_profit_emp"].as_f64().unwrap() - 0.125).abs() <= 0.005);
    assert!((v["q_emp"].as_f64().unwrap() - 0.5).abs() <= 0.01);
    for key in ["welfare", "ci_half_width", "payment_bins", "attractor", "abs_error", "iterations"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn simulate_reports_both_attractors() {
    let (out, _, code) = lemons(&["simulate", "--p", "0.4", "--c", "0.42", "--n", "20000", "--init", "both"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let attractors: Vec<&str> = v["attractors"].as_array().unwrap().iter().map(|a| a["attractor"].as_str().unwrap()).collect();
    assert_eq!(attractors, ["all-disclose-corner", "no-disclosure"]);
}

#[test]
fn simulate_non_convergence_exit_code() {
    let (out, err, code) = lemons(&["simulate", "--p", "0.7", "--c", "0.3", "--n", "5000", "--iters", "1", "--tol", "1e-15"]);
    assert_eq!(code, 3);
    assert_eq!(json(&out)["converged"], false);
    assert!(err.contains("did not converge"));
}

#[test]
fn simulate_rejects_bad_flags() {
    assert_eq!(lemons(&["simulate", "--p", "0.9", "--c", "0.2", "--n", "10"]).2, 2);
    assert_eq!(lemons(&["simulate", "--p", "0", "--c", "0.2"]).2, 2);
    assert_eq!(lemons(&["simulate", "--p", "0.9", "--c", "0.2", "--init", "sideways"]).2, 2);
}

#[test]
fn manifest_replays_byte_identically() {
    let dir = std::env::temp_dir().join(format!("lemons-manifest-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let manifest = dir.join("run.json");
    let m = manifest.to_str().unwrap();

    let (first, _, code) = lemons(&["simulate", "--p", "0.8", "--c", "0.21", "--n", "20000", "--seed", "3", "--manifest", m]);
    assert_eq!(code, 0);
    let (second, _, _) = lemons(&["simulate", "--p", "0.8", "--c", "0.21", "--n", "20000", "--seed", "3"]);
    assert_eq!(first, second);

    let record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(record["command"], "simulate");
    assert_eq!(record["seed"], 3);
    assert_eq!(record["tool_version"], env!("CARGO_PKG_VERSION"));
    assert!(!record["args"].as_array().unwrap().iter().any(|a| a == "--manifest"));

    let (out, _, code) = lemons(&["replay", m]);
    assert_eq!(code, 0);
    assert!(out.starts_with("checksum ok"));

    let mut tampered = record.clone();
    tampered["output_checksum"] = serde_json::json!("00");
    std::fs::write(&manifest, tampered.to_string()).unwrap();
    assert_eq!(lemons(&["replay", m]).2, 1);
    std::fs::remove_dir_all(&dir).ok();
}
