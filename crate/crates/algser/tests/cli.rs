use algser::cli::run_args;
use serde_json::{json, Value};

fn spec(name: &str) -> String {
    format!("{}/specs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> (i32, String) {
    run_args(std::iter::once("algser").chain(args.iter().copied()))
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let (code, out) = run(&all);
    (code, serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}")))
}

#[test]
fn check_fifth_roots_is_algebraic_at_first_twist() {
    let (code, v) = run_json(&["check", &spec("fifth_roots.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "algebraic");
    assert_eq!(v["r"], "1");
    assert_eq!(v["degree"], "1");
    assert!(v["annpoly"].as_str().unwrap().starts_with("y^5 - (t1*x^5 + t2*x^10"));
}

#[test]
fn starved_budget_is_inconclusive() {
    let (code, v) = run_json(&["check", &spec("prime_radicals.json"), "--steps", "1"]);
    assert_eq!(code, 2);
    assert_eq!(v["verdict"], "inconclusive");
    let (code, v) = run_json(&["check", &spec("prime_radicals.json"), "--trunc", "6"]);
    assert_eq!((code, v["verdict"].as_str()), (0, Some("not-algebraic")));
}

#[test]
fn expand_nodal_cubic() {
    let (code, v) = run_json(&["expand", &spec("nodal_cubic.json"), "--trunc", "15"]);
    assert_eq!(code, 0);
    let coeffs = v["coefficients"].as_array().unwrap();
    assert_eq!(coeffs.len(), 15);
    assert_eq!(coeffs[0], json!(["1", "1"]));
    assert_eq!(coeffs[2], json!(["3", "-1/8"]));
    let chain = v["chain"].as_array().unwrap();
    assert_eq!(chain[0]["snc"], false);
    assert!(chain[1..].iter().all(|f| f["snc"] == true));
}

#[test]
fn resolve_reports_stabilization() {
    let (code, text) = run(&["resolve", &spec("nodal_cubic.json"), "--frames", "3"]);
    assert_eq!(code, 0);
    assert_eq!(text.lines().last(), Some("i0: 1"), "{text}");
    assert_eq!(text.lines().count(), 1 + 4 + 1);
}

#[test]
fn annpoly_finds_relations() {
    let (code, v) = run_json(&["annpoly", &spec("geometric.json")]);
    assert_eq!((code, v["annpoly"].as_str()), (0, Some("y - x*y - x")));
    let (code, v) = run_json(&["annpoly", &spec("artin_schreier_p2.json")]);
    assert_eq!((code, v["annpoly"].as_str(), v["verified"].as_bool()), (0, Some("y^2 + x*y + x"), Some(true)));
}

#[test]
fn multivariate_checks() {
    let (code, v) = run_json(&["check", &spec("fifth_roots_diagonal.json")]);
    assert_eq!((code, v["verdict"].as_str(), v["r"].as_str()), (0, Some("algebraic"), Some("1")));
    let (code, v) = run_json(&["check", &spec("radicals_times_x2.json"), "--trunc", "6"]);
    assert_eq!((code, v["verdict"].as_str()), (0, Some("not-algebraic")));
}

#[test]
fn valuation_subcommands() {
    let s = spec("fifth_roots.json");
    let (code, v) = run_json(&["valuation", "value", &s, "--poly", "v^5 - t1*u^5"]);
    assert_eq!((code, v["value"].as_str()), (0, Some("10")));
    let (_, v) = run_json(&["valuation", "classify", &s]);
    assert_eq!((v["verdict"].as_str(), v["degree"].as_str()), (Some("rank-increases"), Some("5")));
    let (_, v) = run_json(&["valuation", "witness", &s, "--budget", "20"]);
    assert_eq!(v["next"], "25");
    let (code, v) = run_json(&["valuation", "corollary", "--schedule", &spec("schedule_f2.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["classification"]["prefix"], json!(["2", "6", "30"]));
    // Residue degrees of the radical arc keep growing, so no witness exists.
    let (code, v) = run_json(&["valuation", "witness", &spec("prime_radicals.json"), "--budget", "5"]);
    assert_eq!(code, 1);
    assert!(v["error"].as_str().unwrap().contains("not applicable"));
}

#[test]
fn reports_are_deterministic() {
    for (cmd, file) in [("check", "fifth_roots.json"), ("expand", "nodal_cubic.json"), ("check", "fifth_roots_diagonal.json")] {
        let full = [cmd, &spec(file), "--format", "json"];
        assert_eq!(run(&full), run(&full));
    }
}

#[test]
fn errors_exit_with_one() {
    let (code, out) = run(&["check", r#"{"field": {"char": 5}, "rule": {"kind": "bogus"}}"#]);
    assert_eq!(code, 1);
    assert!(out.contains("line 1"), "{out}");
    let (code, out) = run(&["check", r#"{"field": {"char": 4}, "rule": {"kind": "explicit", "terms": []}}"#]);
    assert_eq!(code, 1);
    assert!(out.contains("field.char"), "{out}");
    let (code, _) = run(&["check", "/nonexistent/spec.json"]);
    assert_eq!(code, 1);
    let (code, _) = run(&["check", &spec("geometric.json"), "--trunc", "0"]);
    assert_eq!(code, 1);
}

#[test]
fn empty_steps_give_rationals() {
    let lit = r#"{"field": {"char": 0, "steps": []}, "rule": {"kind": "explicit", "terms": [["1", "7/8"]]}}"#;
    let (code, v) = run_json(&["check", lit]);
    assert_eq!((code, v["verdict"].as_str(), v["r"].as_str()), (0, Some("algebraic"), Some("0")));
}

#[test]
fn artin_schreier_spec_accumulates() {
    let (code, v) = run_json(&["check", &spec("artin_schreier_p2.json")]);
    assert_eq!((code, v["verdict"].as_str()), (0, Some("algebraic")));
}
