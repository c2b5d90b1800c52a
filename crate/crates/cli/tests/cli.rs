use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name);
    p.to_string_lossy().into_owned()
}

fn scratch(name: &str, body: &str) -> String {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uncml")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--format", "json"];
    all.extend_from_slice(args);
    let out = run(&all);
    let text = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("{e}: {text}"));
    (out.status.code().unwrap(), v)
}

#[test]
fn validate_reports_and_sets_the_exit_code() {
    let (code, v) = json(&["validate", "--model", &corpus("paper_example.model")]);
    assert_eq!(code, 0);
    assert_eq!(v["valid"], true);
    assert_eq!(v["states"], 4);

    let src = std::fs::read_to_string(corpus("paper_example.model")).unwrap();
    let split = scratch("split.model", &src.replace("y: P1;", "y: P2;"));
    let (code, v) = json(&["validate", "--model", &split]);
    assert_eq!(code, 1);
    assert_eq!(v["valid"], false);
    assert!(v["errors"][0].as_str().unwrap().contains("{x,y} is split"), "{v}");
}

#[test]
fn eval_lists_sorted_point_tuples() {
    let m = corpus("paper_example.model");
    let (code, v) = json(&["eval", "--model", &m, "--formula", "[pr2]!{b,c}"]);
    assert_eq!(code, 0);
    assert_eq!(v["sort"], "Id * Const(M)");
    let want: Value = serde_json::from_str(r#"[["x","a"],["y","a"],["z","a"],["t","a"]]"#).unwrap();
    assert_eq!(v["set"], want);

    let (_, v) = json(&["eval", "--model", &m, "--formula", "!{b,c}", "--sort", "Const(M)"]);
    assert_eq!(v["set"], serde_json::json!(["a"]));

    let (_, v) = json(&["eval", "--model", &m, "--formula", "U>=3/5 [pr2]!{b,c}"]);
    assert_eq!(v["regime"], "reachable");
    assert_eq!(v["satisfied_by"], serde_json::json!(["P1"]));
}

#[test]
fn sat_exit_code_follows_the_answer() {
    let m = corpus("paper_example.model");
    let (code, v) = json(&["sat", "--model", &m, "--element", "P1", "--formula", "U>=3/5 [pr2]!{b,c}"]);
    assert_eq!((code, &v["satisfied"]), (0, &Value::Bool(true)));
    let (code, _) = json(&["sat", "--model", &m, "--element", "P2", "--formula", "U>=3/5 [pr2]!{b,c}"]);
    assert_eq!(code, 1);
    let (code, v) = json(&["sat", "--model", &m, "--element", "(z, a)", "--formula", "[pr2]{a}"]);
    assert_eq!(code, 0);
    assert_eq!(v["element"], serde_json::json!(["z", "a"]));
}

#[test]
fn valid_names_its_regime_and_uses_probes() {
    let m = corpus("paper_example.model");
    let (code, v) = json(&["valid", "--model", &m, "--formula", "[next]U>=1/2 [pr2]{a}"]);
    assert_eq!(code, 1);
    assert_eq!(v["regime"]["kind"], "exhaustive");
    assert_eq!(v["counterexample"], "z");

    let f = "U<=3/5 [pr2]{a}";
    let (code, v) = json(&["valid", "--model", &m, "--formula", f]);
    assert_eq!(code, 0);
    assert_eq!(v["regime"]["kind"], "reachable-plus-probes");
    assert_eq!(v["regime"]["probes"], 0);

    let probes = scratch(
        "probes.model",
        "prob d1 on X * Const(M) { {x y}*{a}: 1; {z t}*{a}: 0; {x y}*{b c}: 0; {z t}*{b c}: 0; }\n",
    );
    let (code, v) = json(&["valid", "--model", &m, "--formula", f, "--probes", &probes]);
    assert_eq!(code, 1);
    assert_eq!(v["regime"]["probes"], 1);
    assert_eq!(v["counterexample"], "d1");
}

#[test]
fn des_uses_the_given_grid() {
    let m = corpus("paper_example.model");
    let (_, x) = json(&["des", "--model", &m, "--element", "x", "--depth", "3", "--grid", "1/2"]);
    let (_, y) = json(&["des", "--model", &m, "--element", "y", "--depth", "3", "--grid", "1/2"]);
    let (_, z) = json(&["des", "--model", &m, "--element", "z", "--depth", "3", "--grid", "1/2"]);
    assert_eq!(x["grid"], serde_json::json!(["0", "1/2"]));
    assert_eq!(x["formulas"], y["formulas"]);
    assert_ne!(x["formulas"], z["formulas"]);
    let sep = "[next][(1/2,0)][pr2]!{b,c}";
    let has = |v: &Value| v["formulas"].as_array().unwrap().iter().any(|f| f == sep);
    assert!(has(&x) && !has(&z));
}

#[test]
fn classify_places_measures_in_the_hierarchy() {
    let m = corpus("paper_example.model");
    let (code, v) = json(&["classify", "--model", &m, "--measure", "P1"]);
    assert_eq!(code, 0);
    assert_eq!(v["upper"], true);
    assert_eq!(v["probability"], false);
    let (_, v) = json(&["classify", "--model", &m, "--measure", "mu1", "--method", "cover", "--mmax", "3"]);
    assert_eq!(v["probability"], true);
    assert_eq!(v["upper"], true);
    let (code, _) = json(&["classify", "--model", &m, "--measure", "nope"]);
    assert_eq!(code, 2);
}

#[test]
fn morphism_onto_the_quotient() {
    let map = scratch("quotient.map", "map { x: u; y: u; z: v; t: v; }\n");
    let args = [
        "morphism",
        "--from",
        &corpus("paper_example.model"),
        "--to",
        &corpus("paper_quotient.model"),
        "--map",
        &map,
        "--formula",
        "[next]U>=1/2 [pr2]{a}",
    ];
    let (code, v) = json(&args);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["formulas_checked"], 1);

    let bad = scratch("swapped.map", "map { x: v; y: v; z: u; t: u; }\n");
    let mut args = args;
    args[6] = &bad;
    let (code, v) = json(&args);
    assert_eq!(code, 1);
    assert!(v["verdict"].as_str().unwrap().starts_with("square fails"), "{v}");
}

#[test]
fn usage_and_parse_errors_exit_with_two() {
    let m = corpus("paper_example.model");
    assert_eq!(run(&["eval", "--model", &m, "--formula", "[(1,0)]{b}"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--model", &m, "--formula", "{a"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--model", "/nonexistent.model", "--formula", "top"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["soundness", "--functor", "Upper(", "--trials", "1", "--seed", "0"]).status.code(), Some(2));
}

#[test]
fn soundness_is_clean_and_catches_the_mutant() {
    for t in ["Upper(Id * Const(M))", "Prob(Id)", "Plaus(Id + Const(M))", "Poss(Id * Id)"] {
        let (code, v) = json(&["soundness", "--functor", t, "--trials", "20", "--seed", "11"]);
        assert_eq!(code, 0, "{t}: {v}");
        assert!(v["violations"].as_array().unwrap().is_empty());
        assert!(v["instances"].as_u64().unwrap() > 0);
    }
    let (code, v) = json(&[
        "soundness",
        "--functor",
        "Upper(Id * Const(M))",
        "--trials",
        "100",
        "--seed",
        "11",
        "--schemas",
        "6a",
        "--mutant",
    ]);
    assert_eq!(code, 1);
    let vs = v["violations"].as_array().unwrap();
    assert!(!vs.is_empty());
    assert!(vs.iter().all(|x| x["source"] == "6a!"));
}

#[test]
fn soundness_text_is_deterministic() {
    let args = ["soundness", "--functor", "Poss(Const(M))", "--trials", "6", "--seed", "2"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8(a.stdout).unwrap().contains("violations 0"));
}
