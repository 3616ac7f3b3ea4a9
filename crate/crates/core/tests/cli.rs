mod common;

use std::process::Command;

use common::data;
use serde_json::Value;

fn af(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_af")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn path(p: &str) -> String {
    data(p).display().to_string()
}

fn json(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = af(args);
    let v: Value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out} {err}"));
    assert_eq!(v["tool"], "af");
    assert!(v["version"].is_string());
    assert!(v["seed"].is_u64());
    assert!(v["caps"].is_object());
    (code, v)
}

#[test]
fn primgen_prints_the_generator() {
    let (code, v) = json(&["words", "primgen", "abcbcd"]);
    assert_eq!(code, 0);
    assert_eq!(v["generator"], "abcd");
    assert_eq!(v["length"], 4);
}

#[test]
fn defects_and_closure() {
    let (_, out, _) = af(&["--format", "text", "words", "defects", "abcba"]);
    assert_eq!(out.trim(), "<1,5> <2,4>");
    let (code, v) = json(&["--seed", "7", "words", "closure", "--m", "2", "0111"]);
    assert_eq!(code, 0);
    assert_eq!(v["seed"], 7);
    let words: Vec<&str> = v["words"].as_array().unwrap().iter().map(|w| w.as_str().unwrap()).collect();
    for w in ["0100", "0101", "0110", "0111"] {
        assert!(words.contains(&w));
    }
}

#[test]
fn fml_check_rejects_non_index_normal_input() {
    let (code, _, err) = af(&["fml", "check", &path("formulas/bad.fol")]);
    assert_eq!(code, 2);
    assert!(err.contains("index-normal"));
    let (code, v) = json(&["fml", "check", &path("formulas/chain.fol")]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["in_af"], true);
}

#[test]
fn nf_and_acl() {
    let (code, v) = json(&["fml", "nf", &path("formulas/chain.fol")]);
    assert_eq!(code, 0);
    assert_eq!(v["l"], 2);
    let (code, v) = json(&["fml", "acl", &path("formulas/successor.fol")]);
    assert_eq!(code, 0);
    assert_eq!(v["l"], 1);
}

#[test]
fn struct_eval_exit_codes() {
    let s = path("structures/cycle3.json");
    let (code, v) = json(&["struct", "eval", &s, &path("formulas/chain.fol")]);
    assert_eq!((code, v["value"].as_bool()), (0, Some(true)));
    let (code, _) = json(&["struct", "eval", &s, &path("formulas/unsat.fol")]);
    assert_eq!(code, 1);
    let (code, _, _) = af(&["struct", "eval", &path("formulas/chain.fol"), &s]);
    assert_eq!(code, 2);
}

#[test]
fn solve_verdicts() {
    let (code, v) = json(&["solve", &path("formulas/unsat.fol"), "--max-size", "2"]);
    assert_eq!(code, 1);
    assert_eq!(v["report"]["verdict"]["kind"], "NoModelUpTo");
    let (code, v) = json(&["solve", &path("formulas/successor.fol"), "--max-size", "3", "--pipeline"]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["verdict"]["kind"], "ModelFound");
    assert_eq!(v["report"]["reduction_chain"].as_array().unwrap().len(), 2);
}

#[test]
fn reduce_once_writes_psi_and_registry() {
    let dir = std::env::temp_dir().join(format!("af-reduce-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("psi.fol");
    let (code, v) = json(&["reduce", "once", &path("formulas/successor.fol"), "-o", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["variables_out"], 2);
    assert!(v["registry"].is_object());
    let psi = adjacent::formulas::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(psi.max_var() <= 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn translations_and_gadget() {
    let (code, out, _) = af(&["--format", "text", "translate", "fo2-to-af", &path("formulas/fo2.fol")]);
    assert_eq!(code, 0);
    assert!(adjacent::formulas::check_fragments(&adjacent::formulas::parse(&out).unwrap()).in_af);
    let (code, v) = json(&["translate", "af-to-fo2", &path("formulas/binary_af.fol")]);
    assert_eq!(code, 0);
    assert!(v["formula"].is_string());
    let (code, v) = json(&["gadget", "transitivity", "--map", "1,3", "--t", "T", "--q", "Q"]);
    assert_eq!(code, 0);
    assert_eq!(v["j"], 1);
    let (code, _, _) = af(&["gadget", "transitivity", "--map", "1,2", "--t", "T", "--q", "Q"]);
    assert_eq!(code, 2);
}

#[test]
fn machines() {
    let m = path("machines/second_is_one.json");
    let (code, v) = json(&["atm", "run", &m, "01"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "accept");
    assert!(v["tree"]["nodes"].is_array());
    let (code, v) = json(&["atm", "run", &m, "00"]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"], "reject");
    let (code, v) = json(&["encode-atm", &m, "01"]);
    assert_eq!(code, 0);
    assert_eq!(v["fragments"]["in_ga"], true);
    let (code, _, _) = af(&["atm", "run", &m, "0x"]);
    assert_eq!(code, 2);
}

#[test]
fn bisim_pairs() {
    let args = |b: &str| {
        vec![
            "bisim".to_string(),
            path("structures/loop.json"),
            path(b),
            "--sigma".into(),
            "P,R".into(),
            "--tuple-a".into(),
            "0".into(),
            "--tuple-b".into(),
            "0".into(),
            "--max-len".into(),
            "2".into(),
        ]
    };
    let a = args("structures/two_loops.json");
    let (code, v) = json(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code, 0);
    assert_eq!(v["bisimilar"], true);
    let b = args("structures/edge.json");
    let (code, v) = json(&b.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code, 1);
    assert_eq!(v["reason"], "atomic-harmony");
    assert_eq!(v["forests"]["b"]["heart"], true);
}

#[test]
fn usage_errors() {
    assert_eq!(af(&["nonsense"]).0, 2);
    assert_eq!(af(&["fml", "check", "/nonexistent.fol"]).0, 2);
    assert_eq!(af(&["solve", &path("formulas/unsat.fol"), "--max-size", "0"]).0, 2);
}
