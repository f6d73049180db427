mod common;

use std::process::Command;

use serde_json::Value;
use toricstack::cli::execute;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_toricstack"))
}

fn path(name: &str) -> String {
    common::data(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8(out.stdout).expect("utf-8"))
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let (code, text) = run(args);
    (code, serde_json::from_str(&text).expect("stdout is one JSON document"))
}

#[test]
fn gale_golden_output() {
    let (code, text) = run(&["gale", &path("wp1-2-3.json")]);
    assert_eq!(code, 0);
    assert_eq!(text, "{\"DG\":{\"rank\":1,\"torsion\":[]},\"beta_dual\":[[3],[2]]}\n");
}

#[test]
fn validate_reports() {
    let (code, json) = run_json(&["validate", &path("p2.json")]);
    assert_eq!(code, 0);
    assert_eq!(json["valid"], true);
    let (code, json) = run_json(&["validate", &path("not-a-fan.json")]);
    assert_eq!(code, 0);
    assert_eq!(json["valid"], false);
    assert!(json["failures"][0].as_str().unwrap().contains("overlap"));
}

#[test]
fn zseries_plane() {
    let (code, json) = run_json(&["zseries", &path("p2.json"), "--c1", "0", "0", "0", "--order", "2"]);
    assert_eq!(code, 0);
    assert_eq!(json["coefficients"], serde_json::json!([1, 3, 9]));
}

#[test]
fn zseries_default_order_is_ten() {
    let (code, json) = run_json(&["zseries", &path("p2.json"), "--c1", "0", "0", "0"]);
    assert_eq!(code, 0);
    assert_eq!(json["order"], 10);
    assert_eq!(json["coefficients"].as_array().unwrap().len(), 11);
}

#[test]
fn exit_codes() {
    assert_eq!(run_json(&["frobnicate"]).0, 2);
    assert_eq!(run_json(&["gale", &path("bad-syntax.json")]).0, 2);
    assert_eq!(run_json(&["gale", &path("bad-field.json")]).0, 2);
    assert_eq!(run_json(&["gale", &path("missing.json")]).0, 2);
    let (code, json) = run_json(&["gale", &path("not-a-fan.json")]);
    assert_eq!(code, 1);
    assert_eq!(json["kind"], "invalid_fan");
    let (code, json) = run_json(&["intersect", &path("p2.json"), "0", "0"]);
    assert_eq!(code, 1);
    assert_eq!(json["kind"], "same_cone");
    let (code, json) = run_json(&["intersect", &path("p2.json"), "0", "7"]);
    assert_eq!(code, 1);
    assert!(json["error"].is_string());
    let (code, _) = run_json(&["picard", &path("p2.json"), "1", "2"]);
    assert_eq!(code, 1);
    let (code, _) = run_json(&["glue-check", &path("p2.json"), &path("p2-o1.json"), "--window", "2", "2", "0", "0"]);
    assert_eq!(code, 2);
    let (code, json) = run_json(&["zseries", &path("wp1-2-3.json"), "--c1", "0", "0"]);
    assert_eq!(code, 1);
    assert_eq!(json["kind"], "unsupported");
}

#[test]
fn malformed_corpus_never_crashes() {
    for name in ["bad-syntax.json", "bad-field.json", "not-a-fan.json", "p2-o1.json"] {
        for cmd in ["validate", "gale", "localgroups", "box"] {
            let (code, json) = run_json(&[cmd, &path(name)]);
            assert!(code == 0 || json["error"].is_string(), "{cmd} {name}");
        }
    }
}

#[test]
fn picard_and_gluing() {
    let (code, json) = run_json(&["picard", &path("p112.json"), "1", "0", "0"]);
    assert_eq!(code, 0);
    assert_eq!(json["glues"], true);
    assert_eq!(json["charts"][2]["box_q"], serde_json::json!(["0", "1/2"]));
    for sheaf in ["p2-o1.json", "p2-tangent.json", "p2-ideal.json"] {
        let (code, json) = run_json(&["glue-check", &path("p2.json"), &path(sheaf)]);
        assert_eq!(code, 0);
        assert_eq!(json["ok"], true, "{sheaf}");
    }
    let (code, json) =
        run_json(&["glue-check", &path("p2.json"), &path("p2-o1.json"), "--window", "-1", "-1", "3", "3"]);
    assert_eq!(code, 0);
    assert_eq!(json["ok"], true);
}

#[test]
fn stability_verdicts() {
    let (_, json) = run_json(&["stability", &path("p2.json"), &path("p2-tangent.json")]);
    assert_eq!(json["verdict"], "stable");
    let (_, json) = run_json(&["stability", &path("p2.json"), &path("p2-unstable.json")]);
    assert_eq!(json["verdict"], "unstable");
    assert_eq!(json["witness"]["line"], serde_json::json!([1, 0]));
}

#[test]
fn charfn_frames() {
    let (code, json) = run_json(&["charfn", &path("p2.json"), &path("p2-tangent.json")]);
    assert_eq!(code, 0);
    assert_eq!(json["rank"], 2);
    assert_eq!(json["charts"].as_array().unwrap().len(), 3);
    let sat = &json["framed"][0]["saturation"];
    assert!(sat.as_array().unwrap().iter().all(|x| x.as_i64() == Some(0)));
}

#[test]
fn chi_compare_report() {
    let (code, json) = run_json(&["chi", "1", "1", "1", "--from", "-2", "--to", "3", "--compare"]);
    assert_eq!(code, 0);
    let values = json["values"].as_array().unwrap();
    assert_eq!(values.len(), 6);
    assert_eq!(values[0]["formula"], "0");
    assert_eq!(values[5]["formula"], "10");
    assert_eq!(values[5]["oracle"], 10);
    assert_eq!(json["summary"]["compared"], 4);
    assert_eq!(json["summary"]["agreeing"], 4);
    let (_, json) = run_json(&["chi", "1", "1", "2", "--from", "0", "--to", "0"]);
    assert_eq!(json["values"][0]["formula"], "17/4");
    assert!(json["values"][0].get("oracle").is_none());
    assert_eq!(run_json(&["chi", "1", "1", "2", "--from", "3", "--to", "0"]).0, 2);
    assert_eq!(run_json(&["chi", "0", "1", "2"]).0, 1);
}

#[test]
fn output_file() {
    let dir = std::env::temp_dir().join(format!("toricstack-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let target = dir.join("gale.json");
    let (code, text) = run(&["gale", &path("wp1-2-3.json"), "--out", target.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(text.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.starts_with("{\"DG\""));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn deterministic_across_thread_counts() {
    let args = ["zseries", &path("p112.json"), "--c1", "0", "0", "0", "--order", "6", "--compare"];
    let one = bin().args(args).env("TORICSTACK_THREADS", "1").output().unwrap().stdout;
    let four = bin().args(args).env("TORICSTACK_THREADS", "4").output().unwrap().stdout;
    assert_eq!(one, four);
    let glue = ["glue-check", &path("hirzebruch-stacky.json"), &path("hirzebruch-lb.json")];
    let a = bin().args(glue).env("TORICSTACK_THREADS", "1").output().unwrap();
    let b = bin().args(glue).env("TORICSTACK_THREADS", "3").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let bad = bin().args(args).env("TORICSTACK_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn in_process_matches_binary() {
    let p = path("p123.json");
    let out = execute(["toricstack", "box", p.as_str()]);
    let (code, text) = run(&["box", &p]);
    assert_eq!(out.code, code);
    assert_eq!(out.render(), text);
}
