use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

fn mgg(doc: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgg"))
        .arg("-d")
        .arg(doc)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(doc: &PathBuf, args: &str) -> i32 {
    mgg(doc, &args.split_whitespace().collect::<Vec<_>>())
        .status
        .code()
        .expect("exit code")
}

fn stdout(doc: &PathBuf, args: &str) -> String {
    String::from_utf8(mgg(doc, &args.split_whitespace().collect::<Vec<_>>()).stdout).unwrap()
}

#[test]
fn exit_codes_per_subcommand() {
    let plant = corpus("plant.toml");
    let multi = corpus("multigraph.toml");
    let cases: &[(&PathBuf, &str, i32)] = &[
        (&plant, "apply consume plant", 0),
        (&plant, "apply consume idle_machine", 1),
        (&plant, "apply nope plant", 2),
        (&plant, "derive work plant", 0),
        (&plant, "derive twice plant", 1),
        (&plant, "derive work nowhere", 2),
        (&plant, "check-seq work", 0),
        (&plant, "check-seq twice", 1),
        (&plant, "check-seq nope", 2),
        (&plant, "congruence work work", 0),
        (&plant, "congruence work rest_first", 1),
        (&plant, "congruence work twice", 2),
        (&plant, "satisfies plant output", 0),
        (&plant, "satisfies idle_machine output", 1),
        (&plant, "satisfies plant nope", 2),
        (&plant, "satisfies plant feeds --match 0", 0),
        (&plant, "compile-ac busy --host two_cells", 0),
        (&plant, "compile-ac busy release --host two_cells", 2),
        (&plant, "compile-ac output consume --host plant", 0),
        (&plant, "pre2post feeds", 0),
        (&plant, "pre2post busy", 2),
        (&plant, "post2pre busy", 0),
        (&plant, "post2pre output consume", 0),
        (&plant, "delocalize output work --to 1", 0),
        (
            &plant,
            "delocalize output work --to 1 --state 2 --stage post",
            0,
        ),
        (&plant, "delocalize output work --to 1 --state 0", 2),
        (&plant, "export-dot plant", 0),
        (&plant, "export-dot nope", 2),
        (&plant, "format", 0),
        (&multi, "multi encode fork", 0),
        (&multi, "multi encode nope", 2),
        (&multi, "multi decode fork_encoded", 0),
        (&multi, "multi decode loose_end", 1),
        (&multi, "multi apply drop fork", 0),
        (&multi, "multi apply remove fork --fused", 0),
        (&multi, "multi apply drop fork --match 9", 1),
        (&multi, "export-dot fork", 0),
        (&plant, "no-such-command", 2),
    ];
    for (doc, args, want) in cases {
        assert_eq!(code(doc, args), *want, "mgg {args}");
    }
    let missing = corpus("missing.toml");
    assert_eq!(code(&missing, "format"), 2);
}

#[test]
fn format_round_trips_the_corpus() {
    for name in ["plant.toml", "multigraph.toml"] {
        let first = stdout(&corpus(name), "format");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        std::fs::write(&path, &first).unwrap();
        assert_eq!(stdout(&path, "format"), first, "{name}");
    }
}

#[test]
fn single_rule_sequence_reports_lhs_and_nihil() {
    let out = stdout(&corpus("plant.toml"), "--json check-seq once");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let nodes = v["MID"]["nodes"].as_object().unwrap();
    assert_eq!(nodes.len(), 4);
    assert_eq!(v["MID"]["edges"].as_array().unwrap().len(), 3);
    assert!(v["NID"]
        .as_array()
        .unwrap()
        .iter()
        .any(|e| e == "(r0.m,r0.m)"));
}

#[test]
fn busy_postcondition_lists_four_sequences() {
    let out = stdout(
        &corpus("plant.toml"),
        "--json compile-ac busy --host two_cells",
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["sequences"], 4);
    assert_eq!(v["branches"].as_array().unwrap().len(), 4);
}

#[test]
fn dot_marks_multinodes() {
    let out = stdout(&corpus("multigraph.toml"), "export-dot fork");
    assert_eq!(out.matches("shape=square").count(), 3);
    assert_eq!(out.matches("shape=circle").count(), 3);
}
