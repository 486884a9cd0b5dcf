//! End-to-end runs of the `actdiag` binary.

mod schema;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn actdiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_actdiag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn actdiag_stdin(args: &[&str], input: &str) -> Output {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_actdiag"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generates the n-instrument model and a plan from the saturated root.
fn pipeline(dir: &TempDir, n: usize) -> PathBuf {
    let model = path(dir, "model.desm");
    let ad = path(dir, "ad.json");
    let plan = path(dir, "plan.json");
    ok(&actdiag(&[
        "spacewire",
        "gen",
        "-n",
        &n.to_string(),
        "-o",
        s(&model),
    ]));
    ok(&actdiag(&[
        "active-diagnoser",
        s(&model),
        "--check",
        "-o",
        s(&ad),
    ]));
    ok(&actdiag(&[
        "plan",
        s(&ad),
        "--root",
        "saturated-all-open",
        "-o",
        s(&plan),
    ]));
    plan
}

#[test]
fn generated_model_statistics() {
    let model = ok(&actdiag(&["spacewire", "gen", "-n", "3"]));
    let stats = ok(&actdiag_stdin(&["stats"], &model));
    assert_eq!(stats, "states=64 events=9 transitions=288\n");
    let spliced = ok(&actdiag_stdin(&["stats", "--check", "-"], &model));
    assert_eq!(spliced, "states=128 events=12 transitions=416\n");
}

#[test]
fn active_diagnoser_report() {
    let dir = TempDir::new().unwrap();
    let model = path(&dir, "m.desm");
    ok(&actdiag(&["spacewire", "gen", "-n", "3", "-o", s(&model)]));
    let out = ok(&actdiag(&[
        "active-diagnoser",
        s(&model),
        "--check",
        "--faults",
        "fault1,fault2,fault3",
    ]));
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("nodes=304 "));
    let tags = lines.next().unwrap();
    assert!(tags.starts_with("tags: "));
    for entry in tags["tags: ".len()..].split(' ') {
        let name = entry.split('=').next().unwrap();
        assert!(name == "sure" || name == "discriminable", "{tags}");
    }
}

#[test]
fn scenario_two_from_the_command_line() {
    let dir = TempDir::new().unwrap();
    let plan = pipeline(&dir, 3);
    let trace = path(&dir, "trace.log");
    let out = ok(&actdiag(&[
        "simulate",
        s(&plan),
        "--scenario",
        "persistent:3",
        "-n",
        "3",
        "--trace",
        s(&trace),
    ]));
    assert!(out.contains(" diag_result=1 "), "{out}");
    assert!(out.contains("fault3=sure"));
    assert!(!out.contains("fault1=sure") && !out.contains("fault2=sure"));
    let log = std::fs::read_to_string(trace).unwrap();
    assert!(log.lines().next().unwrap().ends_with("check ooB"));
}

#[test]
fn healthy_network_reports_nominal() {
    let dir = TempDir::new().unwrap();
    let plan = pipeline(&dir, 2);
    let out = ok(&actdiag(&["simulate", s(&plan), "--scenario", "none"]));
    assert!(out.contains("outcome=nominal"), "{out}");
}

#[test]
fn exported_procedure_matches_golden_file() {
    let dir = TempDir::new().unwrap();
    let plan = pipeline(&dir, 3);
    let obcp = ok(&actdiag(&["export", s(&plan), "--format", "pseudo-obcp"]));
    let golden = include_str!("../../core/tests/golden/spacewire3.obcp");
    assert_eq!(obcp, golden);
    let json = ok(&actdiag(&["export", s(&plan), "--format", "json"]));
    assert_eq!(json, std::fs::read_to_string(&plan).unwrap());
    let dot = ok(&actdiag(&["export", s(&plan), "--format", "dot"]));
    assert!(dot.starts_with("digraph"));
}

#[test]
fn custom_mapping_changes_the_service_calls() {
    let dir = TempDir::new().unwrap();
    let plan = pipeline(&dir, 2);
    let mapping = path(&dir, "map.txt");
    std::fs::write(
        &mapping,
        "procedure = int isolate()\naction.check = scan();\n",
    )
    .unwrap();
    let obcp = ok(&actdiag(&["export", s(&plan), "--mapping", s(&mapping)]));
    assert!(obcp.starts_with("int isolate() {"));
    assert!(obcp.contains("  scan();") && !obcp.contains("monitor_tempo"));
}

#[test]
fn outputs_are_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (pa, pb) = (pipeline(&a, 3), pipeline(&b, 3));
    assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
    assert_eq!(
        std::fs::read(path(&a, "ad.json")).unwrap(),
        std::fs::read(path(&b, "ad.json")).unwrap()
    );
}

#[test]
fn plan_from_model_file_and_alternative_roots() {
    let dir = TempDir::new().unwrap();
    let model = path(&dir, "m.desm");
    ok(&actdiag(&["spacewire", "gen", "-n", "2", "-o", s(&model)]));
    for root in ["saturated-all-open", "trace:check,sat"] {
        let out = ok(&actdiag(&[
            "plan",
            s(&model),
            "--check",
            "--root",
            root,
            "-o",
            s(&path(&dir, "p.json")),
        ]));
        assert!(out.contains("optimal=true"), "{root}: {out}");
    }
    let out = ok(&actdiag(&[
        "plan",
        s(&model),
        "--check",
        "--explore",
        "depth_first",
        "-o",
        s(&path(&dir, "p.json")),
    ]));
    assert!(out.contains("optimal=false"), "{out}");

    // Closing port 1 and still seeing saturation convicts instrument 2 and
    // leaves nothing to resolve.
    let out = actdiag(&[
        "plan",
        s(&model),
        "--check",
        "--root",
        "trace:close_flow1,check,sat",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compose_merges_component_files() {
    let dir = TempDir::new().unwrap();
    let model = path(&dir, "m.desm");
    let composed = path(&dir, "c.desm");
    ok(&actdiag(&["spacewire", "gen", "-n", "2", "-o", s(&model)]));
    let out = ok(&actdiag(&["compose", s(&model), "-o", s(&composed)]));
    assert_eq!(out, "states=16 events=6 transitions=48\n");
    let stats = ok(&actdiag(&["stats", s(&composed)]));
    assert_eq!(stats, "states=16 events=6 transitions=48\n");
}

#[test]
fn cost_overrides_reach_the_plan() {
    let dir = TempDir::new().unwrap();
    let costs = path(&dir, "costs.txt");
    let model = path(&dir, "m.desm");
    std::fs::write(&costs, "close_flow1 = 5\n").unwrap();
    ok(&actdiag(&[
        "spacewire",
        "gen",
        "-n",
        "2",
        "--costs",
        s(&costs),
        "-o",
        s(&model),
    ]));
    let out = ok(&actdiag(&[
        "plan",
        s(&model),
        "--check",
        "-o",
        s(&path(&dir, "p.json")),
    ]));
    assert!(out.contains("cost=1 "), "{out}");
    let plan = std::fs::read_to_string(path(&dir, "p.json")).unwrap();
    assert!(
        plan.contains("close_flow2"),
        "cheaper port should be closed first"
    );
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let plan = pipeline(&dir, 2);
    assert_eq!(
        actdiag(&["plan", s(&plan), "--criterion", "fastest"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(actdiag(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        actdiag(&["simulate", s(&plan), "--scenario", "broken:1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(actdiag(&["--help"]).status.code(), Some(0));

    let model = path(&dir, "model.desm");
    let out = actdiag(&[
        "plan",
        s(&model),
        "--check",
        "--budget",
        "0",
        "-o",
        s(&path(&dir, "x.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
    assert_eq!(
        actdiag(&["stats", s(&path(&dir, "missing.desm"))])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        actdiag(&["spacewire", "gen", "-n", "9"]).status.code(),
        Some(2)
    );
    assert_eq!(
        actdiag(&[
            "simulate",
            s(&plan),
            "--scenario",
            "persistent:5",
            "-n",
            "2"
        ])
        .status
        .code(),
        Some(2)
    );
    let out = actdiag(&["active-diagnoser", s(&model), "--check", "--faults", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_reports_follow_the_schema() {
    let schema: Value = serde_json::from_str(include_str!("../../../docs/report.schema.json"))
        .expect("schema is JSON");
    let dir = TempDir::new().unwrap();
    let model = path(&dir, "m.desm");
    let ad = path(&dir, "ad.json");
    let plan = path(&dir, "p.json");
    let scratch = path(&dir, "scratch");
    let runs: Vec<Vec<&str>> = vec![
        vec!["spacewire", "gen", "-n", "3", "-o", s(&model)],
        vec!["compose", s(&model), "-o", s(&scratch)],
        vec!["stats", s(&model)],
        vec!["diagnoser", s(&model), "--check"],
        vec!["active-diagnoser", s(&model), "--check", "-o", s(&ad)],
        vec!["plan", s(&ad), "-o", s(&plan)],
        vec!["plan", s(&ad), "--criterion", "average", "-o", s(&scratch)],
        vec!["export", s(&plan), "-o", s(&scratch)],
        vec![
            "simulate",
            s(&plan),
            "--scenario",
            "persistent:1,persistent:2",
        ],
        vec!["simulate", s(&plan), "--scenario", "none"],
    ];
    for mut args in runs {
        args.extend(["--report", "json"]);
        let out = ok(&actdiag(&args));
        let report: Value =
            serde_json::from_str(&out).unwrap_or_else(|e| panic!("{args:?}: {e}: {out}"));
        if let Err(e) = schema::validate(&schema, &report) {
            panic!("{args:?}: {report} violates the schema: {e}");
        }
    }

    let bad = serde_json::json!({"command": "stats", "states": 1, "events": 1});
    assert!(schema::validate(&schema, &bad).is_err());
}
