use std::fs;
use std::process::{Command, Output};

fn hiplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hiplan")).args(args).env_remove("HIPLAN_LAYOUT_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analyze_reports_structure() {
    let o = hiplan(&["analyze", "--layout", "fig_owsp_4x4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for line in ["classification=OWSP", "d_max=3", "d0_terminal=8"] {
        assert!(text.lines().any(|l| l == line), "missing {line} in\n{text}");
    }
    let o = hiplan(&["analyze", "--layout", "fig_now_2x2"]);
    assert!(stdout(&o).contains("classification=NOW"));
}

#[test]
fn exit_codes_follow_the_contract() {
    assert_eq!(hiplan(&["analyze", "missing.grid"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.grid");
    fs::write(&bad, "gamma = 0.9\n\n#####\n#SXG#\n#####\n").unwrap();
    let o = hiplan(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("column 3"));
    assert_eq!(hiplan(&["analyze", "--layout", "nope"]).status.code(), Some(2));
    assert_eq!(hiplan(&["qlearn", "--layout", "maze7", "--epsilon", "2"]).status.code(), Some(2));
    assert_eq!(hiplan(&["plan", "--k", "x", "--layout", "fig_now_2x2"]).status.code(), Some(2));
}

#[test]
fn layout_dir_overrides_builtins() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corridor.grid"), "gamma = 0.9\nterminal_reward = 10\n\n#####\n#S.G#\n#####\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hiplan"))
        .args(["analyze", "--layout", "corridor"])
        .env("HIPLAN_LAYOUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("classification=NoIntermediates"));
    assert!(text.contains("d0_terminal=2"));
}

#[test]
fn plan_renders_value_grids() {
    let o = hiplan(&["plan", "--layout", "fig_sparse_4x4", "--k", "0,1,2,8", "--render"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let blocks: Vec<&str> = text.split("k=").skip(1).collect();
    assert_eq!(blocks.len(), 4);
    assert!(!blocks[0].contains("10.00"));
    assert!(blocks[3].contains(&format!("{:.2}", 10.0 * 0.9f64.powi(7))));
    let o = hiplan(&["plan", "--layout", "fig_owsp_4x4", "--k", "3", "--render"]);
    assert!(stdout(&o).contains("1.81"));
}

#[test]
fn plan_csv_at_k0_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let o = hiplan(&["plan", "--layout", "door3", "--k", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(r.headers().unwrap().iter().last(), Some("value"));
    for rec in r.records() {
        assert_eq!(&rec.unwrap()[6], "0");
    }
    assert!(dir.path().join("v.csv.manifest.json").is_file());
}

#[test]
fn qlearn_is_deterministic_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = hiplan(&["qlearn", "--layout", "maze7", "--runs", "1", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([7]));
    assert_eq!(manifest["layout"], "builtin:maze7_inter");
    assert!(manifest["tool_version"].is_string());
}

#[test]
fn qlearn_compare_reproduces_the_maze_trend() {
    let o = hiplan(&[
        "qlearn",
        "--layout",
        "maze7",
        "--compare",
        "sparse,intermediate",
        "--checkpoints",
        "18,24,30,36",
        "--runs",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("layout,")).count(), 1, "single header");
    let wins = |scheme: &str| -> usize {
        let row = text.lines().find(|l| l.starts_with(&format!("maze7_inter,{scheme},all,36,"))).unwrap();
        row.split(',').nth(4).unwrap().parse().unwrap()
    };
    assert!(wins("intermediate") >= 95);
    assert!(wins("sparse") <= 30);
}

#[test]
fn verify_suites_pass_and_list_skips() {
    let o = hiplan(&["verify", "--suite", "theorem1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("SKIP closest-checkpoint") && l.contains("gamma=0.9, h=2")));
    let o = hiplan(&["verify", "--suite", "propositions"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS sparse-complexity predicted_k=8 observed_k=8"));
    let o = hiplan(&["verify", "--suite", "lemmas"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS lemma")).count(), 3);
}

#[test]
fn reproduce_figure_values_and_now_example() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = hiplan(&["reproduce", "--target", "fig_values", "--out-dir", d]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("MISMATCH"));
    assert!(dir.path().join("fig_values.csv").is_file());
    let o = hiplan(&["reproduce", "--target", "now_example", "--out-dir", d]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("success=false"));
    assert!(text.contains("cycle_start=Some"));
}

#[test]
fn reproduce_tradeoff_trends_to_both_routes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hiplan(&["reproduce", "--target", "table_tradeoff", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(dir.path().join("table_tradeoff.csv")).unwrap();
    let final_steps: Vec<f64> = r
        .records()
        .map(|rec| rec.unwrap())
        .filter(|rec| &rec[0] == "3150")
        .map(|rec| rec[6].parse().unwrap())
        .collect();
    assert_eq!(final_steps.len(), 2);
    assert!((23.0..=24.0).contains(&final_steps[0]));
    assert!((12.0..=14.0).contains(&final_steps[1]));
}

#[test]
fn export_writes_the_transition_table() {
    let o = hiplan(&["export", "--layout", "fig_now_2x2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("state,action,next,reward"));
    assert!(text.lines().count() > 4);
}
