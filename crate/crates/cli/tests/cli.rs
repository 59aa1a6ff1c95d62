use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pullvote"))
}

fn exec(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const VOTE: &str = r#"
[graph]
family = "complete-with-loops"
n = 100

[initial]
sizes = [90, 10]

[protocol]
rule = "two-sample"

[campaign]
seed = 3
max_rounds = 100
"#;

fn campaign(kind: &str, extra: &str) -> String {
    format!(
        r#"
[graph]
family = "odd-cycle"
n = 31

[initial]
proportions = [0.6, 0.4]

[protocol]
rule = "two-sample"

[campaign]
kind = "{kind}"
trials = 20
max_rounds = 2000
seed = 11
{extra}
"#
    )
}

#[test]
fn gen_odd_cycle_reports_circulant_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let o = exec(&["gen", "--family", "odd-cycle", "--n", "5", "--out", "c5.txt", "--spectral"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    // eigenvalues cos(2 pi k / 5); the largest in modulus besides 1 is cos(4 pi / 5)
    let oracle = (4.0 * std::f64::consts::PI / 5.0).cos().abs();
    assert!((summary["lambda"].as_f64().unwrap() - oracle).abs() < 1e-9);
    assert!((oracle - 0.8090).abs() < 1e-4);
    assert_eq!(summary["n"], 5);
    assert_eq!(summary["m"], 5);
    assert_eq!(summary["d"], 2);
    assert_eq!(summary["bipartite"], false);
    let text = std::fs::read_to_string(dir.path().join("c5.txt")).unwrap();
    assert!(text.starts_with("# pullvote"));
    assert!(text.contains("# config_hash=sha256:"));
    let g = pullvote::graph::load_edge_list(dir.path().join("c5.txt")).unwrap();
    assert_eq!(g.n(), 5);
}

#[test]
fn gen_random_regular_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["--no-timestamp", "gen", "--family", "random-regular", "--n", "10", "--d", "3", "--seed", "1", "-o", out]
    };
    assert_eq!(code(&exec(&args("a.txt"), dir.path())), 0);
    assert_eq!(code(&exec(&args("b.txt"), dir.path())), 0);
    let a = std::fs::read(dir.path().join("a.txt")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.txt")).unwrap());
    let g = pullvote::graph::load_edge_list(dir.path().join("a.txt")).unwrap();
    assert!((0..10).all(|v| g.degree(v) == 3));
}

#[test]
fn gen_parity_error_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = exec(&["gen", "--family", "random-regular", "--n", "5", "--d", "3"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("even"), "{}", stderr(&o));
    assert_eq!(code(&exec(&["gen", "--family", "nonsense"], dir.path())), 2);
    assert_eq!(code(&exec(&["frobnicate"], dir.path())), 2);
}

#[test]
fn gen_without_out_streams_the_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let o = exec(&["gen", "--family", "complete-with-loops", "--n", "4"], dir.path());
    assert_eq!(code(&o), 0);
    let g = pullvote::graph::read_edge_list(o.stdout.as_slice(), Path::new("stdout")).unwrap();
    assert_eq!((g.n(), g.m()), (4, 10));
    assert!(stderr(&o).contains("\"m\": 10"));
}

#[test]
fn spectral_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = exec(
        &["spectral", "--family", "random-regular", "--n", "60", "--d", "4", "--graph-seed", "2"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let g = pullvote::graph::new_random_regular(60, 4, 2).unwrap();
    let lambda = pullvote::spectral::second_eigenvalue(&g, 1e-12).unwrap();
    assert!((doc["spectral"]["lambda"].as_f64().unwrap() - lambda).abs() < 1e-12);
    assert_eq!(doc["spectral"]["method"], "dense");
    let o = exec(
        &["spectral", "--family", "random-regular", "--n", "60", "--d", "4", "--graph-seed", "2", "--method", "iterative"],
        dir.path(),
    );
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((doc["spectral"]["lambda"].as_f64().unwrap() - lambda).abs() < 1e-8);
    // bipartite graphs have no spectral gap to report
    let o = exec(&["spectral", "--family", "torus-grid", "--n", "16"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_lemmas_on_triangle_passes() {
    let dir = tempfile::tempdir().unwrap();
    exec(&["gen", "--family", "odd-cycle", "--n", "3", "-o", "k3.txt"], dir.path());
    let o = exec(&["verify-lemmas", "--graph", "k3.txt", "--samples", "100", "--seed", "1"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["report"]["violations"], 0);
    assert_eq!(doc["report"]["samples"], 100);
    assert!(doc["header"]["config_hash"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn verify_lemmas_on_complete_graph_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = exec(
        &["verify-lemmas", "--family", "complete-with-loops", "--n", "20", "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = read_json(&dir.path().join("r.json"));
    assert!(doc["report"]["lambda"].as_f64().unwrap().abs() < 1e-12);
    for c in doc["report"]["checks"].as_array().unwrap() {
        assert!(c["slack"].as_f64().unwrap().abs() < 1e-12, "{c}");
    }
}

#[test]
fn verify_lemmas_catches_a_corrupted_lambda() {
    let dir = tempfile::tempdir().unwrap();
    exec(&["gen", "--family", "odd-cycle", "--n", "3", "-o", "k3.txt"], dir.path());
    let o = exec(&["verify-lemmas", "--graph", "k3.txt", "--lambda-override", "0", "-o", "r.json"], dir.path());
    assert_eq!(code(&o), 1);
    let doc = read_json(&dir.path().join("r.json"));
    let summary = doc["report"]["summary"].as_array().unwrap();
    let mixing = summary.iter().find(|s| s["name"] == "mixing").unwrap();
    assert!(mixing["violations"].as_u64().unwrap() > 0);
}

#[test]
fn vote_prints_outcome_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "vote.toml", VOTE);
    let o = exec(
        &["vote", "-c", cfg.to_str().unwrap(), "--out-json", "t.jsonl", "--out-csv", "t.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("consensus at round "), "{}", stdout(&o));
    assert!(stdout(&o).contains("winner: class 0"));
    let text = std::fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let head: Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(head["header"]["command"], "vote");
    let trace: pullvote::RunTrace = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(trace.winner(), Some(0));
    assert_eq!(trace.sizes[0], vec![90, 10]);
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "round,class_0,class_1");
    assert_eq!(rows.len() as u64, trace.rounds_used + 2);
    assert!(csv.contains(head["header"]["config_hash"].as_str().unwrap()));
}

#[test]
fn vote_unanimous_and_timeout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "vote.toml", VOTE);
    let cfg = cfg.to_str().unwrap();
    let o = exec(&["vote", "-c", cfg, "--set", "initial.sizes=[100]"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("consensus at round 0"), "{}", stdout(&o));
    let o = exec(&["vote", "-c", cfg, "--set", "initial.sizes=[50, 50]", "--max-rounds", "1"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("timeout"), "{}", stdout(&o));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "vote.toml", &format!("{VOTE}\nworkers = 3\n"));
    let o = exec(&["vote", "-c", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("workers"), "{}", stderr(&o));
    let cfg = write(dir.path(), "noseed.toml", &VOTE.replace("seed = 3", ""));
    let o = exec(&["vote", "-c", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seed"));
    let cfg = write(dir.path(), "bad.toml", "[graph\nfamily = 1");
    assert_eq!(code(&exec(&["vote", "-c", cfg.to_str().unwrap()], dir.path())), 2);
    let cfg = write(dir.path(), "sizes.toml", VOTE);
    let o = exec(&["vote", "-c", cfg.to_str().unwrap(), "--set", "initial.sizes=[1, 2]"], dir.path());
    assert_eq!(code(&o), 2);
    let o = exec(&["experiment", "-c", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("kind"));
}

#[test]
fn experiment_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "win.toml", &campaign("win-probability", ""));
    let cfg = cfg.to_str().unwrap();
    let run = |extra: &[&str], json: &str, csv: &str| {
        let mut args = vec!["--no-timestamp", "experiment", "-c", cfg, "--out-json", json, "--out-csv", csv];
        args.extend_from_slice(extra);
        let o = exec(&args, dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        o
    };
    let o = run(&[], "a.json", "a.csv");
    run(&["--workers", "1"], "b.json", "b.csv");
    run(&["--sequential"], "c.json", "c.csv");
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    let c = read_json(&dir.path().join("c.json"));
    let a = read_json(&dir.path().join("a.json"));
    assert_eq!(a["report"]["aggregates"], c["report"]["aggregates"]);
    assert_eq!(a["report"]["records"], c["report"]["records"]);
    assert!(a["header"].get("generated_at").is_none());
    assert!(a["report"].get("generated_at").is_none());

    let out = stdout(&o);
    assert!(out.contains("hypotheses (regime: "), "{out}");
    assert!(out.contains("plurality (class 0) wins"), "{out}");
    let win = &a["report"]["aggregates"]["plurality_wins"];
    assert!(win["wilson_low"].as_f64().unwrap() <= win["frequency"].as_f64().unwrap());
    assert!(win["wilson_high"].as_f64().unwrap() >= win["frequency"].as_f64().unwrap());
    let report: pullvote::experiment::CampaignReport = serde_json::from_value(a["report"].clone()).unwrap();
    assert_eq!(report.spec.trials, 20);

    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let hash = a["header"]["config_hash"].as_str().unwrap();
    assert!(csv.starts_with("# pullvote"));
    assert!(csv.contains(&format!("# config_hash={hash}")));
    assert!(csv.contains("\nkey,value\n"));
}

#[test]
fn timestamps_are_on_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "win.toml", &campaign("win-probability", ""));
    let o = exec(&["experiment", "-c", cfg.to_str().unwrap(), "--trials", "3"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = read_json(&dir.path().join("win-probability.json"));
    assert!(doc["header"]["generated_at"].is_string());
    assert_eq!(doc["header"]["generated_at"], doc["report"]["generated_at"]);
    assert_eq!(doc["report"]["spec"]["trials"], 3);
    assert!(dir.path().join("win-probability.csv").exists());
}

#[test]
fn consensus_time_sweep_writes_per_n_medians() {
    let dir = tempfile::tempdir().unwrap();
    let text = campaign("consensus-time", "sweep_n = [15, 31, 63]");
    let cfg = write(dir.path(), "sweep.toml", &text);
    let o = exec(
        &["experiment", "-c", cfg.to_str().unwrap(), "--out-json", "s.json", "--out-csv", "s.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    for i in 0..3 {
        assert!(csv.contains(&format!("aggregates.points.{i}.rounds.median,")), "{csv}");
    }
    assert!(csv.contains("aggregates.points.2.n,63"));
}

#[test]
fn ell_sweep_reports_powers_of_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ell.toml", &campaign("ell-sweep", "walk_lengths = [1, 2, 3]"));
    let o = exec(
        &["experiment", "-c", cfg.to_str().unwrap(), "--out-json", "e.json", "--out-csv", "e.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = read_json(&dir.path().join("e.json"));
    let lambda = doc["report"]["graph"]["lambda"].as_f64().unwrap();
    let oracle = (std::f64::consts::PI / 31.0).cos();
    assert!((lambda - oracle).abs() < 1e-9);
    for p in doc["report"]["aggregates"]["points"].as_array().unwrap() {
        let ell = p["walk_length"].as_i64().unwrap() as i32;
        assert!((p["effective_lambda"].as_f64().unwrap() - lambda.powi(ell)).abs() < 1e-9);
    }
    assert!(stdout(&o).contains("lambda^ell"));
}

#[test]
fn strict_mode_turns_failed_checks_into_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // a star is bipartite: one-sample voting never settles, so every run times out
    let star = write(dir.path(), "star.txt", "4 3\n0 1\n0 2\n0 3\n");
    let text = format!(
        r#"
[graph]
family = "file"
path = "{}"

[initial]
sizes = [1, 3]
placement = "adversarial-ball"

[protocol]
rule = "one-sample"

[campaign]
kind = "win-probability"
trials = 50
max_rounds = 50
seed = 1
"#,
        star.file_name().unwrap().to_str().unwrap()
    );
    let cfg = write(dir.path(), "star.toml", &text);
    let cfg = cfg.to_str().unwrap();
    let o = exec(&["experiment", "-c", cfg, "--strict"], dir.path());
    assert_eq!(code(&o), 1, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
    assert_eq!(code(&exec(&["experiment", "-c", cfg], dir.path())), 0);
}

#[cfg(unix)]
#[test]
fn interrupt_flushes_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let text = campaign("win-probability", "").replace("trials = 20", "trials = 1000000");
    let cfg = write(dir.path(), "long.toml", &text);
    let child = bin()
        .args(["experiment", "-c", cfg.to_str().unwrap(), "--sequential", "--out-json", "p.json", "--out-csv", "p.csv"])
        .current_dir(dir.path())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    std::thread::sleep(std::time::Duration::from_millis(1500));
    let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(status.success());
    let o = child.wait_with_output().unwrap();
    assert_eq!(code(&o), 130, "{}", stderr(&o));
    let doc = read_json(&dir.path().join("p.json"));
    assert_eq!(doc["report"]["interrupted"], true);
    let done = doc["report"]["aggregates"]["plurality_wins"]["trials"].as_u64().unwrap();
    assert!(done > 0 && done < 1_000_000, "{done}");
    assert!(dir.path().join("p.csv").exists());
}
