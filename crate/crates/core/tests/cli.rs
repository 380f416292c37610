//! Black-box tests of the command-line binary: exit codes, file formats,
//! and the documented examples for each subcommand.

use std::path::{Path, PathBuf};
use std::process::Output;

use once_cell::sync::Lazy;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gfm-lab")
}

fn run(args: &[&str]) -> Output {
    std::process::Command::new(bin()).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed (code {:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn small_corpus_config() -> serde_json::Value {
    serde_json::json!({
        "seed": 5,
        "domains": [{
            "name": "citations", "class_count": 2,
            "topic_vocab": ["neural", "proofs", "algebra", "genome"],
            "graphs": [
                {"node_count": 60, "edge_density": 0.08, "homophily": 0.9, "feature_noise": 0.25, "role": "pretrain"},
                {"node_count": 60, "edge_density": 0.08, "homophily": 0.9, "feature_noise": 0.25, "role": "pretrain"},
                {"node_count": 60, "edge_density": 0.08, "homophily": 0.9, "feature_noise": 0.25, "role": "eval"}
            ]
        }]
    })
}

/// Shared tiny corpus + pretrained victim, built once through the binary.
static SETUP: Lazy<(tempfile::TempDir, PathBuf, PathBuf)> = Lazy::new(|| {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("corpus.json");
    std::fs::write(&cfg, small_corpus_config().to_string()).unwrap();
    let corpus = dir.path().join("corpus");
    let victim = dir.path().join("victim");
    run_ok(&["generate", "--config", cfg.to_str().unwrap(), "--out", corpus.to_str().unwrap()]);
    run_ok(&[
        "pretrain",
        corpus.to_str().unwrap(),
        "--out",
        victim.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    (dir, corpus, victim)
});

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_rejects_out_of_range_homophily() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_corpus_config();
    cfg["domains"][0]["graphs"][0]["homophily"] = serde_json::json!(1.2);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let out = run(&["generate", "--config", s(&path), "--out", s(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("homophily"), "message must name the field: {err}");
}

#[test]
fn generate_summary_lines_match_graph_files() {
    let (_, corpus, _) = &*SETUP;
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("corpus.json");
    std::fs::write(&cfg, small_corpus_config().to_string()).unwrap();
    let stdout = run_ok(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("c"))]);
    let _ = corpus;
    for line in stdout.lines().skip(1).filter(|l| !l.starts_with('#')) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let (id, domain, role, nodes, edges) = (cols[0], cols[1], cols[2], cols[3], cols[4]);
        let path = dir
            .path()
            .join("c")
            .join(role)
            .join(domain)
            .join(format!("{id}.json"));
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(doc["n"].as_u64().unwrap().to_string(), nodes);
        assert_eq!(doc["edges"].as_array().unwrap().len().to_string(), edges);
    }
}

#[test]
fn pretrain_checkpoint_round_trips_and_is_seed_sensitive() {
    let (dir, corpus, victim) = &*SETUP;
    // checkpoint hash matches the recorded post-training hash
    let enc = gfm_lab::encoder::load_encoder(&victim.join("victim.ckpt")).unwrap();
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(victim.join("victim_meta.json")).unwrap())
            .unwrap();
    assert_eq!(enc.param_hash(), meta["param_hash"].as_u64().unwrap());

    // a different seed produces a different parameter hash
    let victim2 = dir.path().join("victim-seed2");
    run_ok(&["pretrain", s(corpus), "--out", s(&victim2), "--seed", "2"]);
    let meta2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(victim2.join("victim_meta.json")).unwrap())
            .unwrap();
    assert_ne!(meta["param_hash"], meta2["param_hash"]);

    // recorded wall time is positive
    let timing: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(victim.join("timing.json")).unwrap())
            .unwrap();
    assert!(timing["wall_seconds"].as_f64().unwrap() > 0.0);
}

#[test]
fn pretrain_without_summaries_exits_3() {
    let (_, corpus, _) = &*SETUP;
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken");
    // copy the corpus minus its summaries directory
    for entry in walk(corpus) {
        let rel = entry.strip_prefix(corpus).unwrap();
        if rel.starts_with("summaries") {
            continue;
        }
        let dst = broken.join(rel);
        std::fs::create_dir_all(dst.parent().unwrap()).unwrap();
        std::fs::copy(&entry, &dst).unwrap();
    }
    let out = run(&["pretrain", s(&broken), "--out", s(&dir.path().join("v"))]);
    assert_eq!(out.status.code(), Some(3));
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files
}

#[test]
fn graph_specific_attack_reports_one_row() {
    let (dir, corpus, victim) = &*SETUP;
    let run_dir = dir.path().join("run-gs");
    run_ok(&[
        "attack", s(corpus), "--victim", s(victim), "--out", s(&run_dir),
        "--kind", "graph_specific", "--source", "citations-eval-0", "--seed", "4",
    ]);
    let csv = std::fs::read_to_string(run_dir.join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(rows.len(), 2, "header plus exactly one row: {csv}");
    assert!(rows[1].starts_with("citations-eval-0,"));
}

#[test]
fn rate_limit_aborts_with_exit_4() {
    let (dir, corpus, victim) = &*SETUP;
    let out = run(&[
        "attack", s(corpus), "--victim", s(victim),
        "--out", s(&dir.path().join("run-throttled")),
        "--rate-limit", "5",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains('5'), "message should carry the spent count: {err}");
}

#[test]
fn unknown_attack_kind_exits_2() {
    let (dir, corpus, victim) = &*SETUP;
    let out = run(&[
        "attack", s(corpus), "--victim", s(victim),
        "--out", s(&dir.path().join("run-bad")),
        "--kind", "sideways",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_aggregates_deduplicates_and_sorts_series() {
    let (dir, corpus, victim) = &*SETUP;
    let mut run_dirs = Vec::new();
    for budget in ["20", "10"] {
        let rd = dir.path().join(format!("run-b{budget}"));
        run_ok(&[
            "attack", s(corpus), "--victim", s(victim), "--out", s(&rd),
            "--kind", "budget_constrained", "--budget", budget,
            "--source", "citations-pretrain-0", "--seed", "6",
        ]);
        run_dirs.push(rd);
    }
    let rep = dir.path().join("rep");
    // one run dir passed twice must be deduplicated by run id
    let stdout = run_ok(&[
        "report", s(&run_dirs[0]), s(&run_dirs[0]), s(&run_dirs[1]), "--out", s(&rep),
    ]);
    let aggregate = std::fs::read_to_string(rep.join("aggregate.csv")).unwrap();
    assert_eq!(aggregate.trim_end().lines().count(), 3, "{aggregate}");

    let series = std::fs::read_to_string(rep.join("series.csv")).unwrap();
    let budgets: Vec<u64> = series
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(budgets, vec![10, 20], "series sorted by budget: {series}");

    // the reported mean equals the hand mean of the row values
    let fids: Vec<f64> = aggregate
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    let hand_mean = fids.iter().sum::<f64>() / fids.len() as f64;
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(rep.join("summary.json")).unwrap()).unwrap();
    assert!((summary["mean_fidelity"].as_f64().unwrap() - hand_mean).abs() < 1e-12);
    assert!(stdout.contains("runs 2"));
}

#[test]
fn report_without_runs_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let out = run(&["report", s(&empty), "--out", s(&dir.path().join("rep"))]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn noise_defense_lowers_fidelity_on_average() {
    let (dir, corpus, victim) = &*SETUP;
    let mean_fid = |noise: Option<&str>, tag: &str| -> f64 {
        let mut total = 0.0;
        for seed in ["21", "22", "23"] {
            let rd = dir.path().join(format!("run-{tag}-{seed}"));
            let mut args = vec![
                "attack", s(corpus), "--victim", s(victim), "--out",
            ];
            let rd_s = rd.to_str().unwrap().to_string();
            args.push(Box::leak(rd_s.into_boxed_str()));
            args.extend(["--seed", seed]);
            if let Some(n) = noise {
                args.extend(["--noise-std", n]);
            }
            run_ok(&args);
            let run: serde_json::Value = serde_json::from_str(
                &std::fs::read_to_string(rd.join("run.json")).unwrap(),
            )
            .unwrap();
            total += run["mean_fidelity"].as_f64().unwrap();
        }
        total / 3.0
    };
    let clean = mean_fid(None, "clean");
    let noisy = mean_fid(Some("0.5"), "noisy");
    assert!(
        noisy <= clean,
        "noise defense should not improve extraction: {noisy} vs {clean}"
    );
}
