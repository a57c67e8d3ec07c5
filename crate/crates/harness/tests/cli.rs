//! End-to-end checks of the installed command-line surface.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spillover"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spillover-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> String {
    let output = cmd.output().expect("spawn spillover binary");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

#[test]
fn graph_gen_info_round_trip() {
    let dir = workdir("graph");
    let path = dir.join("g.csv");
    run(bin().args([
        "graph",
        "gen",
        "--n",
        "30",
        "--mean-degree",
        "4",
        "--rewire-prob",
        "0.2",
        "--seed",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]));
    let info = run(bin().args(["graph", "info", path.to_str().unwrap()]));
    assert!(info.contains("units: 30"));
    assert!(info.contains("edges: 60"));
    assert!(info.contains("mean_degree: 4"));
}

#[test]
fn assign_emits_one_row_per_replicate_unit() {
    let out = run(bin().args([
        "assign", "--design", "complete", "--n", "6", "--p", "1/3", "--r", "4", "--seed", "9",
    ]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("rep,unit,z"));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 24);
    for rep in 0..4 {
        let ones: usize = body
            .iter()
            .filter(|l| l.starts_with(&format!("{rep},")))
            .filter(|l| l.ends_with(",1"))
            .count();
        assert_eq!(ones, 2, "rep {rep} should treat exactly 2 of 6 units");
    }
}

#[test]
fn cluster_output_lists_every_unit_once() {
    let dir = workdir("cluster");
    let path = dir.join("g.csv");
    run(bin().args([
        "graph", "gen", "--n", "40", "--seed", "3", "--out", path.to_str().unwrap(),
    ]));
    let out = run(bin().args([
        "cluster", "--graph", path.to_str().unwrap(), "--epsilon", "3", "--seed", "1",
    ]));
    let body: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(body.len(), 40);
    let centers = body.iter().filter(|l| l.ends_with(",1")).count();
    assert!(centers >= 1);
}

#[test]
fn simulate_accepts_files_and_rejects_unknown_names() {
    let dir = workdir("simulate");
    let cfg = dir.join("tiny.conf");
    std::fs::write(
        &cfg,
        "scenario = network\nn = 40\nreps = 30\nprob_reps = 500\nce_reps = 5\nseed = 3\n",
    )
    .unwrap();
    let out_dir = dir.join("run");
    run(bin().args([
        "simulate",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    for file in ["summary.csv", "replicates.csv", "meta.json"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }

    let status = bin()
        .args(["simulate", "definitely-not-a-preset"])
        .output()
        .unwrap();
    assert!(!status.status.success());
}

fn read_to_string(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Same config and seed must produce byte-identical replicate output for
/// any worker count.
#[test]
fn simulate_is_deterministic_across_thread_counts() {
    let dir = workdir("determinism");
    let cfg = dir.join("tiny.conf");
    std::fs::write(
        &cfg,
        "scenario = network\nn = 50\nreps = 40\nprob_reps = 800\nce_reps = 10\nseed = 11\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "2"] {
        let out_dir = dir.join(format!("run-{threads}"));
        run(bin().args([
            "simulate",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--threads",
            threads,
        ]));
        outputs.push((
            read_to_string(&out_dir.join("summary.csv")),
            read_to_string(&out_dir.join("replicates.csv")),
        ));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "summary differs across thread counts");
    assert_eq!(outputs[0].1, outputs[1].1, "replicates differ across thread counts");
}

#[test]
fn simulate_json_format() {
    let dir = workdir("json");
    let cfg = dir.join("tiny.conf");
    std::fs::write(
        &cfg,
        "scenario = hierarchical\ngroups = 4\ngroup_size = 6\nreps = 25\nseed = 2\n",
    )
    .unwrap();
    let out_dir = dir.join("run");
    run(bin().args([
        "simulate",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "json",
    ]));
    let summary: serde_json::Value =
        serde_json::from_str(&read_to_string(&out_dir.join("summary.json"))).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 5, "five marginal effects");
}

#[test]
fn hier_estimate_reports_five_effects() {
    let dir = workdir("hier");
    let data = dir.join("data.csv");
    std::fs::write(
        &data,
        "group,group_tr,indiv_tr,obs_outcome\n\
         0,1,1,3.0\n0,1,0,1.0\n1,1,1,5.0\n1,1,0,3.0\n\
         2,0,1,2.0\n2,0,0,1.0\n3,0,1,4.0\n3,0,0,2.0\n",
    )
    .unwrap();
    let out = run(bin().args(["hier-estimate", "--data", data.to_str().unwrap()]));
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["direct_psi_hat"], 2.0);
    assert_eq!(report["total_hat"], 2.5);
    // Field order mirrors the printed convention.
    let d = out.find("direct_psi_hat").unwrap();
    let o = out.find("overall_hat").unwrap();
    assert!(d < o);
}

#[test]
fn estimate_emits_json_reports() {
    let dir = workdir("estimate");
    let graph = dir.join("g.csv");
    run(bin().args([
        "graph", "gen", "--n", "12", "--rewire-prob", "0", "--seed", "1", "--out",
        graph.to_str().unwrap(),
    ]));
    let y = dir.join("y.csv");
    let mut content = String::from("unit,y\n");
    for unit in 0..12 {
        content.push_str(&format!("{unit},{}\n", 1.0 + unit as f64 * 0.25));
    }
    std::fs::write(&y, content).unwrap();
    let out = run(bin().args([
        "estimate",
        "--graph",
        graph.to_str().unwrap(),
        "--treated",
        "2,7",
        "--y",
        y.to_str().unwrap(),
        "--hop",
        "1",
        "--p",
        "1/6",
        "--enumerate",
        "--ce-reps",
        "10",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 6, "three contrasts, two estimators each");
    for line in lines {
        let report: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(report["alpha"].as_f64().unwrap() > 0.0);
        assert!(report.get("defined").is_some());
    }

    // An explicit contrast restricts the output to that pair.
    let out = run(bin().args([
        "estimate",
        "--graph",
        graph.to_str().unwrap(),
        "--treated",
        "2,7",
        "--y",
        y.to_str().unwrap(),
        "--hop",
        "1",
        "--p",
        "1/6",
        "--enumerate",
        "--ce-reps",
        "0",
        "--contrast",
        "isol_dir:no",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    let report: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(report["k"], "isol_dir");
    assert_eq!(report["l"], "no");
    assert_eq!(report["defined"], true);
}

#[test]
fn probs_bernoulli_design() {
    let dir = workdir("probs-bern");
    let path = dir.join("g.csv");
    run(bin().args([
        "graph", "gen", "--n", "20", "--seed", "2", "--out", path.to_str().unwrap(),
    ]));
    let out = run(bin().args([
        "probs",
        "--graph",
        path.to_str().unwrap(),
        "--p",
        "0.5",
        "--design",
        "bernoulli",
        "--prob-reps",
        "400",
        "--hop",
        "full",
    ]));
    assert!(out.lines().next().unwrap().contains("replicates=400 exact=false"));
    let status = bin()
        .args([
            "probs",
            "--graph",
            path.to_str().unwrap(),
            "--p",
            "0.5",
            "--design",
            "bernoulli",
            "--enumerate",
        ])
        .output()
        .unwrap();
    assert!(!status.status.success());
}
