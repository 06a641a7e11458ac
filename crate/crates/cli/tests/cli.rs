//! End-to-end tests driving the compiled binary: every subcommand, the
//! config/flag layering, determinism, and the exit-code contract.

use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_e2cp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().expect("utf8 path").to_string()
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(p: &str) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("read {p}: {e}"))
}

fn read_json(p: &str) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap_or_else(|e| panic!("parse {p}: {e}"))
}

/// Moons dataset plus its four-constraint demo file, shared fixture.
fn synth_moons(dir: &TempDir, n: usize) -> (String, String) {
    let out = run(&[
        "synth",
        "--shape",
        "two_moons",
        "--n",
        &n.to_string(),
        "--noise",
        "0.08",
        "--seed",
        "5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);
    (path(dir, "two_moons.csv"), path(dir, "constraints.csv"))
}

#[test]
fn synth_is_deterministic_with_balanced_demo_constraints() {
    let d1 = TempDir::new().unwrap();
    let d2 = TempDir::new().unwrap();
    let (data1, cons1) = synth_moons(&d1, 80);
    let (data2, cons2) = synth_moons(&d2, 80);
    assert_eq!(
        std::fs::read(&data1).unwrap(),
        std::fs::read(&data2).unwrap(),
        "repeated synth must be byte-identical"
    );
    assert_eq!(std::fs::read(&cons1).unwrap(), std::fs::read(&cons2).unwrap());
    assert_eq!(read(&data1).lines().count(), 80);
    let strengths: Vec<f64> = read(&cons1)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(strengths.iter().filter(|&&s| s > 0.0).count(), 2);
    assert_eq!(strengths.iter().filter(|&&s| s < 0.0).count(), 2);
}

#[test]
fn cluster_writes_report_partitions_and_long_csv() {
    let dir = TempDir::new().unwrap();
    let (data, cons) = synth_moons(&dir, 60);
    let out = run(&[
        "cluster",
        "--features",
        &data,
        "--constraints",
        &cons,
        "--sigma",
        "0.1",
        "--k",
        "8",
        "--runs",
        "3",
        "--method",
        "e2cp",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);
    let report = read_json(&path(&dir, "report.json"));
    assert_eq!(report["config"]["command"], "cluster");
    assert_eq!(report["config"]["runs"], 3);
    assert_eq!(report["config"]["alpha"], 0.6, "defaults are embedded");
    let cells = report["cells"].as_array().expect("cells");
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0]["num_constraints"], 4);
    assert_eq!(cells[0]["ari"]["per_run"].as_array().unwrap().len(), 3);
    let mean = cells[0]["ari"]["value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mean));
    let runs_csv = read(&path(&dir, "runs.csv"));
    let mut lines = runs_csv.lines();
    assert_eq!(lines.next(), Some("method,num_constraints,run,ari"));
    assert_eq!(lines.count(), 3);
    for r in 0..3 {
        let pfile = path(&dir, &format!("partition_e2cp_c4_r{r}.csv"));
        let rows = read(&pfile).lines().count();
        assert_eq!(rows, 61, "header plus one row per point in {pfile}");
    }
}

#[test]
fn zero_constraints_match_unconstrained_baseline() {
    let dir = TempDir::new().unwrap();
    let (data, _) = synth_moons(&dir, 60);
    let out = run(&[
        "cluster",
        "--features",
        &data,
        "--sigma",
        "0.1",
        "--k",
        "8",
        "--runs",
        "3",
        "--num-constraints",
        "0",
        "--method",
        "e2cp,ncuts",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);
    let report = read_json(&path(&dir, "report.json"));
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    let e2cp_runs = cells[0]["ari"]["per_run"].as_array().unwrap();
    let ncuts_runs = cells[1]["ari"]["per_run"].as_array().unwrap();
    assert_eq!(e2cp_runs, ncuts_runs, "empty constraints must reduce to the baseline");
}

#[test]
fn propagate_solvers_agree_and_empty_constraints_give_zeros() {
    let dir = TempDir::new().unwrap();
    let (data, cons) = synth_moons(&dir, 60);
    let empty = path(&dir, "empty.csv");
    std::fs::write(&empty, "# i,j,strength\n").unwrap();
    let out = run(&[
        "propagate",
        "--features",
        &data,
        "--constraints",
        &empty,
        "--sigma",
        "0.1",
        "--k",
        "8",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--out",
        "zero.csv",
    ]);
    assert_success(&out);
    let all_zero = read(&path(&dir, "zero.csv"))
        .lines()
        .flat_map(|l| l.split(','))
        .all(|c| c.trim().parse::<f64>().unwrap() == 0.0);
    assert!(all_zero, "no constraints must propagate to all-zero scores");

    let mut matrices = Vec::new();
    for solver in ["iterative", "closed_form"] {
        let name = format!("{solver}.csv");
        let out = run(&[
            "propagate",
            "--features",
            &data,
            "--constraints",
            &cons,
            "--sigma",
            "0.1",
            "--k",
            "8",
            "--solver",
            solver,
            "--tol",
            "1e-10",
            "--out-dir",
            dir.path().to_str().unwrap(),
            "--out",
            &name,
        ]);
        assert_success(&out);
        let stdout = String::from_utf8_lossy(&out.stdout).to_string();
        assert!(stdout.contains("iterations="), "stdout reports iterations: {stdout}");
        assert!(stdout.contains("clipped="), "stdout reports the clipped flag: {stdout}");
        let m: Vec<f64> = read(&path(&dir, &name))
            .lines()
            .flat_map(|l| l.split(',').map(|c| c.trim().parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect();
        matrices.push(m);
    }
    let gap = matrices[0]
        .iter()
        .zip(&matrices[1])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    assert!(gap < 1e-6, "solver outputs differ by {gap}");

    let out = run(&[
        "propagate",
        "--features",
        &data,
        "--constraints",
        &cons,
        "--sigma",
        "0.1",
        "--k",
        "8",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--out",
        "fstar.bin",
    ]);
    assert_success(&out);
    let bytes = std::fs::read(path(&dir, "fstar.bin")).unwrap();
    // 8-byte magic, two u32 dims, then 60 x 60 little-endian f64 values.
    assert_eq!(bytes.len(), 16 + 8 * 60 * 60);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 60);
    assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 60);
}

#[test]
fn malformed_constraints_exit_with_input_error() {
    let dir = TempDir::new().unwrap();
    let (data, _) = synth_moons(&dir, 60);
    let bad = path(&dir, "bad.csv");
    std::fs::write(&bad, "0,notanumber,1\n").unwrap();
    let out = run(&[
        "propagate",
        "--features",
        &data,
        "--constraints",
        &bad,
        "--sigma",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("bad index"),
        "stderr names the parse problem"
    );
}

#[test]
fn config_file_layers_under_flags() {
    let dir = TempDir::new().unwrap();
    let (data, cons) = synth_moons(&dir, 60);
    let cfg = path(&dir, "run.json");
    std::fs::write(
        &cfg,
        format!(
            "{{\"features\": \"{data}\", \"constraints\": \"{cons}\", \"sigma\": 0.1, \"k\": 8, \"runs\": 2, \"method\": \"e2cp\", \"out_dir\": \"{}\"}}",
            dir.path().to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run(&["cluster", "--config", &cfg, "--runs", "3"]);
    assert_success(&out);
    let report = read_json(&path(&dir, "report.json"));
    assert_eq!(report["config"]["runs"], 3, "flag overrides the config key");
    assert_eq!(report["config"]["k"], 8, "config fills what flags leave unset");

    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, "{\"runz\": 3}").unwrap();
    let out = run(&["cluster", "--config", &bad, "--features", &data]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}

/// Blobs written twice (as both sources) plus an alternating split file.
fn retrieval_fixture(dir: &TempDir, n: usize) -> (String, String) {
    let out = run(&[
        "synth",
        "--shape",
        "blobs",
        "--n",
        &n.to_string(),
        "--clusters",
        "2",
        "--sep",
        "4",
        "--std",
        "0.8",
        "--seed",
        "3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);
    let mut split = String::from("# source,index,role\n");
    for i in 0..n {
        let role = if i % 2 == 0 { "train" } else { "test" };
        split.push_str(&format!("x,{i},{role}\ny,{i},{role}\n"));
    }
    let split_path = path(dir, "split.csv");
    std::fs::write(&split_path, split).unwrap();
    (path(dir, "blobs.csv"), split_path)
}

#[test]
fn retrieve_ranks_identical_sources_perfectly_in_both_directions() {
    let dir = TempDir::new().unwrap();
    let (data, split) = retrieval_fixture(&dir, 40);
    for (solver, sub) in [("closed_form", "cf"), ("exact", "ex")] {
        let out_dir = dir.path().join(sub);
        std::fs::create_dir(&out_dir).unwrap();
        let out = run(&[
            "retrieve",
            "--features",
            &data,
            "--features-y",
            &data,
            "--split",
            &split,
            "--k",
            "8",
            "--solver",
            solver,
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_success(&out);
        let report = read_json(out_dir.join("report.json").to_str().unwrap());
        for direction in ["map_x_to_y", "map_y_to_x"] {
            let map = report[direction]["value"].as_f64().unwrap();
            assert!(
                map > 0.99,
                "{solver} {direction} = {map} on an identical-source toy"
            );
        }
        let rankings = read(out_dir.join("rankings_x_to_y.csv").to_str().unwrap());
        assert!(rankings.starts_with("query,rank,item,score"));
        // 20 test queries ranking all 40 candidates.
        assert_eq!(rankings.lines().count(), 1 + 20 * 40);
    }
}

#[test]
fn ablation_flags_run_the_pipeline_variants() {
    let dir = TempDir::new().unwrap();
    let (data, cons) = synth_moons(&dir, 60);
    for (flag, value, sub) in [
        ("--directions", "vp", "d_vp"),
        ("--directions", "vp_hp", "d_vphp"),
        ("--directions", "vp_hp_vp", "d_vphpvp"),
        ("--adjust-mode", "shift_only", "a_shift"),
        ("--adjust-mode", "scale_only", "a_scale"),
    ] {
        let out_dir = dir.path().join(sub);
        std::fs::create_dir(&out_dir).unwrap();
        let out = run(&[
            "cluster",
            "--features",
            &data,
            "--constraints",
            &cons,
            "--sigma",
            "0.1",
            "--k",
            "8",
            "--runs",
            "2",
            flag,
            value,
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_success(&out);
        assert!(out_dir.join("report.json").exists());
    }
    let out = run(&[
        "cluster",
        "--features",
        &data,
        "--constraints",
        &cons,
        "--sigma",
        "0.1",
        "--k",
        "8",
        "--runs",
        "1",
        "--keep-trivial",
        "--out-dir",
        dir.path().join("d_vp").to_str().unwrap(),
    ]);
    assert_success(&out);
}

#[test]
fn missing_out_dir_is_created() {
    let dir = TempDir::new().unwrap();
    let (data, cons) = synth_moons(&dir, 60);
    let nested = dir.path().join("a/b");
    let out = run(&[
        "cluster",
        "--features",
        &data,
        "--constraints",
        &cons,
        "--sigma",
        "0.1",
        "--k",
        "8",
        "--runs",
        "1",
        "--out-dir",
        nested.to_str().unwrap(),
    ]);
    assert_success(&out);
    assert!(nested.join("report.json").exists());
}

#[test]
fn worker_count_does_not_change_results() {
    let d1 = TempDir::new().unwrap();
    let d2 = TempDir::new().unwrap();
    let (data, _) = synth_moons(&d1, 60);
    for (dir, jobs) in [(&d1, "1"), (&d2, "4")] {
        let out = run(&[
            "cluster",
            "--features",
            &data,
            "--sigma",
            "0.1",
            "--k",
            "8",
            "--runs",
            "4",
            "--num-constraints",
            "6",
            "--jobs",
            jobs,
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_success(&out);
    }
    assert_eq!(
        read(&path(&d1, "runs.csv")),
        read(&path(&d2, "runs.csv")),
        "results must not depend on the worker count"
    );
}

#[test]
fn precomputed_kernel_without_labels_skips_ari() {
    let dir = TempDir::new().unwrap();
    // Two 3-point blocks with strong in-block similarity.
    let mut kernel = String::new();
    for i in 0..6 {
        let row: Vec<String> = (0..6)
            .map(|j| {
                let v = if i == j {
                    1.0
                } else if (i < 3) == (j < 3) {
                    0.9
                } else {
                    0.05
                };
                v.to_string()
            })
            .collect();
        kernel.push_str(&row.join(","));
        kernel.push('\n');
    }
    let kpath = path(&dir, "kernel.csv");
    std::fs::write(&kpath, kernel).unwrap();
    let cons = path(&dir, "cons.csv");
    std::fs::write(&cons, "0,2,1\n3,5,1\n2,3,-1\n").unwrap();
    let out = run(&[
        "cluster",
        "--kernel",
        &kpath,
        "--constraints",
        &cons,
        "--k",
        "2",
        "--runs",
        "2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("no labels, ARI skipped"), "stdout: {stdout}");
    let runs_csv = read(&path(&dir, "runs.csv"));
    assert!(runs_csv.lines().nth(1).unwrap().ends_with("nan"));
    let report = read_json(&path(&dir, "report.json"));
    assert!(report["cells"][0].get("ari").is_none(), "no ARI block without labels");
}
