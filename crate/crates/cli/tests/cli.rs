use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use epictrl_core::centrality::{degree_centrality, group_by_centrality};
use epictrl_core::dynamics::{ControlSchedule, QuadraticCost, TimeGrid};
use epictrl_core::network::{generate, giant_component, save_edge_list};
use epictrl_core::sweep::evaluate_controls;
use serde_json::Value;

fn epictrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epictrl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn random_graph(dir: &Path) -> String {
    let net = giant_component(&generate::erdos_renyi(24, 0.2, 3)).0;
    let mut buf = Vec::new();
    save_edge_list(&net, &mut buf).unwrap();
    write(dir, "er.txt", std::str::from_utf8(&buf).unwrap())
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn degree_of_path3() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "path3.txt", "0 1\n1 2\n");
    let out = epictrl(&["centrality", "--measure", "degree", "--graph", &g]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0,1\n1,2\n2,1\n");
}

#[test]
fn pagerank_of_k2_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "k2.txt", "0 1\n");
    let dest = dir.path().join("pr.csv");
    let out = epictrl(&[
        "centrality",
        "--measure",
        "pagerank",
        "--graph",
        &g,
        "--out",
        s(&dest),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(dest).unwrap();
    for line in text.lines() {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 20.0 / 3.0).abs() < 1e-9);
    }
}

#[test]
fn expensive_control_leaves_the_logistic_curve() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "k2.txt", "0 1\n");
    let out = epictrl(&[
        "solve",
        "--graph",
        &g,
        "--groups",
        "1",
        "--beta",
        "1",
        "--b",
        "1e6",
        "--seed-frac",
        "0.1",
        "--steps",
        "1000",
    ]);
    let report = json(&out);
    let e = 1f64.exp();
    let logistic = 0.1 * e / (0.9 + 0.1 * e);
    let reach = report["result"]["report"]["reach"].as_f64().unwrap();
    assert!((reach - logistic).abs() < 1e-5, "{reach} vs {logistic}");
    assert_eq!(report["tool"]["name"], "epictrl");
    assert_eq!(report["config"]["model"]["b"].as_f64(), Some(1e6));
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "k2.txt", "0 1\n");
    let out = epictrl(&["solve", "--graph", &g, "--groups", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--groups"));
    assert!(out.stdout.is_empty());

    let out = epictrl(&["solve", "--graph", &g, "--groups", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = epictrl(&["centrality", "--graph", &g, "--measure", "eigenvector"]);
    assert_eq!(out.status.code(), Some(2));
    let out = epictrl(&[
        "heuristic",
        "--graph",
        &g,
        "--kind",
        "two-stage",
        "--steps",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let bad = write(dir.path(), "bad.txt", "0 1\n1 x\n");
    let out = epictrl(&["centrality", "--graph", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn non_convergence_exits_3_but_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(dir.path());
    let out_dir = dir.path().join("run");
    let out = epictrl(&[
        "solve",
        "--graph",
        &g,
        "--groups",
        "3",
        "--beta",
        "1",
        "--b",
        "1",
        "--maxiter",
        "1",
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["report"]["converged"], false);
}

fn read_controls(path: &Path, grid: TimeGrid, groups: usize) -> ControlSchedule {
    let mut rows = vec![vec![0.0; grid.points()]; groups];
    let mut reader = csv::Reader::from_path(path).unwrap();
    for rec in reader.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        let m: usize = rec[1].parse().unwrap();
        rows[m][(t / grid.dt()).round() as usize] = rec[2].parse().unwrap();
    }
    ControlSchedule::from_rows(grid, rows).unwrap()
}

#[test]
fn reported_reward_is_rederived_from_controls_csv() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(dir.path());
    let out_dir = dir.path().join("run");
    let out = epictrl(&[
        "solve",
        "--graph",
        &g,
        "--groups",
        "4",
        "--beta",
        "0.8",
        "--b",
        "2",
        "--seed-frac",
        "0.05",
        "--steps",
        "80",
        "--out",
        s(&out_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "report.json",
        "controls.csv",
        "trajectory.csv",
        "per_group_resource.csv",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    assert!(!out_dir.join("seed_alloc.csv").exists());
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();

    let text = fs::read_to_string(&g).unwrap();
    let net = epictrl_core::network::parse_edge_list(&text)
        .unwrap()
        .network;
    let grp = group_by_centrality(&degree_centrality(&net), 4, 0).unwrap();
    let cost = QuadraticCost::new(2.0, &grp).unwrap();
    let grid = TimeGrid::new(1.0, 80).unwrap();
    let ctrl = read_controls(&out_dir.join("controls.csv"), grid, 4);
    let seed = vec![0.05; net.node_count()];
    let again = evaluate_controls(&net, &grp, &seed, 0.8, &cost, &ctrl).unwrap();
    let j = report["result"]["report"]["j"].as_f64().unwrap();
    assert!(
        (again.report.j - j).abs() <= 1e-9,
        "{} vs {j}",
        again.report.j
    );

    let resource = fs::read_to_string(out_dir.join("per_group_resource.csv")).unwrap();
    assert_eq!(
        resource.lines().next(),
        Some("group,size,fraction,spend,per_capita_resource")
    );
    assert_eq!(resource.lines().count(), 5);
}

fn files_in(dir: &Path) -> Vec<(PathBuf, String)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let text = fs::read_to_string(&p).unwrap();
            (PathBuf::from(p.file_name().unwrap()), text)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(dir.path());
    let common = [
        "--graph", &g, "--groups", "3", "--beta", "0.6", "--b", "3", "--steps", "40",
    ];
    for sub in [
        &["solve"][..],
        &["solve-joint", "--outer", "5"],
        &["heuristic", "--kind", "static"],
    ] {
        let a = dir.path().join(format!("{}-a", sub[0]));
        let b = dir.path().join(format!("{}-b", sub[0]));
        for d in [&a, &b] {
            let mut args: Vec<&str> = sub.to_vec();
            args.extend_from_slice(&common);
            args.extend_from_slice(&["--out", s(d)]);
            let out = epictrl(&args);
            assert!(
                out.status.success(),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        assert_eq!(files_in(&a), files_in(&b), "{}", sub[0]);
    }
    let mc = [
        "mc-validate",
        "--graph",
        &g,
        "--groups",
        "2",
        "--level",
        "0.5",
        "--runs",
        "500",
        "--rng-seed",
        "4",
    ];
    assert_eq!(epictrl(&mc).stdout, epictrl(&mc).stdout);
}

#[test]
fn config_file_fills_in_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "k2.txt", "0 1\n");
    let cfg = write(
        dir.path(),
        "run.cfg",
        &format!("graph = {g}\nbeta = 1\nb = 1e6\nseed_frac = 0.3\nsteps = 100\n"),
    );
    let out = epictrl(&["solve", "--config", &cfg, "--seed-frac", "0.1"]);
    let report = json(&out);
    assert_eq!(report["config"]["model"]["seed_frac"].as_f64(), Some(0.1));
    assert_eq!(report["config"]["model"]["beta"].as_f64(), Some(1.0));
    assert_eq!(report["config"]["model"]["steps"].as_u64(), Some(100));
}

#[test]
fn joint_writes_the_seed_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(dir.path());
    let report_path = dir.path().join("joint").join("joint.json");
    fs::create_dir_all(report_path.parent().unwrap()).unwrap();
    let out = epictrl(&[
        "solve-joint",
        "--graph",
        &g,
        "--groups",
        "3",
        "--beta",
        "0.8",
        "--b",
        "5",
        "--seed-budget",
        "0.05",
        "--steps",
        "40",
        "--out",
        s(&report_path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(!report["result"]["history"].as_array().unwrap().is_empty());
    let alloc = fs::read_to_string(report_path.parent().unwrap().join("seed_alloc.csv")).unwrap();
    assert_eq!(alloc.lines().next(), Some("group,seed_fraction,mass_share"));
    let shares: f64 = alloc
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((shares - 1.0).abs() < 1e-9);
}

#[test]
fn budget_run_spends_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(dir.path());
    let out = epictrl(&[
        "solve-budget",
        "--graph",
        &g,
        "--groups",
        "2",
        "--beta",
        "0.5",
        "--b",
        "5",
        "--budget",
        "0.5",
        "--steps",
        "60",
    ]);
    let report = json(&out);
    let spend = report["result"]["report"]["spend"].as_f64().unwrap();
    assert!((spend - 0.5).abs() <= 5e-4, "{spend}");
    assert!(report["result"]["multiplier"].as_f64().unwrap() > 0.0);
}

#[test]
fn mc_validate_reads_solver_controls() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(dir.path());
    let run = dir.path().join("run");
    let base = [
        "--graph", &g, "--groups", "2", "--beta", "0.5", "--b", "2", "--steps", "50",
    ];
    let mut solve = vec!["solve"];
    solve.extend_from_slice(&base);
    solve.extend_from_slice(&["--out", s(&run)]);
    assert!(epictrl(&solve).status.success());
    let solved: Value =
        serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();

    let controls = run.join("controls.csv");
    let mut mc = vec![
        "mc-validate",
        "--controls",
        s(&controls),
        "--runs",
        "2000",
        "--bins",
        "10",
    ];
    mc.extend_from_slice(&base);
    let report = json(&epictrl(&mc));
    assert_eq!(report["result"]["controls"], "file");
    let ode = report["result"]["ode_reach"].as_f64().unwrap();
    let reach = solved["result"]["report"]["reach"].as_f64().unwrap();
    assert!((ode - reach).abs() <= 1e-12);
    let hist = report["result"]["monte_carlo"]["reach_histogram"]
        .as_array()
        .unwrap();
    assert_eq!(hist.iter().map(|h| h.as_u64().unwrap()).sum::<u64>(), 2000);

    let mut wrong = vec![
        "mc-validate",
        "--controls",
        s(&controls),
        "--graph",
        &g,
        "--groups",
        "2",
        "--steps",
        "49",
    ];
    wrong.push("--runs");
    wrong.push("10");
    assert_eq!(epictrl(&wrong).status.code(), Some(2));
}

#[test]
fn everyone_seeded_simulates_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(dir.path());
    let report = json(&epictrl(&[
        "mc-validate",
        "--graph",
        &g,
        "--seed-frac",
        "1",
        "--level",
        "0",
        "--runs",
        "50",
    ]));
    assert_eq!(
        report["result"]["monte_carlo"]["mean_reach"].as_f64(),
        Some(1.0)
    );
}

fn sweep_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn unaffordable_control_gives_no_improvement() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(dir.path());
    let out = epictrl(&[
        "sweep",
        "--graph",
        &g,
        "--groups",
        "3",
        "--beta",
        "0.5",
        "--steps",
        "40",
        "--axis",
        "b",
        "--values",
        "1e6",
        "--strategies",
        "optimal,static,two-stage",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("axis_value,strategy,J,reach,spend,pct_improvement_vs_static,status")
    );
    let rows = sweep_rows(&text);
    assert_eq!(rows.len(), 3);
    for r in rows {
        let pct: f64 = r[5].parse().unwrap();
        // percent, so 1e-2 is a relative change of 1e-4
        assert!(pct.abs() < 1e-2, "{r:?}");
    }
}

#[test]
fn zero_budget_ties_every_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(dir.path());
    let out_dir = dir.path().join("sweep");
    let out = epictrl(&[
        "sweep",
        "--graph",
        &g,
        "--groups",
        "2",
        "--beta",
        "0.5",
        "--steps",
        "40",
        "--axis",
        "B",
        "--values",
        "0",
        "--out",
        s(&out_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = sweep_rows(&fs::read_to_string(out_dir.join("sweep.csv")).unwrap());
    let reach: Vec<f64> = rows
        .iter()
        .filter(|r| r[6] == "ok")
        .map(|r| r[3].parse().unwrap())
        .collect();
    assert_eq!(reach.len(), 3);
    assert!(reach.iter().all(|r| (r - reach[0]).abs() < 1e-12));
    assert!(rows
        .iter()
        .any(|r| r[1] == "joint" && r[6].starts_with("skipped")));
}

#[test]
fn reach_grows_with_contagion() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(dir.path());
    let out = epictrl(&[
        "sweep",
        "--graph",
        &g,
        "--groups",
        "2",
        "--steps",
        "40",
        "--axis",
        "beta",
        "--values",
        "0.2,0.9",
        "--strategies",
        "optimal",
    ]);
    assert!(out.status.success());
    let rows = sweep_rows(&String::from_utf8(out.stdout).unwrap());
    let r0: f64 = rows[0][3].parse().unwrap();
    let r1: f64 = rows[1][3].parse().unwrap();
    assert!(r1 >= r0, "{r0} {r1}");
}

#[test]
fn version_names_the_report_schema() {
    let out = epictrl(&["--version"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("epictrl 0.1.0"));
    assert!(text.contains("schema"));
}
