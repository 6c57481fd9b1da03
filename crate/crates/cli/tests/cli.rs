use std::path::Path;
use std::process::{Command, Output};

fn sisb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sisb"))
        .args(args)
        .output()
        .expect("run sisb")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Parse with key order kept and emit again in the same style.
fn reemit(json: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}

#[test]
fn gen_star_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("star.txt");
    let o = sisb(&["gen", "star", "--n", "5", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "5 4\n0 1\n0 2\n0 3\n0 4\n");
}

#[test]
fn gen_er_is_deterministic() {
    let a = sisb(&["gen", "er", "--n", "100", "--p", "0.05", "--seed", "7"]);
    let b = sisb(&["gen", "er", "--n", "100", "--p", "0.05", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = sisb(&["gen", "er", "--n", "100", "--p", "0.05", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn gen_ws_without_rewiring_is_cycle() {
    let ws = sisb(&["gen", "ws", "--n", "10", "--k", "2", "--rewire", "0"]);
    let cyc = sisb(&["gen", "cycle", "--n", "10"]);
    assert!(ws.status.success());
    assert_eq!(ws.stdout, cyc.stdout);
}

#[test]
fn gen_requires_generator_flags() {
    let o = sisb(&["gen", "er", "--n", "10"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--p"));
}

#[test]
fn edge_list_file_as_graph_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    std::fs::write(&path, "3 2\n0 1\n1 2\n").unwrap();
    let spec = format!("file:{}", path.display());
    let a = sisb(&["analyze", "--graph", &spec, "--beta", "0.1", "--delta", "0.4"]);
    let b = sisb(&["analyze", "--graph", "path3", "--beta", "0.1", "--delta", "0.4"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let strip = |s: String| s.lines().nth(1).unwrap().split_once(',').unwrap().1.to_string();
    assert_eq!(strip(stdout(&a)), strip(stdout(&b)));
}

#[test]
fn analyze_zero_beta_radii() {
    let o = sisb(&["analyze", "--graph", "cycle:7", "--beta", "0", "--delta", "0.3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    // rho_m, rho_mp, rho_mpp
    assert_eq!(row[7], "0.7");
    assert_eq!(row[8], "0.7");
    assert_eq!(row[10], "0.7");
}

#[test]
fn analyze_json_round_trips() {
    let o = sisb(&[
        "analyze", "--graph", "star6", "--beta", "0.25", "--delta", "0.55", "--eps", "0.01", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(reemit(&out), out);
    assert!(out.contains("\"route\": \"pairwise\""));
}

#[test]
fn every_json_output_round_trips() {
    let cases: [&[&str]; 4] = [
        &["exact", "--graph", "path3", "--beta", "0.2", "--delta", "0.3", "--format", "json"],
        &["mc", "--graph", "star6", "--beta", "0.1", "--delta", "0.4", "--trajectories", "50", "--t-max", "20", "--format", "json"],
        &["verify", "--graph", "star5", "--beta", "0.2", "--delta", "0.3", "--T", "10", "--format", "json"],
        &["scan", "--graph", "cycle6", "--delta", "0.5", "--betas", "0.1,0.3", "--format", "json"],
    ];
    for args in cases {
        let o = sisb(args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        let out = stdout(&o);
        assert_eq!(reemit(&out), out, "{args:?}");
    }
}

#[test]
fn exact_certain_recovery() {
    let o = sisb(&["exact", "--graph", "star6", "--beta", "0", "--delta", "1", "--eps", "0.01"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("t_mix(0.01) = 1"), "{}", stderr(&o));
    assert_eq!(stdout(&o), "t,tv,expected_infected\n0,1,6\n1,0,0\n");
}

#[test]
fn exact_respects_state_cap() {
    let o = sisb(&["exact", "--graph", "path:15", "--beta", "0.1", "--delta", "0.5"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("exceeds"));
}

#[test]
fn exact_distribution_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dist.csv");
    let o = sisb(&[
        "exact", "--graph", "path2", "--beta", "0.5", "--delta", "0.5", "--t-max", "1", "--dist-out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(Path::new(&path)).unwrap();
    assert_eq!(text.lines().next(), Some("state_bitmask,probability"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn verify_passes_on_path3() {
    let o = sisb(&["verify", "--graph", "path3", "--beta", "0.3", "--delta", "0.4", "--T", "30"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for line in stdout(&o).lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v <= 1e-10, "{line}");
    }
}

#[test]
fn verify_reports_breach_with_nonzero_exit() {
    // a negative tolerance turns any clause into a breach
    let o = sisb(&["verify", "--graph", "path3", "--beta", "0.3", "--delta", "0.4", "--tol=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bound violated"));
}

#[test]
fn mc_is_deterministic_and_seeded() {
    let args = ["mc", "--graph", "star:20", "--beta", "0.1", "--delta", "0.3", "--trajectories", "100", "--t-max", "30"];
    let a = sisb(&args);
    let b = sisb(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut other = args.to_vec();
    other.extend(["--seed", "99"]);
    assert_ne!(sisb(&other).stdout, a.stdout);
}

#[test]
fn mc_zero_horizon() {
    let o = sisb(&["mc", "--graph", "path4", "--beta", "0.5", "--delta", "0.5", "--t-max", "0", "--init", "nodes:0,2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "t,mean_infected_fraction,stderr,n_alive_trajectories\n0,0.5,0,200\n");
}

#[test]
fn scan_reports_marginal_crossing() {
    let o = sisb(&["scan", "--graph", "cycle8", "--delta", "0.5", "--betas", "0.2,0.3"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("rho(M) crosses 1 in [0.2, 0.3]"), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn scan_rejects_unsorted_grid() {
    let o = sisb(&["scan", "--graph", "cycle8", "--delta", "0.5", "--betas", "0.3,0.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_for_every_command_and_unknown_flags_fail() {
    for cmd in ["gen", "analyze", "exact", "mc", "verify", "scan"] {
        let o = sisb(&[cmd, "--help"]);
        assert!(o.status.success(), "{cmd}");
        assert!(stdout(&o).contains("Usage"));
    }
    let o = sisb(&["analyze", "--graph", "star6", "--beta", "0.1", "--delta", "0.2", "--frobnicate"]);
    assert!(!o.status.success());
    let o = sisb(&["analyze", "--graph", "star6", "--beta", "1.5", "--delta", "0.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn matrix_export_triplets() {
    let o = sisb(&["matrix", "--graph", "path:2", "--beta", "0.2", "--delta", "0.3", "--kind", "m"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "2 4\n0 0 7e-1\n0 1 2e-1\n1 0 2e-1\n1 1 7e-1\n");
    let o = sisb(&["matrix", "--graph", "path:2", "--beta", "0.2", "--delta", "0.3", "--kind", "mpp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("4 "));
}
